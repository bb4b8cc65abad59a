"""How many features are enough?

Sweep the reduced-model feature count along the importance ranking and
watch test AUPRC saturate. The sweep reports the plateau point: the
smallest k beyond which adding the next batch of features buys less than
epsilon. With 10 informative features out of 50, it lands near 10.
"""

from glassbox_credit import synth
from glassbox_credit.pipeline import step1_train_base, step2_rank, sweep_k

train, test, truth = synth.generate("additive", n_train=8000, n_test=4000)
gbdt, _ = step1_train_base(train, test, "gbdt", {"rounds": 40})
ranked = step2_rank(gbdt, train, "shap")

ks = [2, 4, 6, 8, 10, 12, 16, 20]
report = sweep_k(train, test, ranked, ks, kinds=["ebm"])

print(" k   test AUPRC   test AUROC")
for row in report.rows:
    print(f"{row['k']:3d}   {row['test']['auprc']:.4f}      "
          f"{row['test']['auroc']:.4f}")
print(f"\nplateau (gain < {report.config['epsilon']}): "
      f"k = {report.meta['plateau']['ebm']}")
print(f"generator used {len(truth.informative)} informative features")
