"""Per-decision explanations from the tree ensemble.

Tree SHAP decomposes one applicant's margin into a base value plus one
additive contribution per feature. The decomposition is exact: the parts
always sum back to the model's raw output. On small feature counts we can
verify it against brute-force Shapley values over all feature subsets.
"""

import numpy as np

from glassbox_credit import synth
from glassbox_credit.attribution import shapley_exact, tree_shap
from glassbox_credit.gbdt import GbdtConfig, fit_gbdt

train, test, _ = synth.generate("additive", n_train=4000, n_test=1000)

# keep 8 features so exact enumeration (2^8 subsets) stays cheap
small_train = train.select_features(train.feature_names[:8])
small_test = test.select_features(train.feature_names[:8])
model = fit_gbdt(small_train, GbdtConfig(rounds=25))

row = 3
x = small_test.X[row]
att = tree_shap(model, x)
margin = float(model.predict_margin(x[None, :])[0])

print(f"applicant row {row}")
print(f"  base value (average margin): {att.base_value:+.4f}")
for name, phi in sorted(
    zip(model.feature_names, att.values), key=lambda t: -abs(t[1])
):
    print(f"  {name}: {phi:+.4f}")
print(f"  reconstructed margin: {att.base_value + att.values.sum():+.4f}")
print(f"  model margin:         {margin:+.4f}")

exact = shapley_exact(model, x)
gap = np.abs(att.values - exact.values).max()
print(f"\nmax |fast - exact| over features: {gap:.2e}")
