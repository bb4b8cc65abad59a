"""Reproducibility: the pipeline is seed-free and content-addressed.

No training step in the toolkit draws random numbers (holdouts are
deterministic strides, ties break by fixed rules), so an experiment run
twice produces byte-identical artifacts. The output manifest hashes every
file; comparing two manifests is a one-line reproducibility audit.
"""

import json
import shutil
import tempfile
from pathlib import Path

from glassbox_credit.pipeline import run_full

config = {
    "dataset": {"preset": "additive", "n_train": 3000, "n_test": 1500},
    "base_kind": "gbdt",
    "rank_method": "shap",
    "k": 10,
    "reduced_kinds": ["ebm"],
    "model_configs": {"gbdt": {"rounds": 20}, "ebm": {"rounds": 150}},
}

root = Path(tempfile.mkdtemp())
manifests = []
for name in ("first", "second"):
    out = root / name
    run_full(config, out)
    manifests.append((out / "manifest.json").read_bytes())
    print(f"{name} run -> {sorted(p.name for p in out.iterdir())}")

print("\nmanifests byte-identical:", manifests[0] == manifests[1])
print(json.dumps(json.loads(manifests[0])["artifacts"], indent=2))
shutil.rmtree(root)
