"""Model persistence: a versioned JSON envelope for all four model kinds.

Floats are written with ``repr`` (shortest round-trip decimal), so a
save/load cycle reproduces predictions bit for bit. The envelope carries
a format version, the model kind, and creation metadata (toolkit version,
config echo, optional hash of the training manifest).
"""

from __future__ import annotations

import json

import numpy as np

from . import __version__
from .errors import ModelFormatError
from .ebm import EbmModel, PairTerm
from .gbdt import GbdtModel, Tree
from .linear import LinearModel
from .pltr import PairSplitSpec, PltrModel, StumpSpec

FORMAT_VERSION = 1
MODEL_KINDS = ("lr", "gbdt", "ebm", "pltr")


def _floats(arr) -> list[float]:
    return [float(v) for v in np.asarray(arr, dtype=float).ravel()]


def _lr_payload(model: LinearModel) -> dict:
    return {
        "intercept": model.intercept,
        "coef": _floats(model.coef),
        "feature_names": list(model.feature_names),
        "means": None if model.means is None else _floats(model.means),
        "stds": None if model.stds is None else _floats(model.stds),
        "diagnostics": dict(model.diagnostics),
    }


def _lr_restore(body: dict) -> LinearModel:
    return LinearModel(
        intercept=body["intercept"],
        coef=np.array(body["coef"], dtype=float),
        feature_names=list(body["feature_names"]),
        means=None if body["means"] is None else np.array(body["means"], dtype=float),
        stds=None if body["stds"] is None else np.array(body["stds"], dtype=float),
        diagnostics=dict(body.get("diagnostics", {})),
    )


def _gbdt_payload(model: GbdtModel) -> dict:
    trees = []
    for t in model.trees:
        trees.append(
            {
                "feature": [int(v) for v in t.feature],
                "threshold": _floats(t.threshold),
                "left": [int(v) for v in t.left],
                "right": [int(v) for v in t.right],
                "value": _floats(t.value),
                "cover": _floats(t.cover),
                "gain": _floats(t.gain),
            }
        )
    return {
        "base_score": model.base_score,
        "eta": model.eta,
        "reg_lambda": model.reg_lambda,
        "reg_gamma": model.reg_gamma,
        "max_depth": model.max_depth,
        "feature_names": list(model.feature_names),
        "trees": trees,
        "config": dict(model.config),
    }


def _gbdt_restore(body: dict) -> GbdtModel:
    trees = []
    for tb in body["trees"]:
        t = Tree()
        t.feature = [int(v) for v in tb["feature"]]
        t.threshold = [float(v) for v in tb["threshold"]]
        t.left = [int(v) for v in tb["left"]]
        t.right = [int(v) for v in tb["right"]]
        t.value = [float(v) for v in tb["value"]]
        t.cover = [float(v) for v in tb["cover"]]
        t.gain = [float(v) for v in tb["gain"]]
        trees.append(t)
    return GbdtModel(
        trees=trees,
        base_score=body["base_score"],
        eta=body["eta"],
        reg_lambda=body["reg_lambda"],
        reg_gamma=body["reg_gamma"],
        max_depth=body["max_depth"],
        feature_names=list(body["feature_names"]),
        config=dict(body.get("config", {})),
    )


def _ebm_payload(model: EbmModel) -> dict:
    return {
        "intercept": model.intercept,
        "feature_names": list(model.feature_names),
        "bin_cuts": [_floats(c) for c in model.bin_cuts],
        "shapes": [_floats(s) for s in model.shapes],
        "bin_counts": [[int(v) for v in c] for c in model.bin_counts],
        "pairs": [
            {"pair": [int(t.pair[0]), int(t.pair[1])],
             "shape": [int(t.grid.shape[0]), int(t.grid.shape[1])],
             "grid": _floats(t.grid)}
            for t in model.pairs
        ],
        "config": dict(model.config),
    }


def _ebm_restore(body: dict) -> EbmModel:
    pairs = [
        PairTerm(
            pair=(int(p["pair"][0]), int(p["pair"][1])),
            grid=np.array(p["grid"], dtype=float).reshape(p["shape"]),
        )
        for p in body["pairs"]
    ]
    return EbmModel(
        intercept=body["intercept"],
        bin_cuts=[np.array(c, dtype=float) for c in body["bin_cuts"]],
        shapes=[np.array(s, dtype=float) for s in body["shapes"]],
        bin_counts=[np.array(c, dtype=int) for c in body["bin_counts"]],
        pairs=pairs,
        feature_names=list(body["feature_names"]),
        config=dict(body.get("config", {})),
    )


def _pltr_payload(model: PltrModel) -> dict:
    return {
        "feature_names": list(model.feature_names),
        "include_original": model.include_original,
        "stumps": [
            {"feature": s.feature, "threshold": s.threshold, "gain": s.gain}
            for s in model.stumps
        ],
        "pair_splits": [
            {
                "root_feature": p.root_feature,
                "root_threshold": p.root_threshold,
                "second_feature": p.second_feature,
                "second_threshold": p.second_threshold,
            }
            for p in model.pair_splits
        ],
        "linear": _lr_payload(model.linear),
        "skipped": list(model.skipped),
    }


def _pltr_restore(body: dict) -> PltrModel:
    return PltrModel(
        stumps=[StumpSpec(**s) for s in body["stumps"]],
        pair_splits=[PairSplitSpec(**p) for p in body["pair_splits"]],
        linear=_lr_restore(body["linear"]),
        feature_names=list(body["feature_names"]),
        include_original=body.get("include_original", True),
        skipped=list(body.get("skipped", [])),
    )


_PAYLOAD = {
    LinearModel: ("lr", _lr_payload),
    GbdtModel: ("gbdt", _gbdt_payload),
    EbmModel: ("ebm", _ebm_payload),
    PltrModel: ("pltr", _pltr_payload),
}
_RESTORE = {"lr": _lr_restore, "gbdt": _gbdt_restore, "ebm": _ebm_restore, "pltr": _pltr_restore}


def model_kind(model) -> str:
    for cls, (kind, _) in _PAYLOAD.items():
        if isinstance(model, cls):
            return kind
    raise ModelFormatError(f"unsupported model type {type(model).__name__}")


def envelope(model, train_manifest_hash: str | None = None) -> dict:
    kind, payload = _PAYLOAD[type(model)]
    return {
        "format_version": FORMAT_VERSION,
        "model_kind": kind,
        "created_by": f"glassbox-credit {__version__}",
        "train_manifest_hash": train_manifest_hash,
        "payload": payload(model),
    }


def dumps(model, train_manifest_hash: str | None = None) -> str:
    """Serialize a model to its JSON envelope string.

    ``json.dump`` uses ``repr`` for floats, which is the shortest decimal
    that round-trips, so no precision is lost.
    """
    model_kind(model)  # raises on unsupported type
    return json.dumps(envelope(model, train_manifest_hash), indent=2) + "\n"


def save_model(model, path, train_manifest_hash: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model, train_manifest_hash))


def from_envelope(env: dict):
    if not isinstance(env, dict):
        raise ModelFormatError("envelope must be a JSON object")
    version = env.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version!r}")
    kind = env.get("model_kind")
    if kind not in MODEL_KINDS:
        raise ModelFormatError(f"unknown model_kind {kind!r}")
    payload = env.get("payload")
    if not isinstance(payload, dict):
        raise ModelFormatError("missing payload")
    try:
        return _RESTORE[kind](payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed {kind} payload: {exc}") from exc


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            env = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from exc
    return from_envelope(env)
