"""Shapley attributions for the boosted-tree model.

Two routes to the same quantity, deliberately kept independent:

* ``shapley_exact`` enumerates every feature subset and evaluates the
  cover-weighted conditional expectation per subset (tabulated per leaf so
  all 2^d subsets are handled in a few vectorized passes).
* ``tree_shap`` walks each tree once per instance, maintaining the path of
  split features with their one/zero fractions and permutation weights.

Both operate in margin (log-odds) space, where attributions are additive
across trees. ``global_importance`` averages |phi| over a sample to produce
the feature ranking used for model reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError
from .gbdt import _LEAF, GbdtModel, Tree
from .ranking import RankedFeatures, rank_from_scores

EXACT_MAX_FEATURES = 15


@dataclass
class Attribution:
    base_value: float
    values: np.ndarray
    target: str = "margin"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.isfinite(self.values).all() or not math.isfinite(self.base_value):
            raise DataError("non-finite attribution")

    def total(self) -> float:
        return float(self.base_value + self.values.sum())


def conditional_expectation(model: GbdtModel, x, subset) -> float:
    """Path-dependent restricted prediction f_S(x): follow x's branch at
    nodes splitting on a feature in S, otherwise average both children by
    their training cover."""
    x = np.asarray(x, dtype=float)
    S = frozenset(subset)
    for j in S:
        if not 0 <= j < model.d:
            raise DataError(f"subset index {j} out of range")

    def rec(tree: Tree, node: int) -> float:
        f = tree.feature[node]
        if f == _LEAF:
            return tree.value[node]
        l, r = tree.left[node], tree.right[node]
        if f in S:
            return rec(tree, l if x[f] < tree.threshold[node] else r)
        cl, cr = tree.cover[l], tree.cover[r]
        return (cl * rec(tree, l) + cr * rec(tree, r)) / (cl + cr)

    return model.base_score + model.eta * sum(rec(t, 0) for t in model.trees)


def _leaf_paths(tree: Tree):
    """(leaf value, [(feature, indicator-needed?, cover ratio), ...]) per
    leaf. The indicator is filled in per instance later."""
    paths = []

    def rec(node, acc):
        f = tree.feature[node]
        if f == _LEAF:
            paths.append((tree.value[node], list(acc)))
            return
        l, r = tree.left[node], tree.right[node]
        total = tree.cover[l] + tree.cover[r]
        acc.append((f, tree.threshold[node], True, tree.cover[l] / total))
        rec(l, acc)
        acc.pop()
        acc.append((f, tree.threshold[node], False, tree.cover[r] / total))
        rec(r, acc)
        acc.pop()

    rec(0, [])
    return paths


def _subset_values(model: GbdtModel, x) -> np.ndarray:
    """f_S(x) tabulated for every bitmask S over the model's features."""
    d = model.d
    n_masks = 1 << d
    masks = np.arange(n_masks, dtype=np.int64)
    total = np.zeros(n_masks)
    for tree in model.trees:
        for value, path in _leaf_paths(tree):
            factor = np.ones(n_masks)
            for f, thr, left_branch, ratio in path:
                follows = (x[f] < thr) == left_branch
                in_s = (masks >> f) & 1 == 1
                factor *= np.where(in_s, 1.0 if follows else 0.0, ratio)
            total += value * factor
    return model.base_score + model.eta * total


def shapley_exact(model: GbdtModel, x) -> Attribution:
    """Brute-force Shapley values over all 2^d feature subsets."""
    d = model.d
    if d > EXACT_MAX_FEATURES:
        raise DataError(f"exact enumeration limited to d <= {EXACT_MAX_FEATURES}")
    x = np.asarray(x, dtype=float)
    fvals = _subset_values(model, x)
    masks = np.arange(1 << d, dtype=np.int64)
    sizes = np.zeros(1 << d, dtype=np.int64)
    for f in range(d):
        sizes += (masks >> f) & 1
    fact = [math.factorial(k) for k in range(d + 1)]
    weight_by_size = np.array(
        [fact[s] * fact[d - s - 1] / fact[d] for s in range(d)] + [0.0]
    )
    phi = np.zeros(d)
    for j in range(d):
        without = masks[(masks >> j) & 1 == 0]
        w = weight_by_size[sizes[without]]
        phi[j] = float(np.sum(w * (fvals[without | (1 << j)] - fvals[without])))
    return Attribution(base_value=float(fvals[0]), values=phi)


# --- path-dependent polynomial algorithm -----------------------------------
# The path is a list of entries [feature, zero_fraction, one_fraction,
# permutation_weight]; extend/unwind maintain the weights exactly as the
# subset permutations require.


def _extend(path, pz, po, pi):
    l = len(path)
    out = [e[:] for e in path]
    out.append([pi, pz, po, 1.0 if l == 0 else 0.0])
    for i in range(l - 1, -1, -1):
        out[i + 1][3] += po * out[i][3] * (i + 1) / (l + 1)
        out[i][3] = pz * out[i][3] * (l - i) / (l + 1)
    return out


def _unwind(path, i):
    l = len(path) - 1
    zi, oi = path[i][1], path[i][2]
    out = [e[:] for e in path]
    n = out[l][3]
    if oi != 0.0:
        for j in range(l - 1, -1, -1):
            t = out[j][3]
            out[j][3] = n * (l + 1) / ((j + 1) * oi)
            n = t - out[j][3] * zi * (l - j) / (l + 1)
    else:
        for j in range(l - 1, -1, -1):
            out[j][3] = out[j][3] * (l + 1) / (zi * (l - j))
    for j in range(i, l):
        out[j][0], out[j][1], out[j][2] = out[j + 1][0], out[j + 1][1], out[j + 1][2]
    out.pop()
    return out


def _unwound_sum(path, i):
    l = len(path) - 1
    zi, oi = path[i][1], path[i][2]
    total = 0.0
    if oi != 0.0:
        n = path[l][3]
        for j in range(l - 1, -1, -1):
            t = n * (l + 1) / ((j + 1) * oi)
            total += t
            n = path[j][3] - t * zi * (l - j) / (l + 1)
    else:
        for j in range(l - 1, -1, -1):
            total += path[j][3] * (l + 1) / (zi * (l - j))
    return total


def _tree_shap_recurse(tree, x, phi, node, path, pz, po, pi):
    path = _extend(path, pz, po, pi)
    f = tree.feature[node]
    if f == _LEAF:
        v = tree.value[node]
        for i in range(1, len(path)):
            w = _unwound_sum(path, i)
            phi[path[i][0]] += w * (path[i][2] - path[i][1]) * v
        return
    l, r = tree.left[node], tree.right[node]
    hot, cold = (l, r) if x[f] < tree.threshold[node] else (r, l)
    iz = io = 1.0
    k = None
    for i in range(1, len(path)):
        if path[i][0] == f:
            k = i
            break
    if k is not None:
        iz, io = path[k][1], path[k][2]
        path = _unwind(path, k)
    denom = tree.cover[l] + tree.cover[r]
    _tree_shap_recurse(tree, x, phi, hot, path, iz * tree.cover[hot] / denom, io, f)
    _tree_shap_recurse(tree, x, phi, cold, path, iz * tree.cover[cold] / denom, 0.0, f)


def tree_shap(model: GbdtModel, x) -> Attribution:
    """Shapley values of the cover-weighted conditional expectation, one pass
    over each tree's decision paths per instance."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d,):
        raise DataError(f"expected feature vector of length {model.d}")
    phi = np.zeros(model.d)
    base = model.base_score
    for tree in model.trees:
        _tree_shap_recurse(tree, x, phi, 0, [], 1.0, 1.0, -1)
        base += model.eta * tree.mean_value()
    # phi collected in leaf-value units; shrinkage applies once per model
    return Attribution(base_value=float(base), values=model.eta * phi)


def global_importance(
    model: GbdtModel, sample: Dataset, max_rows: int = 50_000
) -> RankedFeatures:
    """Mean |phi_j| over the sample rows, ranked descending. Samples larger
    than ``max_rows`` are thinned by a deterministic stride."""
    if sample.n == 0:
        raise DataError("empty attribution sample")
    X = sample.X
    if sample.n > max_rows:
        stride = -(-sample.n // max_rows)  # ceil
        X = X[::stride]
    acc = np.zeros(model.d)
    for row in X:
        acc += np.abs(tree_shap(model, row).values)
    acc /= X.shape[0]
    return rank_from_scores(
        model.feature_names,
        acc,
        method="shap",
        meta={"sample_rows": int(X.shape[0])},
    )


def attributions_csv(model: GbdtModel, data: Dataset, path):
    """Per-instance attribution export: row id, base value, then one phi per
    feature."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,base_value," + ",".join(model.feature_names) + "\n")
        for i in range(data.n):
            att = tree_shap(model, data.X[i])
            fh.write(
                f"{i},{att.base_value!r},"
                + ",".join(repr(float(v)) for v in att.values)
                + "\n"
            )
