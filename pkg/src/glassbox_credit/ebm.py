"""Glass-box additive model trained by cyclic gradient boosting.

Each feature gets a binned shape function (piecewise-constant, at most 256
bins from train quantiles). Training cycles the features in index order; per
visit a tiny tree (default 3 leaves) is fitted to the current second-order
residuals of the weighted logistic loss on that feature's bin index, and its
leaf values are folded into the shape function with a small learning rate.
Optional pairwise terms are boosted the same way on a 2-D bin grid after the
main effects are frozen.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import DataError
from .linear import sigmoid
from .metrics import log_loss
from .ranking import RankedFeatures, rank_from_scores

MAX_CUTS = 255
_H_EPS = 1e-12


@dataclass
class EbmConfig:
    rounds: int = 5000
    learning_rate: float = 0.01
    max_leaves: int = 3
    n_pairs: int = 0
    pair_rounds: int = 1000
    tol: float = 1e-8
    # deterministic 1-in-stride row holdout scored every cycle; boosting
    # stops (and the best shapes are restored) when the holdout loss has not
    # improved for `patience` cycles. The unbagged model overfits its
    # per-bin shapes without this.
    early_stopping: bool = True
    validation_stride: int = 8
    patience: int = 25
    min_samples_leaf: int = 4

    def as_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "learning_rate": self.learning_rate,
            "max_leaves": self.max_leaves,
            "n_pairs": self.n_pairs,
            "pair_rounds": self.pair_rounds,
            "tol": self.tol,
            "early_stopping": self.early_stopping,
            "validation_stride": self.validation_stride,
            "patience": self.patience,
            "min_samples_leaf": self.min_samples_leaf,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EbmConfig":
        known = {k: v for k, v in obj.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class PairTerm:
    pair: tuple[int, int]  # feature indices, j < q
    grid: np.ndarray  # (bins_j, bins_q) additive scores


@dataclass
class EbmModel:
    intercept: float
    bin_cuts: list[np.ndarray]  # per feature, strictly increasing cut points
    shapes: list[np.ndarray]  # per feature, len(cuts)+1 scores
    bin_counts: list[np.ndarray]  # train occupancy per bin
    pairs: list[PairTerm]
    feature_names: list[str]
    config: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.feature_names)

    def bin_index(self, j: int, values) -> np.ndarray:
        """values < first cut -> bin 0; cuts[i-1] <= v < cuts[i] -> bin i."""
        return np.searchsorted(self.bin_cuts[j], np.asarray(values, float), side="right")

    def _bin_matrix(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise DataError(f"expected {self.d} features, got {X.shape[1]}")
        return np.column_stack([self.bin_index(j, X[:, j]) for j in range(self.d)])

    def predict_margin(self, X) -> np.ndarray:
        B = self._bin_matrix(X)
        margin = np.full(B.shape[0], self.intercept)
        for j in range(self.d):
            margin += self.shapes[j][B[:, j]]
        for term in self.pairs:
            j, q = term.pair
            margin += term.grid[B[:, j], B[:, q]]
        return margin

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.predict_margin(X))

    def term_contributions(self, x) -> list[tuple[str, float]]:
        """Every addend of the margin separately; they sum to it exactly."""
        B = self._bin_matrix(x)[0]
        terms = [("intercept", float(self.intercept))]
        for j, name in enumerate(self.feature_names):
            terms.append((name, float(self.shapes[j][B[j]])))
        for term in self.pairs:
            j, q = term.pair
            terms.append(
                (
                    f"{self.feature_names[j]} x {self.feature_names[q]}",
                    float(term.grid[B[j], B[q]]),
                )
            )
        return terms


def build_bins(X: np.ndarray) -> list[np.ndarray]:
    """Cut points per feature: midpoints between consecutive distinct values
    when few enough, otherwise midpoints of quantile-derived values."""
    cuts = []
    for j in range(X.shape[1]):
        uniq = np.unique(X[:, j])
        if uniq.size > MAX_CUTS + 1:
            qs = np.linspace(0.0, 1.0, MAX_CUTS + 2)[1:-1]
            uniq = np.unique(np.quantile(X[:, j], qs))
        cuts.append(0.5 * (uniq[1:] + uniq[:-1]) if uniq.size > 1 else np.empty(0))
    return cuts


def _best_segments_1d(Gb, Hb, max_leaves, counts, min_leaf=1):
    """Greedy segmentation of the bin axis maximizing second-order gain.

    Returns a list of (lo, hi) half-open bin ranges covering the axis.
    Splits leaving fewer than ``min_leaf`` samples on a side are skipped.
    """
    segments = [(0, len(Gb))]
    Gc = np.concatenate([[0.0], np.cumsum(Gb)])
    Hc = np.concatenate([[0.0], np.cumsum(Hb)])
    Cc = np.concatenate([[0], np.cumsum(counts)])
    min_leaf = max(min_leaf, 1)

    def seg_score(lo, hi):
        G, H = Gc[hi] - Gc[lo], Hc[hi] - Hc[lo]
        return G * G / (H + _H_EPS)

    def best_split(lo, hi):
        best = None
        base = seg_score(lo, hi)
        for s in range(lo + 1, hi):
            if Cc[s] - Cc[lo] < min_leaf or Cc[hi] - Cc[s] < min_leaf:
                continue
            gain = seg_score(lo, s) + seg_score(s, hi) - base
            if best is None or gain > best[0] + 1e-15:
                best = (gain, s)
        return best

    while len(segments) < max_leaves:
        candidates = []
        for i, (lo, hi) in enumerate(segments):
            found = best_split(lo, hi)
            if found is not None and found[0] > 0.0:
                candidates.append((found[0], i, found[1]))
        if not candidates:
            break
        _, i, s = max(candidates, key=lambda c: (c[0], -c[1]))
        lo, hi = segments[i]
        segments[i : i + 1] = [(lo, s), (s, hi)]
    return segments


def _holdout_mask(n: int, config: EbmConfig) -> np.ndarray:
    if not config.early_stopping or n < 4 * config.validation_stride:
        return np.zeros(n, dtype=bool)
    return np.arange(n) % config.validation_stride == config.validation_stride - 1


def _fit_main_effects(data, cuts, bins, shapes, intercept, config):
    """Cyclic boosting of per-feature shapes in place.

    Returns (fit-part loss history, train bin counts, best cycle)."""
    X, y, w = data.X, data.y, data.w
    d = X.shape[1]
    counts = [np.bincount(bins[:, j], minlength=len(cuts[j]) + 1) for j in range(d)]
    val = _holdout_mask(data.n, config)
    fit = ~val
    yf, wf, bf = y[fit], w[fit], bins[fit]
    yv, wv, bv = y[val], w[val], bins[val]
    margins_f = np.full(int(fit.sum()), intercept)
    margins_v = np.full(int(val.sum()), intercept)
    losses = [log_loss(sigmoid(margins_f), yf, wf)]
    lr = config.learning_rate
    best_val, best_shapes, best_cycle = np.inf, None, 0
    cycle = 0
    for cycle in range(1, config.rounds + 1):
        for j in range(d):
            p = sigmoid(margins_f)
            g = wf * (p - yf)
            h = wf * p * (1.0 - p)
            nb = len(cuts[j]) + 1
            Gb = np.bincount(bf[:, j], weights=g, minlength=nb)
            Hb = np.bincount(bf[:, j], weights=h, minlength=nb)
            cb = np.bincount(bf[:, j], minlength=nb)
            contrib = np.zeros(nb)
            for lo, hi in _best_segments_1d(
                Gb, Hb, config.max_leaves, cb, config.min_samples_leaf
            ):
                G, H = Gb[lo:hi].sum(), Hb[lo:hi].sum()
                contrib[lo:hi] = -lr * G / (H + _H_EPS) if H > 0 else 0.0
            shapes[j] += contrib
            margins_f += contrib[bf[:, j]]
            if margins_v.size:
                margins_v += contrib[bv[:, j]]
        losses.append(log_loss(sigmoid(margins_f), yf, wf))
        if margins_v.size:
            val_loss = log_loss(sigmoid(margins_v), yv, wv)
            if val_loss < best_val - 1e-7:
                best_val = val_loss
                best_shapes = [s.copy() for s in shapes]
                best_cycle = cycle
            elif cycle - best_cycle > config.patience:
                break
        if abs(losses[-2] - losses[-1]) < config.tol:
            break
    if best_shapes is not None:
        shapes[:] = best_shapes
        losses = losses[: best_cycle + 1]
    return losses, counts, best_cycle if best_shapes is not None else cycle


def fit_ebm(data: Dataset, config: EbmConfig | None = None) -> EbmModel:
    config = config or EbmConfig()
    X, y, w = data.X, data.y, data.w
    if y.min() == y.max():
        raise DataError("EBM needs both classes present")
    base_rate = float((w * y).sum() / w.sum())
    intercept = float(np.log(base_rate / (1.0 - base_rate)))
    cuts = build_bins(X)
    bins = np.column_stack(
        [np.searchsorted(cuts[j], X[:, j], side="right") for j in range(X.shape[1])]
    )
    shapes = [np.zeros(len(c) + 1) for c in cuts]
    losses, counts, kept_cycles = _fit_main_effects(
        data, cuts, bins, shapes, intercept, config
    )
    # mean-center each shape over train; the mass moves into the intercept
    n = data.n
    for j in range(X.shape[1]):
        mean = float(counts[j] @ shapes[j]) / n
        shapes[j] -= mean
        intercept += mean
    model = EbmModel(
        intercept=intercept,
        bin_cuts=cuts,
        shapes=shapes,
        bin_counts=counts,
        pairs=[],
        feature_names=list(data.feature_names),
        config=config.as_dict(),
    )
    model.config["cycles_run"] = kept_cycles
    if config.n_pairs > 0:
        pairs = detect_pairs(data, model, config.n_pairs)
        model = fit_pairs(data, model, pairs, config)
    return model


def _grid_sums(bins_j, bins_q, nbj, nbq, weights):
    flat = np.bincount(bins_j * nbq + bins_q, weights=weights, minlength=nbj * nbq)
    return flat.reshape(nbj, nbq)


def _best_regions_2d(G2, H2, C2, min_leaf=1):
    """Depth-2 axis-aligned tree on the bin grid. Returns (regions, gain):
    regions are (r0, r1, c0, c1) rectangles; gain is the total objective
    reduction relative to the unsplit grid."""

    def marginals(r0, r1, c0, c1, axis):
        g = G2[r0:r1, c0:c1].sum(axis=1 - axis)
        h = H2[r0:r1, c0:c1].sum(axis=1 - axis)
        c = C2[r0:r1, c0:c1].sum(axis=1 - axis)
        return g, h, c

    def score(g, h):
        return g * g / (h + _H_EPS)

    def best_split(r0, r1, c0, c1):
        Gt = G2[r0:r1, c0:c1].sum()
        Ht = H2[r0:r1, c0:c1].sum()
        base = score(Gt, Ht)
        best = None
        for axis in (0, 1):
            g, h, c = marginals(r0, r1, c0, c1, axis)
            gl, hl, cl = np.cumsum(g)[:-1], np.cumsum(h)[:-1], np.cumsum(c)[:-1]
            valid = (cl >= min_leaf) & (c.sum() - cl >= min_leaf)
            if not valid.any():
                continue
            gains = score(gl, hl) + score(Gt - gl, Ht - hl) - base
            gains[~valid] = -np.inf
            k = int(np.argmax(gains))
            if gains[k] > 0 and (best is None or gains[k] > best[0]):
                best = (float(gains[k]), axis, k + 1)
        return best

    regions = [(0, G2.shape[0], 0, G2.shape[1])]
    total_gain = 0.0
    found = best_split(*regions[0])
    if found is None:
        return regions, 0.0
    gain, axis, k = found
    total_gain += gain
    r0, r1, c0, c1 = regions[0]
    if axis == 0:
        regions = [(r0, r0 + k, c0, c1), (r0 + k, r1, c0, c1)]
    else:
        regions = [(r0, r1, c0, c0 + k), (r0, r1, c0 + k, c1)]
    final = []
    for reg in regions:
        found = best_split(*reg)
        if found is None:
            final.append(reg)
            continue
        gain, axis, k = found
        total_gain += gain
        r0, r1, c0, c1 = reg
        if axis == 0:
            final.extend([(r0, r0 + k, c0, c1), (r0 + k, r1, c0, c1)])
        else:
            final.extend([(r0, r1, c0, c0 + k), (r0, r1, c0 + k, c1)])
    return final, total_gain


def detect_pairs(data: Dataset, model: EbmModel, m: int) -> list[tuple[int, int]]:
    """Rank all feature pairs by the objective reduction of one depth-2 tree
    fitted to the main-effects residuals; return the top m."""
    d = model.d
    max_pairs = d * (d - 1) // 2
    m = min(m, max_pairs)
    if m <= 0:
        return []
    margins = model.predict_margin(data.X)
    p = sigmoid(margins)
    g = data.w * (p - data.y)
    h = data.w * p * (1.0 - p)
    B = model._bin_matrix(data.X)
    ones = np.ones(data.n)
    scored = []
    for j in range(d):
        for q in range(j + 1, d):
            nbj, nbq = len(model.bin_cuts[j]) + 1, len(model.bin_cuts[q]) + 1
            G2 = _grid_sums(B[:, j], B[:, q], nbj, nbq, g)
            H2 = _grid_sums(B[:, j], B[:, q], nbj, nbq, h)
            C2 = _grid_sums(B[:, j], B[:, q], nbj, nbq, ones)
            _, gain = _best_regions_2d(G2, H2, C2)
            scored.append((gain, (j, q)))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [pair for _, pair in scored[:m]]


def fit_pairs(data: Dataset, model: EbmModel, pairs, config: EbmConfig | None = None) -> EbmModel:
    """Boost pair grids round-robin on residuals with main effects frozen."""
    config = config or EbmConfig(**{k: v for k, v in model.config.items() if k in EbmConfig.__dataclass_fields__})
    pairs = [tuple(p) for p in pairs]
    if len(set(pairs)) != len(pairs):
        raise DataError("duplicate pairs")
    for j, q in pairs:
        if not 0 <= j < q < model.d:
            raise DataError(f"bad pair ({j},{q})")
    new = EbmModel(
        intercept=model.intercept,
        bin_cuts=[c.copy() for c in model.bin_cuts],
        shapes=[s.copy() for s in model.shapes],
        bin_counts=[c.copy() for c in model.bin_counts],
        pairs=[PairTerm(t.pair, t.grid.copy()) for t in model.pairs],
        feature_names=list(model.feature_names),
        config=dict(model.config),
    )
    if not pairs:
        return new
    X, y, w = data.X, data.y, data.w
    B = new._bin_matrix(X)
    grids = {}
    dims = {}
    for j, q in pairs:
        nbj, nbq = len(new.bin_cuts[j]) + 1, len(new.bin_cuts[q]) + 1
        grids[(j, q)] = np.zeros((nbj, nbq))
        dims[(j, q)] = (nbj, nbq)
    counts = {
        pq: _grid_sums(B[:, pq[0]], B[:, pq[1]], *dims[pq], np.ones(data.n))
        for pq in pairs
    }
    val = _holdout_mask(data.n, config)
    fit = ~val
    yf, wf, Bf = y[fit], w[fit], B[fit]
    yv, wv, Bv = y[val], w[val], B[val]
    all_margins = new.predict_margin(X)
    margins_f, margins_v = all_margins[fit], all_margins[val]
    fit_counts = {
        pq: _grid_sums(Bf[:, pq[0]], Bf[:, pq[1]], *dims[pq], np.ones(len(yf)))
        for pq in pairs
    }
    lr = config.learning_rate
    prev_loss = log_loss(sigmoid(margins_f), yf, wf)
    best_val, best_grids, best_round = np.inf, None, 0
    for rnd in range(1, config.pair_rounds + 1):
        for pq in pairs:
            j, q = pq
            p = sigmoid(margins_f)
            g = wf * (p - yf)
            h = wf * p * (1.0 - p)
            G2 = _grid_sums(Bf[:, j], Bf[:, q], *dims[pq], g)
            H2 = _grid_sums(Bf[:, j], Bf[:, q], *dims[pq], h)
            regions, _ = _best_regions_2d(
                G2, H2, fit_counts[pq], config.min_samples_leaf
            )
            delta = np.zeros(dims[pq])
            for r0, r1, c0, c1 in regions:
                G, H = G2[r0:r1, c0:c1].sum(), H2[r0:r1, c0:c1].sum()
                if H > 0:
                    delta[r0:r1, c0:c1] = -lr * G / (H + _H_EPS)
            grids[pq] += delta
            margins_f += delta[Bf[:, j], Bf[:, q]]
            if margins_v.size:
                margins_v += delta[Bv[:, j], Bv[:, q]]
        loss = log_loss(sigmoid(margins_f), yf, wf)
        if margins_v.size:
            val_loss = log_loss(sigmoid(margins_v), yv, wv)
            if val_loss < best_val - 1e-7:
                best_val = val_loss
                best_grids = {pq: grids[pq].copy() for pq in pairs}
                best_round = rnd
            elif rnd - best_round > config.patience:
                break
        if abs(prev_loss - loss) < config.tol:
            break
        prev_loss = loss
    if best_grids is not None:
        grids = best_grids
    for pq in pairs:
        mean = float((counts[pq] * grids[pq]).sum()) / data.n
        grids[pq] -= mean
        new.intercept += mean
        new.pairs.append(PairTerm(pq, grids[pq]))
    return new


def importance_ebm(model: EbmModel, data: Dataset) -> RankedFeatures:
    """Mean |shape score| over the sample; pair terms are excluded from the
    main ranking (see ``pair_importance``)."""
    B = model._bin_matrix(data.X)
    scores = [
        float(np.abs(model.shapes[j][B[:, j]]).mean()) for j in range(model.d)
    ]
    return rank_from_scores(model.feature_names, scores, method="ebm")


def pair_importance(model: EbmModel, data: Dataset) -> list[tuple[str, float]]:
    B = model._bin_matrix(data.X)
    out = []
    for term in model.pairs:
        j, q = term.pair
        score = float(np.abs(term.grid[B[:, j], B[:, q]]).mean())
        out.append((f"{model.feature_names[j]} x {model.feature_names[q]}", score))
    out.sort(key=lambda t: (-t[1], t[0]))
    return out


def export_shape(model: EbmModel, j: int, path):
    """CSV of (bin lower edge, bin upper edge, score, train count) per bin."""
    if not 0 <= j < model.d:
        raise DataError(f"unknown feature index {j}")
    cuts = model.bin_cuts[j]
    lows = np.concatenate([[-np.inf], cuts])
    highs = np.concatenate([cuts, [np.inf]])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "score", "train_count"])
        for lo, hi, s, c in zip(lows, highs, model.shapes[j], model.bin_counts[j]):
            writer.writerow([repr(float(lo)), repr(float(hi)), repr(float(s)), int(c)])


def import_shape(path):
    """Rebuild (cuts, scores, counts) from an exported shape CSV, exactly."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [(float(a), float(b), float(s), int(c)) for a, b, s, c in reader]
    cuts = np.array([r[1] for r in rows[:-1]])
    scores = np.array([r[2] for r in rows])
    counts = np.array([r[3] for r in rows])
    return cuts, scores, counts


def export_pair_grid(model: EbmModel, pair: tuple[int, int], path):
    """Grid CSV: first row/column carry the two features' bin edges."""
    for term in model.pairs:
        if term.pair == tuple(pair):
            break
    else:
        raise DataError(f"unknown pair {pair}")
    j, q = term.pair
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"{model.feature_names[j]}\\{model.feature_names[q]}"]
            + [str(i) for i in range(term.grid.shape[1])]
        )
        for r in range(term.grid.shape[0]):
            writer.writerow([str(r)] + [repr(float(v)) for v in term.grid[r]])
