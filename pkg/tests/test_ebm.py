import numpy as np
import pytest

from glassbox_credit.data import Dataset
from glassbox_credit.ebm import (
    EbmConfig,
    build_bins,
    detect_pairs,
    export_pair_grid,
    export_shape,
    fit_ebm,
    fit_pairs,
    import_shape,
    importance_ebm,
    pair_importance,
)
from glassbox_credit.errors import DataError
from glassbox_credit.linear import sigmoid
from glassbox_credit.metrics import log_loss


def test_build_bins_small_column_uses_midpoints():
    X = np.array([[1.0], [2.0], [2.0], [4.0]])
    cuts = build_bins(X)[0]
    assert cuts.tolist() == [1.5, 3.0]


def test_build_bins_cap():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((10_000, 1))
    cuts = build_bins(X)[0]
    assert len(cuts) <= 255
    assert np.all(np.diff(cuts) > 0)


def test_bin_index_convention():
    X = np.array([[1.0], [2.0], [4.0], [8.0]])
    cuts = build_bins(X)[0]
    data = Dataset(X, np.array([0.0, 1.0, 0.0, 1.0]), np.ones(4), ["x"])
    model = fit_ebm(data, EbmConfig(rounds=1))
    # values below the first cut land in bin 0; each cut opens a new bin
    assert model.bin_index(0, np.array([-100.0]))[0] == 0
    assert model.bin_index(0, np.array([100.0]))[0] == len(cuts)


def test_zero_cycles_intercept_is_base_rate(tiny_data):
    model = fit_ebm(tiny_data, EbmConfig(rounds=0))
    rate = tiny_data.y.mean()
    assert model.intercept == pytest.approx(np.log(rate / (1 - rate)))
    assert np.allclose(model.predict_proba(tiny_data.X), rate)


def test_training_loss_monotone_without_early_stop(tiny_data):
    # with early stopping off, every cycle must not increase the fit loss
    config = EbmConfig(rounds=60, early_stopping=False)
    model = fit_ebm(tiny_data, config)
    assert model.config["cycles_run"] >= 1
    probs = model.predict_proba(tiny_data.X)
    base = fit_ebm(tiny_data, EbmConfig(rounds=1, early_stopping=False))
    assert log_loss(probs, tiny_data.y, tiny_data.w) < log_loss(
        base.predict_proba(tiny_data.X), tiny_data.y, tiny_data.w
    )


def test_shapes_are_train_mean_centered(tiny_data):
    model = fit_ebm(tiny_data, EbmConfig(rounds=40))
    for j in range(model.d):
        weighted = float(model.bin_counts[j] @ model.shapes[j])
        assert weighted == pytest.approx(0.0, abs=1e-8)


def test_term_contributions_sum_to_margin(tiny_data):
    model = fit_ebm(tiny_data, EbmConfig(rounds=40))
    margins = model.predict_margin(tiny_data.X)
    for i in range(5):
        terms = model.term_contributions(tiny_data.X[i])
        assert sum(v for _, v in terms) == pytest.approx(margins[i], abs=1e-12)


def test_early_stopping_restores_best(additive_small):
    train, test, _ = additive_small
    top = train.select_features(train.feature_names[:10])
    stopped = fit_ebm(top, EbmConfig(rounds=4000))
    assert stopped.config["cycles_run"] < 4000


def test_single_class_rejected():
    data = Dataset(np.zeros((6, 1)), np.zeros(6), np.ones(6), ["x"])
    with pytest.raises(DataError):
        fit_ebm(data, EbmConfig(rounds=1))


def test_detect_pairs_finds_planted_xor(xor_small):
    train, _, truth = xor_small
    top = train.select_features(train.feature_names[:10])
    mains = fit_ebm(top, EbmConfig())
    pairs = detect_pairs(top, mains, 3)
    assert tuple(pairs[0]) == truth.xor_pair


def test_fit_pairs_zero_is_identity(tiny_data):
    model = fit_ebm(tiny_data, EbmConfig(rounds=30))
    same = fit_pairs(tiny_data, model, [])
    assert np.array_equal(
        model.predict_margin(tiny_data.X), same.predict_margin(tiny_data.X)
    )


def test_fit_pairs_validation(tiny_data):
    model = fit_ebm(tiny_data, EbmConfig(rounds=5))
    with pytest.raises(DataError):
        fit_pairs(tiny_data, model, [(0, 0)])
    with pytest.raises(DataError):
        fit_pairs(tiny_data, model, [(0, 1), (0, 1)])


def test_pair_term_improves_xor_fit(xor_small):
    train, test, truth = xor_small
    keep = [train.feature_names[j] for j in truth.xor_pair]
    small_train = train.select_features(keep)
    small_test = test.select_features(keep)
    mains = fit_ebm(small_train, EbmConfig())
    with_pair = fit_pairs(small_train, mains, [(0, 1)])
    from glassbox_credit.metrics import auroc

    before = auroc(mains.predict_proba(small_test.X), test.y)
    after = auroc(with_pair.predict_proba(small_test.X), test.y)
    assert after > before + 0.05


def test_importance_ebm_ordering(additive_small):
    train, _, truth = additive_small
    top = train.select_features(train.feature_names[:12])
    model = fit_ebm(top, EbmConfig())
    ranked = importance_ebm(model, top)
    assert list(ranked.scores) == sorted(ranked.scores, reverse=True)
    assert set(ranked.top(6)) <= {f"f{j:02d}" for j in truth.informative}


def test_shape_export_round_trip(tmp_path, tiny_data):
    model = fit_ebm(tiny_data, EbmConfig(rounds=40))
    path = tmp_path / "shape.csv"
    export_shape(model, 0, path)
    cuts, scores, counts = import_shape(path)
    assert np.array_equal(cuts, model.bin_cuts[0])
    assert np.array_equal(scores, model.shapes[0])
    assert np.array_equal(counts, model.bin_counts[0])


def test_pair_grid_export(tmp_path, xor_small):
    train, _, truth = xor_small
    keep = [train.feature_names[j] for j in truth.xor_pair]
    small = train.select_features(keep)
    model = fit_pairs(small, fit_ebm(small, EbmConfig(rounds=50)), [(0, 1)])
    path = tmp_path / "grid.csv"
    export_pair_grid(model, (0, 1), path)
    assert path.read_text().count("\n") == model.pairs[0].grid.shape[0] + 1
    names = pair_importance(model, small)
    assert len(names) == 1 and names[0][1] > 0
