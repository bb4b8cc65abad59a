import pytest

from glassbox_credit.errors import DataError
from glassbox_credit.ranking import RankedFeatures, rank_from_scores


def test_rank_from_scores_sorts_descending():
    ranked = rank_from_scores(["a", "b", "c"], [0.1, 0.9, 0.5], method="shap")
    assert ranked.names == ["b", "c", "a"]
    assert ranked.scores == [0.9, 0.5, 0.1]


def test_tie_broken_by_original_index():
    ranked = rank_from_scores(["z", "y", "x"], [0.5, 0.5, 0.5], method="coef")
    assert ranked.names == ["z", "y", "x"]  # stable: input order wins ties


def test_top_k():
    ranked = rank_from_scores(["a", "b", "c"], [3.0, 2.0, 1.0], method="ebm")
    assert ranked.top(2) == ["a", "b"]
    with pytest.raises(DataError):
        ranked.top(4)
    with pytest.raises(DataError):
        ranked.top(0)


def test_invariants_enforced():
    with pytest.raises(DataError):
        RankedFeatures(names=["a", "b"], scores=[0.1, 0.9], method="shap")
    with pytest.raises(DataError):
        RankedFeatures(names=["a", "a"], scores=[0.9, 0.1], method="shap")
    with pytest.raises(DataError):
        rank_from_scores(["a"], [1.0], method="sorcery")


def test_json_round_trip():
    ranked = rank_from_scores(
        ["a", "b"], [2.0, 1.0], method="shap", source="gbdt-1", meta={"k": 2}
    )
    clone = RankedFeatures.from_json(ranked.to_json())
    assert clone.names == ranked.names
    assert clone.scores == ranked.scores
    assert clone.method == ranked.method
    assert clone.source == ranked.source
