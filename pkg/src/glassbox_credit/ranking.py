"""Ordered feature rankings produced by the different importance methods."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import DataError

METHODS = ("coef", "shap", "ebm")


@dataclass
class RankedFeatures:
    """Feature names with non-increasing importance scores.

    ``method`` is one of ``coef``, ``shap``, ``ebm``; ``source`` identifies
    the model the ranking came from.
    """

    names: list[str]
    scores: list[float]
    method: str
    source: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown ranking method {self.method!r}")
        if len(self.names) != len(self.scores):
            raise DataError("names and scores must have equal length")
        if len(set(self.names)) != len(self.names):
            raise DataError("ranked feature names must be unique")
        for a, b in zip(self.scores, self.scores[1:]):
            if b > a + 1e-12:
                raise DataError("scores must be non-increasing")

    def top(self, k: int) -> list[str]:
        if not 1 <= k <= len(self.names):
            raise DataError(f"k={k} out of range 1..{len(self.names)}")
        return self.names[:k]

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "source": self.source,
                "features": [
                    {"name": n, "score": s} for n, s in zip(self.names, self.scores)
                ],
                "meta": self.meta,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "RankedFeatures":
        obj = json.loads(text)
        return cls(
            names=[f["name"] for f in obj["features"]],
            scores=[f["score"] for f in obj["features"]],
            method=obj["method"],
            source=obj.get("source", ""),
            meta=obj.get("meta", {}),
        )


def rank_from_scores(names, scores, method, source="", meta=None) -> RankedFeatures:
    """Sort descending by score, ties broken by original feature index."""
    order = sorted(range(len(names)), key=lambda i: (-scores[i], i))
    return RankedFeatures(
        names=[names[i] for i in order],
        scores=[float(scores[i]) for i in order],
        method=method,
        source=source,
        meta=meta or {},
    )
