"""Tabular ingestion and preprocessing.

The pipeline mirrors standard credit-data preparation: keep only resolved
loan outcomes as the binary target, average the two FICO bound columns,
one-hot encode configured categoricals (with an explicit column for missing
values), impute numeric missing values with the train-split mean, and split
train/test on a date cutoff.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np

from .errors import DataError

FICO_HIGH = "fico_range_high"
FICO_LOW = "fico_range_low"
# The merged column keeps the high-bound name; encoded rankings use it.
FICO_MERGED = "fico_range_high"
MISSING_CATEGORY = "nan"


@dataclass
class PrepConfig:
    target: str
    positive_label: str
    negative_label: str
    date_column: str
    split_cutoff: str  # last date (inclusive) that belongs to the train split
    categorical: list[str] = field(default_factory=list)
    imputation: str = "mean"
    engineer_fico: bool = True

    def __post_init__(self):
        if self.positive_label == self.negative_label:
            raise DataError("positive and negative labels must be distinct")
        self.cutoff_date = parse_date(self.split_cutoff)
        if self.cutoff_date is None:
            raise DataError(f"unparseable split cutoff {self.split_cutoff!r}")
        if self.imputation != "mean":
            raise DataError(f"unsupported imputation strategy {self.imputation!r}")

    @classmethod
    def from_json_file(cls, path) -> "PrepConfig":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(
            target=obj["target"],
            positive_label=obj["positive_label"],
            negative_label=obj["negative_label"],
            date_column=obj["date_column"],
            split_cutoff=obj["split_cutoff"],
            categorical=list(obj.get("categorical", [])),
            imputation=obj.get("imputation", "mean"),
            engineer_fico=bool(obj.get("engineer_fico", True)),
        )

    def as_dict(self) -> dict:
        return {
            "target": self.target,
            "positive_label": self.positive_label,
            "negative_label": self.negative_label,
            "date_column": self.date_column,
            "split_cutoff": self.split_cutoff,
            "categorical": list(self.categorical),
            "imputation": self.imputation,
            "engineer_fico": self.engineer_fico,
        }


def parse_date(text: str) -> date | None:
    """Accepts ISO-8601 (YYYY-MM-DD or YYYY-MM) and 'Mon-YYYY'."""
    text = text.strip()
    if not text:
        return None
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    for fmt in ("%Y-%m", "%b-%Y"):
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    return None


class RawTable:
    """Column-typed table: numeric columns are float arrays with NaN for
    missing, categorical columns are string lists with None for missing,
    the date column holds ``date`` objects or None."""

    def __init__(self, names: list[str], columns: dict):
        if len(set(names)) != len(names):
            raise DataError("column names must be unique")
        lengths = {len(_col_values(columns[n])) for n in names}
        if len(lengths) > 1:
            raise DataError("all columns must have equal length")
        self.names = list(names)
        self.columns = columns
        self.n_rows = lengths.pop() if lengths else 0

    def kind(self, name: str) -> str:
        return self.columns[name][0]

    def values(self, name: str):
        return self.columns[name][1]

    def select_rows(self, mask) -> "RawTable":
        cols = {}
        for n in self.names:
            kind, vals = self.columns[n]
            if kind == "numeric":
                cols[n] = (kind, vals[mask])
            else:
                cols[n] = (kind, [v for v, keep in zip(vals, mask) if keep])
        return RawTable(self.names, cols)


def _col_values(col):
    return col[1]


@dataclass
class Dataset:
    """Model-ready matrix: no missing values, binary labels, positive weights."""

    X: np.ndarray
    y: np.ndarray
    w: np.ndarray
    feature_names: list[str]

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.X.ndim != 2:
            raise DataError("X must be 2-D")
        n, d = self.X.shape
        if self.y.shape != (n,) or self.w.shape != (n,):
            raise DataError("y and w must match the number of rows")
        if d != len(self.feature_names):
            raise DataError("feature_names length must match X columns")
        if np.isnan(self.X).any():
            raise DataError("X contains missing values")
        if not np.isin(self.y, (0.0, 1.0)).all():
            raise DataError("labels must be 0/1")
        if not (self.w > 0).all():
            raise DataError("sample weights must be positive")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def select_features(self, names: list[str]) -> "Dataset":
        """Column subset; selected columns keep their original order."""
        index = {n: i for i, n in enumerate(self.feature_names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise DataError(f"unknown features: {missing}")
        idx = sorted(index[n] for n in names)
        return Dataset(
            X=self.X[:, idx],
            y=self.y.copy(),
            w=self.w.copy(),
            feature_names=[self.feature_names[i] for i in idx],
        )

    def with_weights(self, w) -> "Dataset":
        return Dataset(self.X.copy(), self.y.copy(), np.asarray(w, float), list(self.feature_names))


def ingest_csv(path, config: PrepConfig) -> RawTable:
    """Read an RFC-4180 CSV with a header row and infer column types.

    A column is numeric when every non-empty cell parses as a float; the
    configured date column is parsed as dates; everything else is
    categorical text. Empty cells are missing.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            rows = [row for row in reader]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    for needed in (config.target, config.date_column):
        if needed and needed not in header:
            raise DataError(f"missing column {needed!r}")
    for row in rows:
        if len(row) != len(header):
            raise DataError("ragged CSV row")
    columns = {}
    for ci, name in enumerate(header):
        raw = [row[ci] for row in rows]
        if name == config.date_column:
            parsed = []
            for cell in raw:
                if cell.strip() == "":
                    parsed.append(None)
                    continue
                d = parse_date(cell)
                if d is None:
                    raise DataError(f"unparseable date {cell!r} in column {name!r}")
                parsed.append(d)
            columns[name] = ("date", parsed)
            continue
        numeric = True
        for cell in raw:
            if cell.strip() == "":
                continue
            try:
                float(cell)
            except ValueError:
                numeric = False
                break
        if numeric and any(cell.strip() != "" for cell in raw):
            vals = np.array(
                [float(c) if c.strip() != "" else math.nan for c in raw], dtype=float
            )
            columns[name] = ("numeric", vals)
        else:
            columns[name] = ("categorical", [c if c.strip() != "" else None for c in raw])
    return RawTable(header, columns)


def encode_target(table: RawTable, config: PrepConfig) -> RawTable:
    """Keep only rows whose target is one of the two configured outcomes and
    recode it to 0/1 (negative -> 0, positive -> 1)."""
    if config.target not in table.names:
        raise DataError(f"missing column {config.target!r}")
    kind, vals = table.columns[config.target]
    if kind != "categorical":
        raise DataError("target column must be categorical before encoding")
    keep = [v in (config.positive_label, config.negative_label) for v in vals]
    if not any(keep):
        raise DataError("no rows with a recognized target label remain")
    table = table.select_rows(keep)
    encoded = np.array(
        [1.0 if v == config.positive_label else 0.0 for v in table.values(config.target)]
    )
    table.columns[config.target] = ("numeric", encoded)
    return table


def engineer_fico(table: RawTable) -> RawTable:
    """Replace the two FICO bound columns with their element-wise mean."""
    if FICO_HIGH not in table.names or FICO_LOW not in table.names:
        warnings.warn("fico columns absent; skipping fico averaging", stacklevel=2)
        return table
    if table.kind(FICO_HIGH) != "numeric" or table.kind(FICO_LOW) != "numeric":
        raise DataError("fico columns must be numeric")
    merged = 0.5 * (table.values(FICO_HIGH) + table.values(FICO_LOW))
    names = [n for n in table.names if n not in (FICO_HIGH, FICO_LOW)]
    columns = {n: table.columns[n] for n in names}
    names.append(FICO_MERGED)
    columns[FICO_MERGED] = ("numeric", merged)
    return RawTable(names, columns)


def prepare(table: RawTable, config: PrepConfig, return_stats: bool = False):
    """One-hot encode, impute with train means, and split on the date cutoff.

    Returns (train, test) Datasets with unit weights; pass
    ``return_stats=True`` to also get the imputation means and column layout
    for caching/reproducibility.
    """
    if config.target not in table.names or table.kind(config.target) != "numeric":
        raise DataError("target must be present and encoded before prepare")
    if config.date_column not in table.names:
        raise DataError("date column required for the temporal split")

    dates = table.values(config.date_column)
    valid = [d is not None for d in dates]
    table = table.select_rows(valid)
    dates = table.values(config.date_column)
    in_train = np.array([d <= config.cutoff_date for d in dates], dtype=bool)
    if not in_train.any():
        raise DataError("empty train split")
    if in_train.all():
        raise DataError("empty test split")

    feature_cols = [
        n for n in table.names if n not in (config.target, config.date_column)
    ]
    blocks: list[np.ndarray] = []
    names: list[str] = []
    impute_means: dict[str, float] = {}
    for name in feature_cols:
        kind, vals = table.columns[name]
        if name in config.categorical:
            if kind == "numeric":
                vals = [repr(v) if not math.isnan(v) else None for v in vals]
            cats = sorted({v if v is not None else MISSING_CATEGORY for v in vals})
            for cat in cats:
                col = np.array(
                    [
                        1.0 if (v if v is not None else MISSING_CATEGORY) == cat else 0.0
                        for v in vals
                    ]
                )
                blocks.append(col)
                names.append(f"{name}_{cat}")
        elif kind == "numeric":
            col = vals.astype(float).copy()
            nan_mask = np.isnan(col)
            if nan_mask.any():
                train_vals = col[in_train & ~nan_mask]
                if train_vals.size == 0:
                    raise DataError(f"column {name!r} has no observed train values")
                mean = float(train_vals.mean())
                col[nan_mask] = mean
                impute_means[name] = mean
            blocks.append(col)
            names.append(name)
        else:
            raise DataError(
                f"categorical column {name!r} not listed in config.categorical"
            )

    X = np.column_stack(blocks) if blocks else np.zeros((table.n_rows, 0))
    y = table.values(config.target).astype(float)

    def split(mask) -> Dataset:
        return Dataset(
            X=X[mask],
            y=y[mask],
            w=np.ones(int(mask.sum())),
            feature_names=list(names),
        )

    train, test = split(in_train), split(~in_train)
    if return_stats:
        stats = {
            "imputation_means": impute_means,
            "split_cutoff": config.split_cutoff,
            "feature_names": list(names),
            "n_train": train.n,
            "n_test": test.n,
        }
        return train, test, stats
    return train, test


def class_weights(y) -> tuple[float, float]:
    """Balanced weights n/(2*n_c); total weighted mass stays n."""
    y = np.asarray(y)
    n = y.size
    n_pos = int((y == 1).sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("class weights need both classes present")
    return n / (2.0 * n_neg), n / (2.0 * n_pos)


def apply_class_weights(data: Dataset) -> Dataset:
    w_neg, w_pos = class_weights(data.y)
    return data.with_weights(np.where(data.y == 1.0, w_pos, w_neg))


def standardize(train: Dataset, test: Dataset):
    """Z-score both splits with train statistics (population std).

    Zero-variance columns map to all-zeros. Returns
    (train', test', means, stds).
    """
    means = train.X.mean(axis=0)
    stds = train.X.std(axis=0)  # population (1/n)

    def transform(data: Dataset) -> Dataset:
        Z = data.X - means
        nonzero = stds > 0
        Z[:, nonzero] /= stds[nonzero]
        Z[:, ~nonzero] = 0.0
        return Dataset(Z, data.y.copy(), data.w.copy(), list(data.feature_names))

    return transform(train), transform(test), means, stds


def cache_dataset(data: Dataset, csv_path, manifest_path, stats=None):
    """Write a prepared Dataset as CSV plus a sidecar JSON manifest."""
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(self_cols := (["__label__", "__weight__"] + data.feature_names))
        for i in range(data.n):
            writer.writerow(
                [repr(float(data.y[i])), repr(float(data.w[i]))]
                + [repr(float(v)) for v in data.X[i]]
            )
    manifest = {
        "columns": self_cols,
        "column_types": ["numeric"] * len(self_cols),
        "n_rows": data.n,
    }
    if stats:
        manifest.update(stats)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)


def load_cached_dataset(csv_path) -> Dataset:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader]
    arr = np.array(rows, dtype=float)
    return Dataset(
        X=arr[:, 2:], y=arr[:, 0], w=arr[:, 1], feature_names=header[2:]
    )
