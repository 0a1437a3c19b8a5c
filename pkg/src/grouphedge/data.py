"""Synthetic generators, CSV ingestion with group rules, and round ordering."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .core import ContractError, Rounds

ALWAYS_ON = "always_on"
SHAPES = ("circle", "square", "triangle")
COLORS = ("green", "red")
AGGREGATIONS = ("mean", "min", "max", "permutation")
LABEL_SCALINGS = ("dim", "minmax")
DEFAULT_PERMUTATION = ("green", "square", "red", "triangle", "circle")


class DataError(ValueError):
    """Input data cannot be read or does not match its declared schema."""


# ---------------------------------------------------------------- synthetic


@dataclass(frozen=True)
class SyntheticSpec:
    T: int
    d: int = 20
    p_shape: tuple[float, ...] = (0.5, 0.3, 0.2)
    p_color: tuple[float, ...] = (0.6, 0.4)
    aggregation: str = "mean"
    permutation: tuple[str, ...] = DEFAULT_PERMUTATION
    seed: int = 0
    indicator_features: bool = True
    intercept: bool = True
    # "dim": <w, x> / d; "minmax": aggregated labels rescaled to span [0, 1]
    label_scaling: str = "dim"

    def __post_init__(self):
        if self.T < 1:
            raise ContractError("T must be at least 1")
        if self.d < 1:
            raise ContractError("d must be at least 1")
        for name, p in (("p_shape", self.p_shape), ("p_color", self.p_color)):
            if len(p) != (3 if name == "p_shape" else 2) or any(v < 0 for v in p):
                raise ContractError(f"{name} has the wrong length or negative entries")
            if abs(sum(p) - 1.0) > 1e-9:
                raise ContractError(f"{name} must sum to 1")
        if self.aggregation not in AGGREGATIONS:
            raise ContractError(f"aggregation must be one of {AGGREGATIONS}")
        if sorted(self.permutation) != sorted(SHAPES + COLORS):
            raise ContractError("permutation must order all five groups exactly once")
        if self.label_scaling not in LABEL_SCALINGS:
            raise ContractError(f"label_scaling must be one of {LABEL_SCALINGS}")


def aggregate_labels(mode: str, shape_label, color_label, shape=None, color=None,
                     permutation: Sequence[str] = DEFAULT_PERMUTATION):
    """Combine the two intermediary labels.  Works on scalars or arrays;
    ``shape``/``color`` are group names or indices and only matter for
    ``permutation``, where the group ranked first supplies the label."""
    if mode == "mean":
        return (shape_label + color_label) / 2.0
    if mode == "min":
        return np.minimum(shape_label, color_label)
    if mode == "max":
        return np.maximum(shape_label, color_label)
    if mode != "permutation":
        raise ContractError(f"unknown aggregation {mode!r}")
    rank = {g: i for i, g in enumerate(permutation)}
    shape_rank = np.vectorize(lambda s: rank[SHAPES[s] if not isinstance(s, str) else s])(shape)
    color_rank = np.vectorize(lambda c: rank[COLORS[c] if not isinstance(c, str) else c])(color)
    out = np.where(shape_rank < color_rank, shape_label, color_label)
    return out if np.ndim(out) else float(out)


def synthetic_raw(spec: SyntheticSpec):
    """Draw ``(X, shape_idx, color_idx, labels, W)`` for ``spec``."""
    rng = np.random.default_rng(spec.seed)
    W = rng.random((len(SHAPES) + len(COLORS), spec.d))
    X = rng.random((spec.T, spec.d))
    shape = rng.choice(len(SHAPES), size=spec.T, p=spec.p_shape)
    color = rng.choice(len(COLORS), size=spec.T, p=spec.p_color)
    shape_label = np.einsum("td,td->t", X, W[shape]) / spec.d
    color_label = np.einsum("td,td->t", X, W[len(SHAPES) + color]) / spec.d
    y = np.asarray(aggregate_labels(spec.aggregation, shape_label, color_label, shape, color,
                                    spec.permutation), dtype=float)
    if spec.label_scaling == "minmax":
        span = y.max() - y.min()
        y = (y - y.min()) / span if span > 0 else np.zeros_like(y)
    return X, shape, color, y, W


def gen_synthetic(spec: SyntheticSpec) -> Rounds:
    X, shape, color, y, W = synthetic_raw(spec)
    T = spec.T
    membership = np.zeros((T, len(SHAPES) + len(COLORS)))
    membership[np.arange(T), shape] = 1.0
    membership[np.arange(T), len(SHAPES) + color] = 1.0
    parts = [X]
    if spec.indicator_features:
        parts.append(membership)
    if spec.intercept:
        parts.append(np.ones((T, 1)))
    activity = np.hstack([membership, np.ones((T, 1))])
    columns = {f"f{i}": X[:, i] for i in range(spec.d)}
    columns["shape"] = np.array(SHAPES, dtype=object)[shape]
    columns["color"] = np.array(COLORS, dtype=object)[color]
    return Rounds(
        np.hstack(parts), activity, y, list(SHAPES + COLORS) + [ALWAYS_ON], columns,
        meta={"synthetic": {"group_weights": W.tolist()}},
    )


def synthetic_frame(spec: SyntheticSpec) -> pd.DataFrame:
    """The dataset as written by ``gen``: ``f0..f{d-1}, shape, color, label``."""
    X, shape, color, y, _ = synthetic_raw(spec)
    frame = pd.DataFrame(X, columns=[f"f{i}" for i in range(spec.d)])
    frame["shape"] = np.array(SHAPES)[shape]
    frame["color"] = np.array(COLORS)[color]
    frame["label"] = y
    return frame


# ---------------------------------------------------------------- group rules


@dataclass(frozen=True)
class GroupRule:
    """Membership rule on a raw column.

    Threshold form: ``lower < v <= upper`` (``closed="right"``) or
    ``lower <= v < upper`` (``closed="left"``); a missing bound is unbounded.
    Category form: ``v in values``.
    """

    name: str
    feature: str
    lower: float | None = None
    upper: float | None = None
    values: tuple | None = None
    closed: str = "right"

    def __post_init__(self):
        if self.values is None and self.lower is None and self.upper is None:
            raise ContractError(f"rule {self.name!r} has neither thresholds nor values")
        if self.values is not None and (self.lower is not None or self.upper is not None):
            raise ContractError(f"rule {self.name!r} mixes thresholds and values")
        if self.closed not in ("left", "right"):
            raise ContractError("closed must be 'left' or 'right'")

    def matches(self, column) -> np.ndarray:
        col = np.asarray(column)
        if self.values is not None:
            wanted = {str(v) for v in self.values}
            return np.array([str(v) in wanted for v in col], dtype=bool)
        v = col.astype(float)
        ok = np.ones(len(v), dtype=bool)
        if self.closed == "right":
            if self.lower is not None:
                ok &= v > self.lower
            if self.upper is not None:
                ok &= v <= self.upper
        else:
            if self.lower is not None:
                ok &= v >= self.lower
            if self.upper is not None:
                ok &= v < self.upper
        return ok


@dataclass
class PreprocessSpec:
    numeric: list[str]
    categorical: list[str]
    label: str
    groups: list[GroupRule]
    intercept: bool = True
    group_indicators: bool = True


def _threshold_groups(feature: str, names: Sequence[str], cuts: Sequence[float], closed: str) -> list[GroupRule]:
    bounds = [None, *cuts, None]
    return [GroupRule(n, feature, lower=bounds[i], upper=bounds[i + 1], closed=closed) for i, n in enumerate(names)]


def medical_cost_preprocess(age_cuts=(35, 50), bmi_cuts=(18.5, 25, 30)) -> PreprocessSpec:
    """Kaggle insurance schema: age, sex, bmi, children, smoker, region, charges."""
    groups = (
        _threshold_groups("age", ("young", "middle", "old"), age_cuts, "right")
        + _threshold_groups("bmi", ("underweight", "healthyweight", "overweight", "obese"), bmi_cuts, "left")
        + [
            GroupRule("smoker", "smoker", values=("yes",)),
            GroupRule("non-smoker", "smoker", values=("no",)),
            GroupRule("male", "sex", values=("male",)),
            GroupRule("female", "sex", values=("female",)),
        ]
    )
    return PreprocessSpec(["age", "bmi", "children"], ["sex", "smoker", "region"], "charges", groups)


ADULT_RACES = ("White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black")


def adult_preprocess(age_cuts=(35, 50), high_school_max_education_num=9) -> PreprocessSpec:
    """folktables ``adult_reconstruction.csv`` schema with a real-valued income label."""
    groups = (
        _threshold_groups("age", ("young", "middle", "old"), age_cuts, "right")
        + _threshold_groups("education-num", ("HighSchool&less", "College&more"),
                            (high_school_max_education_num,), "right")
        + [GroupRule("Male", "sex", values=("Male",)), GroupRule("Female", "sex", values=("Female",))]
        + [GroupRule(r, "race", values=(r,)) for r in ADULT_RACES]
    )
    return PreprocessSpec(
        ["hours-per-week", "age", "capital-gain", "capital-loss", "education-num"],
        ["workclass", "education", "marital-status", "relationship", "race", "sex", "native-country", "occupation"],
        "income",
        groups,
    )


PRESETS = {"medical_costs": medical_cost_preprocess, "adult": adult_preprocess}


def _numeric(frame: pd.DataFrame, col: str) -> np.ndarray:
    vals = pd.to_numeric(frame[col], errors="coerce")
    bad = np.flatnonzero(vals.isna().to_numpy())
    if len(bad):
        i = int(bad[0])
        raise DataError(f"column {col!r}: unparseable cell {frame[col].iloc[i]!r} at row {i}")
    return vals.to_numpy(dtype=float)


def _minmax(v: np.ndarray) -> tuple[np.ndarray, float, float]:
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    return (v - lo) / span if span > 0 else np.zeros_like(v), lo, hi


def ingest_frame(frame: pd.DataFrame, spec: PreprocessSpec) -> Rounds:
    needed = list(dict.fromkeys(spec.numeric + spec.categorical + [spec.label] + [g.feature for g in spec.groups]))
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise DataError(f"missing column(s): {missing}")
    if len(frame) == 0:
        raise DataError("no data rows")
    for c in needed:
        blank = frame[c].isna().to_numpy() | (frame[c].astype(str).str.strip() == "").to_numpy()
        if blank.any():
            raise DataError(f"column {c!r}: missing value at row {int(np.flatnonzero(blank)[0])}")

    raw: dict[str, np.ndarray] = {}
    features = []
    scaler: dict[str, dict] = {}
    for c in spec.numeric:
        v = _numeric(frame, c)
        raw[c] = v
        scaled, lo, hi = _minmax(v)
        features.append(scaled[:, None])
        scaler[c] = {"min": lo, "max": hi}
    categories: dict[str, list[str]] = {}
    for c in spec.categorical:
        v = frame[c].astype(str).str.strip().to_numpy(dtype=object)
        raw[c] = v
        levels = sorted(set(v))
        categories[c] = levels
        index = {lvl: i for i, lvl in enumerate(levels)}
        onehot = np.zeros((len(v), len(levels)))
        onehot[np.arange(len(v)), [index[s] for s in v]] = 1.0
        features.append(onehot)
    y_raw = _numeric(frame, spec.label)
    y, lo, hi = _minmax(y_raw)
    if hi == lo:
        raise DataError(f"label column {spec.label!r} is constant; cannot scale to [0, 1]")
    scaler[spec.label] = {"min": lo, "max": hi}

    membership = []
    for rule in spec.groups:
        col = raw.get(rule.feature)
        if col is None:
            col = frame[rule.feature].astype(str).str.strip().to_numpy(dtype=object) if rule.values is not None else _numeric(frame, rule.feature)
            raw[rule.feature] = col
        membership.append(rule.matches(col).astype(float))
    T = len(frame)
    membership = np.stack(membership, axis=1) if membership else np.zeros((T, 0))
    if spec.intercept:
        features.append(np.ones((T, 1)))
    if spec.group_indicators:
        features.append(membership)
    X = np.hstack(features) if features else np.zeros((T, 0))
    activity = np.hstack([membership, np.ones((T, 1))])
    meta = {"scaler": scaler, "categories": categories}
    return Rounds(X, activity, y, [g.name for g in spec.groups] + [ALWAYS_ON], raw, meta)


def ingest_csv(path, spec: PreprocessSpec) -> Rounds:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            # leading "# key=value" provenance lines, as written by gen
            lines = fh.readlines()
        while lines and lines[0].startswith("#"):
            lines.pop(0)
        frame = pd.read_csv(io.StringIO("".join(lines)), dtype=str, keep_default_na=False,
                            skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    frame = frame.replace({"": np.nan})
    return ingest_frame(frame, spec)


# ---------------------------------------------------------------- ordering


@dataclass(frozen=True)
class Shuffle:
    seed: int


@dataclass(frozen=True)
class SortBy:
    column: str
    ascending: bool = True


def order_rounds(rounds: Rounds, mode) -> Rounds:
    if isinstance(mode, Shuffle):
        perm = np.random.default_rng(mode.seed).permutation(len(rounds))
        return rounds.take(perm)
    if isinstance(mode, SortBy):
        if mode.column not in rounds.columns:
            raise ContractError(f"unknown sort column {mode.column!r}")
        col = rounds.columns[mode.column]
        keys = np.unique(col, return_inverse=True)[1].ravel()
        if not mode.ascending:
            keys = -keys
        return rounds.take(np.argsort(keys, kind="stable"))
    raise ContractError(f"unknown ordering mode {mode!r}")


# ---------------------------------------------------------------- linear optimization


@dataclass(frozen=True)
class LinoptSpec:
    """Synthetic online linear optimization with overlapping groups.

    Each group carries a cost bias; a round's cost is the mean bias of its
    active groups plus uniform noise, clipped to [-1, 1] per coordinate
    (hypercube) or mapped to [0, 1] (shortest path edge costs).
    """

    T: int
    dim: int
    n_groups: int = 3
    membership_prob: float = 0.5
    noise: float = 0.5
    nonnegative: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.T < 1 or self.dim < 1 or self.n_groups < 1:
            raise ContractError("T, dim and n_groups must be positive")
        if not 0 < self.membership_prob <= 1:
            raise ContractError("membership_prob must lie in (0, 1]")

    @property
    def bound_C(self) -> float:
        """Max l1 norm of a generated cost vector."""
        return float(self.dim)


def gen_linopt(spec: LinoptSpec) -> Rounds:
    rng = np.random.default_rng(spec.seed)
    bias = rng.uniform(-1.0, 1.0, size=(spec.n_groups, spec.dim))
    member = (rng.random((spec.T, spec.n_groups)) < spec.membership_prob).astype(float)
    counts = member.sum(axis=1, keepdims=True)
    mean_bias = np.divide(member @ bias, counts, out=np.zeros((spec.T, spec.dim)), where=counts > 0)
    cost = np.clip(mean_bias + rng.uniform(-spec.noise, spec.noise, size=(spec.T, spec.dim)), -1.0, 1.0)
    if spec.nonnegative:
        cost = (cost + 1.0) / 2.0
    groups = [f"group{i}" for i in range(spec.n_groups)] + [ALWAYS_ON]
    activity = np.hstack([member, np.ones((spec.T, 1))])
    columns = {f"group{i}": member[:, i] for i in range(spec.n_groups)}
    return Rounds(np.zeros((spec.T, 0)), activity, cost, groups, columns)
