"""Best-in-hindsight benchmarks, the plain online-ridge baseline, and the
ledgers, curves and summary tables built from them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .core import ContractError, Rounds

SUMMARY_COLUMNS = [
    "group",
    "size",
    "baseline_regret_mean",
    "baseline_regret_std",
    "alg_regret_mean",
    "alg_regret_std",
    "benchmark_loss",
]
CURVE_COLUMNS = ["round", "group", "frac_of_group_seen", "alg_regret", "baseline_regret"]


@dataclass
class BenchmarkModel:
    theta: np.ndarray
    loss: float


@dataclass
class FinitePolicySet:
    policies: np.ndarray

    def __post_init__(self):
        self.policies = np.atleast_2d(np.asarray(self.policies, dtype=float))
        if len(self.policies) == 0:
            raise ContractError("policy set is empty")

    def __len__(self) -> int:
        return len(self.policies)


@dataclass
class RegretLedger:
    """Per-round losses of one run, with per-subsequence views.

    ``alg_loss`` holds the played loss per round (raw scale, used for regret);
    cumulative series are ``cumsum(activity * loss)`` per subsequence.
    """

    groups: list[str]
    activity: np.ndarray
    alg_loss: np.ndarray
    expert_loss: np.ndarray | None = None
    baseline_cum: np.ndarray | None = None
    benchmarks: list[BenchmarkModel] | None = None
    benchmark_cum: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.activity = np.asarray(self.activity, dtype=float)
        self.alg_loss = np.asarray(self.alg_loss, dtype=float)
        if len(self.alg_loss) != len(self.activity):
            raise ContractError("loss series length differs from number of rounds")

    @property
    def T(self) -> int:
        return len(self.activity)

    @property
    def size(self) -> np.ndarray:
        return self.activity.sum(axis=0)

    @property
    def alg_cum(self) -> np.ndarray:
        return np.cumsum(self.activity * self.alg_loss[:, None], axis=0)

    def _last(self, cum: np.ndarray | None) -> np.ndarray:
        if cum is None:
            raise ContractError("series not attached")
        if len(cum) == 0:
            return np.zeros(len(self.groups))
        return cum[-1]

    @property
    def alg_total(self) -> np.ndarray:
        return self._last(self.alg_cum)

    @property
    def baseline_total(self) -> np.ndarray:
        return self._last(self.baseline_cum)

    @property
    def benchmark_loss(self) -> np.ndarray:
        if self.benchmarks is None:
            raise ContractError("benchmarks not attached")
        return np.array([b.loss for b in self.benchmarks])

    def alg_regret(self) -> np.ndarray:
        return self.alg_total - self.benchmark_loss

    def baseline_regret(self) -> np.ndarray:
        return self.baseline_total - self.benchmark_loss

    def summary(self) -> "LedgerSummary":
        return LedgerSummary(
            list(self.groups), self.size, self.alg_total, self.baseline_total, self.benchmark_loss
        )

    def attach_benchmarks(self, models: list[BenchmarkModel], round_losses: np.ndarray) -> None:
        """``round_losses[t, k]`` is benchmark ``k``'s loss on round ``t``."""
        if len(models) != len(self.groups):
            raise ContractError("one benchmark per group required")
        self.benchmarks = models
        self.benchmark_cum = np.cumsum(self.activity * round_losses, axis=0)

    def curve_rows(self, points: int = 200) -> list[tuple]:
        """Regret curves sampled at ``points`` evenly spaced fractions of each group."""
        if self.benchmark_cum is None or self.baseline_cum is None:
            raise ContractError("baseline and benchmarks must be attached before curves")
        alg = self.alg_cum
        rows = []
        for k, g in enumerate(self.groups):
            idx = np.flatnonzero(self.activity[:, k] > 0)
            n = len(idx)
            if n == 0:
                continue
            mass = np.cumsum(self.activity[idx, k])
            picks = np.unique(np.ceil(np.arange(1, points + 1) * n / points).astype(int)) - 1
            for j in picks:
                t = idx[j]
                rows.append((
                    int(t) + 1,
                    g,
                    float(mass[j] / mass[-1]),
                    float(alg[t, k] - self.benchmark_cum[t, k]),
                    float(self.baseline_cum[t, k] - self.benchmark_cum[t, k]),
                ))
        return rows


@dataclass
class LedgerSummary:
    """Final per-group totals of one run; what ``ledger.json`` stores."""

    groups: list[str]
    size: np.ndarray
    alg_total: np.ndarray
    baseline_total: np.ndarray
    benchmark_loss: np.ndarray

    def __post_init__(self):
        for name in ("size", "alg_total", "baseline_total", "benchmark_loss"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (len(self.groups),):
                raise ContractError(f"{name} must have one entry per group")
            setattr(self, name, arr)

    def alg_regret(self) -> np.ndarray:
        return self.alg_total - self.benchmark_loss

    def baseline_regret(self) -> np.ndarray:
        return self.baseline_total - self.benchmark_loss

    def to_dict(self) -> dict:
        return {
            "groups": list(self.groups),
            "size": self.size.tolist(),
            "alg_total": self.alg_total.tolist(),
            "baseline_total": self.baseline_total.tolist(),
            "benchmark_loss": self.benchmark_loss.tolist(),
            "alg_regret": self.alg_regret().tolist(),
            "baseline_regret": self.baseline_regret().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LedgerSummary":
        try:
            return cls(list(d["groups"]), d["size"], d["alg_total"], d["baseline_total"], d["benchmark_loss"])
        except (KeyError, TypeError) as exc:
            raise ContractError(f"malformed ledger record: {exc}") from exc


# ---------------------------------------------------------------- benchmarks


def best_linear_hindsight(rounds: Rounds, subsequence: int) -> BenchmarkModel:
    """Unregularized least squares on the subsequence (minimum-norm solution),
    scored with raw, unclipped predictions."""
    if not rounds.is_regression:
        raise ContractError("best_linear_hindsight needs regression rounds")
    w = rounds.activity[:, subsequence]
    on = w > 0
    if not on.any():
        return BenchmarkModel(np.zeros(rounds.dim), 0.0)
    X = rounds.contexts[on]
    y = rounds.outcomes[on]
    sw = np.sqrt(w[on])
    theta = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)[0]
    resid = X @ theta - y
    return BenchmarkModel(theta, float(np.sum(w[on] * resid * resid)))


def best_action_hindsight(rounds: Rounds, subsequence: int, oracle) -> BenchmarkModel:
    if rounds.is_regression:
        raise ContractError("best_action_hindsight needs cost-vector rounds")
    w = rounds.activity[:, subsequence]
    total = w @ rounds.outcomes if len(rounds) else np.zeros(oracle.dim)
    action = oracle(total)
    return BenchmarkModel(action, float(action @ total))


def benchmark_round_losses(rounds: Rounds, models: Sequence[BenchmarkModel]) -> np.ndarray:
    """``(T, K)`` per-round losses of each subsequence's fixed benchmark."""
    thetas = np.stack([m.theta for m in models], axis=1)
    if rounds.is_regression:
        return (rounds.contexts @ thetas - rounds.outcomes[:, None]) ** 2
    return rounds.outcomes @ thetas


def benchmarks_for(rounds: Rounds, oracle=None) -> list[BenchmarkModel]:
    K = len(rounds.groups)
    if rounds.is_regression:
        return [best_linear_hindsight(rounds, k) for k in range(K)]
    return [best_action_hindsight(rounds, k, oracle) for k in range(K)]


def enumerate_best(policies: FinitePolicySet, rounds: Rounds, subsequence: int, clip: bool = True) -> BenchmarkModel:
    """Brute-force best policy of a finite class on one subsequence."""
    w = rounds.activity[:, subsequence]
    preds = rounds.contexts @ policies.policies.T
    if clip:
        preds = np.clip(preds, 0.0, 1.0)
    losses = w @ (preds - rounds.outcomes[:, None]) ** 2
    i = int(np.argmin(losses))
    return BenchmarkModel(policies.policies[i], float(losses[i]))


# ---------------------------------------------------------------- baseline


def baseline_predictions(rounds: Rounds, lam: float = 1.0) -> np.ndarray:
    """Raw one-step-ahead ridge predictions on the whole history."""
    if len(rounds) == 0:
        return np.zeros(0)
    X = np.ascontiguousarray(rounds.contexts, dtype=float)
    y = np.ascontiguousarray(rounds.outcomes, dtype=float)
    return kernels.run_baseline_vaw(X, y, float(lam))


def baseline_run(rounds: Rounds, lam: float = 1.0) -> np.ndarray:
    """``(T, K)`` cumulative per-subsequence loss of clipped online ridge."""
    if not rounds.is_regression:
        raise ContractError("baseline_run needs regression rounds")
    pred = np.clip(baseline_predictions(rounds, lam), 0.0, 1.0)
    loss = (pred - rounds.outcomes) ** 2
    return np.cumsum(rounds.activity * loss[:, None], axis=0)


def linopt_baseline_run(rounds: Rounds, oracle, bound_C: float, horizon: int, seed=None) -> np.ndarray:
    """Single FTPL learner on the whole sequence, scored per subsequence."""
    from .experts import FtplLearner

    learner = FtplLearner(oracle, bound_C, horizon, seed=seed)
    loss = np.empty(len(rounds))
    for t, c in enumerate(rounds.outcomes):
        a = learner.predict()
        loss[t] = float(a @ c)
        learner.update(None, c)
    return np.cumsum(rounds.activity * loss[:, None], axis=0)


# ---------------------------------------------------------------- tables


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return mean, std


def summary_table(ledgers: Sequence[RegretLedger | LedgerSummary]) -> list[dict]:
    if not ledgers:
        raise ContractError("need at least one ledger")
    groups = ledgers[0].groups
    for led in ledgers[1:]:
        if list(led.groups) != list(groups):
            raise ContractError(f"inconsistent group sets: {led.groups} vs {groups}")
    bench = ledgers[0].benchmark_loss
    for led in ledgers[1:]:
        if not np.allclose(led.benchmark_loss, bench, rtol=1e-9, atol=1e-12):
            raise ContractError("benchmark losses differ across seeds for the same data")
    base = np.array([led.baseline_regret() for led in ledgers])
    alg = np.array([led.alg_regret() for led in ledgers])
    rows = []
    for k, g in enumerate(groups):
        bm, bs = _mean_std(base[:, k])
        am, as_ = _mean_std(alg[:, k])
        rows.append({
            "group": g,
            "size": float(ledgers[0].size[k]),
            "baseline_regret_mean": bm,
            "baseline_regret_std": bs,
            "alg_regret_mean": am,
            "alg_regret_std": as_,
            "benchmark_loss": float(bench[k]),
        })
    return rows


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return format(v, ".12g")


def csv_text(header_comment: str | None, columns: list[str], rows) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            row = [row[c] for c in columns]
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_summary_csv(rows: list[dict], path, header_comment: str | None = None) -> None:
    Path(path).write_text(csv_text(header_comment, SUMMARY_COLUMNS, rows))


def write_curve_csv(ledger: RegretLedger, path, points: int = 200, header_comment: str | None = None) -> None:
    Path(path).write_text(csv_text(header_comment, CURVE_COLUMNS, ledger.curve_rows(points)))


def read_csv_rows(path) -> list[dict]:
    """Rows of a CSV written above, skipping ``#`` comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def vaw_rate_denominator(dim: int, size: float, n_groups: int, theta_sq_norm: float) -> float:
    """``d ln(1 + T_g) + sqrt(T_g ln |G|) + ||theta||^2``."""
    return dim * math.log1p(size) + math.sqrt(size * math.log(n_groups)) + theta_sq_norm
