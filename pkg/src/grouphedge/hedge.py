"""AdaNormalHedge over meta-experts with time-selection (activity) weights.

Potential ``Phi(R, C) = exp(max(R, 0)**2 / (3 C))`` with ``Phi(., 0) = 1`` and
weight ``w(R, C) = (Phi(R + 1, C + 1) - Phi(R - 1, C + 1)) / 2``.  Distributions
are formed in log space so that large cumulative regrets do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ContractError, NoActiveExpert

LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class PotentialRecord:
    R: float = 0.0
    C: float = 0.0


def potential(R: float, C: float) -> float:
    if C < 0:
        raise ContractError(f"C must be nonnegative, got {C!r}")
    if C == 0:
        return 1.0
    r = max(R, 0.0)
    try:
        return math.exp(r * r / (3.0 * C))
    except OverflowError:
        return math.inf


def raw_weight(record: PotentialRecord) -> float:
    """``(Phi(R+1, C+1) - Phi(R-1, C+1)) / 2``; ``inf`` if it overflows a double."""
    if record.C < 0:
        raise ContractError(f"C must be nonnegative, got {record.C!r}")
    lw = float(log_weights(np.array([record.R]), np.array([record.C]))[0])
    try:
        return math.exp(lw)
    except OverflowError:
        return math.inf


def log_weights(R: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``log w(R, C)`` elementwise; ``-inf`` where the weight is exactly zero."""
    R = np.asarray(R, dtype=float)
    C = np.asarray(C, dtype=float)
    denom = 3.0 * (C + 1.0)
    up = np.maximum(R + 1.0, 0.0)
    down = np.maximum(R - 1.0, 0.0)
    a = up * up / denom
    b = down * down / denom
    out = np.full(R.shape, -np.inf)
    pos = a > 0
    out[pos] = a[pos] + np.log(-np.expm1(b[pos] - a[pos])) + LOG_HALF
    return out


def _normalize(activity: np.ndarray, log_prior: np.ndarray, R: np.ndarray, C: np.ndarray) -> np.ndarray:
    active = activity > 0
    if not active.any():
        raise NoActiveExpert()
    lw = np.full(activity.shape, -np.inf)
    with np.errstate(divide="ignore"):
        lw[active] = log_weights(R[active], C[active]) + log_prior[active] + np.log(activity[active])
    finite = np.isfinite(lw)
    if not finite.any():
        # every active weight is zero: fall back to the prior over active experts
        with np.errstate(divide="ignore"):
            lw = np.where(active, log_prior + np.log(np.where(active, activity, 1.0)), -np.inf)
        finite = np.isfinite(lw)
        if not finite.any():
            raise NoActiveExpert()
    p = np.zeros(activity.shape)
    p[finite] = np.exp(lw[finite] - lw[finite].max())
    return p / p.sum()


def distribution(records, activity, priors=None) -> np.ndarray:
    """Probability vector over meta-experts, zero on sleeping ones."""
    activity = np.asarray(activity, dtype=float)
    if len(records) != len(activity):
        raise ContractError("records and activity lengths differ")
    if priors is None:
        priors = np.full(len(activity), 1.0 / max(len(activity), 1))
    priors = np.asarray(priors, dtype=float)
    if priors.shape != activity.shape or np.any(priors < 0):
        raise ContractError("priors must be nonnegative with one entry per meta-expert")
    R = np.array([r.R for r in records], dtype=float)
    C = np.array([r.C for r in records], dtype=float)
    with np.errstate(divide="ignore"):
        return _normalize(activity, np.log(priors), R, C)


# a probability-weighted mean of losses in [0, 1] can land a few ulps outside
LOSS_SLACK = 1e-12


def _check_losses(expert_losses: np.ndarray, incurred_loss: float) -> None:
    if np.any(expert_losses < -LOSS_SLACK) or np.any(expert_losses > 1 + LOSS_SLACK):
        raise ContractError(f"expert losses outside [0, 1]: {expert_losses}")
    if not -LOSS_SLACK <= incurred_loss <= 1.0 + LOSS_SLACK:
        raise ContractError(f"incurred loss {incurred_loss!r} outside [0, 1]")


def hedge_update(records, activity, expert_losses, incurred_loss: float) -> list[PotentialRecord]:
    activity = np.asarray(activity, dtype=float)
    expert_losses = np.asarray(expert_losses, dtype=float)
    if not (len(records) == len(activity) == len(expert_losses)):
        raise ContractError("records, activity and losses lengths differ")
    _check_losses(expert_losses, incurred_loss)
    out = []
    for rec, a, loss in zip(records, activity, expert_losses):
        if a == 0:
            out.append(rec)
            continue
        r = a * (incurred_loss - loss)
        out.append(PotentialRecord(rec.R + r, rec.C + abs(r)))
    return out


class AdaNormalHedge:
    """Stateful array form of the functions above (one instance per run)."""

    def __init__(self, n: int, priors=None):
        if n < 1:
            raise ContractError("need at least one meta-expert")
        self.R = np.zeros(n)
        self.C = np.zeros(n)
        if priors is None:
            priors = np.full(n, 1.0 / n)
        priors = np.asarray(priors, dtype=float)
        if priors.shape != (n,) or np.any(priors < 0):
            raise ContractError("priors must be nonnegative with one entry per meta-expert")
        self.priors = priors
        with np.errstate(divide="ignore"):
            self.log_prior = np.log(priors)

    def __len__(self) -> int:
        return len(self.R)

    @property
    def records(self) -> list[PotentialRecord]:
        return [PotentialRecord(float(r), float(c)) for r, c in zip(self.R, self.C)]

    def distribution(self, activity) -> np.ndarray:
        activity = np.asarray(activity, dtype=float)
        if activity.shape != self.R.shape:
            raise ContractError(f"activity length {activity.shape} != {self.R.shape}")
        return _normalize(activity, self.log_prior, self.R, self.C)

    def update(self, activity, expert_losses, incurred_loss: float) -> None:
        activity = np.asarray(activity, dtype=float)
        expert_losses = np.asarray(expert_losses, dtype=float)
        _check_losses(expert_losses, incurred_loss)
        r = activity * (incurred_loss - expert_losses)
        self.R += r
        self.C += np.abs(r)


def sample_index(probabilities: np.ndarray, u: float) -> int:
    """Inverse-CDF draw; ``u`` uniform on [0, 1)."""
    cum = np.cumsum(probabilities)
    i = int(np.searchsorted(cum, u, side="right"))
    if i >= len(probabilities):
        i = int(np.flatnonzero(probabilities > 0)[-1])
    return i
