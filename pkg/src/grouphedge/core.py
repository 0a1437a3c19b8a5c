"""Shared domain types, losses and the learner contract."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Protocol, Sequence, runtime_checkable

import numpy as np


class ContractError(ValueError):
    """An argument violates an operation's precondition."""


class NoActiveExpert(ValueError):
    """A round has no active subsequence, so the hedge has nothing to play."""

    def __init__(self, round_index: int | None = None):
        self.round_index = round_index
        where = "" if round_index is None else f" at round {round_index}"
        super().__init__(f"no active meta-expert{where}")


class InvariantViolation(RuntimeError):
    """A numeric invariant failed during a run."""

    def __init__(self, message: str, round_index: int | None = None):
        self.round_index = round_index
        if round_index is not None:
            message = f"{message} (round {round_index})"
        super().__init__(message)


class ProtocolError(RuntimeError):
    """predict/update called out of order."""


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ContractError(f"{name}={value!r} outside [0, 1]")


def squared_loss(prediction: float, label: float) -> float:
    _check_unit("prediction", prediction)
    _check_unit("label", label)
    diff = prediction - label
    return diff * diff


def linear_loss(action, cost, normalization: float) -> tuple[float, float]:
    """Inner-product loss. Returns ``(raw, normalized)``.

    ``normalized`` is ``(raw + normalization) / (2 * normalization)`` and lies in
    [0, 1] whenever ``normalization`` bounds ``|<action, cost>|``.
    """
    a = np.asarray(action, dtype=float)
    c = np.asarray(cost, dtype=float)
    if a.shape != c.shape:
        raise ContractError(f"dimension mismatch: action {a.shape} vs cost {c.shape}")
    if not normalization > 0:
        raise ContractError(f"normalization must be positive, got {normalization!r}")
    raw = float(a @ c)
    return raw, (raw + normalization) / (2.0 * normalization)


def clip_unit(x: float) -> float:
    if not math.isfinite(x):
        raise ContractError(f"cannot clip non-finite value {x!r}")
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class LossSpec:
    kind: str = "squared"
    normalization: float = 1.0

    def __post_init__(self):
        if self.kind not in ("squared", "linear"):
            raise ContractError(f"unknown loss kind {self.kind!r}")
        if not self.normalization > 0:
            raise ContractError("normalization must be positive")

    def evaluate(self, prediction, outcome) -> tuple[float, float]:
        """``(raw, bounded)`` loss; the bounded one feeds the hedge."""
        if self.kind == "squared":
            value = squared_loss(prediction, outcome)
            return value, value
        raw, scaled = linear_loss(prediction, outcome, self.normalization)
        if not (0.0 <= scaled <= 1.0):
            raise InvariantViolation(
                f"normalized linear loss {scaled} outside [0, 1]; normalization too small"
            )
        return raw, scaled


@dataclass(frozen=True)
class Round:
    context: np.ndarray
    activity: np.ndarray
    outcome: Any


@dataclass
class Rounds:
    """Columnar sequence of rounds.

    ``outcomes`` is shape ``(T,)`` for regression labels or ``(T, n)`` for
    cost vectors.  ``columns`` keeps raw (pre-scaling) values per source column
    for ordering; ``groups`` names the activity columns.
    """

    contexts: np.ndarray
    activity: np.ndarray
    outcomes: np.ndarray
    groups: list[str]
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.contexts = np.asarray(self.contexts, dtype=float)
        self.activity = np.asarray(self.activity, dtype=float)
        self.outcomes = np.asarray(self.outcomes, dtype=float)
        T = len(self.activity)
        if self.contexts.ndim != 2 or len(self.contexts) != T or len(self.outcomes) != T:
            raise ContractError("contexts, activity and outcomes must have the same length")
        if self.activity.ndim != 2 or self.activity.shape[1] != len(self.groups):
            raise ContractError(
                f"activity width {self.activity.shape[1:]} != {len(self.groups)} groups"
            )
        if not np.all(np.isfinite(self.contexts)):
            raise ContractError("non-finite context entry")
        if np.any(self.activity < 0) or np.any(self.activity > 1):
            raise ContractError("activity entries must lie in [0, 1]")
        for name, col in self.columns.items():
            if len(col) != T:
                raise ContractError(f"column {name!r} has wrong length")

    @classmethod
    def from_list(cls, rounds: Sequence[Round], groups: Sequence[str] | None = None) -> "Rounds":
        if not rounds:
            raise ContractError("cannot infer dimensions from an empty list; build Rounds directly")
        K = len(rounds[0].activity)
        for t, r in enumerate(rounds):
            if len(r.activity) != K:
                raise ContractError(f"activity length {len(r.activity)} != {K} at round {t}")
        return cls(
            np.array([r.context for r in rounds], dtype=float),
            np.array([r.activity for r in rounds], dtype=float),
            np.array([r.outcome for r in rounds], dtype=float),
            list(groups) if groups is not None else [f"g{i}" for i in range(K)],
        )

    @classmethod
    def empty(cls, dim: int, groups: Sequence[str]) -> "Rounds":
        return cls(np.zeros((0, dim)), np.zeros((0, len(groups))), np.zeros(0), list(groups))

    @property
    def dim(self) -> int:
        return self.contexts.shape[1]

    @property
    def is_regression(self) -> bool:
        return self.outcomes.ndim == 1

    def __len__(self) -> int:
        return len(self.activity)

    def __getitem__(self, t: int) -> Round:
        return Round(self.contexts[t], self.activity[t], self.outcomes[t])

    def __iter__(self) -> Iterator[Round]:
        for t in range(len(self)):
            yield self[t]

    def take(self, index) -> "Rounds":
        index = np.asarray(index)
        return Rounds(
            self.contexts[index],
            self.activity[index],
            self.outcomes[index],
            list(self.groups),
            {k: v[index] for k, v in self.columns.items()},
            dict(self.meta),
        )


@runtime_checkable
class Learner(Protocol):
    """External-regret learner used as a meta-expert.

    ``predict`` must not change the learning state (a randomized learner may
    advance its own generator); ``update`` receives the round's outcome
    with an importance ``weight`` in (0, 1] (1 for binary activity).
    """

    def predict(self, x: np.ndarray) -> Any: ...

    def update(self, x: np.ndarray, outcome: Any, weight: float = 1.0) -> None: ...
