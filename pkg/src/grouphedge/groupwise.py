"""Groupwise (subsequence) regret via one external-regret learner per subsequence
aggregated by AdaNormalHedge.

Each round every sub-learner proposes; the hedge forms a distribution over
the *active* sub-learners and either samples one proposal (``mode="sample"``)
or plays the probability-weighted average (``mode="mix"``).  The hedge is
charged with every sub-learner's loss, and only active sub-learners are
updated with the round's outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import kernels
from .core import (
    ContractError,
    LossSpec,
    NoActiveExpert,
    ProtocolError,
    Rounds,
    clip_unit,
)
from .eval import RegretLedger
from .experts import FtplLearner, VawLearner
from .hedge import AdaNormalHedge, sample_index

MODES = ("sample", "mix")


@dataclass
class RoundTrace:
    round_index: int
    activity: np.ndarray
    proposals: list
    distribution: np.ndarray
    chosen: int | None
    prediction: Any
    expert_losses: np.ndarray = None
    expert_raw_losses: np.ndarray = None
    incurred_loss: float = None
    incurred_raw_loss: float = None


class GroupwiseLearner:
    def __init__(
        self,
        sub_learners: Sequence,
        mode: str = "sample",
        seed=None,
        loss: LossSpec | None = None,
        priors=None,
        groups: Sequence[str] | None = None,
    ):
        if not sub_learners:
            raise ContractError("need at least one sub-learner")
        if mode not in MODES:
            raise ContractError(f"mode must be one of {MODES}, got {mode!r}")
        self.sub_learners = list(sub_learners)
        self.mode = mode
        self.loss = loss or LossSpec()
        self.hedge = AdaNormalHedge(len(self.sub_learners), priors)
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        self.groups = list(groups) if groups is not None else [f"g{i}" for i in range(self.K)]
        if len(self.groups) != self.K:
            raise ContractError("one group name per sub-learner required")
        self.t = 0
        self._pending: RoundTrace | None = None

    @classmethod
    def with_vaw(cls, groups: Sequence[str], dim: int, lam: float = 1.0, variant: str = "vaw",
                 **kw) -> "GroupwiseLearner":
        return cls([VawLearner(dim, lam, variant) for _ in groups], groups=groups, **kw)

    @classmethod
    def with_ftpl(cls, groups: Sequence[str], oracle, bound_C: float, horizon: int,
                  seed=None, epsilon: float | None = None, **kw) -> "GroupwiseLearner":
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        children = root.spawn(len(groups) + 1)
        subs = [FtplLearner(oracle, bound_C, horizon, seed=s, epsilon=epsilon) for s in children[1:]]
        # normalization: |<a, c>| <= ||c||_1 for a in [0, 1]^d
        loss = LossSpec("linear", bound_C)
        return cls(subs, groups=groups, seed=children[0], loss=loss, **kw)

    @property
    def K(self) -> int:
        return len(self.sub_learners)

    def _score(self, prediction, outcome) -> tuple[float, float]:
        return self.loss.evaluate(prediction, outcome)

    def _prepare(self, proposal):
        if self.loss.kind == "squared":
            return clip_unit(float(proposal))
        return np.asarray(proposal, dtype=float)

    def predict(self, x, activity) -> tuple[Any, RoundTrace]:
        if self._pending is not None:
            raise ProtocolError(f"round {self._pending.round_index} has not been updated yet")
        activity = np.asarray(activity, dtype=float)
        if activity.shape != (self.K,):
            raise ContractError(f"activity length {activity.shape} != {self.K}")
        if not np.any(activity > 0):
            raise NoActiveExpert(self.t)
        proposals = [self._prepare(sub.predict(x)) for sub in self.sub_learners]
        p = self.hedge.distribution(activity)
        if self.mode == "sample":
            k = sample_index(p, self.rng.random())
            prediction = proposals[k]
        else:
            k = None
            if self.loss.kind == "squared":
                prediction = clip_unit(float(p @ np.array(proposals)))
            else:
                prediction = p @ np.array(proposals)
        trace = RoundTrace(self.t, activity, proposals, p, k, prediction)
        self._pending = trace
        return prediction, trace

    def update(self, trace: RoundTrace, x, outcome) -> None:
        if trace is not self._pending:
            raise ProtocolError("trace does not belong to the pending round")
        raw = np.empty(self.K)
        bounded = np.empty(self.K)
        for i, z in enumerate(trace.proposals):
            raw[i], bounded[i] = self._score(z, outcome)
        trace.expert_raw_losses, trace.expert_losses = raw, bounded
        trace.incurred_raw_loss, trace.incurred_loss = self._score(trace.prediction, outcome)
        self.hedge.update(trace.activity, bounded, trace.incurred_loss)
        for w, sub in zip(trace.activity, self.sub_learners):
            if w > 0:
                sub.update(x, outcome, float(w))
        self._pending = None
        self.t += 1

    def fast_path_ok(self) -> bool:
        subs = self.sub_learners
        return (
            self.loss.kind == "squared"
            and all(type(s) is VawLearner for s in subs)
            and len({(s.dim, s.variant) for s in subs}) == 1
        )


def gw_predict(learner: GroupwiseLearner, x, activity):
    return learner.predict(x, activity)


def gw_update(learner: GroupwiseLearner, trace: RoundTrace, x, outcome) -> GroupwiseLearner:
    learner.update(trace, x, outcome)
    return learner


def _attach_round(exc: Exception, t: int) -> Exception:
    exc.round_index = t
    if exc.args and isinstance(exc.args[0], str) and "round" not in exc.args[0]:
        exc.args = (f"{exc.args[0]} (round {t})",) + exc.args[1:]
    return exc


def run_sequence(learner: GroupwiseLearner, rounds: Rounds, fast: bool | None = None) -> RegretLedger:
    """Drive predict/update over ``rounds`` and return the loss ledger.

    ``fast=None`` uses the fused kernel whenever every sub-learner is a VAW
    learner with squared loss; ``fast=False`` forces the per-object loop.
    """
    if rounds.activity.shape[1] != learner.K:
        raise ContractError(f"rounds carry {rounds.activity.shape[1]} activities, learner has {learner.K}")
    use_fast = learner.fast_path_ok() if fast is None else fast
    if use_fast and not learner.fast_path_ok():
        raise ContractError("fast path requires VAW sub-learners with squared loss")
    meta = {"mode": learner.mode, "seed": learner.seed}
    if len(rounds) == 0:
        return RegretLedger(list(rounds.groups), rounds.activity, np.zeros(0), np.zeros((0, learner.K)), metadata=meta)
    if use_fast:
        played, loss, expert_loss, chosen = _run_fast(learner, rounds)
    else:
        played, loss, expert_loss, chosen = _run_generic(learner, rounds)
    ledger = RegretLedger(list(rounds.groups), rounds.activity, loss, expert_loss, metadata=meta)
    ledger.played = played
    ledger.chosen = chosen
    return ledger


def _run_generic(learner, rounds):
    T = len(rounds)
    played = [None] * T
    loss = np.empty(T)
    expert_loss = np.empty((T, learner.K))
    chosen = np.full(T, -1, dtype=np.int64)
    for t in range(T):
        x = rounds.contexts[t]
        y = rounds.outcomes[t]
        try:
            pred, trace = learner.predict(x, rounds.activity[t])
            learner.update(trace, x, y)
        except NoActiveExpert:
            raise NoActiveExpert(t) from None
        except Exception as exc:
            learner._pending = None
            raise _attach_round(exc, t)
        played[t] = pred
        loss[t] = trace.incurred_raw_loss
        expert_loss[t] = trace.expert_raw_losses
        if trace.chosen is not None:
            chosen[t] = trace.chosen
    if learner.loss.kind == "squared":
        played = np.array(played, dtype=float)
    else:
        played = np.array(played)
    return played, loss, expert_loss, chosen


def _run_fast(learner, rounds):
    X = np.ascontiguousarray(rounds.contexts, dtype=float)
    act = np.ascontiguousarray(rounds.activity, dtype=float)
    y = np.ascontiguousarray(rounds.outcomes, dtype=float)
    dead = np.flatnonzero(~np.any(act > 0, axis=1))
    if len(dead):
        raise NoActiveExpert(int(dead[0]))
    bad = np.flatnonzero((y < 0) | (y > 1) | ~np.isfinite(y))
    if len(bad):
        raise _attach_round(ContractError(f"label {y[bad[0]]!r} outside [0, 1]"), int(bad[0]))
    if X.shape[1] != learner.sub_learners[0].dim:
        raise ContractError(f"context dimension {X.shape[1]} != learner dimension")
    a_inv = np.stack([s.state.a_inv for s in learner.sub_learners])
    b = np.stack([s.state.b for s in learner.sub_learners])
    R = learner.hedge.R.copy()
    C = learner.hedge.C.copy()
    mix = learner.mode == "mix"
    uniforms = np.zeros(len(y)) if mix else learner.rng.random(len(y))
    fold = learner.sub_learners[0].variant == "vaw"
    played, loss, expert_loss, chosen = kernels.run_groupwise_vaw(
        X, act, y, a_inv, b, R, C, np.ascontiguousarray(learner.hedge.log_prior), mix, uniforms, fold
    )
    for k, s in enumerate(learner.sub_learners):
        s.state.a_inv = a_inv[k]
        s.state.b = b[k]
    learner.hedge.R = R
    learner.hedge.C = C
    learner.t += len(y)
    return played, loss, expert_loss, chosen
