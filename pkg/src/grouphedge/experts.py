"""External-regret learners used as meta-experts.

* :class:`VawLearner` -- Vovk-Azoury-Warmuth online ridge regression, kept as
  an inverse second-moment matrix updated by Sherman-Morrison.
* :class:`FtplLearner` -- Follow the Perturbed Leader over an action set given
  by a linear-minimization oracle (:class:`Hypercube` or :class:`Dag`).
* :class:`ExponentialWeights` -- Hedge over a finite set of linear policies;
  used for small-instance checks against brute force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ContractError, InvariantViolation, clip_unit


# ---------------------------------------------------------------- VAW / ridge


@dataclass
class VawState:
    dim: int
    lam: float = 1.0
    a_inv: np.ndarray = None
    b: np.ndarray = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ContractError("ridge parameter must be positive")
        if self.a_inv is None:
            self.a_inv = np.eye(self.dim) / self.lam
        if self.b is None:
            self.b = np.zeros(self.dim)

    def copy(self) -> "VawState":
        return VawState(self.dim, self.lam, self.a_inv.copy(), self.b.copy())


def _as_context(state: VawState, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (state.dim,):
        raise ContractError(f"context has shape {x.shape}, expected ({state.dim},)")
    return x


def vaw_predict(state: VawState, x) -> float:
    """``b^T (A + x x^T)^{-1} x`` without touching ``state``."""
    x = _as_context(state, x)
    u = state.a_inv @ x
    return float(state.b @ u) / (1.0 + float(x @ u))


def ridge_predict(state: VawState, x) -> float:
    """One-step-ahead ridge ``b^T A^{-1} x``: the same state, current x not folded in."""
    x = _as_context(state, x)
    return float(state.b @ (state.a_inv @ x))


def vaw_update(state: VawState, x, y: float, weight: float = 1.0) -> VawState:
    """In-place ``A += w x x^T``, ``b += w y x``; returns ``state``."""
    x = _as_context(state, x)
    if not 0.0 <= y <= 1.0:
        raise ContractError(f"label {y!r} outside [0, 1]")
    u = state.a_inv @ x
    denom = 1.0 + weight * float(x @ u)
    if not denom > 0:
        raise InvariantViolation(f"Sherman-Morrison denominator {denom} <= 0")
    state.a_inv -= (weight / denom) * np.outer(u, u)
    state.b += (weight * y) * x
    return state


def ridge_batch(X, Y, lam: float) -> np.ndarray:
    """``argmin ||X theta - Y||^2 + lam ||theta||^2``; minimum-norm when ``lam == 0``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(len(Y), -1) if len(Y) else X.reshape(0, 0)
    if len(X) == 0:
        return np.zeros(X.shape[1] if X.ndim == 2 else 0)
    if lam < 0:
        raise ContractError("lam must be nonnegative")
    if lam == 0:
        return np.linalg.pinv(X) @ Y
    d = X.shape[1]
    return np.linalg.solve(X.T @ X + lam * np.eye(d), X.T @ Y)


VARIANTS = ("vaw", "ridge")


class VawLearner:
    """Online ridge learner.  ``variant="vaw"`` folds the current context into
    the second-moment matrix before predicting; ``"ridge"`` predicts from the
    history only.  Both share the same state and update."""

    def __init__(self, dim: int, lam: float = 1.0, variant: str = "vaw"):
        if variant not in VARIANTS:
            raise ContractError(f"variant must be one of {VARIANTS}, got {variant!r}")
        self.state = VawState(dim, lam)
        self.variant = variant

    @property
    def dim(self) -> int:
        return self.state.dim

    def predict(self, x) -> float:
        if self.variant == "ridge":
            return ridge_predict(self.state, x)
        return vaw_predict(self.state, x)

    def update(self, x, outcome: float, weight: float = 1.0) -> None:
        vaw_update(self.state, x, outcome, weight)


# ---------------------------------------------------------------- oracles


class Hypercube:
    """Action set ``{0, 1}^d``; ties resolve to 0."""

    kind = "hypercube"

    def __init__(self, dim: int):
        if dim < 1:
            raise ContractError("dimension must be positive")
        self.dim = dim

    @property
    def diameter(self) -> float:
        return float(self.dim)

    def __call__(self, cost) -> np.ndarray:
        cost = np.asarray(cost, dtype=float)
        if cost.shape != (self.dim,):
            raise ContractError(f"cost has shape {cost.shape}, expected ({self.dim},)")
        return (cost < 0).astype(float)


class Singleton:
    """A one-action set."""

    kind = "singleton"

    def __init__(self, action):
        self.action = np.asarray(action, dtype=float)
        self.dim = len(self.action)

    @property
    def diameter(self) -> float:
        return 0.0

    def __call__(self, cost) -> np.ndarray:
        return self.action.copy()


@dataclass
class Dag:
    """Directed acyclic graph whose source-to-sink paths are the actions.

    Node 0 is the source and the largest node id is the sink.  Actions are
    edge-indicator vectors indexed by position in ``edges``.
    """

    edges: list[tuple[int, int]]
    n_nodes: int = field(default=0)

    kind = "dag_shortest_path"

    def __post_init__(self):
        self.edges = [(int(s), int(t)) for s, t in self.edges]
        if not self.edges:
            raise ContractError("graph has no edges")
        top = max(max(e) for e in self.edges)
        self.n_nodes = max(self.n_nodes, top + 1)
        if min(min(e) for e in self.edges) < 0:
            raise ContractError("node ids must be nonnegative")
        self.order = self._topological_order()
        self.out_edges: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, (s, _) in enumerate(self.edges):
            self.out_edges[s].append(i)
        self._longest = None

    @classmethod
    def parse(cls, text: str) -> "Dag":
        edges = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ContractError(f"line {lineno}: expected 'src dst', got {line!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ContractError(f"line {lineno}: node ids must be integers") from None
        return cls(edges)

    @classmethod
    def load(cls, path) -> "Dag":
        return cls.parse(Path(path).read_text())

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return self.n_nodes - 1

    @property
    def dim(self) -> int:
        return len(self.edges)

    @property
    def diameter(self) -> float:
        """Upper bound on the l1 distance between two path indicators."""
        if self._longest is None:
            reach = self._reaches_sink()
            best = [-math.inf] * self.n_nodes
            best[self.sink] = 0
            for v in reversed(self.order):
                for i in self.out_edges[v]:
                    w = self.edges[i][1]
                    if reach[w]:
                        best[v] = max(best[v], best[w] + 1)
            self._longest = best[self.source]
        return 2.0 * self._longest

    def _topological_order(self) -> list[int]:
        indeg = [0] * self.n_nodes
        succ: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for s, t in self.edges:
            succ[s].append(t)
            indeg[t] += 1
        stack = [v for v in range(self.n_nodes) if indeg[v] == 0][::-1]
        order = []
        while stack:
            v = stack.pop()
            order.append(v)
            for w in succ[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    stack.append(w)
        if len(order) != self.n_nodes:
            raise ContractError("graph contains a cycle")
        return order

    def _reaches_sink(self) -> list[bool]:
        reach = [False] * self.n_nodes
        reach[self.sink] = True
        for v in reversed(self.order):
            for i in self.out_edges[v]:
                if reach[self.edges[i][1]]:
                    reach[v] = True
        return reach

    def __call__(self, cost) -> np.ndarray:
        return dag_shortest_path(self, cost)


def dag_shortest_path(graph: Dag, cost) -> np.ndarray:
    """Indicator of a min-cost source-sink path.

    Dynamic program from the sink backwards in reverse topological order.  Ties
    go to the path whose edge-index sequence is lexicographically smallest.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.shape != (graph.dim,):
        raise ContractError(f"cost has shape {cost.shape}, expected ({graph.dim},)")
    best: list[tuple[float, tuple[int, ...]] | None] = [None] * graph.n_nodes
    best[graph.sink] = (0.0, ())
    for v in reversed(graph.order):
        if v == graph.sink:
            continue
        for i in graph.out_edges[v]:
            nxt = best[graph.edges[i][1]]
            if nxt is None:
                continue
            cand = (float(cost[i]) + nxt[0], (i,) + nxt[1])
            if best[v] is None or cand < best[v]:
                best[v] = cand
    if best[graph.source] is None:
        raise ContractError("sink unreachable from source")
    action = np.zeros(graph.dim)
    action[list(best[graph.source][1])] = 1.0
    return action


# ---------------------------------------------------------------- FTPL


@dataclass
class FtplState:
    cum_cost: np.ndarray
    epsilon: float
    bound_A: float
    bound_C: float
    oracle: object

    def __post_init__(self):
        self.cum_cost = np.asarray(self.cum_cost, dtype=float)
        if not self.epsilon > 0:
            raise ContractError("epsilon must be positive")
        if self.bound_C <= 0 or self.bound_A < 0:
            raise ContractError("bounds must be positive")


def ftpl_epsilon(bound_A: float, bound_C: float, horizon: int) -> float:
    """Perturbation scale ``sqrt(A / (C^2 T))``."""
    if horizon < 1:
        raise ContractError("horizon must be at least 1")
    return math.sqrt(max(bound_A, 1e-12) / (bound_C * bound_C * horizon))


def ftpl_predict(state: FtplState, rng: np.random.Generator) -> np.ndarray:
    p = rng.uniform(0.0, 1.0 / state.epsilon, size=state.cum_cost.shape)
    return state.oracle(state.cum_cost - p)


def ftpl_update(state: FtplState, cost, weight: float = 1.0) -> FtplState:
    cost = np.asarray(cost, dtype=float)
    if cost.shape != state.cum_cost.shape:
        raise ContractError(f"cost has shape {cost.shape}, expected {state.cum_cost.shape}")
    norm = float(np.abs(cost).sum())
    if norm > state.bound_C * (1 + 1e-12):
        raise ContractError(f"cost l1 norm {norm} exceeds bound {state.bound_C}")
    state.cum_cost += weight * cost
    return state


class FtplLearner:
    def __init__(self, oracle, bound_C: float, horizon: int, seed=None, epsilon: float | None = None):
        bound_A = oracle.diameter
        if epsilon is None:
            epsilon = ftpl_epsilon(bound_A, bound_C, horizon)
        self.state = FtplState(np.zeros(oracle.dim), epsilon, bound_A, bound_C, oracle)
        self.rng = np.random.default_rng(seed)

    def predict(self, x=None) -> np.ndarray:
        return ftpl_predict(self.state, self.rng)

    def update(self, x, outcome, weight: float = 1.0) -> None:
        ftpl_update(self.state, outcome, weight)


# ---------------------------------------------------------------- finite class


class ExponentialWeights:
    """Hedge over fixed linear policies ``theta_h``; proposes the weighted mean
    of their clipped predictions (squared loss is convex, so this is no worse
    than sampling in expectation)."""

    def __init__(self, policies, horizon: int, eta: float | None = None):
        self.policies = np.atleast_2d(np.asarray(policies, dtype=float))
        n = len(self.policies)
        if n == 0:
            raise ContractError("policy set is empty")
        self.eta = eta if eta is not None else math.sqrt(8.0 * math.log(max(n, 2)) / max(horizon, 1))
        self.cum_loss = np.zeros(n)

    def weights(self) -> np.ndarray:
        z = -self.eta * (self.cum_loss - self.cum_loss.min())
        w = np.exp(z)
        return w / w.sum()

    def policy_predictions(self, x) -> np.ndarray:
        return np.clip(self.policies @ np.asarray(x, dtype=float), 0.0, 1.0)

    def predict(self, x) -> float:
        return clip_unit(float(self.weights() @ self.policy_predictions(x)))

    def update(self, x, outcome: float, weight: float = 1.0) -> None:
        self.cum_loss += weight * (self.policy_predictions(x) - outcome) ** 2
