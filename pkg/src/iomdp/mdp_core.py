"""Finite constrained MDP model: validation, stationary distributions, JSON I/O.

The underlying controlled chain is described by per-action row-stochastic
matrices, reward/cost tables, a budget on the long-run average cost, and the
probability ``rho`` that the current state is observed at a given step.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyModel, NonStochasticRow, NotRecurrent, SingularSystem

ROW_SUM_TOL = 1e-9          # validation threshold for row-stochasticity
STATIONARY_RESIDUAL_TOL = 1e-10
EDGE_TOL = 1e-14            # below this, a transition is a structural zero
EXHAUSTIVE_POLICY_CAP = 10 ** 6
SAMPLED_POLICY_COUNT = 1000


@dataclass(frozen=True)
class FiniteMdp:
    """A finite constrained MDP with intermittent state observations.

    Attributes
    ----------
    P : ndarray, shape (n_actions, n_states, n_states)
        Row-stochastic transition matrix per action.
    r, c : ndarray, shape (n_states, n_actions)
        Immediate reward and cost tables.
    B : float
        Bound on the long-run average cost.
    rho : float
        Probability in (0, 1] of observing the state at each step.
    """

    n_states: int
    n_actions: int
    P: np.ndarray
    r: np.ndarray
    c: np.ndarray
    B: float
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if self.n_states < 1 or self.n_actions < 1:
            raise EmptyModel(
                f"need at least one state and one action, got "
                f"{self.n_states} states, {self.n_actions} actions"
            )
        shapes = {
            "P": (self.P.shape, (self.n_actions, self.n_states, self.n_states)),
            "r": (self.r.shape, (self.n_states, self.n_actions)),
            "c": (self.c.shape, (self.n_states, self.n_actions)),
        }
        for name, (got, want) in shapes.items():
            if got != want:
                raise ValueError(f"{name}: expected shape {want}, got {got}")
        if not (0.0 < self.rho <= 1.0):
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        for name, arr in (("P", self.P), ("r", self.r), ("c", self.c)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if not math.isfinite(self.B):
            raise ValueError(f"B must be finite, got {self.B}")

    def action_independent(self, tol: float = 1e-14) -> bool:
        """True when every per-action transition matrix coincides within tol."""
        return bool(np.all(np.abs(self.P - self.P[0]) <= tol))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a successful model validation."""

    method: str                    # "exhaustive" or "sampled"
    policies_checked: int
    max_row_sum_error: float
    recurrent: bool = True
    notes: tuple[str, ...] = field(default_factory=tuple)


def _check_stochastic(P: np.ndarray) -> float:
    """Raise NonStochasticRow on a bad row; return the worst row-sum error."""
    worst = 0.0
    for a in range(P.shape[0]):
        for s in range(P.shape[1]):
            row = P[a, s]
            if np.any(row < 0):
                j = int(np.argmin(row))
                raise NonStochasticRow(
                    f"P[{a}][{s}][{j}] = {row[j]} is negative"
                )
            err = abs(float(row.sum()) - 1.0)
            worst = max(worst, err)
            if err > ROW_SUM_TOL:
                raise NonStochasticRow(
                    f"P[{a}][{s}] sums to {row.sum():.12g}, expected 1"
                )
    return worst


def _strongly_connected(adj: list[list[int]]) -> bool:
    """True iff the digraph given as adjacency lists is strongly connected."""
    n = len(adj)
    if n == 0:
        return False

    def reaches_all(lists: list[list[int]]) -> bool:
        seen = [False] * n
        seen[0] = True
        stack = [0]
        count = 1
        while stack:
            u = stack.pop()
            for v in lists[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    stack.append(v)
        return count == n

    rev: list[list[int]] = [[] for _ in range(n)]
    for u, vs in enumerate(adj):
        for v in vs:
            rev[v].append(u)
    return reaches_all(adj) and reaches_all(rev)


def _policy_irreducible(P: np.ndarray, actions: tuple[int, ...]) -> bool:
    """Whether the chain induced by a deterministic policy is one closed class."""
    n = P.shape[1]
    adj = [
        [j for j in range(n) if P[actions[s], s, j] > EDGE_TOL]
        for s in range(n)
    ]
    return _strongly_connected(adj)


def validate_mdp(model: FiniteMdp) -> ValidationReport:
    """Check stochasticity of every P[a] and recurrence of the MDP.

    Recurrence is verified by enumerating every deterministic stationary
    policy (when there are at most 10^6 of them) and requiring the induced
    chain to be a single communicating class with no transient states.
    Above that cap, a sufficient condition is checked instead: the union
    graph over all actions must be strongly connected, plus spot checks on
    1000 sampled deterministic policies; the report is flagged "sampled".

    Raises
    ------
    EmptyModel, NonStochasticRow, NotRecurrent
    """
    if model.n_states < 1 or model.n_actions < 1:
        raise EmptyModel("model has no states or actions")
    worst = _check_stochastic(model.P)

    n, m = model.n_states, model.n_actions
    total_policies = m ** n
    if total_policies <= EXHAUSTIVE_POLICY_CAP:
        checked = 0
        for actions in itertools.product(range(m), repeat=n):
            checked += 1
            if not _policy_irreducible(model.P, actions):
                raise NotRecurrent(
                    f"deterministic policy {actions} does not induce a single "
                    f"communicating class"
                )
        return ValidationReport(
            method="exhaustive", policies_checked=checked, max_row_sum_error=worst
        )

    union_adj = [
        [j for j in range(n) if np.any(model.P[:, s, j] > EDGE_TOL)]
        for s in range(n)
    ]
    if not _strongly_connected(union_adj):
        raise NotRecurrent("union transition graph is not strongly connected")
    rng = np.random.default_rng(0)
    for k in range(SAMPLED_POLICY_COUNT):
        actions = tuple(int(a) for a in rng.integers(0, m, size=n))
        if not _policy_irreducible(model.P, actions):
            raise NotRecurrent(
                f"sampled deterministic policy {actions} does not induce a "
                f"single communicating class"
            )
    return ValidationReport(
        method="sampled",
        policies_checked=SAMPLED_POLICY_COUNT,
        max_row_sum_error=worst,
        notes=("recurrence verdict based on sampled policies",),
    )


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix by direct solve.

    Solves the balance equations gamma^T P = gamma^T with the last balance
    row replaced by the normalization sum(gamma) = 1. No power iteration.

    Raises
    ------
    SingularSystem
        If the chain has multiple recurrent classes (gamma not unique).
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        gamma = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("balance system is singular") from exc
    if not np.all(np.isfinite(gamma)) or np.any(gamma < -1e-9):
        raise SingularSystem("balance system has no probability solution")
    gamma = np.clip(gamma, 0.0, None)
    gamma /= gamma.sum()
    residual = float(np.max(np.abs(gamma @ P - gamma)))
    if residual > STATIONARY_RESIDUAL_TOL:
        raise SingularSystem(
            f"stationary residual {residual:.3g} exceeds tolerance; "
            f"chain has no unique stationary distribution"
        )
    return gamma


def _reject_constant(token: str) -> float:
    raise ValueError(f"non-finite number {token!r} is not allowed in model files")


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{where}: expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ValueError(f"{where}: non-finite value {value!r}")
    return out


def load_model(path: str) -> FiniteMdp:
    """Read a FiniteMdp from a JSON model file.

    Schema: ``{"n_states", "n_actions", "P"[a][s][s'], "r"[s][a],
    "c"[s][a], "B", "rho"}``. NaN/Inf and shape mismatches are rejected
    with messages that point at the offending entry.
    """
    with open(path) as f:
        doc = json.load(f, parse_constant=_reject_constant)
    if not isinstance(doc, dict):
        raise ValueError("model file must contain a JSON object")
    for key in ("n_states", "n_actions", "P", "r", "c", "B", "rho"):
        if key not in doc:
            raise ValueError(f"model file is missing key {key!r}")
    n = doc["n_states"]
    m = doc["n_actions"]
    if not isinstance(n, int) or not isinstance(m, int):
        raise ValueError("n_states and n_actions must be integers")
    if n < 1 or m < 1:
        raise EmptyModel(f"model declares {n} states and {m} actions")

    P = np.zeros((m, n, n))
    raw_P = doc["P"]
    if not isinstance(raw_P, list) or len(raw_P) != m:
        raise ValueError(f"P: expected {m} action matrices, got {_length(raw_P)}")
    for a, mat in enumerate(raw_P):
        if not isinstance(mat, list) or len(mat) != n:
            raise ValueError(f"P[{a}]: expected {n} rows, got {_length(mat)}")
        for s, row in enumerate(mat):
            if not isinstance(row, list) or len(row) != n:
                raise ValueError(
                    f"P[{a}][{s}]: expected {n} entries, got {_length(row)}"
                )
            for j, v in enumerate(row):
                P[a, s, j] = _as_float(v, f"P[{a}][{s}][{j}]")

    def read_table(key: str) -> np.ndarray:
        raw = doc[key]
        out = np.zeros((n, m))
        if not isinstance(raw, list) or len(raw) != n:
            raise ValueError(f"{key}: expected {n} rows, got {_length(raw)}")
        for s, row in enumerate(raw):
            if not isinstance(row, list) or len(row) != m:
                raise ValueError(
                    f"{key}[{s}]: expected {m} entries, got {_length(row)}"
                )
            for a, v in enumerate(row):
                out[s, a] = _as_float(v, f"{key}[{s}][{a}]")
        return out

    r = read_table("r")
    c = read_table("c")
    B = _as_float(doc["B"], "B")
    rho = _as_float(doc["rho"], "rho")
    return FiniteMdp(n_states=n, n_actions=m, P=P, r=r, c=c, B=B, rho=rho)


def save_model(model: FiniteMdp, path: str) -> None:
    """Write a FiniteMdp as a JSON model file (inverse of load_model)."""
    doc = {
        "n_states": model.n_states,
        "n_actions": model.n_actions,
        "P": model.P.tolist(),
        "r": model.r.tolist(),
        "c": model.c.tolist(),
        "B": model.B,
        "rho": model.rho,
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def _length(value) -> str:
    return str(len(value)) if isinstance(value, list) else f"a {type(value).__name__}"
