"""Occupancy-measure LPs over the truncated belief space.

Two primal builders are provided. ``build_primal`` assembles the
flow-balance form: one balance row per belief, a normalization row, and an
optional budget row. ``build_reduced_primal`` applies to action-independent
models, where the per-belief marginals are pinned in closed form
``nu(s, age) = gamma(s) * rho * (1 - rho)^age`` and no balance rows are
needed; the geometric tail beyond the truncation depth is discarded without
renormalization, which is the ``drop`` truncation.

Note on ``drop`` and the flow-balance form: with the sub-stochastic kernel
the balance rows force the pure-state mass to be ``rho`` times the total
while the age recursion caps the total at ``1 - (1-rho)^(K+1)`` times the
pure mass over rho; together these admit only the zero vector, so the LP
reports infeasible whenever boundary mass actually leaks. Constrained
solving under ``drop`` therefore goes through the reduced builder; the
flow-balance form is meant for the ``selfloop``/``forceobs`` modes (or for
rho = 1, where nothing leaks).

The objective is internally minimized as the negated reward; reports
re-negate to present rewards.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import simplex
from .belief import BeliefKernel, BeliefSpace, origin_label
from .errors import (
    DimensionMismatch,
    NotActionIndependent,
    NotOptimal,
    PolicyDomainMismatch,
    SingularChain,
    SingularSystem,
)
from .mdp_core import FiniteMdp, stationary_distribution

SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class LinearProgram:
    """min objective @ x  s.t.  A_eq x = b_eq, A_ub x <= b_ub, x >= 0.

    Columns flagged in ``free`` are sign-unrestricted. ``is_dual`` marks
    LPs produced by ``build_dual``: their optimal value is the negated
    value of the max-form dual they encode.
    """

    objective: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    free: np.ndarray | None = None
    is_dual: bool = False

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class OccupancyLp(LinearProgram):
    """A LinearProgram whose columns are occupancy variables x(belief, action).

    ``kind`` is "flow" (balance rows + normalization row) or "reduced"
    (one marginal pin row per belief). Column ``b * n_actions + a`` holds
    x(b, a) in both forms.
    """

    n_beliefs: int = 0
    n_actions: int = 0
    kind: str = "flow"
    constrained: bool = False

    def var_index(self) -> list[tuple[int, int]]:
        """Column -> (belief, action) bijection."""
        return [
            (b, a) for b in range(self.n_beliefs) for a in range(self.n_actions)
        ]


@dataclass(frozen=True)
class LpSolution:
    """Primal-dual solution of an occupancy LP.

    ``phi`` holds the flow-row multipliers (or the marginal-pin multipliers
    of a reduced LP), ``psi`` the normalization multiplier (0.0 when the LP
    has no normalization row) and ``lam`` the nonnegative budget multiplier.
    """

    status: str
    x: np.ndarray | None = None
    objective_value: float | None = None
    duals_eq: np.ndarray | None = None
    duals_ub: np.ndarray | None = None
    phi: np.ndarray | None = None
    psi: float | None = None
    lam: float | None = None
    is_dual: bool = False
    iterations: int = 0


def _check_tables(space: BeliefSpace, kernel: BeliefKernel | None, *tables):
    n_b = len(space)
    if kernel is not None and kernel.n_beliefs != n_b:
        raise DimensionMismatch(
            f"kernel built over {kernel.n_beliefs} beliefs, space has {n_b}"
        )
    for t in tables:
        if t.shape != (n_b, space.n_actions):
            raise DimensionMismatch(
                f"lifted table shape {t.shape} != ({n_b}, {space.n_actions})"
            )


def build_primal(
    space: BeliefSpace,
    kernel: BeliefKernel,
    R: np.ndarray,
    C: np.ndarray,
    B: float,
    constrained: bool = True,
) -> OccupancyLp:
    """Flow-balance occupancy LP (see the module docstring for drop caveats).

    Rows: one balance row per belief (outflow minus kernel inflow equals
    zero), an all-ones normalization row equal to 1, and, if constrained,
    the budget row sum C(b,a) x(b,a) <= B.
    """
    _check_tables(space, kernel, R, C)
    n_b, n_a = len(space), space.n_actions
    n_vars = n_b * n_a

    A_eq = np.zeros((n_b + 1, n_vars))
    for b in range(n_b):
        for a in range(n_a):
            A_eq[b, b * n_a + a] += 1.0
    for (b, a), entries in kernel.rows.items():
        col = b * n_a + a
        for bp, p in entries:
            A_eq[bp, col] -= p
    A_eq[n_b, :] = 1.0
    b_eq = np.zeros(n_b + 1)
    b_eq[n_b] = 1.0

    if constrained:
        A_ub = C.reshape(1, n_vars).copy()
        b_ub = np.array([B])
    else:
        A_ub = np.zeros((0, n_vars))
        b_ub = np.zeros(0)

    return OccupancyLp(
        objective=-R.reshape(n_vars).copy(),
        A_eq=A_eq,
        b_eq=b_eq,
        A_ub=A_ub,
        b_ub=b_ub,
        n_beliefs=n_b,
        n_actions=n_a,
        kind="flow",
        constrained=constrained,
    )


def nu_closed_form(space: BeliefSpace, gamma: np.ndarray, rho: float) -> np.ndarray:
    """Stationary belief marginals gamma(s) * rho * (1-rho)^age, untruncated
    tail discarded (sums to 1 - (1-rho)^(K+1))."""
    if not space.action_independent:
        raise NotActionIndependent(
            "closed-form marginals need the (state, age) fast path"
        )
    s = space.origin_state
    return gamma[s] * rho * (1.0 - rho) ** space.depth


def build_reduced_primal(
    space: BeliefSpace,
    model: FiniteMdp,
    gamma: np.ndarray,
    constrained: bool = True,
) -> OccupancyLp:
    """Marginal-pinned occupancy LP for action-independent models.

    The balance rows collapse to one pin per belief,
    sum_a x(b, a) = nu(b), with nu in closed form; the budget row is kept.
    """
    if not model.action_independent():
        raise NotActionIndependent(
            "reduced LP requires all per-action transition matrices to coincide"
        )
    if not space.action_independent:
        raise NotActionIndependent(
            "reduced LP requires a space built from an action-independent model"
        )
    n_b, n_a = len(space), model.n_actions
    n_vars = n_b * n_a
    R = space.beliefs @ model.r
    C = space.beliefs @ model.c
    nu = nu_closed_form(space, gamma, model.rho)

    A_eq = np.zeros((n_b, n_vars))
    for b in range(n_b):
        for a in range(n_a):
            A_eq[b, b * n_a + a] = 1.0
    if constrained:
        A_ub = C.reshape(1, n_vars).copy()
        b_ub = np.array([model.B])
    else:
        A_ub = np.zeros((0, n_vars))
        b_ub = np.zeros(0)

    return OccupancyLp(
        objective=-R.reshape(n_vars).copy(),
        A_eq=A_eq,
        b_eq=nu,
        A_ub=A_ub,
        b_ub=b_ub,
        n_beliefs=n_b,
        n_actions=n_a,
        kind="reduced",
        constrained=constrained,
    )


def build_dual(lp: LinearProgram) -> LinearProgram:
    """Exact LP dual, re-expressed in the toolkit's min standard form.

    For min c x with equality duals y (free) and inequality duals w >= 0
    (the negated nonpositive multipliers), the dual reads
    max b_eq y - b_ub w  s.t.  A_eq^T y - A_ub^T w <= c (equality instead
    for free primal columns). The returned LP minimizes the negation, so
    its optimal value is minus the dual optimum (flagged via ``is_dual``).
    """
    p, q = lp.b_eq.size, lp.b_ub.size
    n = lp.n_vars
    free = (
        lp.free
        if lp.free is not None
        else np.zeros(n, dtype=bool)
    )
    M = np.hstack([lp.A_eq.T, -lp.A_ub.T]) if p + q else np.zeros((n, 0))
    rows_eq = np.flatnonzero(free)
    rows_ub = np.flatnonzero(~free)
    return LinearProgram(
        objective=np.concatenate([-lp.b_eq, lp.b_ub]),
        A_eq=M[rows_eq],
        b_eq=lp.objective[rows_eq],
        A_ub=M[rows_ub],
        b_ub=lp.objective[rows_ub],
        free=np.concatenate([np.ones(p, dtype=bool), np.zeros(q, dtype=bool)]),
        is_dual=not lp.is_dual,
    )


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve with the deterministic two-phase simplex and map the duals.

    For flow-form occupancy LPs the equality duals are (phi, psi); for
    reduced LPs they are the marginal-pin multipliers (psi reported as 0).
    The budget multiplier lam is the negated inequality dual.
    """
    res = simplex.simplex_solve(
        lp.objective,
        A_eq=lp.A_eq,
        b_eq=lp.b_eq,
        A_ub=lp.A_ub,
        b_ub=lp.b_ub,
        free=lp.free,
    )
    if res.status != "optimal":
        return LpSolution(status=res.status, is_dual=lp.is_dual,
                          iterations=res.iterations)
    phi = psi = lam = None
    if isinstance(lp, OccupancyLp):
        if lp.kind == "flow":
            phi = res.y_eq[:-1].copy()
            psi = float(res.y_eq[-1])
        else:
            phi = res.y_eq.copy()
            psi = 0.0
        lam = -float(res.y_ub[0]) if lp.constrained else 0.0
    x = res.x.copy()
    x[np.abs(x) < SUPPORT_TOL] = 0.0
    return LpSolution(
        status="optimal",
        x=x,
        objective_value=res.objective,
        duals_eq=res.y_eq,
        duals_ub=res.y_ub,
        phi=phi,
        psi=psi,
        lam=lam,
        is_dual=lp.is_dual,
        iterations=res.iterations,
    )


def check_solution(lp: LinearProgram, sol: LpSolution) -> dict[str, float]:
    """Max violations of primal/dual feasibility and complementary slackness."""
    if sol.status != "optimal":
        raise NotOptimal(f"solution status is {sol.status}")
    x = sol.x
    out = {}
    out["primal_eq"] = (
        float(np.max(np.abs(lp.A_eq @ x - lp.b_eq))) if lp.b_eq.size else 0.0
    )
    slack = lp.b_ub - lp.A_ub @ x if lp.b_ub.size else np.zeros(0)
    out["primal_ub"] = float(np.max(-slack, initial=0.0))
    free = lp.free if lp.free is not None else np.zeros(lp.n_vars, dtype=bool)
    out["primal_sign"] = float(np.max(-x[~free], initial=0.0))
    y = np.concatenate([sol.duals_eq, sol.duals_ub])
    A = np.vstack([lp.A_eq, lp.A_ub])
    reduced = lp.objective - y @ A
    out["dual_sign"] = float(np.max(sol.duals_ub, initial=0.0))
    out["dual_feas"] = float(np.max(-reduced[~free], initial=0.0))
    if np.any(free):
        out["dual_feas"] = max(
            out["dual_feas"], float(np.max(np.abs(reduced[free]), initial=0.0))
        )
    out["comp_slack_x"] = float(np.max(np.abs(x * reduced), initial=0.0))
    if lp.b_ub.size:
        out["comp_slack_row"] = float(
            np.max(np.abs(sol.duals_ub * slack), initial=0.0)
        )
    else:
        out["comp_slack_row"] = 0.0
    return out


@dataclass(frozen=True)
class Policy:
    """Randomized action law per belief; support marks beliefs with mass."""

    pi: np.ndarray
    support_mask: np.ndarray

    @property
    def n_beliefs(self) -> int:
        return self.pi.shape[0]

    @property
    def n_actions(self) -> int:
        return self.pi.shape[1]


def extract_policy(sol: LpSolution, space: BeliefSpace) -> Policy:
    """pi(a|b) = x(b,a) / xbar(b); uniform rows off the LP support."""
    if sol.status != "optimal":
        raise NotOptimal(f"cannot extract a policy from status {sol.status!r}")
    n_b = len(space)
    n_a = sol.x.size // n_b
    x = sol.x.reshape(n_b, n_a)
    xbar = x.sum(axis=1)
    support = xbar > SUPPORT_TOL
    pi = np.full((n_b, n_a), 1.0 / n_a)
    pi[support] = x[support] / xbar[support, None]
    return Policy(pi=pi, support_mask=support)


def evaluate_policy_exact(
    policy: Policy,
    kernel: BeliefKernel,
    R: np.ndarray,
    C: np.ndarray,
    nu: np.ndarray | None = None,
) -> tuple[float, float]:
    """Long-run average reward and cost of a belief policy.

    With ``nu`` given (e.g. the closed-form drop marginals) the averages are
    direct inner products; otherwise the stationary distribution of the
    policy-induced chain is solved, which needs a stochastic kernel
    (boundary mode selfloop or forceobs).
    """
    if nu is None:
        Q = kernel.policy_matrix(policy.pi)
        mass = Q.sum(axis=1)
        if np.max(np.abs(mass - 1.0)) > 1e-9:
            raise SingularChain(
                "policy chain is sub-stochastic; pass nu or rebuild the "
                "kernel with boundary mode selfloop/forceobs"
            )
        try:
            nu = stationary_distribution(Q)
        except SingularSystem as exc:
            raise SingularChain(str(exc)) from exc
    weights = nu[:, None] * policy.pi
    return float(np.sum(weights * R)), float(np.sum(weights * C))


def dump_solution_json(sol: LpSolution, path: str) -> None:
    """Write the solution (reward-signed objective, sparse x, duals)."""
    doc: dict = {"status": sol.status}
    if sol.status == "optimal":
        doc["objective"] = -sol.objective_value
        n_a = None
        doc["duals"] = {
            "psi": sol.psi,
            "phi": None if sol.phi is None else list(sol.phi),
            "lambda": sol.lam,
        }
        entries = []
        if sol.phi is not None:
            n_a = sol.x.size // sol.phi.size
        for i, v in enumerate(sol.x):
            if v > 0.0:
                if n_a is None:
                    entries.append({"index": i, "value": v})
                else:
                    entries.append(
                        {"belief": i // n_a, "action": i % n_a, "value": v}
                    )
        doc["x"] = entries
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def dump_policy_csv(policy: Policy, space: BeliefSpace, path: str) -> None:
    """Write per-belief action probabilities with origin annotations."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        header = ["belief_index", "origin", "age"]
        header += [f"pi_a{a}" for a in range(policy.n_actions)]
        header += ["on_support"]
        w.writerow(header)
        for b in range(policy.n_beliefs):
            row = [b, int(space.origin_state[b]), int(space.depth[b])]
            row += [repr(float(p)) for p in policy.pi[b]]
            row += [int(policy.support_mask[b])]
            w.writerow(row)


def load_policy_csv(path: str, space: BeliefSpace) -> Policy:
    """Read a policy written by dump_policy_csv and bind it to ``space``."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        pi_cols = [i for i, h in enumerate(header) if h.startswith("pi_a")]
        sup_col = header.index("on_support")
        rows = list(reader)
    if len(rows) != len(space):
        raise PolicyDomainMismatch(
            f"policy file has {len(rows)} beliefs, space has {len(space)}"
        )
    pi = np.zeros((len(rows), len(pi_cols)))
    support = np.zeros(len(rows), dtype=bool)
    for row in rows:
        b = int(row[0])
        pi[b] = [float(row[i]) for i in pi_cols]
        support[b] = bool(int(row[sup_col]))
    return Policy(pi=pi, support_mask=support)


def origin_rows(space: BeliefSpace) -> list[str]:
    """Human-readable origin labels, one per belief (for reports)."""
    return [
        f"({int(space.origin_state[i])}, {origin_label(space, i)})"
        for i in range(len(space))
    ]
