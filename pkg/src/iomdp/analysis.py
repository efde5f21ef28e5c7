"""Structural verification on the truncated belief space.

Checks performed here: single-recurrent-class structure of policy-induced
belief chains (with expected absorption times from transient beliefs),
the contraction identity with factor 1 - rho off the pure states, the
negative one-step drift that certifies positive recurrence, primal/dual
gap measurement, the optimality-equation residuals certified by the dual
multipliers, and the closed-form stationary marginals of action-independent
belief chains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import BeliefKernel, BeliefSpace
from .errors import NotActionIndependent, StatusMismatch
from .lp import LpSolution, OccupancyLp, Policy, nu_closed_form
from .mdp_core import stationary_distribution

EDGE_TOL = 1e-14


@dataclass(frozen=True)
class ChainDiagnostics:
    """Recurrent classes, transient beliefs, and expected absorption times.

    ``absorption_time[b]`` is the expected number of steps for the chain
    started at b to enter a recurrent class (0 on recurrent beliefs).
    ``dropped_mass`` notes the largest per-row leak of a sub-stochastic
    (drop-mode) kernel; it is 0 for stochastic kernels.
    """

    recurrent_classes: tuple[tuple[int, ...], ...]
    transient: tuple[int, ...]
    absorption_time: np.ndarray
    dropped_mass: float


@dataclass(frozen=True)
class DriftCertificate:
    """Contraction check: sum of off-pure mass weighted by mu stays below
    factor * mu(b) on every row; ``violated`` lists failing (belief, action)
    pairs and ``max_interior_gap`` the worst deviation of the off-pure mass
    from the factor on non-boundary rows (an exact identity)."""

    mu: np.ndarray
    factor: float
    violated: tuple[tuple[int, int], ...]
    max_interior_gap: float


@dataclass(frozen=True)
class AcoeCertificate:
    """Residuals of the average-optimality equation under the dual solution.

    ``residuals[b, a]`` is the slack of the dual constraint at (b, a);
    optimality requires every entry to be nonnegative (within tolerance),
    the minimum over actions to vanish where the belief carries mass, and
    the residual to vanish on the optimal support.
    """

    residuals: np.ndarray
    min_residual: float
    support_max_abs: float


def _policy_rows(policy: Policy | np.ndarray) -> np.ndarray:
    return policy.pi if isinstance(policy, Policy) else np.asarray(policy)


def classify_chain(kernel: BeliefKernel, policy: Policy | np.ndarray) -> ChainDiagnostics:
    """Strongly-connected-component analysis of the policy-induced chain.

    Edges are transition probabilities above 1e-14. A component with no
    outgoing edge is a recurrent class; everything else is transient, with
    expected absorption times from the linear system over the transient
    block. Drop-mode kernels are classified on the sub-stochastic graph.
    """
    pi = _policy_rows(policy)
    Q = kernel.policy_matrix(pi)
    n = Q.shape[0]
    dropped = float(np.max(1.0 - Q.sum(axis=1), initial=0.0))

    adj = [list(np.flatnonzero(Q[i] > EDGE_TOL)) for i in range(n)]
    comp = _tarjan_scc(adj)
    n_comp = max(comp) + 1
    members: list[list[int]] = [[] for _ in range(n_comp)]
    for i, c in enumerate(comp):
        members[c].append(i)
    has_exit = [False] * n_comp
    for i in range(n):
        for j in adj[i]:
            if comp[j] != comp[i]:
                has_exit[comp[i]] = True
    recurrent_classes = tuple(
        tuple(members[c]) for c in range(n_comp) if not has_exit[c]
    )
    recurrent = {i for cls in recurrent_classes for i in cls}
    transient = tuple(i for i in range(n) if i not in recurrent)

    absorption = np.zeros(n)
    if transient:
        idx = {b: k for k, b in enumerate(transient)}
        Ttt = np.zeros((len(transient), len(transient)))
        for b in transient:
            for bp in adj[b]:
                if bp in idx:
                    Ttt[idx[b], idx[bp]] = Q[b, bp]
        try:
            tau = np.linalg.solve(
                np.eye(len(transient)) - Ttt, np.ones(len(transient))
            )
        except np.linalg.LinAlgError:
            tau = np.full(len(transient), np.inf)
        for b, k in idx.items():
            absorption[b] = tau[k]
    return ChainDiagnostics(
        recurrent_classes=recurrent_classes,
        transient=transient,
        absorption_time=absorption,
        dropped_mass=dropped,
    )


def _tarjan_scc(adj: list[list[int]]) -> list[int]:
    """Iterative Tarjan; returns a component id per node."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 0
    n_comp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi_ = work[-1]
            if pi_ == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi_, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = n_comp
                    if w == v:
                        break
                n_comp += 1
    return comp


def check_contraction(kernel: BeliefKernel, rho: float) -> DriftCertificate:
    """Verify the off-pure contraction identity with factor 1 - rho.

    With mu equal to 1 off the pure states and 2 on them, the mass a row
    sends outside the pure set is exactly 1 - rho on interior rows and at
    most that at the truncation boundary.
    """
    n_pure = kernel.n_states
    mu = np.ones(kernel.n_beliefs)
    mu[:n_pure] = 2.0
    factor = 1.0 - rho
    violated: list[tuple[int, int]] = []
    max_gap = 0.0
    for (b, a), entries in sorted(kernel.rows.items()):
        off_mass = sum(p * mu[bp] for bp, p in entries if bp >= n_pure)
        if off_mass > factor * mu[b] + 1e-12:
            violated.append((b, a))
        if (b, a) not in kernel.boundary_rows:
            max_gap = max(max_gap, abs(off_mass - factor))
    return DriftCertificate(
        mu=mu,
        factor=factor,
        violated=tuple(violated),
        max_interior_gap=max_gap,
    )


def foster_drift(kernel: BeliefKernel, policy: Policy | np.ndarray) -> np.ndarray:
    """One-step expected change of the return-time certificate function.

    The function takes value 2 off the pure states and 1 on them; from any
    non-pure belief the drift equals minus the mass sent into the pure set
    (exactly -rho on stochastic rows), certifying positive recurrence.
    """
    pi = _policy_rows(policy)
    n_pure = kernel.n_states
    f = np.full(kernel.n_beliefs, 2.0)
    f[:n_pure] = 1.0
    Q = kernel.policy_matrix(pi)
    return Q @ f - Q.sum(axis=1) * f  # sub-stochastic rows: drift wrt row mass


def duality_gap(primal_sol: LpSolution, dual_sol: LpSolution) -> float:
    """|primal optimum - dual optimum| with the sign conventions aligned."""
    if primal_sol.status != "optimal" or dual_sol.status != "optimal":
        raise StatusMismatch(
            f"need two optimal solutions, got {primal_sol.status!r} "
            f"and {dual_sol.status!r}"
        )
    val_p = -primal_sol.objective_value if primal_sol.is_dual else primal_sol.objective_value
    val_d = -dual_sol.objective_value if dual_sol.is_dual else dual_sol.objective_value
    return abs(val_p - val_d)


def acoe_residuals(
    lp: OccupancyLp,
    sol: LpSolution,
    kernel: BeliefKernel | None,
    R: np.ndarray,
    C: np.ndarray,
) -> AcoeCertificate:
    """Residuals of the dual optimality constraints at (phi, psi, lambda).

    Flow form: residual(b, a) = -R + lambda C + sum_b' Q(b'|b,a) phi(b')
    - phi(b) - psi. Reduced form: the kernel term is absent because the
    balance rows were replaced by marginal pins.
    """
    if sol.status != "optimal":
        raise StatusMismatch(f"solution status is {sol.status!r}")
    n_b, n_a = lp.n_beliefs, lp.n_actions
    lam = sol.lam or 0.0
    resid = -R + lam * C
    resid -= sol.phi[:, None]
    resid -= sol.psi
    if lp.kind == "flow":
        if kernel is None:
            raise ValueError("flow-form residuals need the kernel")
        for (b, a), entries in kernel.rows.items():
            resid[b, a] += sum(p * sol.phi[bp] for bp, p in entries)
    x = sol.x.reshape(n_b, n_a)
    support = x > 1e-12
    support_max = float(np.max(np.abs(resid[support]), initial=0.0))
    return AcoeCertificate(
        residuals=resid,
        min_residual=float(resid.min()),
        support_max_abs=support_max,
    )


def verify_nu_closed_form(
    space: BeliefSpace,
    kernel: BeliefKernel,
    gamma: np.ndarray,
    rho: float,
) -> float:
    """Max deviation of the directly solved stationary marginals from
    gamma(s) * rho * (1-rho)^age over ages below the truncation depth.

    Needs a stochastic kernel (selfloop keeps the identity exact below the
    boundary; forceobs renormalizes and deviates by the tail mass).
    """
    if not space.action_independent:
        raise NotActionIndependent("closed-form check needs (state, age) beliefs")
    uniform = np.full((len(space), kernel.n_actions), 1.0 / kernel.n_actions)
    Q = kernel.policy_matrix(uniform)
    nu_direct = stationary_distribution(Q)
    nu_closed = nu_closed_form(space, gamma, rho)
    inner = space.depth < space.K
    if not np.any(inner):
        return 0.0
    return float(np.max(np.abs(nu_direct[inner] - nu_closed[inner])))
