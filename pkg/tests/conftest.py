"""Shared fixtures, random-instance generators, and independent oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from iomdp import FiniteMdp, build_belief_space, stationary_distribution
from iomdp.simplex import simplex_solve
from iomdp.wireless import wireless_model


@pytest.fixture
def wireless06() -> FiniteMdp:
    return wireless_model(0.6)


@pytest.fixture
def wireless06_space(wireless06):
    return build_belief_space(wireless06, 10)


def random_recurrent_mdp(
    rng: np.random.Generator,
    n_states: int,
    n_actions: int,
    rho: float | None = None,
    action_independent: bool = False,
    budget_frac: float | None = None,
) -> FiniteMdp:
    """Random MDP with strictly positive rows (hence recurrent under every
    policy) and a budget placed strictly between the cheapest and the most
    expensive achievable average cost."""
    if rho is None:
        rho = float(rng.uniform(0.1, 0.9))
    if action_independent:
        base = rng.uniform(0.05, 1.0, size=(n_states, n_states))
        base /= base.sum(axis=1, keepdims=True)
        P = np.stack([base] * n_actions)
    else:
        P = rng.uniform(0.05, 1.0, size=(n_actions, n_states, n_states))
        P /= P.sum(axis=2, keepdims=True)
    r = rng.uniform(0.0, 2.0, size=(n_states, n_actions))
    c = rng.uniform(0.5, 3.0, size=(n_states, n_actions))
    frac = float(rng.uniform(0.25, 0.75)) if budget_frac is None else budget_frac
    model = FiniteMdp(
        n_states=n_states, n_actions=n_actions, P=P, r=r, c=c, B=0.0, rho=rho
    )
    lo, hi = achievable_cost_range(model)
    B = lo + frac * (hi - lo) if hi > lo else lo + 1.0
    return FiniteMdp(
        n_states=n_states, n_actions=n_actions, P=P, r=r, c=c, B=B, rho=rho
    )


def achievable_cost_range(model: FiniteMdp) -> tuple[float, float]:
    """Min and max long-run average cost over stationary policies of the
    fully observed MDP (occupancy LP with cost objectives)."""
    n, m = model.n_states, model.n_actions
    n_vars = n * m
    A_eq = np.zeros((n + 1, n_vars))
    for s in range(n):
        for a in range(m):
            A_eq[s, s * m + a] += 1.0
            A_eq[: n, s * m + a] -= model.P[a, s]
    A_eq[n] = 1.0
    b_eq = np.zeros(n + 1)
    b_eq[n] = 1.0
    cost = model.c.reshape(n_vars)
    lo = simplex_solve(cost, A_eq=A_eq, b_eq=b_eq)
    hi = simplex_solve(-cost, A_eq=A_eq, b_eq=b_eq)
    assert lo.status == hi.status == "optimal"
    return lo.objective, -hi.objective


def belief_cost_range(space, kernel, C) -> tuple[float, float]:
    """Min and max long-run average cost over belief policies (flow LP with
    cost objectives; kernel must be stochastic)."""
    from iomdp.lp import build_primal

    base = build_primal(space, kernel, C, C, B=0.0, constrained=False)
    cost = C.reshape(-1)
    lo = simplex_solve(cost, A_eq=base.A_eq, b_eq=base.b_eq)
    hi = simplex_solve(-cost, A_eq=base.A_eq, b_eq=base.b_eq)
    assert lo.status == hi.status == "optimal"
    return lo.objective, -hi.objective


def enumerate_beliefs_brute(
    model: FiniteMdp, K: int, tol: float = 1e-10
) -> list[np.ndarray]:
    """Oracle: all products P[a_k]^T ... e_s over action strings of length
    <= K, deduplicated by infinity-norm distance."""
    found: list[np.ndarray] = []

    def add(vec: np.ndarray) -> None:
        for existing in found:
            if np.max(np.abs(existing - vec)) <= tol:
                return
        found.append(vec)

    n = model.n_states
    for s in range(n):
        base = np.eye(n)[s]
        add(base)
        for length in range(1, K + 1):
            for word in itertools.product(range(model.n_actions), repeat=length):
                vec = base.copy()
                for a in word:
                    vec = model.P[a].T @ vec
                add(vec / vec.sum())
    return found


def brute_force_lp(c, A_eq, b_eq, A_ub, b_ub) -> tuple[str, float | None]:
    """Oracle: enumerate every basis of the slack-augmented system and take
    the best feasible vertex. Valid for bounded feasible regions."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_eq = np.asarray(b_eq, dtype=float).ravel()
    b_ub = np.asarray(b_ub, dtype=float).ravel()
    m_eq, m_ub = b_eq.size, b_ub.size
    m = m_eq + m_ub
    A = np.vstack(
        [
            np.hstack([A_eq, np.zeros((m_eq, m_ub))]),
            np.hstack([A_ub, np.eye(m_ub)]),
        ]
    )
    b = np.concatenate([b_eq, b_ub])
    cz = np.concatenate([c, np.zeros(m_ub)])
    ncol = n + m_ub
    best = None
    for cols in itertools.combinations(range(ncol), m):
        B = A[:, cols]
        try:
            xb = np.linalg.solve(B, b)
        except np.linalg.LinAlgError:
            continue
        if np.max(np.abs(B @ xb - b)) > 1e-8:
            continue
        if np.any(xb < -1e-9):
            continue
        z = np.zeros(ncol)
        z[list(cols)] = xb
        val = float(cz @ z)
        if best is None or val < best:
            best = val
    if best is None:
        return "infeasible", None
    return "optimal", best


def wireless_greedy_low_energy(rho: float, K: int) -> dict[tuple[int, int], float]:
    """Oracle for the wireless instance: the budget-limited allocation that
    moves mass to the high-energy action at beliefs ordered by their
    probability of the good state. Returns pi(a0 | s, age)."""
    model = wireless_model(rho)
    gamma = stationary_distribution(model.P[0])
    beliefs = {}
    for s in range(2):
        vec = np.eye(2)[s]
        for age in range(K + 1):
            beliefs[(s, age)] = vec
            vec = model.P[0].T @ vec
    nu = {key: gamma[key[0]] * rho * (1.0 - rho) ** key[1] for key in beliefs}
    total_mass = sum(nu.values())
    movable = (model.B - 9.0 * total_mass) / 7.0
    assert movable >= 0
    order = sorted(beliefs, key=lambda k: beliefs[k][1], reverse=True)
    pi0 = {}
    for key in order:
        take = min(movable, nu[key])
        movable -= take
        pi0[key] = 1.0 - take / nu[key] if nu[key] > 0 else 1.0
    return pi0
