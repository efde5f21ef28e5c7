"""Deterministic two-phase dense simplex with Bland's anti-cycling rule.

Solves  min c^T x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0, with an
optional mask of sign-free variables (handled by an internal split). The
pivot order is fully deterministic, so identical inputs produce identical
solutions. Dual multipliers are read off the final tableau: for a minimum
problem, equality-row duals are sign-free and inequality-row duals are
nonpositive.

Instances here have at most a few thousand columns; a dense tableau with
Bland's rule favors reproducibility over speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
MAX_ITER = 200_000


@dataclass(frozen=True)
class SimplexResult:
    status: str                      # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float | None = None
    y_eq: np.ndarray | None = None   # sign-free equality duals
    y_ub: np.ndarray | None = None   # nonpositive inequality duals
    iterations: int = 0


def _as_matrix(A, b, n: int) -> tuple[np.ndarray, np.ndarray]:
    if A is None or b is None or len(b) == 0:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape != (b.size, n):
        raise ValueError(f"constraint block shape {A.shape} != ({b.size}, {n})")
    return A, b


def simplex_solve(
    c,
    A_eq=None,
    b_eq=None,
    A_ub=None,
    b_ub=None,
    free=None,
    tol: float = PIVOT_TOL,
    feas_tol: float = FEAS_TOL,
) -> SimplexResult:
    """Solve the LP; see the module docstring for the problem form."""
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_eq, b_eq = _as_matrix(A_eq, b_eq, n)
    A_ub, b_ub = _as_matrix(A_ub, b_ub, n)
    m_eq, m_ub = b_eq.size, b_ub.size
    m = m_eq + m_ub
    if free is None:
        free = np.zeros(n, dtype=bool)
    else:
        free = np.asarray(free, dtype=bool).ravel()

    # Split free variables x_i = u_i - v_i; record column -> (var, sign).
    col_var: list[tuple[int, float]] = []
    for i in range(n):
        col_var.append((i, 1.0))
        if free[i]:
            col_var.append((i, -1.0))
    n_split = len(col_var)
    A_full = np.vstack([A_eq, A_ub]) if m else np.zeros((0, n))
    G = np.zeros((m, n_split))
    c_split = np.zeros(n_split)
    for j, (i, sign) in enumerate(col_var):
        G[:, j] = sign * A_full[:, i]
        c_split[j] = sign * c[i]

    # Slack columns for inequality rows.
    slack_of_row = {}
    slack_cols = np.zeros((m, m_ub))
    for k in range(m_ub):
        slack_cols[m_eq + k, k] = 1.0
        slack_of_row[m_eq + k] = n_split + k
    G = np.hstack([G, slack_cols])
    h = np.concatenate([b_eq, b_ub])

    # Flip rows with negative right-hand sides.
    row_sign = np.ones(m)
    for i in range(m):
        if h[i] < 0:
            G[i] *= -1.0
            h[i] *= -1.0
            row_sign[i] = -1.0

    # Artificial columns: every equality row, plus flipped inequality rows
    # (their slack coefficient became -1 and cannot start in the basis).
    art_of_row = {}
    art_cols = []
    for i in range(m):
        if i < m_eq or row_sign[i] < 0:
            col = G.shape[1] + len(art_cols)
            art_of_row[i] = col
            e = np.zeros((m, 1))
            e[i, 0] = 1.0
            art_cols.append(e)
    if art_cols:
        G = np.hstack([G] + art_cols)
    n_cols = G.shape[1]
    first_art = n_cols - len(art_cols)

    basis = np.empty(m, dtype=int)
    for i in range(m):
        basis[i] = art_of_row.get(i, slack_of_row.get(i, -1))

    G0 = G.copy()  # pristine copy; final x and duals are re-solved against it
    h0 = h.copy()
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :n_cols] = G
    T[:m, -1] = h

    def install_costs(cost: np.ndarray) -> None:
        T[-1, :n_cols] = cost
        T[-1, -1] = 0.0
        for r in range(m):
            coef = T[-1, basis[r]]
            if coef != 0.0:
                T[-1] -= coef * T[r]

    def pivot(r: int, j: int) -> None:
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T[...] -= np.outer(col, T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        basis[r] = j

    iterations = 0

    def run(allowed_max: int) -> str:
        """Bland's rule: lowest eligible column enters; ratio ties leave by
        the lowest basic variable index."""
        nonlocal iterations
        while True:
            enter = -1
            for j in range(allowed_max):
                if T[-1, j] < -tol:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            leave, best, best_var = -1, np.inf, -1
            for r in range(m):
                a = T[r, enter]
                if a > tol:
                    ratio = T[r, -1] / a
                    if ratio < best - 1e-12 or (
                        abs(ratio - best) <= 1e-12 and basis[r] < best_var
                    ):
                        leave, best, best_var = r, ratio, basis[r]
            if leave < 0:
                return "unbounded"
            pivot(leave, enter)
            iterations += 1
            if iterations > MAX_ITER:
                raise RuntimeError("simplex exceeded the iteration cap")

    # Phase 1: drive artificial mass to zero.
    if art_cols:
        cost1 = np.zeros(n_cols)
        cost1[first_art:] = 1.0
        install_costs(cost1)
        status = run(n_cols)
        if status != "optimal":
            raise RuntimeError("phase 1 cannot be unbounded")
        if -T[-1, -1] > feas_tol * max(1.0, float(np.max(h, initial=0.0))):
            return SimplexResult(status="infeasible", iterations=iterations)
        # Pivot remaining artificials out of the basis where possible,
        # preferring positive pivots so the basis stays feasible.
        for r in range(m):
            if basis[r] >= first_art:
                j = next((j for j in range(first_art) if T[r, j] > tol), -1)
                if j < 0:
                    j = next(
                        (j for j in range(first_art) if abs(T[r, j]) > tol), -1
                    )
                if j >= 0:
                    pivot(r, j)
                    iterations += 1

    install_costs(np.concatenate([c_split, np.zeros(n_cols - n_split)])
                  if n_cols > n_split else c_split)
    status = run(first_art)
    if status == "unbounded":
        return SimplexResult(status="unbounded", iterations=iterations)

    x_cols = np.zeros(n_cols)
    x_cols[basis] = T[:m, -1]
    x = np.zeros(n)
    for j, (i, sign) in enumerate(col_var):
        x[i] += sign * x_cols[j]

    # Duals read from the reduced-cost row: each row owns a unit column
    # (its artificial, or its slack), where cbar = -y_row.
    y = np.zeros(m)
    for i in range(m):
        col = art_of_row.get(i, slack_of_row.get(i))
        y[i] = -T[-1, col]
    y *= row_sign
    objective = float(c @ x)
    return SimplexResult(
        status="optimal",
        x=x,
        objective=objective,
        y_eq=y[:m_eq],
        y_ub=y[m_eq:],
        iterations=iterations,
    )
