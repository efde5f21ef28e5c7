"""Reachable belief space, belief transition kernel, and lifted tables.

A belief is a plain probability vector over the hidden states (ndarray of
shape ``(n_states,)``). The reachable set is seeded by the pure states
``e_i`` (state just observed) and grown by applying the per-action updates
``b -> P[a]^T b`` up to a truncation depth ``K``; the depth of a belief is
its age, the number of steps since the last observation.

Truncation boundary modes for the kernel:

- ``drop``     : the no-observation branch at depth K is removed; the row is
  kept sub-stochastic (mass rho) and flagged.
- ``selfloop`` : the no-observation mass stays on the boundary belief.
- ``forceobs`` : the observation branches are rescaled to total mass 1.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ExplosionGuard, ModeRequired
from .mdp_core import FiniteMdp

NEGATIVE_CLAMP = -1e-14
BELIEF_SUM_TOL = 1e-12
DEDUP_TOL = 1e-10
DEFAULT_CAP = 10 ** 6

BOUNDARY_MODES = ("drop", "selfloop", "forceobs")


def clean_belief(vec: np.ndarray) -> np.ndarray:
    """Clamp cancellation dust to zero and renormalize to unit sum."""
    vec = np.asarray(vec, dtype=float)
    if np.any(vec < NEGATIVE_CLAMP):
        raise ValueError(f"belief has a genuinely negative entry: {vec}")
    vec = np.where(vec < 0.0, 0.0, vec)
    total = vec.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"belief mass {total} too far from 1 to renormalize")
    return vec / total


def belief_update(b: np.ndarray, a: int, P: np.ndarray) -> np.ndarray:
    """One-step belief propagation ``P[a]^T b`` with drift cleanup."""
    return clean_belief(P[a].T @ np.asarray(b, dtype=float))


class BeliefSpace:
    """Indexed, deduplicated enumeration of reachable beliefs up to depth K.

    The ``n_states`` pure states come first. ``origin_state[i]`` is the last
    observed state of belief i and ``depth[i]`` its age. In the general case
    ``origin_actions[i]`` records the action sequence applied since the
    observation; in the action-independent fast path the space is exactly
    the grid ``{(s, age) : age <= K}`` and no action sequence is stored.
    """

    def __init__(
        self,
        beliefs: np.ndarray,
        origin_state: np.ndarray,
        depth: np.ndarray,
        K: int,
        dedup_tol: float,
        origin_actions: tuple[tuple[int, ...], ...] | None,
        successor: dict[tuple[int, int], int],
        action_independent: bool,
        n_actions: int,
    ):
        self.beliefs = beliefs
        self.origin_state = origin_state
        self.depth = depth
        self.K = K
        self.dedup_tol = dedup_tol
        self.origin_actions = origin_actions
        self.successor = successor
        self.action_independent = action_independent
        self.n_actions = n_actions

    def __len__(self) -> int:
        return self.beliefs.shape[0]

    @property
    def n_states(self) -> int:
        return self.beliefs.shape[1]

    def index_by_age(self, s: int, age: int) -> int:
        """Index of belief (s, age) in the action-independent fast path."""
        if not self.action_independent:
            raise ValueError("(state, age) indexing needs an action-independent space")
        if not (0 <= s < self.n_states and 0 <= age <= self.K):
            raise IndexError(f"no belief ({s}, {age}) in the space")
        return age * self.n_states + s

    def successor_index(self, i: int, a: int) -> int | None:
        """Index of the no-observation successor of belief i under action a."""
        if self.action_independent:
            if self.depth[i] >= self.K:
                return None
            return i + self.n_states
        return self.successor.get((i, a))


class _DedupIndex:
    """Vector -> index lookup with an infinity-norm merge radius.

    Keys are coordinates quantized to the merge radius; probing the 3^d
    neighboring cells guarantees any stored vector within the radius is
    found. Belief dimension is small, so the probe stays cheap.
    """

    def __init__(self, tol: float, dim: int):
        self.tol = tol
        self.cells: dict[tuple[int, ...], int] = {}
        self.offsets = list(itertools.product((-1, 0, 1), repeat=dim))

    def _key(self, vec: np.ndarray) -> tuple[int, ...]:
        return tuple(int(round(x / self.tol)) for x in vec)

    def find(self, vec: np.ndarray, beliefs: list[np.ndarray]) -> int | None:
        base = self._key(vec)
        hit = self.cells.get(base)
        if hit is not None and np.max(np.abs(beliefs[hit] - vec)) <= self.tol:
            return hit
        for off in self.offsets:
            key = tuple(b + o for b, o in zip(base, off))
            hit = self.cells.get(key)
            if hit is not None and np.max(np.abs(beliefs[hit] - vec)) <= self.tol:
                return hit
        return None

    def insert(self, vec: np.ndarray, index: int) -> None:
        self.cells[self._key(vec)] = index


def build_belief_space(
    model: FiniteMdp,
    K: int,
    dedup_tol: float = DEDUP_TOL,
    cap: int = DEFAULT_CAP,
) -> BeliefSpace:
    """Enumerate the reachable beliefs up to truncation depth K.

    Breadth-first expansion from the pure states applying every action,
    merging beliefs that agree within ``dedup_tol`` in the infinity norm
    (the shortest origin is kept). When the model is action-independent the
    space is the (state, age) grid with ``n_states * (K + 1)`` entries.

    Raises
    ------
    ExplosionGuard
        If the enumeration exceeds ``cap`` beliefs.
    """
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    n = model.n_states

    if model.action_independent():
        count = n * (K + 1)
        if count > cap:
            raise ExplosionGuard(f"{count} beliefs exceed the cap of {cap}")
        beliefs = np.zeros((count, n))
        beliefs[:n] = np.eye(n)
        for age in range(1, K + 1):
            prev = beliefs[(age - 1) * n : age * n]
            beliefs[age * n : (age + 1) * n] = prev @ model.P[0]
        origin_state = np.tile(np.arange(n), K + 1)
        depth = np.repeat(np.arange(K + 1), n)
        return BeliefSpace(
            beliefs=beliefs,
            origin_state=origin_state,
            depth=depth,
            K=K,
            dedup_tol=dedup_tol,
            origin_actions=None,
            successor={},
            action_independent=True,
            n_actions=model.n_actions,
        )

    vectors: list[np.ndarray] = [np.eye(n)[i] for i in range(n)]
    origin_state_l = list(range(n))
    origin_actions_l: list[tuple[int, ...]] = [() for _ in range(n)]
    depth_l = [0] * n
    successor: dict[tuple[int, int], int] = {}
    lookup = _DedupIndex(dedup_tol, n)
    for i in range(n):
        lookup.insert(vectors[i], i)

    frontier = list(range(n))
    for d in range(K):
        next_frontier: list[int] = []
        for i in frontier:
            for a in range(model.n_actions):
                u = belief_update(vectors[i], a, model.P)
                j = lookup.find(u, vectors)
                if j is None:
                    j = len(vectors)
                    if j >= cap:
                        raise ExplosionGuard(
                            f"belief enumeration exceeded the cap of {cap}"
                        )
                    vectors.append(u)
                    origin_state_l.append(origin_state_l[i])
                    origin_actions_l.append(origin_actions_l[i] + (a,))
                    depth_l.append(d + 1)
                    lookup.insert(u, j)
                    next_frontier.append(j)
                successor[(i, a)] = j
        frontier = next_frontier

    return BeliefSpace(
        beliefs=np.array(vectors),
        origin_state=np.array(origin_state_l),
        depth=np.array(depth_l),
        K=K,
        dedup_tol=dedup_tol,
        origin_actions=tuple(origin_actions_l),
        successor=successor,
        action_independent=False,
        n_actions=model.n_actions,
    )


@dataclass(frozen=True)
class BeliefKernel:
    """Sparse belief transition law: (belief, action) -> [(belief', prob)].

    Under ``drop`` the flagged boundary rows carry total mass rho instead
    of 1; all other rows are stochastic.
    """

    rows: dict[tuple[int, int], tuple[tuple[int, float], ...]]
    boundary_mode: str | None
    n_beliefs: int
    n_actions: int
    n_states: int
    sub_stochastic: frozenset[tuple[int, int]]
    boundary_rows: frozenset[tuple[int, int]]

    def row(self, b: int, a: int) -> tuple[tuple[int, float], ...]:
        return self.rows[(b, a)]

    def row_mass(self, b: int, a: int) -> float:
        return sum(p for _, p in self.rows[(b, a)])

    def policy_matrix(self, pi: np.ndarray) -> np.ndarray:
        """Dense transition matrix of the chain induced by policy rows pi."""
        Q = np.zeros((self.n_beliefs, self.n_beliefs))
        for (b, a), entries in self.rows.items():
            w = pi[b, a]
            if w == 0.0:
                continue
            for bp, p in entries:
                Q[b, bp] += w * p
        return Q


def build_kernel(
    space: BeliefSpace, model: FiniteMdp, mode: str | None = None
) -> BeliefKernel:
    """Assemble the belief transition kernel over the truncated space.

    Each (belief, action) row sends mass ``rho * [P[a]^T b]_i`` to the pure
    state ``e_i`` and mass ``1 - rho`` to the propagated belief; at the
    truncation boundary the no-observation mass is handled per ``mode``.

    Raises
    ------
    ModeRequired
        If some belief sits at depth K and no mode was chosen.
    """
    if mode is not None and mode not in BOUNDARY_MODES:
        raise ValueError(f"unknown boundary mode {mode!r}")
    boundary = np.flatnonzero(space.depth == space.K)
    if boundary.size and mode is None:
        raise ModeRequired(
            f"{boundary.size} beliefs sit at depth K={space.K}; "
            f"choose one of {BOUNDARY_MODES}"
        )
    rho = model.rho
    rows: dict[tuple[int, int], tuple[tuple[int, float], ...]] = {}
    flagged: set[tuple[int, int]] = set()
    boundary_rows: set[tuple[int, int]] = set()

    for i in range(len(space)):
        at_boundary = space.depth[i] == space.K
        for a in range(model.n_actions):
            if at_boundary:
                boundary_rows.add((i, a))
            u = belief_update(space.beliefs[i], a, model.P)
            if at_boundary and mode == "forceobs":
                obs_scale = 1.0
            else:
                obs_scale = rho
            entries: dict[int, float] = {}
            for s in range(model.n_states):
                if u[s] > 0.0:
                    entries[s] = entries.get(s, 0.0) + obs_scale * u[s]
            if rho < 1.0:
                if not at_boundary:
                    j = space.successor_index(i, a)
                    entries[j] = entries.get(j, 0.0) + (1.0 - rho)
                elif mode == "selfloop":
                    entries[i] = entries.get(i, 0.0) + (1.0 - rho)
                elif mode == "drop":
                    flagged.add((i, a))
            rows[(i, a)] = tuple(sorted(entries.items()))

    return BeliefKernel(
        rows=rows,
        boundary_mode=mode,
        n_beliefs=len(space),
        n_actions=model.n_actions,
        n_states=model.n_states,
        sub_stochastic=frozenset(flagged),
        boundary_rows=frozenset(boundary_rows),
    )


def lift_reward(space: BeliefSpace, model: FiniteMdp) -> np.ndarray:
    """Belief reward table R[b, a] = sum_s b(s) r(s, a)."""
    return space.beliefs @ model.r


def lift_cost(space: BeliefSpace, model: FiniteMdp) -> np.ndarray:
    """Belief cost table C[b, a] = sum_s b(s) c(s, a)."""
    return space.beliefs @ model.c


def origin_label(space: BeliefSpace, i: int) -> str:
    """Age for the fast path, '|'-joined action sequence otherwise."""
    if space.action_independent:
        return str(int(space.depth[i]))
    return "|".join(str(a) for a in space.origin_actions[i])


def dump_space_csv(space: BeliefSpace, path: str) -> None:
    """Write the belief enumeration as CSV."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        n = space.n_states
        w.writerow(
            ["index", "origin_state", "age_or_action_seq"]
            + [f"prob_{s}" for s in range(n)]
        )
        for i in range(len(space)):
            w.writerow(
                [i, int(space.origin_state[i]), origin_label(space, i)]
                + [repr(float(x)) for x in space.beliefs[i]]
            )


def dump_kernel_csv(kernel: BeliefKernel, path: str) -> None:
    """Write the kernel as CSV rows (from, action, to, prob)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["from", "action", "to", "prob"])
        for (b, a) in sorted(kernel.rows):
            for bp, p in kernel.rows[(b, a)]:
                w.writerow([b, a, bp, repr(float(p))])
