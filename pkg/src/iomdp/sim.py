"""Monte Carlo validation of belief policies on the true hidden chain.

The simulator runs the underlying MDP, reveals the state with probability
rho at each step, tracks the belief the controller would hold, draws
actions from the policy at the tracked belief, and scores reward and cost
against the true hidden state. Replications use independent RNG streams
derived from (seed, replication index), so reports are bit-reproducible.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .belief import BeliefSpace
from .errors import PolicyDomainMismatch
from .lp import Policy
from .mdp_core import FiniteMdp, stationary_distribution


@dataclass(frozen=True)
class SimConfig:
    """Horizon, burn-in (defaults to a tenth of the horizon), seed, and
    replication count; age_clamp caps policy lookups (defaults to the
    space's truncation depth)."""

    horizon: int
    burn_in: int | None = None
    seed: int = 0
    replications: int = 1
    age_clamp: int | None = None

    def resolved_burn_in(self) -> int:
        b = self.horizon // 10 if self.burn_in is None else self.burn_in
        if not (0 <= b < self.horizon):
            raise ValueError(f"need horizon > burn_in >= 0, got {self.horizon}, {b}")
        return b

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        self.resolved_burn_in()


@dataclass(frozen=True)
class SimReport:
    """Replication-averaged estimates with standard errors across runs."""

    avg_reward: float
    avg_reward_se: float
    avg_cost: float
    avg_cost_se: float
    age_hist: tuple[float, ...]              # empirical law of the age
    visit_freq: dict[tuple[int, int], float]  # (last state, age) frequencies
    rep_rewards: tuple[float, ...]
    rep_costs: tuple[float, ...]
    horizon: int
    burn_in: int
    replications: int
    seed: int

    def to_json(self) -> str:
        doc = {
            "avg_reward": {"mean": self.avg_reward, "se": self.avg_reward_se},
            "avg_cost": {"mean": self.avg_cost, "se": self.avg_cost_se},
            "age_hist": list(self.age_hist),
            "visit_freq": {
                f"{s},{age}": p for (s, age), p in sorted(self.visit_freq.items())
            },
            "rep_rewards": list(self.rep_rewards),
            "rep_costs": list(self.rep_costs),
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "replications": self.replications,
            "seed": self.seed,
        }
        return json.dumps(doc, sort_keys=True, indent=1)


def simulate(
    model: FiniteMdp,
    policy: Policy,
    space: BeliefSpace,
    cfg: SimConfig,
    trace_path: str | None = None,
) -> SimReport:
    """Estimate long-run average reward and cost under a belief policy.

    Each replication starts from the stationary law of the uncontrolled
    chain (uniform if the model is action-dependent), resets the tracked
    belief on every successful observation, and otherwise propagates it
    with the chosen action; lookups older than the truncation depth reuse
    the deepest belief of the same origin. Rewards and costs are always
    scored on the true hidden state.
    """
    n, m = model.n_states, model.n_actions
    if policy.pi.shape != (len(space), m):
        raise PolicyDomainMismatch(
            f"policy shape {policy.pi.shape} does not match "
            f"({len(space)}, {m})"
        )
    burn_in = cfg.resolved_burn_in()
    T = cfg.horizon
    counted = T - burn_in

    if model.action_independent():
        gamma = stationary_distribution(model.P[0])
    else:
        gamma = np.full(n, 1.0 / n)
    gamma_cum = np.cumsum(gamma).tolist()

    # Flattened samplers: cumulative rows for bisect-based draws.
    pi_cum = [np.cumsum(policy.pi[b]).tolist() for b in range(len(space))]
    P_cum = [
        [np.cumsum(model.P[a, s]).tolist() for s in range(n)] for a in range(m)
    ]
    succ = [
        [space.successor_index(b, a) for a in range(m)] for b in range(len(space))
    ]
    r_tab = model.r.tolist()
    c_tab = model.c.tolist()
    rho = model.rho

    rep_rewards: list[float] = []
    rep_costs: list[float] = []
    age_counts: dict[int, int] = {}
    visit_counts: dict[tuple[int, int], int] = {}
    trace = open(trace_path, "w") if trace_path else None
    if trace:
        trace.write("t,s_true,observed,age,belief_index,action,reward,cost\n")

    n_hi, m_hi = n - 1, m - 1
    for rep in range(cfg.replications):
        rng = np.random.default_rng([cfg.seed, rep])
        u_init = float(rng.random())
        s = min(bisect_right(gamma_cum, u_init), n_hi)
        b_idx = s
        s_last = s
        age = 0
        u_act = rng.random(T)
        u_obs = rng.random(T)
        u_tr = rng.random(T)
        total_r = 0.0
        total_c = 0.0
        for t in range(T):
            a = min(bisect_right(pi_cum[b_idx], u_act[t]), m_hi)
            counted_step = t >= burn_in
            if counted_step:
                total_r += r_tab[s][a]
                total_c += c_tab[s][a]
                age_counts[age] = age_counts.get(age, 0) + 1
                key = (s_last, age)
                visit_counts[key] = visit_counts.get(key, 0) + 1
            if trace and rep == 0:
                trace.write(
                    f"{t},{s},{int(u_obs[t] < rho)},{age},{b_idx},{a},"
                    f"{r_tab[s][a]},{c_tab[s][a]}\n"
                )
            s_next = min(bisect_right(P_cum[a][s], u_tr[t]), n_hi)
            if u_obs[t] < rho:
                b_idx = s_next
                s_last = s_next
                age = 0
            else:
                nxt = succ[b_idx][a]
                if nxt is not None:
                    b_idx = nxt
                age += 1
            s = s_next
        rep_rewards.append(total_r / counted)
        rep_costs.append(total_c / counted)

    if trace:
        trace.close()

    def mean_se(vals: list[float]) -> tuple[float, float]:
        arr = np.asarray(vals)
        mean = float(arr.mean())
        if arr.size > 1:
            se = float(arr.std(ddof=1) / np.sqrt(arr.size))
        else:
            se = 0.0
        return mean, se

    total_steps = counted * cfg.replications
    max_age = max(age_counts) if age_counts else 0
    hist = tuple(
        age_counts.get(j, 0) / total_steps for j in range(max_age + 1)
    )
    visit_freq = {
        key: cnt / total_steps for key, cnt in sorted(visit_counts.items())
    }
    mr, ser = mean_se(rep_rewards)
    mc, sec = mean_se(rep_costs)
    return SimReport(
        avg_reward=mr,
        avg_reward_se=ser,
        avg_cost=mc,
        avg_cost_se=sec,
        age_hist=hist,
        visit_freq=visit_freq,
        rep_rewards=tuple(rep_rewards),
        rep_costs=tuple(rep_costs),
        horizon=T,
        burn_in=burn_in,
        replications=cfg.replications,
        seed=cfg.seed,
    )


def empirical_age_law(report: SimReport, rho: float) -> float:
    """Total-variation distance of the observed ages from Geometric(rho).

    The geometric law has mass rho * (1-rho)^j on age j = 0, 1, ...; the
    tail beyond the largest observed age is counted in full.
    """
    J = len(report.age_hist)
    q = rho * (1.0 - rho) ** np.arange(J)
    p = np.asarray(report.age_hist)
    tail = (1.0 - rho) ** J
    return float(0.5 * (np.abs(p - q).sum() + tail))
