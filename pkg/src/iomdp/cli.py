"""Command-line front end: validate / solve / simulate / analyze / reproduce.

Exit codes: 0 on success (optimal solve), 2 when the instance itself is
infeasible or fails validation, 1 on input errors. Artifacts are plain CSV
and JSON files written into the output directory. Verbosity is controlled
by the IOMDP_LOG environment variable (error, info, debug).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis as analysis_mod
from . import wireless
from .belief import (
    BOUNDARY_MODES,
    build_belief_space,
    build_kernel,
    dump_kernel_csv,
    dump_space_csv,
    lift_cost,
    lift_reward,
)
from .errors import IomdpError, MissingArtifact
from .lp import (
    build_dual,
    build_primal,
    build_reduced_primal,
    dump_policy_csv,
    dump_solution_json,
    extract_policy,
    load_policy_csv,
    solve_lp,
)
from .mdp_core import FiniteMdp, load_model, stationary_distribution, validate_mdp
from .sim import SimConfig, empirical_age_law, simulate

log = logging.getLogger("iomdp")


@dataclass(frozen=True)
class RunConfig:
    """Typed view of the command-line arguments."""

    command: str
    model_path: str | None = None
    rho: float | None = None
    K: int = wireless.DEFAULT_K
    boundary_mode: str = "drop"
    constrained: bool = False
    B: float | None = None
    seed: int = 0
    horizon: int = 1_000_000
    replications: int = 10
    output_dir: str = "."

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"mode must be one of {BOUNDARY_MODES}")
        if self.rho is not None and not (0.0 < self.rho <= 1.0):
            raise ValueError("rho must lie in (0, 1]")


def _prepare_model(cfg: RunConfig) -> FiniteMdp:
    model = load_model(cfg.model_path)
    if cfg.rho is not None:
        model = dataclasses.replace(model, rho=cfg.rho)
    if cfg.B is not None:
        model = dataclasses.replace(model, B=cfg.B)
    return model


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def cmd_validate(cfg: RunConfig) -> int:
    model = _prepare_model(cfg)
    report = validate_mdp(model)
    print(
        f"valid: recurrence checked over {report.policies_checked} "
        f"deterministic policies ({report.method}); "
        f"max row-sum error {report.max_row_sum_error:.2e}"
    )
    return 0


def _solve_pipeline(cfg: RunConfig, model: FiniteMdp):
    """Shared by solve/analyze: space, kernel, LP choice, solution."""
    space = build_belief_space(model, cfg.K)
    kernel = build_kernel(space, model, cfg.boundary_mode)
    R, C = lift_reward(space, model), lift_cost(space, model)
    if cfg.boundary_mode == "drop" and model.action_independent():
        gamma = stationary_distribution(model.P[0])
        lp = build_reduced_primal(space, model, gamma, constrained=cfg.constrained)
    else:
        if cfg.boundary_mode == "drop" and model.rho < 1.0:
            log.warning(
                "drop-mode balance rows admit no mass on action-dependent "
                "models; expect an infeasible report (use selfloop/forceobs)"
            )
        lp = build_primal(
            space, kernel, R, C, model.B, constrained=cfg.constrained
        )
    sol = solve_lp(lp)
    return space, kernel, R, C, lp, sol


def cmd_solve(cfg: RunConfig) -> int:
    model = _prepare_model(cfg)
    space, kernel, R, C, lp, sol = _solve_pipeline(cfg, model)
    dump_space_csv(space, _out_path(cfg, "belief_space.csv"))
    dump_kernel_csv(kernel, _out_path(cfg, "kernel.csv"))
    dump_solution_json(sol, _out_path(cfg, "solution.json"))
    if sol.status == "infeasible":
        print("infeasible: budget below the minimum achievable average cost")
        return 2
    if sol.status == "unbounded":
        print("unbounded objective; occupancy LPs should never report this")
        return 1
    policy = extract_policy(sol, space)
    dump_policy_csv(policy, space, _out_path(cfg, "policy.csv"))
    dual_sol = solve_lp(build_dual(lp))
    gap = analysis_mod.duality_gap(sol, dual_sol)
    with open(_out_path(cfg, "duality_gap.json"), "w") as f:
        json.dump(
            {
                "primal_objective": sol.objective_value,
                "dual_objective": -dual_sol.objective_value,
                "gap": gap,
            },
            f,
            indent=1,
        )
        f.write("\n")
    print(
        f"optimal: average reward {-sol.objective_value:.6f}, "
        f"duality gap {gap:.2e}"
    )
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    model = _prepare_model(cfg)
    policy_path = os.path.join(cfg.output_dir, "policy.csv")
    if not os.path.exists(policy_path):
        raise MissingArtifact(
            f"{policy_path} not found; run `solve` into the same directory first"
        )
    space = build_belief_space(model, cfg.K)
    policy = load_policy_csv(policy_path, space)
    sim_cfg = SimConfig(
        horizon=cfg.horizon, seed=cfg.seed, replications=cfg.replications
    )
    report = simulate(model, policy, space, sim_cfg)
    with open(_out_path(cfg, "sim_report.json"), "w") as f:
        f.write(report.to_json())
        f.write("\n")
    tv = empirical_age_law(report, model.rho)
    print(
        f"simulated {cfg.replications} x {cfg.horizon} steps: "
        f"reward {report.avg_reward:.6f} (se {report.avg_reward_se:.2e}), "
        f"cost {report.avg_cost:.6f} (se {report.avg_cost_se:.2e}), "
        f"age-law TV {tv:.4f}"
    )
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    model = _prepare_model(cfg)
    validate_mdp(model)
    space, kernel, R, C, lp, sol = _solve_pipeline(cfg, model)
    uniform = np.full((len(space), model.n_actions), 1.0 / model.n_actions)
    diag = analysis_mod.classify_chain(kernel, uniform)
    cert = analysis_mod.check_contraction(kernel, model.rho)
    doc = {
        "recurrent_classes": [list(cls) for cls in diag.recurrent_classes],
        "transient": list(diag.transient),
        "absorption_time": [float(t) for t in diag.absorption_time],
        "dropped_mass": diag.dropped_mass,
        "contraction": {
            "factor": cert.factor,
            "violated": [list(v) for v in cert.violated],
            "max_interior_gap": cert.max_interior_gap,
        },
    }
    if sol.status == "optimal":
        dual_sol = solve_lp(build_dual(lp))
        doc["duality_gap"] = analysis_mod.duality_gap(sol, dual_sol)
    else:
        doc["duality_gap"] = None
        doc["lp_status"] = sol.status
    if model.action_independent():
        gamma = stationary_distribution(model.P[0])
        loop_kernel = build_kernel(space, model, "selfloop")
        doc["nu_max_deviation"] = analysis_mod.verify_nu_closed_form(
            space, loop_kernel, gamma, model.rho
        )
    else:
        doc["nu_max_deviation"] = None
    with open(_out_path(cfg, "analysis.json"), "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    classes = len(diag.recurrent_classes)
    gap = doc["duality_gap"]
    print(
        f"analysis: {classes} recurrent class(es), "
        f"{len(diag.transient)} transient beliefs, "
        f"contraction factor {cert.factor:.3f} "
        f"({len(cert.violated)} violations), "
        + (f"duality gap {gap:.2e}" if gap is not None else "lp not optimal")
    )
    return 0


def cmd_reproduce(cfg: RunConfig) -> int:
    """Solve the built-in wireless instance across the rho sweep and diff
    the emitted low-energy policy tables against the reference values."""
    K = cfg.K
    tables: dict[int, dict[float, list[float]]] = {0: {}, 1: {}}
    for rho in wireless.RHO_SWEEP:
        model = wireless.wireless_model(rho)
        space = build_belief_space(model, K)
        gamma = stationary_distribution(model.P[0])
        lp = build_reduced_primal(space, model, gamma, constrained=True)
        sol = solve_lp(lp)
        if sol.status != "optimal":
            print(f"rho={rho}: LP status {sol.status}")
            return 2
        policy = extract_policy(sol, space)
        for s in (0, 1):
            tables[s][rho] = [
                float(policy.pi[space.index_by_age(s, eta), 0])
                for eta in range(K + 1)
            ]
        log.info("rho=%.1f solved: reward %.6f", rho, -sol.objective_value)

    for s in (0, 1):
        path = _out_path(cfg, f"policy_table_state{s}.csv")
        with open(path, "w", newline="") as f:
            f.write("rho," + ",".join(f"eta_{e}" for e in range(K + 1)) + "\n")
            for rho in wireless.RHO_SWEEP:
                f.write(
                    f"{rho:.1f},"
                    + ",".join(repr(v) for v in tables[s][rho])
                    + "\n"
                )

    n_bad = 0
    diff_path = _out_path(cfg, "reproduce_diff.csv")
    with open(diff_path, "w", newline="") as f:
        f.write("state,rho,eta,computed,reference,abs_diff,ok\n")
        for s in (0, 1):
            for rho in wireless.RHO_SWEEP:
                ref_row = wireless.REFERENCE_LOW_ENERGY[s][rho]
                for eta, ref in enumerate(ref_row):
                    got = tables[s][rho][eta]
                    if ref in (0.0, 1.0):
                        ok = got == ref
                    else:
                        ok = abs(got - ref) <= 5e-3
                    n_bad += not ok
                    f.write(
                        f"{s},{rho:.1f},{eta},{got!r},{ref!r},"
                        f"{abs(got - ref)!r},{int(ok)}\n"
                    )
    total = sum(len(v) for rows in wireless.REFERENCE_LOW_ENERGY.values()
                for v in rows.values())
    print(f"reproduce: {total - n_bad}/{total} reference entries matched")
    return 0 if n_bad == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iomdp",
        description=(
            "Solve, simulate, and analyze constrained average-reward MDPs "
            "with intermittently observed state."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_model: bool = True):
        if with_model:
            p.add_argument("model", help="path to a JSON model file")
        p.add_argument("--rho", type=float, default=None,
                       help="override the observation probability")
        p.add_argument("--K", type=int, default=wireless.DEFAULT_K,
                       help="belief truncation depth (max age)")
        p.add_argument("--mode", choices=BOUNDARY_MODES, default="drop",
                       help="truncation boundary handling")
        p.add_argument("--B", type=float, default=None,
                       help="override the budget")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("validate", help="check stochasticity and recurrence")
    add_common(p)
    p = sub.add_parser("solve", help="solve the truncated occupancy LP")
    add_common(p)
    p.add_argument("--constrained", action="store_true",
                   help="include the budget row")
    p = sub.add_parser("simulate", help="Monte Carlo run of a solved policy")
    add_common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=1_000_000)
    p.add_argument("--reps", type=int, default=10)
    p = sub.add_parser("analyze", help="structural checks and duality gap")
    add_common(p)
    p.add_argument("--constrained", action="store_true")
    p = sub.add_parser("reproduce",
                       help="rebuild the wireless policy tables and diff "
                            "them against the reference values")
    add_common(p, with_model=False)
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "reproduce": cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("IOMDP_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR))
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            model_path=getattr(args, "model", None),
            rho=args.rho,
            K=args.K,
            boundary_mode=args.mode,
            constrained=getattr(args, "constrained", False),
            B=args.B,
            seed=getattr(args, "seed", 0),
            horizon=getattr(args, "horizon", 1_000_000),
            replications=getattr(args, "reps", 10),
            output_dir=args.out,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return COMMANDS[cfg.command](cfg)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IomdpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
