"""
Command-line entry point of the blockchain-assisted FL scheduling simulator.

    python backend/main.py run --config config/desk.cfg --policy dracs --v 10000 --seed 1
    python backend/main.py sweep --config config/desk.cfg --v 1000 3000 5000 --seeds 1 2 3
    python backend/main.py validate --paper-params
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

# Add current directory to path
sys.path.append(str(Path(__file__).resolve().parent))

from agents.orchestrator_agent import run as run_simulation
from config import (
    ExperimentSpec,
    PolicyKind,
    SimConfig,
    desk_profiles,
    desk_sim_config,
    describe_si,
    load_sim_config,
    reference_system_config,
)
from database import ResultStore
from errors import ConfigError, SimulationError
from lyapunov import QueueState, energy_excess_bound, tau_bounds, theorem_bounds, theorem_gap_bounds
from metrics import MetricsSeries
from observability.trace_logger import TraceLogger
from system_model import ClientArrays
from utils.excel_generator import SweepWorkbook

logger = logging.getLogger("bflsim")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


# ============================================================================
# ONE CELL
# ============================================================================

def theorem_diagnostics(sim_config: SimConfig, v: float, rounds: int) -> Dict:
    """Analytic constants and trade-off bounds at the initial (empty) backlog."""
    clients = ClientArrays.from_profiles(sim_config.clients)
    system = sim_config.system.with_updates(lyapunov_v=v)
    z0 = np.zeros(len(clients))
    bounds = theorem_bounds(QueueState.empty(len(clients)), clients, system)
    gap = theorem_gap_bounds(bounds, v, rounds, z0)
    printed_min, printed_max = tau_bounds(clients, system)
    return {
        **bounds._asdict(),
        "tau_min_printed": printed_min,
        "tau_max_printed": printed_max,
        "optimality_gap": gap.optimality_gap,
        "energy_excess": gap.energy_excess,
        "energy_excess_minus": energy_excess_bound(bounds, v, rounds, z0, sign=-1.0),
    }


def solver_statistics(series: MetricsSeries) -> Dict:
    stats = {}
    for stage in ("L1", "L2", "L3"):
        values = [it[stage] for it in series.solver_iterations if stage in it]
        if values:
            stats[stage] = {"mean": float(np.mean(values)), "max": int(np.max(values))}
    return stats


def cell_config(base: SimConfig, policy: PolicyKind, v: float, seed: int,
                rounds: Optional[int], stochastic_mining: bool) -> SimConfig:
    updates = {
        "policy": policy,
        "system": base.system.with_updates(lyapunov_v=v, rng_seed=seed),
        "stochastic_mining": stochastic_mining or base.stochastic_mining,
    }
    if rounds is not None:
        updates["rounds"] = rounds
    return base.with_updates(**updates)


def run_cell(task: Tuple[str, SimConfig, str, bool, bool, bool]) -> Dict:
    """
    Run one sweep cell and write its CSV and JSON summary.

    Returns:
        Record with the cell name, its parameters, status and summary
    """
    name, sim_config, output_dir, learning, oracle, trace = task
    store = ResultStore(output_dir)
    v = sim_config.system.lyapunov_v
    params = {"policy": PolicyKind(sim_config.policy).value, "v": v, "seed": sim_config.system.rng_seed}

    trace_logger = TraceLogger(str(Path(output_dir) / f"{name}.trace.jsonl")) if trace else None
    try:
        series = run_simulation(sim_config, trace_logger=trace_logger, learning=learning, oracle=oracle)
    except SimulationError as error:
        logger.error("Cell %s failed: %s", name, error)
        return {"cell": name, "params": params, "status": "failed", "error": str(error), "summary": {}}

    store.save_series(name, series)
    summary = series.summary()
    report = {
        **summary,
        "params": params,
        "theorem": theorem_diagnostics(sim_config, v, len(series)),
        "solver": solver_statistics(series),
        "oracle_checks": series.oracle_checks,
    }
    store.save_summary(name, report)
    logger.info("Cell %s: %d rounds, LTA data %.6g samples/s", name, summary["rounds"], summary["lta_data"])
    return {"cell": name, "params": params, "status": "ok", "summary": summary}


def run_experiment(spec: ExperimentSpec, base: SimConfig) -> int:
    """
    Run every cell of a sweep; a failing cell is recorded and the sweep goes on.

    Returns:
        Exit status (0 when every cell succeeded)
    """
    tasks = [
        (name, cell_config(base, policy, v, seed, spec.rounds, spec.stochastic_mining),
         spec.output_dir, spec.learning, spec.oracle, spec.trace)
        for name, policy, v, seed in spec.cells()
    ]
    logger.info("Running %d cells with %d worker(s)", len(tasks), spec.workers)

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(run_cell, tasks))
    else:
        records = [run_cell(task) for task in tasks]

    store = ResultStore(spec.output_dir)
    ok = [r for r in records if r["status"] == "ok"]
    failed = [r for r in records if r["status"] != "ok"]
    store.save_sweep(ok, failed)

    if spec.xlsx:
        workbook = SweepWorkbook()
        for record in records:
            workbook.add_cell(record["cell"], record["params"], record["summary"], record["status"])
        workbook.save(Path(spec.output_dir) / "sweep.xlsx")

    return EXIT_OK if not failed else EXIT_FAILED


# ============================================================================
# CLI
# ============================================================================

def _base_config(path: Optional[str]) -> SimConfig:
    return load_sim_config(path) if path else desk_sim_config()


def _policies(values: Sequence[str]) -> Tuple[PolicyKind, ...]:
    return tuple(PolicyKind(v) for v in values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bflsim", description="Blockchain-assisted FL scheduling simulator")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub):
        sub.add_argument("--config", help="INI config (defaults to the built-in desk setup)")
        sub.add_argument("--rounds", type=int, help="Override the number of rounds")
        sub.add_argument("--output", default="results", help="Output directory")
        sub.add_argument("--stochastic-mining", action="store_true", help="Draw the mining time per round")
        sub.add_argument("--oracle", action="store_true", help="Cross-check each round by grid search (N <= 3)")
        sub.add_argument("--trace", action="store_true", help="Write JSONL decision traces")
        sub.add_argument("--no-learning", action="store_true", help="Skip FL training and evaluation")

    run_cmd = commands.add_parser("run", help="Run one simulation")
    common(run_cmd)
    run_cmd.add_argument("--policy", default="dracs", choices=[p.value for p in PolicyKind])
    run_cmd.add_argument("--v", type=float, help="Lyapunov weight V")
    run_cmd.add_argument("--seed", type=int, help="Random seed")

    sweep_cmd = commands.add_parser("sweep", help="Run a policy x V x seed sweep")
    common(sweep_cmd)
    sweep_cmd.add_argument("--policy", nargs="+", default=["dracs"], choices=[p.value for p in PolicyKind])
    sweep_cmd.add_argument("--v", nargs="+", type=float, default=[1e4])
    sweep_cmd.add_argument("--seeds", nargs="+", type=int, default=[1])
    sweep_cmd.add_argument("--workers", type=int, default=1)
    sweep_cmd.add_argument("--xlsx", action="store_true", help="Also write sweep.xlsx")

    validate_cmd = commands.add_parser("validate", help="Load a config and echo it in SI units")
    validate_cmd.add_argument("--config")
    validate_cmd.add_argument("--paper-params", "--reference-params", dest="reference_params", action="store_true",
                              help="Use the reference experiment constants")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "validate":
            if args.reference_params:
                config = SimConfig(system=reference_system_config(), clients=desk_profiles(per_type=10))
            else:
                config = _base_config(args.config)
            print(json.dumps(describe_si(config), indent=2, default=str))
            return EXIT_OK

        base = _base_config(args.config)
        if args.command == "run":
            spec = ExperimentSpec(
                config_path=args.config,
                policies=_policies([args.policy]),
                v_values=(args.v if args.v is not None else base.system.lyapunov_v,),
                seeds=(args.seed if args.seed is not None else base.system.rng_seed,),
                rounds=args.rounds,
                output_dir=args.output,
                stochastic_mining=args.stochastic_mining,
                learning=not args.no_learning,
                oracle=args.oracle,
                trace=args.trace,
            )
        else:
            spec = ExperimentSpec(
                config_path=args.config,
                policies=_policies(args.policy),
                v_values=tuple(args.v),
                seeds=tuple(args.seeds),
                rounds=args.rounds,
                output_dir=args.output,
                workers=args.workers,
                stochastic_mining=args.stochastic_mining,
                learning=not args.no_learning,
                oracle=args.oracle,
                trace=args.trace,
                xlsx=args.xlsx,
            )
    except ConfigError as error:
        print(f"config error: {error}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as error:
        print(f"invalid arguments: {error.errors()[0].get('msg')}", file=sys.stderr)
        return EXIT_CONFIG

    return run_experiment(spec, base)


if __name__ == "__main__":
    sys.exit(main())
