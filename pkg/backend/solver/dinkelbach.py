"""
DRACS Round Solver: Dinkelbach Bisection over Block Coordinate Descent
Minimizes the drift-plus-penalty ratio of one round. The outer loop bisects
eta on the ratio bracket; for each eta the parametric objective U splits into
the mining part (closed form + inner Dinkelbach) and the joint
scheduling/frequency/power part (block coordinate descent with restarts).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import SystemConfig
from errors import NonConvergenceError
from lyapunov import QueueState, delta_bounds
from solver.mining import solve_mining_freq
from solver.subproblems import RoundProblem, solve_scheduling, solve_train_freq, solve_tx_power
from system_model import Action, ChannelState, ClientArrays

logger = logging.getLogger(__name__)

MAX_OUTER_ITERATIONS = 64
MAX_BCD_PASSES = 50
OUTER_MARGIN = 5


@dataclass
class SolverState:
    """Outer bisection state of one round."""

    lower: float
    upper: float
    tol: float
    bcd_restarts: int
    eta: float = 0.0
    mu: float = 0.0
    s: int = 0
    l2: int = 0
    l3: int = 0

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def next_eta(self) -> float:
        self.s += 1
        self.eta = 0.5 * (self.lower + self.upper)
        return self.eta

    def refine(self, inf_u: float, best_ratio: float):
        """Negative infimum puts the optimum below eta, positive above it."""
        if inf_u < 0:
            self.upper = min(self.eta, best_ratio)
            # A pool action below the bracket: collapse onto it
            self.lower = min(self.lower, self.upper)
        else:
            self.lower = self.eta


@dataclass
class BcdResult:
    schedule: np.ndarray
    train_freq: np.ndarray
    tx_power: np.ndarray
    value: float
    passes: int
    trace: List[float] = field(default_factory=list)


@dataclass
class SolveReport:
    """Outcome and diagnostics of one round solve."""

    action: Action
    ratio: float
    eta: float
    residual: float
    tol: float
    iterations: Dict[str, int]
    initial_bracket: Tuple[float, float]
    bracket: Tuple[float, float]
    outer_cap: int
    bcd_traces: List[List[float]] = field(default_factory=list)
    bracket_widths: List[float] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "ratio": self.ratio,
            "eta": self.eta,
            "residual": self.residual,
            "tol": self.tol,
            "L1": self.iterations["L1"],
            "L2": self.iterations["L2"],
            "L3": self.iterations["L3"],
            "outer_cap": self.outer_cap,
            "scheduled": self.action.num_scheduled,
        }


# ============================================================================
# BLOCK COORDINATE DESCENT
# ============================================================================

def starting_points(problem: RoundProblem, rng: np.random.Generator, restarts: int,
                    fixed_schedule: Optional[np.ndarray] = None) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Everyone scheduled at f_max and P_max, then uniform-random feasible starts."""
    clients = problem.clients
    n = problem.num_clients
    schedule = np.ones(n, dtype=int) if fixed_schedule is None else np.asarray(fixed_schedule, dtype=int)
    points = [(schedule.copy(), clients.f_max.copy(), clients.p_max.copy())]
    for _ in range(restarts - 1):
        random_schedule = rng.integers(0, 2, size=n) if fixed_schedule is None else schedule.copy()
        points.append((
            random_schedule.astype(int),
            rng.uniform(clients.f_min, clients.f_max),
            rng.uniform(clients.p_min, clients.p_max),
        ))
    return points


def _descend(problem: RoundProblem, eta: float, schedule, train_freq, tx_power,
             schedule_fixed: bool, max_passes: int) -> BcdResult:
    tol = problem.config.bcd_tol
    value = problem.g_value(schedule, train_freq, tx_power, eta)
    trace = [value]

    for passes in range(1, max_passes + 1):
        previous = value
        if not schedule_fixed:
            schedule = solve_scheduling(problem, train_freq, tx_power, eta, current=schedule)
            trace.append(problem.g_value(schedule, train_freq, tx_power, eta))
        train_freq = solve_train_freq(problem, schedule, tx_power, eta, current=train_freq)
        trace.append(problem.g_value(schedule, train_freq, tx_power, eta))
        tx_power = solve_tx_power(problem, schedule, train_freq, eta, current=tx_power)
        value = problem.g_value(schedule, train_freq, tx_power, eta)
        trace.append(value)

        if previous - value <= tol * max(1.0, abs(previous)):
            return BcdResult(schedule, train_freq, tx_power, value, passes, trace)

    raise NonConvergenceError("block coordinate descent kept improving",
                              stage="bcd", iterations=max_passes)


def bcd_loop(problem: RoundProblem, eta: float, rng: Optional[np.random.Generator] = None,
             restarts: Optional[int] = None, fixed_schedule: Optional[np.ndarray] = None,
             warm_start: Optional[Action] = None, max_passes: int = MAX_BCD_PASSES) -> BcdResult:
    """
    Cycle scheduling -> training frequency -> transmit power until g stalls.

    Args:
        problem: Round data
        eta: Outer Dinkelbach parameter
        rng: Generator for the random restarts
        restarts: Number of starting points (defaults to config.bcd_restarts)
        fixed_schedule: Freeze the schedule block (baseline policies)
        warm_start: Extra starting point, e.g. the incumbent of the previous eta

    Returns:
        Best BcdResult over all starting points
    """
    if rng is None:
        rng = np.random.default_rng(problem.config.rng_seed)
    restarts = problem.config.bcd_restarts if restarts is None else restarts

    points = starting_points(problem, rng, restarts, fixed_schedule)
    if warm_start is not None:
        schedule = warm_start.schedule if fixed_schedule is None else np.asarray(fixed_schedule, dtype=int)
        points.append((schedule.copy(), warm_start.train_freq.copy(), warm_start.tx_power.copy()))

    best: Optional[BcdResult] = None
    for schedule, train_freq, tx_power in points:
        result = _descend(problem, eta, schedule, train_freq, tx_power,
                          schedule_fixed=fixed_schedule is not None, max_passes=max_passes)
        if best is None or result.value < best.value:
            best = result
    return best


# ============================================================================
# OUTER DINKELBACH
# ============================================================================

def round_tolerance(width: float, config: SystemConfig) -> float:
    """xi = max(absolute floor, relative tolerance * bracket width)."""
    return max(config.dinkelbach_tol, config.dinkelbach_rel_tol * abs(width))


def outer_iteration_cap(width: float, tol: float) -> int:
    bits = math.ceil(math.log2(width / tol)) if width > tol else 0
    return min(MAX_OUTER_ITERATIONS, bits + OUTER_MARGIN)


def solve_round(channel: ChannelState, queues: QueueState, clients: ClientArrays, config: SystemConfig,
                rng: Optional[np.random.Generator] = None, fixed_schedule: Optional[np.ndarray] = None,
                lyapunov_v: Optional[float] = None) -> SolveReport:
    """
    Minimize the drift-plus-penalty ratio of one round.

    Args:
        channel: Channel gains observed this round
        queues: Virtual queue backlogs
        clients: Client columns
        config: System constants and solver tolerances
        rng: Generator for BCD restarts
        fixed_schedule: Optimize only the continuous variables for this schedule
        lyapunov_v: Override of config.lyapunov_v

    Returns:
        SolveReport whose action has |inf U(eta*)| <= xi

    Raises:
        NonConvergenceError: outer, BCD or mining iteration caps exceeded
    """
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    problem = RoundProblem(channel, queues, clients, config, lyapunov_v=lyapunov_v)
    bound_config = config if lyapunov_v is None else config.with_updates(lyapunov_v=lyapunov_v)
    lower, upper = delta_bounds(queues, clients, bound_config, variant="safe")

    tol = round_tolerance(upper - lower, config)
    cap = outer_iteration_cap(upper - lower, tol)
    state = SolverState(lower=lower, upper=upper, tol=tol, bcd_restarts=config.bcd_restarts)

    numerators: List[float] = []
    latencies: List[float] = []
    actions: List[Action] = []
    traces: List[List[float]] = []
    widths = [state.width]
    incumbent: Optional[Action] = None

    while state.s < cap:
        eta = state.next_eta()
        inner = bcd_loop(problem, eta, rng=rng, fixed_schedule=fixed_schedule, warm_start=incumbent)
        mining = solve_mining_freq(problem, eta, tol)
        state.mu = mining.mu
        state.l2 = max(state.l2, inner.passes)
        state.l3 = max(state.l3, mining.iterations)
        traces.append(inner.trace)

        action = Action(inner.schedule, inner.tx_power, inner.train_freq, mining.mine_freq)
        numerator, latency = problem.terms(action)
        numerators.append(numerator)
        latencies.append(latency)
        actions.append(action)

        parametric = np.asarray(numerators) - eta * np.asarray(latencies)
        best_u = int(np.argmin(parametric))
        inf_u = float(parametric[best_u])
        incumbent = actions[best_u]
        ratios = np.asarray(numerators) / np.asarray(latencies)
        best_ratio = int(np.argmin(ratios))

        if abs(inf_u) <= tol:
            logger.debug("round solved: eta=%.6g residual=%.3g s=%d", eta, inf_u, state.s)
            return SolveReport(
                action=actions[best_ratio].copy(),
                ratio=float(ratios[best_ratio]),
                eta=eta,
                residual=abs(inf_u),
                tol=tol,
                iterations={"L1": state.s, "L2": state.l2, "L3": state.l3},
                initial_bracket=(lower, upper),
                bracket=(state.lower, state.upper),
                outer_cap=cap,
                bcd_traces=traces,
                bracket_widths=widths,
            )

        state.refine(inf_u, float(ratios[best_ratio]))
        widths.append(state.width)

    raise NonConvergenceError("Dinkelbach bisection did not reach |inf U| <= xi",
                              stage="dinkelbach", iterations=cap)


def infimum_u(channel: ChannelState, queues: QueueState, clients: ClientArrays, config: SystemConfig,
              eta: float, rng: Optional[np.random.Generator] = None,
              fixed_schedule: Optional[np.ndarray] = None) -> Tuple[float, Action]:
    """Inner minimum of U at a given eta (used to check the sign behaviour around eta*)."""
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    problem = RoundProblem(channel, queues, clients, config)
    bracket = delta_bounds(queues, clients, config, variant="safe")
    tol = round_tolerance(bracket[1] - bracket[0], config)
    inner = bcd_loop(problem, eta, rng=rng, fixed_schedule=fixed_schedule)
    mining = solve_mining_freq(problem, eta, tol)
    action = Action(inner.schedule, inner.tx_power, inner.train_freq, mining.mine_freq)
    return inner.value + mining.value, action
