"""
Mining Frequency Subproblem
The block-mining frequencies only enter U through
    h(f) = (alpha*q*sum_n Z_n*v_n*f_n^3 - eta*alpha*q) / sum_n f_n,
a fractional program solved by an inner Dinkelbach bisection on mu with a
closed-form best response for each mu.
"""

from typing import NamedTuple, Tuple

import numpy as np

from errors import NonConvergenceError
from solver.subproblems import RoundProblem

MAX_MINING_ITERATIONS = 100


class MiningSolution(NamedTuple):
    mine_freq: np.ndarray
    value: float
    mu: float
    iterations: int


def mining_bracket(problem: RoundProblem, eta: float) -> Tuple[float, float]:
    """
    Lower and upper bounds of h over the box f_min <= f <= f_max, split on the sign of eta.
    """
    clients = problem.clients
    aq = problem.mining_scale
    sum_fmin, sum_fmax = float(clients.f_min.sum()), float(clients.f_max.sum())
    cubic_min = aq * float(np.dot(problem.backlog, clients.switch_cap * clients.f_min ** 3))
    cubic_max = aq * float(np.dot(problem.backlog, clients.switch_cap * clients.f_max ** 3))
    if eta >= 0:
        lower = -eta * aq / sum_fmin + cubic_min / sum_fmax
        upper = cubic_max / sum_fmin - eta * aq / sum_fmax
    else:
        lower = cubic_min / sum_fmax - eta * aq / sum_fmax
        upper = cubic_max / sum_fmin - eta * aq / sum_fmin
    return lower, upper


def best_response(problem: RoundProblem, mu: float) -> np.ndarray:
    """
    Minimizer of alpha*q*sum(Z*v*f^3) - mu*sum(f) over the box:
    f = clamp(sqrt(mu / (3*alpha*q*Z*v)), f_min, f_max). A zero backlog
    leaves a linear term; its tie at mu = 0 goes to f_max.
    """
    clients = problem.clients
    z = problem.backlog
    freqs = np.where(mu >= 0, clients.f_max, clients.f_min).astype(float)
    positive = z > 0
    if mu > 0 and positive.any():
        root = np.sqrt(mu / (3.0 * problem.mining_scale * z[positive] * clients.switch_cap[positive]))
        freqs[positive] = np.clip(root, clients.f_min[positive], clients.f_max[positive])
    elif positive.any():
        freqs[positive] = clients.f_min[positive]
    return freqs


def _parametric_value(problem: RoundProblem, freqs: np.ndarray, eta: float, mu: float) -> float:
    cubic = float(np.dot(problem.backlog, problem.clients.switch_cap * freqs ** 3))
    return problem.mining_scale * (cubic - eta) - mu * float(freqs.sum())


def solve_mining_freq(problem: RoundProblem, eta: float, tol: float,
                      max_iterations: int = MAX_MINING_ITERATIONS) -> MiningSolution:
    """
    Inner Dinkelbach bisection for the mining frequencies.

    Args:
        problem: Round data
        eta: Outer Dinkelbach parameter
        tol: Stop once the parametric optimum is within tol of zero

    Returns:
        MiningSolution with the frequencies and the value of h

    Raises:
        NonConvergenceError: the iteration cap was reached
    """
    lower, upper = mining_bracket(problem, eta)

    for iteration in range(1, max_iterations + 1):
        mu = 0.5 * (lower + upper)
        freqs = best_response(problem, mu)
        residual = _parametric_value(problem, freqs, eta, mu)

        if abs(residual) <= tol:
            return _finalize(problem, freqs, eta, mu, iteration)

        if residual < 0:
            upper = min(mu, problem.mining_value(freqs, eta))
        else:
            lower = mu

        # Bracket collapsed to floating-point resolution
        if upper - lower <= 4 * np.finfo(float).eps * max(abs(lower), abs(upper), 1e-300):
            return _finalize(problem, freqs, eta, mu, iteration)

    raise NonConvergenceError("mining-frequency bisection did not reach tolerance",
                              stage="mining", iterations=max_iterations)


def _finalize(problem: RoundProblem, freqs: np.ndarray, eta: float, mu: float, iterations: int) -> MiningSolution:
    # Corner points guard the zero-backlog degeneracy
    clients = problem.clients
    best = min((freqs, clients.f_max.astype(float), clients.f_min.astype(float)),
               key=lambda f: problem.mining_value(f, eta))
    return MiningSolution(mine_freq=best.copy(), value=problem.mining_value(best, eta),
                          mu=mu, iterations=iterations)
