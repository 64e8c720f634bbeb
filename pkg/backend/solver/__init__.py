"""
Per-round optimizer: block subproblems, mining frequencies, Dinkelbach/BCD
driver and the brute-force oracle.
"""

from solver.dinkelbach import SolveReport, bcd_loop, infimum_u, solve_round
from solver.mining import solve_mining_freq
from solver.oracle import OracleResult, brute_force_round
from solver.subproblems import RoundProblem, solve_scheduling, solve_train_freq, solve_tx_power

__all__ = [
    "OracleResult",
    "RoundProblem",
    "SolveReport",
    "bcd_loop",
    "brute_force_round",
    "infimum_u",
    "solve_mining_freq",
    "solve_round",
    "solve_scheduling",
    "solve_train_freq",
    "solve_tx_power",
]
