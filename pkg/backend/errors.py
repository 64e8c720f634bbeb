"""
Simulation Errors
Exception hierarchy shared by the models, the solver, the agents and the CLI.
"""

from typing import Optional


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(SimulationError):
    """Invalid or unreadable configuration."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")


class InvalidChannelError(SimulationError):
    """Channel power gain must be strictly positive."""


class MiningError(SimulationError):
    """Block mining needs a positive aggregate mining frequency."""


class NonConvergenceError(SimulationError):
    """An iterative stage exceeded its iteration cap."""

    def __init__(self, message: str, stage: str, iterations: int, round_index: Optional[int] = None):
        self.stage = stage
        self.iterations = iterations
        self.round_index = round_index
        suffix = f" (round {round_index})" if round_index is not None else ""
        super().__init__(f"{stage}: {message} after {iterations} iterations{suffix}")

    def at_round(self, round_index: int) -> "NonConvergenceError":
        """Return a copy tagged with the simulation round it happened in."""
        return NonConvergenceError(
            str(self).split(" after ")[0].split(": ", 1)[-1],
            stage=self.stage,
            iterations=self.iterations,
            round_index=round_index,
        )


class MissingHintError(SimulationError):
    """CS and EC scheduling need the DRACS schedule size of the round."""


class InfeasibleCaseError(SimulationError):
    """A straggler case cannot be met by the other scheduled clients."""


class OracleBudgetError(SimulationError):
    """Brute-force enumeration would exceed the allowed budget."""
