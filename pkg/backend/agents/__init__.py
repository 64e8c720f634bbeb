"""
Scheduling policy agents and the round-loop orchestrator
"""

from .policy_agent import PolicyAgent
from .dracs_agent import DracsAgent
from .channel_state_agent import ChannelStateAgent
from .energy_consumption_agent import EnergyConsumptionAgent
from .select_all_agent import SelectAllAgent
from .orchestrator_agent import OrchestratorAgent, build_policy, run

__all__ = [
    'PolicyAgent',
    'DracsAgent',
    'ChannelStateAgent',
    'EnergyConsumptionAgent',
    'SelectAllAgent',
    'OrchestratorAgent',
    'build_policy',
    'run'
]
