"""
Orchestrator Agent: Round Loop
Runs one simulation: observe the channel, let the policy decide, realize the
round, train and aggregate the FL model, update the virtual queues and
record metrics.
"""

import logging
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).resolve().parent.parent))

from agents.channel_state_agent import ChannelStateAgent
from agents.dracs_agent import DracsAgent
from agents.energy_consumption_agent import EnergyConsumptionAgent
from agents.policy_agent import PolicyAgent
from agents.select_all_agent import SelectAllAgent
from config import PolicyKind, SimConfig
from errors import NonConvergenceError
from federated import FederatedTrainer
from lyapunov import QueueState
from metrics import MetricsSeries
from solver.oracle import brute_force_round
from system_model import ClientArrays, evaluate_action, sample_channel, sample_mining_time

logger = logging.getLogger(__name__)

ORACLE_MAX_CLIENTS = 3
ORACLE_LEVELS = 6


def build_policy(sim_config: SimConfig) -> PolicyAgent:
    """Policy agent for the configured kind; baselines may carry their own V."""
    kind = PolicyKind(sim_config.policy)
    if kind is PolicyKind.DRACS:
        return DracsAgent()
    v = sim_config.baseline_v
    if kind is PolicyKind.CS:
        return ChannelStateAgent(lyapunov_v=v)
    if kind is PolicyKind.EC:
        return EnergyConsumptionAgent(sim_config.num_clients, lyapunov_v=v)
    return SelectAllAgent(lyapunov_v=v)


class OrchestratorAgent:
    """
    Owns every piece of per-run state: random streams, queues, the policy
    (and a shadow DRACS agent when the policy needs a count hint) and the
    FL trainer.
    """

    def __init__(self, sim_config: SimConfig, learning: bool = True, oracle: bool = False):
        self.sim_config = sim_config
        self.system = sim_config.system
        self.clients = ClientArrays.from_profiles(sim_config.clients)
        self.learning = learning
        self.oracle = oracle and sim_config.num_clients <= ORACLE_MAX_CLIENTS
        if oracle and not self.oracle:
            logger.warning("Oracle cross-check skipped: needs at most %d clients", ORACLE_MAX_CLIENTS)

        channel_seq, solver_seq, mining_seq, data_seq = np.random.SeedSequence(self.system.rng_seed).spawn(4)
        self.channel_rng = np.random.default_rng(channel_seq)
        self.solver_rng = np.random.default_rng(solver_seq)
        self.mining_rng = np.random.default_rng(mining_seq)
        self.data_rng = np.random.default_rng(data_seq)

        self.policy = build_policy(sim_config)
        self.shadow = DracsAgent() if self.policy.needs_hint else None
        self.trainer = FederatedTrainer.from_config(sim_config, self.data_rng) if learning else None
        self.trace_logger = None

    def set_trace_logger(self, trace_logger):
        """Set the trace logger instance."""
        self.trace_logger = trace_logger

    def run(self) -> MetricsSeries:
        """
        Simulate up to `rounds` rounds (fewer when the time budget runs out).

        Raises:
            NonConvergenceError: tagged with the failing round
        """
        cfg = self.sim_config
        clients = self.clients
        queues = QueueState.empty(len(clients))
        series = MetricsSeries(num_clients=len(clients), client_types=clients.client_type)
        v = self.policy.lyapunov_v if self.policy.lyapunov_v is not None else self.system.lyapunov_v
        elapsed = 0.0

        logger.info("Starting %s run: %d clients, %d rounds, V=%g",
                    PolicyKind(cfg.policy).value, len(clients), cfg.rounds, v)

        for t in range(1, cfg.rounds + 1):
            channel = sample_channel(self.channel_rng, clients, self.system)

            try:
                hint = None
                if self.shadow is not None:
                    self.shadow.decide(channel, queues, clients, self.system, self.solver_rng)
                    hint = self.shadow.scheduled_count
                action, reason, metadata = self.policy.decide(
                    channel, queues, clients, self.system, self.solver_rng, count_hint=hint)
            except NonConvergenceError as error:
                self._log(t, self.policy.name, "decide", {"round": t}, {}, str(error), status="error")
                raise error.at_round(t) from error

            self._log(t, self.policy.name, "decide",
                      {"backlog": queues.backlog, "gain": channel.gain, "count_hint": hint},
                      metadata, reason)

            if self.oracle:
                self._oracle_check(t, channel, queues, series)

            tau_bloc = sample_mining_time(self.mining_rng, action.mine_freq, self.system) \
                if cfg.stochastic_mining else None
            outcome = evaluate_action(action, channel, clients, self.system, tau_bloc=tau_bloc)
            delta_v = (-v * outcome.data_size + float(np.dot(queues.backlog, outcome.energy))) / outcome.latency

            loss, accuracy = math.nan, math.nan
            if self.trainer is not None:
                self.trainer.run_round(action.schedule)
                if t % cfg.metric_cadence == 0 or t == cfg.rounds:
                    loss, accuracy = self.trainer.evaluate()

            queues = queues.advance(outcome.energy, clients.energy_supply, outcome.latency)
            self.policy.observe(outcome)
            series.record(outcome, queues.backlog, delta_v, action.num_scheduled,
                          loss=loss, accuracy=accuracy, iterations=self.policy.last_report.iterations)

            self._log(t, "OrchestratorAgent", "queue_update",
                      {"energy": outcome.energy, "latency": outcome.latency},
                      {"backlog": queues.backlog},
                      f"Round {t}: tau={outcome.latency:.4g}s, D={outcome.data_size:g}")

            elapsed += outcome.latency
            if cfg.time_budget is not None and elapsed >= cfg.time_budget:
                logger.info("Time budget %.4gs reached after %d rounds", cfg.time_budget, t)
                break

            if t % max(1, cfg.rounds // 10) == 0:
                logger.debug("round %d/%d: elapsed %.4gs, max backlog %.4g",
                             t, cfg.rounds, elapsed, float(queues.backlog.max()))

        return series

    def _oracle_check(self, t: int, channel, queues: QueueState, series: MetricsSeries):
        report = self.policy.last_report
        result = brute_force_round(channel, queues, self.clients, self.system, levels=ORACLE_LEVELS)
        series.oracle_checks.append({"round": t, "solver_ratio": report.ratio, "oracle_ratio": result.ratio})
        if report.ratio > result.ratio + report.tol:
            logger.warning("Round %d: solver ratio %.6g above grid optimum %.6g",
                           t, report.ratio, result.ratio)

    def _log(self, t, agent_name, action, input_data, output_data, reason, status="success"):
        if self.trace_logger is not None:
            self.trace_logger.log_trace(agent_name=agent_name, action=action, input_data=input_data,
                                        output_data=output_data, decision_reason=reason,
                                        status=status, round_index=t)


def run(sim_config: SimConfig, trace_logger=None, learning: bool = True, oracle: bool = False) -> MetricsSeries:
    """Run one simulation and return its per-round metrics."""
    orchestrator = OrchestratorAgent(sim_config, learning=learning, oracle=oracle)
    if trace_logger is not None:
        orchestrator.set_trace_logger(trace_logger)
    return orchestrator.run()
