"""
System Model: Channel, Latency and Energy
Physical cost formulas for local training, uplink transmission and block mining.

Every formula accepts either a single ClientProfile (scalars) or a
ClientArrays bundle (one numpy entry per client) and broadcasts accordingly.
Units are SI throughout.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from config import ClientProfile, SystemConfig
from errors import InvalidChannelError, MiningError

# log2(1 + snr) switches to the log-domain form above this SNR
SNR_LOG_DOMAIN = 1e12


@dataclass(frozen=True)
class ClientArrays:
    """Column view of a list of client profiles."""

    dataset_size: np.ndarray
    cycles_per_sample: np.ndarray
    switch_cap: np.ndarray
    model_bits: np.ndarray
    distance: np.ndarray
    f_min: np.ndarray
    f_max: np.ndarray
    p_min: np.ndarray
    p_max: np.ndarray
    energy_supply: np.ndarray
    client_type: tuple = ()

    @classmethod
    def from_profiles(cls, profiles: Sequence[ClientProfile]) -> "ClientArrays":
        def column(name):
            return np.array([getattr(p, name) for p in profiles], dtype=float)

        return cls(
            dataset_size=column("dataset_size"),
            cycles_per_sample=column("cycles_per_sample"),
            switch_cap=column("switch_cap"),
            model_bits=column("model_bits"),
            distance=column("distance"),
            f_min=column("f_min"),
            f_max=column("f_max"),
            p_min=column("p_min"),
            p_max=column("p_max"),
            energy_supply=column("energy_supply"),
            client_type=tuple(p.client_type for p in profiles),
        )

    def __len__(self) -> int:
        return len(self.dataset_size)

    def workload(self, local_epochs: int) -> np.ndarray:
        """CPU cycles of one round of local training, c*K*D."""
        return self.cycles_per_sample * local_epochs * self.dataset_size


Client = Union[ClientProfile, ClientArrays]


@dataclass(frozen=True)
class ChannelState:
    """Small-scale fading draw and resulting uplink power gain per client."""
    rho: np.ndarray
    gain: np.ndarray


@dataclass
class Action:
    """Decision vector of one round: schedule, powers, training and mining frequencies."""

    schedule: np.ndarray
    tx_power: np.ndarray
    train_freq: np.ndarray
    mine_freq: np.ndarray

    def __post_init__(self):
        self.schedule = np.asarray(self.schedule, dtype=int)
        self.tx_power = np.asarray(self.tx_power, dtype=float)
        self.train_freq = np.asarray(self.train_freq, dtype=float)
        self.mine_freq = np.asarray(self.mine_freq, dtype=float)

    @property
    def num_scheduled(self) -> int:
        return int(self.schedule.sum())

    def copy(self) -> "Action":
        return Action(self.schedule.copy(), self.tx_power.copy(),
                      self.train_freq.copy(), self.mine_freq.copy())

    def is_feasible(self, clients: ClientArrays) -> bool:
        """Constraints C1-C4, bounds inclusive."""
        return bool(
            np.all(np.isin(self.schedule, (0, 1)))
            and np.all((clients.p_min <= self.tx_power) & (self.tx_power <= clients.p_max))
            and np.all((clients.f_min <= self.train_freq) & (self.train_freq <= clients.f_max))
            and np.all((clients.f_min <= self.mine_freq) & (self.mine_freq <= clients.f_max))
        )


@dataclass
class RoundOutcome:
    """Realized latency, energy and data size of one round, with per-phase breakdown."""

    latency: float
    energy: np.ndarray
    data_size: float
    train_time: np.ndarray
    uplink_time: np.ndarray
    mining_time: float
    train_energy: np.ndarray
    uplink_energy: np.ndarray
    mining_energy: np.ndarray


# ============================================================================
# CHANNEL
# ============================================================================

def clamped_exp_mean(rho_min: float, rho_max: float) -> float:
    """Mean of an Exp(1) draw clamped to [rho_min, rho_max]."""
    return rho_min + math.exp(-rho_min) - math.exp(-rho_max)


def large_scale_gain(client: Client, config: SystemConfig):
    """h0 * (d0 / d_n)^nu, the deterministic part of the channel gain."""
    return config.pathloss_const * (config.ref_distance / client.distance) ** config.pathloss_exp


def channel_from_rho(rho, client: Client, config: SystemConfig) -> ChannelState:
    rho = np.asarray(rho, dtype=float)
    return ChannelState(rho=rho, gain=rho * large_scale_gain(client, config))


def sample_channel(rng: np.random.Generator, clients: ClientArrays, config: SystemConfig) -> ChannelState:
    """
    Draw rho_n ~ Exp(1) per client, clamp to [rho_min, rho_max] and compute gains.

    Args:
        rng: Caller-owned generator
        clients: Client columns
        config: System constants

    Returns:
        ChannelState for the round
    """
    draws = rng.exponential(scale=1.0, size=len(clients))
    rho = np.clip(draws, config.rho_min, config.rho_max)
    return channel_from_rho(rho, clients, config)


# ============================================================================
# PER-PHASE COSTS
# ============================================================================

def uplink_rate(tx_power, gain, config: SystemConfig):
    """Shannon rate B*log2(1 + P*h/(B*N0)) in bit/s."""
    snr = np.asarray(tx_power, dtype=float) * np.asarray(gain, dtype=float) / (config.bandwidth * config.noise_psd)
    high = snr > SNR_LOG_DOMAIN
    safe = np.where(high, snr, 1.0)
    log_domain = np.log2(safe) + np.log1p(1.0 / safe) / math.log(2.0)
    bits = np.where(high, log_domain, np.log1p(snr) / math.log(2.0))
    rate = config.bandwidth * bits
    return rate if np.ndim(rate) else float(rate)


def training_time(client: Client, schedule, train_freq, local_epochs: int):
    """c*K*D*i / f_tra."""
    return client.cycles_per_sample * local_epochs * client.dataset_size * np.asarray(schedule) / np.asarray(train_freq, dtype=float)


def training_energy(client: Client, schedule, train_freq, local_epochs: int):
    """i*v*c*K*D*f_tra^2."""
    f = np.asarray(train_freq, dtype=float)
    return np.asarray(schedule) * client.switch_cap * client.cycles_per_sample * local_epochs * client.dataset_size * f ** 2


def uplink_time(client: Client, tx_power, gain, config: SystemConfig, schedule):
    """
    Local model upload time gamma*i / rate.

    Raises:
        InvalidChannelError: any gain is not strictly positive
    """
    if np.any(np.asarray(gain) <= 0):
        raise InvalidChannelError("channel power gain must be positive")
    return client.model_bits * np.asarray(schedule) / uplink_rate(tx_power, gain, config)


def uplink_energy(client: Client, tx_power, gain, config: SystemConfig, schedule):
    return np.asarray(tx_power, dtype=float) * uplink_time(client, tx_power, gain, config, schedule)


def mining_time(mine_freqs, config: SystemConfig) -> float:
    """
    Time at which a block exists with confidence p0: -alpha*ln(1-p0) / sum(f_bloc).

    Raises:
        MiningError: aggregate mining frequency is not positive
    """
    total = float(np.sum(mine_freqs))
    if total <= 0:
        raise MiningError("aggregate mining frequency must be positive")
    return config.mining_difficulty * config.mining_quantile / total


def sample_mining_time(rng: np.random.Generator, mine_freqs, config: SystemConfig) -> float:
    """Exponential mining time with mean alpha / sum(f_bloc)."""
    total = float(np.sum(mine_freqs))
    if total <= 0:
        raise MiningError("aggregate mining frequency must be positive")
    return float(rng.exponential(scale=config.mining_difficulty / total))


def mining_energy(client: Client, mine_freq, tau_bloc: float):
    """v * tau_bloc * f_bloc^3."""
    return client.switch_cap * tau_bloc * np.asarray(mine_freq, dtype=float) ** 3


def round_latency(client_times, tau_bloc: float) -> float:
    """Slowest train+uplink time plus mining time; the empty max is 0."""
    times = np.asarray(client_times, dtype=float)
    slowest = float(times.max()) if times.size else 0.0
    return max(slowest, 0.0) + tau_bloc


def client_energy(train_energy, uplink_energy_, mine_energy):
    return np.asarray(train_energy) + np.asarray(uplink_energy_) + np.asarray(mine_energy)


def evaluate_action(action: Action, channel: ChannelState, clients: ClientArrays,
                    config: SystemConfig, tau_bloc: Optional[float] = None) -> RoundOutcome:
    """
    Realize one round for a decided action.

    Args:
        tau_bloc: Override for the mining time (stochastic mining); defaults
            to the p0-quantile

    Returns:
        RoundOutcome with per-phase breakdown
    """
    K = config.local_epochs
    t_tra = training_time(clients, action.schedule, action.train_freq, K)
    e_tra = training_energy(clients, action.schedule, action.train_freq, K)
    t_up = uplink_time(clients, action.tx_power, channel.gain, config, action.schedule)
    e_up = action.tx_power * t_up
    if tau_bloc is None:
        tau_bloc = mining_time(action.mine_freq, config)
    e_mine = mining_energy(clients, action.mine_freq, tau_bloc)

    return RoundOutcome(
        latency=round_latency(t_tra + t_up, tau_bloc),
        energy=client_energy(e_tra, e_up, e_mine),
        data_size=float(np.sum(action.schedule * clients.dataset_size)),
        train_time=t_tra,
        uplink_time=t_up,
        mining_time=tau_bloc,
        train_energy=e_tra,
        uplink_energy=e_up,
        mining_energy=e_mine,
    )
