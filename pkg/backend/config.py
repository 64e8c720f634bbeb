"""
Configuration: Client Profiles, System Constants and Simulation Setup
Validated value types plus the INI loader with unit suffixes and env overrides.
"""

import configparser
import math
import os
import re
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors import ConfigError

ENV_PREFIX = "BFLSIM_"

# Unit suffix -> converter to SI
_UNITS = {
    "dbm/hz": lambda x: 10 ** ((x - 30.0) / 10.0),
    "dbm": lambda x: 10 ** ((x - 30.0) / 10.0),
    "db": lambda x: 10 ** (x / 10.0),
    "mw": lambda x: x * 1e-3,
    "w": lambda x: x,
    "ghz": lambda x: x * 1e9,
    "mhz": lambda x: x * 1e6,
    "khz": lambda x: x * 1e3,
    "hz": lambda x: x,
    "mbit": lambda x: x * 1e6,
    "kbit": lambda x: x * 1e3,
    "bit": lambda x: x,
    "m": lambda x: x,
    "s": lambda x: x,
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/]*)\s*$")


def parse_quantity(raw: str, field: Optional[str] = None) -> float:
    """
    Parse a number with an optional unit suffix into SI units.

    Examples:
        "30 dBm" -> 1.0, "-174 dBm/Hz" -> 3.981e-21, "4 GHz" -> 4e9
    """
    match = _QUANTITY.match(str(raw))
    if not match:
        raise ConfigError(f"cannot parse quantity '{raw}'", field=field)

    value = float(match.group(1))
    unit = match.group(2).lower()
    if not unit:
        return value
    if unit not in _UNITS:
        raise ConfigError(f"unknown unit '{match.group(2)}'", field=field)
    return _UNITS[unit](value)


class PolicyKind(str, Enum):
    """Scheduling policies available to a run."""
    DRACS = "dracs"
    CS = "cs"
    EC = "ec"
    SA = "sa"


class ClientProfile(BaseModel):
    """Static per-client parameters, SI units."""

    model_config = ConfigDict(frozen=True)

    client_id: int = Field(ge=0)
    client_type: str = "default"
    dataset_size: int = Field(ge=1)
    cycles_per_sample: float = Field(gt=0)
    switch_cap: float = Field(gt=0)
    model_bits: float = Field(gt=0)
    distance: float = Field(gt=0)
    f_min: float = Field(gt=0)
    f_max: float = Field(gt=0)
    p_min: float = Field(gt=0)
    p_max: float = Field(gt=0)
    energy_supply: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.f_min > self.f_max:
            raise ValueError("f_min must not exceed f_max")
        if self.p_min > self.p_max:
            raise ValueError("p_min must not exceed p_max")
        return self


class SystemConfig(BaseModel):
    """Network-wide constants and solver settings."""

    model_config = ConfigDict(frozen=True)

    bandwidth: float = Field(default=180e3, gt=0)
    noise_psd: float = Field(default=10 ** ((-174.0 - 30.0) / 10.0), gt=0)
    pathloss_const: float = Field(default=1e-3, gt=0)
    ref_distance: float = Field(default=1.0, gt=0)
    pathloss_exp: float = Field(default=2.0, gt=0)
    mining_difficulty: float = Field(default=2e9, gt=0)
    mining_confidence: float = Field(default=1.0 - 1e-10)
    local_epochs: int = Field(default=1, ge=1)
    step_size: float = Field(default=1e-3, ge=0)
    lyapunov_v: float = Field(default=1e4, ge=0)
    dinkelbach_tol: float = Field(default=1e-9, gt=0)
    dinkelbach_rel_tol: float = Field(default=1e-6, ge=0)
    rho_min: float = Field(default=0.1, gt=0)
    rho_max: float = Field(default=10.0, gt=0)
    rng_seed: int = Field(default=1, ge=0, lt=2 ** 64)
    additive_slack: float = Field(default=0.0, ge=0)
    bcd_restarts: int = Field(default=3, ge=1)
    bcd_tol: float = Field(default=1e-9, gt=0)
    l_reg: float = Field(default=1e-4, ge=0)

    @field_validator("mining_confidence")
    @classmethod
    def _check_confidence(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("mining_confidence must lie in (0, 1)")
        return value

    @model_validator(mode="after")
    def _check_fading(self):
        if self.rho_min > self.rho_max:
            raise ValueError("rho_min must not exceed rho_max")
        return self

    @property
    def mining_quantile(self) -> float:
        """-ln(1 - p0), the confidence factor of the mining-time quantile."""
        return -math.log1p(-self.mining_confidence)

    def with_updates(self, **changes) -> "SystemConfig":
        """Validated copy with some fields replaced."""
        return SystemConfig(**{**self.model_dump(), **changes})


class SimConfig(BaseModel):
    """Everything one simulation run needs."""

    model_config = ConfigDict(frozen=True)

    rounds: int = Field(default=2000, ge=1)
    policy: PolicyKind = PolicyKind.DRACS
    system: SystemConfig = SystemConfig()
    clients: Tuple[ClientProfile, ...]
    metric_cadence: int = Field(default=10, ge=1)
    stochastic_mining: bool = False
    time_budget: Optional[float] = Field(default=None, gt=0)
    baseline_v: Optional[float] = Field(default=None, ge=0)
    feature_dim: int = Field(default=14, ge=1)
    cluster_mean: float = Field(default=1.2, gt=0)
    test_size: int = Field(default=4000, ge=2)
    dataset_csv: Optional[str] = None

    @field_validator("clients")
    @classmethod
    def _check_clients(cls, value):
        if len(value) < 1:
            raise ValueError("at least one client is required")
        ids = [c.client_id for c in value]
        if ids != list(range(len(value))):
            raise ValueError("client ids must be 0..N-1 in order")
        return value

    @property
    def num_clients(self) -> int:
        return len(self.clients)

    def with_updates(self, **changes) -> "SimConfig":
        data = {**self.model_dump(), **changes}
        return SimConfig(**data)


class ExperimentSpec(BaseModel):
    """Sweep over policies x V values x seeds on top of one base config."""

    model_config = ConfigDict(frozen=True)

    config_path: Optional[str] = None
    policies: Tuple[PolicyKind, ...] = (PolicyKind.DRACS,)
    v_values: Tuple[float, ...] = (1e4,)
    seeds: Tuple[int, ...] = (1,)
    rounds: Optional[int] = Field(default=None, ge=1)
    output_dir: str = "results"
    workers: int = Field(default=1, ge=1)
    stochastic_mining: bool = False
    learning: bool = True
    oracle: bool = False
    trace: bool = False
    xlsx: bool = False

    @field_validator("policies", "v_values", "seeds")
    @classmethod
    def _non_empty(cls, value):
        if len(value) == 0:
            raise ValueError("sweep axes must not be empty")
        if len(set(value)) != len(value):
            raise ValueError("sweep axis values must be distinct")
        return value

    @field_validator("v_values")
    @classmethod
    def _non_negative(cls, value):
        if any(v < 0 for v in value):
            raise ValueError("V must be non-negative")
        return value

    def cells(self) -> List[Tuple[str, PolicyKind, float, int]]:
        """(name, policy, V, seed) per sweep cell; names are distinct."""
        return [
            (f"{PolicyKind(p).value}_v{v:.12g}_s{s}", PolicyKind(p), v, s)
            for p in self.policies for v in self.v_values for s in self.seeds
        ]


# ============================================================================
# PRESETS
# ============================================================================

def reference_system_config(**overrides) -> SystemConfig:
    """System constants of the reference experiment table."""
    base = dict(
        bandwidth=parse_quantity("180 KHz"),
        noise_psd=parse_quantity("-174 dBm/Hz"),
        pathloss_const=parse_quantity("-30 dB"),
        ref_distance=1.0,
        pathloss_exp=2.0,
        mining_difficulty=2e9,
        mining_confidence=1.0 - 1e-10,
        local_epochs=1,
        step_size=1e-3,
        rho_min=0.1,
        rho_max=10.0,
    )
    base.update(overrides)
    return SystemConfig(**base)


def make_profile(client_id: int, client_type: str, **fields) -> ClientProfile:
    """Client profile with the reference radio/CPU constants as defaults."""
    base = dict(
        cycles_per_sample=2e3,
        switch_cap=1e-28,
        model_bits=1e5,
        distance=200.0,
        f_min=1e9,
        f_max=4e9,
        p_min=parse_quantity("23 dBm"),
        p_max=parse_quantity("30 dBm"),
    )
    base.update(fields)
    return ClientProfile(client_id=client_id, client_type=client_type, **base)


def desk_profiles(per_type: int = 3) -> Tuple[ClientProfile, ...]:
    """Two client types: small data / high budget and large data / low budget."""
    profiles = []
    for _ in range(per_type):
        profiles.append(make_profile(len(profiles), "type1", dataset_size=1000, energy_supply=0.6))
    for _ in range(per_type):
        profiles.append(make_profile(len(profiles), "type2", dataset_size=4000, energy_supply=0.2))
    return tuple(profiles)


def desk_sim_config(**overrides) -> SimConfig:
    """Desk-scale simulation used by the acceptance runs."""
    system_overrides = overrides.pop("system_overrides", {})
    return SimConfig(
        system=reference_system_config(**system_overrides),
        clients=desk_profiles(),
        **overrides,
    )


# ============================================================================
# INI LOADER
# ============================================================================

_SYSTEM_FIELDS = set(SystemConfig.model_fields)
_CLIENT_FIELDS = set(ClientProfile.model_fields) - {"client_id", "client_type"}
_SIM_FIELDS = set(SimConfig.model_fields) - {"system", "clients"}
_INT_FIELDS = {"local_epochs", "rng_seed", "bcd_restarts", "dataset_size", "rounds",
               "metric_cadence", "feature_dim", "test_size", "count"}
_TEXT_FIELDS = {"policy", "dataset_csv"}
_BOOL_FIELDS = {"stochastic_mining"}


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    """Best-effort line number of `key` inside `[section]`."""
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*[=:]", stripped):
            return number
    return None


def _env_overrides(parser: configparser.ConfigParser, environ: Mapping[str, str]):
    """Apply BFLSIM_<SECTION>_<KEY> overrides in place."""
    for section in parser.sections():
        if section == "system":
            keys = _SYSTEM_FIELDS
        elif section == "simulation":
            keys = _SIM_FIELDS
        else:
            keys = _CLIENT_FIELDS | {"count"}
        for key in keys:
            env_name = f"{ENV_PREFIX}{section.replace('.', '_').upper()}_{key.upper()}"
            if env_name in environ:
                parser[section][key] = environ[env_name]


def _convert(section: str, key: str, raw: str, text: str):
    try:
        if key in _TEXT_FIELDS:
            return raw.strip()
        if key in _BOOL_FIELDS:
            lowered = raw.strip().lower()
            if lowered not in {"true", "false", "1", "0", "yes", "no"}:
                raise ConfigError(f"expected a boolean, got '{raw}'", field=key)
            return lowered in {"true", "1", "yes"}
        value = parse_quantity(raw, field=key)
        if key in _INT_FIELDS:
            if value != int(value):
                raise ConfigError(f"expected an integer, got '{raw}'", field=key)
            return int(value)
        return value
    except ConfigError as e:
        raise ConfigError(str(e).split("] ", 1)[-1], field=f"{section}.{key}",
                          line=_line_of(text, section, key)) from None


def load_sim_config(path, environ: Optional[Mapping[str, str]] = None) -> SimConfig:
    """
    Load a simulation config file.

    Args:
        path: INI file with [system], [simulation] and [clients.<type>] sections
        environ: Environment used for overrides (defaults to os.environ)

    Returns:
        Validated SimConfig

    Raises:
        ConfigError: unreadable file, unknown key or invalid value
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return parse_sim_config(text, environ=environ)


def parse_sim_config(text: str, environ: Optional[Mapping[str, str]] = None) -> SimConfig:
    """Parse config text (see load_sim_config)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}", line=getattr(e, "lineno", None)) from None

    for name in ("system", "simulation"):
        if not parser.has_section(name):
            parser.add_section(name)
    _env_overrides(parser, os.environ if environ is None else environ)

    system_values: Dict[str, object] = {}
    sim_values: Dict[str, object] = {}
    client_sections: List[str] = []

    for section in parser.sections():
        if section == "system":
            allowed, target = _SYSTEM_FIELDS, system_values
        elif section == "simulation":
            allowed, target = _SIM_FIELDS, sim_values
        elif section.startswith("clients."):
            client_sections.append(section)
            continue
        else:
            raise ConfigError(f"unknown section [{section}]", line=_line_of_section(text, section))
        for key, raw in parser[section].items():
            if key not in allowed:
                raise ConfigError("unknown key", field=f"{section}.{key}", line=_line_of(text, section, key))
            target[key] = _convert(section, key, raw, text)

    if not client_sections:
        raise ConfigError("no [clients.<type>] section found")

    profiles = []
    for section in client_sections:
        values = {}
        for key, raw in parser[section].items():
            if key not in _CLIENT_FIELDS | {"count"}:
                raise ConfigError("unknown key", field=f"{section}.{key}", line=_line_of(text, section, key))
            values[key] = _convert(section, key, raw, text)
        count = values.pop("count", 1)
        client_type = section.split(".", 1)[1]
        for _ in range(count):
            try:
                profiles.append(make_profile(len(profiles), client_type, **values))
            except ValidationError as e:
                raise _wrap(e, section, text) from None

    try:
        system = reference_system_config(**system_values)
        return SimConfig(system=system, clients=tuple(profiles), **sim_values)
    except ValidationError as e:
        raise _wrap(e, "system" if system_values else "simulation", text) from None


def _line_of_section(text: str, section: str) -> Optional[int]:
    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip() == f"[{section}]":
            return number
    return None


def _wrap(error: ValidationError, section: str, text: str) -> ConfigError:
    """First pydantic error as a ConfigError with field and line."""
    first = error.errors()[0]
    loc = [str(part) for part in first.get("loc", ())]
    key = loc[-1] if loc else None
    if loc and loc[0] == "system":
        section = "system"
    elif loc and loc[0] not in _SYSTEM_FIELDS and loc[0] in _SIM_FIELDS:
        section = "simulation"
    line = _line_of(text, section, key) if key else _line_of_section(text, section)
    field = f"{section}.{key}" if key else section
    return ConfigError(first.get("msg", "invalid value"), field=field, line=line)


def describe_si(config: SimConfig) -> Dict[str, object]:
    """Flat SI echo of a config, used by `validate`."""
    first = config.clients[0]
    return {
        "system": config.system.model_dump(),
        "num_clients": config.num_clients,
        "client_types": sorted({c.client_type for c in config.clients}),
        "p_min_w": first.p_min,
        "p_max_w": first.p_max,
        "noise_psd_w_per_hz": config.system.noise_psd,
        "pathloss_const_linear": config.system.pathloss_const,
        "mining_quantile": config.system.mining_quantile,
    }
