"""Scenario configuration: a flat YAML mapping with units in the key names."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from ..bsa import TrainConfig

BOLTZMANN = 1.380649e-23
# kTB at 290 K over a 1 MHz subcarrier bandwidth
THERMAL_NOISE_W = BOLTZMANN * 290.0 * 1e6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    n_subcarriers: int = 16
    power_max_w: float = 0.1
    epsilon_e: float = 0.4
    delta: float = 1e-3
    max_iterations: int = 200
    noise_bob_w: float = THERMAL_NOISE_W
    noise_eve_w: float = THERMAL_NOISE_W
    frequency_ghz: float = 20.0
    altitude_km: float = 600.0
    bob_radius_km: float = 800.0
    eve_radius_km: float = 1000.0
    beamwidth_3db_deg: float = 60.0
    max_gain_dbi: float = 30.0
    mean_gain_bob_db: float = 10.0
    mean_gain_eve_db: float = 5.0
    rain_mu: float = -3.125
    rain_sigma: float = 1.591
    rician_k_db: float = 10.0
    num_taps: int = 4
    num_draws: int = 100
    seed: int = 0
    epochs: int = 500
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    leaky_slope: float = 0.01
    hidden_dims: tuple[int, ...] = (128, 64, 16)
    early_stop: bool = True
    beam_gain_mode: str = "literature"
    power_convention: str = "energy"
    training_mode: str = "per_draw"
    mrt_power: str = "gain_proportional"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        problems = []
        if self.n_subcarriers < 2:
            problems.append("n_subcarriers must be >= 2")
        if self.n_subcarriers < self.num_taps:
            problems.append("n_subcarriers must be >= num_taps")
        if not self.power_max_w > 0:
            problems.append("power_max_w must be > 0")
        if not 0 < self.epsilon_e <= 0.5:
            problems.append("epsilon_e must lie in (0, 0.5]")
        if not 0 < self.delta < self.epsilon_e:
            problems.append("delta must lie in (0, epsilon_e)")
        if self.num_draws < 1:
            problems.append("num_draws must be >= 1")
        if self.noise_bob_w <= 0 or self.noise_eve_w <= 0:
            problems.append("noise powers must be > 0")
        if not 0 < self.beamwidth_3db_deg < 90:
            problems.append("beamwidth_3db_deg must lie in (0, 90)")
        if self.num_taps < 1:
            problems.append("num_taps must be >= 1")
        if self.rain_sigma < 0:
            problems.append("rain_sigma must be >= 0")
        if self.epochs < 1:
            problems.append("epochs must be >= 1")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        choices = {
            "beam_gain_mode": ("literature", "paper_literal"),
            "power_convention": ("energy", "coherent"),
            "training_mode": ("per_draw", "amortized"),
            "mrt_power": ("gain_proportional", "uniform"),
        }
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                problems.append(f"{key} must be one of {allowed}, got {getattr(self, key)!r}")
        if problems:
            raise ConfigError("invalid scenario config: " + "; ".join(problems))

    @property
    def wavelength_m(self) -> float:
        return 299_792_458.0 / (self.frequency_ghz * 1e9)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            power_max=self.power_max_w,
            epsilon_e=self.epsilon_e,
            delta=self.delta,
            max_iterations=self.max_iterations,
            power_convention=self.power_convention,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
            leaky_slope=self.leaky_slope,
            hidden_dims=self.hidden_dims,
            early_stop=self.early_stop,
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d


FIELD_NAMES = tuple(f.name for f in fields(ScenarioConfig))


def config_from_mapping(data: dict | None, base: ScenarioConfig | None = None) -> ScenarioConfig:
    data = dict(data or {})
    unknown = sorted(set(data) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    base = base or ScenarioConfig()
    coerced = {}
    for f in fields(ScenarioConfig):
        if f.name not in data:
            continue
        value = data[f.name]
        default = getattr(base, f.name)
        try:
            if isinstance(default, bool):
                if isinstance(value, str):
                    value = value.strip().lower() in ("1", "true", "yes", "on")
                coerced[f.name] = bool(value)
            elif isinstance(default, int):
                coerced[f.name] = int(value)
            elif isinstance(default, float):
                coerced[f.name] = float(value)
            elif isinstance(default, tuple):
                if isinstance(value, str):
                    value = [v for v in value.replace(",", " ").split() if v]
                coerced[f.name] = tuple(int(v) for v in value)
            else:
                coerced[f.name] = str(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {f.name}: {value!r} ({exc})") from None
    return dataclasses.replace(base, **coerced)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a flat key-value mapping")
    return config_from_mapping(data)


def dump_config(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    return path
