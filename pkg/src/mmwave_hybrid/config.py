"""
Experiment configuration: dataclasses plus YAML/dict round-tripping.

Angles are in degrees in config files and converted to radians once, when
building array geometries and channel parameters.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .arrays import ArrayGeometry, Sector
from .channel import ChannelParams

__all__ = [
    "ConfigError",
    "ArraySpec",
    "QuantizationSpec",
    "ExperimentConfig",
    "METHODS",
    "load_config",
    "config_from_dict",
]

METHODS = (
    "optimal-unconstrained",
    "sparse-hybrid",
    "beam-steering",
    "quantized-sparse-hybrid",
    "waterfilling-capacity",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field path."""


@dataclass
class ArraySpec:
    kind: str = "upa"
    width: int = 8
    height: int = 8
    spacing: float = 0.5
    sector_deg: Optional[list] = None   # [az_min, az_max, el_min, el_max]; None = omni

    @property
    def n_elements(self) -> int:
        return self.width * self.height

    def geometry(self) -> ArrayGeometry:
        sector = Sector.full_sphere() if self.sector_deg is None else \
            Sector.from_degrees(*self.sector_deg)
        return ArrayGeometry(self.kind, self.width, self.height, self.spacing, sector)


@dataclass
class QuantizationSpec:
    angle_bits: list = field(default_factory=lambda: [3])
    bb_bits: dict = field(default_factory=lambda: {1: 4, 2: 6})   # per ns
    training_samples: int = 10_000


@dataclass
class ExperimentConfig:
    name: str = "custom"
    tx: ArraySpec = field(default_factory=lambda: ArraySpec("upa", 8, 8, 0.5, [-30, 30, 80, 100]))
    rx: ArraySpec = field(default_factory=lambda: ArraySpec("upa", 4, 4, 0.5, None))
    n_clusters: int = 8
    n_rays: int = 10
    angle_spread_deg: list = field(default_factory=lambda: [7.5])
    cluster_powers: Optional[list] = None
    n_rf_tx: int = 4
    n_rf_rx: int = 4
    ns: list = field(default_factory=lambda: [1, 2])
    rank_adaptive: bool = False
    snr_db: list = field(default_factory=lambda: [-30.0, -25.0, -20.0, -15.0, -10.0,
                                                  -5.0, 0.0, 5.0, 10.0])
    trials: int = 500
    seed: int = 0
    methods: list = field(default_factory=lambda: ["optimal-unconstrained",
                                                   "sparse-hybrid", "beam-steering"])
    quantization: Optional[QuantizationSpec] = None
    steering_max_subsets: int = 100_000
    steering_candidates: Optional[int] = None
    unitary_bb: bool = False
    output: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials: must be at least 1")
        if self.n_clusters < 1 or self.n_rays < 1:
            raise ConfigError("n_clusters/n_rays: must be positive")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"methods: unknown method {m!r}; choose from {', '.join(METHODS)}")
        if "quantized-sparse-hybrid" in self.methods:
            if self.quantization is None:
                raise ConfigError("quantization: required by quantized-sparse-hybrid")
            if self.rank_adaptive:
                raise ConfigError("quantization: not supported with rank_adaptive")
        for side, spec in (("tx", self.tx), ("rx", self.rx)):
            if spec.kind not in ("ula", "upa"):
                raise ConfigError(f"{side}.kind: must be 'ula' or 'upa'")
            if spec.kind == "ula" and spec.height != 1:
                raise ConfigError(f"{side}.height: a ULA has height 1")
            if spec.sector_deg is not None and len(spec.sector_deg) != 4:
                raise ConfigError(f"{side}.sector_deg: expected [az_min, az_max, el_min, el_max]")
        nt, nr = self.tx.n_elements, self.rx.n_elements
        chains = min(self.n_rf_tx, self.n_rf_rx)
        if self.n_rf_tx > nt or self.n_rf_rx > nr:
            raise ConfigError("n_rf_tx/n_rf_rx: RF chains cannot exceed antennas "
                              "(Ns <= N_RF <= N per terminal)")
        if not self.rank_adaptive:
            for ns in self.ns:
                if not 1 <= ns <= chains:
                    raise ConfigError(f"ns: {ns} streams need 1 <= Ns <= min(n_rf_tx, n_rf_rx) "
                                      f"= {chains} (Ns <= N_RF <= N per terminal)")
        if any(s < 0 for s in self.angle_spread_deg):
            raise ConfigError("angle_spread_deg: must be nonnegative")

    @property
    def stream_counts(self) -> list:
        return [0] if self.rank_adaptive else list(self.ns)

    def channel_params(self, spread_deg: float) -> ChannelParams:
        return ChannelParams(self.tx.geometry(), self.rx.geometry(), self.n_clusters,
                             self.n_rays, float(np.deg2rad(spread_deg)),
                             None if self.cluster_powers is None else tuple(self.cluster_powers))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path + '.' if path else ''}{sorted(unknown)[0]}: unknown field")
    return data


def _snr_list(value, path):
    if isinstance(value, dict):
        try:
            start, stop, step = float(value["start"]), float(value["stop"]), float(value["step"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: expected start/stop/step") from exc
        if step <= 0:
            raise ConfigError(f"{path}.step: must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in value]


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(_build(ExperimentConfig, data, ""))
    try:
        for side in ("tx", "rx"):
            if side in data:
                data[side] = ArraySpec(**_build(ArraySpec, data[side], side))
        if data.get("quantization") is not None:
            q = dict(_build(QuantizationSpec, data["quantization"], "quantization"))
            if "bb_bits" in q:
                q["bb_bits"] = {int(k): int(v) for k, v in q["bb_bits"].items()}
            data["quantization"] = QuantizationSpec(**q)
        if "snr_db" in data:
            data["snr_db"] = _snr_list(data["snr_db"], "snr_db")
        for key in ("ns", "angle_spread_deg"):
            if key in data and isinstance(data[key], (int, float)):
                data[key] = [data[key]]
        return ExperimentConfig(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Read a YAML config, or the ``config`` block of a run manifest."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from exc
    if isinstance(data, dict) and "config" in data and "version" in data:
        data = data["config"]
    return config_from_dict(data or {})
