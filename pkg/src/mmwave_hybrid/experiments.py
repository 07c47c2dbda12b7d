"""
Named figure-reproduction experiments and their on-disk artifacts.

Every run writes one CSV per system plus a manifest JSON holding the fully
resolved config, the seed and the library version. Feeding a manifest back
to :func:`run_config` reproduces the CSV byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import ChannelParams, response_dictionary, sample_channel
from .config import ArraySpec, ConfigError, ExperimentConfig, QuantizationSpec, load_config
from .metrics import SweepResult, sweep
from .precoding import beam_pattern, beam_steering, optimal_precoder, sparse_precoder_omp

log = logging.getLogger(__name__)

__all__ = [
    "EXPERIMENTS",
    "NumericalFailure",
    "CSV_COLUMNS",
    "named_configs",
    "run_named_experiment",
    "run_config",
    "run_sweep",
    "write_csv",
    "csv_text",
    "beampattern_grids",
]

EXPERIMENTS = ("fig2", "fig3", "fig4", "fig5", "fig6", "beampattern")
CSV_COLUMNS = ("method", "snr_db", "ns", "rate_mean", "rate_median", "rate_ci95", "trials",
               "seed", "spread_deg", "angle_bits")

SECTOR_DEG = [-30.0, 30.0, 80.0, 100.0]     # 60 deg azimuth x 20 deg elevation, broadside
SNR_SMALL = {"start": -30.0, "stop": 10.0, "step": 5.0}
SNR_LARGE = {"start": -40.0, "stop": 0.0, "step": 5.0}


class NumericalFailure(RuntimeError):
    """A sweep produced a non-finite rate or a linear algebra failure."""


def _snr(spec) -> list:
    n = int(round((spec["stop"] - spec["start"]) / spec["step"])) + 1
    return [spec["start"] + i * spec["step"] for i in range(n)]


def _system(nt_side: int, nr_side: int) -> dict:
    return {"tx": ArraySpec("upa", nt_side, nt_side, 0.5, list(SECTOR_DEG)),
            "rx": ArraySpec("upa", nr_side, nr_side, 0.5, None)}


def named_configs(name: str) -> list[ExperimentConfig]:
    """Resolved configs for a named experiment (one per system)."""
    small, large = _system(8, 4), _system(16, 8)
    if name == "fig2":
        return [ExperimentConfig(name="fig2", **small, n_rf_tx=4, n_rf_rx=4, ns=[1, 2],
                                 snr_db=_snr(SNR_SMALL), trials=500)]
    if name == "fig3":
        return [ExperimentConfig(name="fig3", **large, n_rf_tx=6, n_rf_rx=6, ns=[1, 2],
                                 snr_db=_snr(SNR_LARGE), trials=500)]
    if name == "fig4":
        return [ExperimentConfig(name="fig4", **large, n_rf_tx=4, n_rf_rx=4, rank_adaptive=True,
                                 snr_db=_snr(SNR_LARGE), trials=200,
                                 methods=["optimal-unconstrained", "sparse-hybrid",
                                          "beam-steering", "waterfilling-capacity"],
                                 steering_candidates=20)]
    if name == "fig5":
        spreads = [2.5 * i for i in range(9)]
        common = dict(angle_spread_deg=spreads, snr_db=[0.0], trials=200,
                      methods=["optimal-unconstrained", "sparse-hybrid"])
        return [
            ExperimentConfig(name="fig5_64x16_rf4", **small, n_rf_tx=4, n_rf_rx=4, ns=[1, 2],
                             **common),
            ExperimentConfig(name="fig5_64x16_rf6", **small, n_rf_tx=6, n_rf_rx=6, ns=[2],
                             **common),
            ExperimentConfig(name="fig5_256x64_rf4", **large, n_rf_tx=4, n_rf_rx=4, ns=[1],
                             **common),
        ]
    if name == "fig6":
        common = dict(snr_db=[0.0], trials=500, n_rf_tx=4, n_rf_rx=4, ns=[1, 2],
                      methods=["optimal-unconstrained", "sparse-hybrid",
                               "quantized-sparse-hybrid"],
                      quantization=QuantizationSpec(angle_bits=[1, 2, 3, 4, 5]))
        return [ExperimentConfig(name="fig6_64x16", **small, **common),
                ExperimentConfig(name="fig6_256x64", **large, **common)]
    raise ConfigError(f"name: unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def csv_text(result: SweepResult) -> str:
    """CSV rows in a fixed order: config method order, spread, bits, ns, SNR."""
    cfg = result.config
    rank = {m: i for i, m in enumerate(cfg.methods)}
    points = sorted(result.points, key=lambda p: (rank[p.method], p.spread_deg or 0.0,
                                                  p.angle_bits or 0, p.ns, p.snr_db))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in points:
        w.writerow([p.method, _fmt(float(p.snr_db)), p.ns, _fmt(p.rate_mean),
                    _fmt(p.rate_median), _fmt(p.rate_ci95), p.trials, cfg.seed,
                    _fmt(None if p.spread_deg is None else float(p.spread_deg)),
                    _fmt(p.angle_bits)])
    return buf.getvalue()


def write_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    path.write_text(csv_text(result))
    return path


def _version() -> str:
    from . import __version__
    return __version__


def _manifest(config: ExperimentConfig, outputs: list) -> dict:
    return {"name": config.name, "version": _version(), "seed": config.seed,
            "config": config.to_dict(), "outputs": [Path(o).name for o in outputs]}


def _prepare(out) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output: cannot create {out} ({exc})") from exc
    return out


def run_sweep(config: ExperimentConfig, out, threads: int = 1) -> Path:
    """Sweep one config and write ``<name>.csv`` and ``<name>.manifest.json``."""
    out = _prepare(out)
    try:
        with np.errstate(invalid="raise", divide="raise", over="raise"):
            result = sweep(config, threads=threads)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise NumericalFailure(f"{config.name}: {exc}") from exc
    bad = [p for p in result.points if not np.isfinite(p.rate_mean)]
    if bad:
        raise NumericalFailure(f"{config.name}: non-finite rate for {bad[0].method}")
    csv_path = write_csv(result, out / f"{config.name}.csv")
    manifest = out / f"{config.name}.manifest.json"
    manifest.write_text(json.dumps(_manifest(config, [csv_path]), indent=2) + "\n")
    log.info("wrote %s", csv_path)
    return csv_path


def _override(config: ExperimentConfig, seed, trials) -> ExperimentConfig:
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if trials is not None:
        changes["trials"] = trials
    return replace(config, **changes) if changes else config


def run_named_experiment(name: str, out="results", seed: Optional[int] = None,
                         trials: Optional[int] = None, threads: int = 1) -> list[Path]:
    """Run a named figure reproduction; returns the written CSV paths."""
    if name == "beampattern":
        return beampattern(out, seed=0 if seed is None else seed)
    return [run_sweep(_override(c, seed, trials), out, threads) for c in named_configs(name)]


def run_config(path, out=None, seed: Optional[int] = None, trials: Optional[int] = None,
               threads: int = 1) -> list[Path]:
    """Run a YAML config (or a manifest) file."""
    config = _override(load_config(path), seed, trials)
    return [run_sweep(config, config.output if out is None else out, threads)]


def beampattern_grids(seed: int = 0, n_clusters: int = 6, n_rf: int = 4, step_deg: float = 1.0):
    """Transmit beam patterns for one zero-spread channel on a 16x16 array.

    Returns ``(az_deg, el_deg, patterns)`` with ``patterns`` mapping
    ``optimal``, ``hybrid`` and ``steering`` to gain grids (linear).
    """
    tx = ArraySpec("upa", 16, 16, 0.5, list(SECTOR_DEG)).geometry()
    rx = ArraySpec("upa", 8, 8, 0.5, None).geometry()
    params = ChannelParams(tx, rx, n_clusters=n_clusters, n_rays=10, angle_spread=0.0)
    real = sample_channel(params, np.random.default_rng(np.random.SeedSequence([seed, 2])))
    f_opt = optimal_precoder(real.h, 1).f
    f_hyb = sparse_precoder_omp(f_opt, response_dictionary(real, "tx"), n_rf).f
    f_st = beam_steering(real, 1, 1.0).f

    az_deg = np.arange(-90.0, 90.0 + step_deg / 2, step_deg)
    el_deg = np.arange(0.0, 180.0 + step_deg / 2, step_deg)
    az, el = np.meshgrid(np.deg2rad(az_deg), np.deg2rad(el_deg), indexing="ij")
    patterns = {k: beam_pattern(f, tx, az, el)
                for k, f in (("optimal", f_opt), ("hybrid", f_hyb), ("steering", f_st))}
    return az_deg, el_deg, patterns


def beampattern(out="results", seed: int = 0, n_clusters: int = 6) -> list[Path]:
    """Write ``beampattern_{optimal,hybrid,steering}.csv`` (az_deg, el_deg, gain_db)."""
    out = _prepare(out)
    az_deg, el_deg, patterns = beampattern_grids(seed, n_clusters)
    paths = []
    for key, g in patterns.items():
        db = 10 * np.log10(np.maximum(g, 1e-12))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("az_deg", "el_deg", "gain_db"))
        for i, a in enumerate(az_deg):
            for j, e in enumerate(el_deg):
                w.writerow((f"{a:.6g}", f"{e:.6g}", f"{db[i, j]:.6f}"))
        path = out / f"beampattern_{key}.csv"
        path.write_text(buf.getvalue())
        paths.append(path)
    meta = {"name": "beampattern", "version": _version(), "seed": seed,
            "config": {"tx": "upa 16x16, sector " + str(SECTOR_DEG), "rx": "upa 8x8 omni",
                       "n_clusters": n_clusters, "n_rays": 10, "angle_spread_deg": 0.0,
                       "n_rf": 4},
            "outputs": [p.name for p in paths]}
    (out / "beampattern.manifest.json").write_text(json.dumps(meta, indent=2) + "\n")
    return paths
