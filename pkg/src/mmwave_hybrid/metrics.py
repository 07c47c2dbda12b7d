"""
Spectral efficiency and Monte Carlo rate sweeps.

Every method in a sweep is evaluated on the same channel draws (common
random numbers), so differences between curves are not sampling noise in
the channel.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import response_dictionary, sample_channel
from .combining import SignalModel, design_link, sparse_combiner_omp
from .config import ExperimentConfig
from .feedback import (AngleCodebook, bb_training_set, feedback_roundtrip, quantized_dictionary,
                       train_bb_codebook)
from .precoding import (as_matrix, beam_steering, combined_rate, mutual_information,
                        optimal_precoder, waterfilling, waterfilling_precoder)

log = logging.getLogger(__name__)

__all__ = [
    "RatePoint",
    "SweepResult",
    "spectral_efficiency",
    "aggregate",
    "sweep",
    "trial_seed",
]

COND_WARN = 1e12


def spectral_efficiency(h, precoder, combiner, snr: float, ns: Optional[int] = None) -> float:
    """Rate with linear combining, unit noise power.

    ``log2 det(I + snr/Ns * Rn^-1 W^H H F F^H H^H W)`` with
    ``Rn = W^H W``, ``F = F_RF F_BB`` and ``W = W_RF W_BB``.
    """
    h = as_matrix(h)
    f = as_matrix(precoder)
    w = combiner.w if hasattr(combiner, "w") else np.asarray(combiner)
    if f.ndim == 1:
        f = f[:, None]
    if w.ndim == 1:
        w = w[:, None]
    ns = f.shape[1] if ns is None else ns
    w_gram = w.conj().T @ w
    if not np.any(w_gram):
        log.warning("zero combiner; rate is 0")
        return 0.0
    if np.linalg.cond(w_gram) > COND_WARN:
        warnings.warn("ill-conditioned combiner noise covariance; using pseudo-inverse",
                      RuntimeWarning, stacklevel=2)
    return float(combined_rate(w_gram, w.conj().T @ h @ f, snr, ns))


@dataclass(frozen=True)
class RatePoint:
    method: str
    snr_db: float
    ns: int
    rate_mean: float
    rate_median: float
    rate_ci95: float
    trials: int
    spread_deg: Optional[float] = None
    angle_bits: Optional[int] = None


def aggregate(rates) -> tuple[float, float, float]:
    """Mean, median and normal-approximation 95% half-width."""
    r = np.asarray(rates, dtype=float)
    mean = float(np.mean(r))
    median = float(np.median(r))
    ci = float(1.96 * np.std(r, ddof=1) / np.sqrt(r.size)) if r.size > 1 else 0.0
    return mean, median, ci


@dataclass
class SweepResult:
    config: ExperimentConfig
    points: list
    records: list = field(repr=False, default_factory=list)

    def get(self, method, snr_db=None, ns=None, spread_deg=None, angle_bits=None):
        out = [p for p in self.points if p.method == method
               and (snr_db is None or p.snr_db == snr_db)
               and (ns is None or p.ns == ns)
               and (spread_deg is None or p.spread_deg == spread_deg)
               and (angle_bits is None or p.angle_bits == angle_bits)]
        if len(out) != 1:
            raise KeyError(f"{len(out)} points match {method}, {snr_db}, {ns}, "
                           f"{spread_deg}, {angle_bits}")
        return out[0]


def trial_seed(seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 0, trial])


def codebook_seed(seed: int, ns: int, bits: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 1, ns, bits])


def train_codebooks(config: ExperimentConfig) -> dict:
    """One baseband codebook per (spread, ns, angle bits), trained on the
    deployment channel distribution."""
    q = config.quantization
    books = {}
    for spread in config.angle_spread_deg:
        params = config.channel_params(spread)
        for ns in config.ns:
            for bits in q.angle_bits:
                rng = np.random.default_rng(codebook_seed(config.seed, ns, bits))
                acb = AngleCodebook(bits, bits, params.tx.sector)
                data = bb_training_set(params, acb, config.n_rf_tx, ns,
                                       q.training_samples, rng)
                books[spread, ns, bits] = train_bb_codebook(data, q.bb_bits[ns], rng)
    return books


def _run_trial(config: ExperimentConfig, trial: int, codebooks: dict) -> list:
    """All methods, SNRs and stream counts for one channel draw per spread.

    Returns records ``(method, snr_db, ns, spread, bits, rate, digest)``.
    """
    records = []
    methods = config.methods
    for spread in config.angle_spread_deg:
        params = config.channel_params(spread)
        rng = np.random.default_rng(trial_seed(config.seed, trial))
        real = sample_channel(params, rng)
        digest = real.digest()
        h = real.h
        a_t = response_dictionary(real, "tx")
        a_r = response_dictionary(real, "rx")
        _, sv, _ = np.linalg.svd(h, full_matrices=False)
        chains = min(config.n_rf_tx, config.n_rf_rx)
        quant = {}
        if "quantized-sparse-hybrid" in methods:
            for ns in config.ns:
                for bits in config.quantization.angle_bits:
                    acb = AngleCodebook(bits, bits, params.tx.sector)
                    msg = feedback_roundtrip(h, params.tx, acb, codebooks[spread, ns, bits],
                                             ns=ns, dictionary=quantized_dictionary(acb, params.tx))
                    quant[ns, bits] = msg.precoder

        def add(method, snr_db, ns, rate, bits=None):
            records.append((method, snr_db, ns, spread, bits, float(rate), digest))

        for snr_db in config.snr_db:
            snr = 10.0 ** (snr_db / 10.0)
            for ns_cfg in config.stream_counts:
                if config.rank_adaptive:
                    target = waterfilling_precoder(h, snr, chains)
                    ns, powers = target.ns, target.powers
                else:
                    target = optimal_precoder(h, ns_cfg)
                    ns, powers = ns_cfg, None
                label = ns_cfg
                if "optimal-unconstrained" in methods:
                    add("optimal-unconstrained", snr_db, label,
                        mutual_information(h, target.f, snr, ns))
                if "waterfilling-capacity" in methods:
                    p, k = waterfilling(sv, snr)
                    add("waterfilling-capacity", snr_db, label,
                        np.sum(np.log2(1 + snr * sv[:k] ** 2 * p / k)))
                if "sparse-hybrid" in methods:
                    pre, comb = design_link(h, a_t, a_r, config.n_rf_tx, config.n_rf_rx, snr,
                                            f_target=target.f, unitary_bb=config.unitary_bb)
                    add("sparse-hybrid", snr_db, label, spectral_efficiency(h, pre, comb, snr, ns))
                if "beam-steering" in methods:
                    st = beam_steering(real, ns, snr, powers, config.steering_max_subsets,
                                       config.steering_candidates)
                    add("beam-steering", snr_db, label, st.rate)
                if "quantized-sparse-hybrid" in methods:
                    for bits in config.quantization.angle_bits:
                        pre = quant[ns, bits]
                        comb = sparse_combiner_omp(SignalModel(h, pre.f, snr, ns), a_r,
                                                   config.n_rf_rx)
                        add("quantized-sparse-hybrid", snr_db, label,
                            spectral_efficiency(h, pre, comb, snr, ns), bits)
    return records


def _trial_worker(args):
    config, trial, codebooks = args
    return _run_trial(config, trial, codebooks)


def sweep(config: ExperimentConfig, threads: int = 1, codebooks: Optional[dict] = None
          ) -> SweepResult:
    """Monte Carlo rate sweep over SNR (and spread / quantization bits).

    Trials are independent streams seeded from ``(seed, trial)``, so results
    do not depend on ``threads`` or on how many trials run.
    """
    config.validate()
    if "quantized-sparse-hybrid" in config.methods and codebooks is None:
        codebooks = train_codebooks(config)
    codebooks = codebooks or {}
    jobs = [(config, t, codebooks) for t in range(config.trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(_trial_worker, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        per_trial = [_trial_worker(j) for j in jobs]

    groups: dict = {}
    records = []
    for trial, recs in enumerate(per_trial):
        for method, snr_db, ns, spread, bits, rate, digest in recs:
            groups.setdefault((method, spread, bits, ns, snr_db), []).append(rate)
            records.append((trial, method, snr_db, ns, spread, bits, rate, digest))

    points = []
    for (method, spread, bits, ns, snr_db), rates in groups.items():
        mean, median, ci = aggregate(rates)
        points.append(RatePoint(method, snr_db, ns, mean, median, ci, len(rates), spread, bits))
    return SweepResult(config, points, records)
