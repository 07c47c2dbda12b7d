"""
Unconstrained and spatially sparse hybrid precoders.

The hybrid precoder ``F = F_RF @ F_BB`` is built by orthogonal matching
pursuit over a dictionary of array response vectors: each iteration picks
the response vector with the largest projection onto the residual, refits the
baseband matrix by least squares (or orthogonal Procrustes), and updates the
residual. Constant-modulus RF columns come for free because every dictionary
column is a steering vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .arrays import ArrayGeometry, array_response
from .channel import ChannelRealization, response_dictionary

__all__ = [
    "UnconstrainedPrecoder",
    "HybridPrecoder",
    "SteeringResult",
    "as_matrix",
    "optimal_precoder",
    "waterfilling",
    "waterfilling_precoder",
    "sparse_precoder_omp",
    "mutual_information",
    "mutual_information_approx",
    "beam_steering",
    "beam_pattern",
    "log2det_hpd",
    "combined_rate",
]

RANK_TOL = 1e-10
LSTSQ_RCOND = 1e-10


def as_matrix(x) -> np.ndarray:
    """Accept a channel realization, a precoder object or a plain array."""
    if isinstance(x, ChannelRealization):
        return x.h
    if hasattr(x, "f"):
        return x.f
    return np.asarray(x)


def log2det_hpd(a: np.ndarray) -> float:
    """log2 det of a Hermitian positive definite matrix (or a stack of them)
    via Cholesky."""
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    chol = np.linalg.cholesky(a)
    diag = np.diagonal(chol, axis1=-2, axis2=-1).real
    return 2 * np.sum(np.log2(diag), axis=-1)


def combined_rate(w_gram: np.ndarray, m: np.ndarray, snr: float, ns: int,
                  tol: float = 1e-12):
    """Spectral efficiency with a linear combiner, from Gram quantities.

    ``w_gram = W^H W`` and ``m = W^H H F`` (stackable). The noise covariance
    after combining is inverted only on the range of ``W``, which equals the
    pseudo-inverse form when ``W`` is rank deficient.
    """
    lam, u = np.linalg.eigh(w_gram)
    top = lam[..., -1:]
    keep = lam > tol * np.maximum(top, np.finfo(float).tiny)
    inv_sqrt = np.where(keep, 1.0 / np.sqrt(np.where(keep, lam, 1.0)), 0.0)
    um = np.conj(np.swapaxes(u, -1, -2)) @ m
    x = (inv_sqrt[..., :, None] * um)
    gram = x @ np.conj(np.swapaxes(x, -1, -2))
    eye = np.eye(w_gram.shape[-1])
    return log2det_hpd(eye + (snr / ns) * gram)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real positive."""
    idx = np.argmax(np.abs(v), axis=0)
    ref = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(ref) / ref)


@dataclass(frozen=True, eq=False)
class UnconstrainedPrecoder:
    f_opt: np.ndarray
    singular_values: np.ndarray
    powers: Optional[np.ndarray] = None  # None means equal power per stream

    @property
    def f(self) -> np.ndarray:
        return self.f_opt

    @property
    def ns(self) -> int:
        return self.f_opt.shape[1]


@dataclass(frozen=True, eq=False)
class HybridPrecoder:
    f_rf: np.ndarray
    f_bb: np.ndarray
    selected_columns: tuple = ()
    residuals: tuple = field(default=(), repr=False)
    duplicates: int = 0

    @property
    def f(self) -> np.ndarray:
        return self.f_rf @ self.f_bb

    @property
    def n_rf(self) -> int:
        return self.f_rf.shape[1]

    @property
    def ns(self) -> int:
        return self.f_bb.shape[1]


def _svd(h):
    u, s, vh = np.linalg.svd(h, full_matrices=False)
    return u, s, vh.conj().T


def optimal_precoder(h, ns: int) -> UnconstrainedPrecoder:
    """Dominant ``ns`` right singular vectors of the channel."""
    h = as_matrix(h)
    _, s, v = _svd(h)
    if ns < 1:
        raise ValueError("ns must be at least 1")
    rank = int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    if ns > rank:
        raise ValueError(f"ns={ns} exceeds the numerical rank {rank} of the channel")
    return UnconstrainedPrecoder(_fix_phase(v[:, :ns]), s[:ns])


def waterfilling(singular_values, snr: float, ns_max: Optional[int] = None):
    """Capacity-achieving power split over eigenchannels.

    Maximizes ``sum(log2(1 + snr * s_i**2 * p_i / ns))`` subject to
    ``sum(p_i) == ns`` where ``ns`` is the number of active streams, capped at
    ``ns_max``.

    Returns
    -------
    powers : ndarray
        Per-stream powers for the ``ns`` strongest eigenchannels, summing to
        ``ns``.
    ns : int
    """
    s = np.asarray(singular_values, dtype=float)
    if np.any(s < 0):
        raise ValueError("singular values must be nonnegative")
    if not np.any(s > 0):
        raise ValueError("all singular values are zero")
    s = np.sort(s)[::-1]
    s = s[s > 0]
    if ns_max is not None:
        s = s[:ns_max]
    inv_gain = 1.0 / (snr * s ** 2)
    # fraction q_i of the total power; q_i = mu - 1/g_i over the active set
    k = s.size
    while k > 1:
        mu = (1.0 + inv_gain[:k].sum()) / k
        if mu - inv_gain[k - 1] > 0:
            break
        k -= 1
    mu = (1.0 + inv_gain[:k].sum()) / k
    q = mu - inv_gain[:k]
    return k * q, k


def waterfilling_precoder(h, snr: float, ns_max: Optional[int] = None) -> UnconstrainedPrecoder:
    """``F = V Gamma`` with Gamma from waterfilling; ``||F||_F^2 = ns``."""
    h = as_matrix(h)
    _, s, v = _svd(h)
    powers, ns = waterfilling(s, snr, ns_max)
    f = _fix_phase(v[:, :ns]) * np.sqrt(powers)
    return UnconstrainedPrecoder(f, s[:ns], powers)


def _procrustes(a: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(a, full_matrices=False)
    return u @ vh


def sparse_precoder_omp(f_target, dictionary: np.ndarray, n_rf: int,
                        unitary_bb: bool = False,
                        allow_reselect: bool = True) -> HybridPrecoder:
    """Spatially sparse precoding by orthogonal matching pursuit.

    Parameters
    ----------
    f_target : (Nt, Ns) array
        Precoder to approximate, usually the optimal unconstrained one.
    dictionary : (Nt, K) array
        Candidate RF beamforming vectors (array response vectors).
    n_rf : int
        Number of RF chains, i.e. pursuit iterations.
    unitary_bb : bool
        Fit the baseband matrix by orthogonal Procrustes instead of least
        squares, producing orthonormal baseband columns before the final
        power scaling.
    allow_reselect : bool
        If False, a dictionary column is never picked twice.

    Returns
    -------
    HybridPrecoder
        ``residuals`` holds ``||F_target - F_RF F_BB||_F`` after every
        iteration, before the final power scaling.
    """
    f_target = np.asarray(as_matrix(f_target), dtype=complex)
    if f_target.ndim == 1:
        f_target = f_target[:, None]
    if n_rf > dictionary.shape[1] and not allow_reselect:
        raise ValueError("n_rf exceeds the dictionary size")
    if not np.any(f_target):
        raise ValueError("target precoder is zero")
    ns = f_target.shape[1]
    a_h = dictionary.conj().T

    f_res = f_target
    selected: list[int] = []
    residuals = []
    f_bb = None
    for _ in range(n_rf):
        psi = a_h @ f_res
        score = np.einsum("ij,ij->i", psi, psi.conj()).real
        if not allow_reselect and selected:
            score[selected] = -np.inf
        k = int(np.argmax(score))
        selected.append(k)
        f_rf = dictionary[:, selected]
        if unitary_bb:
            f_bb = _procrustes(f_rf.conj().T @ f_target)
        else:
            f_bb = np.linalg.lstsq(f_rf, f_target, rcond=LSTSQ_RCOND)[0]
        diff = f_target - f_rf @ f_bb
        r = np.linalg.norm(diff)
        residuals.append(r)
        f_res = diff / r if r > 0 else np.zeros_like(diff)

    f_rf = dictionary[:, selected]
    f_bb = np.sqrt(ns) * f_bb / np.linalg.norm(f_rf @ f_bb)
    return HybridPrecoder(f_rf, f_bb, tuple(selected), tuple(residuals),
                          len(selected) - len(set(selected)))


def mutual_information(h, f, snr: float, ns: Optional[int] = None) -> float:
    """``log2 det(I + snr/ns * H F F^H H^H)`` in bits/s/Hz, unit noise power.

    Evaluated on the ``ns x ns`` Gram side of Sylvester's identity.
    """
    h = as_matrix(h)
    f = as_matrix(f)
    if f.ndim == 1:
        f = f[:, None]
    ns = f.shape[1] if ns is None else ns
    hf = h @ f
    gram = hf.conj().T @ hf
    return float(log2det_hpd(np.eye(f.shape[1]) + (snr / ns) * gram))


def mutual_information_approx(h, f, snr: float, ns: Optional[int] = None) -> float:
    """Rate of the optimal precoder minus the subspace mismatch penalty
    ``ns - ||V1^H F||_F^2``. A diagnostic for how well the sparse design
    objective tracks mutual information; not used for design."""
    h = as_matrix(h)
    f = as_matrix(f)
    if f.ndim == 1:
        f = f[:, None]
    ns = f.shape[1] if ns is None else ns
    _, s, v = _svd(h)
    v1 = v[:, :ns]
    best = np.sum(np.log2(1 + (snr / ns) * s[:ns] ** 2))
    return float(best - (ns - np.linalg.norm(v1.conj().T @ f) ** 2))


@dataclass(frozen=True, eq=False)
class SteeringResult:
    f: np.ndarray
    w: np.ndarray
    rate: float
    rays: tuple


def beam_steering(real: ChannelRealization, ns: int, snr: float,
                  powers=None, max_subsets: int = 100_000,
                  candidates: Optional[int] = None) -> SteeringResult:
    """Exhaustive beam steering over ``ns``-subsets of propagation paths.

    Each stream is sent along ``a_t`` and received along ``a_r`` of one path;
    the subset maximizing the hybrid-receiver spectral efficiency wins.
    ``powers`` (descending, summing to ns) are assigned to the chosen paths
    in order of decreasing single-path gain. ``candidates`` restricts the
    search to that many strongest paths.
    """
    a_t = response_dictionary(real, "tx")
    a_r = response_dictionary(real, "rx")
    g_full = a_r.conj().T @ real.h @ a_t
    gain = np.abs(np.diagonal(g_full)) ** 2
    order = np.argsort(-gain, kind="stable")
    if candidates is not None:
        order = order[:candidates]
    n_cand = order.size
    if ns > n_cand:
        raise ValueError(f"ns={ns} exceeds the {n_cand} available paths")
    count = math.comb(n_cand, ns)
    if count > max_subsets:
        raise ValueError(f"{count} beam-steering subsets exceed the cap of {max_subsets}; "
                         "reduce ns, the number of rays or the candidate count")
    p = np.ones(ns) if powers is None else np.asarray(powers, dtype=float)
    g = g_full[np.ix_(order, order)]
    c = (a_r[:, order].conj().T @ a_r[:, order])
    combos = np.array(list(combinations(range(n_cand), ns)), dtype=int)
    rows = combos[:, :, None]
    cols = combos[:, None, :]
    m = g[rows, cols] * np.sqrt(p)
    rates = combined_rate(c[rows, cols], m, snr, ns)
    best = int(np.argmax(rates))
    rays = tuple(int(order[j]) for j in combos[best])
    f = a_t[:, rays] * np.sqrt(p)
    w = a_r[:, rays]
    return SteeringResult(f, w, float(rates[best]), rays)


def beam_pattern(f, geom: ArrayGeometry, az, el) -> np.ndarray:
    """Array gain ``N * |a(az, el)^H f|^2`` of one beamforming vector on a
    grid of directions (``az`` and ``el`` broadcast together)."""
    f = np.asarray(f).reshape(-1)
    az, el = np.broadcast_arrays(np.asarray(az, dtype=float), np.asarray(el, dtype=float))
    a = array_response(geom, az.ravel(), el.ravel()).reshape(geom.n_elements, -1)
    return (geom.n_elements * np.abs(a.conj().T @ f) ** 2).reshape(az.shape)
