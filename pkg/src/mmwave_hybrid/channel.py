"""
Clustered narrowband mmWave channel (extended Saleh-Valenzuela).

``H = sqrt(Nt*Nr / (Ncl*Nray)) * sum_{i,l} alpha_il * Lr * Lt * a_r a_t^H``

Random draws happen in a fixed order so that a seed fully determines a
realization:

1. cluster means, one ``(Ncl, 4)`` block of uniforms in row-major order with
   columns ``(aod_az, aod_el, aoa_az, aoa_el)``;
2. per-ray Laplacian offsets, an ``(Ncl, Nray, 4)`` block with the same
   column layout; entries with ``|offset| > pi`` are redrawn one at a time in
   flat order;
3. ray gains, an ``(Ncl, Nray, 2)`` block of standard normals (real, imag).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .arrays import ArrayGeometry, Sector, element_gain, normalize_direction, response_matrix

__all__ = [
    "ChannelParams",
    "RayParams",
    "ChannelRealization",
    "sample_channel",
    "response_dictionary",
    "in_sector_probability",
]


@dataclass(frozen=True)
class ChannelParams:
    tx: ArrayGeometry
    rx: ArrayGeometry
    n_clusters: int = 8
    n_rays: int = 10
    angle_spread: float = np.deg2rad(7.5)
    cluster_powers: Optional[Sequence[float]] = None  # None -> equal powers

    def __post_init__(self):
        if self.n_clusters < 1 or self.n_rays < 1:
            raise ValueError("n_clusters and n_rays must be positive")
        if self.angle_spread < 0:
            raise ValueError("angle_spread must be nonnegative")
        if self.cluster_powers is not None:
            p = np.asarray(self.cluster_powers, dtype=float)
            if p.shape != (self.n_clusters,) or np.any(p < 0) or not p.sum() > 0:
                raise ValueError("cluster_powers needs n_clusters nonnegative entries "
                                 "with positive sum")
            object.__setattr__(self, "cluster_powers", tuple(p.tolist()))

    @property
    def n_paths(self) -> int:
        return self.n_clusters * self.n_rays

    def cluster_variances(self) -> np.ndarray:
        """Per-cluster gain variances, scaled so that E||H||_F^2 = Nt*Nr.

        The scaling accounts for the expected fraction of rays zeroed by the
        sectored element gains.
        """
        if self.cluster_powers is None:
            p = np.ones(self.n_clusters)
        else:
            p = np.asarray(self.cluster_powers, dtype=float)
        p_in = (in_sector_probability(self.tx.sector, self.angle_spread)
                * in_sector_probability(self.rx.sector, self.angle_spread))
        gamma = self.n_clusters / p_in
        return p * gamma / p.sum()


@dataclass(frozen=True)
class RayParams:
    gain: complex
    aod_az: float
    aod_el: float
    aoa_az: float
    aoa_el: float
    cluster_index: int
    ray_index: int


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    gains: np.ndarray       # (Ncl*Nray,) alpha times both element gains
    raw_gains: np.ndarray   # (Ncl*Nray,) alpha
    aod: np.ndarray         # (Ncl*Nray, 2) azimuth, elevation
    aoa: np.ndarray         # (Ncl*Nray, 2)
    params: ChannelParams

    @property
    def rays(self) -> list[RayParams]:
        n_rays = self.params.n_rays
        return [RayParams(complex(self.raw_gains[j]), *self.aod[j], *self.aoa[j],
                          j // n_rays, j % n_rays)
                for j in range(self.gains.size)]

    @property
    def nr(self) -> int:
        return self.h.shape[0]

    @property
    def nt(self) -> int:
        return self.h.shape[1]

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.h).tobytes()).hexdigest()

    def to_json(self) -> dict:
        return {
            "nr": self.nr,
            "nt": self.nt,
            "rays": [
                {"cluster": r.cluster_index, "ray": r.ray_index,
                 "gain": [r.gain.real, r.gain.imag],
                 "aod_az": r.aod_az, "aod_el": r.aod_el,
                 "aoa_az": r.aoa_az, "aoa_el": r.aoa_el}
                for r in self.rays
            ],
            "h": [[v.real, v.imag] for v in self.h.ravel()],
        }


def in_sector_probability(sector: Sector, spread: float) -> float:
    """Probability that a ray lands inside ``sector`` when its cluster mean is
    uniform over the sector and its offset is Laplacian (std ``spread``,
    truncated at +-pi), azimuth and elevation independent."""
    if sector.is_full_sphere or spread == 0:
        return 1.0
    b = spread / np.sqrt(2)

    def axis(width, wraps):
        if wraps:
            return 1.0
        # P(out) = (2/w) * int_0^w P(X > u) du for a symmetric offset X
        m = min(width, np.pi)
        tail = np.exp(-np.pi / b)
        integral = (b * (1 - np.exp(-m / b)) - m * tail) / (2 * (1 - tail))
        return 1.0 - 2 * integral / width

    return axis(sector.az_width, sector.az_width >= 2 * np.pi) * \
        axis(sector.el_width, sector.el_min <= 0 and sector.el_max >= np.pi)


def _draw_means(u, sector: Sector):
    """Map uniforms to mean angles: uniform in a sector, or uniform on the
    sphere (uniform azimuth and uniform cos(elevation)) for omni arrays."""
    if sector.is_full_sphere:
        az = -np.pi + 2 * np.pi * u[:, 0]
        el = np.arccos(1 - 2 * u[:, 1])
        return az, el
    az = sector.az_min + sector.az_width * u[:, 0]
    el = sector.el_min + sector.el_width * u[:, 1]
    return az, el


def _laplace_offsets(rng, scale, shape):
    offsets = rng.laplace(0.0, scale, size=shape)
    flat = offsets.reshape(-1)
    for k in np.flatnonzero(np.abs(flat) > np.pi):
        while abs(flat[k]) > np.pi:
            flat[k] = rng.laplace(0.0, scale)
    return offsets


def sample_channel(params: ChannelParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization. See the module docstring for the draw
    order contract."""
    ncl, nray = params.n_clusters, params.n_rays
    tx, rx = params.tx, params.rx

    u = rng.random((ncl, 4))
    t_az, t_el = _draw_means(u[:, 0:2], tx.sector)
    r_az, r_el = _draw_means(u[:, 2:4], rx.sector)
    means = np.stack([t_az, t_el, r_az, r_el], axis=1)

    offsets = _laplace_offsets(rng, params.angle_spread / np.sqrt(2), (ncl, nray, 4))
    angles = (means[:, None, :] + offsets).reshape(-1, 4)

    g = rng.standard_normal((ncl, nray, 2))
    sigma = np.sqrt(params.cluster_variances() / 2)
    alpha = (sigma[:, None] * (g[..., 0] + 1j * g[..., 1])).reshape(-1)

    aod = np.stack(normalize_direction(angles[:, 0], angles[:, 1]), axis=1)
    aoa = np.stack(normalize_direction(angles[:, 2], angles[:, 3]), axis=1)
    lam = element_gain(tx.sector, aod[:, 0], aod[:, 1]) * \
        element_gain(rx.sector, aoa[:, 0], aoa[:, 1])
    gains = alpha * lam

    a_t = response_matrix(tx, aod[:, 0], aod[:, 1])
    a_r = response_matrix(rx, aoa[:, 0], aoa[:, 1])
    scale = np.sqrt(tx.n_elements * rx.n_elements / (ncl * nray))
    h = scale * (a_r * gains) @ a_t.conj().T
    return ChannelRealization(h=h, gains=gains, aod=aod, aoa=aoa, params=params,
                              raw_gains=alpha)


def response_dictionary(real: ChannelRealization, side: str = "tx") -> np.ndarray:
    """Array responses at every ray's AoD (``"tx"``) or AoA (``"rx"``), one
    column per ray in (cluster, ray) order."""
    side = side.lower()
    if side == "tx":
        return response_matrix(real.params.tx, real.aod[:, 0], real.aod[:, 1])
    if side == "rx":
        return response_matrix(real.params.rx, real.aoa[:, 0], real.aoa[:, 1])
    raise ValueError(f"side must be 'tx' or 'rx', got {side!r}")
