"""
Antenna array geometries and array response (steering) vectors.

Angles are in radians. Azimuth ``az`` is measured in the xy-plane and
elevation ``el`` from the z-axis, so a broadside direction of an array in
the yz-plane is ``(az, el) = (0, pi/2)``.

Planar arrays lie in the yz-plane with ``width`` elements along y and
``height`` elements along z. Element ``(m, n)`` is stored at flat index
``m * height + n`` (y-major) everywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "ArrayKind",
    "Sector",
    "ArrayGeometry",
    "ula_response",
    "upa_response",
    "array_response",
    "response_matrix",
    "element_gain",
    "normalize_direction",
]


class ArrayKind(str, Enum):
    ULA = "ula"
    UPA = "upa"


@dataclass(frozen=True)
class Sector:
    """Closed angular sector ``[az_min, az_max] x [el_min, el_max]``."""

    az_min: float
    az_max: float
    el_min: float
    el_max: float

    def __post_init__(self):
        if not self.az_min < self.az_max:
            raise ValueError(f"empty azimuth interval [{self.az_min}, {self.az_max}]")
        if not self.el_min < self.el_max:
            raise ValueError(f"empty elevation interval [{self.el_min}, {self.el_max}]")

    @classmethod
    def full_sphere(cls) -> "Sector":
        return cls(-np.pi, np.pi, 0.0, np.pi)

    @classmethod
    def from_degrees(cls, az_min, az_max, el_min, el_max) -> "Sector":
        return cls(*np.deg2rad([az_min, az_max, el_min, el_max]).tolist())

    @property
    def az_width(self) -> float:
        return self.az_max - self.az_min

    @property
    def el_width(self) -> float:
        return self.el_max - self.el_min

    @property
    def is_full_sphere(self) -> bool:
        return self.az_width >= 2 * np.pi and self.el_min <= 0.0 and self.el_max >= np.pi

    def center(self) -> tuple[float, float]:
        return (0.5 * (self.az_min + self.az_max), 0.5 * (self.el_min + self.el_max))

    def to_degrees(self) -> dict:
        return dict(zip(("az_min", "az_max", "el_min", "el_max"),
                        np.rad2deg([self.az_min, self.az_max, self.el_min, self.el_max]).tolist()))


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear (y-axis) or planar (yz-plane) array.

    For a ULA only ``width`` is used and ``height`` must be 1.
    """

    kind: ArrayKind
    width: int
    height: int = 1
    spacing: float = 0.5
    sector: Sector = field(default_factory=Sector.full_sphere)

    def __post_init__(self):
        object.__setattr__(self, "kind", ArrayKind(self.kind))
        if self.width < 1 or self.height < 1:
            raise ValueError("array dimensions must be positive")
        if self.kind is ArrayKind.ULA and self.height != 1:
            raise ValueError("a ULA has height 1")
        if not self.spacing > 0:
            raise ValueError("element spacing must be positive")

    @classmethod
    def ula(cls, n, spacing=0.5, sector=None) -> "ArrayGeometry":
        return cls(ArrayKind.ULA, n, 1, spacing, sector or Sector.full_sphere())

    @classmethod
    def upa(cls, width, height, spacing=0.5, sector=None) -> "ArrayGeometry":
        return cls(ArrayKind.UPA, width, height, spacing, sector or Sector.full_sphere())

    @classmethod
    def square(cls, n, spacing=0.5, sector=None) -> "ArrayGeometry":
        side = int(round(np.sqrt(n)))
        if side * side != n:
            raise ValueError(f"{n} is not a perfect square")
        return cls.upa(side, side, spacing, sector)

    @property
    def n_elements(self) -> int:
        return self.width * self.height

    def response(self, az, el=np.pi / 2):
        return array_response(self, az, el)


def _kd(spacing):
    return 2 * np.pi * spacing


def ula_response(geom: ArrayGeometry, az) -> np.ndarray:
    """Response of an N-element ULA on the y-axis.

    Entry ``m`` is ``exp(1j * m * kd * sin(az)) / sqrt(N)``. ``az`` may be an
    array of K angles, in which case an ``(N, K)`` matrix is returned.
    """
    az = np.asarray(az, dtype=float)
    m = np.arange(geom.width)
    phase = _kd(geom.spacing) * np.multiply.outer(m, np.sin(az))
    return np.exp(1j * phase) / np.sqrt(geom.width)


def upa_response(geom: ArrayGeometry, az, el) -> np.ndarray:
    az = np.asarray(az, dtype=float)
    el = np.asarray(el, dtype=float)
    az, el = np.broadcast_arrays(az, el)
    m = np.repeat(np.arange(geom.width), geom.height)
    n = np.tile(np.arange(geom.height), geom.width)
    u = np.sin(az) * np.sin(el)
    v = np.cos(el)
    phase = _kd(geom.spacing) * (np.multiply.outer(m, u) + np.multiply.outer(n, v))
    return np.exp(1j * phase) / np.sqrt(geom.n_elements)


def array_response(geom: ArrayGeometry, az, el=np.pi / 2) -> np.ndarray:
    if geom.kind is ArrayKind.ULA:
        return ula_response(geom, az)
    return upa_response(geom, az, el)


def response_matrix(geom: ArrayGeometry, az, el) -> np.ndarray:
    """Stack responses at paired angles as columns, shape ``(N, K)``."""
    az = np.atleast_1d(np.asarray(az, dtype=float))
    el = np.atleast_1d(np.asarray(el, dtype=float))
    return array_response(geom, az, el).reshape(geom.n_elements, -1)


def normalize_direction(az, el):
    """Map angles to ``az in [-pi, pi)``, ``el in [0, pi]`` without changing
    the physical direction they describe."""
    az = np.asarray(az, dtype=float)
    el = np.mod(np.asarray(el, dtype=float), 2 * np.pi)
    flip = el > np.pi
    el = np.where(flip, 2 * np.pi - el, el)
    az = np.where(flip, az + np.pi, az)
    az = np.mod(az + np.pi, 2 * np.pi) - np.pi
    return az, el


def element_gain(sector: Sector, az, el):
    """Ideal sectored element gain: 1 inside the closed sector, 0 outside."""
    if sector.is_full_sphere:
        return np.ones(np.broadcast(np.asarray(az), np.asarray(el)).shape)
    az = np.asarray(az, dtype=float)
    el = np.asarray(el, dtype=float)
    inside = ((az >= sector.az_min) & (az <= sector.az_max)
              & (el >= sector.el_min) & (el <= sector.el_max))
    return inside.astype(float)
