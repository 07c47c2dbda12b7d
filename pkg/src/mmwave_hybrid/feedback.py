"""
Limited feedback of hybrid precoders.

The receiver runs sparse precoding over a dictionary of quantized response
vectors, so every RF beam is described by an (azimuth, elevation) codebook
index pair. The baseband matrix is a subspace quantity and is quantized with
a Grassmannian codebook trained by Lloyd's algorithm under the chordal
distance.

Bitstream layout: for each RF column, the azimuth index (``bits_az`` bits,
MSB first) then the elevation index (``bits_el`` bits); then the baseband
codebook index (``codebook.bits`` bits).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .arrays import ArrayGeometry, Sector, response_matrix
from .channel import ChannelParams, sample_channel
from .precoding import HybridPrecoder, as_matrix, optimal_precoder, sparse_precoder_omp

__all__ = [
    "angle_grid",
    "AngleCodebook",
    "quantized_dictionary",
    "SubspaceCodebook",
    "chordal_distance",
    "orthonormalize",
    "train_bb_codebook",
    "bb_training_set",
    "quantize_bb",
    "FeedbackMessage",
    "feedback_roundtrip",
    "decode_feedback",
]


def angle_grid(bits: int, lo: float, hi: float) -> np.ndarray:
    """Midpoints of ``2**bits`` equal cells of ``[lo, hi]``:
    ``lo + (2m - 1) (hi - lo) / 2**(bits + 1)`` for ``m = 1 .. 2**bits``."""
    if bits < 0:
        raise ValueError("bits must be nonnegative")
    m = np.arange(1, 2 ** bits + 1)
    return lo + (2 * m - 1) * (hi - lo) / 2 ** (bits + 1)


@dataclass(frozen=True)
class AngleCodebook:
    bits_az: int
    bits_el: int
    sector: Sector

    @property
    def points_az(self) -> np.ndarray:
        return angle_grid(self.bits_az, self.sector.az_min, self.sector.az_max)

    @property
    def points_el(self) -> np.ndarray:
        return angle_grid(self.bits_el, self.sector.el_min, self.sector.el_max)

    @property
    def size(self) -> int:
        return 2 ** (self.bits_az + self.bits_el)

    @property
    def bits_per_beam(self) -> int:
        return self.bits_az + self.bits_el

    def column(self, i_az, i_el):
        return np.asarray(i_az) * 2 ** self.bits_el + np.asarray(i_el)

    def indices(self, column):
        column = np.asarray(column)
        return column // 2 ** self.bits_el, column % 2 ** self.bits_el

    def encode(self, az, el):
        """Nearest codebook indices, per axis."""
        i_az = np.argmin(np.abs(np.subtract.outer(np.asarray(az), self.points_az)), axis=-1)
        i_el = np.argmin(np.abs(np.subtract.outer(np.asarray(el), self.points_el)), axis=-1)
        return i_az, i_el

    def decode(self, i_az, i_el):
        return self.points_az[i_az], self.points_el[i_el]


def quantized_dictionary(codebook: AngleCodebook, geom: ArrayGeometry) -> np.ndarray:
    """Responses at every codebook angle pair; column
    ``i_az * 2**bits_el + i_el``."""
    az, el = np.meshgrid(codebook.points_az, codebook.points_el, indexing="ij")
    return response_matrix(geom, az.ravel(), el.ravel())


def chordal_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Squared chordal distance ``Ns - ||A^H B||_F^2`` between orthonormal
    bases. Broadcasts over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    ns = a.shape[-1]
    ab = np.conj(np.swapaxes(a, -1, -2)) @ b
    return ns - np.sum(np.abs(ab) ** 2, axis=(-2, -1))


def orthonormalize(f: np.ndarray) -> np.ndarray:
    """Closest matrix with orthonormal columns (polar factor)."""
    u, _, vh = np.linalg.svd(np.asarray(f), full_matrices=False)
    return u @ vh


@dataclass(frozen=True, eq=False)
class SubspaceCodebook:
    entries: np.ndarray  # (2**bits, n_rf, ns)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 3:
            raise ValueError("entries must be a stack of matrices")
        k = e.shape[0]
        if k & (k - 1):
            raise ValueError("codebook size must be a power of two")
        object.__setattr__(self, "entries", e)

    @property
    def bits(self) -> int:
        return int(self.entries.shape[0]).bit_length() - 1

    @property
    def n_rf(self) -> int:
        return self.entries.shape[1]

    @property
    def ns(self) -> int:
        return self.entries.shape[2]

    def __len__(self):
        return self.entries.shape[0]

    def to_json(self, sector: Optional[Sector] = None) -> dict:
        return {
            "bits": self.bits,
            "n_rf": self.n_rf,
            "ns": self.ns,
            "sector": None if sector is None else sector.to_degrees(),
            "entries": [[[v.real, v.imag] for v in e.ravel()] for e in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SubspaceCodebook":
        n_rf, ns = obj["n_rf"], obj["ns"]
        entries = np.array([[complex(re, im) for re, im in e] for e in obj["entries"]])
        cb = cls(entries.reshape(-1, n_rf, ns))
        if cb.bits != obj["bits"]:
            raise ValueError("entry count does not match bits")
        return cb

    def save(self, path, sector: Optional[Sector] = None):
        Path(path).write_text(json.dumps(self.to_json(sector)))

    @classmethod
    def load(cls, path) -> "SubspaceCodebook":
        return cls.from_json(json.loads(Path(path).read_text()))


def _dominant_subspace(proj: np.ndarray, ns: int) -> np.ndarray:
    _, vecs = np.linalg.eigh(proj)
    return vecs[:, ::-1][:, :ns]


def train_bb_codebook(training_set, bits: int, rng: np.random.Generator,
                      max_iter: int = 100, tol: float = 1e-6) -> SubspaceCodebook:
    """Generalized Lloyd training of a Grassmannian codebook.

    Nearest-neighbour cells use the chordal distance; each centroid is the
    dominant ``ns``-dimensional subspace of the average projector of its cell.
    An empty cell is reseeded with the member of the largest cell that is
    farthest from its centroid.
    """
    x = np.stack([orthonormalize(t) for t in training_set])
    n, _, ns = x.shape
    k = 2 ** bits
    if n < 10 * k:
        raise ValueError(f"training set of {n} is too small for {k} codewords (need {10 * k})")
    proj = x @ np.conj(np.swapaxes(x, -1, -2))   # (n, n_rf, n_rf)

    centroids = x[rng.choice(n, size=k, replace=False)]
    prev = np.inf
    for _ in range(max_iter):
        d = ns - np.sum(np.abs(np.einsum("kij,nil->nkjl", centroids.conj(), x)) ** 2,
                        axis=(-2, -1))
        assign = np.argmin(d, axis=1)
        dist = d[np.arange(n), assign]
        distortion = dist.mean()
        counts = np.bincount(assign, minlength=k)
        for j in np.flatnonzero(counts == 0):
            big = int(np.argmax(counts))
            members = np.flatnonzero(assign == big)
            far = members[np.argmax(dist[members])]
            assign[far] = j
            dist[far] = 0.0
            counts[big] -= 1
            counts[j] += 1
        centroids = np.stack([_dominant_subspace(proj[assign == j].mean(axis=0), ns)
                              for j in range(k)])
        if np.isfinite(prev) and abs(prev - distortion) <= tol * max(prev, 1e-300):
            break
        prev = distortion
    return SubspaceCodebook(centroids)


def quantize_bb(f_bb: np.ndarray, codebook: SubspaceCodebook):
    """Nearest codeword under the chordal distance (lowest index on ties).

    Returns ``(index, codeword)``.
    """
    f = orthonormalize(np.asarray(f_bb).reshape(codebook.n_rf, -1))
    d = chordal_distance(codebook.entries, f[None])
    idx = int(np.argmin(d))
    return idx, codebook.entries[idx]


def bb_training_set(params: ChannelParams, angle_codebook: AngleCodebook,
                    n_rf: int, ns: int, n_samples: int,
                    rng: np.random.Generator) -> list[np.ndarray]:
    """Baseband precoders produced by the unitary sparse-precoding variant on
    independent channel draws, for codebook training."""
    dictionary = quantized_dictionary(angle_codebook, params.tx)
    out = []
    for _ in range(n_samples):
        real = sample_channel(params, rng)
        target = optimal_precoder(real, ns).f
        pre = sparse_precoder_omp(target, dictionary, n_rf, unitary_bb=True)
        out.append(orthonormalize(pre.f_bb))
    return out


@dataclass(frozen=True, eq=False)
class FeedbackMessage:
    az_indices: tuple
    el_indices: tuple
    bb_index: int
    bits: str
    precoder: HybridPrecoder    # what the transmitter reconstructs

    @property
    def n_bits(self) -> int:
        return len(self.bits)


def _to_bits(value: int, width: int) -> str:
    return format(int(value), f"0{width}b") if width else ""


def _assemble(cb: AngleCodebook, az_idx, el_idx, bb_index, bb_bits) -> str:
    parts = [_to_bits(a, cb.bits_az) + _to_bits(e, cb.bits_el) for a, e in zip(az_idx, el_idx)]
    return "".join(parts) + _to_bits(bb_index, bb_bits)


def decode_feedback(bits: str, angle_codebook: AngleCodebook, bb_codebook: SubspaceCodebook,
                    geom: ArrayGeometry) -> HybridPrecoder:
    """Transmitter-side reconstruction of the hybrid precoder from a bit
    string. The power scaling is recomputed locally."""
    n_rf, ns = bb_codebook.n_rf, bb_codebook.ns
    per_beam = angle_codebook.bits_per_beam
    expected = n_rf * per_beam + bb_codebook.bits
    if len(bits) != expected:
        raise ValueError(f"expected {expected} feedback bits, got {len(bits)}")
    az_idx, el_idx = [], []
    for c in range(n_rf):
        chunk = bits[c * per_beam:(c + 1) * per_beam]
        az_idx.append(int(chunk[:angle_codebook.bits_az] or "0", 2))
        el_idx.append(int(chunk[angle_codebook.bits_az:] or "0", 2))
    tail = bits[n_rf * per_beam:]
    bb_index = int(tail or "0", 2)
    az, el = angle_codebook.decode(np.array(az_idx), np.array(el_idx))
    f_rf = response_matrix(geom, az, el)
    f_bb = bb_codebook.entries[bb_index]
    norm = np.linalg.norm(f_rf @ f_bb)
    if norm == 0:
        raise ValueError("reconstructed precoder is zero")
    f_bb = np.sqrt(ns) * f_bb / norm
    cols = tuple(int(j) for j in angle_codebook.column(np.array(az_idx), np.array(el_idx)))
    return HybridPrecoder(f_rf, f_bb, cols)


def feedback_roundtrip(h, geom: ArrayGeometry, angle_codebook: AngleCodebook,
                       bb_codebook: SubspaceCodebook, ns: Optional[int] = None,
                       f_target=None, dictionary: Optional[np.ndarray] = None
                       ) -> FeedbackMessage:
    """Receiver side: sparse-precode over the quantized dictionary, quantize
    the baseband matrix, and emit the feedback bits; the returned message
    also carries the transmitter's reconstruction of those bits."""
    n_rf = bb_codebook.n_rf
    if f_target is None:
        f_target = optimal_precoder(as_matrix(h), ns or bb_codebook.ns).f
    if dictionary is None:
        dictionary = quantized_dictionary(angle_codebook, geom)
    pre = sparse_precoder_omp(f_target, dictionary, n_rf, unitary_bb=True)
    az_idx, el_idx = angle_codebook.indices(np.array(pre.selected_columns))
    bb_index, _ = quantize_bb(pre.f_bb, bb_codebook)
    bits = _assemble(angle_codebook, az_idx, el_idx, bb_index, bb_codebook.bits)
    precoder = decode_feedback(bits, angle_codebook, bb_codebook, geom)
    return FeedbackMessage(tuple(int(a) for a in az_idx), tuple(int(e) for e in el_idx),
                           bb_index, bits, precoder)
