"""
Linear MMSE combining and its spatially sparse hybrid approximation.

Signal model: ``y = sqrt(rho) H F s + n`` with ``E[s s^H] = I/Ns`` and
``E[n n^H] = noise_var * I``. The ``snr`` argument everywhere is
``rho / noise_var``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .precoding import (HybridPrecoder, LSTSQ_RCOND, as_matrix, optimal_precoder,
                        sparse_precoder_omp)

__all__ = [
    "SignalModel",
    "HybridCombiner",
    "rx_covariance",
    "mmse_combiner",
    "mmse_combiner_covariance",
    "mse",
    "weighted_residual",
    "sparse_combiner_omp",
    "design_link",
]


@dataclass(frozen=True, eq=False)
class SignalModel:
    h: np.ndarray
    f: np.ndarray
    snr: float
    ns: Optional[int] = None
    noise_var: float = 1.0

    def __post_init__(self):
        h = np.asarray(as_matrix(self.h))
        f = np.asarray(as_matrix(self.f))
        if f.ndim == 1:
            f = f[:, None]
        if h.shape[1] != f.shape[0]:
            raise ValueError(f"channel {h.shape} and precoder {f.shape} do not conform")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "f", f)
        if self.ns is None:
            object.__setattr__(self, "ns", f.shape[1])

    @property
    def rho(self) -> float:
        return self.snr * self.noise_var

    @property
    def hf(self) -> np.ndarray:
        return self.h @ self.f


@dataclass(frozen=True, eq=False)
class HybridCombiner:
    w_rf: np.ndarray
    w_bb: np.ndarray
    selected_columns: tuple = ()
    residuals: tuple = field(default=(), repr=False)
    duplicates: int = 0

    @property
    def w(self) -> np.ndarray:
        return self.w_rf @ self.w_bb

    @property
    def n_rf(self) -> int:
        return self.w_rf.shape[1]


def rx_covariance(model: SignalModel) -> np.ndarray:
    """``E[y y^H] = rho/Ns * H F F^H H^H + noise_var * I``."""
    hf = model.hf
    nr = hf.shape[0]
    cov = (model.rho / model.ns) * (hf @ hf.conj().T) + model.noise_var * np.eye(nr)
    return 0.5 * (cov + cov.conj().T)


def mmse_combiner(model: SignalModel) -> np.ndarray:
    """Unconstrained MMSE combiner ``W`` (Nr x Ns), so that ``s_hat = W^H y``.

    Uses the Ns x Ns form obtained from the matrix inversion lemma.
    """
    hf = model.hf
    gram = hf.conj().T @ hf
    reg = model.noise_var * model.ns / model.rho
    w_h = np.linalg.solve(gram + reg * np.eye(gram.shape[0]), hf.conj().T) / np.sqrt(model.rho)
    return w_h.conj().T


def mmse_combiner_covariance(model: SignalModel) -> np.ndarray:
    """Same combiner through the Nr x Nr covariance:
    ``W^H = sqrt(rho)/Ns * F^H H^H E[y y^H]^-1``."""
    cov = rx_covariance(model)
    # cov is Hermitian, so W = cov^-1 H F * sqrt(rho)/Ns
    return np.linalg.solve(cov, model.hf) * (np.sqrt(model.rho) / model.ns)


def mse(model: SignalModel, w: np.ndarray) -> float:
    """``E||s - W^H y||^2`` in closed form."""
    w = np.asarray(w)
    if w.ndim == 1:
        w = w[:, None]
    cov = rx_covariance(model)
    e_sy = (np.sqrt(model.rho) / model.ns) * model.hf.conj().T   # E[s y^H]
    signal = np.trace(np.eye(model.f.shape[1])).real / model.ns
    cross = np.trace(e_sy @ w).real
    quad = np.trace(w.conj().T @ cov @ w).real
    return float(signal - 2 * cross + quad)


def weighted_residual(cov: np.ndarray, d: np.ndarray) -> float:
    """``||E[yy^H]^{1/2} D||_F`` without forming the square root."""
    return float(np.sqrt(max(np.trace(d.conj().T @ cov @ d).real, 0.0)))


def sparse_combiner_omp(model: SignalModel, dictionary: np.ndarray, n_rf: int,
                        allow_reselect: bool = True) -> HybridCombiner:
    """Spatially sparse MMSE combining by covariance-weighted matching pursuit.

    ``residuals`` records the covariance-weighted distance to the
    unconstrained MMSE combiner after each iteration.
    """
    if n_rf > dictionary.shape[1] and not allow_reselect:
        raise ValueError("n_rf exceeds the dictionary size")
    cov = rx_covariance(model)
    w_mmse = mmse_combiner(model)
    a_h_cov = dictionary.conj().T @ cov        # A_r^H E[yy^H]
    cov_w_mmse = cov @ w_mmse

    w_res = w_mmse
    selected: list[int] = []
    residuals = []
    w_bb = None
    for _ in range(n_rf):
        psi = a_h_cov @ w_res
        score = np.einsum("ij,ij->i", psi, psi.conj()).real
        if not allow_reselect and selected:
            score[selected] = -np.inf
        k = int(np.argmax(score))
        selected.append(k)
        w_rf = dictionary[:, selected]
        gram = w_rf.conj().T @ cov @ w_rf
        w_bb = np.linalg.lstsq(gram, w_rf.conj().T @ cov_w_mmse, rcond=LSTSQ_RCOND)[0]
        diff = w_mmse - w_rf @ w_bb
        residuals.append(weighted_residual(cov, diff))
        r = np.linalg.norm(diff)
        w_res = diff / r if r > 0 else np.zeros_like(diff)

    w_rf = dictionary[:, selected]
    return HybridCombiner(w_rf, w_bb, tuple(selected), tuple(residuals),
                          len(selected) - len(set(selected)))


def design_link(h, tx_dictionary: np.ndarray, rx_dictionary: np.ndarray,
                n_rf_tx: int, n_rf_rx: int, snr: float, ns: Optional[int] = None,
                f_target=None, unitary_bb: bool = False, noise_var: float = 1.0
                ) -> tuple[HybridPrecoder, HybridCombiner]:
    """Design a hybrid precoder/combiner pair, constrained side first.

    With fewer transmit RF chains (or a tie) the precoder approximates
    ``f_target`` and the combiner is matched to it. With fewer receive RF
    chains the combiner is designed for ``f_target``, and the precoder then
    approximates the dominant right singular vectors of the combined channel
    ``W^H H``, keeping the per-stream powers of ``f_target``.
    """
    h = as_matrix(h)
    if f_target is None:
        if ns is None:
            raise ValueError("pass ns or f_target")
        f_target = optimal_precoder(h, ns).f
    f_target = as_matrix(f_target)
    ns = f_target.shape[1]

    if n_rf_tx <= n_rf_rx:
        precoder = sparse_precoder_omp(f_target, tx_dictionary, n_rf_tx, unitary_bb)
        model = SignalModel(h, precoder.f, snr, ns, noise_var)
        combiner = sparse_combiner_omp(model, rx_dictionary, n_rf_rx)
        return precoder, combiner

    model = SignalModel(h, f_target, snr, ns, noise_var)
    combiner = sparse_combiner_omp(model, rx_dictionary, n_rf_rx)
    h_eff = combiner.w.conj().T @ h
    col_norms = np.linalg.norm(f_target, axis=0)
    target_eff = optimal_precoder(h_eff, ns).f * col_norms
    precoder = sparse_precoder_omp(target_eff, tx_dictionary, n_rf_tx, unitary_bb)
    return precoder, combiner
