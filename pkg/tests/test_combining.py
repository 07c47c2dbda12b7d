import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmwave_hybrid.arrays import ArrayGeometry, array_response
from mmwave_hybrid.channel import ChannelParams, response_dictionary, sample_channel
from mmwave_hybrid.combining import (SignalModel, design_link, mmse_combiner,
                                     mmse_combiner_covariance, mse, rx_covariance,
                                     sparse_combiner_omp, weighted_residual)
from mmwave_hybrid.metrics import spectral_efficiency
from mmwave_hybrid.precoding import mutual_information, optimal_precoder, sparse_precoder_omp

from conftest import SECTOR, crandn, params_64x16

seeds = st.integers(0, 2**32 - 1)
snrs = st.floats(1e-3, 1e3)


def _model(rng, nr=6, nt=5, ns=2, snr=2.0, noise_var=1.0):
    return SignalModel(crandn(rng, nr, nt), crandn(rng, nt, ns), snr, noise_var=noise_var)


def _simulate(model, rng, n):
    """Draws of (s, y) from y = sqrt(rho) H F s + n with E[ss^H] = I/Ns."""
    ns = model.ns
    s = crandn(rng, ns, n) / np.sqrt(ns)
    noise = np.sqrt(model.noise_var) * crandn(rng, model.h.shape[0], n)
    return s, np.sqrt(model.rho) * model.hf @ s + noise


def test_rx_covariance_trivial():
    rng = np.random.default_rng(0)
    m = SignalModel(crandn(rng, 4, 3), np.zeros((3, 1)), 5.0, noise_var=2.0)
    np.testing.assert_allclose(rx_covariance(m), 2.0 * np.eye(4))
    u = np.array([1, 1j, 0, -1]) / 2
    h = np.outer(u, [1.0, 0.0])
    m = SignalModel(h * 3, np.array([[1.0], [0.0]]), 4.0)
    np.testing.assert_allclose(rx_covariance(m), np.eye(4) + 4.0 * 9 * np.outer(u, u.conj()),
                               atol=1e-12)


def test_rx_covariance_monte_carlo():
    rng = np.random.default_rng(1)
    model = _model(rng, noise_var=0.5)
    _, y = _simulate(model, rng, 100_000)
    sample = y @ y.conj().T / y.shape[1]
    cov = rx_covariance(model)
    assert np.linalg.norm(sample - cov) / np.linalg.norm(cov) < 0.03


def test_rx_covariance_is_hpd():
    rng = np.random.default_rng(2)
    cov = rx_covariance(_model(rng))
    np.testing.assert_allclose(cov, cov.conj().T)
    assert np.linalg.eigvalsh(cov).min() > 0


@given(seeds, snrs, st.floats(0.1, 10))
def test_mmse_dual_forms_agree(seed, snr, noise_var):
    rng = np.random.default_rng(seed)
    model = _model(rng, snr=snr, noise_var=noise_var)
    a, b = mmse_combiner(model), mmse_combiner_covariance(model)
    assert np.linalg.norm(a - b) <= 1e-9 * max(1.0, np.linalg.norm(b))


def test_mmse_scalar():
    m = SignalModel(np.ones((1, 1)), np.ones((1, 1)), 3.0, noise_var=2.0)
    rho = 6.0
    assert np.isclose(mmse_combiner(m)[0, 0], np.sqrt(rho) / (rho + 2.0))


def test_mmse_matched_filter_limit():
    rng = np.random.default_rng(3)
    h, f = crandn(rng, 4, 3), crandn(rng, 3, 2)
    rho = 1.0
    model = SignalModel(h, f, rho / 1e6, noise_var=1e6)
    mf = np.sqrt(rho) / (1e6 * 2) * h @ f
    w = mmse_combiner(model)
    assert np.linalg.norm(w - mf) / np.linalg.norm(mf) < 0.01


def test_mse_trivial_and_minimum():
    rng = np.random.default_rng(4)
    model = _model(rng)
    assert np.isclose(mse(model, np.zeros((6, 2))), 1.0)
    w = mmse_combiner(model)
    base = mse(model, w)
    for _ in range(10):
        assert mse(model, w + 0.01 * crandn(rng, 6, 2)) > base


def test_mse_monte_carlo():
    rng = np.random.default_rng(5)
    model = _model(rng, snr=0.8)
    w = crandn(rng, 6, 2) * 0.3
    s, y = _simulate(model, rng, 100_000)
    sampled = np.mean(np.sum(np.abs(s - w.conj().T @ y) ** 2, axis=0))
    assert abs(sampled / mse(model, w) - 1) < 0.02


def _replay_alg2(model, d, n_rf):
    cov = rx_covariance(model)
    w_mmse = mmse_combiner(model)
    res = w_mmse
    chosen, trace = [], []
    for _ in range(n_rf):
        best, best_score = 0, -1.0
        for k in range(d.shape[1]):
            score = float(np.sum(np.abs(d[:, k].conj() @ cov @ res) ** 2))
            if score > best_score:
                best, best_score = k, score
        chosen.append(best)
        wrf = d[:, chosen]
        wbb = np.linalg.pinv(wrf.conj().T @ cov @ wrf, rcond=1e-10) @ wrf.conj().T @ cov @ w_mmse
        diff = w_mmse - wrf @ wbb
        # explicit square root, only in the oracle
        lam, u = np.linalg.eigh(cov)
        trace.append(np.linalg.norm((u * np.sqrt(lam)) @ u.conj().T @ diff))
        res = diff / np.linalg.norm(diff)
    return chosen, trace


@given(seeds, st.integers(2, 8), st.integers(1, 3))
def test_alg2_matches_greedy_replay(seed, k, n_rf):
    rng = np.random.default_rng(seed)
    model = _model(rng)
    d = array_response(ArrayGeometry.ula(6), rng.uniform(-np.pi / 2, np.pi / 2, k))
    n_rf = min(n_rf, k)
    comb = sparse_combiner_omp(model, d, n_rf)
    chosen, trace = _replay_alg2(model, d, n_rf)
    assert list(comb.selected_columns) == chosen
    np.testing.assert_allclose(comb.residuals, trace, rtol=1e-9, atol=1e-12)


def test_alg2_single_column():
    rng = np.random.default_rng(6)
    d = array_response(ArrayGeometry.ula(6), np.linspace(-1, 1, 5))
    # a rank-one received signal along column 2 makes W_MMSE parallel to it
    h = np.outer(d[:, 2], crandn(rng, 4))
    model = SignalModel(h, crandn(rng, 4, 1), 2.0)
    comb = sparse_combiner_omp(model, d, 1)
    assert comb.selected_columns == (2,)
    assert comb.residuals[0] < 1e-12


def test_alg2_unitary_spanning_dictionary():
    rng = np.random.default_rng(7)
    model = _model(rng)
    dft = np.exp(2j * np.pi * np.outer(np.arange(6), np.arange(6)) / 6) / np.sqrt(6)
    comb = sparse_combiner_omp(model, dft, 6, allow_reselect=False)
    assert abs(mse(model, comb.w) - mse(model, mmse_combiner(model))) < 1e-9


def test_hybrid_combiner_properties():
    rng = np.random.default_rng(8)
    p = params_64x16()
    for _ in range(100):
        real = sample_channel(p, rng)
        ns = int(rng.integers(1, 3))
        pre = sparse_precoder_omp(optimal_precoder(real, ns), response_dictionary(real), 4)
        model = SignalModel(real.h, pre.f, 10 ** rng.uniform(-3, 1))
        comb = sparse_combiner_omp(model, response_dictionary(real, "rx"), 4)
        assert np.max(np.abs(np.abs(comb.w_rf) - 1 / 4)) < 1e-12
        assert np.all(np.diff(comb.residuals) <= 1e-12 * max(comb.residuals[0], 1))
        assert mse(model, comb.w) >= mse(model, mmse_combiner(model)) - 1e-12
        se = spectral_efficiency(real, pre, comb, model.snr)
        assert se <= mutual_information(real, pre.f, model.snr) + 1e-9


def test_weighted_residual_matches_sqrt():
    rng = np.random.default_rng(9)
    cov = rx_covariance(_model(rng))
    d = crandn(rng, 6, 2)
    lam, u = np.linalg.eigh(cov)
    root = (u * np.sqrt(lam)) @ u.conj().T
    assert np.isclose(weighted_residual(cov, d), np.linalg.norm(root @ d))


# -- ordering rule -----------------------------------------------------------

def _link_setup(seed=0):
    p = ChannelParams(ArrayGeometry.upa(8, 8, sector=SECTOR), ArrayGeometry.upa(4, 4))
    real = sample_channel(p, np.random.default_rng(seed))
    return real, response_dictionary(real, "tx"), response_dictionary(real, "rx")


def test_design_link_precoder_first():
    real, a_t, a_r = _link_setup()
    pre, comb = design_link(real, a_t, a_r, 4, 6, 1.0, ns=2)
    expected = sparse_precoder_omp(optimal_precoder(real, 2), a_t, 4)
    np.testing.assert_array_equal(pre.f, expected.f)
    expected_c = sparse_combiner_omp(SignalModel(real.h, expected.f, 1.0), a_r, 6)
    np.testing.assert_array_equal(comb.w, expected_c.w)


def test_design_link_combiner_first():
    real, a_t, a_r = _link_setup()
    pre, comb = design_link(real, a_t, a_r, 6, 4, 1.0, ns=2)
    f_opt = optimal_precoder(real, 2).f
    expected_c = sparse_combiner_omp(SignalModel(real.h, f_opt, 1.0), a_r, 4)
    np.testing.assert_array_equal(comb.w, expected_c.w)
    target = optimal_precoder(expected_c.w.conj().T @ real.h, 2).f
    np.testing.assert_allclose(pre.f, sparse_precoder_omp(target, a_t, 6).f, atol=1e-12)
    assert pre.n_rf == 6 and comb.n_rf == 4


def test_design_link_tie_is_precoder_first():
    real, a_t, a_r = _link_setup(3)
    pre, comb = design_link(real, a_t, a_r, 4, 4, 1.0, ns=2)
    expected = sparse_precoder_omp(optimal_precoder(real, 2), a_t, 4)
    exp_c = sparse_combiner_omp(SignalModel(real.h, expected.f, 1.0), a_r, 4)
    assert pre.f.tobytes() == expected.f.tobytes()
    assert comb.w.tobytes() == exp_c.w.tobytes()


def test_design_link_needs_target():
    real, a_t, a_r = _link_setup()
    with pytest.raises(ValueError):
        design_link(real, a_t, a_r, 4, 4, 1.0)


def test_signal_model_shape_check():
    with pytest.raises(ValueError):
        SignalModel(np.ones((3, 4)), np.ones((5, 1)), 1.0)
