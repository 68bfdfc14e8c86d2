import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian_pd, random_instance
from hybridcran import model, wmmse
from hybridcran.exceptions import DomainError
from hybridcran.model import DigitalDesign, RfDesign

LN2 = np.log(2.0)


def scalar(v=1.0, omega=0.0):
    h = np.array([[[1.0]]], dtype=complex)
    rf = RfDesign(np.array([[[1.0]]], dtype=complex))
    dig = DigitalDesign(np.array([[v]], dtype=complex), np.array([[[omega]]], dtype=complex))
    return rf, dig, h


# -- MSE and gamma -------------------------------------------------------------------

def test_mse_examples(rng):
    _, h, rf, dig = random_instance(rng)
    assert wmmse.mse(0, rf, dig, h, 0.0) == 1.0
    # zeta = 1 comes from the thermal noise with a single UE and no quantization noise
    rf1, dig1, h1 = scalar(v=1.0, omega=0.0)
    assert wmmse.mse(0, rf1, dig1, h1, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_mse_at_optimal_u_is_mmse(rng):
    _, h, rf, dig = random_instance(rng)
    for k in range(3):
        u = wmmse.optimal_u(k, rf, dig, h)
        signal = abs(model.stacked(h)[k].conj() @ model.effective_rf(rf) @ dig.vd[:, k]) ** 2
        sinr = signal / model.interference_plus_noise(k, rf, dig, h)
        assert wmmse.mse(k, rf, dig, h, u) == pytest.approx(1.0 / (1.0 + sinr), rel=1e-12)


def test_gamma_examples():
    assert wmmse.gamma_from_mse(1.0, 1.0) == 0.0
    for e in (0.1, 0.5, 0.9):
        assert wmmse.gamma_from_mse(e, 1.0 / e) == pytest.approx(-np.log(e), abs=1e-15)
    with pytest.raises(DomainError):
        wmmse.gamma_from_mse(0.5, 0.0)


def test_optimal_u_examples(rng):
    rf, dig, h = scalar(v=1.0)
    assert wmmse.optimal_u(0, rf, dig, h) == pytest.approx(0.5)
    _, h, rf, dig = random_instance(rng)
    dig.vd[:, 1] = 0
    assert wmmse.optimal_u(1, rf, dig, h) == 0


def test_optimal_u_beats_local_grid(rng):
    _, h, rf, dig = random_instance(rng)
    for k in range(3):
        u = wmmse.optimal_u(k, rf, dig, h)
        best = wmmse.mse(k, rf, dig, h, u)
        offsets = 1e-3 * np.arange(-5, 6)
        grid = u + offsets[:, None] + 1j * offsets[None, :]
        values = np.array([wmmse.mse(k, rf, dig, h, g) for g in grid.ravel()])
        assert values.min() >= best - 1e-8


def test_optimal_w_examples():
    assert wmmse.optimal_w(1.0) == 1.0
    assert wmmse.optimal_w(0.25) == 4.0
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            wmmse.optimal_w(bad)


def test_tight_points_are_stationary(rng):
    """Central differences of gamma in (Re u, Im u, w) vanish at the closed forms."""
    _, h, rf, dig = random_instance(rng)
    step = 1e-6
    for k in range(3):
        u = wmmse.optimal_u(k, rf, dig, h)
        w = wmmse.optimal_w(wmmse.mse(k, rf, dig, h, u))
        grad = []
        for du, dw in ((step, 0), (1j * step, 0), (0, step)):
            plus = wmmse.gamma(k, rf, dig, h, u + du, w + dw)
            minus = wmmse.gamma(k, rf, dig, h, u - du, w - dw)
            grad.append((plus - minus) / (2 * step))
        assert np.linalg.norm(grad) < 1e-6


# -- rate sandwich -----------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_rate_lower_bound_sandwich(seed):
    r = np.random.default_rng(seed)
    _, h, rf, dig = random_instance(r)
    rates = model.user_rates(rf, dig, h)
    for k in range(3):
        u = complex(*r.standard_normal(2))
        w = r.exponential()
        assert wmmse.gamma(k, rf, dig, h, u, w) / LN2 <= rates[k] + 1e-12
    state = wmmse.tight_state(rf, dig, h)
    e = wmmse.mse_all(rf, dig, h, state.u)
    assert np.allclose(wmmse.gamma_from_mse(e, state.w_tilde) / LN2, rates, atol=1e-9, rtol=0)


# -- fronthaul surrogate -------------------------------------------------------------

def test_tight_sigma_examples(rng):
    om = random_hermitian_pd(rng, 2)
    dig = DigitalDesign(np.zeros((2, 3), dtype=complex), om[None])
    assert np.array_equal(wmmse.tight_sigma(0, dig), om)
    one = DigitalDesign(np.array([[np.sqrt(2.0)]], dtype=complex), np.ones((1, 1, 1), dtype=complex))
    assert wmmse.tight_sigma(0, one)[0, 0] == pytest.approx(3.0)


def test_tight_sigma_dominates_omega(rng):
    _, _, _, dig = random_instance(rng)
    for i in range(2):
        s = wmmse.tight_sigma(i, dig)
        assert np.allclose(s, s.conj().T)
        assert np.linalg.eigvalsh(s).min() >= np.linalg.eigvalsh(dig.omega[i]).min() - 1e-12


def test_surrogate_fronthaul_zero_at_omega(rng):
    om = random_hermitian_pd(rng, 3)
    dig = DigitalDesign(np.zeros((3, 2), dtype=complex), om[None])
    assert wmmse.surrogate_fronthaul(0, dig, om) == pytest.approx(0.0, abs=1e-12)


def test_surrogate_fronthaul_upper_bound_random_sigma(rng):
    worst_gap = np.inf
    for _ in range(1000):
        _, _, _, dig = random_instance(rng, n_rrh=1, n_rf=3)
        sigma = random_hermitian_pd(rng, 3, floor=0.05) * rng.exponential(3.0)
        exact = model.fronthaul_rate(0, dig)
        bound = wmmse.surrogate_fronthaul(0, dig, sigma)
        worst_gap = min(worst_gap, bound - exact)
        assert np.isfinite(bound)
    assert worst_gap >= -1e-10


def test_surrogate_fronthaul_tight(rng):
    for _ in range(50):
        _, _, _, dig = random_instance(rng)
        for i in range(2):
            tight = wmmse.surrogate_fronthaul(i, dig, wmmse.tight_sigma(i, dig))
            assert abs(tight - model.fronthaul_rate(i, dig)) < 1e-10


# -- surrogate objective ---------------------------------------------------------------

def test_surrogate_objective_reduces_to_rate(rng):
    cfg, h, rf, dig = random_instance(rng)
    cfg = cfg.replace(weights=[1.0, 2.0, 0.5])
    state = wmmse.tight_state(rf, dig, h, rho=0.7)
    assert wmmse.regularizer(dig, state.sigma) == pytest.approx(0.0, abs=1e-24)
    assert wmmse.surrogate_objective(rf, dig, h, state, cfg) == pytest.approx(
        model.weighted_sum_rate(rf, dig, h, cfg), abs=1e-9)


def test_surrogate_objective_termwise_recomputation(rng):
    cfg, h, rf, dig = random_instance(rng)
    cfg = cfg.replace(weights=[0.3, 1.0, 2.0])
    r = np.random.default_rng(3)
    u = r.standard_normal(3) + 1j * r.standard_normal(3)
    w = r.exponential(size=3)
    sigma = np.array([random_hermitian_pd(r, 2) for _ in range(2)])
    state = wmmse.SurrogateState(u=u, w_tilde=w, sigma=sigma, rho=1e-3)

    hbar = model.stacked(h)
    vbar = model.effective_rf(rf)
    expected = 0.0
    for k in range(3):
        gains = hbar[k].conj() @ vbar @ dig.vd
        zeta = np.sum(np.abs(gains) ** 2) - abs(gains[k]) ** 2 + 1.0
        for i in range(2):
            rows = slice(i * 2, (i + 1) * 2)
            zeta += np.real(hbar[k].conj() @ vbar[:, rows] @ dig.omega[i] @ vbar[:, rows].conj().T @ hbar[k])
        e = abs(1 - np.conj(u[k]) * gains[k]) ** 2 + abs(u[k]) ** 2 * zeta
        expected += cfg.weights[k] * (np.log(w[k]) - w[k] * e + 1) / LN2
    for i in range(2):
        ei = dig.vd[i * 2:(i + 1) * 2]
        phi = ei @ ei.conj().T + dig.omega[i]
        expected -= 1e-3 * np.linalg.norm(sigma[i] - phi, "fro") ** 2
    assert wmmse.surrogate_objective(rf, dig, h, state, cfg) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_quantities_finite(seed):
    r = np.random.default_rng(seed)
    cfg, h, rf, dig = random_instance(r)
    state = wmmse.tight_state(rf, dig, h)
    assert np.all(np.isfinite(state.u)) and np.all(state.w_tilde > 0)
    assert np.isfinite(wmmse.surrogate_objective(rf, dig, h, state, cfg))
    assert all(np.isfinite(wmmse.surrogate_fronthaul(i, dig, state.sigma[i])) for i in range(2))
