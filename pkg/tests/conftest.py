import numpy as np
import pytest

from hybridcran import channel
from hybridcran.model import DigitalDesign, RfDesign, SystemConfig, UNIT_MODULUS


def random_hermitian_pd(rng, n, floor=0.2):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    out = a @ a.conj().T / n + floor * np.eye(n)
    return (out + out.conj().T) / 2


def random_instance(rng, n_rrh=2, n_ue=3, n_ant=4, n_rf=2, power=5.0, capacity=3.0, scale=0.5):
    """Random channel, unit-modulus RF and digital design (not necessarily feasible)."""
    cfg = SystemConfig(n_rrh=n_rrh, n_ue=n_ue, n_ant=n_ant, n_rf=n_rf, power=power, capacity=capacity)
    h = (rng.standard_normal((n_ue, n_rrh, n_ant)) + 1j * rng.standard_normal((n_ue, n_rrh, n_ant))) / np.sqrt(2)
    rf = RfDesign(np.exp(1j * rng.uniform(0, 2 * np.pi, (n_rrh, n_ant, n_rf))), UNIT_MODULUS)
    vd = scale * (rng.standard_normal((n_rrh * n_rf, n_ue)) + 1j * rng.standard_normal((n_rrh * n_rf, n_ue)))
    omega = np.array([random_hermitian_pd(rng, n_rf) for _ in range(n_rrh)])
    return cfg, h, rf, DigitalDesign(vd, omega)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_case():
    """Small seeded one-ring instance (2 RRHs, 3 UEs, 4 antennas, 2 RF chains)."""
    cfg = SystemConfig(n_rrh=2, n_ue=3, n_ant=4, n_rf=2, power=4.0, capacity=3.0)
    h = channel.draw_channel(cfg.n_ue, cfg.n_rrh, cfg.n_ant, seed=5)
    return cfg, h


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""
    def record(number, name, passed, detail):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {name} ({detail})"
        _ACCEPTANCE_LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
