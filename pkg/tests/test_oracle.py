import numpy as np
import pytest

from hybridcran import oracle


@pytest.mark.parametrize("h, power, capacity", [(1.0, 10.0, 2.0), (0.3 - 0.8j, 7.3, 1.7), (2.0j, 0.5, 4.0)])
def test_grid_and_closed_form_agree(h, power, capacity):
    grid = oracle.grid_search_scalar(h, power, capacity)
    assert grid.rate == pytest.approx(oracle.scalar_closed_form(h, power, capacity), abs=1e-4)
    assert grid.rate <= oracle.scalar_closed_form(h, power, capacity) + 1e-12
    assert grid.gain + grid.noise <= power + 1e-12
    assert np.log2((grid.gain + grid.noise) / grid.noise) <= capacity + 1e-12


def test_closed_form_limits():
    # large capacity approaches the unquantized rate log2(1 + |h|^2 P)
    assert oracle.scalar_closed_form(1.0, 3.0, 60.0) == pytest.approx(2.0, abs=1e-9)
    # the rate never exceeds the fronthaul capacity
    assert oracle.scalar_closed_form(100.0, 100.0, 0.5) < 0.5


def test_relaxed_rf_grid():
    def rate(r):
        return np.log2(1 + np.abs(r) ** 2)

    best, arg = oracle.grid_search_relaxed_rf(rate, lambda r: np.abs(r) ** 2 - 0.25)
    assert abs(arg) == pytest.approx(0.5, abs=1e-2)
    assert best == pytest.approx(np.log2(1.25), abs=1e-2)
