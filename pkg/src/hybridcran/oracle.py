"""Brute-force reference solutions for single-antenna, single-user instances.

With one RRH, one UE, one antenna and one RF chain the design reduces to an
RF phase, a digital gain and a scalar quantization noise variance.  The
searches below evaluate the rate and both constraints directly on nested
grids, so they share no algebra with the optimizer.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class GridResult:
    rate: float
    phase: float
    gain: float
    noise: float


def _scalar_rate(abs_h2, gain2, noise):
    return np.log2(1.0 + abs_h2 * gain2 / (abs_h2 * noise + 1.0))


def grid_search_scalar(h, power, capacity, n_phase=16, n_gain=201, n_noise=201, refine=6):
    """Maximize the rate of the 1x1x1x1 instance over (phase, |v|^2, omega).

    Every grid point is checked against ``|r|^2 (|v|^2 + omega) <= power``
    and ``log2((|v|^2 + omega) / omega) <= capacity`` with the RF entry
    ``r = exp(j phase)``.  The gain and noise axes are zoomed ``refine``
    times around the incumbent, keeping the full phase axis each time.
    """
    h = complex(np.ravel(h)[0])
    phases = np.linspace(0.0, 2.0 * np.pi, n_phase, endpoint=False)
    g_lo, g_hi = 0.0, float(power)
    n_lo, n_hi = 0.0, float(power)
    best = GridResult(-np.inf, 0.0, 0.0, 0.0)
    for _ in range(refine + 1):
        gains = np.linspace(g_lo, g_hi, n_gain)
        noises = np.linspace(n_lo, n_hi, n_noise)
        noises = noises[noises > 0]
        ph, g2, om = np.meshgrid(phases, gains, noises, indexing="ij")
        r = np.exp(1j * ph)
        # effective scalar channel h * r; rate depends on it through |h r|^2
        abs_h2 = np.abs(h * r) ** 2
        feasible = (np.abs(r) ** 2 * (g2 + om) <= power) & (np.log2((g2 + om) / om) <= capacity)
        rate = np.where(feasible, _scalar_rate(abs_h2, g2, om), -np.inf)
        idx = np.unravel_index(np.argmax(rate), rate.shape)
        if rate[idx] > best.rate:
            best = GridResult(float(rate[idx]), float(ph[idx]), float(g2[idx]), float(om[idx]))
        g_step = (g_hi - g_lo) / (n_gain - 1)
        n_step = (n_hi - n_lo) / (n_noise - 1)
        g_lo, g_hi = max(0.0, best.gain - 4 * g_step), min(float(power), best.gain + 4 * g_step)
        n_lo, n_hi = max(0.0, best.noise - 4 * n_step), min(float(power), best.noise + 4 * n_step)
    return best


def scalar_closed_form(h, power, capacity):
    """Optimal rate of the 1x1x1x1 instance with both constraints active.

    omega = P 2^-C and |v|^2 = P (1 - 2^-C); used as a second route next to
    the grid search.
    """
    abs_h2 = abs(complex(np.ravel(h)[0])) ** 2
    noise = power * 2.0 ** (-capacity)
    return float(_scalar_rate(abs_h2, power - noise, noise))


def grid_search_relaxed_rf(objective, power_of, n_phase=100, n_mod=101):
    """Maximize ``objective(r)`` over the disc ``|r| <= 1`` with ``power_of(r) <= 0``.

    ``objective`` and ``power_of`` must accept complex arrays.  Returns the
    best value and its argument; used to audit the relaxed RF update on a
    single entry.
    """
    phases = np.linspace(0.0, 2.0 * np.pi, n_phase, endpoint=False)
    mods = np.linspace(0.0, 1.0, n_mod)
    r = mods[:, None] * np.exp(1j * phases)[None, :]
    val = np.where(power_of(r) <= 0, objective(r), -np.inf)
    idx = np.unravel_index(np.argmax(val), val.shape)
    return float(val[idx]), complex(r[idx])
