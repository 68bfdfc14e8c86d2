"""One-ring channel covariances and seeded Rayleigh channel draws.

Every (trial, UE, RRH) link owns its own random stream, derived from the
master seed with :class:`numpy.random.SeedSequence` and the spawn key
``(0, trial, k, i)``.  Stream family ``1`` is reserved for the random RF
initialization (see :func:`rf_stream`).  Because each stream is a pure
function of its key, the realization drawn for a trial does not depend on
the order in which trials are evaluated.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError, NumericalError

THETA_RANGE = (-np.pi / 3, np.pi / 3)
DELTA_RANGE = (np.pi / 18, 2 * np.pi / 9)
QUADRATURE_ORDER = 64
PSD_TOL = 1e-10

_CHANNEL_FAMILY = 0
_RF_FAMILY = 1


@dataclass(frozen=True)
class AngularParams:
    """Mean angle of arrival ``theta`` and angular spread ``delta`` (radians)."""

    theta: float
    delta: float


def covariance_matrix(params, n_ant, order=QUADRATURE_ORDER):
    """Covariance of a half-wavelength ULA under the one-ring model.

    R(a, b) is the average of exp(-j*pi*(a-b)*sin(phi)) for phi uniform on
    [theta - delta, theta + delta], evaluated by Gauss-Legendre quadrature.
    The result is Toeplitz-Hermitian with an exactly unit diagonal.
    """
    if not params.delta > 0:
        raise InvalidParameterError(f"angular spread must be positive, got {params.delta}")
    if n_ant < 1:
        raise InvalidParameterError(f"need at least one antenna, got {n_ant}")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    phi = params.theta + params.delta * nodes
    lags = np.arange(n_ant)
    # mean over [theta-delta, theta+delta] = sum(w * f) / 2 on the reference interval
    r = np.exp(-1j * np.pi * np.outer(lags, np.sin(phi))) @ weights / 2.0
    r[0] = 1.0
    diff = lags[:, None] - lags[None, :]
    cov = np.where(diff >= 0, r[np.abs(diff)], np.conj(r[np.abs(diff)]))
    return cov


def sample_angles(rng):
    theta = rng.uniform(*THETA_RANGE)
    delta = rng.uniform(*DELTA_RANGE)
    return AngularParams(float(theta), float(delta))


def covariance_factor(cov):
    """Return F with F F^H = cov.

    Eigenvalues within PSD_TOL of zero (either sign) are treated as exact
    zeros, so a rank-deficient covariance yields samples confined to its
    range; more negative eigenvalues raise NumericalError.
    """
    cov = np.asarray(cov, dtype=complex)
    evals, evecs = np.linalg.eigh(0.5 * (cov + cov.conj().T))
    if evals.size and evals.min() < -PSD_TOL:
        raise NumericalError(
            f"covariance is not PSD: min eigenvalue {evals.min():.3e}, "
            f"shape {cov.shape}, max |R - R^H| {np.abs(cov - cov.conj().T).max():.3e}")
    evals = np.where(np.abs(evals) <= PSD_TOL, 0.0, evals)
    return evecs * np.sqrt(evals)


def sample_channel(cov, rng):
    """Draw h ~ CN(0, cov)."""
    factor = covariance_factor(cov)
    n = factor.shape[0]
    g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return factor @ g


def link_stream(seed, trial, k, i):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_CHANNEL_FAMILY, trial, k, i)))


def rf_stream(seed, trial):
    """Random stream used for the random unit-modulus RF initialization of a trial."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_RF_FAMILY, trial)))


def draw_channel(n_ue, n_rrh, n_ant, seed, trial=0, return_params=False):
    """Draw one channel realization, an array of shape (n_ue, n_rrh, n_ant).

    Each link (k, i) draws its angles and its Gaussian vector from
    :func:`link_stream`, so the result is bit-identical for a given
    ``(seed, trial)`` regardless of evaluation order.
    """
    h = np.empty((n_ue, n_rrh, n_ant), dtype=complex)
    params = {}
    for k in range(n_ue):
        for i in range(n_rrh):
            rng = link_stream(seed, trial, k, i)
            p = sample_angles(rng)
            h[k, i] = sample_channel(covariance_matrix(p, n_ant), rng)
            params[k, i] = p
    if return_params:
        return h, params
    return h
