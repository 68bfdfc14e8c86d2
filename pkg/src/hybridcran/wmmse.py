"""Rate lower bound (MSE form), fronthaul upper bound and their tight points.

``gamma`` is expressed in nats; divide by ln 2 for bits.  At the tight
receive coefficient and MSE weight, gamma / ln 2 equals the achievable rate
of the UE, and with the tight linearization point the fronthaul surrogate
equals the exact fronthaul rate.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import LN2, hermitize, logdet2
from .exceptions import DomainError
from .model import link_gains, signal_covariance


@dataclass
class SurrogateState:
    """Auxiliary variables of the successive convex approximation.

    u : (n_ue,) complex receive coefficients
    w_tilde : (n_ue,) positive MSE weights
    sigma : (n_rrh, n, n) Hermitian PD linearization points (may be None
        for the RF step, which does not involve the fronthaul)
    rho : regularization weight
    """

    u: np.ndarray
    w_tilde: np.ndarray
    sigma: np.ndarray = None
    rho: float = 0.0


def _gains(rf, dig, h):
    s, qnoise = link_gains(rf, dig, h)
    power = np.abs(s) ** 2
    signal = np.diag(s)
    zeta = power.sum(axis=1) - np.abs(signal) ** 2 + qnoise + 1.0
    return signal, zeta


def mse_all(rf, dig, h, u):
    signal, zeta = _gains(rf, dig, h)
    u = np.asarray(u)
    return np.abs(1.0 - np.conj(u) * signal) ** 2 + np.abs(u) ** 2 * zeta


def mse(k, rf, dig, h, u_k):
    signal, zeta = _gains(rf, dig, h)
    return float(abs(1.0 - np.conj(u_k) * signal[k]) ** 2 + abs(u_k) ** 2 * zeta[k])


def gamma_from_mse(e, w_tilde):
    w_tilde = np.asarray(w_tilde, dtype=float)
    if np.any(w_tilde <= 0):
        raise DomainError("MSE weights must be positive")
    return np.log(w_tilde) - w_tilde * np.asarray(e) + 1.0


def gamma(k, rf, dig, h, u_k, w_tilde_k):
    return float(gamma_from_mse(mse(k, rf, dig, h, u_k), w_tilde_k))


def optimal_u_all(rf, dig, h):
    signal, zeta = _gains(rf, dig, h)
    return signal / (np.abs(signal) ** 2 + zeta)


def optimal_u(k, rf, dig, h):
    return complex(optimal_u_all(rf, dig, h)[k])


def optimal_w(e_k):
    e_k = np.asarray(e_k, dtype=float)
    if np.any(e_k <= 0):
        raise DomainError("MSE must be positive to invert")
    out = 1.0 / e_k
    return float(out) if out.ndim == 0 else out


def tight_sigma(i, dig):
    return hermitize(signal_covariance(dig, i))


def tight_sigmas(dig):
    return np.array([tight_sigma(i, dig) for i in range(dig.omega.shape[0])])


def surrogate_fronthaul(i, dig, sigma_i):
    """Upper bound on the fronthaul rate obtained by linearizing log det at sigma_i."""
    n = sigma_i.shape[-1]
    trace = np.real(np.trace(np.linalg.solve(sigma_i, signal_covariance(dig, i))))
    return float(logdet2(sigma_i) + trace / LN2 - n / LN2 - logdet2(dig.omega[i]))


def tight_state(rf, dig, h, rho=0.0, with_sigma=True):
    """Receive coefficients, MSE weights and linearization points making both bounds tight."""
    u = optimal_u_all(rf, dig, h)
    w_tilde = optimal_w(mse_all(rf, dig, h, u))
    sigma = tight_sigmas(dig) if with_sigma else None
    return SurrogateState(u=u, w_tilde=np.atleast_1d(w_tilde), sigma=sigma, rho=rho)


def regularizer(dig, sigma):
    return float(sum(np.sum(np.abs(sigma[i] - signal_covariance(dig, i)) ** 2)
                     for i in range(dig.omega.shape[0])))


def surrogate_objective(rf, dig, h, state, cfg):
    """Weighted sum of gamma_k / ln 2 minus rho times the linearization mismatch."""
    e = mse_all(rf, dig, h, state.u)
    value = float(np.dot(cfg.weights, gamma_from_mse(e, state.w_tilde)) / LN2)
    if state.rho and state.sigma is not None:
        value -= state.rho * regularizer(dig, state.sigma)
    return value
