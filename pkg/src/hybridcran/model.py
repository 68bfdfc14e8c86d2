"""System configuration, design containers and exact performance functionals.

Shapes used throughout the package:

* channel ``h``: ``(n_ue, n_rrh, n_ant)``; row ``h[k].ravel()`` is the
  stacked vector of UE ``k`` across all RRHs.
* digital beamformers ``vd``: ``(n_rrh * n_rf, n_ue)``; column ``k`` is the
  beamformer of UE ``k``, rows ``i*n_rf:(i+1)*n_rf`` belong to RRH ``i``.
* quantization covariances ``omega``: ``(n_rrh, n_rf, n_rf)``.
* RF beamformers ``vr``: ``(n_rrh, n_ant, n_rf)``.

Rates are in bits/s/Hz; the receiver noise variance is 1.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from ._linalg import LN2, hermitize, logdet2
from .exceptions import InvalidParameterError

RELAXED = "relaxed"
UNIT_MODULUS = "unit-modulus"


@dataclass
class SystemConfig:
    """Scenario constants.

    ``power``, ``capacity`` and ``weights`` accept scalars, which are
    broadcast to one entry per RRH (power, capacity) or per UE (weights).
    """

    n_rrh: int = 2
    n_ue: int = 8
    n_ant: int = 10
    n_rf: int = 2
    power: object = 1.0
    capacity: object = 5.0
    weights: object = None

    def __post_init__(self):
        for name in ("n_rrh", "n_ue", "n_ant", "n_rf"):
            if int(getattr(self, name)) < 1:
                raise InvalidParameterError(f"{name} must be >= 1")
            setattr(self, name, int(getattr(self, name)))
        if self.n_rf > self.n_ant:
            raise InvalidParameterError(f"n_rf={self.n_rf} exceeds n_ant={self.n_ant}")
        self.power = _broadcast(self.power, self.n_rrh, "power")
        self.capacity = _broadcast(self.capacity, self.n_rrh, "capacity")
        self.weights = _broadcast(1.0 if self.weights is None else self.weights, self.n_ue, "weights")
        if np.any(self.power <= 0) or np.any(self.capacity <= 0):
            raise InvalidParameterError("power budgets and fronthaul capacities must be positive")
        if np.any(self.weights < 0):
            raise InvalidParameterError("rate weights must be nonnegative")

    @property
    def n_bar(self):
        return self.n_rrh * self.n_rf

    @property
    def m_bar(self):
        return self.n_rrh * self.n_ant

    def replace(self, **changes):
        kw = dict(n_rrh=self.n_rrh, n_ue=self.n_ue, n_ant=self.n_ant, n_rf=self.n_rf,
                  power=self.power, capacity=self.capacity, weights=self.weights)
        kw.update(changes)
        return SystemConfig(**kw)


def _broadcast(value, n, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise InvalidParameterError(f"{name} must be a scalar or have length {n}, got shape {arr.shape}")
    return arr.copy()


@dataclass
class DigitalDesign:
    vd: np.ndarray
    omega: np.ndarray

    def block(self, i):
        """Rows of the digital beamformers that feed RRH ``i`` (E_i^H V_D)."""
        n = self.omega.shape[-1]
        return self.vd[i * n:(i + 1) * n]

    def copy(self):
        return DigitalDesign(self.vd.copy(), self.omega.copy())


@dataclass
class RfDesign:
    vr: np.ndarray
    modulus: str = field(default=UNIT_MODULUS)

    def copy(self):
        return RfDesign(self.vr.copy(), self.modulus)


def effective_rf(rf, cfg=None):
    """Block-diagonal effective RF matrix of shape (n_rrh*n_ant, n_rrh*n_rf)."""
    vr = np.asarray(rf.vr)
    if vr.ndim != 3:
        raise InvalidParameterError(f"RF beamformers must have shape (n_rrh, n_ant, n_rf), got {vr.shape}")
    if cfg is not None and vr.shape != (cfg.n_rrh, cfg.n_ant, cfg.n_rf):
        raise InvalidParameterError(
            f"RF beamformers have shape {vr.shape}, config expects {(cfg.n_rrh, cfg.n_ant, cfg.n_rf)}")
    return block_diag(*vr)


def stacked(h):
    h = np.asarray(h)
    return h.reshape(h.shape[0], -1)


def effective_channel(rf, h):
    """Rows h_k^H Vbar_R, shape (n_ue, n_rrh*n_rf)."""
    return stacked(h).conj() @ effective_rf(rf)


def _check_dims(rf, dig, h):
    vr, vd, omega = rf.vr, dig.vd, dig.omega
    n_rrh, n_ant, n_rf = vr.shape
    h = np.asarray(h)
    if h.shape[1:] != (n_rrh, n_ant) or vd.shape != (n_rrh * n_rf, h.shape[0]) \
            or omega.shape != (n_rrh, n_rf, n_rf):
        raise InvalidParameterError(
            f"inconsistent shapes: h {h.shape}, vr {vr.shape}, vd {vd.shape}, omega {omega.shape}")


def link_gains(rf, dig, h):
    """Matrix S with S[k, l] = h_k^H Vbar_R v_l and the quantization-noise powers."""
    _check_dims(rf, dig, h)
    heff = effective_channel(rf, h)
    n_rf = dig.omega.shape[-1]
    n_rrh = dig.omega.shape[0]
    hb = heff.reshape(heff.shape[0], n_rrh, n_rf)
    qnoise = np.real(np.einsum("kia,iab,kib->k", hb, dig.omega, hb.conj()))
    return heff @ dig.vd, qnoise


def interference_plus_noise_all(rf, dig, h):
    s, qnoise = link_gains(rf, dig, h)
    power = np.abs(s) ** 2
    return power.sum(axis=1) - np.diag(power) + qnoise + 1.0


def interference_plus_noise(k, rf, dig, h):
    return float(interference_plus_noise_all(rf, dig, h)[k])


def phi(signal, noise):
    """log2 det(A + B) - log2 det(B) for scalar arguments."""
    return float(np.log2(1.0 + signal / noise))


def user_rates(rf, dig, h):
    s, qnoise = link_gains(rf, dig, h)
    power = np.abs(s) ** 2
    signal = np.diag(power)
    zeta = power.sum(axis=1) - signal + qnoise + 1.0
    return np.log2(1.0 + signal / zeta)


def user_rate(k, rf, dig, h):
    return float(user_rates(rf, dig, h)[k])


def signal_covariance(dig, i):
    """Phi_i = sum_k E_i^H v_k v_k^H E_i + Omega_i."""
    x = dig.block(i)
    return x @ x.conj().T + dig.omega[i]


def fronthaul_rate(i, dig):
    """Mutual information between the RRH-i signal and its quantized version."""
    return float(logdet2(signal_covariance(dig, i)) - logdet2(dig.omega[i]))


def fronthaul_rates(dig):
    return np.array([fronthaul_rate(i, dig) for i in range(dig.omega.shape[0])])


def transmit_power(i, rf, dig):
    """E||x_i||^2 = sum_k ||V_Ri E_i^H v_k||^2 + tr(V_Ri Omega_i V_Ri^H)."""
    vr = rf.vr[i]
    return float(np.real(np.trace(vr @ signal_covariance(dig, i) @ vr.conj().T)))


def transmit_powers(rf, dig):
    return np.array([transmit_power(i, rf, dig) for i in range(rf.vr.shape[0])])


def weighted_sum_rate(rf, dig, h, cfg):
    return float(np.dot(cfg.weights, user_rates(rf, dig, h)))


def constraint_violations(rf, dig, cfg):
    """Largest violation of the power, fronthaul and unit-modulus constraints.

    Returns a dict with keys ``power``, ``fronthaul`` and ``modulus``
    (nonnegative; zero means satisfied).  ``modulus`` is only meaningful for
    unit-modulus designs and is reported as ``max | |V(a,b)| - 1 |``.
    """
    power = np.max(transmit_powers(rf, dig) - cfg.power)
    front = np.max(fronthaul_rates(dig) - cfg.capacity)
    modulus = np.max(np.abs(np.abs(rf.vr) - 1.0))
    return {"power": max(0.0, float(power)), "fronthaul": max(0.0, float(front)),
            "modulus": float(modulus)}


def max_violation(rf, dig, cfg):
    v = constraint_violations(rf, dig, cfg)
    return max(v["power"], v["fronthaul"], v["modulus"] if rf.modulus == UNIT_MODULUS else 0.0)


def identity_rf(cfg):
    """Identity RF front end used for fully digital beamforming (n_rf == n_ant).

    Off-diagonal entries are zero, so the design is tagged ``relaxed``: the
    unit-modulus constraint does not apply to the fully digital baseline.
    """
    if cfg.n_rf != cfg.n_ant:
        raise InvalidParameterError("identity RF requires n_rf == n_ant")
    return RfDesign(np.broadcast_to(np.eye(cfg.n_ant, dtype=complex), (cfg.n_rrh, cfg.n_ant, cfg.n_ant)).copy(),
                    RELAXED)


__all__ = [
    "LN2", "RELAXED", "UNIT_MODULUS", "SystemConfig", "DigitalDesign", "RfDesign",
    "effective_rf", "effective_channel", "interference_plus_noise", "interference_plus_noise_all",
    "user_rate", "user_rates", "phi", "fronthaul_rate", "fronthaul_rates", "transmit_power",
    "transmit_powers", "weighted_sum_rate", "constraint_violations", "max_violation",
    "signal_covariance", "identity_rf", "hermitize",
]
