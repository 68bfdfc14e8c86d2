"""Estimator-style wrappers around the beamforming schemes.

``fit(H)`` designs beamformers for the channel ``H`` of shape
``(n_ue, n_rrh, n_ant)``; ``predict(H)`` returns the per-UE rates the
fitted design achieves on ``H`` and ``score(H)`` their weighted sum.
Hyper-parameters follow the scikit-learn conventions (``get_params``,
``set_params``, ``clone``), so the wrappers work with parameter grids.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import model
from .baselines import fully_digital, random_rf
from .optimizer import OptimizerOptions, joint_optimize
from .subsolver import SolveOptions
from .validation import check_channel, check_positive, check_random_state


class _BeamformerBase(BaseEstimator):
    def __init__(self, n_rf=2, power=1.0, capacity=5.0, weights=None, conv_tol=1e-5,
                 max_inner_iters=100, max_outer_rounds=20, rho=0.0, kkt_tol=1e-6, random_state=None):
        self.n_rf = n_rf
        self.power = power
        self.capacity = capacity
        self.weights = weights
        self.conv_tol = conv_tol
        self.max_inner_iters = max_inner_iters
        self.max_outer_rounds = max_outer_rounds
        self.rho = rho
        self.kkt_tol = kkt_tol
        self.random_state = random_state

    def _config(self, h, n_rf=None):
        check_positive(self.power, "power")
        check_positive(self.capacity, "capacity")
        n_ue, n_rrh, n_ant = h.shape
        return model.SystemConfig(n_rrh=n_rrh, n_ue=n_ue, n_ant=n_ant,
                                  n_rf=self.n_rf if n_rf is None else n_rf,
                                  power=self.power, capacity=self.capacity, weights=self.weights)

    def _options(self):
        return OptimizerOptions(conv_tol=self.conv_tol, max_inner_iters=self.max_inner_iters,
                                max_outer_rounds=self.max_outer_rounds, rho=self.rho,
                                subsolver=SolveOptions(kkt_tol=self.kkt_tol))

    def _store(self, cfg, rf, dig, report):
        self.config_ = cfg
        self.rf_ = rf
        self.digital_ = dig
        self.report_ = report
        self.sum_rate_ = report.sum_rate
        self.n_features_in_ = cfg.n_ant
        return self

    def predict(self, h):
        """Per-UE rates (bits/s/Hz) of the fitted design on channel ``h``."""
        check_is_fitted(self, "rf_")
        h = check_channel(h, n_ant=self.config_.n_ant)
        if h.shape[:2] != (self.config_.n_ue, self.config_.n_rrh):
            raise ValueError(f"channel shape {h.shape} does not match the fitted "
                             f"({self.config_.n_ue}, {self.config_.n_rrh}, {self.config_.n_ant})")
        return model.user_rates(self.rf_, self.digital_, h)

    def score(self, h, y=None):
        """Weighted sum-rate of the fitted design on ``h``."""
        rates = self.predict(h)
        return float(np.dot(self.config_.weights, rates))


class HybridBeamformer(_BeamformerBase):
    """Joint digital, quantization and constant-modulus RF design."""

    def fit(self, h, y=None):
        h = check_channel(h)
        cfg = self._config(h)
        rf, dig, report = joint_optimize(h, cfg, self._options(), rng=check_random_state(self.random_state))
        return self._store(cfg, rf, dig, report)


class RandomRFBeamformer(_BeamformerBase):
    """Random unit-modulus RF matrices with an optimized digital part."""

    def fit(self, h, y=None):
        h = check_channel(h)
        cfg = self._config(h)
        rf, dig, report = random_rf(h, cfg, self._options(), rng=check_random_state(self.random_state))
        return self._store(cfg, rf, dig, report)


class FullyDigitalBeamformer(_BeamformerBase):
    """One RF chain per antenna; ``n_rf`` is ignored."""

    def fit(self, h, y=None):
        h = check_channel(h)
        cfg = self._config(h, n_rf=h.shape[2])
        dig, report = fully_digital(h, cfg, self._options())
        return self._store(cfg, model.identity_rf(cfg), dig, report)
