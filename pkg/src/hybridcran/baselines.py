"""Comparison schemes: fully digital beamforming and random RF with optimized digital part.

Both run the same round loop as the joint scheme with the RF update
switched off, so convergence criteria and iteration budgets match.
"""

import time

import numpy as np

from . import model
from .optimizer import OptimizerOptions, alternate, init_digital, init_rf


def fully_digital(h, cfg, opts=None, rng=None):
    """One RF chain per antenna: identity RF matrices and n_rf = n_ant.

    Returns the digital design (with ``n_ant x n_ant`` quantization
    covariances) and the report.  ``rng`` is accepted for a uniform scheme
    signature; the scheme is deterministic.
    """
    opts = opts or OptimizerOptions()
    started = time.perf_counter()
    cfg_fd = cfg.replace(n_rf=cfg.n_ant)
    rf = model.identity_rf(cfg_fd)
    _, dig, report = alternate(rf, init_digital(rf, h, cfg_fd), h, cfg_fd, opts,
                               update_rf=False, started=started)
    return dig, report


def random_rf(h, cfg, opts=None, rng=None, rf_init=None):
    """Random unit-modulus RF matrices (never updated) and an optimized digital part."""
    opts = opts or OptimizerOptions()
    started = time.perf_counter()
    if rf_init is None:
        rf_init = init_rf(cfg, rng if rng is not None else np.random.default_rng())
    return alternate(rf_init, init_digital(rf_init, h, cfg), h, cfg, opts,
                     update_rf=False, started=started)
