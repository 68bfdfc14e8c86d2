"""Alternating optimization of the digital and RF parts of the hybrid design.

The digital update (beamformers and quantization covariances for fixed RF)
and the relaxed RF update (for fixed digital design) both iterate
closed-form updates of the auxiliary variables with a barrier solve of the
resulting convex problem.  The RF output is projected entrywise onto the
unit circle, and the digital design is re-optimized for the projected RF
matrices before anything is evaluated.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import model, wmmse
from ._linalg import hermitize
from .exceptions import InvalidParameterError
from .model import RELAXED, UNIT_MODULUS, DigitalDesign, RfDesign
from .subproblems import DigitalProblem, RfProblem
from .subsolver import SolveOptions, maximize

# shrink applied to a boundary RF start so the barrier sees a strict interior
_INTERIOR_MARGIN = 1e-4
# fraction of the budgets used by feasible initializations and power restoration
_INIT_FRACTION = 0.9


@dataclass
class OptimizerOptions:
    conv_tol: float = 1e-5
    max_inner_iters: int = 100
    max_outer_rounds: int = 20
    rho: float = 0.0
    subsolver: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if isinstance(self.subsolver, dict):
            self.subsolver = SolveOptions(**self.subsolver)
        if not (self.conv_tol > 0 and self.max_inner_iters >= 1 and self.max_outer_rounds >= 1):
            raise InvalidParameterError("conv_tol, max_inner_iters and max_outer_rounds must be positive")
        if self.rho < 0:
            raise InvalidParameterError("rho must be nonnegative")


@dataclass
class IterTrace:
    """Per-iteration record of one digital or RF update run.

    ``surrogate[0]`` is the surrogate at the start point with tight auxiliary
    variables; every later entry is the surrogate after a barrier solve.
    """

    surrogate: list = field(default_factory=list)
    sum_rate: list = field(default_factory=list)
    violation: list = field(default_factory=list)
    newton_iters: int = 0
    stalled: bool = False
    converged: bool = False

    @property
    def iterations(self):
        return max(len(self.surrogate) - 1, 0)


@dataclass
class SolveReport:
    sum_rate: float
    rates: np.ndarray
    powers: np.ndarray
    fronthaul: np.ndarray
    violations: dict
    max_violation: float
    rounds: list = field(default_factory=list)
    iterations: int = 0
    wall_ms: float = 0.0
    stalled: bool = False


def make_report(rf, dig, h, cfg, rounds=(), started=None):
    rates = model.user_rates(rf, dig, h)
    traces = [t for r in rounds for t in (r.get("digital"), r.get("rf")) if t is not None]
    return SolveReport(
        sum_rate=float(np.dot(cfg.weights, rates)),
        rates=rates,
        powers=model.transmit_powers(rf, dig),
        fronthaul=model.fronthaul_rates(dig),
        violations=model.constraint_violations(rf, dig, cfg),
        max_violation=model.max_violation(rf, dig, cfg),
        rounds=list(rounds),
        iterations=sum(t.iterations for t in traces),
        wall_ms=0.0 if started is None else 1e3 * (time.perf_counter() - started),
        stalled=any(t.stalled for t in traces),
    )


def init_rf(cfg, rng):
    """Unit-modulus RF matrices with i.i.d. uniform phases."""
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(cfg.n_rrh, cfg.n_ant, cfg.n_rf))
    return RfDesign(np.exp(1j * phases), UNIT_MODULUS)


def _fronthaul_at_ratio(blocks, ratio):
    """Fronthaul rates of V_D = s V0, Omega = beta I as a function of s^2 / beta."""
    n = blocks[0].shape[0]
    return np.array([model.logdet2(ratio * (x @ x.conj().T) + np.eye(n)) if np.any(x) else 0.0
                     for x in blocks])


def init_digital(rf, h, cfg, rng=None):
    """Strictly feasible matched-filter start for the digital update.

    Beamformers point along Vbar_R^H h_k (unit norm, common scale) and the
    quantization covariances are beta * I.  The ratio of signal scale to
    beta is set by bisection so every fronthaul rate is at most 90% of its
    capacity, then beta is set so every transmit power is at most 90% of
    its budget.  ``rng`` is accepted for interface symmetry and unused.
    """
    n_rf = rf.vr.shape[-1]
    heff = model.effective_channel(rf, h)
    v0 = heff.conj().T.copy()
    norms = np.linalg.norm(v0, axis=0)
    v0[:, norms > 0] /= norms[norms > 0]
    blocks = [v0[i * n_rf:(i + 1) * n_rf] for i in range(cfg.n_rrh)]
    target = _INIT_FRACTION * cfg.capacity

    def excess(ratio):
        return np.max(_fronthaul_at_ratio(blocks, ratio) / target)

    ratio = 1.0
    if np.any(v0):
        lo, hi = 0.0, 1.0
        while excess(hi) <= 1.0:
            lo, hi = hi, 2.0 * hi
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if excess(mid) <= 1.0:
                lo = mid
            else:
                hi = mid
        ratio = lo
    sig = np.array([np.linalg.norm(rf.vr[i] @ blocks[i]) ** 2 for i in range(cfg.n_rrh)])
    noise = np.array([np.linalg.norm(rf.vr[i]) ** 2 for i in range(cfg.n_rrh)])
    beta = _INIT_FRACTION * np.min(cfg.power / (ratio * sig + noise))
    vd = np.sqrt(ratio * beta) * v0
    omega = np.broadcast_to(beta * np.eye(n_rf, dtype=complex), (cfg.n_rrh, n_rf, n_rf)).copy()
    return DigitalDesign(vd, omega)


def restore_feasibility(rf, dig, cfg, fraction=_INIT_FRACTION):
    """Scale RRH blocks whose transmit power is not strictly below budget.

    Scaling block i of V_D by s and Omega_i by s^2 scales p_i by s^2 and
    leaves the fronthaul rate g_i unchanged.
    """
    dig = dig.copy()
    n_rf = dig.omega.shape[-1]
    for i in range(cfg.n_rrh):
        p = model.transmit_power(i, rf, dig)
        if p >= cfg.power[i] * (1.0 - 1e-9):
            scale = fraction * cfg.power[i] / p
            dig.vd[i * n_rf:(i + 1) * n_rf] *= np.sqrt(scale)
            dig.omega[i] *= scale
    return dig


def _relative_change(new, old):
    return abs(new - old) / max(abs(old), 1e-12)


def digital_step(rf, dig0, h, cfg, opts=None):
    """Digital beamforming and compression update for fixed RF matrices.

    Requires ``dig0`` strictly feasible for the power and fronthaul
    constraints.  Returns the updated design and its IterTrace.
    """
    opts = opts or OptimizerOptions()
    dig = dig0
    trace = IterTrace()
    state = wmmse.tight_state(rf, dig, h, rho=opts.rho)
    current = wmmse.surrogate_objective(rf, dig, h, state, cfg)
    trace.surrogate.append(current)
    trace.sum_rate.append(model.weighted_sum_rate(rf, dig, h, cfg))
    trace.violation.append(model.max_violation(rf, dig, cfg))
    for _ in range(opts.max_inner_iters):
        problem = DigitalProblem(rf, h, state, cfg)
        result = maximize(problem.problem(problem.pack(dig)), opts.subsolver)
        trace.newton_iters += result.iterations
        trace.stalled = trace.stalled or result.stalled
        new = problem.unpack(result.x)
        new.omega = hermitize(new.omega)
        dig = new
        value = result.value
        trace.surrogate.append(value)
        trace.sum_rate.append(model.weighted_sum_rate(rf, dig, h, cfg))
        trace.violation.append(model.max_violation(rf, dig, cfg))
        done = _relative_change(value, current) < opts.conv_tol
        current = value
        if done:
            trace.converged = True
            break
        state = wmmse.tight_state(rf, dig, h, rho=opts.rho)
        current = wmmse.surrogate_objective(rf, dig, h, state, cfg)
    return dig, trace


def _interior_start(rf, dig, cfg):
    vr = rf.vr.copy()
    for i in range(cfg.n_rrh):
        scale = 1.0
        peak = np.max(np.abs(vr[i]))
        if peak > 1.0 - _INTERIOR_MARGIN:
            scale = (1.0 - _INTERIOR_MARGIN) / peak
        p = model.transmit_power(i, RfDesign(vr), dig) * scale ** 2
        if p > cfg.power[i] * (1.0 - _INTERIOR_MARGIN):
            scale *= np.sqrt(cfg.power[i] * (1.0 - _INTERIOR_MARGIN) / p)
        vr[i] *= scale
    return RfDesign(vr, RELAXED)


def rf_step(dig, rf0, h, cfg, opts=None):
    """Relaxed RF update (|entries| <= 1, power constraints) for a fixed digital design.

    The fronthaul constraints do not depend on the RF matrices and are not
    part of this update.  A barrier solution is accepted only if it does not
    lower the surrogate relative to the current RF matrices, so the
    recorded surrogate sequence is non-decreasing even though the first
    barrier solve starts from a slightly shrunk copy of a boundary point.
    """
    opts = opts or OptimizerOptions()
    rf = RfDesign(rf0.vr.copy(), RELAXED)
    trace = IterTrace()
    state = wmmse.tight_state(rf, dig, h, with_sigma=False)
    current = wmmse.surrogate_objective(rf, dig, h, state, cfg)
    trace.surrogate.append(current)
    trace.sum_rate.append(model.weighted_sum_rate(rf, dig, h, cfg))
    trace.violation.append(model.max_violation(rf, dig, cfg))
    for _ in range(opts.max_inner_iters):
        problem = RfProblem(dig, h, state, cfg)
        start = _interior_start(rf, dig, cfg)
        result = maximize(problem.problem(problem.pack(start)), opts.subsolver)
        trace.newton_iters += result.iterations
        trace.stalled = trace.stalled or result.stalled
        if result.value < current:
            trace.converged = True
            break
        rf = problem.unpack(result.x)
        value = result.value
        trace.surrogate.append(value)
        trace.sum_rate.append(model.weighted_sum_rate(rf, dig, h, cfg))
        trace.violation.append(model.max_violation(rf, dig, cfg))
        done = _relative_change(value, current) < opts.conv_tol
        if done:
            trace.converged = True
            break
        state = wmmse.tight_state(rf, dig, h, with_sigma=False)
        current = wmmse.surrogate_objective(rf, dig, h, state, cfg)
    return rf, trace


def project_modulus(rf):
    """Closest unit-modulus matrices in Frobenius norm: keep each entry's phase."""
    return RfDesign(np.exp(1j * np.angle(rf.vr)), UNIT_MODULUS)


def alternate(rf, dig, h, cfg, opts, update_rf=True, started=None):
    """Outer rounds of digital update, rate check and (optionally) RF update.

    Each round runs the digital update for the current unit-modulus RF
    matrices and records the true weighted sum-rate.  Rounds stop once that
    rate changes by less than ``conv_tol`` (relative) or after
    ``max_outer_rounds``.  With ``update_rf`` the RF update and projection
    run between rounds; without it later rounds simply continue the digital
    iterations.  The best evaluated round is returned.
    """
    started = time.perf_counter() if started is None else started
    rounds = []
    best = None
    previous = None
    for r in range(opts.max_outer_rounds):
        dig, dtrace = digital_step(rf, dig, h, cfg, opts)
        rate = model.weighted_sum_rate(rf, dig, h, cfg)
        record = {"digital": dtrace, "rf": None, "sum_rate": rate}
        rounds.append(record)
        if best is None or rate > best[2]:
            best = (rf, dig, rate)
        if previous is not None and _relative_change(rate, previous) < opts.conv_tol:
            break
        if r == opts.max_outer_rounds - 1:
            break
        previous = rate
        if update_rf:
            relaxed, rtrace = rf_step(dig, rf, h, cfg, opts)
            record["rf"] = rtrace
            rf = project_modulus(relaxed)
            dig = restore_feasibility(rf, dig, cfg)
    rf, dig, _ = best
    return rf, dig, make_report(rf, dig, h, cfg, rounds, started)


def joint_optimize(h, cfg, opts=None, rng=None, rf_init=None):
    """Alternate digital and relaxed RF updates with projection.

    The RF matrices start from ``rf_init`` or :func:`init_rf` drawn from
    ``rng``.  The output always carries unit-modulus RF matrices and a
    digital design optimized for them (the best round of :func:`alternate`).
    """
    opts = opts or OptimizerOptions()
    started = time.perf_counter()
    if rf_init is None:
        rng = rng if rng is not None else np.random.default_rng()
        rf_init = init_rf(cfg, rng)
    rf = project_modulus(rf_init)
    return alternate(rf, init_digital(rf, h, cfg), h, cfg, opts, started=started)
