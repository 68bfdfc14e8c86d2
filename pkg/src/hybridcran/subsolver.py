"""Feasible-start logarithmic-barrier method for smooth concave maximization.

Solves

    maximize f(x)  subject to  g_j(x) <= 0,  j = 1..m

from a strictly feasible ``x0`` by following the central path of
``t * f(x) + sum_j log(-g_j(x))`` for t = t0, mu*t0, ... until the duality
gap estimate m / t drops below ``kkt_tol``.  Each centering problem is
solved by damped Newton steps when the caller provides a curvature
callback, otherwise by diagonally preconditioned gradient steps.  Both use
Armijo backtracking that also rejects infeasible or non-finite points, so
every accepted iterate is strictly feasible.

Variables are real vectors; complex unknowns are passed as interleaved
(Re, Im) coordinates.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .exceptions import InfeasibleStartError, InvalidParameterError

_ARMIJO = 0.01
_BACKTRACK = 0.5
_MIN_STEP = 1e-14
# centering ends once decrement^2 / 2 falls below the larger of an absolute
# floor and a multiple of the barrier value's round-off level
_CENTERING_ATOL = 1e-12
_CENTERING_RTOL = 1e-13
# decrement small enough that a failed line search is round-off, not a stall
_ROUNDOFF_DECREMENT = 1e-6


@dataclass
class SmoothProblem:
    """Smooth problem data.

    objective : x -> (value, gradient)
    constraints : list of callables x -> (value, gradient), each meaning
        ``g_j(x) <= 0``; alternatively a single callable returning
        ``(values, jacobian)`` with shapes (m,) and (m, n).
    x0 : strictly feasible starting point
    hessian : optional ``(x, a, w) -> a * Hess f(x) + sum_j w[j] * Hess g_j(x)``,
        returned as a dense array or a :class:`BlockDiagonal`.  Without it
        the Hessian is approximated by central differences of the
        gradients (fine for small problems).
    values : optional ``x -> (f, g)`` without derivatives, used by the line
        search; it must raise or return non-finite values outside the domain.
    """

    objective: Callable
    constraints: object
    x0: np.ndarray
    hessian: Optional[Callable] = None
    values: Optional[Callable] = None

    def constraint_values(self, x):
        if callable(self.constraints):
            vals, jac = self.constraints(x)
            return np.asarray(vals, dtype=float), np.asarray(jac, dtype=float).reshape(len(vals), x.size)
        if not self.constraints:
            return np.zeros(0), np.zeros((0, x.size))
        pairs = [c(x) for c in self.constraints]
        return (np.array([float(v) for v, _ in pairs]),
                np.array([np.asarray(g, dtype=float) for _, g in pairs]))

    def evaluate(self, x):
        if self.values is not None:
            f, g = self.values(x)
            return float(f), np.asarray(g, dtype=float)
        f, _ = self.objective(x)
        g, _ = self.constraint_values(x)
        return float(f), g


class BlockDiagonal:
    """Block-diagonal symmetric matrix given as ``(start, block, count)`` triples.

    ``count`` consecutive copies of ``block`` occupy the diagonal starting at
    index ``start``.  The triples must tile the full dimension.
    """

    def __init__(self, blocks, n):
        self.blocks = [(int(s), np.asarray(b, dtype=float), int(c)) for s, b, c in blocks]
        self.n = n
        covered = sum(b.shape[0] * c for _, b, c in self.blocks)
        if covered != n:
            raise InvalidParameterError(f"blocks cover {covered} of {n} coordinates")

    def toarray(self):
        out = np.zeros((self.n, self.n))
        for start, block, count in self.blocks:
            k = block.shape[0]
            for c in range(count):
                s = slice(start + c * k, start + (c + 1) * k)
                out[s, s] = block
        return out

    def factor(self, shift=0.0):
        return [(start, cho_factor(block + shift * np.eye(block.shape[0]), check_finite=False), block.shape[0], count)
                for start, block, count in self.blocks]

    @staticmethod
    def solve(factors, rhs):
        rhs = np.asarray(rhs, dtype=float)
        vector = rhs.ndim == 1
        r = rhs[:, None] if vector else rhs
        out = np.empty_like(r)
        for start, fac, k, count in factors:
            seg = r[start:start + k * count]
            # (count*k, p) -> (k, count*p) so every copy is solved in one call
            stacked = seg.reshape(count, k, -1).transpose(1, 0, 2).reshape(k, -1)
            sol = cho_solve(fac, stacked, check_finite=False)
            out[start:start + k * count] = sol.reshape(k, count, -1).transpose(1, 0, 2).reshape(count * k, -1)
        return out[:, 0] if vector else out


@dataclass
class SolveOptions:
    """Barrier schedule."""

    kkt_tol: float = 1e-6
    barrier_mu: float = 10.0
    barrier_t0: float = 1.0
    max_newton_iters: int = 200

    def __post_init__(self):
        for name in ("kkt_tol", "barrier_mu", "barrier_t0", "max_newton_iters"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.barrier_mu <= 1:
            raise InvalidParameterError("barrier_mu must exceed 1")


@dataclass
class SolveResult:
    x: np.ndarray
    value: float
    gap: float
    iterations: int
    stages: int
    stage_values: list = field(default_factory=list)
    stalled: bool = False
    returned_start: bool = False
    max_constraint: float = -np.inf


def _barrier(problem, x, t):
    """Barrier value (minimization form) or inf outside the domain."""
    try:
        f, g = problem.evaluate(x)
    except (ArithmeticError, ValueError, LinAlgError):
        return np.inf
    if not np.isfinite(f) or not np.all(np.isfinite(g)) or np.any(g >= 0):
        return np.inf
    return -t * f - np.sum(np.log(-g))


def _factor_with_shift(factorize, scale):
    shift = 0.0
    while True:
        try:
            return factorize(shift)
        except LinAlgError:
            shift = 1e-12 * scale if shift == 0.0 else 10.0 * shift


def _fd_hessian(problem, step=1e-6):
    """Central-difference ``(x, a, w) -> a Hess f + sum_j w_j Hess g_j`` from the gradients."""
    def lagrangian_grad(y, a, w):
        _, gf = problem.objective(y)
        _, jac = problem.constraint_values(y)
        return a * np.asarray(gf, dtype=float) + (jac.T @ w if jac.size else 0.0)

    def hessian(x, a, w):
        cols = []
        for j in range(x.size):
            h = step * max(1.0, abs(x[j]))
            e = np.zeros_like(x)
            e[j] = h
            cols.append((lagrangian_grad(x + e, a, w) - lagrangian_grad(x - e, a, w)) / (2 * h))
        out = np.array(cols)
        return 0.5 * (out + out.T)

    return hessian


def _direction(problem, x, t, grad, g, jac):
    d = 1.0 / -g
    hess = (problem.hessian or _fd_hessian(problem))(x, -t, d)
    if isinstance(hess, BlockDiagonal):
        scale = max(1.0, max(float(np.max(np.abs(np.diag(b)))) for _, b, _ in hess.blocks))
        factors = _factor_with_shift(hess.factor, scale)
        y = BlockDiagonal.solve(factors, grad)
        if not jac.size:
            return -y
        # Woodbury for the rank-m barrier term J^T diag(d^2) J
        z = BlockDiagonal.solve(factors, jac.T)
        cap = np.diag(g ** 2) + jac @ z
        return -(y - z @ np.linalg.solve(cap, jac @ y))
    if jac.size:
        hess = hess + (jac.T * d ** 2) @ jac
    hess = 0.5 * (hess + hess.T)
    scale = max(1.0, float(np.max(np.abs(np.diag(hess)))))
    eye = np.eye(hess.shape[0])
    factor = _factor_with_shift(lambda shift: cho_factor(hess + shift * eye, check_finite=False), scale)
    return -cho_solve(factor, grad, check_finite=False)


def _center(problem, x, t, max_iters, callback=None):
    value = _barrier(problem, x, t)
    iters = 0
    stalled = False
    for iters in range(1, max_iters + 1):
        _, gf = problem.objective(x)
        g, jac = problem.constraint_values(x)
        grad = -t * np.asarray(gf, dtype=float)
        if jac.size:
            grad = grad + jac.T @ (1.0 / -g)
        dx = _direction(problem, x, t, grad, g, jac)
        slope = float(grad @ dx)
        if -slope / 2.0 <= max(_CENTERING_ATOL, _CENTERING_RTOL * abs(value)):
            break
        step = 1.0
        while True:
            trial = x + step * dx
            new_value = _barrier(problem, trial, t)
            if new_value <= value + _ARMIJO * step * slope:
                break
            step *= _BACKTRACK
            if step < _MIN_STEP:
                trial = None
                break
        if trial is None:
            stalled = -slope / 2.0 > _ROUNDOFF_DECREMENT
            break
        x, value = trial, new_value
        if callback is not None:
            callback(x, t)
    return x, iters, stalled


def maximize(problem, options=None, callback=None):
    """Maximize ``problem.objective`` subject to its constraints.

    ``callback(x, t)``, if given, is called with every accepted iterate and
    the current barrier weight (useful for auditing feasibility).

    Returns a :class:`SolveResult`.  The returned point is the best of the
    start point and the stage endpoints, so its objective is never below the
    start value.  Raises InfeasibleStartError if ``x0`` is not strictly
    feasible.
    """
    options = options or SolveOptions()
    x = np.array(problem.x0, dtype=float)
    f0, _ = problem.objective(x)
    g0, _ = problem.constraint_values(x)
    if not np.isfinite(f0) or np.any(~np.isfinite(g0)) or np.any(g0 >= 0):
        worst = float(np.max(g0)) if g0.size else float("nan")
        raise InfeasibleStartError(f"start point is not strictly feasible (max g = {worst:.3e}, f = {f0})")
    m = g0.size
    t = options.barrier_t0
    best_x, best_f = x.copy(), float(f0)
    stage_values = []
    total = 0
    stalled = False
    stages = 0
    while True:
        x, iters, stage_stalled = _center(problem, x, t, options.max_newton_iters, callback)
        total += iters
        stages += 1
        stalled = stalled or stage_stalled
        f, _ = problem.objective(x)
        stage_values.append(float(f))
        if f >= best_f:
            best_x, best_f = x.copy(), float(f)
        if m == 0 or m / t < options.kkt_tol:
            break
        t *= options.barrier_mu
    g, _ = problem.constraint_values(best_x)
    return SolveResult(
        x=best_x, value=best_f, gap=(m / t if m else 0.0), iterations=total, stages=stages,
        stage_values=stage_values, stalled=stalled,
        returned_start=bool(np.array_equal(best_x, problem.x0)),
        max_constraint=float(g.max()) if g.size else -np.inf)


def finite_difference_gradient(fun, x, step=1e-6):
    """Central-difference gradient of a scalar function (first output if a tuple)."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for j in range(x.size):
        h = step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        fp, fm = fun(xp), fun(xm)
        if isinstance(fp, tuple):
            fp, fm = fp[0], fm[0]
        grad[j] = (fp - fm) / (2 * h)
    return grad


def gradient_error(fun, x, step=1e-6):
    """Relative error between the analytic gradient of ``fun`` and central differences."""
    _, grad = fun(x)
    fd = finite_difference_gradient(fun, x, step)
    scale = max(np.linalg.norm(grad), np.linalg.norm(fd), 1e-300)
    return float(np.linalg.norm(np.asarray(grad) - fd) / scale)


def split_constraints(problem, x):
    """Per-constraint (value, gradient) callables of a problem, vectorized or not."""
    if callable(problem.constraints):
        vals, _ = problem.constraints(x)
        return [(lambda y, j=j: tuple(a[j] for a in problem.constraint_values(y)))
                for j in range(len(vals))]
    return list(problem.constraints)
