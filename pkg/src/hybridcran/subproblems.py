"""Convex inner problems of the digital and RF updates in real coordinates.

Digital variables are packed as ``[vd.T (interleaved re/im), omega_0
(Hermitian coords), omega_1, ...]``; RF variables as ``vr.ravel()``
interleaved.  Both problems are maximizations of the weighted MSE surrogate
with the auxiliary variables (u, w_tilde, Sigma) held fixed.
"""

import numpy as np

from ._linalg import (LN2, as_complex, as_real, hermitian_basis, herm_gradient, herm_to_vec,
                      neg_logdet_hessian, realify, vec_to_herm)
from .model import DigitalDesign, RfDesign, effective_channel, RELAXED
from .subsolver import BlockDiagonal, SmoothProblem


def pack_digital(dig):
    return np.concatenate([as_real(dig.vd.T), herm_to_vec(dig.omega).ravel()])


def unpack_digital(x, n_rrh, n_rf, n_ue):
    n_bar = n_rrh * n_rf
    nv = 2 * n_bar * n_ue
    vd = as_complex(x[:nv]).reshape(n_ue, n_bar).T
    omega = vec_to_herm(x[nv:].reshape(n_rrh, n_rf * n_rf), n_rf)
    return DigitalDesign(vd, omega)


def pack_rf(rf):
    return as_real(rf.vr)


def unpack_rf(x, n_rrh, n_ant, n_rf):
    return RfDesign(as_complex(x).reshape(n_rrh, n_ant, n_rf), RELAXED)


def _chol_inv(a):
    """Inverse and log-determinant of a Hermitian PD matrix, or None if not PD."""
    try:
        chol = np.linalg.cholesky(0.5 * (a + a.conj().T))
    except np.linalg.LinAlgError:
        return None, None
    if np.min(np.abs(np.diag(chol))) < 1e-10:
        return None, None
    inv_l = np.linalg.inv(chol)
    return inv_l.conj().T @ inv_l, 2.0 * np.sum(np.log(np.abs(np.diag(chol))))


def _chol_inv_batch(a):
    """Batched :func:`_chol_inv`; entries that are not PD get NaN inverse and log-det."""
    a = np.asarray(a)
    try:
        chol = np.linalg.cholesky(0.5 * (a + np.swapaxes(a.conj(), -1, -2)))
        diag = np.abs(np.diagonal(chol, axis1=-2, axis2=-1))
        if np.min(diag) >= 1e-10:
            inv_l = np.linalg.inv(chol)
            return np.swapaxes(inv_l.conj(), -1, -2) @ inv_l, 2.0 * np.sum(np.log(diag), axis=-1)
    except np.linalg.LinAlgError:
        pass
    inv = np.full(a.shape, np.nan, dtype=complex)
    ld = np.full(a.shape[:-2], np.nan)
    for i in range(a.shape[0]):
        w, l = _chol_inv(a[i])
        if w is not None:
            inv[i], ld[i] = w, l
    return inv, ld


class DigitalProblem:
    """Surrogate maximization over (V_D, Omega) for fixed RF and (u, w_tilde, Sigma)."""

    def __init__(self, rf, h, state, cfg):
        self.cfg = cfg
        self.n_rrh, self.n_rf, self.n_ue = cfg.n_rrh, rf.vr.shape[-1], cfg.n_ue
        n_rf = self.n_rf
        self.n_bar = self.n_rrh * n_rf
        self.rho = float(state.rho)
        heff = effective_channel(rf, h)
        u, wt = np.asarray(state.u), np.asarray(state.w_tilde)
        c = cfg.weights * wt / LN2
        d = c * np.abs(u) ** 2
        self.a = heff.conj().T @ (d[:, None] * heff)
        self.b = heff.conj().T * (c * u)
        self.const = float(np.sum(cfg.weights / LN2 * (np.log(wt) + 1.0)) - np.sum(c * (1.0 + np.abs(u) ** 2)))
        self.sigma = np.array(state.sigma)
        self.gram = np.array([v.conj().T @ v for v in rf.vr])
        self.sigma_inv = np.empty_like(self.sigma)
        self.front_const = np.empty(self.n_rrh)
        for i in range(self.n_rrh):
            inv, ld = _chol_inv(self.sigma[i])
            self.sigma_inv[i] = inv
            self.front_const[i] = ld / LN2 - n_rf / LN2 - cfg.capacity[i]
        self.nv = 2 * self.n_bar * self.n_ue
        self.n = self.nv + self.n_rrh * n_rf * n_rf
        blk = lambda i: slice(i * n_rf, (i + 1) * n_rf)
        self._blk = blk
        self.a_blocks = np.array([self.a[blk(i), blk(i)] for i in range(self.n_rrh)])
        self._cached_x = None
        if self.rho:
            self._reg_index = self._regularizer_index()

    # -- packing -------------------------------------------------------
    def unpack(self, x):
        return unpack_digital(x, self.n_rrh, self.n_rf, self.n_ue)

    def pack(self, dig):
        return pack_digital(dig)

    def _omega_slice(self, i):
        nn = self.n_rf * self.n_rf
        return slice(self.nv + i * nn, self.nv + (i + 1) * nn)

    def _v_grad_real(self, g):
        """Real-coordinate gradient from the complex gradient dF/dV* (n_bar x n_ue)."""
        return as_real(2.0 * g.T)

    # -- objective -----------------------------------------------------
    def objective(self, x):
        dig = self.unpack(x)
        vd, omega = dig.vd, dig.omega
        av = self.a @ vd
        quad = np.real(np.vdot(vd, av))
        lin = np.real(np.vdot(self.b, vd))
        qn = np.real(np.einsum("iab,iba->", self.a_blocks, omega))
        value = self.const + 2.0 * lin - quad - qn
        gv = self.b - av
        gom = -self.a_blocks
        if self.rho:
            resid = np.array([self.sigma[i] - self._phi(dig, i) for i in range(self.n_rrh)])
            value -= self.rho * np.sum(np.abs(resid) ** 2)
            for i in range(self.n_rrh):
                gv[self._blk(i)] += 2.0 * self.rho * resid[i] @ vd[self._blk(i)]
            gom = gom + 2.0 * self.rho * resid
        grad = np.concatenate([self._v_grad_real(gv), herm_gradient(gom).ravel()])
        return float(value), grad

    def _phi(self, dig, i):
        x = dig.vd[self._blk(i)]
        return x @ x.conj().T + dig.omega[i]

    def _omega_factors(self, x):
        """Omega_i^{-1} and ln det Omega_i (NaN when not PD), cached for the last point."""
        if self._cached_x is None or not np.array_equal(self._cached_x, x):
            omega = vec_to_herm(x[self.nv:].reshape(self.n_rrh, self.n_rf * self.n_rf), self.n_rf)
            self._cached_x = np.array(x)
            self._cached = _chol_inv_batch(omega)
        return self._cached

    def _blocks(self, x):
        """Per-RRH blocks x_i (R, N, K) of V_D and Phi_i (R, N, N)."""
        dig = self.unpack(x)
        xs = dig.vd.reshape(self.n_rrh, self.n_rf, self.n_ue)
        return dig, xs, xs @ np.swapaxes(xs.conj(), 1, 2) + dig.omega

    def _block_rows(self, gx):
        """Real V_D coordinates of per-RRH complex gradients gx (R, N, K), one row per RRH."""
        R = self.n_rrh
        full = np.zeros((R, self.n_bar, self.n_ue), dtype=complex)
        for i in range(R):
            full[i, self._blk(i)] = gx[i]
        return as_real(2.0 * np.swapaxes(full, 1, 2)).reshape(R, -1)

    # -- constraints ---------------------------------------------------
    def constraints(self, x):
        """Values and Jacobian of [power_0..power_R-1, fronthaul_0..fronthaul_R-1]."""
        _, xs, phi = self._blocks(x)
        R, nn = self.n_rrh, self.n_rf * self.n_rf
        om_inv, om_ld = self._omega_factors(x)
        vals = np.empty(2 * R)
        vals[:R] = np.real(np.sum(self.gram.conj() * phi, axis=(1, 2))) - self.cfg.power
        front = self.front_const + (np.real(np.sum(self.sigma_inv.conj() * phi, axis=(1, 2))) - om_ld) / LN2
        vals[R:] = np.where(np.isnan(front), np.inf, front)
        jac = np.zeros((2 * R, self.n))
        jac[:R, :self.nv] = self._block_rows(self.gram @ xs)
        jac[R:, :self.nv] = self._block_rows(self.sigma_inv @ xs / LN2)
        gp = herm_gradient(self.gram)
        gf = herm_gradient((self.sigma_inv - om_inv) / LN2)
        for i in range(R):
            s = self._omega_slice(i)
            jac[i, s] = gp[i]
            jac[R + i, s] = gf[i]
        return vals, np.nan_to_num(jac)

    def values(self, x):
        """Objective and constraint values without derivatives."""
        dig, _, phi = self._blocks(x)
        vd, omega = dig.vd, dig.omega
        value = (self.const + 2.0 * np.real(np.vdot(self.b, vd)) - np.real(np.vdot(vd, self.a @ vd))
                 - np.real(np.einsum("iab,iba->", self.a_blocks, omega)))
        if self.rho:
            value -= self.rho * np.sum(np.abs(self.sigma - phi) ** 2)
        R = self.n_rrh
        vals = np.empty(2 * R)
        vals[:R] = np.real(np.sum(self.gram.conj() * phi, axis=(1, 2))) - self.cfg.power
        _, om_ld = _chol_inv_batch(omega)
        front = self.front_const + (np.real(np.sum(self.sigma_inv.conj() * phi, axis=(1, 2))) - om_ld) / LN2
        vals[R:] = np.where(np.isnan(front), np.inf, front)
        return float(value), vals

    # -- curvature -----------------------------------------------------
    def hessian(self, x, a, w):
        """a * Hess(objective) + sum_j w_j * Hess(constraint_j).

        Without the regularizer the matrix is block diagonal (one repeated
        block per user column of V_D, one block per Omega_i) and is returned
        as a :class:`BlockDiagonal`.
        """
        R = self.n_rrh
        w = np.asarray(w, dtype=float)
        q = -a * self.a
        for i in range(R):
            blk = self._blk(i)
            q[blk, blk] += w[i] * self.gram[i] + w[R + i] / LN2 * self.sigma_inv[i]
        om_inv, _ = self._omega_factors(x)
        nn = self.n_rf * self.n_rf
        om_blocks = [np.zeros((nn, nn)) if np.isnan(om_inv[i]).any()
                     else w[R + i] / LN2 * neg_logdet_hessian(om_inv[i]) for i in range(R)]
        if not self.rho:
            blocks = [(0, 2.0 * realify(q), self.n_ue)]
            blocks += [(self.nv + i * nn, om_blocks[i], 1) for i in range(R)]
            return BlockDiagonal(blocks, self.n)
        out = np.zeros((self.n, self.n))
        out[:self.nv, :self.nv] = np.kron(np.eye(self.n_ue), 2.0 * realify(q))
        for i in range(R):
            s = self._omega_slice(i)
            out[s, s] += om_blocks[i]
        out -= a * self._regularizer_hessian(self.unpack(x))
        return out

    def _regularizer_index(self):
        """Global real coordinates of (a, b, re/im) entries of each RRH block of vd."""
        n_rf, n_bar = self.n_rf, self.n_bar
        idx = np.empty((self.n_rrh, n_rf, self.n_ue, 2), dtype=int)
        for i in range(self.n_rrh):
            for a in range(n_rf):
                for b in range(self.n_ue):
                    base = 2 * (b * n_bar + i * n_rf + a)
                    idx[i, a, b] = (base, base + 1)
        return idx

    def _regularizer_hessian(self, dig):
        """Hessian of rho * sum_i ||Sigma_i - Phi_i||_F^2 (Gauss-Newton part plus curvature of Phi)."""
        n_rf, R = self.n_rf, self.n_rrh
        eye = np.eye(n_rf)
        out = np.zeros((self.n, self.n))
        q = np.zeros((self.n_bar, self.n_bar), dtype=complex)
        for i in range(R):
            blk = self._blk(i)
            x = dig.vd[blk]
            first = np.einsum("ap,qb->abpq", eye, x.conj())
            second = np.einsum("pb,aq->abpq", x, eye)
            jv = np.stack([first + second, 1j * first - 1j * second], axis=2)  # (a, b, part, p, q)
            jac = np.zeros((n_rf * n_rf, self.n), dtype=complex)
            jac[:, self._reg_index[i].ravel()] = jv.reshape(-1, n_rf * n_rf).T
            jac[:, self._omega_slice(i)] = hermitian_basis(n_rf).reshape(-1, n_rf * n_rf).T
            out += 2.0 * self.rho * np.real(jac.conj().T @ jac)
            q[blk, blk] = self._phi(dig, i) - self.sigma[i]
        out[:self.nv, :self.nv] += np.kron(np.eye(self.n_ue), 4.0 * self.rho * realify(q))
        return out

    def problem(self, x0):
        return SmoothProblem(self.objective, self.constraints, np.asarray(x0, dtype=float), self.hessian,
                            self.values)


class RfProblem:
    """Surrogate maximization over relaxed RF matrices for fixed digital design and (u, w_tilde).

    Constraints are ordered as [power_0..power_R-1, modulus of every entry of vr.ravel()].
    """

    def __init__(self, dig, h, state, cfg):
        self.cfg = cfg
        self.h = np.asarray(h)
        n_ue, self.n_rrh, self.n_ant = self.h.shape
        self.n_rf = dig.omega.shape[-1]
        self.n_ue = n_ue
        self.x = dig.vd.reshape(self.n_rrh, self.n_rf, n_ue)
        self.omega = dig.omega
        u, wt = np.asarray(state.u), np.asarray(state.w_tilde)
        self.u = u
        self.c = cfg.weights * wt / LN2
        self.d = self.c * np.abs(u) ** 2
        self.const = float(np.sum(cfg.weights / LN2 * (np.log(wt) + 1.0)))
        self.phi = np.array([xi @ xi.conj().T + om for xi, om in zip(self.x, self.omega)])
        self.nc = self.n_rrh * self.n_ant * self.n_rf
        self.n = 2 * self.nc
        self._hobj = -2.0 * realify(self._quadratic())
        self._hpow = []
        blk = self.n_ant * self.n_rf
        for i in range(self.n_rrh):
            hp = np.zeros((self.n, self.n))
            s = slice(2 * i * blk, 2 * (i + 1) * blk)
            hp[s, s] = 2.0 * realify(np.kron(np.eye(self.n_ant), self.phi[i].T))
            self._hpow.append(hp)

    def _quadratic(self):
        """Hermitian Q with sum_k c_k e_k = r^H Q r - 2 Re(b^H r) + const."""
        K, R, M, N = self.n_ue, self.n_rrh, self.n_ant, self.n_rf
        zeta = np.einsum("kia,ibl->kliab", self.h.conj(), self.x).reshape(K * K, -1)
        dd = np.repeat(self.d, K)
        q = (zeta.conj().T * dd) @ zeta
        for i in range(R):
            hd = (self.h[:, i, :].T * self.d) @ self.h[:, i, :].conj()
            s = slice(i * M * N, (i + 1) * M * N)
            q[s, s] += np.kron(hd, self.omega[i].T)
        return q

    def unpack(self, x):
        return unpack_rf(x, self.n_rrh, self.n_ant, self.n_rf)

    def pack(self, rf):
        return pack_rf(rf)

    def objective(self, x):
        vr = as_complex(x).reshape(self.n_rrh, self.n_ant, self.n_rf)
        hv = np.einsum("kia,iab->kib", self.h.conj(), vr)  # rows h_ki^H V_i
        s = np.einsum("kib,ibl->kl", hv, self.x)
        qn = np.real(np.einsum("kia,iab,kib->k", hv, self.omega, hv.conj()))
        diag = np.diag(s)
        e = 1.0 - 2.0 * np.real(np.conj(self.u) * diag) + np.abs(self.u) ** 2 * (
            np.sum(np.abs(s) ** 2, axis=1) + qn + 1.0)
        value = self.const - np.dot(self.c, e)
        grad = np.empty((self.n_rrh, self.n_ant, self.n_rf), dtype=complex)
        ds = self.d[:, None] * s
        for i in range(self.n_rrh):
            hi, xi = self.h[:, i, :], self.x[i]
            g = -(hi.T * (self.c * self.u)) @ xi.conj().T
            g += hi.T @ ds @ xi.conj().T
            g += ((hi.T * self.d) @ hi.conj()) @ vr[i] @ self.omega[i]
            grad[i] = g
        return float(value), as_real(-2.0 * grad)

    def constraints(self, x):
        r = as_complex(x)
        vr = r.reshape(self.n_rrh, self.n_ant, self.n_rf)
        R = self.n_rrh
        vals = np.empty(R + self.nc)
        jac = np.zeros((R + self.nc, self.n))
        blk = self.n_ant * self.n_rf
        for i in range(R):
            vals[i] = np.real(np.trace(vr[i] @ self.phi[i] @ vr[i].conj().T)) - self.cfg.power[i]
            jac[i, 2 * i * blk:2 * (i + 1) * blk] = as_real(2.0 * vr[i] @ self.phi[i])
        vals[R:] = np.abs(r) ** 2 - 1.0
        rows = np.arange(self.nc)
        jac[R + rows, 2 * rows] = 2.0 * r.real
        jac[R + rows, 2 * rows + 1] = 2.0 * r.imag
        return vals, jac

    def values(self, x):
        """Objective and constraint values without derivatives."""
        r = as_complex(x)
        vr = r.reshape(self.n_rrh, self.n_ant, self.n_rf)
        hv = np.einsum("kia,iab->kib", self.h.conj(), vr)
        s = np.einsum("kib,ibl->kl", hv, self.x)
        qn = np.real(np.einsum("kia,iab,kib->k", hv, self.omega, hv.conj()))
        e = 1.0 - 2.0 * np.real(np.conj(self.u) * np.diag(s)) + np.abs(self.u) ** 2 * (
            np.sum(np.abs(s) ** 2, axis=1) + qn + 1.0)
        vals = np.empty(self.n_rrh + self.nc)
        for i in range(self.n_rrh):
            vals[i] = np.real(np.vdot(vr[i], vr[i] @ self.phi[i])) - self.cfg.power[i]
        vals[self.n_rrh:] = np.abs(r) ** 2 - 1.0
        return float(self.const - np.dot(self.c, e)), vals

    def hessian(self, x, a, w):
        out = a * self._hobj
        for i in range(self.n_rrh):
            out = out + w[i] * self._hpow[i]
        diag = np.repeat(2.0 * np.asarray(w[self.n_rrh:]), 2)
        out[np.diag_indices(self.n)] += diag
        return out

    def problem(self, x0):
        return SmoothProblem(self.objective, self.constraints, np.asarray(x0, dtype=float), self.hessian,
                            self.values)
