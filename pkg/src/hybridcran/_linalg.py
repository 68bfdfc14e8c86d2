"""Small complex linear-algebra helpers shared by the model and the solvers."""

from functools import lru_cache

import numpy as np

from .exceptions import DomainError

LN2 = np.log(2.0)


def hermitize(a):
    return 0.5 * (a + a.conj().swapaxes(-1, -2))


def logdet(a):
    """Natural log-determinant of a Hermitian positive definite matrix.

    The input is symmetrized before the Cholesky factorization so round-off
    in the imaginary part of the diagonal is harmless. Raises DomainError if
    the matrix is not numerically positive definite.
    """
    try:
        chol = np.linalg.cholesky(hermitize(np.asarray(a, dtype=complex)))
    except np.linalg.LinAlgError as exc:
        raise DomainError("matrix is not positive definite") from exc
    return 2.0 * np.sum(np.log(np.abs(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)


def logdet2(a):
    return logdet(a) / LN2


def realify(q):
    """Real 2n x 2n matrix R with x^T R x = z^H Q z for interleaved x = [Re z0, Im z0, ...]."""
    q = np.asarray(q)
    n = q.shape[-1]
    out = np.empty((2 * n, 2 * n))
    out[0::2, 0::2] = out[1::2, 1::2] = q.real
    out[1::2, 0::2] = q.imag
    out[0::2, 1::2] = -q.imag
    return out


def as_complex(x):
    """View an interleaved real vector as complex (copies if not contiguous)."""
    return np.ascontiguousarray(x, dtype=float).view(complex)


def as_real(z):
    return np.ascontiguousarray(z, dtype=complex).ravel().view(float)


@lru_cache(maxsize=None)
def hermitian_basis(n):
    """Basis tensor B of shape (n*n, n, n) for Hermitian n x n matrices.

    Coordinates are ordered as the n real diagonal entries followed by
    (Re, Im) of every strictly upper entry in row-major order, so that
    ``Omega = sum_c x[c] * B[c]``.
    """
    basis = []
    for a in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[a, a] = 1.0
        basis.append(e)
    for a in range(n):
        for b in range(a + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[a, b] = e[b, a] = 1.0
            basis.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[a, b] = 1j
            e[b, a] = -1j
            basis.append(e)
    out = np.array(basis)
    out.setflags(write=False)
    return out


def herm_to_vec(omega):
    omega = np.asarray(omega)
    n = omega.shape[-1]
    iu = np.triu_indices(n, 1)
    upper = omega[..., iu[0], iu[1]]
    pairs = np.stack([upper.real, upper.imag], axis=-1).reshape(*omega.shape[:-2], -1)
    return np.concatenate([np.real(np.diagonal(omega, axis1=-2, axis2=-1)), pairs], axis=-1)


@lru_cache(maxsize=None)
def _herm_flat_index(n):
    """Flat positions of the diagonal, strict upper and matching lower entries."""
    iu = np.triu_indices(n, 1)
    return np.arange(n) * (n + 1), iu[0] * n + iu[1], iu[1] * n + iu[0]


def vec_to_herm(x, n):
    x = np.asarray(x, dtype=float)
    diag, upper_idx, lower_idx = _herm_flat_index(n)
    out = np.zeros(x.shape[:-1] + (n * n,), dtype=complex)
    out[..., diag] = x[..., :n]
    upper = x[..., n::2] + 1j * x[..., n + 1::2]
    out[..., upper_idx] = upper
    out[..., lower_idx] = upper.conj()
    return out.reshape(x.shape[:-1] + (n, n))


@lru_cache(maxsize=None)
def _basis_flat_t(n):
    """Rows vec(B_c^T), so tr(D B_c) = (vec(D) . vec(B_c^T))."""
    out = np.ascontiguousarray(hermitian_basis(n).transpose(0, 2, 1).reshape(n * n, n * n))
    out.setflags(write=False)
    return out


def herm_gradient(d):
    """Coordinates of the gradient of f given D with df = tr(D dOmega)."""
    n = d.shape[-1]
    return np.real(d.reshape(*d.shape[:-2], n * n) @ _basis_flat_t(n).T)


def neg_logdet_hessian(omega_inv):
    """Hessian of -ln det(Omega) in Hermitian coordinates, given Omega^{-1}.

    Entry (c, d) is tr(W B_c W B_d) with W = Omega^{-1}.
    """
    n = omega_inv.shape[-1]
    wbw = omega_inv @ hermitian_basis(n) @ omega_inv
    return np.real(wbw.reshape(n * n, n * n) @ _basis_flat_t(n).T)
