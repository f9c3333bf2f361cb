"""Lanczos approximation of exp(-i dt H) v for sparse Hermitian H."""
import numpy as np
from scipy.linalg import eigh_tridiagonal


class KrylovConvergenceError(RuntimeError):
    pass


def expm_krylov(matvec, v, dt, tol=1e-10, m_max=60):
    """Return exp(-i dt H) v with an adaptively sized Lanczos subspace.

    ``matvec`` applies H. Growth stops once the a posteriori estimate
    ``beta_{m+1} |e_m^T exp(-i dt T_m) e_1|`` (relative to ||v||) drops below ``tol``.
    """
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0 or dt == 0:
        return v.copy()
    m_max = min(m_max, v.size)
    basis = np.empty((m_max, v.size), dtype=complex)
    alpha = np.empty(m_max)
    beta = np.empty(m_max)
    basis[0] = v / nrm
    for j in range(m_max):
        w = matvec(basis[j])
        alpha[j] = np.vdot(basis[j], w).real
        w = w - alpha[j] * basis[j]
        if j > 0:
            w = w - beta[j - 1] * basis[j - 1]
        # full reorthogonalization: cheap at these subspace sizes
        w = w - basis[:j + 1].T @ (basis[:j + 1].conj() @ w)
        b = np.linalg.norm(w)
        evals, evecs = eigh_tridiagonal(alpha[:j + 1], beta[:j]) if j else (alpha[:1], np.ones((1, 1)))
        coef = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
        if b * abs(coef[-1]) < tol or b < 1e-14 or j + 1 == v.size:
            return nrm * (basis[:j + 1].T @ coef)
        if j + 1 == m_max:
            break
        beta[j] = b
        basis[j + 1] = w / b
    raise KrylovConvergenceError(
        f"Lanczos did not reach tol={tol} within {m_max} vectors (dt={dt})")
