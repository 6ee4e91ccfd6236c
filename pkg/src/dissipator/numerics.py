"""Dense linear-algebra kernels.

Thin, contract-checking wrappers around LAPACK (through numpy/scipy).
Everything here is a pure function of its inputs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import InvalidInput, NotPositiveDefinite, SingularSystem

INERTIA_ATOL = 1e-10
INERTIA_RTOL = 1e-8


@dataclass(frozen=True)
class SymEigDecomposition:
    """Eigenvalues in descending order and matching orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        yield self.values
        yield self.vectors


@dataclass(frozen=True)
class Inertia:
    positive: int
    negative: int
    zero: int

    @property
    def dim(self):
        return self.positive + self.negative + self.zero

    def as_tuple(self):
        return (self.positive, self.negative, self.zero)


def as_matrix(M, name="matrix"):
    """Return ``M`` as a 2-D float array, rejecting non-finite entries."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise InvalidInput(f"{name} must be two-dimensional, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput(f"{name} has non-finite entries")
    return M


def _square(M, name):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {M.shape}")
    return M


def sym(M):
    """Symmetric part (M + M^T)/2."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def skew(M):
    """Skew-symmetric part (M - M^T)/2."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M - M.T)


def _fix_signs(V):
    # largest-magnitude component of every column made positive
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eig(M):
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    The input is symmetrized defensively; eigenvector signs are fixed so that
    the largest-magnitude entry of each column is positive.
    """
    M = sym(_square(M, "M"))
    w, V = np.linalg.eigh(M)
    return SymEigDecomposition(w[::-1].copy(), _fix_signs(V[:, ::-1]))


def sym_eigvals(M):
    """Eigenvalues of a symmetric matrix, descending."""
    M = sym(_square(M, "M"))
    return np.linalg.eigvalsh(M)[::-1].copy()


def top_sym_eig(M, k):
    """The ``k`` largest eigenpairs of a symmetric matrix, descending.

    Uses a LAPACK subset driver when ``k`` is small compared with the size.
    """
    n = M.shape[0]
    k = min(k, n)
    if 4 * k < n:
        w, V = sla.eigh(M, subset_by_index=[n - k, n - 1], driver="evr", check_finite=False)
    else:
        w, V = np.linalg.eigh(M)
        w, V = w[n - k:], V[:, n - k:]
    return w[::-1].copy(), V[:, ::-1].copy()


def cholesky(D):
    """Lower Cholesky factor of an SPD matrix; raises NotPositiveDefinite."""
    D = sym(_square(D, "D"))
    try:
        return np.linalg.cholesky(D)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc


def gen_sym_eig(M, D):
    """Symmetric-definite pencil M v = lambda D v, eigenvalues descending.

    Reduced to a standard problem through the Cholesky factor D = L L^T;
    the returned vectors are D-orthonormal.
    """
    M = sym(_square(M, "M"))
    D = _square(D, "D")
    if M.shape != D.shape:
        raise InvalidInput(f"pencil sizes differ: {M.shape} vs {D.shape}")
    L = cholesky(D)
    T = sla.solve_triangular(L, M, lower=True)
    T = sla.solve_triangular(L, T.T, lower=True)
    w, W = np.linalg.eigh(sym(T))
    V = sla.solve_triangular(L.T, W[:, ::-1], lower=False)
    return SymEigDecomposition(w[::-1].copy(), _fix_signs(V))


def svd(M):
    """Thin SVD ``(U, s, V)`` with ``M = U diag(s) V^T``, s descending."""
    M = as_matrix(M, "M")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return U, s, Vt.T


def zero_threshold(values, atol=INERTIA_ATOL, rtol=INERTIA_RTOL):
    values = np.asarray(values, dtype=float)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return max(atol, rtol * scale)


def inertia_of_values(values, atol=INERTIA_ATOL, rtol=INERTIA_RTOL):
    values = np.asarray(values, dtype=float)
    thr = zero_threshold(values, atol, rtol)
    pos = int(np.sum(values > thr))
    neg = int(np.sum(values < -thr))
    return Inertia(pos, neg, values.size - pos - neg)


def inertia(M, atol=INERTIA_ATOL, rtol=INERTIA_RTOL):
    """Inertia of a symmetric matrix relative to max(atol, rtol*max|lambda|)."""
    return inertia_of_values(sym_eigvals(M), atol, rtol)


def numerical_rank(M, atol=INERTIA_ATOL, rtol=INERTIA_RTOL):
    M = as_matrix(M, "M")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > max(atol, rtol * s[0])))


def solve_linear(M, RHS):
    """Solve ``M Z = RHS`` with a residual check.

    Raises SingularSystem, carrying a 2-norm condition estimate, when ``M``
    is singular to working precision or the residual exceeds
    ``1e-10 * ||M||_F * ||Z||_F``.
    """
    M = _square(M, "M")
    RHS = np.asarray(RHS, dtype=float)
    vector_rhs = RHS.ndim == 1
    RHS = as_matrix(RHS, "RHS")
    if RHS.shape[0] != M.shape[0]:
        raise InvalidInput(f"RHS has {RHS.shape[0]} rows, expected {M.shape[0]}")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond * np.finfo(float).eps >= 1.0:
        raise SingularSystem(f"matrix is singular (condition ~ {cond:.3g})", cond)
    try:
        Z = sla.solve(M, RHS, check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise SingularSystem(str(exc), cond) from exc
    res = np.linalg.norm(M @ Z - RHS)
    if res > 1e-10 * np.linalg.norm(M) * max(np.linalg.norm(Z), np.finfo(float).tiny):
        raise SingularSystem(f"residual {res:.3g} too large (condition ~ {cond:.3g})", cond)
    return Z.ravel() if vector_rhs else Z


def spd_power(D, power):
    """D**power for a symmetric positive definite D via its eigendecomposition."""
    w, V = np.linalg.eigh(sym(_square(D, "D")))
    if w[0] <= 0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3g} is not positive")
    return (V * w**power) @ V.T


def orthonormal_columns(M, atol=INERTIA_ATOL, rtol=INERTIA_RTOL):
    """Orthonormal basis for the column space of ``M``."""
    U, s, _ = svd(M)
    if s.size == 0:
        return U[:, :0]
    r = int(np.sum(s > max(atol, rtol * s[0])))
    return U[:, :r]


def principal_angles(X, Y):
    """Principal angles (radians, ascending) between column spaces."""
    return sla.subspace_angles(X, Y)[::-1]
