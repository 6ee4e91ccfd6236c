"""Problem instances, feasibility and the structural diagnostics of A - BK."""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .exceptions import InvalidInput, PreconditionViolated, RankDeficient


class Dissipativity(str, enum.Enum):
    STRICT = "strict"
    WEAK = "weak"
    NONE = "none"


@dataclass(frozen=True, eq=False)
class ControlPair:
    """The pair (A, B) of the closed loop x' = (A - BK) x.

    ``A`` is n-by-n, ``B`` is n-by-q with q < n and full column rank.
    """

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = nx.as_matrix(self.A, "A").copy()
        B = nx.as_matrix(self.B, "B").copy()
        if A.shape[0] != A.shape[1]:
            raise InvalidInput(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise InvalidInput(f"B has {B.shape[0]} rows, A has {A.shape[0]}")
        if not B.shape[1] < A.shape[0]:
            raise InvalidInput(f"need q < n, got q={B.shape[1]}, n={A.shape[0]}")
        s = np.linalg.svd(B, compute_uv=False)
        if s[0] == 0.0 or s[-1] <= 1e-10 * s[0]:
            raise RankDeficient(f"B is rank deficient (singular values {s})")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def q(self):
        return self.B.shape[1]

    def closed_loop(self, K):
        return self.A - self.B @ check_feedback_shape(self, K)

    def shifted(self, delta):
        return ControlPair(self.A + delta * np.eye(self.n), self.B)


def default_tol(pair):
    """Scale-aware strict/weak threshold: 1e-8 * (1 + ||A||_F)."""
    return 1e-8 * (1.0 + np.linalg.norm(pair.A))


def check_feedback_shape(pair, K):
    K = nx.as_matrix(K, "K")
    if K.shape != (pair.q, pair.n):
        raise InvalidInput(f"K must be {pair.q}x{pair.n}, got {K.shape}")
    return K


@dataclass(frozen=True)
class Verification:
    classification: Dissipativity
    eigenvalues: np.ndarray  # of Sym(A - BK), descending
    tol: float

    @property
    def lambda_max(self):
        return float(self.eigenvalues[0])

    @property
    def dissipating(self):
        return self.classification is not Dissipativity.NONE


@dataclass
class FeedbackResult:
    """A feedback matrix together with how it was obtained and how good it is."""

    K: np.ndarray
    method: str
    classification: Dissipativity
    eigenvalues: np.ndarray
    status: str = "ok"
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)

    @property
    def norm_fro(self):
        return float(np.linalg.norm(self.K))

    @property
    def norm_2(self):
        return float(np.linalg.norm(self.K, 2))

    @property
    def rank(self):
        return nx.numerical_rank(self.K)

    @property
    def lambda_max(self):
        return float(self.eigenvalues[0])


def make_result(pair, K, method, tol=None, **kwargs):
    ver = verify_dissipating(pair, K, tol)
    return FeedbackResult(np.array(K, dtype=float), method, ver.classification,
                          ver.eigenvalues, **kwargs)


# -- feasibility -------------------------------------------------------------

@dataclass(frozen=True)
class FeasibilityReport:
    kernel_basis: np.ndarray
    restricted_spectrum: np.ndarray  # eigenvalues of N^T (A + A^T) N, descending
    feasible: bool
    margin: float
    tol: float


def kernel_basis(B):
    """Orthonormal basis N of ker(B^T), shape n-by-(n - q)."""
    B = nx.as_matrix(B, "B")
    n, q = B.shape
    U, s, _ = np.linalg.svd(B, full_matrices=True)
    if q == 0:
        return np.eye(n)
    if s[0] == 0.0 or s[-1] <= 1e-10 * s[0]:
        raise RankDeficient(f"B is rank deficient (singular values {s})")
    return U[:, q:]


def is_dissipatable(pair, tol=None):
    """Check that A + A^T is negative definite on ker(B^T).

    This is necessary and sufficient for a strictly dissipating feedback to
    exist. The margin is the largest restricted eigenvalue.
    """
    tol = default_tol(pair) if tol is None else tol
    N = kernel_basis(pair.B)
    restricted = nx.sym_eigvals(N.T @ (pair.A + pair.A.T) @ N)
    margin = float(restricted[0]) if restricted.size else -np.inf
    return FeasibilityReport(N, restricted, margin < -tol, margin, tol)


@dataclass(frozen=True)
class SaddleMatrix:
    matrix: np.ndarray
    inertia: nx.Inertia


def saddle_matrix(pair):
    """The saddle point matrix [-(A + A^T), B; B^T, 0] and its inertia."""
    n, q = pair.n, pair.q
    M = np.zeros((n + q, n + q))
    M[:n, :n] = -(pair.A + pair.A.T)
    M[:n, n:] = pair.B
    M[n:, :n] = pair.B.T
    return SaddleMatrix(M, nx.inertia(M))


def saddle_inertia(pair):
    return saddle_matrix(pair).inertia


# -- verification and structure ---------------------------------------------

def verify_dissipating(pair, K, tol=None):
    """Classify K as strict, weak or not dissipating for the pair.

    strict: lambda_max(Sym(A - BK)) < -tol; weak: |lambda_max| <= tol.
    """
    tol = default_tol(pair) if tol is None else tol
    ev = nx.sym_eigvals(nx.sym(pair.closed_loop(K)))
    lam = ev[0]
    if lam < -tol:
        cls = Dissipativity.STRICT
    elif abs(lam) <= tol:
        cls = Dissipativity.WEAK
    else:
        cls = Dissipativity.NONE
    return Verification(cls, ev, tol)


def _require_dissipating(pair, K, tol, allowed, what):
    ver = verify_dissipating(pair, K, tol)
    if ver.classification not in allowed:
        raise PreconditionViolated(
            f"{what}: K is {ver.classification.value} (lambda_max={ver.lambda_max:.3g})")
    return ver


def rank_lower_bound_check(pair, K, tol=None):
    """rank(Q_+^T (B + K^T)) >= t for a dissipating K.

    t is the number of positive eigenvalues of Sym(A) and Q_+ holds their
    eigenvectors. The bound also holds for weakly dissipating K.
    """
    _require_dissipating(pair, K, tol, (Dissipativity.STRICT, Dissipativity.WEAK),
                         "rank_lower_bound_check")
    K = check_feedback_shape(pair, K)
    w, V = nx.sym_eig(nx.sym(pair.A))
    thr = nx.zero_threshold(w)
    Qp = V[:, w > thr]
    t = Qp.shape[1]
    if t == 0:
        return True
    return nx.numerical_rank(Qp.T @ (pair.B + K.T)) >= t


def zero_multiplicity_check(pair, K, tol=None):
    """Multiplicity m of the zero eigenvalue of Sym(A - BK); asserts 0 < m <= q."""
    ver = _require_dissipating(pair, K, tol, (Dissipativity.WEAK,), "zero_multiplicity_check")
    m = int(np.sum(np.abs(ver.eigenvalues) <= ver.tol))
    if not 0 < m <= pair.q:
        raise PreconditionViolated(f"zero multiplicity {m} outside (0, q={pair.q}]")
    return m


@dataclass(frozen=True)
class LMIResiduals:
    dissipation_max: float   # lambda_max(A + A^T - BK - K^T B^T), want <= 0
    norm2_block_min: float   # lambda_min([gamma I, K; K^T, gamma I]), want >= 0
    fro_slack: float         # gamma - ||K||_F^2, want >= 0
    tol: float

    @property
    def dissipation_ok(self):
        return self.dissipation_max <= self.tol

    @property
    def norm2_ok(self):
        return self.norm2_block_min >= -self.tol

    @property
    def fro_ok(self):
        return self.fro_slack >= -self.tol


def lmi_residuals(pair, K, gamma, tol=None):
    """Residuals of the 2-norm and Frobenius-norm LMI constraints for a candidate K.

    Only certifies a given K; no semidefinite program is solved.
    """
    if not gamma > 0:
        raise InvalidInput("gamma must be positive")
    tol = default_tol(pair) if tol is None else tol
    K = check_feedback_shape(pair, K)
    q, n = K.shape
    diss = nx.sym_eigvals(pair.A + pair.A.T - pair.B @ K - K.T @ pair.B.T)[0]
    block = np.block([[gamma * np.eye(q), K], [K.T, gamma * np.eye(n)]])
    bmin = nx.sym_eigvals(block)[-1]
    return LMIResiduals(float(diss), float(bmin), float(gamma - np.sum(K * K)), tol)
