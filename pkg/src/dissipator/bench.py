"""Test problems: the two small worked examples, Grcar and clustered
families, and seeded random feasible/infeasible pairs.

Every generator is a pure function of its arguments; equal arguments give
bitwise equal matrices.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.stats import ortho_group

from . import numerics as nx
from .exceptions import GenerationFailed, InvalidInput, NoPositivePart
from .model import ControlPair, is_dissipatable

_A1 = [[-0.2, 1.6, 0.2, 2.6, -0.4],
       [-0.2, -0.8, -1.2, -0.7, -1.8],
       [1.4, 0.7, -1.1, 0.2, 0.8],
       [0.3, 0.8, 0.1, -0.1, -0.9],
       [0.2, -0.2, 0.7, -1.9, 0.1]]
_B1 = [[0.6, 0.5],
       [-0.2, 0.3],
       [0.5, 0.0],
       [0.2, 0.6],
       [0.6, -0.6]]

# (shift, n, m) rows of the Grcar benchmark
TABLE3_ROWS = [(0.6, 50, 2), (0.6, 100, 4), (0.6, 150, 6), (0.6, 200, 10),
               (0.62, 100, 2), (0.62, 150, 4),
               (0.52, 20, 2), (0.52, 40, 3), (0.52, 45, 4), (0.52, 50, 4),
               (0.52, 100, 8), (0.52, 150, 13)]
# (q, delta) rows of the clustered benchmark, n = 20, m = q.
# The flag marks the rows where plain GL(m) is expected to succeed.
TABLE4_ROWS = [(6, 1e-5, False), (6, 1e-3, False), (6, 1e-2, False), (6, 0.1, False),
               (6, 0.5, True), (2, 1e-3, True), (4, 1e-3, False), (4, 1e-2, False),
               (4, 0.1, False), (4, 0.5, False)]
# reference norms for the small examples
TABLE1_GL2 = {"fro": 2.3063, "two": 2.2166}
TABLE2 = {"gl2_fro": 2.1476, "gl3_fro": 3.0638}
CLUSTER_N = 20

FAMILIES = ("example1", "example1b", "grcar", "clustered", "random_feasible",
            "random_infeasible")


def example1():
    """The 5x5, two-input example with two positive eigenvalues of Sym(A)."""
    return ControlPair(np.array(_A1), np.array(_B1))


def example1b():
    """example1 with e_1 appended to B as a third input."""
    B = np.hstack([np.array(_B1), np.eye(5)[:, :1]])
    return ControlPair(np.array(_A1), B)


def grcar_matrix(n):
    """Grcar Toeplitz stencil: -1 on the subdiagonal, 1 on the diagonal and
    the first three superdiagonals."""
    if n < 5:
        raise InvalidInput("Grcar matrices need n >= 5")
    col = np.zeros(n)
    row = np.zeros(n)
    col[:2] = [1.0, -1.0]
    row[:4] = 1.0
    return toeplitz(col, row)


def grcar(n, shift=0.0):
    """Negative Grcar matrix shifted left: -grcar_matrix(n) - shift I.

    With this sign the positive eigenvalue counts of the symmetric part for
    the benchmark shifts are small, e.g. 2 for (n, shift) = (50, 0.6).
    """
    return -grcar_matrix(n) - shift * np.eye(n)


def positive_part(A):
    """Eigenvalues > 0 of Sym(A) (descending) and their eigenvectors."""
    w, V = nx.sym_eig(nx.sym(A))
    keep = w > nx.zero_threshold(w)
    return w[keep], V[:, keep]


def mixing_matrix(q, seed, min_det=0.1, max_tries=1000):
    """Seeded q-by-q matrix with unit columns and |det| >= min_det.

    Gaussian draws with normalized columns are rejected until the
    determinant bound holds. Their typical |det| decays like sqrt(q!/q^q),
    so for large q (about 10 and up) the bound is rarely met; after
    ``max_tries`` a seeded orthogonal matrix (|det| = 1) is returned instead.
    ``seed == 0`` is the sentinel for the identity.
    """
    if seed == 0:
        return np.eye(q)
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        C = rng.standard_normal((q, q))
        C /= np.linalg.norm(C, axis=0)
        if abs(np.linalg.det(C)) >= min_det:
            return C
    if q == 1:
        raise GenerationFailed(f"no mixing matrix with |det| >= {min_det}")
    return ortho_group.rvs(q, random_state=rng)


def _positive_span_pair(A, seed):
    _, Qp = positive_part(A)
    if Qp.shape[1] == 0:
        raise NoPositivePart("Sym(A) has no positive eigenvalue")
    return ControlPair(A, Qp @ mixing_matrix(Qp.shape[1], seed))


def grcar_pair(n, shift, seed=0):
    """Shifted negative Grcar A with B a mix of the positive eigenvectors, q = m."""
    return _positive_span_pair(grcar(n, shift), seed)


def cluster_spectrum(n, q, delta):
    eta = np.array([1.0, 1.0 + delta, 2.0, 2.0 + delta, 3.0, 3.0 + delta])[:q]
    return np.concatenate([np.linspace(-10.0, -1e-2, n - q), eta])


def clustered_pair(n=CLUSTER_N, q=2, delta=1e-3, seed=0):
    """Pair whose Sym(A) = X diag(lam) X^T has q clustered positive eigenvalues.

    lam holds n - q equispaced values in [-10, -0.01] followed by the first q
    of 1, 1 + delta, 2, 2 + delta, 3, 3 + delta. A is the diagonal plus twice
    the strict lower triangle of X diag(lam) X^T, so Sym(A) is exactly that
    matrix. X is drawn from ``seed``; B mixes the positive eigenvectors as in
    grcar_pair.
    """
    if not 1 <= q <= 6:
        raise InvalidInput("q must lie in [1, 6]")
    if n < q + 1:
        raise InvalidInput("need n >= q + 1")
    if not 0 < delta < 1:
        raise InvalidInput("delta must lie in (0, 1)")
    X = ortho_group.rvs(n, random_state=np.random.default_rng(seed))
    lam = cluster_spectrum(n, q, delta)
    Acal = (X * lam) @ X.T
    A = np.diag(np.diag(Acal)) + 2.0 * np.tril(Acal, -1)
    B = X[:, n - q:] @ mixing_matrix(q, seed)
    return ControlPair(A, B)


def random_pair(n, q, seed=0, feasible=True, max_tries=50):
    """Seeded random pair, feasible or not by construction.

    In a random orthonormal basis [P, N] the symmetric part is built with a
    negative definite (feasible) or indefinite (infeasible) block on N, and
    B spans P. The result is re-checked with is_dissipatable and regenerated
    on disagreement.
    """
    if not 1 <= q < n:
        raise InvalidInput("need 1 <= q < n")
    rng = np.random.default_rng([seed, n, q, int(feasible)])
    r = n - q
    for _ in range(max_tries):
        Q = ortho_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1))
        P, N = Q[:, :q], Q[:, q:]
        S11 = rng.standard_normal((q, q))
        S11 = nx.sym(S11) + np.eye(q) * rng.uniform(0.5, 2.0)
        U = ortho_group.rvs(r, random_state=rng) if r > 1 else np.ones((1, 1))
        mu = -rng.uniform(0.1, 3.0, r)
        if not feasible:
            mu[0] = rng.uniform(0.1, 1.0)
        S22 = (U * mu) @ U.T
        S12 = 0.5 * rng.standard_normal((q, r))
        S = np.block([[S11, S12], [S12.T, S22]])
        Wc = rng.standard_normal((n, n))
        A = Q @ S @ Q.T + (Wc - Wc.T) / 2.0
        C = rng.standard_normal((q, q)) + 2.0 * np.eye(q)
        B = P @ C
        try:
            pair = ControlPair(A, B)
        except InvalidInput:
            continue
        if is_dissipatable(pair).feasible == feasible:
            return pair
    raise GenerationFailed(f"random_pair(n={n}, q={q}, seed={seed}) exhausted {max_tries} tries")


@dataclass(frozen=True)
class ProblemSpec:
    family: str
    n: int = 0
    q: int = 0
    m: int = 0
    shift: float = 0.0
    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown family {self.family!r}; expected one of {FAMILIES}")

    def build(self):
        f = self.family
        if f == "example1":
            return example1()
        if f == "example1b":
            return example1b()
        if f == "grcar":
            return grcar_pair(self.n, self.shift, self.seed)
        if f == "clustered":
            return clustered_pair(self.n or CLUSTER_N, self.q, self.delta, self.seed)
        return random_pair(self.n, self.q, self.seed, feasible=f == "random_feasible")

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInput(f"unknown ProblemSpec fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def preset(name, seed=1):
    """ProblemSpecs (with the GL m to use) for a named benchmark table."""
    if name == "table1":
        return [ProblemSpec("example1", n=5, q=2, m=2)]
    if name == "table2":
        return [ProblemSpec("example1b", n=5, q=3, m=2), ProblemSpec("example1b", n=5, q=3, m=3)]
    if name == "table3":
        return [ProblemSpec("grcar", n=n, q=m, m=m, shift=s, seed=seed) for s, n, m in TABLE3_ROWS]
    if name == "table4":
        return [ProblemSpec("clustered", n=CLUSTER_N, q=q, m=q, delta=d, seed=seed)
                for q, d, _ in TABLE4_ROWS]
    raise InvalidInput(f"unknown preset {name!r}")
