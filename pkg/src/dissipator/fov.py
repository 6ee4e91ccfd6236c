"""Field of values W(M) = {x* M x : ||x|| = 1}: abscissa, boundary, flat segment.

Hermitian eigenproblems are solved through the real symmetric embedding
of size 2n, so only real LAPACK drivers are used.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .exceptions import InvalidInput, NoFlatSegment
from .model import Dissipativity, check_feedback_shape, default_tol, verify_dissipating

DEFAULT_ANGLES = 720


def numerical_abscissa(M):
    """mu_2(M) = lambda_max(Sym M), the rightmost extent of W(M)."""
    M = nx.as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise InvalidInput(f"M must be square, got {M.shape}")
    return float(nx.sym_eigvals(nx.sym(M))[0])


def embedding(S, W, theta):
    """Real form of H(theta) = cos(theta) S + i sin(theta) W."""
    c, s = np.cos(theta), np.sin(theta)
    return np.block([[c * S, -s * W], [s * W, c * S]])


@dataclass
class FovBoundary:
    theta: np.ndarray
    points: np.ndarray            # complex, one per angle
    support: np.ndarray           # lambda_max(H(theta))
    abscissa: float
    flat_segment: float = None    # sigma, when known
    meta: dict = field(default_factory=dict)

    @property
    def re(self):
        return self.points.real

    @property
    def im(self):
        return self.points.imag

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "re", "im"])
        for t, z in zip(self.theta, self.points):
            w.writerow([f"{t:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def sidecar(self):
        return {"abscissa": self.abscissa, "flat_segment_sigma": self.flat_segment,
                "num_angles": int(self.theta.size), **self.meta}

    def to_json(self, path=None):
        data = {"theta": self.theta.tolist(), "re": self.re.tolist(), "im": self.im.tolist(),
                **self.sidecar()}
        text = json.dumps(data, indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _cluster_point(M, vecs):
    # vecs: 2n-by-2k real basis of a doubled eigenvalue cluster
    n = M.shape[0]
    X = vecs[:n] + 1j * vecs[n:]
    k = max(vecs.shape[1] // 2, 1)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    P = U[:, :k]
    return complex(np.trace(P.conj().T @ M @ P) / k)


def fov_boundary(M, num_angles=DEFAULT_ANGLES, cluster_tol=None):
    """Sample the boundary of W(M) on a uniform angle grid over [0, 2 pi).

    For each theta the top eigenvector x of H(theta) = Herm(e^{i theta} M)
    gives the boundary point x* M x, which lies on the supporting line
    re(e^{i theta} z) = lambda_max(H(theta)). When the top eigenvalue is
    multiple the boundary has a straight piece there and the midpoint of
    that piece is emitted. ``num_angles`` is rounded up to an even number so
    that theta = pi is on the grid together with theta = 0.
    """
    M = nx.as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise InvalidInput(f"M must be square, got {M.shape}")
    if num_angles < 8:
        raise InvalidInput("num_angles must be at least 8")
    num_angles = int(num_angles) + int(num_angles) % 2
    n = M.shape[0]
    S, W = nx.sym(M), nx.skew(M)
    scale = 1.0 + np.linalg.norm(M)
    ctol = 1e-9 * scale if cluster_tol is None else cluster_tol
    theta = 2.0 * np.pi * np.arange(num_angles) / num_angles
    pts = np.empty(num_angles, dtype=complex)
    sup = np.empty(num_angles)
    for j, t in enumerate(theta):
        w, V = np.linalg.eigh(embedding(S, W, t))
        top = w[-1]
        sup[j] = top
        k = int(np.sum(w >= top - ctol))
        if k <= 2:
            x = V[:n, -1] + 1j * V[n:, -1]
            x /= np.linalg.norm(x)
            pts[j] = complex(x.conj() @ M @ x)
        else:
            pts[j] = _cluster_point(M, V[:, -k:])
    return FovBoundary(theta, pts, sup, float(sup[0]))


@dataclass(frozen=True)
class FlatSegment:
    sigma: float
    multiplicity: int
    max_excess: float = None   # max over boundary points with re >= -1e-6 of |im| - sigma

    def __float__(self):
        return self.sigma


def flat_segment(pair, K, tol=None, check=True, num_angles=DEFAULT_ANGLES):
    """Half-length sigma of the vertical piece [-i sigma, i sigma] of the
    boundary of W(A - BK) for a weakly dissipating K.

    sigma is the largest singular value of V^T Skew(A - BK) V where V spans
    the near-null eigenspace of Sym(A - BK). With ``check`` the sampled
    boundary is compared against sigma.
    """
    K = check_feedback_shape(pair, K)
    tol = default_tol(pair) if tol is None else tol
    ver = verify_dissipating(pair, K, tol)
    if ver.classification is not Dissipativity.WEAK:
        raise NoFlatSegment(f"K is {ver.classification.value}, not weakly dissipating")
    M = pair.closed_loop(K)
    w, V = nx.sym_eig(nx.sym(M))
    V0 = V[:, np.abs(w) <= tol]
    mult = V0.shape[1]
    if mult < 2:
        raise NoFlatSegment(f"near-null eigenspace has dimension {mult}, need at least 2")
    sigma = float(np.linalg.norm(V0.T @ nx.skew(M) @ V0, 2))
    excess = None
    if check:
        b = fov_boundary(M, num_angles)
        sel = b.re >= -1e-6
        excess = float(np.max(np.abs(b.im[sel])) - sigma) if np.any(sel) else -np.inf
        if excess > 1e-6:
            raise NoFlatSegment(
                f"boundary reaches |im| = sigma + {excess:.3g} on the imaginary axis")
    return FlatSegment(sigma, mult, excess)
