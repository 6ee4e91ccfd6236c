"""Minimal Frobenius-norm weakly dissipating feedback by a two-level method.

K = eps * E with ||E||_F = 1. For fixed eps the inner level minimizes

    F(E) = 1/2 * sum_{i <= m} lambda_i(Sym(A - eps B E))**2

(``variant="plus"`` uses max(lambda_i, 0) instead) by a projected Euler
discretization of the norm-preserving gradient flow E' = -G + <G, E> E on
rank-m matrices, where G = -sum lambda_i z_i x_i^T, z_i = B^T x_i. The outer
level drives f(eps) = F(E(eps)) to zero by a Newton iteration using
f'(eps) = -||G||_F, approaching the smallest root from the left.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .exceptions import InvalidInput, NotDissipatable, StagnatedStep
from .model import default_tol, is_dissipatable, make_result

log = logging.getLogger(__name__)

VARIANTS = ("plain", "plus")


@dataclass
class GradientInfo:
    G: np.ndarray            # q-by-n free gradient, rank <= m
    lambdas: np.ndarray      # m rightmost eigenvalues, descending
    X: np.ndarray            # their unit eigenvectors, n-by-m
    Z: np.ndarray            # B^T X
    m_plus: int              # positive eigenvalues among the m rightmost
    gap: float               # lambda_m - lambda_{m+1} (inf when m = n)


@dataclass
class PerturbationState:
    """Unit-norm rank-m direction E = Zf diag(core) Xf^T and the size eps."""

    Zf: np.ndarray   # q-by-r
    core: np.ndarray  # r singular values, ||core|| = 1
    Xf: np.ndarray   # n-by-r
    eps: float
    f_value: float = np.nan

    @property
    def E(self):
        return (self.Zf * self.core) @ self.Xf.T

    @property
    def rank(self):
        return self.core.size

    @classmethod
    def from_matrix(cls, E, m, eps, f_value=np.nan):
        Zf, s, Xf = nx.svd(E)
        r = min(m, s.size)
        s = s[:r]
        nrm = np.linalg.norm(s)
        if nrm == 0:
            raise InvalidInput("direction E is zero")
        return cls(Zf[:, :r], s / nrm, Xf[:, :r], eps, f_value)


def _check_variant(variant):
    if variant not in VARIANTS:
        raise InvalidInput(f"variant must be one of {VARIANTS}, got {variant!r}")


def functional(pair, E, eps, m, variant="plain"):
    """Value of the functional and its free gradient G at E.

    The gradient of E -> F with respect to E is eps * G.
    """
    _check_variant(variant)
    E = np.asarray(E, dtype=float)
    n = pair.n
    m = int(m)
    if not 1 <= m <= n:
        raise InvalidInput(f"m must lie in [1, n], got {m}")
    S = nx.sym(pair.A - eps * (pair.B @ E))
    k = min(m + 1, n)
    w, V = nx.top_sym_eig(S, k)
    lam, X = w[:m], V[:, :m]
    gap = float(lam[-1] - w[m]) if m < n else np.inf
    active = np.maximum(lam, 0.0) if variant == "plus" else lam
    Z = pair.B.T @ X
    G = -(Z * active) @ X.T
    return 0.5 * float(active @ active), GradientInfo(G, lam, X, Z, int(np.sum(lam > 0)), gap)


def _retract(E, m):
    Zf, s, Vt = np.linalg.svd(E, full_matrices=False)
    r = min(m, s.size)
    E = (Zf[:, :r] * s[:r]) @ Vt[:r]
    return E / np.linalg.norm(E)


def inner_step(pair, E, f, info, eps, m, variant, step_size, max_halvings=30):
    """One projected Euler step with step rejection.

    Returns ``(E_new, f_new, info_new, h)`` where ``h`` is the accepted step.
    The step is halved until f does not increase.
    """
    beta = float(np.sum(info.G * E))
    D = -info.G + beta * E
    h = step_size
    for _ in range(max_halvings + 1):
        if h < 1e-14:
            break
        En = _retract(E + h * D, m)
        fn, infon = functional(pair, En, eps, m, variant)
        if fn <= f:
            return En, fn, infon, h
        h *= 0.5
    raise StagnatedStep(f"no descent down to step size {h:.3g} (f = {f:.3g})")


@dataclass
class InnerResult:
    E: np.ndarray
    f: float
    info: GradientInfo
    iterations: int
    status: str       # "zero", "stationary", "max_iter" or "stagnated"
    step_size: float
    coalescence_events: int = 0


def inner_minimize(pair, eps, E0, m, variant="plain", tol_grad=1e-8, max_iter=5000,
                   f_zero_tol=1e-30, step_size=0.1):
    """Minimize the functional over unit-norm rank-m E for fixed eps.

    Stops when f <= f_zero_tol, when ||-G + <G, E> E||_F <= tol_grad ||G||_F,
    or after max_iter accepted steps. Steps are doubled after 5 consecutive
    acceptances.
    """
    E = _retract(np.asarray(E0, dtype=float), m)
    f, info = functional(pair, E, eps, m, variant)
    gap_tol = 1e-10 * np.linalg.norm(pair.A)
    h = step_size
    streak = 0
    events = 0
    status = "max_iter"
    it = 0
    for it in range(max_iter):
        if f <= f_zero_tol:
            status = "zero"
            break
        beta = float(np.sum(info.G * E))
        if np.linalg.norm(-info.G + beta * E) <= tol_grad * np.linalg.norm(info.G):
            status = "stationary"
            break
        try:
            E, f, info, h_used = inner_step(pair, E, f, info, eps, m, variant, h)
        except StagnatedStep:
            status = "stagnated"
            break
        if variant == "plain" and info.gap < gap_tol:
            events += 1
        if h_used < h:
            h, streak = h_used, 0
        else:
            streak += 1
            if streak >= 5:
                h, streak = 2.0 * h, 0
    else:
        it = max_iter
    return InnerResult(E, f, info, it, status, h, events)


@dataclass
class OuterTrace:
    iterates: list = field(default_factory=list)  # dicts: eps, f, fprime, inner, status, step
    converged: bool = False
    eps_star: float = np.nan


def default_m(pair, variant="plain"):
    """Positive eigenvalue count of Sym(A), plus two for the plus variant."""
    w = nx.sym_eigvals(nx.sym(pair.A))
    t = int(np.sum(w > nx.zero_threshold(w)))
    m = max(t, 1) + (2 if variant == "plus" else 0)
    return min(m, pair.n)


def initial_direction(pair, m):
    """Unit steepest-descent direction at eps -> 0+ (rank m)."""
    w, V = nx.top_sym_eig(nx.sym(pair.A), m)
    X = V[:, :m]
    G0 = -(pair.B.T @ X * w[:m]) @ X.T
    if np.linalg.norm(G0) == 0:
        G0 = pair.B.T @ X @ X.T
    return _retract(-G0, m)


def initial_eps(pair):
    """First-order underestimate lambda_max(Sym A) / ||B^T X_+||_2."""
    w, V = nx.sym_eig(nx.sym(pair.A))
    Xp = V[:, w > 0]
    denom = np.linalg.norm(pair.B.T @ Xp, 2) if Xp.size else 0.0
    if denom > 0 and w[0] > 0 and np.isfinite(w[0] / denom):
        return float(w[0] / denom)
    return 0.1 * np.linalg.norm(pair.A) / np.linalg.norm(pair.B, 2)


def _uncontrollable(pair, info, tol=1e-8):
    zn = np.linalg.norm(info.Z, axis=0)
    bad = zn <= tol * np.linalg.norm(pair.B, 2)
    return [float(v) for v in info.lambdas[bad]]


def outer_solve(pair, m=None, variant="plain", eps0=None, tol_f=None, max_outer=100,
                max_inner=5000, tol_grad=1e-8, polish=True, tol=None):
    """Two-level minimal-norm solver, GL(m) (``variant="plain"``) or GL(m)+.

    Newton steps eps += f/||G|| are taken until f <= tol_f or the step
    stalls; then the doubled step eps += 2f/||G|| is used, undone if f
    increases. Doubling earlier jumps into the region where the inner flow
    is badly conditioned and E(eps) is no longer tracked accurately. Converged means
    f <= tol_f (default 1e-12 (1 + ||A||_F^2)). With ``polish`` the iteration
    continues past tol_f until f stops decreasing, which pushes the
    coalesced eigenvalues well below the weak-classification threshold.

    Returns ``(FeedbackResult, OuterTrace)``. Non-convergence is reported in
    ``result.status``, not raised.
    """
    _check_variant(variant)
    rep = is_dissipatable(pair)
    if not rep.feasible:
        raise NotDissipatable(
            f"A + A^T is not negative definite on ker(B^T) (margin {rep.margin:.3g})")
    m = default_m(pair, variant) if m is None else int(m)
    if not 1 <= m <= pair.n:
        raise InvalidInput(f"m must lie in [1, n], got {m}")
    normA2 = np.linalg.norm(pair.A) ** 2
    tol_f = 1e-12 * (1.0 + normA2) if tol_f is None else float(tol_f)
    weak_tol = default_tol(pair) if tol is None else tol
    floor_f = 0.5 * (1e-3 * weak_tol) ** 2
    params = dict(m=m, variant=variant, tol_f=tol_f, max_outer=max_outer, max_inner=max_inner)
    name = "gl+" if variant == "plus" else "gl"
    trace = OuterTrace()

    if nx.sym_eigvals(nx.sym(pair.A))[0] <= 0:
        res = make_result(pair, np.zeros((pair.q, pair.n)), name, tol, status="trivial",
                          params=params)
        trace.converged, trace.eps_star = True, 0.0
        return res, trace

    eps = initial_eps(pair) if eps0 is None else float(eps0)
    E = initial_direction(pair, m)
    inner = inner_minimize(pair, eps, E, m, variant, tol_grad, max_inner)
    events = inner.coalescence_events
    trace.iterates.append(_record(eps, inner, "init"))
    best = (eps, inner)
    doubled = False
    stall_count = 0
    status = "max_outer"

    for _ in range(max_outer):
        f = inner.f
        if f <= tol_f and (not polish or f <= floor_f):
            status = "converged"
            break
        gnorm = np.linalg.norm(inner.info.G)
        if gnorm == 0:
            status = "zero_gradient"
            break
        step = f / gnorm
        if f <= tol_f or step < 1e-12 * eps:
            doubled = True
        kind = "double" if doubled else "newton"
        new_eps = eps + (2.0 if doubled else 1.0) * step
        new_inner = inner_minimize(pair, new_eps, inner.E, m, variant, tol_grad, max_inner)
        events += new_inner.coalescence_events
        if doubled and new_inner.f > f:
            kind = "newton(backtrack)"
            new_eps = eps + step
            new_inner = inner_minimize(pair, new_eps, inner.E, m, variant, tol_grad, max_inner)
            events += new_inner.coalescence_events
        trace.iterates.append(_record(new_eps, new_inner, kind))
        if f <= tol_f and new_inner.f > 0.5 * f:
            # polishing no longer pays off
            stall_count += 1
            if new_inner.f <= f:
                best = (new_eps, new_inner)
            if stall_count >= 2:
                status = "converged"
                eps, inner = best
                break
        else:
            stall_count = 0
            best = (new_eps, new_inner)
        eps, inner = new_eps, new_inner
    else:
        eps, inner = best
        if inner.f <= tol_f:
            status = "converged"

    if status != "converged" and inner.f <= tol_f:
        status = "converged"
    K = eps * inner.E
    trace.converged = status == "converged"
    trace.eps_star = eps
    diagnostics = {
        "f": inner.f,
        "eps": eps,
        "m_plus": inner.info.m_plus,
        "lambdas": [float(v) for v in inner.info.lambdas],
        "outer_iterations": len(trace.iterates) - 1,
        "inner_iterations": int(sum(r["inner"] for r in trace.iterates)),
        "coalescence_events": events,
    }
    if events and variant == "plain":
        log.warning("rightmost eigenvalues lost simplicity %d times; consider variant='plus'",
                    events)
        diagnostics["recommendation"] = "gl+"
    if not trace.converged:
        unc = _uncontrollable(pair, inner.info)
        diagnostics["uncontrollable_eigenvalues"] = unc
        if unc:
            log.warning("%s did not converge: eigenvalues %s among the %d rightmost are "
                        "uncontrollable (B^T x = 0)", name, unc, m)
    res = make_result(pair, K, name, tol, status=status, params=params,
                      diagnostics=diagnostics, trace=trace.iterates)
    return res, trace


def _record(eps, inner, kind):
    return {"eps": float(eps), "f": float(inner.f),
            "fprime": -float(np.linalg.norm(inner.info.G)),
            "inner": int(inner.iterations), "status": inner.status, "step": kind}


@dataclass
class LimitStructure:
    rank: int
    m_effective: int
    max_angle: float         # between row space of K and the near-null eigenspace
    z_residual: float        # ||K X - B^T X D|| / ||K|| for the best symmetric D
    rank_ok: bool
    angle_ok: bool

    @property
    def passed(self):
        return self.rank_ok and self.angle_ok


def limit_structure_check(pair, result, zero_tol=None, angle_tol=1e-5, rank_rtol=1e-6):
    """Check that K* = eps* B^T X D X^T with X spanning the zero eigenspace.

    m_effective counts the eigenvalues of Sym(A - BK*) with modulus at most
    ``zero_tol`` (default 1e-6 ||A||_F). The numerical rank of K*, relative
    threshold ``rank_rtol``, must equal it, and the row space of K* must lie
    within ``angle_tol`` of that eigenspace.
    """
    zero_tol = 1e-6 * np.linalg.norm(pair.A) if zero_tol is None else zero_tol
    K = np.asarray(result.K, dtype=float)
    w, V = nx.sym_eig(nx.sym(pair.A - pair.B @ K))
    X = V[:, np.abs(w) <= zero_tol]
    m_eff = X.shape[1]
    _, s, Vk = nx.svd(K)
    rank = int(np.sum(s > rank_rtol * s[0])) if s.size and s[0] > 0 else 0
    if m_eff == 0 or rank == 0:
        return LimitStructure(rank, m_eff, np.pi / 2, np.inf, rank == m_eff, False)
    rows = Vk[:, :rank]
    angle = float(np.max(nx.principal_angles(rows, X))) if rank <= m_eff else np.pi / 2
    Z = pair.B.T @ X
    D, *_ = np.linalg.lstsq(Z, K @ X, rcond=None)
    z_res = float(np.linalg.norm(K @ X - Z @ nx.sym(D)) / np.linalg.norm(K))
    return LimitStructure(rank, m_eff, angle, z_res, rank == m_eff, angle <= angle_tol)
