"""Direct constructors of dissipating feedback matrices.

Sign convention: every constructor returns K for the closed loop A - BK, i.e.
it aims at lambda_max(Sym(A - BK)) < 0.
"""

from dataclasses import dataclass

import numpy as np
import scipy.optimize as so

from . import numerics as nx
from .exceptions import (AlphaConditionViolated, AlreadyDissipative, InvalidInput,
                         NotDissipatable, NotPositiveDefinite, PreconditionViolated,
                         SingularSystem)
from .model import (ControlPair, Dissipativity, check_feedback_shape, is_dissipatable,
                    make_result, saddle_matrix, verify_dissipating)


def _require_feasible(pair):
    rep = is_dissipatable(pair)
    if not rep.feasible:
        raise NotDissipatable(
            f"A + A^T is not negative definite on ker(B^T) (margin {rep.margin:.3g})")
    return rep


def _feedback_from_basis(X, Y):
    # K = Y X^{-1}, computed as the solution of X^T K^T = Y^T
    return nx.solve_linear(X.T, Y.T).T


def spectral_feedback(pair, tol=None):
    """K = Y X^{-1} from the invariant subspace of the saddle matrix for its
    n positive eigenvalues.

    The result is strictly dissipating and has full row rank q.
    """
    _require_feasible(pair)
    n = pair.n
    S = saddle_matrix(pair)
    w, V = nx.sym_eig(S.matrix)
    if S.inertia.positive < n:
        raise NotDissipatable(f"saddle matrix has only {S.inertia.positive} positive eigenvalues")
    X, Y = V[:n, :n], V[n:, :n]
    K = _feedback_from_basis(X, Y)
    return make_result(pair, K, "spectral", tol,
                       diagnostics={"lambda_plus_min": float(w[n - 1]),
                                    "cond_X": float(np.linalg.cond(X))})


# -- classical parametrization ----------------------------------------------

@dataclass(frozen=True)
class SkeltonParams:
    """Free parameters R (q-by-q SPD) and L (q-by-n) of the classical family."""

    R: np.ndarray
    L: np.ndarray


def _phi_inverse(pair, R):
    Rinv = nx.spd_power(R, -1.0)
    return Rinv, pair.B @ Rinv @ pair.B.T - (pair.A + pair.A.T)


def skelton_params(pair, L=None, rho=None, max_halvings=60):
    """Parameters with R = rho*I; rho is halved until Phi is positive definite.

    Such an R exists exactly when the pair is dissipatable, so infeasible
    pairs are rejected before the search.
    """
    _require_feasible(pair)
    q, n = pair.q, pair.n
    L = np.zeros((q, n)) if L is None else np.asarray(L, dtype=float)
    rho = 1.0 if rho is None else float(rho)
    for _ in range(max_halvings):
        R = rho * np.eye(q)
        _, Phi_inv = _phi_inverse(pair, R)
        if nx.sym_eigvals(Phi_inv)[-1] > 0:
            return SkeltonParams(R, L)
        rho /= 2.0
    raise NotDissipatable("no R = rho*I makes Phi positive definite")


def skelton_feedback(pair, params, allow_large_L=False, tol=None):
    """Classical parametrized feedback for C = I.

    Returns K = R^{-1} B^T - R^{-1/2} L Phi^{-1/2} with
    Phi = (B R^{-1} B^T - (A + A^T))^{-1}, the negation of the textbook
    formula, so that A - BK (rather than A + BK) is dissipative.
    """
    R = nx.as_matrix(params.R, "R")
    L = nx.as_matrix(params.L, "L")
    if R.shape != (pair.q, pair.q) or L.shape != (pair.q, pair.n):
        raise InvalidInput("R must be q-by-q and L q-by-n")
    Lnorm = float(np.linalg.norm(L, 2)) if L.size else 0.0
    if Lnorm >= 1.0 and not allow_large_L:
        raise InvalidInput(f"||L||_2 = {Lnorm:.6g} >= 1; pass allow_large_L=True to override")
    Rinv, Phi_inv = _phi_inverse(pair, R)
    try:
        Phi_inv_sqrt = nx.spd_power(Phi_inv, 0.5)
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(
            "Phi = (B R^-1 B^T - (A + A^T))^-1 is not positive definite; "
            "try a larger R^-1") from exc
    R_inv_sqrt = nx.spd_power(R, -0.5)
    K = Rinv @ pair.B.T - R_inv_sqrt @ L @ Phi_inv_sqrt
    return make_result(pair, K, "skelton", tol, params={"L_norm": Lnorm})


@dataclass(frozen=True)
class CounterexampleReport:
    alpha: float
    alpha_hat: float
    Phi: np.ndarray
    B_tilde: np.ndarray
    L: np.ndarray
    L_norm: float
    matrix: np.ndarray     # -I + (L Bt^T + Bt L^T - Bt Bt^T)
    K: np.ndarray          # the corresponding feedback for A = Q/2, B = e1
    verification: object

    @property
    def is_minus_identity(self):
        return bool(np.allclose(self.matrix, -np.eye(2), rtol=0, atol=1e-12))


def skelton_counterexample(alpha, alpha_hat):
    """Dissipating feedback whose L has ||L|| possibly >= 1.

    Q = diag(alpha, -alpha), B = e1, R^{-1} = alpha_hat, L = B_tilde / 2.
    """
    alpha, alpha_hat = float(alpha), float(alpha_hat)
    if not alpha_hat > alpha > 0:
        raise InvalidInput("need alpha_hat > alpha > 0")
    Q = np.diag([alpha, -alpha])
    B = np.array([[1.0], [0.0]])
    Phi = np.diag([1.0 / (alpha_hat - alpha), 1.0 / alpha])
    Phi_sqrt = np.sqrt(Phi)
    Bt = Phi_sqrt @ B / np.sqrt(1.0 / alpha_hat)
    L = 0.5 * Bt
    matrix = -np.eye(2) + (L @ Bt.T + Bt @ L.T - Bt @ Bt.T)
    # L enters the feedback as a q-by-n matrix, hence L^T here
    K_plus = -alpha_hat * B.T + np.sqrt(alpha_hat) * L.T @ np.diag(1.0 / np.diag(Phi_sqrt))
    pair = ControlPair(Q / 2.0, B)
    K = -K_plus
    return CounterexampleReport(alpha, alpha_hat, Phi, Bt, L, float(np.linalg.norm(L, 2)),
                                matrix, K, verify_dissipating(pair, K))


# -- invariant-subspace parametrizations -----------------------------------

@dataclass(frozen=True)
class BlockParametrization:
    Q11: np.ndarray
    Q12: np.ndarray
    Q21: np.ndarray
    Q22: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray

    @property
    def lambda_plus_min(self):
        return float(np.min(self.lambda_plus))

    @property
    def lambda_minus_max(self):
        return float(np.max(np.abs(self.lambda_minus)))


def block_parametrization(pair):
    """Blocks of the eigenvector matrix of the saddle matrix, positive part first."""
    _require_feasible(pair)
    n = pair.n
    w, V = nx.sym_eig(saddle_matrix(pair).matrix)
    if not (w[n - 1] > 0 and w[n] < 0):
        raise NotDissipatable("saddle matrix does not split into n positive and q negative")
    return BlockParametrization(V[:n, :n], V[:n, n:], V[n:, :n], V[n:, n:], w[:n], w[n:])


def block_parametrized_feedback(pair, H2, tol=None):
    """K = Q21 Q11^{-1} + (Q22 - Q21 Q11^{-1} Q12) H2.

    Dissipating whenever alpha = ||H2 (I - Q12 H2)^{-1} Q11||_2^2 satisfies
    lambda+_min > alpha |lambda-_max|. H2 = 0 gives the spectral feedback.
    """
    bp = block_parametrization(pair)
    n, q = pair.n, pair.q
    H2 = nx.as_matrix(H2, "H2")
    if H2.shape != (q, n):
        raise InvalidInput(f"H2 must be {q}x{n}, got {H2.shape}")
    # H1^{-1} = (I - Q12 H2)^{-1} Q11
    H1_inv = nx.solve_linear(np.eye(n) - bp.Q12 @ H2, bp.Q11)
    alpha = float(np.linalg.norm(H2 @ H1_inv, 2) ** 2)
    if not bp.lambda_plus_min > alpha * bp.lambda_minus_max:
        raise AlphaConditionViolated(alpha, bp.lambda_plus_min, bp.lambda_minus_max)
    K0 = _feedback_from_basis(bp.Q11, bp.Q21)
    K = K0 + (bp.Q22 - K0 @ bp.Q12) @ H2
    return make_result(pair, K, "block", tol,
                       diagnostics={"alpha": alpha,
                                    "lambda_plus_min": bp.lambda_plus_min,
                                    "lambda_minus_max": bp.lambda_minus_max})


def pencil_feedback(pair, D, tol=None):
    """K = Y X^{-1} from the n positive eigenpairs of the pencil (M, D), D SPD.

    Full rank of K is not guaranteed; it is reported in the diagnostics.
    """
    n = pair.n
    M = saddle_matrix(pair).matrix
    D = nx.as_matrix(D, "D")
    if D.shape != M.shape:
        raise InvalidInput(f"D must be {M.shape}, got {D.shape}")
    w, V = nx.gen_sym_eig(M, D)
    npos = nx.inertia_of_values(w).positive
    if npos < n:
        raise NotDissipatable(f"pencil has {npos} < n = {n} positive eigenvalues")
    K = _feedback_from_basis(V[:n, :n], V[n:, :n])
    res = make_result(pair, K, "pencil", tol)
    res.diagnostics["rank"] = res.rank
    return res


# -- local search over pencils ---------------------------------------------

_PENALTY = 1e6


def _tril_to_D(theta, size, shift):
    C = np.zeros((size, size))
    C[np.tril_indices(size)] = theta
    d = np.diag_indices(size)
    C[d] = np.exp(np.clip(C[d], -50.0, 50.0))
    return C @ C.T + shift * np.eye(size)


def pencil_minimize(pair, budget=4000, seed=0, starts=5, shift=1e-8, tol=None):
    """Local minimization of ||Y X^{-1}||_F over pencils D = C C^T + shift*I.

    C is lower triangular with an exponentially parametrized diagonal. Each
    of ``starts`` Nelder-Mead runs gets ``budget`` function evaluations; the
    first start is D = I, the rest are seeded perturbations of it. Points
    where the pencil loses a positive eigenvalue are penalized by 1e6.
    """
    _require_feasible(pair)
    n, q = pair.n, pair.q
    size = n + q
    M = saddle_matrix(pair).matrix
    idx = np.tril_indices(size)
    diag_mask = idx[0] == idx[1]

    def objective(theta):
        D = _tril_to_D(theta, size, shift)
        try:
            w, V = nx.gen_sym_eig(M, D)
            if nx.inertia_of_values(w).positive < n:
                return _PENALTY
            K = _feedback_from_basis(V[:n, :n], V[n:, :n])
        except (SingularSystem, NotPositiveDefinite, np.linalg.LinAlgError):
            return _PENALTY
        if verify_dissipating(pair, K, tol).classification is not Dissipativity.STRICT:
            return _PENALTY
        return float(np.linalg.norm(K))

    rng = np.random.default_rng(seed)
    runs = []
    for k in range(starts):
        theta0 = np.zeros(idx[0].size)
        if k > 0:
            theta0 = 0.3 * rng.standard_normal(theta0.size)
            theta0[~diag_mask] *= 0.5
        opt = so.minimize(objective, theta0, method="Nelder-Mead",
                          options={"maxfev": budget, "xatol": 1e-10, "fatol": 1e-12,
                                   "adaptive": True})
        runs.append((float(opt.fun), k, opt.x, int(opt.nfev)))
    runs.sort(key=lambda r: (r[0], r[1]))
    best, k, theta, _ = runs[0]
    if best >= _PENALTY:
        raise NotDissipatable("no feasible pencil encountered")
    D = _tril_to_D(theta, size, shift)
    res = pencil_feedback(pair, D, tol)
    res.method = "pencil_min"
    res.params.update(budget=budget, seed=seed, starts=starts)
    res.diagnostics["best_start"] = k
    res.trace = [{"start": r[1], "objective": r[0], "nfev": r[3]}
                 for r in sorted(runs, key=lambda r: r[1])]
    return res


# -- weak feedback and strictness shift ------------------------------------

def shrink_to_weak(pair, K1, tol=None):
    """Scale a strict feedback down to K2 = (1 - rho0) K1 with lambda_max = 0.

    lambda_max(Sym(A - tBK1)) is convex in t, positive at t = 0 and negative
    at t = 1, so the root in (0, 1) is unique and bracketed.
    """
    K1 = check_feedback_shape(pair, K1)
    ver = verify_dissipating(pair, K1, tol)
    if ver.classification is not Dissipativity.STRICT:
        raise PreconditionViolated(f"K1 must be strictly dissipating, got {ver.classification.value}")
    if nx.sym_eigvals(nx.sym(pair.A))[0] <= 0:
        raise AlreadyDissipative("lambda_max(Sym(A)) <= 0; the zero feedback is already weak")

    def g(t):
        return nx.sym_eigvals(nx.sym(pair.A - t * (pair.B @ K1)))[0]

    t0 = so.brentq(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = make_result(pair, t0 * K1, "shrink", tol)
    res.params["rho0"] = 1.0 - t0
    return res


def shift_for_strictness(pair, delta):
    """The shifted pair (A + delta*I, B).

    A weakly dissipating K for the shifted pair gives
    lambda_max(Sym(A - BK)) = -delta on the original pair.
    """
    if delta < 0:
        raise InvalidInput("delta must be nonnegative")
    return pair.shifted(float(delta))


# -- seeded parameter draws (property suites, CLI) --------------------------

def random_skelton_params(pair, seed=0, L_norm=0.5):
    """skelton_params with a seeded L of spectral norm ``L_norm`` (< 1)."""
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((pair.q, pair.n))
    L *= L_norm / np.linalg.norm(L, 2)
    return skelton_params(pair, L=L)


def random_block_H2(pair, seed=0, max_halvings=60):
    """Seeded H2 scaled down until the alpha condition holds."""
    bp = block_parametrization(pair)
    rng = np.random.default_rng(seed)
    H2 = rng.standard_normal((pair.q, pair.n))
    H2 /= np.linalg.norm(H2, 2)
    for _ in range(max_halvings):
        try:
            H1_inv = nx.solve_linear(np.eye(pair.n) - bp.Q12 @ H2, bp.Q11)
            alpha = np.linalg.norm(H2 @ H1_inv, 2) ** 2
            if bp.lambda_plus_min > alpha * bp.lambda_minus_max:
                return H2
        except SingularSystem:
            pass
        H2 = 0.5 * H2
    return np.zeros_like(H2)


def random_spd(size, seed=0, spread=1.0):
    """Seeded SPD matrix exp(spread * S) with S symmetric Gaussian / sqrt(size)."""
    rng = np.random.default_rng(seed)
    S = nx.sym(rng.standard_normal((size, size))) * (spread / np.sqrt(size))
    w, V = np.linalg.eigh(S)
    return (V * np.exp(w)) @ V.T
