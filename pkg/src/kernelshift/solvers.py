"""Numerical engines: weighted ridge solve, box QP with one equality
constraint (SMO-style pairwise updates), damped IRLS for kernel logistic
regression, and a slow projected-subgradient primal oracle used in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .losses import LOSS_CODES, LOG2, LossSpec


class SolverError(RuntimeError):
    """A solver failed; carries the best iterate when one exists."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


# ---------------------------------------------------------------------------
# weighted kernel ridge
# ---------------------------------------------------------------------------

def _jitter_levels(K: np.ndarray):
    base = np.trace(K) / K.shape[0]
    # trace can be 0 for the all-zero Gram corner case; no jitter helps there
    if base <= 0.0:
        return
    j = 1e-12 * base
    while j <= 1e-6 * base:
        yield j
        j *= 10.0


def solve_weighted_ridge(K, w, y, n_lambda: float) -> np.ndarray:
    """Solve (W K + n*lambda I) alpha = W y by direct factorization.

    Escalates a ridge jitter on K when the factorization is singular or
    the residual check fails; errors with a condition estimate beyond
    1e-6 * trace(K)/n.
    """
    K = np.asarray(K, dtype=float)
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    if n_lambda <= 0:
        raise ValueError("n_lambda must be positive")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    n = K.shape[0]
    Wy = w * y
    tol = 1e-8 * max(np.linalg.norm(Wy), 1e-300)
    A0 = w[:, None] * K + n_lambda * np.eye(n)
    for jit in [0.0, *_jitter_levels(K)]:
        A = A0 if jit == 0.0 else A0 + jit * w[:, None] * np.eye(n)
        try:
            alpha = np.linalg.solve(A, Wy)
        except np.linalg.LinAlgError:
            continue
        if np.linalg.norm(A0 @ alpha - Wy) <= tol:
            return alpha
    cond = np.linalg.cond(A0)
    raise SolverError(
        f"weighted ridge system is numerically singular (cond ~ {cond:.3e})"
    )


# ---------------------------------------------------------------------------
# box-constrained QP with a single equality constraint
# ---------------------------------------------------------------------------

@dataclass
class BoxQP:
    """minimize 0.5 a'Qa - c'a  s.t.  lower <= a <= upper, eq_coeffs'a = eq_target."""

    Q: np.ndarray
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    eq_coeffs: np.ndarray
    eq_target: float

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.eq_coeffs = np.asarray(self.eq_coeffs, dtype=float)
        n = self.c.shape[0]
        if self.Q.shape != (n, n):
            raise ValueError("Q must be n x n")
        if np.any(self.lower > self.upper):
            raise ValueError("box is empty: lower > upper somewhere")
        if np.any(self.eq_coeffs == 0.0):
            raise ValueError("eq_coeffs entries must be nonzero")
        lo, hi = self._beta_bounds()
        if not (lo.sum() - 1e-9 <= self.eq_target <= hi.sum() + 1e-9):
            raise ValueError("equality constraint is infeasible over the box")

    def _beta_bounds(self):
        a = self.eq_coeffs
        v1 = a * self.lower
        v2 = a * self.upper
        return np.minimum(v1, v2), np.maximum(v1, v2)

    def objective(self, alpha) -> float:
        alpha = np.asarray(alpha, dtype=float)
        return float(0.5 * alpha @ self.Q @ alpha - self.c @ alpha)


@dataclass
class QPSolution:
    alpha: np.ndarray
    eq_dual: float
    kkt_residual: float
    iterations: int


@njit(cache=True)
def _smo_loop(Q, c, lo, hi, beta, g, tol, max_iter):
    """Max-violating-pair SMO on: min 0.5 b'Qb - c'b, sum(b)=const, lo<=b<=hi.

    g must equal Q @ beta - c on entry; maintained incrementally with a
    periodic full refresh. Returns (iterations, converged).
    """
    n = beta.shape[0]
    it = 0
    while it < max_iter:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for k in range(n):
            if beta[k] > lo[k] and g[k] > gmax:
                gmax = g[k]
                i = k
            if beta[k] < hi[k] and g[k] < gmin:
                gmin = g[k]
                j = k
        if i < 0 or j < 0 or gmax - gmin <= tol:
            return it, True
        denom = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
        if denom > 1e-300:
            s = (gmax - gmin) / denom
        else:
            s = np.inf
        cap_i = beta[i] - lo[i]
        cap_j = hi[j] - beta[j]
        if cap_i < s:
            s = cap_i
        if cap_j < s:
            s = cap_j
        if s == cap_i:
            beta[i] = lo[i]
        else:
            beta[i] -= s
        if s == cap_j:
            beta[j] = hi[j]
        else:
            beta[j] += s
        for k in range(n):
            g[k] += s * (Q[k, j] - Q[k, i])
        it += 1
        if it % 8192 == 0:
            for k in range(n):
                acc = -c[k]
                for l in range(n):
                    acc += Q[k, l] * beta[l]
                g[k] = acc
    return it, False


def _initial_feasible(lo, hi, target):
    beta = lo.copy()
    rest = target - beta.sum()
    for k in range(beta.shape[0]):
        if rest <= 0:
            break
        room = hi[k] - lo[k]
        step = min(room, rest)
        beta[k] += step
        rest -= step
    return beta


def _dual_and_residual(Q, c, lo, hi, beta, eq_target):
    g = Q @ beta - c
    scale = np.maximum(1.0, hi - lo)
    at_lo = beta - lo <= 1e-12 * scale
    at_hi = hi - beta <= 1e-12 * scale
    free = ~(at_lo | at_hi)
    if np.any(free):
        mu = float(np.mean(g[free]))
    else:
        hi_side = g[at_hi]
        lo_side = g[at_lo]
        lo_bound = np.max(hi_side) if hi_side.size else -np.inf
        hi_bound = np.min(lo_side) if lo_side.size else np.inf
        if np.isinf(lo_bound) and np.isinf(hi_bound):
            mu = 0.0
        elif np.isinf(lo_bound):
            mu = float(hi_bound)
        elif np.isinf(hi_bound):
            mu = float(lo_bound)
        else:
            mu = 0.5 * float(lo_bound + hi_bound)
    res = 0.0
    if np.any(free):
        res = max(res, float(np.max(np.abs(g[free] - mu))))
    if np.any(at_lo):
        res = max(res, float(np.max(mu - g[at_lo])))
    if np.any(at_hi):
        res = max(res, float(np.max(g[at_hi] - mu)))
    res = max(res, abs(float(beta.sum()) - eq_target) / max(1.0, float(np.linalg.norm(beta))))
    return mu, res


def solve_box_qp(problem: BoxQP, tol: float = 1e-6, max_iter: int = 100_000) -> QPSolution:
    """Solve a BoxQP by pairwise (SMO-style) coordinate updates.

    The equality constraint holds exactly at every iterate. eq_dual is
    reported in the convention b = (c_i - (Q alpha)_i) / a_i at free
    coordinates, which is the bias of the KQR/KSVM duals.
    """
    a = problem.eq_coeffs
    n = a.shape[0]
    # substitute beta = a * alpha so the constraint reads sum(beta) = target
    Qb = problem.Q / np.outer(a, a)
    cb = problem.c / a
    lo, hi = problem._beta_bounds()
    beta = _initial_feasible(lo, hi, problem.eq_target)
    g = Qb @ beta - cb
    iters, converged = _smo_loop(
        np.ascontiguousarray(Qb), cb, lo, hi, beta, g, float(tol), int(max_iter)
    )
    mu, res = _dual_and_residual(Qb, cb, lo, hi, beta, problem.eq_target)
    sol = QPSolution(alpha=beta / a, eq_dual=-mu, kkt_residual=res, iterations=iters)
    if not converged and res > tol:
        raise SolverError(
            f"box QP did not converge in {max_iter} pair updates "
            f"(kkt residual {res:.3e} > tol {tol:.1e})",
            solution=sol,
        )
    return sol


# ---------------------------------------------------------------------------
# IRLS / damped Newton for kernel logistic regression
# ---------------------------------------------------------------------------

def _klr_objective(K, alpha, w, y01, lambda_eff):
    f = K @ alpha
    # sum_i w_i * [log(1+exp(f_i)) - y_i f_i] + lambda_eff/2 * a'Ka
    ll = np.logaddexp(0.0, f) - y01 * f
    return float(np.sum(w * ll) + 0.5 * lambda_eff * alpha @ f), f


def irls_klr(
    K,
    w_truncated,
    w_raw,
    y01,
    lambda_eff: float,
    tol: float = 1e-9,
    max_iter: int = 100,
) -> np.ndarray:
    """Damped Newton for weighted kernel logistic regression.

    Minimizes sum_i w_i * logloss(y_i, (K alpha)_i) + lambda_eff/2 *
    alpha' K alpha with y in {0,1} and w = w_truncated (the fit weights of
    the truncated objective). w_raw is accepted for interface parity with
    the untruncated-ratio bookkeeping; the two coincide unless truncation
    is active, and the optimization itself uses w_truncated.
    """
    K = np.asarray(K, dtype=float)
    w = np.asarray(w_truncated, dtype=float)
    y01 = np.asarray(y01, dtype=float)
    if not np.all(np.isin(y01, (0.0, 1.0))):
        raise ValueError("irls_klr requires labels in {0, 1}")
    if lambda_eff <= 0:
        raise ValueError("lambda_eff must be positive")
    n = K.shape[0]
    alpha = np.zeros(n)
    obj, f = _klr_objective(K, alpha, w, y01, lambda_eff)
    eye = np.eye(n)
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-f))
        Wd = w * p * (1.0 - p)
        A = Wd[:, None] * K + lambda_eff * eye
        rhs = Wd * f + w * (y01 - p)
        try:
            alpha_new = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            A = A + 1e-12 * np.trace(K) / n * eye
            alpha_new = np.linalg.solve(A, rhs)
        step = 1.0
        direction = alpha_new - alpha
        accepted = False
        for _half in range(31):
            trial = alpha + step * direction
            obj_trial, f_trial = _klr_objective(K, trial, w, y01, lambda_eff)
            if obj_trial <= obj + 1e-14 * max(1.0, abs(obj)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise SolverError("irls_klr diverged: objective increases after 30 halvings")
        delta = float(np.max(np.abs(trial - alpha)))
        alpha, obj, f = trial, obj_trial, f_trial
        if delta <= tol:
            return alpha
    grad = K @ (w * (1.0 / (1.0 + np.exp(-f)) - y01) + lambda_eff * alpha)
    if np.linalg.norm(grad) <= max(tol, 1e-6):
        return alpha
    raise SolverError(
        f"irls_klr did not converge in {max_iter} iterations "
        f"(gradient norm {np.linalg.norm(grad):.3e})"
    )


# ---------------------------------------------------------------------------
# projected-subgradient primal oracle (testing only)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _loss_val_code(code, tau, delta, y, f):
    if code == 0:  # squared
        r = y - f
        return r * r
    if code == 1:  # check
        r = y - f
        if r <= 0.0:
            return r * (tau - 1.0)
        return r * tau
    if code == 2:  # huber
        r = abs(y - f)
        if r <= delta:
            return 0.5 * r * r
        return delta * r - 0.5 * delta * delta
    if code == 3:  # logistic
        m = y * f
        if m > 35.0:
            return np.exp(-m) / LOG2
        return np.log(1.0 + np.exp(-m)) / LOG2
    m = 1.0 - y * f  # hinge
    return m if m > 0.0 else 0.0


@njit(cache=True)
def _loss_sub_code(code, tau, delta, y, f):
    if code == 0:
        return -2.0 * (y - f)
    if code == 1:
        r = y - f
        if r > 0.0:
            return -tau
        if r < 0.0:
            return 1.0 - tau
        return 0.5 - tau
    if code == 2:
        r = y - f
        if r > delta:
            return -delta
        if r < -delta:
            return delta
        return -r
    if code == 3:
        m = y * f
        if m > 500.0:
            m = 500.0
        elif m < -500.0:
            m = -500.0
        return -y / (1.0 + np.exp(m)) / LOG2
    m = y * f
    if m < 1.0:
        return -y
    if m == 1.0:
        return -0.5 * y
    return 0.0


@njit(cache=True)
def _oracle_loop(K, w, y, code, tau, delta, lam, iters, step0):
    n = K.shape[0]
    alpha = np.zeros(n)
    best = alpha.copy()
    best_obj = np.inf
    f = np.zeros(n)
    grad_f = np.zeros(n)
    for t in range(1, iters + 1):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += K[i, j] * alpha[j]
            f[i] = acc
        obj = 0.0
        quad = 0.0
        for i in range(n):
            obj += w[i] * _loss_val_code(code, tau, delta, y[i], f[i])
            quad += alpha[i] * f[i]
        obj = obj / n + lam * quad
        if obj < best_obj:
            best_obj = obj
            for i in range(n):
                best[i] = alpha[i]
        for i in range(n):
            grad_f[i] = w[i] * _loss_sub_code(code, tau, delta, y[i], f[i]) / n + 2.0 * lam * alpha[i]
        step = step0 / np.sqrt(t)
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += K[i, j] * grad_f[j]
            alpha[i] -= step * acc
    return best, best_obj


def primal_subgradient_oracle(
    K,
    w,
    y,
    loss: LossSpec,
    lam: float,
    iters: int,
    step0: float = 1.0,
) -> np.ndarray:
    """Subgradient descent on J(a) = (1/n) sum w_i L(y_i, (Ka)_i) + lam a'Ka.

    Step size step0/sqrt(t); returns the best iterate seen. Intended only
    as an independent testing oracle, not a production solver.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    K = np.ascontiguousarray(np.asarray(K, dtype=float))
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    tau = loss.tau if loss.tau is not None else 0.0
    delta = loss.huber_delta if loss.huber_delta is not None else 0.0
    best, _ = _oracle_loop(
        K, w, y, LOSS_CODES[loss.kind], float(tau), float(delta),
        float(lam), int(iters), float(step0),
    )
    return best


def primal_objective(K, w, y, loss: LossSpec, lam: float, alpha) -> float:
    """The weighted primal objective J(a) used by fit and by the oracle."""
    from .losses import loss_value

    K = np.asarray(K, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    f = K @ alpha
    n = K.shape[0]
    return float(np.sum(np.asarray(w) * loss_value(loss, y, f)) / n + lam * alpha @ f)
