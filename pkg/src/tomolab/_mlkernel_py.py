"""Pure-numpy Newton solver for the ball-constrained log-likelihood.

Maximizes sum_k log(1 + x.m_k) over the closed unit ball, for unit rows
m_k of any dimension (1-3).  The compiled extension ``_mlkernel``
implements the identical algorithm for the hot full-rank 3-d case; this
module is the fallback and also serves the rank-deficient records.

Interior iterates use damped Newton with steps capped at the sphere;
once an iterate lands on the sphere the solver switches to a tangent
Newton iteration on the sphere itself.  A boundary point with an
outward (nonnegative) multiplier is a certified global maximum of the
concave objective; an inward multiplier sends the iteration back to the
interior.
"""

from __future__ import annotations

import numpy as np

# Treat |x| within this slack of 1 as "on the sphere".
_EDGE = 1e-12
# Multiplier more negative than this at a boundary stationary point
# means the true maximizer is interior.
_LAMBDA_SLACK = 1e-9
_MAX_PHASE_SWITCHES = 4


def _loglik(obs: np.ndarray, x: np.ndarray) -> float:
    t = 1.0 + obs @ x
    if np.any(t <= 0.0):
        return -np.inf
    return float(np.log(t).sum())


def _grad(obs: np.ndarray, x: np.ndarray) -> np.ndarray:
    return obs.T @ (1.0 / (1.0 + obs @ x))


def _hess(obs: np.ndarray, x: np.ndarray) -> np.ndarray:
    w = 1.0 / (1.0 + obs @ x)
    return -(obs * w[:, None] ** 2).T @ obs


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Ascent direction -H^{-1} g, or the gradient when -H is not
    positive definite (Cholesky check, with a ridge retry)."""
    neg = -hess
    ridge = 0.0
    scale = max(float(np.trace(neg)), 1.0)
    identity = np.eye(len(grad))
    for _ in range(3):
        try:
            chol = np.linalg.cholesky(neg + ridge * identity)
        except np.linalg.LinAlgError:
            ridge = max(10.0 * ridge, 1e-12 * scale)
            continue
        direction = np.linalg.solve(chol.T, np.linalg.solve(chol, grad))
        if np.all(np.isfinite(direction)):
            return direction
        ridge = max(10.0 * ridge, 1e-12 * scale)
    return grad.copy()


def _step_to_sphere(x: np.ndarray, p: np.ndarray) -> float:
    """Largest alpha with |x + alpha p| <= 1 (assumes |x| <= 1)."""
    pp = float(p @ p)
    if pp == 0.0:
        return np.inf
    xp = float(x @ p)
    xx = float(x @ x)
    disc = xp * xp + pp * (1.0 - xx)
    if disc <= 0.0:
        return 0.0
    return (-xp + np.sqrt(disc)) / pp


def _backtrack(obs, x, direction, alpha0, shrink, current):
    """Shrink ``alpha`` until the log-likelihood does not decrease."""
    alpha = alpha0
    floor = current - 1e-14 * (1.0 + abs(current))
    while alpha > 1e-18:
        candidate = x + alpha * direction
        if _loglik(obs, candidate) >= floor:
            return candidate, alpha
        alpha *= shrink
    return None, 0.0


def _tangent_basis(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to unit ``x``."""
    d = x.shape[0]
    # Householder reflection mapping e_1 to x: remaining columns span x-perp.
    v = x.copy()
    v[0] += 1.0 if x[0] >= 0.0 else -1.0
    house = np.eye(d) - 2.0 * np.outer(v, v) / (v @ v)
    basis = house[:, 1:]
    return -basis if x[0] >= 0.0 else basis


def solve(
    obs: np.ndarray,
    x0: np.ndarray,
    tol: float,
    boundary_tol: float,
    max_iter: int,
    shrink: float,
) -> tuple[np.ndarray, bool, int, float, bool]:
    """Maximize the record's log-likelihood over the closed unit ball.

    Returns ``(x, converged, iterations, residual, on_boundary)``; the
    residual is the gradient inf-norm (interior) or the tangent-projected
    gradient inf-norm (boundary).
    """
    obs = np.ascontiguousarray(obs, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    iters = 0
    switches = 0
    on_sphere = False
    while iters < max_iter and switches < _MAX_PHASE_SWITCHES:
        if not on_sphere:
            grad = _grad(obs, x)
            residual = float(np.abs(grad).max())
            norm = float(np.linalg.norm(x))
            if residual <= tol and norm < 1.0 - _EDGE:
                return x, True, iters, residual, False
            if norm >= 1.0 - _EDGE:
                x /= norm
                on_sphere = True
                switches += 1
                continue
            iters += 1
            direction = _newton_direction(_hess(obs, x), grad)
            alpha0 = min(1.0, _step_to_sphere(x, direction))
            candidate, alpha = _backtrack(
                obs, x, direction, alpha0, shrink, _loglik(obs, x)
            )
            if candidate is None:
                # No uphill step left; classify from where we stand.
                return x, residual <= tol, iters, residual, False
            x = candidate
        else:
            grad = _grad(obs, x)
            lam = float(grad @ x)
            tangential = grad - lam * x
            residual = float(np.abs(tangential).max()) if x.shape[0] > 1 else 0.0
            if residual <= boundary_tol:
                if lam >= -_LAMBDA_SLACK:
                    return x, True, iters, residual, True
                # Gradient points inward: the maximizer is interior.
                x = (1.0 - 1e-3) * x
                on_sphere = False
                switches += 1
                continue
            iters += 1
            basis = _tangent_basis(x)
            riemann_hess = basis.T @ _hess(obs, x) @ basis - lam * np.eye(
                basis.shape[1]
            )
            coords = _newton_direction(riemann_hess, basis.T @ grad)
            direction = basis @ coords
            current = _loglik(obs, x)
            alpha = 1.0
            moved = False
            while alpha > 1e-18:
                candidate = x + alpha * direction
                candidate /= np.linalg.norm(candidate)
                if _loglik(obs, candidate) >= current - 1e-14 * (1.0 + abs(current)):
                    x = candidate
                    moved = True
                    break
                alpha *= shrink
            if not moved:
                return x, residual <= boundary_tol, iters, residual, True
    grad = _grad(obs, x)
    if on_sphere:
        residual = float(np.abs(grad - (grad @ x) * x).max())
    else:
        residual = float(np.abs(grad).max())
    return x, False, iters, residual, on_sphere


def solve_batch(
    obs: np.ndarray,
    x0: np.ndarray,
    tol: float,
    boundary_tol: float,
    max_iter: int,
    shrink: float,
):
    """Vector of :func:`solve` calls over records stacked as (M, N, 3)."""
    obs = np.ascontiguousarray(obs, dtype=float)
    n_records = obs.shape[0]
    out_x = np.empty((n_records, obs.shape[2]))
    out_conv = np.empty(n_records, dtype=bool)
    out_iters = np.empty(n_records, dtype=np.int32)
    out_res = np.empty(n_records)
    out_boundary = np.empty(n_records, dtype=bool)
    for i in range(n_records):
        x, conv, iters, res, bnd = solve(
            obs[i], x0[i], tol, boundary_tol, max_iter, shrink
        )
        out_x[i] = x
        out_conv[i] = conv
        out_iters[i] = iters
        out_res[i] = res
        out_boundary[i] = bnd
    return out_x, out_conv, out_iters, out_res, out_boundary
