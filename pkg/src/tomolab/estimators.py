"""State estimators for the four protocols.

The three discrete estimators are closed forms; the continuous
protocol has both the linear moment estimator and the full
maximum-likelihood solve over the Bloch ball.  All estimators are
"unrestricted" by default: they may return vectors outside the ball,
and :func:`apply_policy` optionally pulls them back.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import backend, _mlkernel_py
from .errors import MlConvergenceError
from .povm import TETRA_DIRECTIONS
from .sampling import CONTINUOUS_TAGS, MeasurementRecord, ProtocolTag

# Relative eigenvalue cut below which an outcome direction is treated
# as absent from the record's span.
_RANK_RTOL = 1e-12


class BallPolicy(enum.Enum):
    """What to do with estimates that fall outside the Bloch ball."""

    UNRESTRICTED = "unrestricted"
    RADIAL_CLAMP = "clamp"


@dataclass(frozen=True)
class MlConfig:
    """Stopping rules for the likelihood solver.

    ``tolerance`` bounds the gradient inf-norm at an interior solution,
    ``boundary_tolerance`` the tangent-projected gradient on the sphere.
    ``shrink`` is the backtracking factor used to keep iterates inside
    the ball and the log terms positive.
    """

    tolerance: float = 1e-12
    boundary_tolerance: float = 1e-10
    max_iterations: int = 100
    shrink: float = 0.5

    def __post_init__(self):
        if not (self.tolerance > 0.0 and self.boundary_tolerance > 0.0):
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.shrink < 1.0):
            raise ValueError("shrink factor must be in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class MlResult:
    """Outcome of one likelihood maximization."""

    r: np.ndarray
    converged: bool
    iterations: int
    residual: float
    on_boundary: bool
    log_likelihood: float


def _require(record: MeasurementRecord, tag: ProtocolTag):
    if record.protocol is not tag:
        raise ValueError(f"expected a {tag.value} record, got {record.protocol.value}")


def estimate_projective(record: MeasurementRecord) -> np.ndarray:
    """Per-axis count asymmetry (N+ - N-)/N; may leave the ball."""
    _require(record, ProtocolTag.PROJECTIVE)
    splits = record.axis_splits()
    totals = splits.sum(axis=1)
    if (totals == 0).any():
        raise ValueError("every axis needs at least one shot")
    return (splits[:, 0] - splits[:, 1]) / totals


def estimate_six(record: MeasurementRecord) -> np.ndarray:
    """Same per-axis asymmetry, with empty axes estimated as zero."""
    _require(record, ProtocolTag.SIX_OUTCOME)
    splits = record.axis_splits()
    totals = splits.sum(axis=1)
    out = np.zeros(3)
    seen = totals > 0
    out[seen] = (splits[seen, 0] - splits[seen, 1]) / totals[seen]
    return out


def estimate_tetrahedron(record: MeasurementRecord) -> np.ndarray:
    """Three times the count-weighted mean of the tetrahedron directions."""
    _require(record, ProtocolTag.TETRAHEDRON)
    n_shots = record.n_shots
    if n_shots < 1:
        raise ValueError("record is empty")
    return 3.0 * (record.counts / n_shots) @ TETRA_DIRECTIONS


def _continuous_outcomes(record: MeasurementRecord) -> np.ndarray:
    if record.protocol not in CONTINUOUS_TAGS or record.outcomes is None:
        raise ValueError("expected a continuous record")
    if record.outcomes.shape[0] < 1:
        raise ValueError("record is empty")
    return record.outcomes


def estimate_moment(record: MeasurementRecord) -> np.ndarray:
    """Unbiased linear estimator: three times the outcome mean."""
    outcomes = _continuous_outcomes(record)
    return 3.0 * outcomes.mean(axis=0)


def apply_policy(r, policy: BallPolicy) -> np.ndarray:
    """Map an estimate into the ball according to ``policy``."""
    vec = np.asarray(r, dtype=float)
    if policy is BallPolicy.UNRESTRICTED:
        return vec
    norm = float(np.linalg.norm(vec))
    if norm <= 1.0:
        return vec
    return vec / norm


def log_likelihood(r, outcomes) -> float:
    """Log of prod_k (1 + r.n_k); -inf where any factor is nonpositive."""
    t = 1.0 + np.asarray(outcomes, dtype=float) @ np.asarray(r, dtype=float)
    if np.any(t <= 0.0):
        return -np.inf
    return float(np.log(t).sum())


def log_likelihood_gradient(r, outcomes) -> np.ndarray:
    obs = np.asarray(outcomes, dtype=float)
    return obs.T @ (1.0 / (1.0 + obs @ np.asarray(r, dtype=float)))


def log_likelihood_hessian(r, outcomes) -> np.ndarray:
    obs = np.asarray(outcomes, dtype=float)
    w = 1.0 / (1.0 + obs @ np.asarray(r, dtype=float))
    return -(obs * w[:, None] ** 2).T @ obs


def _clamp_radius(vec: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm <= radius:
        return vec.copy()
    return vec * (radius / norm)


def _span_basis(outcomes: np.ndarray) -> np.ndarray:
    """Orthonormal basis (3, d) of the outcome span."""
    gram = outcomes.T @ outcomes
    eigvals, eigvecs = np.linalg.eigh(gram)
    keep = eigvals > eigvals[-1] * _RANK_RTOL
    return eigvecs[:, keep]


def ml_maximize(outcomes, config: MlConfig | None = None) -> MlResult:
    """Maximize the record's likelihood over the closed unit ball.

    Full-rank records go to the active solver backend.  When the
    outcomes span only a line or plane, the likelihood is flat along
    the orthogonal directions; the problem is solved inside the span
    and the minimum-norm maximizer is returned, which keeps the result
    deterministic and rotation-equivariant.
    """
    cfg = config or MlConfig()
    obs = np.ascontiguousarray(outcomes, dtype=float)
    if obs.ndim != 2 or obs.shape[1] != 3 or obs.shape[0] < 1:
        raise ValueError("outcomes must be a nonempty (N, 3) array")
    moment = 3.0 * obs.mean(axis=0)
    basis = _span_basis(obs)
    if basis.shape[1] == 3:
        x0 = _clamp_radius(moment, 0.9)
        x, conv, iters, res, bnd = backend.solve_full_rank(
            obs, x0, cfg.tolerance, cfg.boundary_tolerance,
            cfg.max_iterations, cfg.shrink,
        )
    else:
        reduced = obs @ basis
        x0 = _clamp_radius(basis.T @ moment, 0.9)
        sol, conv, iters, res, bnd = _mlkernel_py.solve(
            reduced, x0, cfg.tolerance, cfg.boundary_tolerance,
            cfg.max_iterations, cfg.shrink,
        )
        x = basis @ sol
        # Report the residual in the ambient frame (the gradient lies in
        # the span, so only the inf-norm direction can change).
        grad = log_likelihood_gradient(x, obs)
        if bnd:
            grad = grad - (grad @ x) * x
        res = float(np.abs(grad).max())
        conv = conv and res <= (cfg.boundary_tolerance if bnd else cfg.tolerance)
    return MlResult(
        r=np.asarray(x, dtype=float),
        converged=bool(conv),
        iterations=int(iters),
        residual=float(res),
        on_boundary=bool(bnd),
        log_likelihood=log_likelihood(x, obs),
    )


def ml_maximize_batch(outcomes, config: MlConfig | None = None):
    """Batched :func:`ml_maximize` over records stacked as (M, N, 3).

    Full-rank records are solved in one backend call; rank-deficient
    ones (measure zero for sampled data) fall back individually.
    Returns ``(estimates, converged, iterations, residuals, on_boundary)``.
    """
    cfg = config or MlConfig()
    obs = np.ascontiguousarray(outcomes, dtype=float)
    if obs.ndim != 3 or obs.shape[2] != 3 or obs.shape[1] < 1:
        raise ValueError("outcomes must be (M, N, 3) with N >= 1")
    n_records, n_shots = obs.shape[0], obs.shape[1]
    grams = np.einsum("mki,mkj->mij", obs, obs)
    eigvals = np.linalg.eigvalsh(grams)
    full_rank = eigvals[:, 0] > eigvals[:, -1] * _RANK_RTOL
    moments = 3.0 * obs.mean(axis=1)
    norms = np.linalg.norm(moments, axis=1)
    scale = np.where(norms > 0.9, 0.9 / np.maximum(norms, 1e-300), 1.0)
    x0 = moments * scale[:, None]

    out_x = np.empty((n_records, 3))
    out_conv = np.empty(n_records, dtype=bool)
    out_iters = np.empty(n_records, dtype=np.int32)
    out_res = np.empty(n_records)
    out_bnd = np.empty(n_records, dtype=bool)
    if full_rank.all():
        return backend.solve_full_rank_batch(
            obs, x0, cfg.tolerance, cfg.boundary_tolerance,
            cfg.max_iterations, cfg.shrink,
        )
    idx = np.flatnonzero(full_rank)
    if idx.size:
        xs, conv, iters, res, bnd = backend.solve_full_rank_batch(
            obs[idx], x0[idx], cfg.tolerance, cfg.boundary_tolerance,
            cfg.max_iterations, cfg.shrink,
        )
        out_x[idx], out_conv[idx], out_iters[idx] = xs, conv, iters
        out_res[idx], out_bnd[idx] = res, bnd
    for i in np.flatnonzero(~full_rank):
        result = ml_maximize(obs[i], cfg)
        out_x[i] = result.r
        out_conv[i] = result.converged
        out_iters[i] = result.iterations
        out_res[i] = result.residual
        out_bnd[i] = result.on_boundary
    return out_x, out_conv, out_iters, out_res, out_bnd


def estimate_ml_continuous(
    record: MeasurementRecord, config: MlConfig | None = None
) -> np.ndarray:
    """Maximum-likelihood estimate for a continuous record.

    Raises :class:`MlConvergenceError` (carrying the last iterate and
    residual) if the solver does not reach its tolerance.
    """
    outcomes = _continuous_outcomes(record)
    result = ml_maximize(outcomes, config)
    if not result.converged:
        raise MlConvergenceError(
            f"likelihood solver stopped at residual {result.residual:.3e} "
            f"after {result.iterations} iterations",
            last_iterate=result.r,
            residual=result.residual,
            iterations=result.iterations,
        )
    return result.r


def estimator_for(tag: ProtocolTag):
    """The estimator callable associated with a protocol tag."""
    table = {
        ProtocolTag.PROJECTIVE: estimate_projective,
        ProtocolTag.SIX_OUTCOME: estimate_six,
        ProtocolTag.TETRAHEDRON: estimate_tetrahedron,
        ProtocolTag.CONTINUOUS_MOMENT: estimate_moment,
        ProtocolTag.CONTINUOUS_ML: estimate_ml_continuous,
    }
    return table[tag]
