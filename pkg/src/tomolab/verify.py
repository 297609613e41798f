"""Self-contained verification suites behind ``tomolab verify``.

Each suite checks one family of invariants against an independent
reference: algebraic completeness of the POVMs, rotation covariance of
the continuous measurement, finite-difference agreement of the
likelihood derivatives, exhaustive small-ensemble enumeration of the
closed-form moments, and distribution tests of the samplers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .analysis import analytic_mean, analytic_variance
from .bloch import AxisAngle, conjugate_pure_paths
from .estimators import (
    estimate_projective,
    estimate_six,
    estimate_tetrahedron,
    log_likelihood_gradient,
    log_likelihood_hessian,
)
from .povm import (
    DiscretePovm,
    SphericalCap,
    equivariance_residual,
    outcome_probabilities,
    projective_triplet,
    six_outcome_povm,
    tetrahedron_povm,
)
from .sampling import (
    MeasurementRecord,
    ProtocolTag,
    SeedSpec,
    sample_continuous,
    sample_discrete,
)

DISCRETE_TAGS = (
    ProtocolTag.PROJECTIVE,
    ProtocolTag.SIX_OUTCOME,
    ProtocolTag.TETRAHEDRON,
)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


def random_state(rng: np.random.Generator, radius: float | None = None) -> np.ndarray:
    """Random Bloch vector, uniform over the ball unless radius is fixed."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    if radius is None:
        radius = rng.random() ** (1.0 / 3.0)
    return radius * direction


def random_rotation(rng: np.random.Generator) -> AxisAngle:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return AxisAngle(axis, rng.uniform(0.0, 2.0 * np.pi))


# ---------------------------------------------------------------------------
# Exhaustive enumeration of discrete-protocol moments (the oracle the
# closed forms are checked against; no sampling involved).

def _compositions(total: int, cells: int):
    if cells == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, cells - 1):
            yield (head,) + tail


def _multinomial_pmf(counts, probs) -> float:
    coeff = math.factorial(sum(counts))
    for c in counts:
        coeff //= math.factorial(c)
    return float(coeff) * float(np.prod(np.asarray(probs) ** np.asarray(counts)))


def exact_discrete_moments(
    tag: ProtocolTag, r0, n_shots: int, allocation=None
) -> tuple[np.ndarray, float]:
    """Exact estimator mean and HS variance by enumerating all outcomes.

    Sums the estimator over every count tuple weighted by its
    multinomial (or per-axis binomial) probability; feasible for small
    shot counts, and entirely independent of the closed-form formulas.
    """
    r0 = np.asarray(r0, dtype=float)
    mean = np.zeros(3)
    second = 0.0
    if tag is ProtocolTag.PROJECTIVE:
        triplet = projective_triplet(allocation)
        per_axis = triplet.split_shots(n_shots)
        axis_probs = triplet.axis_probabilities(r0)
        for nx in range(per_axis[0] + 1):
            px = (
                math.comb(per_axis[0], nx)
                * axis_probs[0, 0] ** nx
                * axis_probs[0, 1] ** (per_axis[0] - nx)
            )
            for ny in range(per_axis[1] + 1):
                py = (
                    math.comb(per_axis[1], ny)
                    * axis_probs[1, 0] ** ny
                    * axis_probs[1, 1] ** (per_axis[1] - ny)
                )
                for nz in range(per_axis[2] + 1):
                    pz = (
                        math.comb(per_axis[2], nz)
                        * axis_probs[2, 0] ** nz
                        * axis_probs[2, 1] ** (per_axis[2] - nz)
                    )
                    counts = np.array(
                        [
                            nx, per_axis[0] - nx,
                            ny, per_axis[1] - ny,
                            nz, per_axis[2] - nz,
                        ],
                        dtype=np.int64,
                    )
                    record = MeasurementRecord(tag, counts=counts)
                    est = estimate_projective(record)
                    weight = px * py * pz
                    mean += weight * est
                    second += weight * float(est @ est)
        return mean, 0.5 * (second - float(mean @ mean))

    if tag is ProtocolTag.SIX_OUTCOME:
        povm, estimator = six_outcome_povm(), estimate_six
    elif tag is ProtocolTag.TETRAHEDRON:
        povm, estimator = tetrahedron_povm(), estimate_tetrahedron
    else:
        raise ValueError(f"enumeration applies to discrete protocols, not {tag}")
    probs = outcome_probabilities(povm, r0)
    for counts in _compositions(n_shots, len(povm)):
        weight = _multinomial_pmf(counts, probs)
        record = MeasurementRecord(tag, counts=np.array(counts, dtype=np.int64))
        est = estimator(record)
        mean += weight * est
        second += weight * float(est @ est)
    return mean, 0.5 * (second - float(mean @ mean))


# ---------------------------------------------------------------------------
# Rejection sampler: kept solely as an independent reference for the
# production inverse-CDF sphere sampler.

def rejection_sample_continuous(r0, n_shots: int, seed: SeedSpec) -> np.ndarray:
    """Sphere points with density 1 + r0.s via rejection (envelope 2)."""
    r0 = np.asarray(r0, dtype=float)
    rng = seed.generator()
    out = np.empty((n_shots, 3))
    filled = 0
    while filled < n_shots:
        chunk = max(2 * (n_shots - filled), 64)
        raw = rng.normal(size=(chunk, 3))
        raw /= np.linalg.norm(raw, axis=1)[:, None]
        accept = rng.random(chunk) < 0.5 * (1.0 + raw @ r0)
        kept = raw[accept]
        take = min(len(kept), n_shots - filled)
        out[filled : filled + take] = kept[:take]
        filled += take
    return out


# ---------------------------------------------------------------------------
# Suites.

def completeness_suite(
    n_states: int = 1000, seed: int = 20260810, povms=None
) -> SuiteResult:
    """POVM completeness, probability normalization, projective refinement."""
    rng = np.random.default_rng(seed)
    if povms is None:
        povms = (six_outcome_povm(), tetrahedron_povm())
    worst = 0.0
    for povm in povms:
        worst = max(worst, povm.completeness_gap())
        for _ in range(n_states):
            probs = outcome_probabilities(povm, random_state(rng))
            worst = max(worst, abs(float(probs.sum()) - 1.0))
            if probs.min() < -1e-15 or probs.max() > 1.0 + 1e-15:
                worst = max(worst, 1.0)
    triplet = projective_triplet()
    six = six_outcome_povm()
    for axis in range(3):
        for column, sign in ((0, 1), (1, -1)):
            element = six.elements[2 * axis + column].matrix()
            refined = triplet.projector(axis, sign) / 3.0
            worst = max(worst, float(np.abs(element - refined).max()))
    passed = worst <= 1e-12
    return SuiteResult("completeness", passed, f"max deviation {worst:.3e}")


def equivariance_suite(
    n_pairs: int = 500, n_conjugations: int = 1000, seed: int = 20260810
) -> SuiteResult:
    """Covariance of cap operators and agreement of conjugation paths."""
    rng = np.random.default_rng(seed)
    worst_cap = 0.0
    for _ in range(n_pairs):
        cap = SphericalCap(random_state(rng, radius=1.0), rng.uniform(0.0, np.pi))
        rotation = random_rotation(rng)
        alpha = rng.random()
        worst_cap = max(
            worst_cap,
            equivariance_residual(cap, rotation),
            equivariance_residual(cap, rotation, alpha=alpha),
        )
    worst_paths = 0.0
    for _ in range(n_conjugations):
        s = random_state(rng, radius=1.0)
        generator = rng.normal(size=3) * rng.uniform(0.0, np.pi)
        via_unitary, via_rotation = conjugate_pure_paths(s, generator)
        worst_paths = max(worst_paths, float(np.abs(via_unitary - via_rotation).max()))
    passed = worst_cap <= 1e-10 and worst_paths <= 1e-10
    return SuiteResult(
        "equivariance",
        passed,
        f"cap residual {worst_cap:.3e}, conjugation gap {worst_paths:.3e}",
    )


def gradient_suite(n_points: int = 100, seed: int = 20260810) -> SuiteResult:
    """Analytic likelihood derivatives vs central finite differences."""
    rng = np.random.default_rng(seed)
    step = 1e-5
    worst = 0.0
    for _ in range(n_points):
        n_shots = int(rng.integers(3, 40))
        outcomes = rng.normal(size=(n_shots, 3))
        outcomes /= np.linalg.norm(outcomes, axis=1)[:, None]
        point = random_state(rng, radius=rng.uniform(0.0, 0.8))

        def loglik(r):
            return float(np.log(1.0 + outcomes @ r).sum())

        grad = log_likelihood_gradient(point, outcomes)
        hess = log_likelihood_hessian(point, outcomes)
        for k in range(3):
            offset = np.zeros(3)
            offset[k] = step
            fd_grad = (loglik(point + offset) - loglik(point - offset)) / (2 * step)
            scale = max(1.0, abs(grad[k]))
            worst = max(worst, abs(fd_grad - grad[k]) / scale)
            fd_hess_col = (
                log_likelihood_gradient(point + offset, outcomes)
                - log_likelihood_gradient(point - offset, outcomes)
            ) / (2 * step)
            col_scale = np.maximum(1.0, np.abs(hess[:, k]))
            worst = max(worst, float(np.max(np.abs(fd_hess_col - hess[:, k]) / col_scale)))
    passed = worst <= 1e-5
    return SuiteResult("gradient-check", passed, f"max relative gap {worst:.3e}")


def enumeration_suite(
    max_shots: int = 6, n_states: int = 20, seed: int = 20260810
) -> SuiteResult:
    """Closed-form moments vs exhaustive enumeration, all discrete protocols."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        r0 = random_state(rng)
        for n_shots in range(1, max_shots + 1):
            for tag in (ProtocolTag.SIX_OUTCOME, ProtocolTag.TETRAHEDRON):
                mean, variance = exact_discrete_moments(tag, r0, n_shots)
                worst = max(
                    worst,
                    float(np.abs(mean - analytic_mean(tag, r0, n_shots)).max()),
                    abs(variance - analytic_variance(tag, r0, n_shots)),
                )
        for allocation in ((1, 1, 1), (2, 1, 1), (1, 2, 1), (2, 2, 2), (2, 1, 2)):
            total = sum(allocation)
            mean, variance = exact_discrete_moments(
                ProtocolTag.PROJECTIVE, r0, total, allocation
            )
            worst = max(
                worst,
                float(
                    np.abs(mean - analytic_mean(ProtocolTag.PROJECTIVE, r0, total)).max()
                ),
                abs(
                    variance
                    - analytic_variance(ProtocolTag.PROJECTIVE, r0, total, allocation)
                ),
            )
    passed = worst <= 1e-12
    return SuiteResult("enumeration-oracle", passed, f"max deviation {worst:.3e}")


def _chi_square_pvalue(observed, expected) -> float:
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    keep = expected > 0
    stat = float(((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum())
    dof = int(keep.sum()) - 1
    zero_ok = np.all(observed[~keep] == 0)
    if not zero_ok:
        return 0.0
    return float(scipy_stats.chi2.sf(stat, dof))


def sampler_suite(
    draws: int = 100_000,
    states_per_protocol: int = 10,
    significance: float = 1e-3,
    seed: int = 20260810,
    master_seed: int = 424242,
) -> SuiteResult:
    """Goodness-of-fit of every sampler against its exact distribution."""
    rng = np.random.default_rng(seed)
    min_p = 1.0
    stream = 0
    for tag in DISCRETE_TAGS:
        for _ in range(states_per_protocol):
            r0 = random_state(rng)
            spec = SeedSpec(master_seed, stream)
            stream += 1
            total = 3 * (draws // 3)
            if tag is ProtocolTag.PROJECTIVE:
                triplet = projective_triplet()
                record = sample_discrete(triplet, r0, total, spec)
                per_axis = triplet.split_shots(total)
                probs = triplet.axis_probabilities(r0)
                expected = np.concatenate(
                    [per_axis[a] * probs[a] for a in range(3)]
                )
                # Independent per-axis binomials: three 2-cell tests pooled.
                stat = 0.0
                dof = 0
                for axis in range(3):
                    obs = record.counts[2 * axis : 2 * axis + 2].astype(float)
                    exp = expected[2 * axis : 2 * axis + 2]
                    keep = exp > 0
                    if not np.all(obs[~keep] == 0):
                        stat = np.inf
                    stat += float(((obs[keep] - exp[keep]) ** 2 / exp[keep]).sum())
                    dof += int(keep.sum()) - 1
                pvalue = float(scipy_stats.chi2.sf(stat, max(dof, 1)))
            else:
                povm = (
                    six_outcome_povm()
                    if tag is ProtocolTag.SIX_OUTCOME
                    else tetrahedron_povm()
                )
                record = sample_discrete(povm, r0, total, spec)
                expected = total * outcome_probabilities(povm, r0)
                pvalue = _chi_square_pvalue(record.counts, expected)
            min_p = min(min_p, pvalue)

    # Continuous sampler: polar-cosine marginal and azimuth uniformity.
    for radius in (0.0, 0.3, 0.9, 1.0):
        direction = np.array([0.0, 0.0, 1.0]) if radius == 0.0 else random_state(
            rng, radius=1.0
        )
        r0 = radius * direction
        spec = SeedSpec(master_seed, stream)
        stream += 1
        record = sample_continuous(r0, draws, spec)
        axis = direction
        t = record.outcomes @ axis

        def marginal_cdf(x, r=radius):
            return (x + 1.0) / 2.0 + r * (x * x - 1.0) / 4.0

        min_p = min(min_p, float(scipy_stats.kstest(t, marginal_cdf).pvalue))
        e1 = np.zeros(3)
        e1[int(np.argmin(np.abs(axis)))] = 1.0
        e1 = np.cross(e1, axis)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(axis, e1)
        azimuth = np.arctan2(record.outcomes @ e2, record.outcomes @ e1)
        min_p = min(
            min_p,
            float(
                scipy_stats.kstest(
                    azimuth, scipy_stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf
                ).pvalue
            ),
        )
    passed = min_p >= significance
    return SuiteResult("sampler-distribution", passed, f"min p-value {min_p:.2e}")


QUICK_SETTINGS = dict(
    completeness=dict(n_states=200),
    equivariance=dict(n_pairs=60, n_conjugations=150),
    gradient=dict(n_points=25),
    enumeration=dict(max_shots=4, n_states=5),
    sampler=dict(draws=20_000, states_per_protocol=3),
)


def run_suites(level: str = "quick") -> list[SuiteResult]:
    """All five suites at the requested size; 'full' runs the complete
    invariant set, 'quick' finishes in seconds."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    kwargs = QUICK_SETTINGS if level == "quick" else {}
    return [
        completeness_suite(**kwargs.get("completeness", {})),
        equivariance_suite(**kwargs.get("equivariance", {})),
        gradient_suite(**kwargs.get("gradient", {})),
        enumeration_suite(**kwargs.get("enumeration", {})),
        sampler_suite(**kwargs.get("sampler", {})),
    ]
