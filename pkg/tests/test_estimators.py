import numpy as np
import pytest

from tomolab.bloch import AxisAngle, rotate
from tomolab.errors import MlConvergenceError
from tomolab.estimators import (
    BallPolicy,
    MlConfig,
    apply_policy,
    estimate_ml_continuous,
    estimate_moment,
    estimate_projective,
    estimate_six,
    estimate_tetrahedron,
    log_likelihood,
    log_likelihood_gradient,
    log_likelihood_hessian,
    ml_maximize,
)
from tomolab.povm import TETRA_DIRECTIONS
from tomolab.sampling import MeasurementRecord, ProtocolTag, SeedSpec, sample_continuous

from conftest import random_ball_vector


def _triplet_record(counts):
    return MeasurementRecord(ProtocolTag.PROJECTIVE, counts=np.array(counts))


def _six_record(counts):
    return MeasurementRecord(ProtocolTag.SIX_OUTCOME, counts=np.array(counts))


def _tetra_record(counts):
    return MeasurementRecord(ProtocolTag.TETRAHEDRON, counts=np.array(counts))


def _continuous_record(outcomes):
    return MeasurementRecord(
        ProtocolTag.CONTINUOUS_MOMENT, outcomes=np.asarray(outcomes, dtype=float)
    )


class TestProjective:
    def test_balanced_counts_give_zero(self):
        rec = _triplet_record([5, 5, 7, 7, 2, 2])
        assert np.array_equal(estimate_projective(rec), np.zeros(3))

    def test_all_plus_leaves_ball(self):
        rec = _triplet_record([4, 0, 4, 0, 4, 0])
        est = estimate_projective(rec)
        assert np.array_equal(est, np.ones(3))
        assert np.linalg.norm(est) > 1.0

    def test_component_arithmetic(self):
        rec = _triplet_record([1, 1, 1, 1, 7, 3])
        assert estimate_projective(rec)[2] == pytest.approx(0.4)

    def test_empty_axis_is_an_error(self):
        with pytest.raises(ValueError, match="axis"):
            estimate_projective(_triplet_record([3, 2, 0, 0, 1, 1]))


class TestSixOutcome:
    def test_empty_record_gives_zero(self):
        rec = _six_record([0, 0, 0, 0, 0, 0])
        assert np.array_equal(estimate_six(rec), np.zeros(3))

    def test_single_outcome(self):
        rec = _six_record([0, 0, 0, 0, 1, 0])
        assert np.array_equal(estimate_six(rec), [0.0, 0.0, 1.0])

    def test_zero_convention_per_axis(self):
        rec = _six_record([2, 1, 0, 0, 3, 3])
        assert np.allclose(estimate_six(rec), [1.0 / 3.0, 0.0, 0.0])


class TestTetrahedron:
    def test_equal_counts_give_zero(self):
        est = estimate_tetrahedron(_tetra_record([3, 3, 3, 3]))
        assert np.abs(est).max() <= 1e-15

    def test_single_vertex_extreme(self):
        est = estimate_tetrahedron(_tetra_record([5, 0, 0, 0]))
        assert np.allclose(est, 3.0 * TETRA_DIRECTIONS[0])
        assert np.linalg.norm(est) == pytest.approx(3.0)

    def test_mixed_counts(self):
        est = estimate_tetrahedron(_tetra_record([2, 1, 1, 0]))
        expected = 3.0 * (
            2 * TETRA_DIRECTIONS[0] + TETRA_DIRECTIONS[1] + TETRA_DIRECTIONS[2]
        ) / 4.0
        assert np.allclose(est, expected, atol=1e-15)

    def test_empty_record_is_an_error(self):
        with pytest.raises(ValueError):
            estimate_tetrahedron(_tetra_record([0, 0, 0, 0]))

    def test_satisfies_stationarity_inside_ball(self, rng):
        # weighted gradient equation at the closed-form solution
        checked = 0
        for _ in range(200):
            counts = rng.multinomial(30, np.full(4, 0.25))
            est = estimate_tetrahedron(_tetra_record(counts))
            factors = 1.0 + TETRA_DIRECTIONS @ est
            if np.linalg.norm(est) >= 1.0 or factors.min() <= 0:
                continue
            stationarity = (counts / factors) @ TETRA_DIRECTIONS
            assert np.abs(stationarity).max() <= 1e-10
            checked += 1
        assert checked > 50


class TestMoment:
    def test_single_outcome_triples(self):
        n = np.array([[0.6, 0.8, 0.0]])
        est = estimate_moment(_continuous_record(n))
        assert np.allclose(est, 3.0 * n[0])
        assert np.linalg.norm(est) == pytest.approx(3.0)

    def test_antipodal_cancel(self):
        n = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        assert np.array_equal(estimate_moment(_continuous_record(n)), np.zeros(3))

    def test_three_axes(self):
        n = np.eye(3)
        assert np.allclose(estimate_moment(_continuous_record(n)), np.ones(3))


class TestPolicy:
    def test_clamp_pulls_to_sphere(self):
        out = apply_policy(np.ones(3), BallPolicy.RADIAL_CLAMP)
        assert np.allclose(out, np.ones(3) / np.sqrt(3))

    def test_clamp_keeps_interior_points(self):
        vec = np.array([0.2, 0.0, 0.0])
        assert np.array_equal(apply_policy(vec, BallPolicy.RADIAL_CLAMP), vec)

    def test_unrestricted_is_identity(self):
        vec = np.array([3.0, -2.0, 0.4])
        assert np.array_equal(apply_policy(vec, BallPolicy.UNRESTRICTED), vec)

    def test_clamp_is_idempotent(self, rng):
        for _ in range(50):
            vec = rng.normal(size=3) * 3.0
            once = apply_policy(vec, BallPolicy.RADIAL_CLAMP)
            twice = apply_policy(once, BallPolicy.RADIAL_CLAMP)
            assert np.allclose(once, twice)


class TestMlSolver:
    def test_single_outcome_lands_on_it(self):
        n = np.array([[0.6, 0.8, 0.0]])
        result = ml_maximize(n)
        assert result.converged and result.on_boundary
        assert np.abs(result.r - n[0]).max() <= 1e-10

    def test_antipodal_pair_returns_minimum_norm(self):
        n = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        result = ml_maximize(n)
        assert result.converged
        assert np.abs(result.r).max() <= 1e-10

    def test_coplanar_outcomes_stay_in_plane(self):
        # all outcomes in the xy-plane: the flat z-direction gets zero
        angles = np.array([0.1, 1.1, 2.0, 3.3, 4.0])
        n = np.stack([np.cos(angles), np.sin(angles), np.zeros_like(angles)], axis=1)
        result = ml_maximize(n)
        assert result.converged
        assert abs(result.r[2]) <= 1e-12

    def test_interior_residual_satisfies_stationarity(self, rng):
        r0 = np.array([0.1, 0.2, -0.1])
        rec = sample_continuous(r0, 200, SeedSpec(61))
        result = ml_maximize(rec.outcomes)
        assert result.converged and not result.on_boundary
        grad = log_likelihood_gradient(result.r, rec.outcomes)
        assert np.abs(grad).max() <= 1e-12
        hess = log_likelihood_hessian(result.r, rec.outcomes)
        assert np.linalg.eigvalsh(hess).max() <= 1e-12

    def test_boundary_multiplier_is_outward(self):
        # outcomes clustered around +z push the maximizer onto the sphere
        rng = np.random.default_rng(5)
        n = rng.normal(scale=0.1, size=(20, 3)) + np.array([0, 0, 1.0])
        n /= np.linalg.norm(n, axis=1)[:, None]
        result = ml_maximize(n)
        assert result.converged and result.on_boundary
        grad = log_likelihood_gradient(result.r, n)
        lam = float(grad @ result.r)
        assert lam >= -1e-9
        assert np.abs(grad - lam * result.r).max() <= 1e-10

    def test_shuffle_invariance(self, rng):
        rec = sample_continuous(np.array([0.3, -0.2, 0.5]), 40, SeedSpec(67))
        base = ml_maximize(rec.outcomes).r
        for _ in range(5):
            perm = rng.permutation(40)
            shuffled = ml_maximize(rec.outcomes[perm]).r
            assert np.abs(shuffled - base).max() <= 1e-8

    def test_rotation_equivariance(self, rng):
        rec = sample_continuous(np.array([0.5, 0.1, -0.3]), 30, SeedSpec(71))
        base = ml_maximize(rec.outcomes).r
        for _ in range(10):
            g = AxisAngle(rng.normal(size=3), rng.uniform(0, 2 * np.pi))
            rotated = (g.matrix() @ rec.outcomes.T).T
            # renormalize away rounding so record validation passes
            rotated /= np.linalg.norm(rotated, axis=1)[:, None]
            est = ml_maximize(rotated).r
            assert np.abs(est - rotate(base, g)).max() <= 1e-8

    def test_convergence_failure_raises_with_payload(self):
        rec = sample_continuous(np.array([0.2, 0.1, 0.4]), 50, SeedSpec(73))
        cfg = MlConfig(max_iterations=1)
        with pytest.raises(MlConvergenceError) as info:
            estimate_ml_continuous(
                MeasurementRecord(ProtocolTag.CONTINUOUS_ML, outcomes=rec.outcomes),
                cfg,
            )
        assert info.value.last_iterate.shape == (3,)
        assert info.value.residual > 0.0

    def test_log_likelihood_outside_domain(self):
        n = np.array([[0.0, 0.0, 1.0]])
        assert log_likelihood([0.0, 0.0, -1.5], n) == -np.inf
        assert log_likelihood([0.0, 0.0, 1.0], n) == pytest.approx(np.log(2.0))


class TestEstimatorEquivariance:
    def test_moment_estimator_exactly_equivariant(self, rng):
        rec = sample_continuous(random_ball_vector(rng), 25, SeedSpec(79))
        base = estimate_moment(rec)
        for _ in range(20):
            g = AxisAngle(rng.normal(size=3), rng.uniform(0, 2 * np.pi))
            rotated = (g.matrix() @ rec.outcomes.T).T
            rotated /= np.linalg.norm(rotated, axis=1)[:, None]
            est = estimate_moment(_continuous_record(rotated))
            assert np.abs(est - rotate(base, g)).max() <= 1e-12

    def test_discrete_estimators_follow_rotated_povm(self, rng):
        # rotating the POVM directions rotates the estimate: for the
        # tetrahedron the estimate is a fixed linear map of the counts,
        # so rotating the direction matrix rotates the output exactly.
        counts = np.array([7, 3, 1, 4])
        base = 3.0 * (counts / counts.sum()) @ TETRA_DIRECTIONS
        for _ in range(20):
            g = AxisAngle(rng.normal(size=3), rng.uniform(0, 2 * np.pi))
            rotated_dirs = (g.matrix() @ TETRA_DIRECTIONS.T).T
            est = 3.0 * (counts / counts.sum()) @ rotated_dirs
            assert np.abs(est - rotate(base, g)).max() <= 1e-12
