import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tomolab.bloch import AxisAngle, IDENTITY2, density_from_bloch
from tomolab.errors import InvalidStateError
from tomolab.povm import (
    DiscretePovm,
    SphericalCap,
    TETRA_DIRECTIONS,
    WeightedProjectorElement,
    alpha_density,
    cap_operator,
    cap_operator_alpha,
    continuous_density,
    equivariance_residual,
    outcome_probabilities,
    projective_triplet,
    rotate_cap,
    six_outcome_povm,
    tetrahedron_povm,
)
from tomolab.serialize import povm_from_dict, povm_to_dict

from conftest import random_ball_vector
from oracles import quadrature_cap_operator


def test_projective_triplet_projectors():
    triplet = projective_triplet()
    assert np.array_equal(triplet.projector(2, 1), np.diag([1.0, 0.0]))
    for axis in range(3):
        plus, minus = triplet.projector(axis, 1), triplet.projector(axis, -1)
        assert np.abs(plus + minus - IDENTITY2).max() == 0.0
        assert np.abs(plus @ minus).max() == 0.0
        # orthogonal projectors: idempotent and Hermitian
        assert np.abs(plus @ plus - plus).max() <= 1e-15


def test_six_outcome_weights_and_directions():
    povm = six_outcome_povm()
    assert np.allclose(povm.weights, 1.0 / 3.0)
    assert abs(povm.weights.sum() - 2.0) <= 1e-15
    assert np.abs(povm.weights @ povm.directions).max() == 0.0
    expected = {(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)}
    assert {tuple(int(v) for v in d) for d in povm.directions} == expected


def test_six_outcome_refines_projective():
    povm = six_outcome_povm()
    triplet = projective_triplet()
    for axis in range(3):
        assert np.abs(
            povm.elements[2 * axis].matrix() - triplet.projector(axis, 1) / 3.0
        ).max() <= 1e-15
        assert np.abs(
            povm.elements[2 * axis + 1].matrix() - triplet.projector(axis, -1) / 3.0
        ).max() <= 1e-15


def test_tetrahedron_geometry():
    povm = tetrahedron_povm()
    assert np.allclose(povm.directions[0], np.ones(3) / np.sqrt(3))
    gram = povm.directions @ povm.directions.T
    expected = -np.ones((4, 4)) / 3.0 + (4.0 / 3.0) * np.eye(4)
    assert np.abs(gram - expected).max() <= 1e-15
    outer_sum = sum(np.outer(d, d) for d in povm.directions)
    assert np.abs(outer_sum - (4.0 / 3.0) * np.eye(3)).max() <= 1e-15


def test_tetrahedron_sums_to_identity():
    povm = tetrahedron_povm()
    total = sum(e.matrix() for e in povm.elements)
    assert np.abs(total - IDENTITY2).max() <= 1e-15
    assert np.allclose(povm.weights, 0.5)


def test_completeness_check_rejects_tampered_weights():
    bad = tuple(
        WeightedProjectorElement(0.25, d) for d in TETRA_DIRECTIONS
    )
    with pytest.raises(ValueError, match="identity"):
        DiscretePovm("tampered", bad)
    # the check=False hook admits it, and the gap is visible
    povm = DiscretePovm("tampered", bad, check=False)
    assert povm.completeness_gap() > 0.9


def test_outcome_probabilities_fixed_points():
    tetra = tetrahedron_povm()
    assert np.allclose(outcome_probabilities(tetra, np.zeros(3)), 0.25)
    at_vertex = outcome_probabilities(tetra, tetra.directions[0])
    assert np.allclose(at_vertex, [0.5, 1 / 6, 1 / 6, 1 / 6], atol=1e-15)
    six = six_outcome_povm()
    z0 = 0.37
    probs = outcome_probabilities(six, [0.0, 0.0, z0])
    expected = np.array([1, 1, 1, 1, 1 + z0, 1 - z0]) / 6.0
    assert np.allclose(probs, expected, atol=1e-15)


def test_outcome_probabilities_rejects_outside_ball():
    with pytest.raises(InvalidStateError):
        outcome_probabilities(six_outcome_povm(), [1.0, 1.0, 1.0])


@given(
    st.tuples(
        st.floats(-1, 1, allow_nan=False),
        st.floats(-1, 1, allow_nan=False),
        st.floats(-1, 1, allow_nan=False),
    )
)
@settings(max_examples=100, deadline=None)
def test_probabilities_normalized_on_ball(raw):
    r0 = np.array(raw)
    norm = np.linalg.norm(r0)
    if norm > 1.0:
        r0 /= norm
    for povm in (six_outcome_povm(), tetrahedron_povm()):
        probs = outcome_probabilities(povm, r0)
        assert abs(probs.sum() - 1.0) <= 1e-12
        assert probs.min() >= -1e-15 and probs.max() <= 1.0 + 1e-15


def test_continuous_density_extremes():
    pole = np.array([0.0, 0.0, 1.0])
    assert continuous_density(np.zeros(3), pole) == 1.0
    assert continuous_density(pole, pole) == 2.0
    assert continuous_density(pole, -pole) == 0.0


def test_alpha_density_family():
    pole = np.array([0.0, 0.0, 1.0])
    assert alpha_density(1.0, pole, pole) == continuous_density(pole, pole)
    assert alpha_density(0.0, pole, -pole) == 1.0
    assert alpha_density(0.5, pole, pole) == 1.5
    with pytest.raises(ValueError):
        alpha_density(1.2, pole, pole)


def test_continuous_density_normalizes(rng):
    # quadrature of (1 + r0.s) over the sphere equals one
    from scipy.integrate import dblquad

    r0 = random_ball_vector(rng)

    def integrand(phi, theta):
        s = np.array(
            [
                np.sin(theta) * np.cos(phi),
                np.sin(theta) * np.sin(phi),
                np.cos(theta),
            ]
        )
        return (1.0 + r0 @ s) * np.sin(theta) / (4.0 * np.pi)

    total, _ = dblquad(integrand, 0.0, np.pi, 0.0, 2.0 * np.pi, epsabs=1e-10)
    assert abs(total - 1.0) <= 1e-3


def test_cap_operator_fixed_points(rng):
    direction = random_ball_vector(rng, radius=1.0)
    full = cap_operator(SphericalCap(direction, np.pi))
    assert np.abs(full - IDENTITY2).max() <= 1e-15
    half = cap_operator(SphericalCap(direction, np.pi / 2))
    expected = 0.5 * IDENTITY2 + 0.5 * (density_from_bloch(direction) - 0.5 * IDENTITY2)
    assert np.abs(half - expected).max() <= 1e-15
    zero = cap_operator(SphericalCap(direction, 0.0))
    assert np.abs(zero).max() == 0.0


def test_cap_operator_matches_quadrature(rng):
    for _ in range(4):
        center = random_ball_vector(rng, radius=1.0)
        half_angle = rng.uniform(0.1, np.pi)
        closed = cap_operator(SphericalCap(center, half_angle))
        numeric = quadrature_cap_operator(center, half_angle)
        assert np.abs(closed - numeric).max() <= 1e-9


def test_cap_operator_alpha_interpolates(rng):
    cap = SphericalCap(random_ball_vector(rng, radius=1.0), 1.1)
    omega = cap.area_fraction()
    assert np.abs(cap_operator_alpha(cap, 1.0) - cap_operator(cap)).max() == 0.0
    assert np.abs(cap_operator_alpha(cap, 0.0) - omega * IDENTITY2).max() == 0.0


def test_equivariance_residual_trivial_cases(rng):
    cap = SphericalCap(random_ball_vector(rng, radius=1.0), 0.8)
    identity = AxisAngle(np.array([0.0, 0.0, 1.0]), 0.0)
    assert equivariance_residual(cap, identity) <= 1e-15
    sphere = SphericalCap(random_ball_vector(rng, radius=1.0), np.pi)
    g = AxisAngle(rng.normal(size=3), rng.uniform(0, 2 * np.pi))
    assert equivariance_residual(sphere, g) <= 1e-15


def test_equivariance_residual_random_pairs(rng):
    worst = 0.0
    for _ in range(500):
        cap = SphericalCap(
            random_ball_vector(rng, radius=1.0), rng.uniform(0.0, np.pi)
        )
        g = AxisAngle(rng.normal(size=3), rng.uniform(0, 2 * np.pi))
        worst = max(worst, equivariance_residual(cap, g))
        worst = max(worst, equivariance_residual(cap, g, alpha=rng.random()))
    assert worst <= 1e-10


def test_rotate_cap_moves_center_only(rng):
    cap = SphericalCap(random_ball_vector(rng, radius=1.0), 0.6)
    g = AxisAngle(rng.normal(size=3), 1.0)
    moved = rotate_cap(cap, g)
    assert moved.half_angle == cap.half_angle
    assert abs(np.linalg.norm(moved.center) - 1.0) <= 1e-12


def test_povm_json_round_trip():
    for povm in (six_outcome_povm(), tetrahedron_povm()):
        text = json.dumps(povm_to_dict(povm))
        back = povm_from_dict(json.loads(text))
        assert back.label == povm.label
        assert np.array_equal(back.weights, povm.weights)
        assert np.array_equal(back.directions, povm.directions)
