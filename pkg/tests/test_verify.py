import numpy as np

from tomolab.povm import DiscretePovm, TETRA_DIRECTIONS, WeightedProjectorElement
from tomolab.verify import (
    completeness_suite,
    equivariance_suite,
    gradient_suite,
    enumeration_suite,
    run_suites,
    sampler_suite,
)


def test_quick_suites_all_pass():
    results = run_suites("quick")
    assert [r.name for r in results] == [
        "completeness",
        "equivariance",
        "gradient-check",
        "enumeration-oracle",
        "sampler-distribution",
    ]
    for result in results:
        assert result.passed, f"{result.name}: {result.detail}"


def test_completeness_suite_catches_tampered_weights():
    bad = DiscretePovm(
        "tampered",
        tuple(WeightedProjectorElement(0.25, d) for d in TETRA_DIRECTIONS),
        check=False,
    )
    result = completeness_suite(n_states=10, povms=(bad,))
    assert not result.passed


def test_individual_suites_accept_small_sizes():
    assert completeness_suite(n_states=50).passed
    assert equivariance_suite(n_pairs=20, n_conjugations=20).passed
    assert gradient_suite(n_points=5).passed
    assert enumeration_suite(max_shots=3, n_states=2).passed
    assert sampler_suite(draws=5_000, states_per_protocol=2).passed
