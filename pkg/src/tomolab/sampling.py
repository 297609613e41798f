"""Deterministic, seedable generation of measurement records.

Every draw is keyed by a (master seed, stream id) pair fed to a
counter-based bit generator, so Monte Carlo trials running on distinct
streams reproduce bit-identically regardless of scheduling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .bloch import as_bloch
from .errors import InvalidStateError
from .povm import DiscretePovm, ProjectiveTriplet, outcome_probabilities

_UINT64_SPAN = 2**64

# Below this radius the inverse-CDF quadratic loses precision and the
# distribution is indistinguishable from uniform.
UNIFORM_RADIUS_CUTOFF = 1e-9


class ProtocolTag(enum.Enum):
    """The five estimation protocols handled by this package."""

    PROJECTIVE = "projective"
    SIX_OUTCOME = "six-outcome"
    TETRAHEDRON = "tetrahedron"
    CONTINUOUS_MOMENT = "continuous-moment"
    CONTINUOUS_ML = "continuous-ml"


#: Tags whose records carry a list of sphere points instead of counts.
CONTINUOUS_TAGS = frozenset(
    {ProtocolTag.CONTINUOUS_MOMENT, ProtocolTag.CONTINUOUS_ML}
)


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus stream id, both 64-bit unsigned.

    Identical (master, stream) pairs yield bit-identical sample
    sequences; distinct stream ids (e.g. trial indices) yield
    independent streams.
    """

    master: int
    stream: int = 0

    def __post_init__(self):
        for name in ("master", "stream"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} seed must be an integer")
            if not (0 <= int(value) < _UINT64_SPAN):
                raise ValueError(f"{name} seed must fit in 64 unsigned bits")
            object.__setattr__(self, name, int(value))

    def generator(self) -> np.random.Generator:
        """Fresh counter-based generator keyed by (master, stream)."""
        seq = np.random.SeedSequence([self.master, self.stream])
        return np.random.Generator(np.random.Philox(seq))

    def shifted(self, offset: int) -> "SeedSpec":
        """Seed for stream ``stream + offset`` (used per trial)."""
        return SeedSpec(self.master, (self.stream + int(offset)) % _UINT64_SPAN)


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """Outcome data of one experiment.

    Discrete protocols carry per-outcome ``counts`` aligned with the
    measurement's element order (axis pairs (+x, -x, +y, -y, +z, -z)
    for the triplet and the six-outcome POVM).  Continuous protocols
    carry ``outcomes``, an (N, 3) array of unit vectors.
    """

    protocol: ProtocolTag
    counts: np.ndarray | None = None
    outcomes: np.ndarray | None = None

    def __post_init__(self):
        if (self.counts is None) == (self.outcomes is None):
            raise ValueError("record needs exactly one of counts/outcomes")
        if self.counts is not None:
            counts = np.asarray(self.counts, dtype=np.int64)
            if counts.ndim != 1 or (counts < 0).any():
                raise ValueError("counts must be a 1-d nonnegative array")
            object.__setattr__(self, "counts", counts)
        else:
            outcomes = np.asarray(self.outcomes, dtype=float)
            if outcomes.ndim != 2 or outcomes.shape[1] != 3:
                raise ValueError("outcomes must be an (N, 3) array")
            norms = np.linalg.norm(outcomes, axis=1)
            if outcomes.shape[0] and np.abs(norms - 1.0).max() > 1e-12:
                raise ValueError("continuous outcomes must be unit vectors")
            object.__setattr__(self, "outcomes", outcomes)

    @property
    def n_shots(self) -> int:
        if self.counts is not None:
            return int(self.counts.sum())
        return int(self.outcomes.shape[0])

    def axis_splits(self) -> np.ndarray:
        """Counts reshaped to (axis, sign) pairs, shape (3, 2)."""
        if self.counts is None or self.counts.shape[0] != 6:
            raise ValueError("record does not carry per-axis counts")
        return self.counts.reshape(3, 2)


def _tag_for_measurement(measurement) -> ProtocolTag:
    if isinstance(measurement, ProjectiveTriplet):
        return ProtocolTag.PROJECTIVE
    if isinstance(measurement, DiscretePovm):
        try:
            return ProtocolTag(measurement.label)
        except ValueError:
            raise ValueError(
                f"no protocol tag for POVM label {measurement.label!r}"
            ) from None
    raise TypeError(f"cannot sample from {type(measurement).__name__}")


def sample_discrete(measurement, r0, n_shots: int, seed: SeedSpec) -> MeasurementRecord:
    """Draw outcome counts for a discrete measurement on state ``r0``.

    POVMs produce one multinomial draw over their elements; the
    projective triplet produces an independent binomial per axis using
    its shot allocation (even thirds unless set explicitly).
    """
    r0 = as_bloch(r0, require_state=True)
    if n_shots < 0:
        raise ValueError("shot count must be nonnegative")
    rng = seed.generator()
    tag = _tag_for_measurement(measurement)
    if isinstance(measurement, ProjectiveTriplet):
        per_axis = measurement.split_shots(n_shots)
        probs = measurement.axis_probabilities(r0)
        counts = np.zeros(6, dtype=np.int64)
        for axis in range(3):
            plus = rng.binomial(per_axis[axis], probs[axis, 0])
            counts[2 * axis] = plus
            counts[2 * axis + 1] = per_axis[axis] - plus
        return MeasurementRecord(tag, counts=counts)
    probs = outcome_probabilities(measurement, r0)
    counts = rng.multinomial(n_shots, probs)
    return MeasurementRecord(tag, counts=counts.astype(np.int64))


def _cos_theta_from_uniform(u: np.ndarray, radius: float) -> np.ndarray:
    """Inverse CDF of the polar cosine for density (1 + radius*t)/2."""
    if radius < UNIFORM_RADIUS_CUTOFF:
        return 2.0 * u - 1.0
    disc = (1.0 - radius) ** 2 + 4.0 * radius * u
    return (np.sqrt(disc) - 1.0) / radius


def _orthonormal_frame(unit: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic pair of unit vectors completing ``unit`` to a frame."""
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(unit)))] = 1.0
    e1 = np.cross(helper, unit)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(unit, e1)
    return e1, e2


def sample_continuous(
    r0,
    n_shots: int,
    seed: SeedSpec,
    *,
    alpha: float = 1.0,
    tag: ProtocolTag = ProtocolTag.CONTINUOUS_MOMENT,
) -> MeasurementRecord:
    """Draw sphere points with density 1 + alpha * r0.s.

    Uses inverse-CDF sampling of the polar cosine about the state
    direction (azimuth uniform), validated against a rejection sampler
    in the test suite.  ``alpha`` < 1 samples the smeared POVM family.
    """
    r0 = as_bloch(r0, require_state=True)
    if n_shots < 0:
        raise ValueError("shot count must be nonnegative")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must be in [0, 1], got {alpha!r}")
    if tag not in CONTINUOUS_TAGS:
        raise ValueError(f"{tag} is not a continuous protocol")
    effective = alpha * r0
    radius = float(np.linalg.norm(effective))
    rng = seed.generator()
    uniforms = rng.random((n_shots, 2))
    phi = 2.0 * np.pi * uniforms[:, 0]
    t = _cos_theta_from_uniform(uniforms[:, 1], radius)
    sin_theta = np.sqrt(np.maximum(0.0, 1.0 - t * t))
    if radius < UNIFORM_RADIUS_CUTOFF:
        pole = np.array([0.0, 0.0, 1.0])
    else:
        pole = effective / radius
    e1, e2 = _orthonormal_frame(pole)
    outcomes = (
        np.outer(sin_theta * np.cos(phi), e1)
        + np.outer(sin_theta * np.sin(phi), e2)
        + np.outer(t, pole)
    )
    return MeasurementRecord(tag, outcomes=outcomes)
