"""Measurement schemes and their exact outcome statistics.

Covers the three-axis projective triplet, the six-outcome and the
tetrahedral discrete POVMs, and the rotation-covariant continuous POVM
supported on the whole Bloch sphere (evaluated here on spherical caps).
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from functools import cached_property

import numpy as np

from .bloch import (
    ATOL_EXACT,
    IDENTITY2,
    PAULI,
    AxisAngle,
    as_bloch,
    density_from_bloch,
    rotate,
    rotation_unitary,
)
from .errors import InvalidStateError

AXIS_DIRECTIONS = np.eye(3)

# Alternating-sign corners of the cube, scaled to unit length.
TETRA_DIRECTIONS = np.array(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
) / np.sqrt(3.0)

# Element order shared by the six-outcome POVM and triplet records.
SIX_DIRECTIONS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
    dtype=float,
)


@dataclass(frozen=True)
class WeightedProjectorElement:
    """POVM element of the form weight * (I + direction.sigma)/2."""

    weight: float
    direction: np.ndarray

    def __post_init__(self):
        if not (self.weight > 0.0):
            raise ValueError(f"element weight must be positive, got {self.weight!r}")
        object.__setattr__(
            self, "direction", as_bloch(self.direction, require_unit=True)
        )

    def matrix(self) -> np.ndarray:
        return self.weight * density_from_bloch(self.direction)


@dataclass(frozen=True)
class DiscretePovm:
    """Finite POVM whose elements are weighted rank-one projectors.

    Completeness (sum of elements equals the identity) reduces to two
    vector identities: weights summing to 2 and the weighted directions
    summing to zero.  Both are enforced at construction unless ``check``
    is disabled (a hook for negative-control tests).
    """

    label: str
    elements: tuple[WeightedProjectorElement, ...]
    check: InitVar[bool] = True

    def __post_init__(self, check):
        object.__setattr__(self, "elements", tuple(self.elements))
        if check:
            gap = self.completeness_gap()
            if gap > ATOL_EXACT:
                raise ValueError(
                    f"POVM {self.label!r} is not a decomposition of the "
                    f"identity (gap {gap:.3e})"
                )

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.elements])

    @cached_property
    def directions(self) -> np.ndarray:
        return np.stack([e.direction for e in self.elements])

    def completeness_gap(self) -> float:
        """Max deviation from sum(c) = 2 and sum(c*a) = 0."""
        weight_gap = abs(float(self.weights.sum()) - 2.0)
        vector_gap = float(np.abs(self.weights @ self.directions).max())
        return max(weight_gap, vector_gap)

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class ProjectiveTriplet:
    """Three two-outcome projective spin measurements along x, y, z.

    ``allocation`` fixes the per-axis shot counts; ``None`` means split
    the total evenly at sampling time.
    """

    allocation: tuple[int, int, int] | None = None

    def __post_init__(self):
        if self.allocation is not None:
            alloc = tuple(int(n) for n in self.allocation)
            if len(alloc) != 3 or any(n < 0 for n in alloc):
                raise ValueError(f"bad axis allocation {self.allocation!r}")
            object.__setattr__(self, "allocation", alloc)

    def projector(self, axis: int, sign: int) -> np.ndarray:
        """(I +/- sigma_axis)/2 for axis in {0,1,2}, sign in {+1,-1}."""
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        return 0.5 * (IDENTITY2 + sign * PAULI[axis])

    def axis_probabilities(self, r0) -> np.ndarray:
        """Per-axis (p+, p-) outcome probabilities, shape (3, 2)."""
        r0 = as_bloch(r0, require_state=True)
        plus = 0.5 * (1.0 + r0)
        return np.stack([plus, 1.0 - plus], axis=1)

    def split_shots(self, n_shots: int) -> tuple[int, int, int]:
        """Resolve the per-axis allocation for ``n_shots`` total."""
        if self.allocation is not None:
            if sum(self.allocation) != n_shots:
                raise ValueError(
                    f"allocation {self.allocation} does not sum to {n_shots}"
                )
            return self.allocation
        if n_shots % 3 != 0:
            raise ValueError(
                f"{n_shots} shots cannot be split evenly over three axes; "
                "pass an explicit allocation"
            )
        third = n_shots // 3
        return (third, third, third)


def projective_triplet(allocation=None) -> ProjectiveTriplet:
    """The standard spin-measurement triplet along the coordinate axes."""
    return ProjectiveTriplet(allocation=allocation)


def six_outcome_povm() -> DiscretePovm:
    """Six elements (1/3) * projector, one per signed coordinate axis.

    Element order is (+x, -x, +y, -y, +z, -z).
    """
    elements = tuple(
        WeightedProjectorElement(1.0 / 3.0, d) for d in SIX_DIRECTIONS
    )
    return DiscretePovm("six-outcome", elements)


def tetrahedron_povm() -> DiscretePovm:
    """Four elements (1/2) * projector at regular tetrahedron vertices.

    The weight 1/2 is the unique choice that makes the four rank-one
    elements sum to the identity.
    """
    elements = tuple(
        WeightedProjectorElement(0.5, d) for d in TETRA_DIRECTIONS
    )
    return DiscretePovm("tetrahedron", elements)


def outcome_probabilities(povm: DiscretePovm, r0) -> np.ndarray:
    """Outcome distribution p_k = c_k (1 + r0.a_k)/2 for a state r0."""
    r0 = as_bloch(r0, require_state=True)
    probs = 0.5 * povm.weights * (1.0 + povm.directions @ r0)
    return probs


def continuous_density(r0, s) -> float:
    """Density 1 + r0.s of the sphere-supported POVM at outcome ``s``.

    The density is taken with respect to the normalized area measure;
    it integrates to 1 over the sphere and is nonnegative on the ball.
    """
    r0 = as_bloch(r0, require_state=True)
    s = as_bloch(s, require_unit=True)
    return 1.0 + float(r0 @ s)


def alpha_density(alpha: float, r0, s) -> float:
    """Density 1 + alpha * r0.s of the smeared POVM family.

    ``alpha`` in [0, 1]: 1 recovers :func:`continuous_density`, 0 the
    trivial POVM proportional to the identity.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must be in [0, 1], got {alpha!r}")
    r0 = as_bloch(r0, require_state=True)
    s = as_bloch(s, require_unit=True)
    return 1.0 + alpha * float(r0 @ s)


@dataclass(frozen=True)
class SphericalCap:
    """Spherical cap: unit center vector and half-angle in [0, pi]."""

    center: np.ndarray
    half_angle: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_bloch(self.center, require_unit=True))
        angle = float(self.half_angle)
        if not (0.0 <= angle <= np.pi):
            raise ValueError(f"half-angle must be in [0, pi], got {angle!r}")
        object.__setattr__(self, "half_angle", angle)

    def area_fraction(self) -> float:
        """Normalized area (1 - cos(half_angle))/2; 1 for the full sphere."""
        return 0.5 * (1.0 - np.cos(self.half_angle))


def cap_operator(cap: SphericalCap) -> np.ndarray:
    """POVM operator of a cap: twice the integral of rho(s) over it.

    Closed form omega(E) I + (sin^2(beta)/4) (c.sigma) for a cap of
    half-angle beta about c; verified against direct quadrature in the
    test suite.
    """
    omega = cap.area_fraction()
    coeff = 0.25 * np.sin(cap.half_angle) ** 2
    return omega * IDENTITY2 + coeff * np.tensordot(cap.center, PAULI, axes=1)


def cap_operator_alpha(cap: SphericalCap, alpha: float) -> np.ndarray:
    """Cap operator of the smeared family: alpha Q(E) + (1-alpha) omega(E) I."""
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must be in [0, 1], got {alpha!r}")
    return alpha * cap_operator(cap) + (1.0 - alpha) * cap.area_fraction() * IDENTITY2


def rotate_cap(cap: SphericalCap, g: AxisAngle) -> SphericalCap:
    """Image of a cap under a rotation (caps map to caps)."""
    return SphericalCap(rotate(cap.center, g), cap.half_angle)


def equivariance_residual(cap: SphericalCap, g: AxisAngle, alpha: float = 1.0) -> float:
    """Covariance defect of the cap operator under a rotation.

    Compares conjugation of Q(E) by the unitary realizing ``g`` against
    Q evaluated on the rotated cap; returns the max-abs entry of the
    difference (zero for an exactly covariant POVM).
    """
    unitary = rotation_unitary(g)
    lhs = unitary @ cap_operator_alpha(cap, alpha) @ unitary.conj().T
    rhs = cap_operator_alpha(rotate_cap(cap, g), alpha)
    return float(np.abs(lhs - rhs).max())
