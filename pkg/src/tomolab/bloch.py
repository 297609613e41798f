"""Exact 2x2 Pauli/Bloch algebra: state maps, distances, rotations.

Bloch 3-vectors are the canonical state representation throughout the
package; density matrices are derived views used for cross-checks and
the equivariance tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError

# Numeric slack: exact-algebra identities vs paths through trig/exponentials.
ATOL_EXACT = 1e-12
ATOL_TRIG = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
IDENTITY2 = np.eye(2, dtype=complex)


def as_bloch(r, *, require_state: bool = False, require_unit: bool = False) -> np.ndarray:
    """Coerce ``r`` to a float 3-vector, optionally enforcing ball membership.

    Estimator outputs may legitimately lie outside the unit ball, so the
    default performs shape/finiteness checks only.
    """
    vec = np.asarray(r, dtype=float)
    if vec.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("Bloch vector has non-finite entries")
    norm = float(np.linalg.norm(vec))
    if require_unit and abs(norm - 1.0) > ATOL_EXACT:
        raise InvalidStateError(f"expected a unit vector, got |r| = {norm!r}")
    if require_state and norm > 1.0 + ATOL_EXACT:
        raise InvalidStateError(f"Bloch vector outside the unit ball: |r| = {norm!r}")
    return vec


def density_from_bloch(r) -> np.ndarray:
    """Map a Bloch vector to the 2x2 matrix (I + r.sigma)/2.

    Linear in ``r``, so convex mixtures of vectors map to the same
    mixtures of matrices.  Accepts |r| > 1 (the result is then not
    positive semidefinite); no positivity check is performed here.
    """
    x, y, z = as_bloch(r)
    return 0.5 * np.array(
        [[1.0 + z, x - 1.0j * y], [x + 1.0j * y, 1.0 - z]], dtype=complex
    )


def bloch_from_density(rho) -> np.ndarray:
    """Invert :func:`density_from_bloch`.

    Raises :class:`InvalidStateError` if ``rho`` is not Hermitian with
    unit trace (to 1e-12).  Positivity is deliberately not required so
    that out-of-ball vectors round-trip.
    """
    mat = np.asarray(rho, dtype=complex)
    if mat.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {mat.shape}")
    if np.abs(mat - mat.conj().T).max() > ATOL_EXACT:
        raise InvalidStateError("matrix is not Hermitian")
    trace = mat[0, 0] + mat[1, 1]
    if abs(trace - 1.0) > ATOL_EXACT:
        raise InvalidStateError(f"matrix trace is {trace!r}, expected 1")
    x = float((mat[0, 1] + mat[1, 0]).real)
    y = float((1.0j * (mat[0, 1] - mat[1, 0])).real)
    z = float((mat[0, 0] - mat[1, 1]).real)
    return np.array([x, y, z])


def hs_distance_sq(rho1, rho2) -> float:
    """Squared Hilbert-Schmidt distance Tr((rho2 - rho1)^2).

    Equals |r2 - r1|^2 / 2 for qubit states.
    """
    diff = np.asarray(rho2, dtype=complex) - np.asarray(rho1, dtype=complex)
    return float(np.trace(diff @ diff).real)


@dataclass(frozen=True)
class AxisAngle:
    """Rotation of the Bloch ball: unit axis plus angle in [0, 2*pi).

    The constructor normalizes the axis and reduces the angle modulo
    2*pi, so any nonzero axis and any finite angle are accepted.
    """

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,):
            raise ValueError("rotation axis must be a 3-vector")
        norm = float(np.linalg.norm(axis))
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("rotation axis must be nonzero and finite")
        object.__setattr__(self, "axis", axis / norm)
        object.__setattr__(self, "angle", float(self.angle) % (2.0 * np.pi))

    def matrix(self) -> np.ndarray:
        """3x3 orthogonal matrix (Rodrigues form)."""
        c, s = np.cos(self.angle), np.sin(self.angle)
        m = self.axis
        cross = np.array(
            [[0.0, -m[2], m[1]], [m[2], 0.0, -m[0]], [-m[1], m[0], 0.0]]
        )
        return c * np.eye(3) + s * cross + (1.0 - c) * np.outer(m, m)


def rotate(r, g: AxisAngle) -> np.ndarray:
    """Apply the rotation ``g`` to a Bloch vector; preserves |r|."""
    return g.matrix() @ as_bloch(r)


def unitary_from_generator(n) -> np.ndarray:
    """2x2 unitary exp(i n.sigma) = cos|n| I + i sin|n| (nhat.sigma)."""
    vec = np.asarray(n, dtype=float)
    if vec.shape != (3,):
        raise ValueError("generator must be a 3-vector")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return IDENTITY2.copy()
    nhat_sigma = np.tensordot(vec / norm, PAULI, axes=1)
    return np.cos(norm) * IDENTITY2 + 1.0j * np.sin(norm) * nhat_sigma


def rotation_unitary(g: AxisAngle) -> np.ndarray:
    """2x2 unitary whose conjugation rotates Bloch vectors by ``g``.

    Conjugation by exp(i n.sigma) rotates by angle -2|n| about nhat, so
    the generator for ``g`` is -(angle/2) * axis.
    """
    return unitary_from_generator(-0.5 * g.angle * g.axis)


def conjugate_pure_paths(s, n) -> tuple[np.ndarray, np.ndarray]:
    """Bloch vector of U rho(s) U* computed two independent ways.

    Returns ``(via_unitary, via_rotation)``: explicit 2x2 conjugation by
    exp(i n.sigma) versus the equivalent rotation by -2|n| about nhat.
    """
    s = as_bloch(s, require_unit=True)
    vec = np.asarray(n, dtype=float)
    if vec.shape != (3,):
        raise ValueError("generator must be a 3-vector")
    unitary = unitary_from_generator(vec)
    conjugated = unitary @ density_from_bloch(s) @ unitary.conj().T
    via_unitary = bloch_from_density(conjugated)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        via_rotation = s.copy()
    else:
        via_rotation = rotate(s, AxisAngle(vec, -2.0 * norm))
    return via_unitary, via_rotation


def conjugate_pure(s, n) -> np.ndarray:
    """Bloch vector of exp(i n.sigma) rho(s) exp(-i n.sigma) for pure s.

    Internally evaluates both the matrix-conjugation and the rotation
    path and insists they agree to 1e-10.
    """
    via_unitary, via_rotation = conjugate_pure_paths(s, n)
    gap = float(np.abs(via_unitary - via_rotation).max())
    if gap > ATOL_TRIG:
        raise RuntimeError(f"conjugation paths disagree by {gap:.3e}")
    return via_rotation
