"""Likelihood-solver backend selection, resolved once at import.

The compiled extension is used when importable; otherwise the numpy
fallback.  ``TOMOLAB_BACKEND=python`` forces the fallback and
``TOMOLAB_BACKEND=cython`` makes a missing extension an import error.
Both kernels implement the same algorithm, so results differ only at
rounding level; either choice is deterministic.
"""

from __future__ import annotations

import os

from . import _mlkernel_py

try:
    from . import _mlkernel as _compiled
except ImportError:
    _compiled = None

_requested = os.environ.get("TOMOLAB_BACKEND", "auto").strip().lower()
if _requested in ("", "auto"):
    _impl = _compiled
elif _requested == "cython":
    if _compiled is None:
        raise ImportError(
            "TOMOLAB_BACKEND=cython but the compiled kernel is not available"
        )
    _impl = _compiled
elif _requested == "python":
    _impl = None
else:
    raise ValueError(f"unrecognized TOMOLAB_BACKEND value {_requested!r}")

ACTIVE_BACKEND = "cython" if _impl is not None else "python"


def compiled_available() -> bool:
    return _compiled is not None


def solve_full_rank(outcomes, x0, tol, boundary_tol, max_iter, shrink):
    """Ball-constrained solve of one full-rank 3-d record."""
    kernel = _impl if _impl is not None else _mlkernel_py
    return kernel.solve(outcomes, x0, tol, boundary_tol, max_iter, shrink)


def solve_full_rank_batch(outcomes, x0, tol, boundary_tol, max_iter, shrink):
    """Ball-constrained solve of records stacked as (M, N, 3)."""
    kernel = _impl if _impl is not None else _mlkernel_py
    return kernel.solve_batch(outcomes, x0, tol, boundary_tol, max_iter, shrink)
