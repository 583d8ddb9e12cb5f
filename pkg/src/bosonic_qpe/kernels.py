"""Kernel selection: compiled extension if present, numpy fallback otherwise.

The compiled module is built from ``_kernels.pyx`` at install time; when
the build was skipped (no compiler) this module transparently falls back
to :mod:`bosonic_qpe._kernels_py`.  Both expose the same functions with
identical semantics; ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

HAVE_COMPILED = _compiled is not None
_active = _compiled if HAVE_COMPILED else _kernels_py

lindblad_rk4_diag = _active.lindblad_rk4_diag
lindblad_rk4_tridiag = _active.lindblad_rk4_tridiag
sample_diagonal_bits = _active.sample_diagonal_bits


def implementation_name() -> str:
    return "compiled" if HAVE_COMPILED else "numpy"


def get_implementation(compiled: bool):
    """Explicit access to one of the two implementations (for benchmarks
    and equivalence tests).  Raises if the compiled one is unavailable."""
    if compiled:
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available in this install")
        return _compiled
    return _kernels_py
