"""Kernel backend selection.

Prefers the compiled extension and falls back to the pure-Python kernels
when it is absent (no compiler at install time, or a source checkout).
``BACKEND`` records which one is active; both expose the same functions
and consume the same uniform-draw arrays, so a chain is reproducible
within a backend.
"""

from __future__ import annotations

try:
    from . import _kernels as _impl  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build environment
    from . import _kernels_py as _impl  # type: ignore[no-redef]

BACKEND: str = _impl.BACKEND
dataset_loglik = _impl.dataset_loglik
gibbs_pair_sweep = _impl.gibbs_pair_sweep
gibbs_object_sweep = _impl.gibbs_object_sweep


def available_backends() -> dict[str, object]:
    """Importable kernel modules keyed by backend name (for benchmarks/tests)."""
    from . import _kernels_py

    modules: dict[str, object] = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        modules["compiled"] = _kernels
    except ImportError:
        pass
    return modules
