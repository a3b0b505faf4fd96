"""Kernel backend selection.

Prefers the compiled extension when it was built; otherwise falls back to
the pure-Python twin. Set DATAPLORE_PURE_KERNELS=1 to force the fallback
(used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("DATAPLORE_PURE_KERNELS") == "1":
    from dataplore.sets import _kernels_py as _impl
else:
    try:
        from dataplore.sets import _kernels_c as _impl  # type: ignore[no-redef]
    except ImportError:
        from dataplore.sets import _kernels_py as _impl  # type: ignore[no-redef]

intersection_size = _impl.intersection_size
intersect_sorted = _impl.intersect_sorted
union_sorted = _impl.union_sorted
difference_sorted = _impl.difference_sorted


def backend_name() -> str:
    """Which kernel implementation is active: 'compiled' or 'pure-python'."""
    return "compiled" if _impl.__name__.endswith("_kernels_c") else "pure-python"
