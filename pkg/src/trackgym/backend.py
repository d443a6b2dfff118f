"""Kernel backend selection.

The compiled extension is preferred; the pure-numpy fallback is used when it
is absent or when ``TRACKGYM_PURE_PYTHON`` is set (any of 1/true/yes). Both
expose the same functions: ``predict_cv``, ``chol_psd``, ``ut_spherical``,
``combine_update`` and a ``BACKEND`` name.
"""

from __future__ import annotations

import os

if os.environ.get("TRACKGYM_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
    from trackgym import _kernels_py as kernels
else:
    try:
        from trackgym import _native as kernels  # type: ignore[attr-defined]
    except ImportError:
        from trackgym import _kernels_py as kernels

BACKEND = kernels.BACKEND

predict_cv = kernels.predict_cv
chol_psd = kernels.chol_psd
ut_spherical = kernels.ut_spherical
combine_update = kernels.combine_update
