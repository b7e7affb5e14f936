"""Backend selection for the sweep kernels.

The compiled extension :mod:`romsn._sweeps` is used when importable; setting
``ROMSN_PURE_PYTHON=1`` forces the numpy fallback. ``BACKEND`` names the choice.
"""

import os

from . import _fallback

if os.environ.get("ROMSN_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _sweeps as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "python" if _impl is _fallback else "cython"

slab_sweep_dd = _impl.slab_sweep_dd
slab_sweep_lc = _impl.slab_sweep_lc
dd_sweep = _impl.dd_sweep
linear_recurrence = _impl.linear_recurrence

__all__ = ["BACKEND", "slab_sweep_dd", "slab_sweep_lc", "dd_sweep", "linear_recurrence"]
