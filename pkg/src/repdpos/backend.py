"""Kernel backend selection.

Prefers the compiled extension (``repdpos._core``) and falls back to the
NumPy reference (``repdpos._ref``).  Set ``REPDPOS_BACKEND=pure`` or
``=cython`` to force a choice; forcing ``cython`` raises if the extension
was not built.
"""

from __future__ import annotations

import os

_forced = os.environ.get("REPDPOS_BACKEND", "").lower()

if _forced == "pure":
    from repdpos import _ref as _impl
elif _forced == "cython":
    from repdpos import _core as _impl  # type: ignore[no-redef]
elif _forced == "":
    try:
        from repdpos import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        from repdpos import _ref as _impl
else:
    raise RuntimeError(f"unknown REPDPOS_BACKEND value {_forced!r}")

BACKEND = _impl.BACKEND_NAME

weighted_counts_batch = _impl.weighted_counts_batch
local_opinions_batch = _impl.local_opinions_batch
recommendation_weights_batch = _impl.recommendation_weights_batch
aggregate_excluding_self_batch = _impl.aggregate_excluding_self_batch
fuse_batch = _impl.fuse_batch
tsl_average_batch = _impl.tsl_average_batch
