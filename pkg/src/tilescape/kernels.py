"""Kernel dispatch: compiled Cython kernels when available, numpy fallback otherwise.

Set ``TILESCAPE_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"

if not os.environ.get("TILESCAPE_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def available_backends():
    names = {"python": _pykernels}
    try:
        from . import _ckernels

        names["cython"] = _ckernels
    except ImportError:
        pass
    return names


def ssim_batch(a, b, c1, c2):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ValueError(f"ssim_batch expects equal 2D arrays, got {a.shape} and {b.shape}")
    if a.shape[1] == 0:
        raise ValueError("ssim_batch: empty strips")
    return _impl.ssim_batch(a, b, float(c1), float(c2))


def grid_components(active, h_edges, v_edges):
    active = np.ascontiguousarray(active, dtype=np.uint8)
    rows, cols = active.shape
    h_edges = np.ascontiguousarray(h_edges, dtype=np.uint8).reshape(rows, max(cols - 1, 0))
    v_edges = np.ascontiguousarray(v_edges, dtype=np.uint8).reshape(max(rows - 1, 0), cols)
    # pad to full shape so the compiled kernel can index [r, c] without special cases
    h_full = np.zeros((rows, cols), dtype=np.uint8)
    h_full[:, : cols - 1] = h_edges
    v_full = np.zeros((rows, cols), dtype=np.uint8)
    v_full[: rows - 1, :] = v_edges
    return _impl.grid_components(active, h_full, v_full)


def ca_step(blocked, birth, survive):
    blocked = np.ascontiguousarray(blocked, dtype=np.uint8)
    return _impl.ca_step(blocked, int(birth), int(survive))
