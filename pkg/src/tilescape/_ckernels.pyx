# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Mirrors ``_pykernels`` exactly; see that module for semantics."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def ssim_batch(const double[:, ::1] a, const double[:, ::1] b, double c1, double c2):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1]
    if b.shape[0] != n or b.shape[1] != m:
        raise ValueError("ssim_batch: shape mismatch")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t i, j
    cdef double sa, sb, ma, mb, da, db, vaa, vbb, vab
    for i in range(n):
        sa = 0.0
        sb = 0.0
        for j in range(m):
            sa += a[i, j]
            sb += b[i, j]
        ma = sa / m
        mb = sb / m
        vaa = 0.0
        vbb = 0.0
        vab = 0.0
        for j in range(m):
            da = a[i, j] - ma
            db = b[i, j] - mb
            vaa += da * da
            vbb += db * db
            vab += da * db
        vaa /= m
        vbb /= m
        vab /= m
        res[i] = ((2.0 * ma * mb + c1) * (2.0 * vab + c2)) / (
            (ma * ma + mb * mb + c1) * (vaa + vbb + c2))
    return out


def grid_components(const cnp.uint8_t[:, ::1] active,
                    const cnp.uint8_t[:, ::1] h_edges,
                    const cnp.uint8_t[:, ::1] v_edges):
    cdef Py_ssize_t rows = active.shape[0], cols = active.shape[1]
    labels_arr = np.full((rows, cols), -1, dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    cdef Py_ssize_t cap = rows * cols + 1
    stack_arr = np.empty(cap, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    cdef Py_ssize_t top, r, c, r0, c0, idx
    cdef int label = 0
    for r0 in range(rows):
        for c0 in range(cols):
            if not active[r0, c0] or labels[r0, c0] >= 0:
                continue
            labels[r0, c0] = label
            top = 0
            stack[top] = r0 * cols + c0
            top += 1
            while top > 0:
                top -= 1
                idx = stack[top]
                r = idx // cols
                c = idx % cols
                # right, left, down, up
                if c + 1 < cols and h_edges[r, c] and active[r, c + 1] and labels[r, c + 1] < 0:
                    labels[r, c + 1] = label
                    stack[top] = idx + 1
                    top += 1
                if c > 0 and h_edges[r, c - 1] and active[r, c - 1] and labels[r, c - 1] < 0:
                    labels[r, c - 1] = label
                    stack[top] = idx - 1
                    top += 1
                if r + 1 < rows and v_edges[r, c] and active[r + 1, c] and labels[r + 1, c] < 0:
                    labels[r + 1, c] = label
                    stack[top] = idx + cols
                    top += 1
                if r > 0 and v_edges[r - 1, c] and active[r - 1, c] and labels[r - 1, c] < 0:
                    labels[r - 1, c] = label
                    stack[top] = idx - cols
                    top += 1
            label += 1
    return labels_arr


def ca_step(const cnp.uint8_t[:, ::1] blocked, int birth, int survive):
    cdef Py_ssize_t rows = blocked.shape[0], cols = blocked.shape[1]
    # one-cell blocked border makes out-of-bounds neighbours count without branching
    padded_arr = np.ones((rows + 2, cols + 2), dtype=np.uint8)
    padded_arr[1:-1, 1:-1] = blocked
    cdef const cnp.uint8_t[:, ::1] p = padded_arr
    out_arr = np.empty((rows, cols), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef int count
    for r in range(rows):
        for c in range(cols):
            count = (p[r, c] + p[r, c + 1] + p[r, c + 2]
                     + p[r + 1, c] + p[r + 1, c + 2]
                     + p[r + 2, c] + p[r + 2, c + 1] + p[r + 2, c + 2])
            if p[r + 1, c + 1]:
                out[r, c] = count >= survive
            else:
                out[r, c] = count >= birth
    return out_arr
