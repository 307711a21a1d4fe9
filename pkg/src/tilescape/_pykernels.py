"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same results (bit-exact for the integer kernels, within
rounding for ``ssim_batch``).
"""
import numpy as np


def ssim_batch(a, b, c1, c2):
    """Global SSIM for each row pair of two ``(n, m)`` float arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("ssim_batch: shape mismatch")
    m = a.shape[1]
    ma = a.sum(axis=1) / m
    mb = b.sum(axis=1) / m
    da = a - ma[:, None]
    db = b - mb[:, None]
    vaa = (da * da).sum(axis=1) / m
    vbb = (db * db).sum(axis=1) / m
    vab = (da * db).sum(axis=1) / m
    return ((2.0 * ma * mb + c1) * (2.0 * vab + c2)) / (
        (ma * ma + mb * mb + c1) * (vaa + vbb + c2))


def grid_components(active, h_edges, v_edges):
    """Label 4-connected components of ``active`` cells joined by open edges.

    ``h_edges[r, c]`` links (r, c)-(r, c+1); ``v_edges[r, c]`` links
    (r, c)-(r+1, c). Seeds are taken in raster order and each component is
    grown with an explicit stack visiting right, left, down, up. Inactive
    cells get label -1.
    """
    active = np.asarray(active, dtype=bool)
    rows, cols = active.shape
    labels = np.full((rows, cols), -1, dtype=np.int32)
    act = active.tolist()
    h = np.asarray(h_edges, dtype=bool).tolist()
    v = np.asarray(v_edges, dtype=bool).tolist()
    lab = labels.tolist()
    label = 0
    for r0 in range(rows):
        for c0 in range(cols):
            if not act[r0][c0] or lab[r0][c0] >= 0:
                continue
            lab[r0][c0] = label
            stack = [(r0, c0)]
            while stack:
                r, c = stack.pop()
                if c + 1 < cols and h[r][c] and act[r][c + 1] and lab[r][c + 1] < 0:
                    lab[r][c + 1] = label
                    stack.append((r, c + 1))
                if c > 0 and h[r][c - 1] and act[r][c - 1] and lab[r][c - 1] < 0:
                    lab[r][c - 1] = label
                    stack.append((r, c - 1))
                if r + 1 < rows and v[r][c] and act[r + 1][c] and lab[r + 1][c] < 0:
                    lab[r + 1][c] = label
                    stack.append((r + 1, c))
                if r > 0 and v[r - 1][c] and act[r - 1][c] and lab[r - 1][c] < 0:
                    lab[r - 1][c] = label
                    stack.append((r - 1, c))
            label += 1
    return np.array(lab, dtype=np.int32).reshape(rows, cols)


def ca_step(blocked, birth, survive):
    """One cellular-automaton step; out-of-bounds neighbours count as blocked."""
    blocked = np.asarray(blocked, dtype=np.uint8)
    rows, cols = blocked.shape
    padded = np.ones((rows + 2, cols + 2), dtype=np.int32)
    padded[1:-1, 1:-1] = blocked
    count = np.zeros((rows, cols), dtype=np.int32)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            count += padded[1 + dr:1 + dr + rows, 1 + dc:1 + dc + cols]
    stay = blocked.astype(bool) & (count >= survive)
    born = ~blocked.astype(bool) & (count >= birth)
    return (stay | born).astype(np.uint8)
