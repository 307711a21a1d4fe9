"""Independent reference implementations used only by the tests.

These are deliberately naive scalar loops that share no code with the
package's vectorized or compiled paths.
"""
import math
from collections import deque


def scalar_ssim(b1, b2, c1, c2):
    xs = [float(v) for row in b1 for v in row]
    ys = [float(v) for row in b2 for v in row]
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    vx = math.fsum((x - mx) ** 2 for x in xs) / n
    vy = math.fsum((y - my) ** 2 for y in ys) / n
    cov = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / n
    return ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2))


def flood_fill_components(mask):
    """4-connected components of a boolean grid (list of lists) as a set of frozensets."""
    rows, cols = len(mask), len(mask[0])
    seen = set()
    comps = set()
    for r in range(rows):
        for c in range(cols):
            if not mask[r][c] or (r, c) in seen:
                continue
            comp = set()
            queue = deque([(r, c)])
            seen.add((r, c))
            while queue:
                y, x = queue.popleft()
                comp.add((y, x))
                for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < rows and 0 <= nx < cols and mask[ny][nx] and (ny, nx) not in seen:
                        seen.add((ny, nx))
                        queue.append((ny, nx))
            comps.add(frozenset(comp))
    return comps


def _keys(t, a=-0.5):
    t = abs(t)
    if t <= 1:
        return (a + 2) * t ** 3 - (a + 3) * t ** 2 + 1
    if t < 2:
        return a * t ** 3 - 5 * a * t ** 2 + 8 * a * t - 4 * a
    return 0.0


def bicubic_reference(pixels, factor):
    """Scalar bicubic resize of a nested-list image [y][x][channel], edge-clamped."""
    h, w, ch = len(pixels), len(pixels[0]), len(pixels[0][0])
    out = []
    for oy in range(h * factor):
        sy = (oy + 0.5) / factor - 0.5
        y0 = math.floor(sy)
        row = []
        for ox in range(w * factor):
            sx = (ox + 0.5) / factor - 0.5
            x0 = math.floor(sx)
            px = []
            for k in range(ch):
                acc = 0.0
                for j in range(y0 - 1, y0 + 3):
                    wy = _keys(sy - j)
                    jj = min(max(j, 0), h - 1)
                    for i in range(x0 - 1, x0 + 3):
                        ii = min(max(i, 0), w - 1)
                        acc += wy * _keys(sx - i) * pixels[jj][ii][k]
                px.append(min(255, max(0, math.floor(acc + 0.5))))
            row.append(px)
        out.append(row)
    return out


def walkable_components(grid):
    return flood_fill_components([[v == 0 for v in row] for row in grid])
