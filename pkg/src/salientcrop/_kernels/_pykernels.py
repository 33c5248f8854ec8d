"""Pure-Python/numpy implementations of the compiled kernels.

Used when the extension module is unavailable or when
``SALIENTCROP_PURE_PYTHON`` is set. Results match ``_ckernels`` up to
floating-point summation order.
"""

from collections import deque

import numpy as np

_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def strict_local_maxima(values, floor_level):
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    padded = np.full((h + 2, w + 2), -np.inf)
    padded[1:-1, 1:-1] = values
    is_max = values > floor_level
    for dy, dx in _NEIGHBORS:
        is_max &= values > padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
    ys, xs = np.nonzero(is_max)
    return ys.astype(np.int64), xs.astype(np.int64)


def label_components(mask):
    mask = np.asarray(mask, dtype=np.uint8)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    current = 0
    for y, x in zip(*np.nonzero(mask)):
        if labels[y, x]:
            continue
        current += 1
        labels[y, x] = current
        queue = deque([(y, x)])
        while queue:
            cy, cx = queue.pop()
            for dy, dx in _NEIGHBORS:
                ny, nx = cy + dy, cx + dx
                if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not labels[ny, nx]:
                    labels[ny, nx] = current
                    queue.append((ny, nx))
    return labels, current


def kdtree_query(points, perm, split_dim, split_val, left, right, start, stop, queries):
    points = np.asarray(points, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    out = np.empty(len(queries), dtype=np.int64)
    for qi, q in enumerate(queries):
        best, best_idx = np.inf, -1
        stack = [(0, 0.0)]
        while stack:
            node, bound = stack.pop()
            if bound > best:
                continue
            if split_dim[node] < 0:
                idx = perm[start[node]:stop[node]]
                dist = ((points[idx] - q) ** 2).sum(axis=1)
                for i, d in zip(idx, dist):
                    if d < best or (d == best and i < best_idx):
                        best, best_idx = d, i
                continue
            diff = q[split_dim[node]] - split_val[node]
            if diff < 0:
                stack.append((right[node], diff * diff))
                stack.append((left[node], 0.0))
            else:
                stack.append((left[node], diff * diff))
                stack.append((right[node], 0.0))
        out[qi] = best_idx
    return out


def descriptor_histogram(magnitude, orientation, cx, cy, hist_width, radius, angle):
    d, n = 4, 8
    offsets = np.arange(-radius, radius + 1)
    ii, jj = np.meshgrid(offsets, offsets, indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    cos_t = np.cos(angle) / hist_width
    sin_t = np.sin(angle) / hist_width
    c_rot = jj * cos_t + ii * sin_t
    r_rot = -jj * sin_t + ii * cos_t
    rbin = r_rot + d / 2.0 - 0.5
    cbin = c_rot + d / 2.0 - 0.5
    keep = (rbin > -1) & (rbin < d) & (cbin > -1) & (cbin < d)
    ii, jj = ii[keep], jj[keep]
    c_rot, r_rot, rbin, cbin = c_rot[keep], r_rot[keep], rbin[keep], cbin[keep]

    wgt = np.exp((c_rot**2 + r_rot**2) * (-1.0 / (d * d * 0.5)))
    mag = magnitude[cy + ii, cx + jj] * wgt
    obin = (orientation[cy + ii, cx + jj] - angle) * (n / (2 * np.pi))

    r0 = np.floor(rbin).astype(np.int64)
    c0 = np.floor(cbin).astype(np.int64)
    o0 = np.floor(obin).astype(np.int64)
    dr, dc, do = rbin - r0, cbin - c0, obin - o0
    o0 = o0 % n

    buf = np.zeros((d + 2, d + 2, n + 2))
    v_r1 = mag * dr
    v_r0 = mag - v_r1
    for rr, v_r in ((0, v_r0), (1, v_r1)):
        v_c1 = v_r * dc
        v_c0 = v_r - v_c1
        for cc, v_c in ((0, v_c0), (1, v_c1)):
            np.add.at(buf, (r0 + 1 + rr, c0 + 1 + cc, o0), v_c * (1 - do))
            np.add.at(buf, (r0 + 1 + rr, c0 + 1 + cc, o0 + 1), v_c * do)
    out = buf[1:d + 1, 1:d + 1, :n].copy()
    out[:, :, 0] += buf[1:d + 1, 1:d + 1, n]
    return out.reshape(-1)
