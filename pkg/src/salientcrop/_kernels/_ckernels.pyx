# cython: language_level=3
"""Compiled inner loops. Signatures mirror ``_pykernels`` exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor, M_PI

cnp.import_array()


def strict_local_maxima(const double[:, ::1] values, double floor_level):
    cdef Py_ssize_t h = values.shape[0], w = values.shape[1]
    cdef Py_ssize_t y, x, dy, dx, ny, nx
    cdef double v
    cdef bint is_max
    ys = []
    xs = []
    for y in range(h):
        for x in range(w):
            v = values[y, x]
            if not v > floor_level:
                continue
            is_max = True
            for dy in range(-1, 2):
                ny = y + dy
                if ny < 0 or ny >= h:
                    continue
                for dx in range(-1, 2):
                    if dy == 0 and dx == 0:
                        continue
                    nx = x + dx
                    if nx < 0 or nx >= w:
                        continue
                    if values[ny, nx] >= v:
                        is_max = False
                        break
                if not is_max:
                    break
            if is_max:
                ys.append(y)
                xs.append(x)
    return np.asarray(ys, dtype=np.int64), np.asarray(xs, dtype=np.int64)


def label_components(const cnp.uint8_t[:, ::1] mask):
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    stack_arr = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_arr
    cdef Py_ssize_t top, y, x, cy, cx, ny, nx, dy, dx, p
    cdef int current = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x] == 0 or labels[y, x] != 0:
                continue
            current += 1
            labels[y, x] = current
            top = 0
            stack[top] = y * w + x
            top += 1
            while top > 0:
                top -= 1
                p = stack[top]
                cy = p // w
                cx = p - cy * w
                for dy in range(-1, 2):
                    ny = cy + dy
                    if ny < 0 or ny >= h:
                        continue
                    for dx in range(-1, 2):
                        nx = cx + dx
                        if nx < 0 or nx >= w:
                            continue
                        if mask[ny, nx] != 0 and labels[ny, nx] == 0:
                            labels[ny, nx] = current
                            stack[top] = ny * w + nx
                            top += 1
    return labels_arr, current


def kdtree_query(const double[:, ::1] points,
                 const cnp.int64_t[::1] perm,
                 const cnp.int64_t[::1] split_dim,
                 const double[::1] split_val,
                 const cnp.int64_t[::1] left,
                 const cnp.int64_t[::1] right,
                 const cnp.int64_t[::1] start,
                 const cnp.int64_t[::1] stop,
                 const double[:, ::1] queries):
    cdef Py_ssize_t nq = queries.shape[0], dim = points.shape[1]
    cdef Py_ssize_t n_nodes = split_dim.shape[0]
    out_arr = np.empty(nq, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    node_stack_arr = np.empty(2 * n_nodes + 2, dtype=np.int64)
    bound_stack_arr = np.empty(2 * n_nodes + 2, dtype=np.float64)
    cdef cnp.int64_t[::1] node_stack = node_stack_arr
    cdef double[::1] bound_stack = bound_stack_arr
    cdef Py_ssize_t qi, top, node, i, j, idx, best_idx
    cdef double best, d, diff, bound
    for qi in range(nq):
        best = np.inf
        best_idx = -1
        top = 0
        node_stack[0] = 0
        bound_stack[0] = 0.0
        top = 1
        while top > 0:
            top -= 1
            node = node_stack[top]
            bound = bound_stack[top]
            if bound > best:
                continue
            if split_dim[node] < 0:
                for i in range(start[node], stop[node]):
                    idx = perm[i]
                    d = 0.0
                    for j in range(dim):
                        diff = queries[qi, j] - points[idx, j]
                        d += diff * diff
                    if d < best or (d == best and idx < best_idx):
                        best = d
                        best_idx = idx
                continue
            diff = queries[qi, split_dim[node]] - split_val[node]
            if diff < 0:
                node_stack[top] = right[node]
                bound_stack[top] = diff * diff
                top += 1
                node_stack[top] = left[node]
                bound_stack[top] = 0.0
                top += 1
            else:
                node_stack[top] = left[node]
                bound_stack[top] = diff * diff
                top += 1
                node_stack[top] = right[node]
                bound_stack[top] = 0.0
                top += 1
        out[qi] = best_idx
    return out_arr


def descriptor_histogram(const double[:, ::1] magnitude,
                         const double[:, ::1] orientation,
                         Py_ssize_t cx, Py_ssize_t cy,
                         double hist_width, Py_ssize_t radius, double angle):
    cdef int d = 4, n = 8
    buf_arr = np.zeros((d + 2, d + 2, n + 2), dtype=np.float64)
    cdef double[:, :, ::1] buf = buf_arr
    cdef double cos_t = np.cos(angle) / hist_width
    cdef double sin_t = np.sin(angle) / hist_width
    cdef double exp_scale = -1.0 / (d * d * 0.5)
    cdef double bins_per_rad = n / (2.0 * M_PI)
    cdef Py_ssize_t i, j, r0, c0, o0
    cdef double c_rot, r_rot, rbin, cbin, obin, wgt, mag
    cdef double dr, dc, do_, v_r1, v_r0, v_rc11, v_rc10, v_rc01, v_rc00
    for i in range(-radius, radius + 1):
        for j in range(-radius, radius + 1):
            c_rot = j * cos_t + i * sin_t
            r_rot = -j * sin_t + i * cos_t
            rbin = r_rot + d / 2.0 - 0.5
            cbin = c_rot + d / 2.0 - 0.5
            if not (rbin > -1.0 and rbin < d and cbin > -1.0 and cbin < d):
                continue
            wgt = exp((c_rot * c_rot + r_rot * r_rot) * exp_scale)
            mag = magnitude[cy + i, cx + j] * wgt
            obin = (orientation[cy + i, cx + j] - angle) * bins_per_rad
            r0 = <Py_ssize_t>floor(rbin)
            c0 = <Py_ssize_t>floor(cbin)
            o0 = <Py_ssize_t>floor(obin)
            dr = rbin - r0
            dc = cbin - c0
            do_ = obin - o0
            o0 = o0 % n
            if o0 < 0:
                o0 += n
            v_r1 = mag * dr
            v_r0 = mag - v_r1
            v_rc11 = v_r1 * dc
            v_rc10 = v_r1 - v_rc11
            v_rc01 = v_r0 * dc
            v_rc00 = v_r0 - v_rc01
            buf[r0 + 1, c0 + 1, o0] += v_rc00 * (1 - do_)
            buf[r0 + 1, c0 + 1, o0 + 1] += v_rc00 * do_
            buf[r0 + 1, c0 + 2, o0] += v_rc01 * (1 - do_)
            buf[r0 + 1, c0 + 2, o0 + 1] += v_rc01 * do_
            buf[r0 + 2, c0 + 1, o0] += v_rc10 * (1 - do_)
            buf[r0 + 2, c0 + 1, o0 + 1] += v_rc10 * do_
            buf[r0 + 2, c0 + 2, o0] += v_rc11 * (1 - do_)
            buf[r0 + 2, c0 + 2, o0 + 1] += v_rc11 * do_
    out = np.array(buf_arr[1:d + 1, 1:d + 1, :n])
    out[:, :, 0] += buf_arr[1:d + 1, 1:d + 1, n]
    return out.reshape(-1)
