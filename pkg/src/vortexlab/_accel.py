"""Compiled inner loops: direct Biot-Savart summation and the quadtree code.

Everything here is deterministic: per-target accumulation always runs in
source-index order (direct sums) or in fixed depth-first traversal order
(tree sums), so the parallel drivers are bitwise identical to the serial
ones; parallelism is only over independent targets.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

INV2PI = 1.0 / (2.0 * math.pi)

_MAX_DEPTH = 48


@njit(cache=True, inline="never")
def _direct_at(tx, ty, sx, sy, sw, delta2, singular):
    """Raw (un-normalized) induced velocity at one target; returns (ux, uy, bad)."""
    ux = 0.0
    uy = 0.0
    bad = 0
    for i in range(sx.shape[0]):
        dx = tx - sx[i]
        dy = ty - sy[i]
        r2 = dx * dx + dy * dy + delta2
        if r2 == 0.0:
            if singular:
                bad = 1
            continue
        c = sw[i] / r2
        ux -= c * dy
        uy += c * dx
    return ux, uy, bad


@njit(cache=True)
def direct_eval_serial(sx, sy, sw, tx, ty, delta2, singular, out, flags):
    for j in range(tx.shape[0]):
        ux, uy, bad = _direct_at(tx[j], ty[j], sx, sy, sw, delta2, singular)
        out[j, 0] = ux * INV2PI
        out[j, 1] = uy * INV2PI
        flags[j] = bad


@njit(cache=True, parallel=True)
def direct_eval_parallel(sx, sy, sw, tx, ty, delta2, singular, out, flags):
    for j in prange(tx.shape[0]):
        ux, uy, bad = _direct_at(tx[j], ty[j], sx, sy, sw, delta2, singular)
        out[j, 0] = ux * INV2PI
        out[j, 1] = uy * INV2PI
        flags[j] = bad


# ---------------------------------------------------------------------------
# Quadtree build
# ---------------------------------------------------------------------------

@njit(cache=True)
def build_tree(px, py, pw, leaf_size, order, cap):
    """Build a quadtree over the particles, permuting them into tree order.

    Returns (status, n_nodes, perm, node arrays...).  status is 0 on success
    and 1 when ``cap`` nodes were not enough (caller retries with more).
    Children are created in a fixed quadrant order, so the structure is a
    pure function of the inputs.
    """
    n = px.shape[0]
    perm = np.arange(n)
    x = px.copy()
    y = py.copy()
    w = pw.copy()

    child = np.full((cap, 4), -1, dtype=np.int32)
    start = np.zeros(cap, dtype=np.int64)
    end = np.zeros(cap, dtype=np.int64)
    is_leaf = np.zeros(cap, dtype=np.int8)
    cx = np.zeros(cap)          # expansion center (|w|-weighted centroid)
    cy = np.zeros(cap)
    side = np.zeros(cap)        # geometric side length
    rmax = np.zeros(cap)        # max particle distance from expansion center
    nm = (order + 1) * (order + 2) // 2
    moments = np.zeros((cap, nm))

    if n == 0:
        start[0] = 0
        end[0] = 0
        is_leaf[0] = 1
        side[0] = 1.0
        return 0, 1, perm, child, start, end, is_leaf, cx, cy, side, rmax, moments

    xmin = x[0]
    xmax = x[0]
    ymin = y[0]
    ymax = y[0]
    for i in range(n):
        if x[i] < xmin:
            xmin = x[i]
        if x[i] > xmax:
            xmax = x[i]
        if y[i] < ymin:
            ymin = y[i]
        if y[i] > ymax:
            ymax = y[i]
    side0 = max(xmax - xmin, ymax - ymin)
    if side0 <= 0.0:
        side0 = 1.0
    side0 *= 1.0 + 1e-12

    gx0 = 0.5 * (xmin + xmax)
    gy0 = 0.5 * (ymin + ymax)

    # geometric centers of pending nodes live on the stack
    stack_node = np.empty(8 * _MAX_DEPTH + 16, dtype=np.int64)
    stack_gx = np.empty(stack_node.shape[0])
    stack_gy = np.empty(stack_node.shape[0])
    stack_side = np.empty(stack_node.shape[0])
    stack_depth = np.empty(stack_node.shape[0], dtype=np.int64)

    tmp_x = np.empty(n)
    tmp_y = np.empty(n)
    tmp_w = np.empty(n)
    tmp_p = np.empty(n, dtype=np.int64)

    n_nodes = 1
    start[0] = 0
    end[0] = n
    sp = 0
    stack_node[sp] = 0
    stack_gx[sp] = gx0
    stack_gy[sp] = gy0
    stack_side[sp] = side0
    stack_depth[sp] = 0
    sp += 1

    while sp > 0:
        sp -= 1
        nid = stack_node[sp]
        gx = stack_gx[sp]
        gy = stack_gy[sp]
        s = stack_side[sp]
        depth = stack_depth[sp]
        a = start[nid]
        b = end[nid]
        side[nid] = s

        if b - a <= leaf_size or depth >= _MAX_DEPTH:
            is_leaf[nid] = 1
            continue

        # stable counting partition into quadrants 0..3:
        # q = (x >= gx) + 2*(y >= gy)
        cnt0 = 0
        cnt1 = 0
        cnt2 = 0
        cnt3 = 0
        for i in range(a, b):
            q = 0
            if x[i] >= gx:
                q += 1
            if y[i] >= gy:
                q += 2
            if q == 0:
                cnt0 += 1
            elif q == 1:
                cnt1 += 1
            elif q == 2:
                cnt2 += 1
            else:
                cnt3 += 1
        off0 = 0
        off1 = cnt0
        off2 = cnt0 + cnt1
        off3 = cnt0 + cnt1 + cnt2
        for i in range(a, b):
            q = 0
            if x[i] >= gx:
                q += 1
            if y[i] >= gy:
                q += 2
            if q == 0:
                k = off0
                off0 += 1
            elif q == 1:
                k = off1
                off1 += 1
            elif q == 2:
                k = off2
                off2 += 1
            else:
                k = off3
                off3 += 1
            tmp_x[k] = x[i]
            tmp_y[k] = y[i]
            tmp_w[k] = w[i]
            tmp_p[k] = perm[i]
        for i in range(b - a):
            x[a + i] = tmp_x[i]
            y[a + i] = tmp_y[i]
            w[a + i] = tmp_w[i]
            perm[a + i] = tmp_p[i]

        half = 0.5 * s
        quarter = 0.25 * s
        cstart = a
        counts = (cnt0, cnt1, cnt2, cnt3)
        for q in range(4):
            cq = counts[q]
            if cq == 0:
                continue
            if n_nodes >= cap:
                return 1, n_nodes, perm, child, start, end, is_leaf, cx, cy, side, rmax, moments
            cid = n_nodes
            n_nodes += 1
            child[nid, q] = cid
            start[cid] = cstart
            end[cid] = cstart + cq
            cgx = gx - quarter if q % 2 == 0 else gx + quarter
            cgy = gy - quarter if q < 2 else gy + quarter
            stack_node[sp] = cid
            stack_gx[sp] = cgx
            stack_gy[sp] = cgy
            stack_side[sp] = half
            stack_depth[sp] = depth + 1
            sp += 1
            cstart += cq

    # second pass: expansion centers, radii, circulation moments
    xp = np.empty(order + 1)
    yp = np.empty(order + 1)
    for nid in range(n_nodes):
        a = start[nid]
        b = end[nid]
        wa = 0.0
        sx_ = 0.0
        sy_ = 0.0
        for i in range(a, b):
            aw = abs(w[i])
            wa += aw
            sx_ += aw * x[i]
            sy_ += aw * y[i]
        if wa > 0.0:
            ex = sx_ / wa
            ey = sy_ / wa
        else:
            ex = 0.0
            ey = 0.0
            for i in range(a, b):
                ex += x[i]
                ey += y[i]
            if b > a:
                ex /= b - a
                ey /= b - a
        cx[nid] = ex
        cy[nid] = ey
        r2m = 0.0
        for i in range(a, b):
            vx = x[i] - ex
            vy = y[i] - ey
            r2 = vx * vx + vy * vy
            if r2 > r2m:
                r2m = r2
        rmax[nid] = math.sqrt(r2m)
        for i in range(a, b):
            vx = x[i] - ex
            vy = y[i] - ey
            wi = w[i]
            xp[0] = 1.0
            yp[0] = 1.0
            for k in range(1, order + 1):
                xp[k] = xp[k - 1] * vx
                yp[k] = yp[k - 1] * vy
            # Taylor sign (-1)^degree folded into the stored moments
            idx = 0
            sgn = 1.0
            for d in range(order + 1):
                for a1 in range(d, -1, -1):
                    moments[nid, idx] += sgn * wi * xp[a1] * yp[d - a1]
                    idx += 1
                sgn = -sgn

    return 0, n_nodes, perm, child, start, end, is_leaf, cx, cy, side, rmax, moments


# ---------------------------------------------------------------------------
# Tree evaluation
# ---------------------------------------------------------------------------

# coefficient tables for the Taylor recurrence, indexed by k (or l) <= 15
_C1 = np.array([0.0] + [(n - 1.0) / n for n in range(1, 16)])
_C2 = np.array([0.0] + [(n - 2.0) / n for n in range(1, 16)])
_FL = np.arange(16.0)
_TRI = np.array([d * (d + 1) // 2 for d in range(16)], dtype=np.int64)


@njit(cache=True, inline="never")
def _tree_at(tx, ty, px, py, pw, child, start, end, is_leaf, cx, cy, rmax,
             moments, delta2, mac2, order, stack, acoef):
    """Raw induced velocity at one target by depth-first tree traversal.

    Far cells use a Taylor expansion of the blob stream function
    g = log(|z|^2 + delta^2): the coefficients a[k,l] = d^(k,l) g / (k! l!)
    satisfy a two-term recurrence obtained by differentiating
    (|z|^2 + delta^2) * dg/dx = 2x, so no symbolic kernel derivatives are
    needed and the blob width enters exactly.  Moments are stored with the
    Taylor sign (-1)^degree folded in; contraction happens inline as each
    coefficient is produced.
    """
    ux = 0.0
    uy = 0.0
    p1 = order + 1
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        nid = stack[sp]
        if is_leaf[nid]:
            for i in range(start[nid], end[nid]):
                dx = tx - px[i]
                dy = ty - py[i]
                r2 = dx * dx + dy * dy + delta2
                c = pw[i] / r2
                ux -= c * dy
                uy += c * dx
            continue
        ddx = tx - cx[nid]
        ddy = ty - cy[nid]
        d2 = ddx * ddx + ddy * ddy
        rm = rmax[nid]
        if rm * rm <= mac2 * d2:
            x2 = 2.0 * ddx
            y2 = 2.0 * ddy
            invt = 1.0 / (d2 + delta2)
            ex = 0.0
            ey = 0.0
            # row k = 0 (y-recurrence); contraction for u_x needs l >= 1
            am1 = 0.0
            am2 = 0.0
            for l in range(1, p1 + 1):
                if l == 1:
                    acc = y2
                elif l == 2:
                    acc = 1.0 - y2 * _C1[2] * am1
                else:
                    acc = -(y2 * _C1[l] * am1 + _C2[l] * am2)
                a = acc * invt
                acoef[0, l] = a
                dm = l - 1
                ex -= moments[nid, _TRI[dm] + dm] * _FL[l] * a
                am2 = am1
                am1 = a
            # rows k >= 1 (x-recurrence)
            for k in range(1, p1 + 1):
                c1x = x2 * _C1[k]
                c2x = _C2[k]
                am1 = 0.0
                am2 = 0.0
                for l in range(0, p1 + 1 - k):
                    if k == 1:
                        acc = x2 if l == 0 else 0.0
                    elif k == 2:
                        acc = 1.0 if l == 0 else 0.0
                        acc -= c1x * acoef[1, l]
                    else:
                        acc = -c1x * acoef[k - 1, l] - c2x * acoef[k - 2, l]
                    if l >= 1:
                        acc -= y2 * am1
                    if l >= 2:
                        acc -= am2
                    a = acc * invt
                    acoef[k, l] = a
                    if l >= 1:
                        dm = k + l - 1
                        ex -= moments[nid, _TRI[dm] + dm - k] * _FL[l] * a
                    dm = k + l - 1
                    ey += moments[nid, _TRI[dm] + l] * _FL[k] * a
                    am2 = am1
                    am1 = a
            ux += 0.5 * ex
            uy += 0.5 * ey
            continue
        # descend; push children in reverse so quadrant 0 is processed first
        for q in range(3, -1, -1):
            c = child[nid, q]
            if c >= 0:
                stack[sp] = c
                sp += 1
    return ux, uy


_CHUNK = 128


@njit(cache=True)
def tree_eval_serial(tx, ty, px, py, pw, child, start, end, is_leaf, cx, cy,
                     rmax, moments, delta2, mac2, order, out):
    p2 = order + 2
    stack = np.empty(8 * _MAX_DEPTH + 16, dtype=np.int64)
    acoef = np.zeros((p2, p2))
    for j in range(tx.shape[0]):
        ux, uy = _tree_at(tx[j], ty[j], px, py, pw, child, start, end, is_leaf,
                          cx, cy, rmax, moments, delta2, mac2, order, stack, acoef)
        out[j, 0] = ux * INV2PI
        out[j, 1] = uy * INV2PI


@njit(cache=True, parallel=True)
def tree_eval_parallel(tx, ty, px, py, pw, child, start, end, is_leaf, cx, cy,
                       rmax, moments, delta2, mac2, order, out):
    p2 = order + 2
    n = tx.shape[0]
    nchunk = (n + _CHUNK - 1) // _CHUNK
    for c in prange(nchunk):
        stack = np.empty(8 * _MAX_DEPTH + 16, dtype=np.int64)
        acoef = np.zeros((p2, p2))
        j0 = c * _CHUNK
        j1 = min(n, j0 + _CHUNK)
        for j in range(j0, j1):
            ux, uy = _tree_at(tx[j], ty[j], px, py, pw, child, start, end, is_leaf,
                              cx, cy, rmax, moments, delta2, mac2, order, stack, acoef)
            out[j, 0] = ux * INV2PI
            out[j, 1] = uy * INV2PI
