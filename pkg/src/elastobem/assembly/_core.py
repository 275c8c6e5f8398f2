"""Compiled integration loops.

Every discrete operator is a local algebraic combination of a few kernel
moments per (test, trial) pair:

    surface moments, layout (10,):  [1/r, U_xx, U_yy, U_zz, U_xy, U_xz, U_yz,
                                     dn(1/r) l_0, dn(1/r) l_1, dn(1/r) l_2]
    line moments, layout (2, 7):    [endpoint][1/r, U (6 comps)] weighted by
                                     the endpoint hat along the segment

U is the Kelvin tensor, dn the normal derivative on the trial side and l_k
the trial barycentric functions.  Line moments integrate over the segment
parameter xi in [0, 1] (not arc length).
"""
from __future__ import annotations

import numpy as np
from numba import njit

FAR, NEAR, COINCIDENT, EDGE, VERTEX = 0, 1, 2, 3, 4


@njit(cache=True, inline="always")
def _acc_u(rx, ry, rz, w, a, b, out, o):
    rho2 = rx * rx + ry * ry + rz * rz
    ir = 1.0 / np.sqrt(rho2)
    bb = b * w * ir / rho2
    aa = a * w * ir
    out[o] += w * ir
    out[o + 1] += aa + bb * rx * rx
    out[o + 2] += aa + bb * ry * ry
    out[o + 3] += aa + bb * rz * rz
    out[o + 4] += bb * rx * ry
    out[o + 5] += bb * rx * rz
    out[o + 6] += bb * ry * rz
    return ir


@njit(cache=True)
def _pair_rule(ct, cs, ns, scale, pt, ps, w, perm, a, b, out):
    """Accumulate surface moments of one triangle pair.

    ``ct``/``cs`` are (3, 3) corner arrays in the local order the rule
    expects; ``perm[k]`` maps rule-local trial vertex k to the original one.
    """
    t10x, t10y, t10z = ct[1, 0] - ct[0, 0], ct[1, 1] - ct[0, 1], ct[1, 2] - ct[0, 2]
    t20x, t20y, t20z = ct[2, 0] - ct[0, 0], ct[2, 1] - ct[0, 1], ct[2, 2] - ct[0, 2]
    s10x, s10y, s10z = cs[1, 0] - cs[0, 0], cs[1, 1] - cs[0, 1], cs[1, 2] - cs[0, 2]
    s20x, s20y, s20z = cs[2, 0] - cs[0, 0], cs[2, 1] - cs[0, 1], cs[2, 2] - cs[0, 2]
    for q in range(w.shape[0]):
        u, v = pt[q, 0], pt[q, 1]
        s, t = ps[q, 0], ps[q, 1]
        rx = ct[0, 0] + u * t10x + v * t20x - (cs[0, 0] + s * s10x + t * s20x)
        ry = ct[0, 1] + u * t10y + v * t20y - (cs[0, 1] + s * s10y + t * s20y)
        rz = ct[0, 2] + u * t10z + v * t20z - (cs[0, 2] + s * s10z + t * s20z)
        wq = w[q] * scale
        ir = _acc_u(rx, ry, rz, wq, a, b, out, 0)
        dl = wq * (rx * ns[0] + ry * ns[1] + rz * ns[2]) * ir * ir * ir
        out[7 + perm[0]] += dl * (1.0 - s - t)
        out[7 + perm[1]] += dl * s
        out[7 + perm[2]] += dl * t


@njit(cache=True)
def classify_pair(tri, cent, rad, diam, i, j, eta):
    ns = 0
    for k in range(3):
        for l in range(3):
            if tri[i, k] == tri[j, l]:
                ns += 1
    if ns == 3:
        return COINCIDENT
    if ns == 2:
        return EDGE
    if ns == 1:
        return VERTEX
    d = 0.0
    for c in range(3):
        d += (cent[i, c] - cent[j, c]) ** 2
    d = np.sqrt(d) - rad[i] - rad[j]
    if d < eta * max(diam[i], diam[j]):
        return NEAR
    return FAR


@njit(cache=True)
def galerkin_moments(tri, corners, normals, areas, cent, rad, diam, pi_, pj_, eta, a, b,
                     far_t, far_s, far_w, near_t, near_s, near_w,
                     co_t, co_s, co_w, ed_t, ed_s, ed_w, ve_t, ve_s, ve_w):
    P = pi_.shape[0]
    out = np.zeros((P, 10))
    ct = np.empty((3, 3))
    cs = np.empty((3, 3))
    perm = np.empty(3, np.int64)
    tperm = np.empty(3, np.int64)
    for p in range(P):
        i, j = pi_[p], pj_[p]
        kind = classify_pair(tri, cent, rad, diam, i, j, eta)
        for k in range(3):
            perm[k] = k
            tperm[k] = k
        if kind == EDGE or kind == VERTEX:
            # shared vertices first, same order on both sides
            m = 0
            for k in range(3):
                for l in range(3):
                    if tri[i, k] == tri[j, l]:
                        tperm[m] = k
                        perm[m] = l
                        m += 1
            if m == 2 and tri[i, tperm[0]] > tri[i, tperm[1]]:
                # canonical edge direction keeps (i, j) and (j, i) consistent
                tperm[0], tperm[1] = tperm[1], tperm[0]
                perm[0], perm[1] = perm[1], perm[0]
            for k in range(3):
                used = False
                for q in range(m):
                    if tperm[q] == k:
                        used = True
                if not used:
                    tperm[m] = k
                    m += 1
            m2 = 2 if kind == EDGE else 1
            for l in range(3):
                used = False
                for q in range(m2):
                    if perm[q] == l:
                        used = True
                if not used:
                    perm[m2] = l
                    m2 += 1
        for k in range(3):
            for c in range(3):
                ct[k, c] = corners[i, tperm[k], c]
                cs[k, c] = corners[j, perm[k], c]
        scale = 4.0 * areas[i] * areas[j]
        o = out[p]
        if kind == FAR:
            _pair_rule(ct, cs, normals[j], scale, far_t, far_s, far_w, perm, a, b, o)
        elif kind == NEAR:
            _pair_rule(ct, cs, normals[j], scale, near_t, near_s, near_w, perm, a, b, o)
        elif kind == COINCIDENT:
            _pair_rule(ct, cs, normals[j], scale, co_t, co_s, co_w, perm, a, b, o)
        elif kind == EDGE:
            _pair_rule(ct, cs, normals[j], scale, ed_t, ed_s, ed_w, perm, a, b, o)
        else:
            _pair_rule(ct, cs, normals[j], scale, ve_t, ve_s, ve_w, perm, a, b, o)
    return out


@njit(cache=True)
def _point_rule(x, c, n, scale, pts, w, a, b, out):
    for q in range(w.shape[0]):
        s, t = pts[q, 0], pts[q, 1]
        rx = x[0] - (c[0, 0] + s * (c[1, 0] - c[0, 0]) + t * (c[2, 0] - c[0, 0]))
        ry = x[1] - (c[0, 1] + s * (c[1, 1] - c[0, 1]) + t * (c[2, 1] - c[0, 1]))
        rz = x[2] - (c[0, 2] + s * (c[1, 2] - c[0, 2]) + t * (c[2, 2] - c[0, 2]))
        wq = w[q] * scale
        ir = _acc_u(rx, ry, rz, wq, a, b, out, 0)
        dl = wq * (rx * n[0] + ry * n[1] + rz * n[2]) * ir * ir * ir
        out[7] += dl * (1.0 - s - t)
        out[8] += dl * s
        out[9] += dl * t


@njit(cache=True)
def collocation_moments(points, pvert, pelem, tri, corners, normals, areas, cent, rad, diam,
                        pp, pe, eta, a, b, far_p, far_w, near_p, near_w, near2_p, near2_w,
                        duf_p, duf_w, mid_p, mid_w):
    """Moments of (collocation point, trial triangle) pairs.

    ``pvert[i]`` is the mesh vertex at point i (or -1), ``pelem[i]`` the
    triangle whose centroid it is (or -1).
    """
    P = pp.shape[0]
    out = np.zeros((P, 10))
    for p in range(P):
        i, j = pp[p], pe[p]
        x = points[i]
        scale = 2.0 * areas[j]
        o = out[p]
        loc = -1
        for k in range(3):
            if tri[j, k] == pvert[i]:
                loc = k
        if loc >= 0:
            _point_rule(x, corners[j], normals[j], scale, duf_p[loc], duf_w[loc], a, b, o)
            continue
        if pelem[i] == j:
            _point_rule(x, corners[j], normals[j], scale, mid_p, mid_w, a, b, o)
            continue
        d = 0.0
        for c in range(3):
            d += (x[c] - cent[j, c]) ** 2
        d = np.sqrt(d) - rad[j]
        if d < 0.25 * eta * diam[j]:
            _point_rule(x, corners[j], normals[j], scale, near2_p, near2_w, a, b, o)
        elif d < eta * diam[j]:
            _point_rule(x, corners[j], normals[j], scale, near_p, near_w, a, b, o)
        else:
            _point_rule(x, corners[j], normals[j], scale, far_p, far_w, a, b, o)
    return out


# ---------------------------------------------------------------- line terms


@njit(cache=True)
def _seg_gauss(x, p1, d, lo, hi, xs, ws, wscale, a, b, out):
    """Plain Gauss on xi in [lo, hi] of {1/r, U} times the endpoint hats."""
    h = hi - lo
    for q in range(ws.shape[0]):
        xi = lo + h * xs[q]
        rx = x[0] - p1[0] - xi * d[0]
        ry = x[1] - p1[1] - xi * d[1]
        rz = x[2] - p1[2] - xi * d[2]
        wq = ws[q] * h * wscale
        _acc_u(rx, ry, rz, wq * (1.0 - xi), a, b, out[0], 0)
        _acc_u(rx, ry, rz, wq * xi, a, b, out[1], 0)


@njit(cache=True)
def _seg_sinh(x, p1, d, xs, ws, wscale, a, b, out):
    """Segment integral robust for x close to the segment (sinh map)."""
    L2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    q0 = (x[0] - p1[0]) * d[0] + (x[1] - p1[1]) * d[1] + (x[2] - p1[2]) * d[2]
    xi0 = q0 / L2
    wx, wy, wz = x[0] - p1[0], x[1] - p1[1], x[2] - p1[2]
    # squared distance to the supporting line via the cross product (no cancellation)
    cx = wy * d[2] - wz * d[1]
    cy = wz * d[0] - wx * d[2]
    cz = wx * d[1] - wy * d[0]
    delta2 = (cx * cx + cy * cy + cz * cz) / (L2 * L2)
    if delta2 < 1e-24 * (wx * wx + wy * wy + wz * wz) / L2:
        # on the supporting line: the closest point is an endpoint
        _seg_gauss(x, p1, d, 0.0, 1.0, xs, ws, wscale, a, b, out)
        return
    delta = np.sqrt(delta2)
    c = min(max(xi0, 0.0), 1.0)
    for piece in range(2):
        lo = 0.0 if piece == 0 else c
        hi = c if piece == 0 else 1.0
        if hi - lo <= 0.0:
            continue
        wa = np.arcsinh((lo - xi0) / delta)
        wb = np.arcsinh((hi - xi0) / delta)
        for q in range(ws.shape[0]):
            wv = wa + (wb - wa) * xs[q]
            xi = xi0 + delta * np.sinh(wv)
            jac = delta * np.cosh(wv) * (wb - wa)
            rx = x[0] - p1[0] - xi * d[0]
            ry = x[1] - p1[1] - xi * d[1]
            rz = x[2] - p1[2] - xi * d[2]
            wq = ws[q] * jac * wscale
            _acc_u(rx, ry, rz, wq * (1.0 - xi), a, b, out[0], 0)
            _acc_u(rx, ry, rz, wq * xi, a, b, out[1], 0)


@njit(cache=True)
def collocation_line_moments(points, pvert, ev1, ev2, ep1, ep2, pp, pe, eta, a, b,
                             gx, gw, px, pw, mode):
    """Line moments of (collocation point, boundary segment) pairs.

    mode 0: finite-part (Paget) rules when the point is a segment end,
    mode 1: plain Gauss on those singular segments (for comparison only).
    """
    P = pp.shape[0]
    out = np.zeros((P, 2, 7))
    d = np.empty(3)
    for p in range(P):
        i, e = pp[p], pe[p]
        x = points[i]
        p1 = ep1[e]
        for c in range(3):
            d[c] = ep2[e, c] - p1[c]
        o = out[p]
        if pvert[i] == ev1[e] or pvert[i] == ev2[e]:
            if mode == 1:
                _seg_gauss(x, p1, d, 0.0, 1.0, gx, gw, 1.0, a, b, o)
                continue
            at_start = pvert[i] == ev1[e]
            for q in range(pw.shape[0]):
                # fp int_0^1 F(xi) dxi with F ~ 1/xi: weight pw, node px (times xi)
                t = px[q]
                xi = t if at_start else 1.0 - t
                rx = x[0] - p1[0] - xi * d[0]
                ry = x[1] - p1[1] - xi * d[1]
                rz = x[2] - p1[2] - xi * d[2]
                wq = pw[q] * t
                _acc_u(rx, ry, rz, wq * (1.0 - xi), a, b, o[0], 0)
                _acc_u(rx, ry, rz, wq * xi, a, b, o[1], 0)
            continue
        L = np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
        mx = 0.5 * (p1[0] + ep2[e, 0]) - x[0]
        my = 0.5 * (p1[1] + ep2[e, 1]) - x[1]
        mz = 0.5 * (p1[2] + ep2[e, 2]) - x[2]
        dist = np.sqrt(mx * mx + my * my + mz * mz) - 0.5 * L
        if dist < eta * L:
            _seg_sinh(x, p1, d, gx, gw, 1.0, a, b, o)
        else:
            _seg_gauss(x, p1, d, 0.0, 1.0, gx, gw, 1.0, a, b, o)
    return out


@njit(cache=True)
def galerkin_line_moments(tri, corners, areas, cent, rad, diam, ev1, ev2, ep1, ep2, pt, pe, eta, a, b,
                          far_p, far_w, near_p, near_w, edge_p, edge_w, duf_p, duf_w, gx, gw):
    """Moments of (test triangle, boundary segment) pairs, outer surface integral.

    ``edge_p[k]`` grades toward the triangle side opposite local vertex k,
    ``duf_p[k]`` is collapsed at local vertex k.
    """
    P = pt.shape[0]
    out = np.zeros((P, 2, 7))
    d = np.empty(3)
    x = np.empty(3)
    for p in range(P):
        i, e = pt[p], pe[p]
        c = corners[i]
        p1 = ep1[e]
        for k in range(3):
            d[k] = ep2[e, k] - p1[k]
        L = np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
        s1 = -1
        s2 = -1
        for k in range(3):
            if tri[i, k] == ev1[e]:
                s1 = k
            if tri[i, k] == ev2[e]:
                s2 = k
        scale = 2.0 * areas[i]
        mode = 0
        if s1 >= 0 and s2 >= 0:
            rule_p = edge_p[3 - s1 - s2]
            rule_w = edge_w[3 - s1 - s2]
            mode = 1
        elif s1 >= 0 or s2 >= 0:
            k = s1 if s1 >= 0 else s2
            rule_p = duf_p[k]
            rule_w = duf_w[k]
            mode = 1
        else:
            mx = 0.5 * (p1[0] + ep2[e, 0]) - cent[i, 0]
            my = 0.5 * (p1[1] + ep2[e, 1]) - cent[i, 1]
            mz = 0.5 * (p1[2] + ep2[e, 2]) - cent[i, 2]
            dist = np.sqrt(mx * mx + my * my + mz * mz) - 0.5 * L - rad[i]
            if dist < eta * max(L, diam[i]):
                rule_p = near_p
                rule_w = near_w
                mode = 1
            else:
                rule_p = far_p
                rule_w = far_w
        for q in range(rule_w.shape[0]):
            s, t = rule_p[q, 0], rule_p[q, 1]
            for k in range(3):
                x[k] = c[0, k] + s * (c[1, k] - c[0, k]) + t * (c[2, k] - c[0, k])
            if mode == 1:
                _seg_sinh(x, p1, d, gx, gw, rule_w[q] * scale, a, b, out[p])
            else:
                _seg_gauss(x, p1, d, 0.0, 1.0, gx, gw, rule_w[q] * scale, a, b, out[p])
    return out


@njit(cache=True)
def line_line_moments(ev1, ev2, ep1, ep2, pa, pb, a, b, gx, gw, sq_p, sq_w, self_mode):
    """Moments of (segment, segment) pairs, layout (P, 2, 2, 7).

    Segments sharing one end use a Duffy square collapsed at the common
    corner.  Identical segments are log-divergent: self_mode 0 drops them,
    self_mode 1 keeps the Hadamard finite part (log|xi - eta| term of the
    parameter-space expansion removed).
    """
    P = pa.shape[0]
    out = np.zeros((P, 2, 2, 7))
    tmp = np.zeros((2, 7))
    x = np.empty(3)
    da = np.empty(3)
    db = np.empty(3)
    for p in range(P):
        e, f = pa[p], pb[p]
        for k in range(3):
            da[k] = ep2[e, k] - ep1[e, k]
            db[k] = ep2[f, k] - ep1[f, k]
        same = (ev1[e] == ev1[f] and ev2[e] == ev2[f]) or (ev1[e] == ev2[f] and ev2[e] == ev1[f])
        if same:
            if self_mode == 1:
                _self_segment(ep1[e], da, ev1[e] == ev1[f], a, b, gx, gw, out[p])
            continue
        # shared endpoint: parameters of the common corner on each segment
        ca = -1.0
        cb = -1.0
        if ev1[e] == ev1[f]:
            ca, cb = 0.0, 0.0
        elif ev1[e] == ev2[f]:
            ca, cb = 0.0, 1.0
        elif ev2[e] == ev1[f]:
            ca, cb = 1.0, 0.0
        elif ev2[e] == ev2[f]:
            ca, cb = 1.0, 1.0
        if ca >= 0.0:
            for q in range(sq_w.shape[0]):
                s, t = sq_p[q, 0], sq_p[q, 1]
                for half in range(2):
                    # triangle halves of the square, Jacobian s
                    ra = s if half == 0 else s * t
                    rb = s * t if half == 0 else s
                    xa = ra if ca == 0.0 else 1.0 - ra
                    xb = rb if cb == 0.0 else 1.0 - rb
                    for k in range(3):
                        x[k] = ep1[e, k] + xa * da[k]
                    rx = x[0] - ep1[f, 0] - xb * db[0]
                    ry = x[1] - ep1[f, 1] - xb * db[1]
                    rz = x[2] - ep1[f, 2] - xb * db[2]
                    w = sq_w[q] * s
                    la0, la1 = 1.0 - xa, xa
                    lb0, lb1 = 1.0 - xb, xb
                    _acc_u(rx, ry, rz, w * la0 * lb0, a, b, out[p, 0, 0], 0)
                    _acc_u(rx, ry, rz, w * la0 * lb1, a, b, out[p, 0, 1], 0)
                    _acc_u(rx, ry, rz, w * la1 * lb0, a, b, out[p, 1, 0], 0)
                    _acc_u(rx, ry, rz, w * la1 * lb1, a, b, out[p, 1, 1], 0)
            continue
        for q in range(gw.shape[0]):
            xa = gx[q]
            for k in range(3):
                x[k] = ep1[e, k] + xa * da[k]
            tmp[:, :] = 0.0
            _seg_sinh(x, ep1[f], db, gx, gw, gw[q], a, b, tmp)
            for k in range(7):
                out[p, 0, 0, k] += (1.0 - xa) * tmp[0, k]
                out[p, 0, 1, k] += (1.0 - xa) * tmp[1, k]
                out[p, 1, 0, k] += xa * tmp[0, k]
                out[p, 1, 1, k] += xa * tmp[1, k]
    return out


@njit(cache=True)
def _self_segment(p1, d, aligned, a, b, gx, gw, out):
    """Finite part of the double integral over one segment with itself.

    On a straight segment r = (xi - eta) d, so 1/r and U scale as
    1/|xi - eta| times constants; the remaining scalar integrals
    fp int int h(xi, eta)/|xi - eta| with h bilinear are known in closed form
    once the log-divergent part is discarded.
    """
    L = np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
    # fp int_0^1 int_0^1 l_k(xi) l_m(eta) / |xi - eta| with fp int_0^1 dt/t = 0
    # equal hats: -8/9, opposite hats: -1/9
    vals = np.empty((2, 2))
    vals[0, 0] = -8.0 / 9.0
    vals[1, 1] = -8.0 / 9.0
    vals[0, 1] = -1.0 / 9.0
    vals[1, 0] = -1.0 / 9.0
    ux, uy, uz = d[0] / L, d[1] / L, d[2] / L
    for k in range(2):
        for m in range(2):
            mk = m if aligned else 1 - m
            w = vals[k, mk] / L
            out[k, m, 0] += w
            out[k, m, 1] += w * (a + b * ux * ux)
            out[k, m, 2] += w * (a + b * uy * uy)
            out[k, m, 3] += w * (a + b * uz * uz)
            out[k, m, 4] += w * b * ux * uy
            out[k, m, 5] += w * b * ux * uz
            out[k, m, 6] += w * b * uy * uz


# ---------------------------------------------------------------- scatter


@njit(cache=True, inline="always")
def _umat(m, o, U):
    U[0, 0] = m[o + 1]
    U[1, 1] = m[o + 2]
    U[2, 2] = m[o + 3]
    U[0, 1] = U[1, 0] = m[o + 4]
    U[0, 2] = U[2, 0] = m[o + 5]
    U[1, 2] = U[2, 1] = m[o + 6]


@njit(cache=True)
def scatter_v(out, rows, cols, pi_, pj_, mom):
    """out[3 rows[i]:, 3 cols[j]:] += U moment (P0 x P0 or point x P0)."""
    U = np.empty((3, 3))
    for p in range(pi_.shape[0]):
        r, c = rows[pi_[p]], cols[pj_[p]]
        if r < 0 or c < 0:
            continue
        _umat(mom[p], 0, U)
        for x in range(3):
            for y in range(3):
                out[3 * r + x, 3 * c + y] += U[x, y]


@njit(cache=True)
def scatter_k(out, rows, cols, tri, G, pi_, pj_, mom, mu):
    """Regularized double layer: (2mu U - I/(4pi r)) M(phi_j) + dn(1/r) phi_j/(4pi)."""
    U = np.empty((3, 3))
    A = np.empty((3, 3))
    f = 1.0 / (4.0 * np.pi)
    for p in range(pi_.shape[0]):
        r = rows[pi_[p]]
        if r < 0:
            continue
        j = pj_[p]
        m = mom[p]
        _umat(m, 0, U)
        for x in range(3):
            for y in range(3):
                A[x, y] = 2.0 * mu * U[x, y]
            A[x, x] -= f * m[0]
        for l in range(3):
            c = cols[tri[j, l]]
            if c < 0:
                continue
            g = G[j, l]
            for x in range(3):
                for y in range(3):
                    s = 0.0
                    for z in range(3):
                        s += A[x, z] * g[z, y]
                    out[3 * r + x, 3 * c + y] += s
                out[3 * r + x, 3 * c + x] += f * m[7 + l]


@njit(cache=True)
def scatter_d(out, rows, cols, tri, G, S, pi_, pj_, mom, mu):
    """Regularized hypersingular surface terms for P1 x P1."""
    U = np.empty((3, 3))
    B = np.empty((3, 3))
    BG = np.empty((3, 3))
    f = mu / (4.0 * np.pi)
    for p in range(pi_.shape[0]):
        i, j = pi_[p], pj_[p]
        m = mom[p]
        _umat(m, 0, U)
        phi = m[0]
        for x in range(3):
            for y in range(3):
                B[x, y] = 16.0 * np.pi * mu * U[x, y]
            B[x, x] -= 2.0 * phi
        for l in range(3):
            c = cols[tri[j, l]]
            if c < 0:
                continue
            gl = G[j, l]
            sl = S[j, l]
            for x in range(3):
                for y in range(3):
                    s = 0.0
                    for z in range(3):
                        s += B[x, z] * gl[z, y]
                    BG[x, y] = s
            for k in range(3):
                r = rows[tri[i, k]]
                if r < 0:
                    continue
                gk = G[i, k]
                sk = S[i, k]
                ss = sk[0] * sl[0] + sk[1] * sl[1] + sk[2] * sl[2]
                for x in range(3):
                    for y in range(3):
                        v = -phi * sk[x] * sl[y]
                        if x == y:
                            v += 2.0 * phi * ss
                        s = 0.0
                        for z in range(3):
                            s += gk[z, x] * BG[z, y]
                        out[3 * r + x, 3 * c + y] += f * (v - s)


@njit(cache=True, inline="always")
def _cross_mat(d, C):
    # C e = e x d
    C[0, 0] = 0.0
    C[0, 1] = d[2]
    C[0, 2] = -d[1]
    C[1, 0] = -d[2]
    C[1, 1] = 0.0
    C[1, 2] = d[0]
    C[2, 0] = d[1]
    C[2, 1] = -d[0]
    C[2, 2] = 0.0


@njit(cache=True)
def scatter_line_k(out, rows, cols, ev1, ev2, ep1, ep2, pi_, pe, mom, mu):
    """Line part of the regularized double layer: int (2mu U - I/(4pi r)) (u x dzeta)."""
    U = np.empty((3, 3))
    C = np.empty((3, 3))
    d = np.empty(3)
    f = 1.0 / (4.0 * np.pi)
    for p in range(pi_.shape[0]):
        r = rows[pi_[p]]
        if r < 0:
            continue
        e = pe[p]
        for k in range(3):
            d[k] = ep2[e, k] - ep1[e, k]
        _cross_mat(d, C)
        for end in range(2):
            c = cols[ev1[e]] if end == 0 else cols[ev2[e]]
            if c < 0:
                continue
            m = mom[p, end]
            _umat(m, 0, U)
            for x in range(3):
                for y in range(3):
                    s = 0.0
                    for z in range(3):
                        A = 2.0 * mu * U[x, z]
                        if x == z:
                            A -= f * m[0]
                        s += A * C[z, y]
                    out[3 * r + x, 3 * c + y] += s


@njit(cache=True)
def scatter_line_d_mixed(out, rows, cols, tri, G, S, ev1, ev2, ep1, ep2, pi_, pe, mom, mu, transpose):
    """Surface(test) x segment(trial) hypersingular coupling; ``transpose``
    writes the mirrored segment(test) x surface(trial) block instead."""
    U = np.empty((3, 3))
    C = np.empty((3, 3))
    BC = np.empty((3, 3))
    d = np.empty(3)
    f = mu / (4.0 * np.pi)
    for p in range(pi_.shape[0]):
        i, e = pi_[p], pe[p]
        for k in range(3):
            d[k] = ep2[e, k] - ep1[e, k]
        _cross_mat(d, C)
        for end in range(2):
            ln = ev1[e] if end == 0 else ev2[e]
            m = mom[p, end]
            _umat(m, 0, U)
            phi = m[0]
            for x in range(3):
                for y in range(3):
                    s = 0.0
                    for z in range(3):
                        B = 16.0 * np.pi * mu * U[x, z]
                        if x == z:
                            B -= 2.0 * phi
                        s += B * C[z, y]
                    BC[x, y] = s
            for k in range(3):
                sv = tri[i, k]
                gk = G[i, k]
                sk = S[i, k]
                sd = sk[0] * d[0] + sk[1] * d[1] + sk[2] * d[2]
                if transpose:
                    r, c = rows[ln], cols[sv]
                else:
                    r, c = rows[sv], cols[ln]
                if r < 0 or c < 0:
                    continue
                for x in range(3):
                    for y in range(3):
                        v = phi * sk[x] * d[y]
                        if x == y:
                            v -= 2.0 * phi * sd
                        s = 0.0
                        for z in range(3):
                            s += gk[z, x] * BC[z, y]
                        val = f * (v - s)
                        if transpose:
                            out[3 * r + y, 3 * c + x] += val
                        else:
                            out[3 * r + x, 3 * c + y] += val


@njit(cache=True)
def scatter_line_d_pair(out, rows, cols, ev1, ev2, ep1, ep2, pa, pb, mom, mu):
    """Segment x segment hypersingular term."""
    U = np.empty((3, 3))
    Ca = np.empty((3, 3))
    Cb = np.empty((3, 3))
    BC = np.empty((3, 3))
    da = np.empty(3)
    db = np.empty(3)
    f = mu / (4.0 * np.pi)
    for p in range(pa.shape[0]):
        e, g = pa[p], pb[p]
        for k in range(3):
            da[k] = ep2[e, k] - ep1[e, k]
            db[k] = ep2[g, k] - ep1[g, k]
        _cross_mat(da, Ca)
        _cross_mat(db, Cb)
        dd = da[0] * db[0] + da[1] * db[1] + da[2] * db[2]
        for ka in range(2):
            r = rows[ev1[e]] if ka == 0 else rows[ev2[e]]
            if r < 0:
                continue
            for kb in range(2):
                c = cols[ev1[g]] if kb == 0 else cols[ev2[g]]
                if c < 0:
                    continue
                m = mom[p, ka, kb]
                _umat(m, 0, U)
                phi = m[0]
                for x in range(3):
                    for y in range(3):
                        s = 0.0
                        for z in range(3):
                            B = 16.0 * np.pi * mu * U[x, z]
                            if x == z:
                                B -= 2.0 * phi
                            s += B * Cb[z, y]
                        BC[x, y] = s
                for x in range(3):
                    for y in range(3):
                        v = -phi * da[x] * db[y]
                        if x == y:
                            v += 2.0 * phi * dd
                        s = 0.0
                        for z in range(3):
                            s += Ca[z, x] * BC[z, y]
                        out[3 * r + x, 3 * c + y] += f * (v - s)
