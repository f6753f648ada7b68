# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops for the collision integrals.

Every public function here has a numpy twin in ``_pykernels`` with the same
signature and semantics; ``_backend`` picks one at import time.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport sqrt, floor, exp, fabs, cos, acos, M_PI

cdef enum:
    PROFILE_GAUSS = 0
    PROFILE_BOX = 1
    PROFILE_BUMP = 2
    N_SCAN = 48
    MAX_AZ = 1024

cdef double GAUSS_CUT = 36.0
cdef double FRAME_EPS2 = 1e-18
# frame-completion axes, same values as kinematics.FRAME_AXES
cdef double FA_X = 1.0 / sqrt(6.0), FA_Y = sqrt(2.0) / sqrt(6.0), FA_Z = sqrt(3.0) / sqrt(6.0)
cdef double FB_X = sqrt(5.0) / sqrt(13.0), FB_Y = -1.0 / sqrt(13.0), FB_Z = sqrt(7.0) / sqrt(13.0)
cdef double FRAME_SWITCH = 0.25


cdef struct Pair:
    double g
    double sqs
    double vo
    double px, py, pz
    double an[3]
    double a1[3]
    double a2[3]


cdef inline double _interp(const double[:, :, ::1] fp, double V, double inv_h,
                           double x, double y, double z) noexcept nogil:
    # fp is zero padded by one ghost layer; points outside the box are zero
    if x < -V or x > V or y < -V or y > V or z < -V or z > V:
        return 0.0
    cdef double ux = (x + V) * inv_h + 0.5
    cdef double uy = (y + V) * inv_h + 0.5
    cdef double uz = (z + V) * inv_h + 0.5
    # coordinates are >= 0.5 here, so truncation is floor
    cdef int i = <int>ux
    cdef int j = <int>uy
    cdef int k = <int>uz
    cdef double tx = ux - i, ty = uy - j, tz = uz - k
    cdef double c00 = fp[i, j, k] * (1 - tx) + fp[i + 1, j, k] * tx
    cdef double c10 = fp[i, j + 1, k] * (1 - tx) + fp[i + 1, j + 1, k] * tx
    cdef double c01 = fp[i, j, k + 1] * (1 - tx) + fp[i + 1, j, k + 1] * tx
    cdef double c11 = fp[i, j + 1, k + 1] * (1 - tx) + fp[i + 1, j + 1, k + 1] * tx
    cdef double c0 = c00 * (1 - ty) + c10 * ty
    cdef double c1 = c01 * (1 - ty) + c11 * ty
    return c0 * (1 - tz) + c1 * tz


cdef inline void _frame(double nx, double ny, double nz, double* e1, double* e2) noexcept nogil:
    # e1 ~ a x n for a fixed generic axis a (axis b near a); odd in n, so -n gets (-e1, e2)
    cdef double x = FA_Y * nz - FA_Z * ny, y = FA_Z * nx - FA_X * nz, z = FA_X * ny - FA_Y * nx
    cdef double nn = x * x + y * y + z * z
    if nn < FRAME_SWITCH:
        x = FB_Y * nz - FB_Z * ny; y = FB_Z * nx - FB_X * nz; z = FB_X * ny - FB_Y * nx
        nn = x * x + y * y + z * z
    nn = sqrt(nn)
    e1[0] = x / nn; e1[1] = y / nn; e1[2] = z / nn
    e2[0] = ny * e1[2] - nz * e1[1]
    e2[1] = nz * e1[0] - nx * e1[2]
    e2[2] = nx * e1[1] - ny * e1[0]


cdef inline double _g2(double vx, double vy, double vz, double e,
                       double wx, double wy, double wz, double es) noexcept nogil:
    cdef double dx = vx - wx, dy = vy - wy, dz = vz - wz
    cdef double de = (dx * (vx + wx) + dy * (vy + wy) + dz * (vz + wz)) / (e + es)
    cdef double r = dx * dx + dy * dy + dz * dz - de * de
    return r if r > 0.0 else 0.0


cdef inline int _pair(double vx, double vy, double vz, double e,
                      double wx, double wy, double wz, double es, Pair* p) noexcept nogil:
    """Center-of-momentum geometry of (v, v_*); returns 0 when g vanishes."""
    cdef double E = e + es
    cdef double g2 = _g2(vx, vy, vz, e, wx, wy, wz, es)
    if g2 <= 0.0:
        return 0
    cdef double g = sqrt(g2)
    cdef double sqs = sqrt(g2 + 4.0)
    cdef double gam = E / sqs
    cdef double px = vx + wx, py = vy + wy, pz = vz + wz
    cdef double P2 = px * px + py * py + pz * pz
    cdef double ex = 0.0, ey = 0.0, ez = 0.0, Pn, coef, qx, qy, qz, qn
    cdef double nx, ny, nz, t
    cdef double e1[3]
    cdef double e2[3]
    cdef int boosted = P2 > FRAME_EPS2
    cdef int t_i
    p.g = g
    p.sqs = sqs
    p.vo = g * sqs / (2.0 * e * es)
    p.px = px; p.py = py; p.pz = pz
    if boosted:
        Pn = sqrt(P2)
        ex = px / Pn; ey = py / Pn; ez = pz / Pn
        coef = (gam - 1.0) * (vx * ex + vy * ey + vz * ez) - gam * (Pn / E) * e
        qx = vx + coef * ex; qy = vy + coef * ey; qz = vz + coef * ez
    else:
        qx = vx; qy = vy; qz = vz
    qn = sqrt(qx * qx + qy * qy + qz * qz)
    nx = qx / qn; ny = qy / qn; nz = qz / qn
    _frame(nx, ny, nz, e1, e2)
    # a_x = (g/2) (x + (gamma-1) (e.x) e) for x in {n, e1, e2}
    p.an[0] = nx; p.an[1] = ny; p.an[2] = nz
    p.a1[0] = e1[0]; p.a1[1] = e1[1]; p.a1[2] = e1[2]
    p.a2[0] = e2[0]; p.a2[1] = e2[1]; p.a2[2] = e2[2]
    if boosted:
        t = (gam - 1.0) * (ex * nx + ey * ny + ez * nz)
        p.an[0] += t * ex; p.an[1] += t * ey; p.an[2] += t * ez
        t = (gam - 1.0) * (ex * e1[0] + ey * e1[1] + ez * e1[2])
        p.a1[0] += t * ex; p.a1[1] += t * ey; p.a1[2] += t * ez
        t = (gam - 1.0) * (ex * e2[0] + ey * e2[1] + ez * e2[2])
        p.a2[0] += t * ex; p.a2[1] += t * ey; p.a2[2] += t * ez
    for t_i in range(3):
        p.an[t_i] *= 0.5 * g
        p.a1[t_i] *= 0.5 * g
        p.a2[t_i] *= 0.5 * g
    return 1


cdef inline double _profile(int kind, const double[::1] q, double V,
                            double x, double y, double z) noexcept nogil:
    if x < -V or x > V or y < -V or y > V or z < -V or z > V:
        return 0.0
    cdef double dx = (x - q[0]) * q[3]
    cdef double dy = (y - q[1]) * q[4]
    cdef double dz = (z - q[2]) * q[5]
    cdef double r2
    if kind == PROFILE_BOX:
        if fabs(x - q[0]) <= q[3] and fabs(y - q[1]) <= q[4] and fabs(z - q[2]) <= q[5]:
            return 1.0
        return 0.0
    r2 = dx * dx + dy * dy + dz * dz
    if kind == PROFILE_GAUSS:
        if r2 > GAUSS_CUT:
            return 0.0
        return exp(-r2)
    if r2 >= 1.0:
        return 0.0
    return exp(1.0 - 1.0 / (1.0 - r2))


cdef inline double _angular_sum_ff(Pair* p, const double[:, :, ::1] fp, const double[:, :, ::1] hp,
                                   double V, double inv_h,
                                   const double[::1] ct, const double[::1] st, const double[::1] wt,
                                   const double[::1] cph, const double[::1] sph,
                                   double* swapped) noexcept nogil:
    """Sum of w f(v') h(v'_*) over the hemisphere nodes; swapped gets w f(v'_*) h(v')."""
    cdef Py_ssize_t i, k, naz = cph.shape[0]
    cdef double ring[3 * MAX_AZ]
    cdef double bx, by, bz, x, y, z, acc = 0.0, acc_sw = 0.0, part, part_sw, sti
    cdef int want_sw = swapped != NULL and (&fp[0, 0, 0] != &hp[0, 0, 0])
    for k in range(naz):
        ring[3 * k] = cph[k] * p.a1[0] + sph[k] * p.a2[0]
        ring[3 * k + 1] = cph[k] * p.a1[1] + sph[k] * p.a2[1]
        ring[3 * k + 2] = cph[k] * p.a1[2] + sph[k] * p.a2[2]
    for i in range(ct.shape[0]):
        bx = 0.5 * p.px + ct[i] * p.an[0]
        by = 0.5 * p.py + ct[i] * p.an[1]
        bz = 0.5 * p.pz + ct[i] * p.an[2]
        sti = st[i]
        part = 0.0
        part_sw = 0.0
        for k in range(naz):
            x = bx + sti * ring[3 * k]
            y = by + sti * ring[3 * k + 1]
            z = bz + sti * ring[3 * k + 2]
            part += _interp(fp, V, inv_h, x, y, z) * _interp(hp, V, inv_h, p.px - x, p.py - y, p.pz - z)
            if want_sw:
                part_sw += (_interp(fp, V, inv_h, p.px - x, p.py - y, p.pz - z)
                            * _interp(hp, V, inv_h, x, y, z))
        acc += wt[i] * part
        acc_sw += wt[i] * part_sw
    if want_sw:
        swapped[0] = acc_sw
    elif swapped != NULL:
        swapped[0] = acc
    return acc


cdef double _gain_one(double vx, double vy, double vz,
                      const double[:, :, ::1] fp, const double[:, :, ::1] hp, double V, double inv_h,
                      const double[:, ::1] nodes, const double[::1] node_e,
                      const double[::1] ct, const double[::1] st, const double[::1] wt,
                      const double[::1] cph, const double[::1] sph) noexcept nogil:
    cdef double e = sqrt(1.0 + vx * vx + vy * vy + vz * vz)
    cdef double acc = 0.0, s
    cdef Py_ssize_t b
    cdef Pair p
    for b in range(nodes.shape[0]):
        if _pair(vx, vy, vz, e, nodes[b, 0], nodes[b, 1], nodes[b, 2], node_e[b], &p) == 0:
            continue
        s = _angular_sum_ff(&p, fp, hp, V, inv_h, ct, st, wt, cph, sph, NULL)
        acc += p.g * p.vo * s
    return acc


def gain_points(const double[:, :, ::1] fp, const double[:, :, ::1] hp, double V,
                const double[:, ::1] pts, const double[:, ::1] nodes, const double[::1] node_e,
                const double[::1] ct, const double[::1] st, const double[::1] wt,
                const double[::1] cph, const double[::1] sph, int nthreads=1):
    """Raw gain sums  sum_{v_*} g v_o sum_w w f(v') h(v'_*)  at arbitrary points.

    Constant factors (C_phi, cell volume) are applied by the caller.
    """
    cdef Py_ssize_t M = pts.shape[0], m
    cdef double inv_h = (fp.shape[0] - 2) / (2.0 * V)
    out_arr = np.zeros(M)
    cdef double[::1] out = out_arr
    for m in prange(M, nogil=True, schedule="dynamic", num_threads=nthreads):
        out[m] = _gain_one(pts[m, 0], pts[m, 1], pts[m, 2], fp, hp, V, inv_h,
                           nodes, node_e, ct, st, wt, cph, sph)
    return out_arr


def gain_field_pairs(const double[:, :, ::1] fp, const double[:, :, ::1] hp, double V,
                     const double[:, ::1] nodes, const double[::1] node_e,
                     const double[::1] ct, const double[::1] st, const double[::1] wt,
                     const double[::1] cph, const double[::1] sph):
    """Raw gain sums at every node, visiting each unordered node pair once.

    The node set of the pair (v_*, v) is the antipode of that of (v, v_*), so one
    pass over the hemisphere serves both orderings.
    """
    cdef Py_ssize_t nn = nodes.shape[0], a, b
    cdef double inv_h = (fp.shape[0] - 2) / (2.0 * V)
    out_arr = np.zeros(nn)
    cdef double[::1] out = out_arr
    cdef double s, s_sw, wgt
    cdef Pair p
    with nogil:
        for a in range(nn):
            for b in range(a + 1, nn):
                if _pair(nodes[a, 0], nodes[a, 1], nodes[a, 2], node_e[a],
                         nodes[b, 0], nodes[b, 1], nodes[b, 2], node_e[b], &p) == 0:
                    continue
                s = _angular_sum_ff(&p, fp, hp, V, inv_h, ct, st, wt, cph, sph, &s_sw)
                wgt = p.g * p.vo
                out[a] += wgt * s
                out[b] += wgt * s_sw
    return out_arr


def loss_points(const double[::1] fvals, const double[:, ::1] pts,
                const double[:, ::1] nodes, const double[::1] node_e, int nthreads=1):
    """Raw loss sums  sum_{v_*} g v_o f(v_*)  at arbitrary points."""
    cdef Py_ssize_t M = pts.shape[0], nn = nodes.shape[0], m, b
    out_arr = np.zeros(M)
    cdef double[::1] out = out_arr
    cdef double vx, vy, vz, e, es, acc, g2
    for m in prange(M, nogil=True, schedule="static", num_threads=nthreads):
        vx = pts[m, 0]; vy = pts[m, 1]; vz = pts[m, 2]
        e = sqrt(1.0 + vx * vx + vy * vy + vz * vz)
        acc = 0.0
        for b in range(nn):
            if fvals[b] == 0.0:
                continue
            es = node_e[b]
            g2 = _g2(vx, vy, vz, e, nodes[b, 0], nodes[b, 1], nodes[b, 2], es)
            # g * v_o = g^2 sqrt(s) / (2 e e_*)
            acc = acc + fvals[b] * g2 * sqrt(g2 + 4.0) / (2.0 * e * es)
        out[m] = acc
    return out_arr


cdef double _weak_direct_one(Py_ssize_t m, const double[::1] b, int ckind, const double[::1] cpar,
                             double V, const double[:, ::1] nodes, const double[::1] node_e,
                             const double[::1] ct, const double[::1] st, const double[::1] wt,
                             const double[::1] cph, const double[::1] sph) noexcept nogil:
    cdef Py_ssize_t n, i, k
    cdef double acc = 0.0, part, ang, bx, by, bz, x, y, z
    cdef Pair p
    for n in range(nodes.shape[0]):
        if b[n] == 0.0:
            continue
        if _pair(nodes[m, 0], nodes[m, 1], nodes[m, 2], node_e[m],
                 nodes[n, 0], nodes[n, 1], nodes[n, 2], node_e[n], &p) == 0:
            continue
        ang = 0.0
        for i in range(ct.shape[0]):
            bx = 0.5 * p.px + ct[i] * p.an[0]
            by = 0.5 * p.py + ct[i] * p.an[1]
            bz = 0.5 * p.pz + ct[i] * p.an[2]
            part = 0.0
            for k in range(cph.shape[0]):
                x = bx + st[i] * (cph[k] * p.a1[0] + sph[k] * p.a2[0])
                y = by + st[i] * (cph[k] * p.a1[1] + sph[k] * p.a2[1])
                z = bz + st[i] * (cph[k] * p.a1[2] + sph[k] * p.a2[2])
                part += _profile(ckind, cpar, V, x, y, z)
            ang += wt[i] * part
        acc += b[n] * p.g * (2.0 * p.vo) * ang
    return acc


def weak_direct(const double[::1] a, const double[::1] b, int ckind, const double[::1] cpar, double V,
                const double[:, ::1] nodes, const double[::1] node_e,
                const double[::1] ct, const double[::1] st, const double[::1] wt,
                const double[::1] cph, const double[::1] sph, int nthreads=1):
    """Per-v raw sums of  a(v) b(v_*) g (g sqrt(s)/(v0 v0_*)) sum_w w c(v')."""
    cdef Py_ssize_t nn = nodes.shape[0], m
    out_arr = np.zeros(nn)
    cdef double[::1] out = out_arr
    for m in prange(nn, nogil=True, schedule="dynamic", num_threads=nthreads):
        if a[m] != 0.0:
            out[m] = a[m] * _weak_direct_one(m, b, ckind, cpar, V, nodes, node_e,
                                             ct, st, wt, cph, sph)
    return out_arr


cdef inline void _arc_terms(double r, double E, double am, double dn, double gb2,
                            const double* dhat, const double* e1, const double* e2,
                            double wpx, double wpy, double wpz, double wpe,
                            double* cphi, double* sphi, double* num, double* amp, double* psi0) noexcept nogil:
    """Polar angle on the hypersurface at radius r, and the arc data of the cutoff.

    The cutoff g(v', v_*) >= g(v, v') reads  num - amp cos(psi - psi0) >= 0.
    """
    cdef double c = (2.0 * E * am - gb2) / (2.0 * r * dn)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    cdef double s = sqrt(1.0 - c * c)
    cdef double pd = wpx * dhat[0] + wpy * dhat[1] + wpz * dhat[2]
    cdef double p1 = wpx * e1[0] + wpy * e1[1] + wpz * e1[2]
    cdef double p2 = wpx * e2[0] + wpy * e2[1] + wpz * e2[2]
    cphi[0] = c
    sphi[0] = s
    # g~^2 = 2 (v'0 E - v'.v_*) - 2
    num[0] = wpe * E - r * c * pd - 1.0 - 0.5 * gb2
    amp[0] = r * s * sqrt(p1 * p1 + p2 * p2)
    psi0[0] = 0.0
    if p1 != 0.0 or p2 != 0.0:
        psi0[0] = _atan2(p2, p1)


cdef extern from "math.h" nogil:
    double _atan2 "atan2"(double, double)


cdef inline double _arc_state(double r, double am, double dn, double gb2,
                              const double* dhat, const double* e1, const double* e2,
                              double wpx, double wpy, double wpz, double wpe, int which) noexcept nogil:
    cdef double c, s, num, amp, psi0
    cdef double E = sqrt(1.0 + r * r)
    _arc_terms(r, E, am, dn, gb2, dhat, e1, e2, wpx, wpy, wpz, wpe, &c, &s, &num, &amp, &psi0)
    if which == 0:
        return num - amp
    return num + amp


cdef inline double _bisect(double lo, double hi, double flo, double am, double dn, double gb2,
                           const double* dhat, const double* e1, const double* e2,
                           double wpx, double wpy, double wpz, double wpe, int which) noexcept nogil:
    cdef double mid, fm
    cdef int it
    for it in range(200):
        if hi - lo <= 1e-12:
            break
        mid = 0.5 * (lo + hi)
        fm = _arc_state(mid, am, dn, gb2, dhat, e1, e2, wpx, wpy, wpz, wpe, which)
        if (fm > 0.0) == (flo > 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef double _hypersurface_pair(double vx, double vy, double vz, double e,
                               double wx, double wy, double wz, double we,
                               int bkind, const double[::1] bpar, double V,
                               double rlo_b, double rhi_b, double r_max,
                               const double[::1] xi, const double[::1] xw,
                               const double[::1] pxi, const double[::1] pxw,
                               double c_phi, double c_ang) noexcept nogil:
    """Integral over the hypersurface of (s / (2 v0_*)) (sigma / g_bar) b(v_*) for one (v, v')."""
    cdef double dx = vx - wx, dy = vy - wy, dz = vz - wz
    cdef double dn = sqrt(dx * dx + dy * dy + dz * dz)
    if dn == 0.0:
        return 0.0
    cdef double am = (dx * (vx + wx) + dy * (vy + wy) + dz * (vz + wz)) / (e + we)
    cdef double gb2 = dn * dn - am * am
    if gb2 <= 0.0:
        return 0.0
    cdef double gb = sqrt(gb2)
    # E+ - 1 in a form free of cancellation, so small radii keep full precision
    cdef double root = sqrt(am * am + gb2 + 4.0 * dn * dn / gb2)
    cdef double x = (gb2 - 2.0 * am) * (gb2 - 2.0 * am) / (2.0 * gb2 * (root + am + 2.0))
    if x < 0.0:
        x = 0.0
    if x < -am:
        x = -am
    cdef double rmin = sqrt(x * (x + 2.0))
    cdef double lo = rmin if rmin > rlo_b else rlo_b
    cdef double hi = r_max if r_max < rhi_b else rhi_b
    if hi <= lo:
        return 0.0
    cdef double dhat[3]
    cdef double e1[3]
    cdef double e2[3]
    dhat[0] = dx / dn; dhat[1] = dy / dn; dhat[2] = dz / dn
    _frame(dhat[0], dhat[1], dhat[2], e1, e2)

    # split [lo, hi] where the cutoff arc switches between empty / partial / full
    cdef double brk[2 * N_SCAN + 2]
    cdef int nb = 0, j, which, q, k, nseg
    cdef double r0, r1, f0, f1
    brk[nb] = lo; nb += 1
    for which in range(2):
        r0 = lo
        f0 = _arc_state(r0, am, dn, gb2, dhat, e1, e2, wx, wy, wz, we, which)
        for j in range(1, N_SCAN + 1):
            r1 = lo + (hi - lo) * j / N_SCAN
            f1 = _arc_state(r1, am, dn, gb2, dhat, e1, e2, wx, wy, wz, we, which)
            if (f0 > 0.0) != (f1 > 0.0):
                brk[nb] = _bisect(r0, r1, f0, am, dn, gb2, dhat, e1, e2, wx, wy, wz, we, which)
                nb += 1
            r0 = r1
            f0 = f1
    brk[nb] = hi; nb += 1
    # insertion sort, the list is tiny
    cdef double tmp
    for j in range(1, nb):
        tmp = brk[j]
        k = j - 1
        while k >= 0 and brk[k] > tmp:
            brk[k + 1] = brk[k]
            k -= 1
        brk[k + 1] = tmp

    cdef double total = 0.0, a0, a1, L, t, r, dr, E, c, s, num, amp, psi0, cstar, alpha
    cdef double psi_lo, psi_len, psi, wpsi, sx, sy, sz, bval, g2, gt2, seg, ring, cp, sp
    cdef int full
    cdef int npsi = pxi.shape[0]
    for q in range(nb - 1):
        a0 = brk[q]
        a1 = brk[q + 1]
        L = a1 - a0
        if L <= 1e-14:
            continue
        seg = 0.0
        for j in range(xi.shape[0]):
            # smoothstep map clusters nodes at both ends (square-root edges)
            t = xi[j]
            r = a0 + L * t * t * (3.0 - 2.0 * t)
            dr = L * 6.0 * t * (1.0 - t) * xw[j]
            if r <= 0.0:
                continue
            E = sqrt(1.0 + r * r)
            if E + am < 1.0:
                continue
            _arc_terms(r, E, am, dn, gb2, dhat, e1, e2, wx, wy, wz, we, &c, &s, &num, &amp, &psi0)
            if num < -amp:
                continue
            if num >= amp:
                full = 1
                psi_lo = 0.0
                psi_len = 2.0 * M_PI
            else:
                full = 0
                cstar = num / amp
                alpha = acos(cstar)
                psi_lo = psi0 + alpha
                psi_len = 2.0 * M_PI - 2.0 * alpha
            ring = 0.0
            for k in range(npsi):
                if full:
                    psi = 2.0 * M_PI * k / npsi
                    wpsi = 2.0 * M_PI / npsi
                else:
                    psi = psi_lo + psi_len * pxi[k]
                    wpsi = psi_len * pxw[k]
                cp = cos(psi)
                sp = _sin(psi)
                sx = r * (c * dhat[0] + s * (cp * e1[0] + sp * e2[0]))
                sy = r * (c * dhat[1] + s * (cp * e1[1] + sp * e2[1]))
                sz = r * (c * dhat[2] + s * (cp * e1[2] + sp * e2[2]))
                bval = _profile(bkind, bpar, V, sx, sy, sz)
                if bval == 0.0:
                    continue
                g2 = _g2(vx, vy, vz, e, sx, sy, sz, E)
                gt2 = _g2(wx, wy, wz, we, sx, sy, sz, E)
                if g2 <= 0.0 or gt2 < gb2:
                    continue
                # (s/2) * sigma/g_bar / v0_*, sigma/g_bar = 2 C_phi C g~/g
                ring += wpsi * bval * (0.5 * (g2 + 4.0)) * 2.0 * c_phi * c_ang * sqrt(gt2 / g2) / E
            # dv_* = r^2 dr dcos dpsi, delta in cos gives g_bar / (r |v - v'|)
            seg += dr * r * gb / dn * ring
        total += seg
    return total


cdef extern from "math.h" nogil:
    double _sin "sin"(double)


cdef double _carleman_cell(Py_ssize_t m, double wx, double wy, double wz, double h, int ms,
                           int ckind, const double[::1] cpar, int bkind, const double[::1] bpar,
                           double V, double rlo_b, double rhi_b, double r_max,
                           const double[:, ::1] nodes, const double[::1] node_e,
                           const double[::1] xi, const double[::1] xw,
                           const double[::1] pxi, const double[::1] pxw,
                           double c_phi, double c_ang) noexcept nogil:
    # mean over an ms^3 midpoint subgrid of the cell centered at w of c(v')/v'0 * hypersurface
    cdef int qi, qj, qk
    cdef double px, py, pz, pe, cval, acc = 0.0
    for qi in range(ms):
        px = wx + h * ((qi + 0.5) / ms - 0.5)
        for qj in range(ms):
            py = wy + h * ((qj + 0.5) / ms - 0.5)
            for qk in range(ms):
                pz = wz + h * ((qk + 0.5) / ms - 0.5)
                cval = _profile(ckind, cpar, V, px, py, pz)
                if cval == 0.0:
                    continue
                pe = sqrt(1.0 + px * px + py * py + pz * pz)
                acc = acc + cval / pe * _hypersurface_pair(
                    nodes[m, 0], nodes[m, 1], nodes[m, 2], node_e[m], px, py, pz, pe,
                    bkind, bpar, V, rlo_b, rhi_b, r_max, xi, xw, pxi, pxw, c_phi, c_ang)
    return acc / (ms * ms * ms)


def weak_carleman(const double[::1] a, int ckind, const double[::1] cpar,
                  int bkind, const double[::1] bpar, double V,
                  double rlo_b, double rhi_b, double r_max,
                  const double[:, ::1] nodes, const double[::1] node_e, int n_axis,
                  const int[::1] subdiv,
                  const double[::1] xi, const double[::1] xw,
                  const double[::1] pxi, const double[::1] pxw,
                  double c_phi, double c_ang, int nthreads=1):
    """Per-v raw sums of  a(v)/v0 * sum_{v'} c(v')/v'0 * hypersurface integral.

    v' cells whose index distance (max norm) to v is d < len(subdiv) are
    averaged over a subdiv[d]^3 midpoint subgrid; the diagonal cell needs an
    even count so v itself is never sampled. With an empty ``subdiv`` the
    diagonal is skipped and every other cell uses its center.
    """
    cdef Py_ssize_t nn = nodes.shape[0], m, n
    cdef Py_ssize_t N = n_axis
    cdef int nsub = subdiv.shape[0], dist, di, dj, dk
    cdef double h = 2.0 * V / N
    cvals = np.array([_profile(ckind, cpar, V, nodes[n, 0], nodes[n, 1], nodes[n, 2])
                      for n in range(nn)])
    cdef double[::1] c = cvals
    out_arr = np.zeros(nn)
    cdef double[::1] out = out_arr
    cdef double acc
    for m in prange(nn, nogil=True, schedule="dynamic", num_threads=nthreads):
        if a[m] == 0.0:
            continue
        acc = 0.0
        for n in range(nn):
            di = <int>(m // (N * N) - n // (N * N))
            dj = <int>((m // N) % N - (n // N) % N)
            dk = <int>(m % N - n % N)
            dist = max(max(abs(di), abs(dj)), abs(dk))
            if dist < nsub:
                acc = acc + _carleman_cell(m, nodes[n, 0], nodes[n, 1], nodes[n, 2], h, subdiv[dist],
                                           ckind, cpar, bkind, bpar, V, rlo_b, rhi_b, r_max,
                                           nodes, node_e, xi, xw, pxi, pxw, c_phi, c_ang)
                continue
            if c[n] == 0.0 or n == m:
                continue
            acc = acc + c[n] / node_e[n] * _hypersurface_pair(
                nodes[m, 0], nodes[m, 1], nodes[m, 2], node_e[m],
                nodes[n, 0], nodes[n, 1], nodes[n, 2], node_e[n],
                bkind, bpar, V, rlo_b, rhi_b, r_max, xi, xw, pxi, pxw, c_phi, c_ang)
        out[m] = a[m] / node_e[m] * acc
    return out_arr


def hypersurface_pair(double[::1] v, double[::1] w, int bkind, const double[::1] bpar, double V,
                      double rlo_b, double rhi_b, double r_max,
                      const double[::1] xi, const double[::1] xw,
                      const double[::1] pxi, const double[::1] pxw, double c_phi, double c_ang):
    """Single (v, v') hypersurface integral, exposed for testing."""
    return _hypersurface_pair(v[0], v[1], v[2], sqrt(1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]),
                              w[0], w[1], w[2], sqrt(1.0 + w[0] * w[0] + w[1] * w[1] + w[2] * w[2]),
                              bkind, bpar, V, rlo_b, rhi_b, r_max, xi, xw, pxi, pxw, c_phi, c_ang)
