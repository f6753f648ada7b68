"""Numpy implementations of the hot loops; same contracts as ``_ckernels``."""
import math

import numpy as np

from .field import interpolate_padded
from .kinematics import FRAME_EPS, orthonormal_completion

PROFILE_GAUSS, PROFILE_BOX, PROFILE_BUMP = 0, 1, 2
GAUSS_CUT = 36.0
N_SCAN = 48


def _pairs(v, e, nodes, node_e):
    d = v - nodes
    p = v + nodes
    etot = e + node_e
    de = np.einsum("ij,ij->i", d, p) / etot
    g2 = np.maximum(np.einsum("ij,ij->i", d, d) - de * de, 0.0)
    keep = g2 > 0.0
    d, p, etot, g2, ne = d[keep], p[keep], etot[keep], g2[keep], node_e[keep]
    g = np.sqrt(g2)
    sqs = np.sqrt(g2 + 4.0)
    gam = etot / sqs
    vo = g * sqs / (2.0 * e * ne)
    p2 = np.einsum("ij,ij->i", p, p)
    boosted = p2 > FRAME_EPS**2
    pn = np.sqrt(np.where(boosted, p2, 1.0))
    ehat = p / pn[:, None]
    coef = (gam - 1.0) * (ehat @ v) - gam * (pn / etot) * e
    q = v + np.where(boosted, coef, 0.0)[:, None] * ehat
    n = q / np.linalg.norm(q, axis=1, keepdims=True)
    e1, e2 = orthonormal_completion(n)

    def stretch(x):
        t = np.where(boosted, (gam - 1.0) * np.einsum("ij,ij->i", ehat, x), 0.0)
        return 0.5 * g[:, None] * (x + t[:, None] * ehat)

    return keep, g, vo, p, stretch(n), stretch(e1), stretch(e2)


def _post_points(p, an, a1, a2, ct, st, cph, sph):
    ring = cph[None, :, None] * a1[:, None, :] + sph[None, :, None] * a2[:, None, :]
    base = 0.5 * p[:, None, :] + ct[None, :, None] * an[:, None, :]
    return base[:, :, None, :] + st[None, :, None, None] * ring[:, None, :, :]


def gain_points(fp, hp, V, pts, nodes, node_e, ct, st, wt, cph, sph, nthreads=1):
    pts = np.asarray(pts, dtype=float)
    out = np.zeros(len(pts))
    for m, v in enumerate(pts):
        e = math.sqrt(1.0 + v @ v)
        _, g, vo, p, an, a1, a2 = _pairs(v, e, nodes, node_e)
        x = _post_points(p, an, a1, a2, ct, st, cph, sph)
        xs = p[:, None, None, :] - x
        prod = interpolate_padded(fp, V, x) * interpolate_padded(hp, V, xs)
        out[m] = np.sum(g * vo * np.einsum("bik,i->b", prod, wt))
    return out


def gain_field_pairs(fp, hp, V, nodes, node_e, ct, st, wt, cph, sph):
    return gain_points(fp, hp, V, nodes, nodes, node_e, ct, st, wt, cph, sph)


def loss_points(fvals, pts, nodes, node_e, nthreads=1):
    pts = np.asarray(pts, dtype=float)
    keep = fvals != 0.0
    w, we, fv = nodes[keep], node_e[keep], fvals[keep]
    out = np.zeros(len(pts))
    for m, v in enumerate(pts):
        e = math.sqrt(1.0 + v @ v)
        d = v - w
        de = np.einsum("ij,ij->i", d, v + w) / (e + we)
        g2 = np.maximum(np.einsum("ij,ij->i", d, d) - de * de, 0.0)
        out[m] = np.sum(fv * g2 * np.sqrt(g2 + 4.0) / (2.0 * e * we))
    return out


def profile_values(kind, par, V, pts):
    pts = np.asarray(pts, dtype=float)
    inside = np.all(np.abs(pts) <= V, axis=-1)
    c, s = np.asarray(par[:3]), np.asarray(par[3:6])
    if kind == PROFILE_BOX:
        val = np.all(np.abs(pts - c) <= s, axis=-1).astype(float)
    else:
        r2 = np.sum(((pts - c) * s) ** 2, axis=-1)
        if kind == PROFILE_GAUSS:
            val = np.where(r2 > GAUSS_CUT, 0.0, np.exp(-np.minimum(r2, GAUSS_CUT)))
        else:
            inner = r2 < 1.0
            val = np.where(inner, np.exp(1.0 - 1.0 / np.where(inner, 1.0 - r2, 1.0)), 0.0)
    return np.where(inside, val, 0.0)


def weak_direct(a, b, ckind, cpar, V, nodes, node_e, ct, st, wt, cph, sph, nthreads=1):
    out = np.zeros(len(nodes))
    bmask = b != 0.0
    bn, be, bv = nodes[bmask], node_e[bmask], b[bmask]
    for m in np.flatnonzero(a):
        v = nodes[m]
        keep, g, vo, p, an, a1, a2 = _pairs(v, node_e[m], bn, be)
        x = _post_points(p, an, a1, a2, ct, st, cph, sph)
        ang = np.einsum("bik,i->b", profile_values(ckind, cpar, V, x), wt)
        out[m] = a[m] * np.sum(bv[keep] * g * 2.0 * vo * ang)
    return out


def _arc(r, am, dn, gb2, dhat, e1, e2, w, we):
    r = np.asarray(r, dtype=float)
    E = np.sqrt(1.0 + r * r)
    with np.errstate(divide="ignore"):  # r = 0 clips to the pole, as in C
        c = np.clip((2.0 * E * am - gb2) / (2.0 * r * dn), -1.0, 1.0)
    s = np.sqrt(1.0 - c * c)
    pd, p1, p2 = w @ dhat, w @ e1, w @ e2
    num = we * E - r * c * pd - 1.0 - 0.5 * gb2
    amp = r * s * math.hypot(p1, p2)
    psi0 = math.atan2(p2, p1) if (p1 != 0.0 or p2 != 0.0) else 0.0
    return E, c, s, num, amp, psi0


def _bisect(fn, lo, hi, flo):
    for _ in range(200):
        if hi - lo <= 1e-12:
            break
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hypersurface_breakpoints(v, e, w, we, lo, hi):
    """Radii in [lo, hi] where the cutoff arc becomes empty or full."""
    d = v - w
    dn = math.sqrt(d @ d)
    am = d @ (v + w) / (e + we)
    gb2 = dn * dn - am * am
    dhat = d / dn
    e1, e2 = orthonormal_completion(dhat)
    brk = [lo]
    for sign in (-1.0, 1.0):
        def state(r, sign=sign):
            _, _, _, num, amp, _ = _arc(r, am, dn, gb2, dhat, e1, e2, w, we)
            return float(num + sign * amp)
        r0, f0 = lo, state(lo)
        for j in range(1, N_SCAN + 1):
            r1 = lo + (hi - lo) * j / N_SCAN
            f1 = state(r1)
            if (f0 > 0.0) != (f1 > 0.0):
                brk.append(_bisect(state, r0, r1, f0))
            r0, f0 = r1, f1
    brk.append(hi)
    return sorted(brk)


def admissible_radius(v, e, w, we):
    """Smallest |v_*| on the hypersurface of (v, v'), from |cos phi*| <= 1 and u = 1."""
    d = v - w
    dn = math.sqrt(d @ d)
    am = d @ (v + w) / (e + we)
    gb2 = dn * dn - am * am
    # E+ - 1 in a form free of cancellation, so small radii keep full precision
    root = math.sqrt(am * am + gb2 + 4.0 * dn * dn / gb2)
    ep1 = (gb2 - 2.0 * am) ** 2 / (2.0 * gb2 * (root + am + 2.0))
    x = max(ep1, 0.0, -am)
    return math.sqrt(x * (x + 2.0))


def hypersurface_pair(v, w, bkind, bpar, V, rlo_b, rhi_b, r_max, xi, xw, pxi, pxw, c_phi, c_ang):
    return hypersurface_generic(v, w, lambda vs: profile_values(bkind, bpar, V, vs),
                                rlo_b, rhi_b, r_max, xi, xw, pxi, pxw, c_phi, c_ang)


def hypersurface_generic(v, w, bfun, rlo_b, rhi_b, r_max, xi, xw, pxi, pxw, c_phi, c_ang):
    """Hypersurface integral of (s / (2 v0_*)) (sigma / g_bar) bfun(v_*) for one (v, v')."""
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    e, we = math.sqrt(1.0 + v @ v), math.sqrt(1.0 + w @ w)
    d = v - w
    dn = math.sqrt(d @ d)
    if dn == 0.0:
        return 0.0
    am = d @ (v + w) / (e + we)
    gb2 = dn * dn - am * am
    if gb2 <= 0.0:
        return 0.0
    gb = math.sqrt(gb2)
    lo = max(admissible_radius(v, e, w, we), rlo_b)
    hi = min(r_max, rhi_b)
    if hi <= lo:
        return 0.0
    dhat = d / dn
    e1, e2 = orthonormal_completion(dhat)
    npsi = len(pxi)
    total = 0.0
    brk = hypersurface_breakpoints(v, e, w, we, lo, hi)
    for a0, a1 in zip(brk[:-1], brk[1:]):
        length = a1 - a0
        if length <= 1e-14:
            continue
        t = np.asarray(xi)
        r = a0 + length * t * t * (3.0 - 2.0 * t)
        dr = length * 6.0 * t * (1.0 - t) * np.asarray(xw)
        for rj, drj in zip(r, dr):
            if rj <= 0.0:
                continue
            E, c, s, num, amp, psi0 = _arc(rj, am, dn, gb2, dhat, e1, e2, w, we)
            if E + am < 1.0 or num < -amp:
                continue
            if num >= amp:
                psi = 2.0 * np.pi * np.arange(npsi) / npsi
                wpsi = np.full(npsi, 2.0 * np.pi / npsi)
            else:
                alpha = math.acos(num / amp)
                span = 2.0 * np.pi - 2.0 * alpha
                psi = psi0 + alpha + span * np.asarray(pxi)
                wpsi = span * np.asarray(pxw)
            vs = rj * (c * dhat + s * (np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2))
            bval = np.asarray(bfun(vs), dtype=float)
            dv = v - vs
            g2 = np.maximum(np.einsum("ij,ij->i", dv, dv)
                            - (np.einsum("ij,ij->i", dv, v + vs) / (e + E)) ** 2, 0.0)
            dw = w - vs
            gt2 = np.maximum(np.einsum("ij,ij->i", dw, dw)
                             - (np.einsum("ij,ij->i", dw, w + vs) / (we + E)) ** 2, 0.0)
            ok = (bval != 0.0) & (g2 > 0.0) & (gt2 >= gb2)
            safe = np.where(ok, g2, 1.0)
            integrand = np.where(ok, bval * 0.5 * (g2 + 4.0) * 2.0 * c_phi * c_ang
                                 * np.sqrt(gt2 / safe) / E, 0.0)
            total += drj * rj * gb / dn * float(np.sum(wpsi * integrand))
    return total


def _carleman_cell(v, w, h, ms, ckind, cpar, bkind, bpar, V, rlo_b, rhi_b, r_max,
                   xi, xw, pxi, pxw, c_phi, c_ang):
    s = h * ((np.arange(ms) + 0.5) / ms - 0.5)
    acc = 0.0
    for sx in s:
        for sy in s:
            for sz in s:
                p = w + np.array([sx, sy, sz])
                cval = float(profile_values(ckind, cpar, V, p))
                if cval == 0.0:
                    continue
                acc += cval / math.sqrt(1.0 + p @ p) * hypersurface_pair(
                    v, p, bkind, bpar, V, rlo_b, rhi_b, r_max, xi, xw, pxi, pxw, c_phi, c_ang)
    return acc / ms**3


def weak_carleman(a, ckind, cpar, bkind, bpar, V, rlo_b, rhi_b, r_max, nodes, node_e, n_axis,
                  subdiv, xi, xw, pxi, pxw, c_phi, c_ang, nthreads=1):
    N = n_axis
    h = 2.0 * V / N
    c = profile_values(ckind, cpar, V, nodes)
    idx = np.stack(np.unravel_index(np.arange(len(nodes)), (N, N, N)), axis=1)
    out = np.zeros(len(nodes))
    for m in np.flatnonzero(a):
        dist = np.max(np.abs(idx - idx[m]), axis=1)
        acc = 0.0
        for n in range(len(nodes)):
            if dist[n] < len(subdiv):
                acc += _carleman_cell(nodes[m], nodes[n], h, subdiv[dist[n]], ckind, cpar, bkind,
                                      bpar, V, rlo_b, rhi_b, r_max, xi, xw, pxi, pxw, c_phi, c_ang)
                continue
            if c[n] == 0.0 or n == m:
                continue
            acc += c[n] / node_e[n] * hypersurface_pair(
                nodes[m], nodes[n], bkind, bpar, V, rlo_b, rhi_b, r_max, xi, xw, pxi, pxw,
                c_phi, c_ang)
        out[m] = a[m] / node_e[m] * acc
    return out
