"""Pure-Python twin of the compiled integrator (see ``_kernels.pyx``)."""

import math


def _region(u, vp, vn):
    if u > vp:
        return 1
    if u < -vn:
        return -1
    return 0


def _branch(region, R, rp, rn, vp, vn):
    if region == 1:
        return 1.0 / (R + rp), vp / (R + rp)
    if region == -1:
        return 1.0 / (R + rn), -vn / (R + rn)
    return 0.0, 0.0


def integrate(i0, v0, vs, g_load, rp, rn, vp, vn, R, L, C, h, limit_i, limit_v,
              i_line, v_cap, i_fault):
    n = len(vs)
    if n == 0:
        return -1
    # plain lists index far faster than numpy scalars in a Python loop
    vs_, g_ = vs.tolist(), g_load.tolist()
    rp_, rn_, vp_, vn_ = rp.tolist(), rn.tolist(), vp.tolist(), vn.tolist()
    out_i = [0.0] * n
    out_v = [0.0] * n
    out_f = [0.0] * n
    k2 = 0.5 * h
    x0, x1 = float(i0), float(v0)

    u = vs_[0] - R * x0
    reg = _region(u, vp_[0], vn_[0])
    gf, e = _branch(reg, R, rp_[0], rn_[0], vp_[0], vn_[0])
    out_i[0], out_v[0], out_f[0] = x0, x1, gf * u - e
    status = -1

    for k in range(1, n):
        a00 = -R * (1.0 - R * gf) / L
        d0 = a00 * x0 - x1 / L + ((1.0 - R * gf) * vs_[k - 1] + R * e) / L
        d1 = x0 / C - g_[k - 1] * x1 / C

        u = vs_[k] - R * x0
        reg1 = _region(u, vp_[k], vn_[k])
        tries = 0
        while True:
            gf, e = _branch(reg1, R, rp_[k], rn_[k], vp_[k], vn_[k])
            a00 = -R * (1.0 - R * gf) / L
            c0 = ((1.0 - R * gf) * vs_[k] + R * e) / L
            m00 = 1.0 - k2 * a00
            m01 = k2 / L
            m10 = -k2 / C
            m11 = 1.0 + k2 * g_[k] / C
            r0 = x0 + k2 * (d0 + c0)
            r1 = x1 + k2 * d1
            det = m00 * m11 - m01 * m10
            y0 = (r0 * m11 - m01 * r1) / det
            y1 = (m00 * r1 - m10 * r0) / det
            u = vs_[k] - R * y0
            reg = _region(u, vp_[k], vn_[k])
            tries += 1
            if reg == reg1 or tries >= 4:
                break
            reg1 = reg
        # tries exhausted means chatter at a kink; the last solve stands
        x0, x1 = y0, y1
        out_i[k], out_v[k], out_f[k] = x0, x1, gf * u - e
        if abs(x0) > limit_i or abs(x1) > limit_v or math.isnan(x0) or math.isnan(x1):
            status = k
            n = k + 1
            break

    i_line[:n] = out_i[:n]
    v_cap[:n] = out_v[:n]
    i_fault[:n] = out_f[:n]
    return status
