# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trapezoidal integrator for the line + arc-branch network.

Keep the arithmetic in the same order as ``_kernels_py.integrate``; the test
suite checks both backends agree bit for bit.
"""

from libc.math cimport fabs


cdef inline int _region(double u, double vp, double vn) nogil:
    if u > vp:
        return 1
    if u < -vn:
        return -1
    return 0


cdef inline void _branch(int region, double R, double rp, double rn, double vp, double vn,
                         double* gf, double* e) nogil:
    if region == 1:
        gf[0] = 1.0 / (R + rp)
        e[0] = vp / (R + rp)
    elif region == -1:
        gf[0] = 1.0 / (R + rn)
        e[0] = -vn / (R + rn)
    else:
        gf[0] = 0.0
        e[0] = 0.0


def integrate(double i0, double v0,
              const double[::1] vs, const double[::1] g_load,
              const double[::1] rp, const double[::1] rn,
              const double[::1] vp, const double[::1] vn,
              double R, double L, double C, double h, double limit_i, double limit_v,
              double[::1] i_line, double[::1] v_cap, double[::1] i_fault):
    """Fill ``i_line``, ``v_cap``, ``i_fault`` for every step; return -1 or the blow-up index."""
    cdef Py_ssize_t n = vs.shape[0]
    cdef Py_ssize_t k
    cdef double k2 = 0.5 * h
    cdef double x0 = i0, x1 = v0
    cdef double gf, e, u, d0, d1, a00, c0
    cdef double m00, m01, m10, m11, r0, r1, det, y0, y1
    cdef int reg, reg1, tries
    cdef Py_ssize_t status = -1
    if n == 0:
        return -1

    with nogil:
        u = vs[0] - R * x0
        reg = _region(u, vp[0], vn[0])
        _branch(reg, R, rp[0], rn[0], vp[0], vn[0], &gf, &e)
        i_line[0] = x0
        v_cap[0] = x1
        i_fault[0] = gf * u - e

        for k in range(1, n):
            # derivative at the previous point with its settled region
            a00 = -R * (1.0 - R * gf) / L
            d0 = a00 * x0 - x1 / L + ((1.0 - R * gf) * vs[k - 1] + R * e) / L
            d1 = x0 / C - g_load[k - 1] * x1 / C

            u = vs[k] - R * x0
            reg1 = _region(u, vp[k], vn[k])
            tries = 0
            while True:
                _branch(reg1, R, rp[k], rn[k], vp[k], vn[k], &gf, &e)
                a00 = -R * (1.0 - R * gf) / L
                c0 = ((1.0 - R * gf) * vs[k] + R * e) / L
                m00 = 1.0 - k2 * a00
                m01 = k2 / L
                m10 = -k2 / C
                m11 = 1.0 + k2 * g_load[k] / C
                r0 = x0 + k2 * (d0 + c0)
                r1 = x1 + k2 * d1
                det = m00 * m11 - m01 * m10
                y0 = (r0 * m11 - m01 * r1) / det
                y1 = (m00 * r1 - m10 * r0) / det
                u = vs[k] - R * y0
                reg = _region(u, vp[k], vn[k])
                tries += 1
                if reg == reg1 or tries >= 4:
                    break
                reg1 = reg
            # on exhausting tries (chatter at a kink) keep the last solve; the
            # branch current is continuous there
            x0 = y0
            x1 = y1
            i_line[k] = x0
            v_cap[k] = x1
            i_fault[k] = gf * u - e
            if fabs(x0) > limit_i or fabs(x1) > limit_v or x0 != x0 or x1 != x1:
                status = k
                break
    return status
