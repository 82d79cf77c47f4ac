# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled gradient-flow kernel; mirrors ``_flow_py.integrate``."""

from libc.math cimport sin, cos, sqrt, floor, fabs, pow

import numpy as np

cdef double TWO_PI = 6.283185307179586

cdef double[7][6] A
cdef double[7] B
cdef double[7] E

A[1][0] = 1.0 / 5.0
A[2][0] = 3.0 / 40.0;  A[2][1] = 9.0 / 40.0
A[3][0] = 44.0 / 45.0;  A[3][1] = -56.0 / 15.0;  A[3][2] = 32.0 / 9.0
A[4][0] = 19372.0 / 6561.0;  A[4][1] = -25360.0 / 2187.0;  A[4][2] = 64448.0 / 6561.0
A[4][3] = -212.0 / 729.0
A[5][0] = 9017.0 / 3168.0;  A[5][1] = -355.0 / 33.0;  A[5][2] = 46732.0 / 5247.0
A[5][3] = 49.0 / 176.0;  A[5][4] = -5103.0 / 18656.0
A[6][0] = 35.0 / 384.0;  A[6][1] = 0.0;  A[6][2] = 500.0 / 1113.0
A[6][3] = 125.0 / 192.0;  A[6][4] = -2187.0 / 6784.0;  A[6][5] = 11.0 / 84.0

B[0] = 35.0 / 384.0;  B[1] = 0.0;  B[2] = 500.0 / 1113.0;  B[3] = 125.0 / 192.0
B[4] = -2187.0 / 6784.0;  B[5] = 11.0 / 84.0;  B[6] = 0.0

E[0] = 71.0 / 57600.0;  E[1] = 0.0;  E[2] = -71.0 / 16695.0;  E[3] = 71.0 / 1920.0
E[4] = -17253.0 / 339200.0;  E[5] = 22.0 / 525.0;  E[6] = -1.0 / 40.0


cdef void _field(double[::1] x, int[::1] kinds, int[::1] offsets, double direction,
                 double[::1] out) noexcept nogil:
    cdef Py_ssize_t f, o
    cdef double a, b, c
    for f in range(kinds.shape[0]):
        o = offsets[f]
        if kinds[f] == 0:
            out[o] = direction * TWO_PI * sin(TWO_PI * x[o])
        else:
            a = x[o]; b = x[o + 1]; c = x[o + 2]
            out[o] = direction * c * a
            out[o + 1] = direction * c * b
            out[o + 2] = direction * (c * c - 1.0)


cdef double _grad_norm(double[::1] x, int[::1] kinds, int[::1] offsets) noexcept nogil:
    cdef Py_ssize_t f, o
    cdef double s = 0.0, g, a, b, c
    for f in range(kinds.shape[0]):
        o = offsets[f]
        if kinds[f] == 0:
            g = TWO_PI * sin(TWO_PI * x[o])
            s += g * g
        else:
            a = x[o]; b = x[o + 1]; c = x[o + 2]
            s += (c * a) * (c * a) + (c * b) * (c * b) + (1.0 - c * c) * (1.0 - c * c)
    return sqrt(s)


cdef double _fval(double[::1] x, int[::1] kinds, int[::1] offsets) noexcept nogil:
    cdef Py_ssize_t f, o
    cdef double s = 0.0
    for f in range(kinds.shape[0]):
        o = offsets[f]
        if kinds[f] == 0:
            s += cos(TWO_PI * x[o])
        else:
            s += x[o + 2]
    return s


cdef Py_ssize_t _nearest(double[::1] x, int[::1] kinds, int[::1] offsets,
                         double[:, ::1] crit, double eps2) noexcept nogil:
    cdef Py_ssize_t i, f, o, best = -1
    cdef double best_d = eps2, d2, d
    for i in range(crit.shape[0]):
        d2 = 0.0
        for f in range(kinds.shape[0]):
            o = offsets[f]
            if kinds[f] == 0:
                d = x[o] - crit[i, o]
                d -= floor(d + 0.5)
                d2 += d * d
            else:
                d2 += ((x[o] - crit[i, o]) * (x[o] - crit[i, o])
                       + (x[o + 1] - crit[i, o + 1]) * (x[o + 1] - crit[i, o + 1])
                       + (x[o + 2] - crit[i, o + 2]) * (x[o + 2] - crit[i, o + 2]))
        if d2 < best_d:
            best = i
            best_d = d2
    return best


cdef void _normalise(double[::1] x, int[::1] kinds, int[::1] offsets) noexcept nogil:
    cdef Py_ssize_t f, o
    cdef double r
    for f in range(kinds.shape[0]):
        if kinds[f] == 1:
            o = offsets[f]
            r = sqrt(x[o] * x[o] + x[o + 1] * x[o + 1] + x[o + 2] * x[o + 2])
            x[o] /= r
            x[o + 1] /= r
            x[o + 2] /= r


def integrate(x0, kinds, offsets, crit, attractor, double direction, double eps_basin,
              double conv_tol, double h0, double h_max, double atol, double rtol,
              double t_max, long max_steps, bint stop_at_basin, bint record):
    """See ``_flow_py.integrate``; identical contract and return tuple."""
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef int[::1] kd = np.asarray(kinds, dtype=np.int32)
    cdef int[::1] of = np.asarray(offsets, dtype=np.int32)
    cdef double[:, ::1] cr = np.ascontiguousarray(np.asarray(crit, dtype=np.float64).reshape(len(crit), len(x0)))
    cdef unsigned char[::1] att = np.asarray(attractor, dtype=np.uint8)
    cdef Py_ssize_t n = x.shape[0]
    cdef double[:, ::1] ks = np.zeros((7, n))
    cdef double[::1] xs = np.zeros(n)
    cdef double[::1] xn = np.zeros(n)
    cdef double[::1] tmp
    cdef double eps2 = eps_basin * eps_basin
    cdef double t = 0.0, h = h0, err, e, acc5, acc, sc, g, g_prev, fac
    cdef long steps = 0
    cdef Py_ssize_t i, j, s, q
    visited = []
    traj = [list(x)] if record else None
    fvals = [_fval(x, kd, of)] if record else None

    g_prev = _grad_norm(x, kd, of)
    if stop_at_basin:
        q = _nearest(x, kd, of, cr, eps2)
        if q >= 0:
            visited.append((q, list(x)))
            if g_prev <= conv_tol:
                return (0, q, 0, 0.0, list(x), visited, traj, fvals)

    while True:
        if steps >= max_steps:
            return (1, -1, steps, t, list(x), visited, traj, fvals)
        if stop_at_basin:
            if t >= t_max:
                return (1, -1, steps, t, list(x), visited, traj, fvals)
        elif t_max - t <= 1e-15 * max(1.0, t_max):
            return (0, -1, steps, t, list(x), visited, traj, fvals)
        if not stop_at_basin and t + h > t_max:
            h = t_max - t
        if h > h_max:
            h = h_max
        if h < 1e-14 * max(1.0, fabs(t)):
            return (2, -1, steps, t, list(x), visited, traj, fvals)

        _field(x, kd, of, direction, ks[0])
        for s in range(1, 7):
            for i in range(n):
                acc = x[i]
                for j in range(s):
                    acc += h * A[s][j] * ks[j, i]
                xs[i] = acc
            _field(xs, kd, of, direction, ks[s])
        err = 0.0
        for i in range(n):
            acc5 = x[i]
            e = 0.0
            for j in range(7):
                acc5 += h * B[j] * ks[j, i]
                e += h * E[j] * ks[j, i]
            xn[i] = acc5
            sc = atol + rtol * max(fabs(x[i]), fabs(acc5))
            err += (e / sc) * (e / sc)
        err = sqrt(err / n)

        if err <= 1.0:
            t += h
            steps += 1
            tmp = x
            x = xn
            xn = tmp
            _normalise(x, kd, of)
            if record:
                traj.append(list(x))
                fvals.append(_fval(x, kd, of))
            if stop_at_basin:
                g = _grad_norm(x, kd, of)
                q = _nearest(x, kd, of, cr, eps2)
                if q >= 0:
                    if not visited or visited[len(visited) - 1][0] != q:
                        visited.append((q, list(x)))
                    if g <= conv_tol or (att[q] and g < g_prev):
                        return (0, q, steps, t, list(x), visited, traj, fvals)
                g_prev = g
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
        else:
            fac = max(0.2, 0.9 * pow(err, -0.2))
        h *= fac
