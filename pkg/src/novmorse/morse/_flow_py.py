"""Pure-Python gradient-flow kernel (Dormand-Prince 5(4), adaptive step).

This is the fallback for ``_flowkernel.pyx`` and must stay line-for-line
equivalent to it.  Plain lists and ``math`` are used on purpose: numpy has
too much per-call overhead on vectors of length <= 10.
"""

import math

TWO_PI = 2.0 * math.pi

STATUS_CONVERGED = 0
STATUS_TIMEOUT = 1
STATUS_UNDERFLOW = 2

# Dormand-Prince tableau
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_B = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0)
_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


def _field(x, kinds, offsets, direction, out):
    # direction * (-grad f)
    for k, o in zip(kinds, offsets):
        if k == 0:
            out[o] = direction * TWO_PI * math.sin(TWO_PI * x[o])
        else:
            a, b, c = x[o], x[o + 1], x[o + 2]
            out[o] = direction * c * a
            out[o + 1] = direction * c * b
            out[o + 2] = direction * (c * c - 1.0)


def _grad_norm(x, kinds, offsets):
    s = 0.0
    for k, o in zip(kinds, offsets):
        if k == 0:
            g = TWO_PI * math.sin(TWO_PI * x[o])
            s += g * g
        else:
            a, b, c = x[o], x[o + 1], x[o + 2]
            s += (c * a) ** 2 + (c * b) ** 2 + (1.0 - c * c) ** 2
    return math.sqrt(s)


def _fval(x, kinds, offsets):
    s = 0.0
    for k, o in zip(kinds, offsets):
        s += math.cos(TWO_PI * x[o]) if k == 0 else x[o + 2]
    return s


def _nearest(x, kinds, offsets, crit, eps2):
    best, best_d = -1, eps2
    for i, c in enumerate(crit):
        d2 = 0.0
        for k, o in zip(kinds, offsets):
            if k == 0:
                d = x[o] - c[o]
                d -= math.floor(d + 0.5)
                d2 += d * d
            else:
                d2 += (x[o] - c[o]) ** 2 + (x[o + 1] - c[o + 1]) ** 2 + (x[o + 2] - c[o + 2]) ** 2
        if d2 < best_d:
            best, best_d = i, d2
    return best


def _normalise(x, kinds, offsets):
    for k, o in zip(kinds, offsets):
        if k == 1:
            r = math.sqrt(x[o] ** 2 + x[o + 1] ** 2 + x[o + 2] ** 2)
            x[o] /= r
            x[o + 1] /= r
            x[o + 2] /= r


def integrate(
    x0,
    kinds,
    offsets,
    crit,
    attractor,
    direction,
    eps_basin,
    conv_tol,
    h0,
    h_max,
    atol,
    rtol,
    t_max,
    max_steps,
    stop_at_basin,
    record,
):
    """Integrate ``x' = direction * (-grad f)`` from ``x0``.

    Returns ``(status, limit, steps, t, x, visited, traj, fvals)``.  With
    ``stop_at_basin`` the run ends once the state is inside the
    ``eps_basin`` ball of a critical point and either that point is an
    attractor with ``|grad f|`` decreasing, or ``|grad f| <= conv_tol``.
    Without it the run ends exactly at ``t_max``.  ``visited`` lists
    ``(critical index, state on entry)`` for every basin ball entered.
    """
    n = len(x0)
    x = [float(v) for v in x0]
    kinds = list(kinds)
    offsets = list(offsets)
    crit = [list(c) for c in crit]
    eps2 = eps_basin * eps_basin
    visited = []
    traj = [list(x)] if record else None
    fvals = [_fval(x, kinds, offsets)] if record else None
    t = 0.0
    h = h0
    steps = 0
    g_prev = _grad_norm(x, kinds, offsets)

    if stop_at_basin:
        q = _nearest(x, kinds, offsets, crit, eps2)
        if q >= 0:
            visited.append((q, list(x)))
            if g_prev <= conv_tol:
                return (STATUS_CONVERGED, q, 0, 0.0, x, visited, traj, fvals)

    ks = [[0.0] * n for _ in range(7)]
    xs = [0.0] * n
    xn = [0.0] * n
    while True:
        if steps >= max_steps:
            return (STATUS_TIMEOUT, -1, steps, t, x, visited, traj, fvals)
        if stop_at_basin:
            if t >= t_max:
                return (STATUS_TIMEOUT, -1, steps, t, x, visited, traj, fvals)
        elif t_max - t <= 1e-15 * max(1.0, t_max):
            return (STATUS_CONVERGED, -1, steps, t, x, visited, traj, fvals)
        if not stop_at_basin and t + h > t_max:
            h = t_max - t
        if h > h_max:
            h = h_max
        if h < 1e-14 * max(1.0, abs(t)):
            return (STATUS_UNDERFLOW, -1, steps, t, x, visited, traj, fvals)

        _field(x, kinds, offsets, direction, ks[0])
        for s in range(1, 7):
            row = _A[s]
            for i in range(n):
                acc = x[i]
                for j in range(s):
                    acc += h * row[j] * ks[j][i]
                xs[i] = acc
            _field(xs, kinds, offsets, direction, ks[s])
        err = 0.0
        for i in range(n):
            acc5 = x[i]
            e = 0.0
            for j in range(7):
                acc5 += h * _B[j] * ks[j][i]
                e += h * _E[j] * ks[j][i]
            xn[i] = acc5
            sc = atol + rtol * max(abs(x[i]), abs(acc5))
            err += (e / sc) ** 2
        err = math.sqrt(err / n)

        if err <= 1.0:
            t += h
            steps += 1
            x, xn = xn, x
            _normalise(x, kinds, offsets)
            if record:
                traj.append(list(x))
                fvals.append(_fval(x, kinds, offsets))
            if stop_at_basin:
                g = _grad_norm(x, kinds, offsets)
                q = _nearest(x, kinds, offsets, crit, eps2)
                if q >= 0:
                    if not visited or visited[-1][0] != q:
                        visited.append((q, list(x)))
                    if g <= conv_tol or (attractor[q] and g < g_prev):
                        return (STATUS_CONVERGED, q, steps, t, x, visited, traj, fvals)
                g_prev = g
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h *= fac
