# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled scalar time-stepping kernel.

Statement-for-statement twin of _pykernels.scalar_path. Keep the two in
lockstep: the arithmetic grouping and the libm calls must match exactly,
the build disables fp contraction, and tests assert bitwise equality of
whole trajectories between the two backends.
"""

from libc.math cimport NAN, copysign, fabs, isfinite, pow, sqrt

STATUS_COMPLETED = 0
STATUS_BLOWN_UP = 1
STATUS_EXTINCT = 2


def scalar_path(double u0, double dt, Py_ssize_t n_steps, double[::1] omega,
                int scheme, double quad, double sink, double m,
                double r_blow, double eps_ext, Py_ssize_t stride,
                double[::1] rec_t, double[::1] rec_u):
    """See _pykernels.scalar_path; identical contract and identical bits."""
    cdef double u = u0
    cdef Py_ssize_t idx = 0
    cdef Py_ssize_t k
    cdef double event_t = NAN
    cdef bint absorbed = False
    cdef bint recorded
    cdef double t_next, t_end, fa, f, g, du

    rec_t[idx] = 0.0
    rec_u[idx] = u
    idx += 1

    if not isfinite(u) or fabs(u) >= r_blow:
        return (idx, STATUS_BLOWN_UP, 0.0, u)
    if fabs(u) <= eps_ext:
        u = 0.0
        absorbed = True
        event_t = 0.0
        rec_u[0] = 0.0

    for k in range(n_steps):
        t_next = (k + 1) * dt
        recorded = False
        if not absorbed:
            fa = fabs(u)
            f = quad * (u * u) - sink * copysign(sqrt(fa), u)
            g = (omega[k] * pow(fa, m)) * u
            du = f * dt + g
            if scheme == 1:
                u = u + du / (1.0 + fabs(du))
            else:
                u = u + du
            if not isfinite(u) or fabs(u) >= r_blow:
                rec_t[idx] = t_next
                rec_u[idx] = u
                idx += 1
                return (idx, STATUS_BLOWN_UP, t_next, u)
            if fabs(u) <= eps_ext:
                u = 0.0
                absorbed = True
                event_t = t_next
                rec_t[idx] = t_next
                rec_u[idx] = 0.0
                idx += 1
                recorded = True
        if (k + 1) % stride == 0 and not recorded:
            rec_t[idx] = t_next
            rec_u[idx] = u
            idx += 1

    t_end = n_steps * dt
    if rec_t[idx - 1] != t_end:
        rec_t[idx] = t_end
        rec_u[idx] = u
        idx += 1
    cdef int status = STATUS_EXTINCT if absorbed else STATUS_COMPLETED
    return (idx, status, event_t, u)
