"""Pure-Python scalar time-stepping kernel.

Reference implementation of the hot loop for scalar models. The compiled
twin in _ckernels.pyx mirrors this function statement by statement; both
must produce bit-identical results, so every arithmetic expression here is
written in the exact grouping the compiled code uses, and all libm calls
go through the math module (same library the C code links against).
"""

from __future__ import annotations

import math

STATUS_COMPLETED = 0
STATUS_BLOWN_UP = 1
STATUS_EXTINCT = 2


def scalar_path(u0: float, dt: float, n_steps: int, omega, scheme: int,
                quad: float, sink: float, m: float,
                r_blow: float, eps_ext: float, stride: int,
                rec_t, rec_u):
    """Integrate one scalar path, recording every `stride` steps.

    omega[k] is the combined noise weight of step k (sum_k b_k dW_k).
    scheme: 0 explicit, 1 tamed, 2 semi-implicit (same as explicit here,
    the scalar model has no stiff linear part).
    Returns (record_count, status, event_time, terminal_value); event_time
    is NaN when the path neither blew up nor died.
    """
    u = float(u0)
    idx = 0
    rec_t[idx] = 0.0
    rec_u[idx] = u
    idx += 1
    event_t = math.nan
    absorbed = False

    if not math.isfinite(u) or math.fabs(u) >= r_blow:
        return (idx, STATUS_BLOWN_UP, 0.0, u)
    if math.fabs(u) <= eps_ext:
        u = 0.0
        absorbed = True
        event_t = 0.0
        rec_u[0] = 0.0

    for k in range(n_steps):
        t_next = (k + 1) * dt
        recorded = False
        if not absorbed:
            fa = math.fabs(u)
            f = quad * (u * u) - sink * math.copysign(math.sqrt(fa), u)
            g = (float(omega[k]) * math.pow(fa, m)) * u
            du = f * dt + g
            if scheme == 1:
                u = u + du / (1.0 + math.fabs(du))
            else:
                u = u + du
            if not math.isfinite(u) or math.fabs(u) >= r_blow:
                rec_t[idx] = t_next
                rec_u[idx] = u
                idx += 1
                return (idx, STATUS_BLOWN_UP, t_next, u)
            if math.fabs(u) <= eps_ext:
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
    status = STATUS_EXTINCT if absorbed else STATUS_COMPLETED
    return (idx, status, event_t, u)
