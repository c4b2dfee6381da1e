"""Time stepping with counter-based randomness and event detection.

Randomness is keyed, not stateful: path i of a run seeded with s draws
from a Philox generator keyed by (s, i), and an RngStream records only how
many Gaussians have been consumed. Any stream position can therefore be
reconstructed exactly, which is what makes every trajectory reproducible
bit for bit regardless of scheduling.

Trajectories are recorded sparsely (initial point, every record_stride-th
step, the step that triggers an event, and the terminal step) and carry a
status of "completed", "blown_up" (norm reached R_blow or left the finite
range) or "extinct" (norm fell to eps_ext or below; the state is then
pinned to exactly zero for the rest of the horizon).

Scalar single-channel paths run in the compiled kernel when it is
available; the pure-Python kernel and the generic field loop below follow
the same statement order so all routes agree bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels
from .models import Model, State, _drift_values, _h_norm_values, _v_norm_values, initial_values
from .noise import NoiseSpec, WienerIncrement, diffusion_apply

SCHEMES = ("euler_maruyama", "tamed", "semi_implicit")
_SCHEME_CODE = {"euler_maruyama": 0, "tamed": 1, "semi_implicit": 2}
_STATUS_NAME = {
    _kernels.STATUS_COMPLETED: "completed",
    _kernels.STATUS_BLOWN_UP: "blown_up",
    _kernels.STATUS_EXTINCT: "extinct",
}


@dataclass
class RngStream:
    """Position in the Gaussian stream of one path.

    counter counts Gaussians handed out so far; reconstructing a stream at
    a given counter is exact, so resuming and rerunning are equivalent.
    """

    master_seed: int
    path_index: int
    counter: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValueError("master_seed must fit in an unsigned 64-bit word")
        if int(self.path_index) < 0:
            raise ValueError("path_index must be nonnegative")
        if int(self.counter) < 0:
            raise ValueError("counter must be nonnegative")


def _generator_at(stream: RngStream) -> np.random.Generator:
    key = np.array([stream.master_seed, stream.path_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    if stream.counter:
        gen.standard_normal(stream.counter)
    return gen


def wiener_increments(stream: RngStream, n_channels: int,
                      dt: float) -> WienerIncrement:
    """Draw one vector of Brownian increments and advance the stream."""
    if n_channels < 1:
        raise ValueError("n_channels must be at least 1")
    if not dt > 0:
        raise ValueError("dt must be positive")
    gen = _generator_at(stream)
    z = gen.standard_normal(n_channels)
    stream.counter += n_channels
    return WienerIncrement(dW=z * math.sqrt(dt), dt=dt)


@dataclass(frozen=True)
class SimConfig:
    """Immutable description of one integration run."""

    dt: float
    T: float
    scheme: str = "tamed"
    R_blow: float = 1e6
    eps_ext: float = 1e-6
    record_stride: int = 100

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0 and self.dt < self.T):
            raise ValueError("need 0 < dt < T")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if not (self.R_blow > 1.0 > self.eps_ext > 0.0):
            raise ValueError("thresholds must satisfy R_blow > 1 > eps_ext > 0")
        if int(self.record_stride) < 1:
            raise ValueError("record_stride must be a positive integer")


@dataclass
class TrajectoryRecord:
    """Sparse record of one path.

    event_time is the blow-up or extinction time when status is not
    "completed"; scalar_values carries the signed state for scalar models
    (None for fields, whose state does not fit a sparse record).
    """

    times: np.ndarray
    h_norms: np.ndarray
    v_norms: np.ndarray
    terminal_state: State
    status: str
    event_time: Optional[float]
    seed: int
    path_index: int
    scalar_values: Optional[np.ndarray] = None

    @property
    def blowup_time(self) -> Optional[float]:
        return self.event_time if self.status == "blown_up" else None

    @property
    def extinction_time(self) -> Optional[float]:
        return self.event_time if self.status == "extinct" else None


def step_em(model: Model, noise: NoiseSpec, s: State, dt: float,
            w: WienerIncrement) -> State:
    """One explicit Euler-Maruyama step."""
    f = _drift_values(model, s.values)
    g = diffusion_apply(noise, model, s, w)
    du = f * dt + g
    return State(values=s.values + du, t=s.t + dt)


def step_tamed(model: Model, noise: NoiseSpec, s: State, dt: float,
               w: WienerIncrement) -> State:
    """Euler-Maruyama with the whole increment tamed by its own norm."""
    f = _drift_values(model, s.values)
    g = diffusion_apply(noise, model, s, w)
    du = f * dt + g
    scale = 1.0 + _h_norm_values(model, du)
    return State(values=s.values + du / scale, t=s.t + dt)


def _bandwidth(a: np.ndarray) -> int:
    n = a.shape[0]
    bw = 0
    for off in range(1, n):
        if np.any(np.diagonal(a, off)) or np.any(np.diagonal(a, -off)):
            bw = off
    return bw


def _banded_form(mat: np.ndarray, bw: int) -> np.ndarray:
    n = mat.shape[0]
    ab = np.zeros((2 * bw + 1, n))
    for off in range(-bw, bw + 1):
        diag = np.diagonal(mat, off)
        ab[bw - off, max(0, off):max(0, off) + diag.size] = diag
    return ab


def _implicit_system(a: np.ndarray, dt: float):
    bw = _bandwidth(a)
    mat = np.eye(a.shape[0]) - (0.5 * dt) * a
    return _banded_form(mat, bw), bw


def _semi_implicit_values(model: Model, a: np.ndarray, ab: np.ndarray,
                          bw: int, values: np.ndarray, dt: float,
                          g: np.ndarray) -> np.ndarray:
    # trapezoidal in the stiff part: its explicit half is subtracted back
    # out of the full drift, its implicit half lands in the banded matrix
    f = _drift_values(model, values)
    rhs = values + dt * f - (0.5 * dt) * (a @ values) + g
    return solve_banded((bw, bw), ab, rhs)


def step_semi_implicit(model: Model, noise: NoiseSpec, s: State, dt: float,
                       w: WienerIncrement) -> State:
    """Trapezoidal step in the stiff linear part, explicit elsewhere.

    Models without a stiff linear part fall back to the explicit step.
    """
    a = model.stiff_linear_part
    if a is None:
        return step_em(model, noise, s, dt, w)
    ab, bw = _implicit_system(a, dt)
    g = diffusion_apply(noise, model, s, w)
    new = _semi_implicit_values(model, a, ab, bw, s.values, dt, g)
    return State(values=new, t=s.t + dt)


def _record_capacity(n_steps: int, stride: int) -> int:
    return n_steps // stride + 4


def _run_scalar_kernel(model: Model, noise: NoiseSpec, cfg: SimConfig,
                       stream: RngStream, dW: np.ndarray,
                       n_steps: int, u0: float) -> TrajectoryRecord:
    omega = dW @ noise.b
    cap = _record_capacity(n_steps, cfg.record_stride)
    rec_t = np.empty(cap)
    rec_u = np.empty(cap)
    count, code, event_t, _ = _kernels.scalar_path(
        u0, cfg.dt, n_steps, omega, _SCHEME_CODE[cfg.scheme],
        model.params["quad_coeff"], model.params["sink_coeff"],
        noise.m, cfg.R_blow, cfg.eps_ext, cfg.record_stride, rec_t, rec_u)
    times = rec_t[:count].copy()
    values = rec_u[:count].copy()
    norms = np.abs(values)
    terminal = State(values=np.array([values[-1]]), t=float(times[-1]))
    return TrajectoryRecord(
        times=times, h_norms=norms, v_norms=norms.copy(),
        terminal_state=terminal, status=_STATUS_NAME[code],
        event_time=None if math.isnan(event_t) else float(event_t),
        seed=stream.master_seed, path_index=stream.path_index,
        scalar_values=values)


def _run_field_loop(model: Model, noise: NoiseSpec, cfg: SimConfig,
                    stream: RngStream, dW: np.ndarray, n_steps: int,
                    v0: np.ndarray) -> TrajectoryRecord:
    dt, stride = cfg.dt, cfg.record_stride
    scheme = cfg.scheme
    a = model.stiff_linear_part
    use_implicit = scheme == "semi_implicit" and a is not None
    if use_implicit:
        ab, bw = _implicit_system(a, dt)

    rec_t = [0.0]
    rec_h = [_h_norm_values(model, v0)]
    rec_v = [_v_norm_values(model, v0)]
    status = "completed"
    event: Optional[float] = None
    absorbed = False
    s = State(values=v0.copy(), t=0.0)

    h0 = rec_h[0]
    if not math.isfinite(h0) or h0 >= cfg.R_blow:
        return TrajectoryRecord(
            times=np.array(rec_t), h_norms=np.array(rec_h),
            v_norms=np.array(rec_v), terminal_state=s, status="blown_up",
            event_time=0.0, seed=stream.master_seed,
            path_index=stream.path_index)
    if h0 <= cfg.eps_ext:
        absorbed = True
        event = 0.0
        s = State(values=np.zeros_like(v0), t=0.0)
        rec_h[0] = 0.0
        rec_v[0] = 0.0

    for k in range(n_steps):
        t_next = (k + 1) * dt
        recorded = False
        if not absorbed:
            w = WienerIncrement(dW=dW[k], dt=dt)
            if use_implicit:
                g = diffusion_apply(noise, model, s, w)
                new = _semi_implicit_values(model, a, ab, bw, s.values, dt, g)
                s = State(values=new, t=t_next)
            elif scheme == "tamed":
                s = step_tamed(model, noise, s, dt, w)
                s.t = t_next
            else:
                s = step_em(model, noise, s, dt, w)
                s.t = t_next
            hn = _h_norm_values(model, s.values)
            if not math.isfinite(hn) or hn >= cfg.R_blow:
                rec_t.append(t_next)
                rec_h.append(hn)
                rec_v.append(_v_norm_values(model, s.values))
                status = "blown_up"
                event = t_next
                break
            if hn <= cfg.eps_ext:
                absorbed = True
                event = t_next
                s = State(values=np.zeros_like(v0), t=t_next)
                rec_t.append(t_next)
                rec_h.append(0.0)
                rec_v.append(0.0)
                recorded = True
        if (k + 1) % stride == 0 and not recorded:
            rec_t.append(t_next)
            if absorbed:
                rec_h.append(0.0)
                rec_v.append(0.0)
            else:
                rec_h.append(_h_norm_values(model, s.values))
                rec_v.append(_v_norm_values(model, s.values))

    if status == "completed":
        if absorbed:
            status = "extinct"
        horizon = n_steps * dt
        if rec_t[-1] != horizon:
            rec_t.append(horizon)
            if absorbed:
                rec_h.append(0.0)
                rec_v.append(0.0)
            else:
                rec_h.append(_h_norm_values(model, s.values))
                rec_v.append(_v_norm_values(model, s.values))
        s.t = horizon

    return TrajectoryRecord(
        times=np.array(rec_t), h_norms=np.array(rec_h),
        v_norms=np.array(rec_v), terminal_state=s, status=status,
        event_time=event, seed=stream.master_seed,
        path_index=stream.path_index)


def run_path(model: Model, noise: NoiseSpec, cfg: SimConfig,
             stream: RngStream) -> TrajectoryRecord:
    """Integrate one path to the horizon or to its first event.

    The initial condition comes from the model (its x0 parameter). All the
    path's Gaussians are drawn in one batch up front, which advances the
    stream by n_steps * n_channels regardless of early exit; a path is a
    pure function of (master_seed, path_index).
    """
    n_steps = int(round(cfg.T / cfg.dt))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    n_channels = noise.b.size
    gen = _generator_at(stream)
    z = gen.standard_normal(n_steps * n_channels)
    stream.counter += n_steps * n_channels
    dW = (z * math.sqrt(cfg.dt)).reshape(n_steps, n_channels)

    v0 = initial_values(model)
    if model.is_scalar and n_channels == 1:
        return _run_scalar_kernel(model, noise, cfg, stream, dW, n_steps,
                                  float(v0[0]))
    return _run_field_loop(model, noise, cfg, stream, dW, n_steps, v0)


def record_to_csv_rows(rec: TrajectoryRecord):
    """Yield CSV rows (header first) for one trajectory record."""
    yield ("t", "h_norm", "v_norm", "status")
    for i in range(rec.times.size):
        yield (repr(float(rec.times[i])), repr(float(rec.h_norms[i])),
               repr(float(rec.v_norms[i])), rec.status)
