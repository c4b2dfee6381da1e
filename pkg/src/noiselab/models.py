"""Spatial models, energy norms, and coercivity certificates.

Five model kinds are provided. One is a scalar toy problem with a
superlinear drift; the other four are one-dimensional Dirichlet problems
discretized by finite differences on a uniform grid:

* ``superlinear_sde``   dX = (quad_coeff * X^2 - sink_coeff * sign(X)|X|^{1/2}) dt + noise
* ``p_laplace_hot``     du = (div(|u'|^{p-2} u') + u^2) dt + noise, 1 < p < 2
* ``fast_diffusion``    du = (sign(u)|u|^r)'' dt + noise, 0 < r < 1
* ``surface_growth``    du = (-u'''' - u'' + ((u')^2)'') dt + noise
* ``heat_validation``   du = u'' dt + noise

Each model carries two norms. ``h_norm`` is the norm of the state space in
which blow-up and extinction are detected, ``v_norm`` is the stronger norm
whose dissipation the drift provides. The pair is summarized by a
:class:`CoercivityProfile`, a certificate of the inequality

    2 <A(u), u>_H + delta * v_norm(u)^alpha <= g_coeff * (h_norm(u)^2)^g_exponent + additive_const

which the ``conditions`` module verifies or estimates numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

SCALAR_KINDS = ("superlinear_sde",)
FIELD_KINDS = ("p_laplace_hot", "fast_diffusion", "surface_growth", "heat_validation")
MODEL_KINDS = SCALAR_KINDS + FIELD_KINDS

_EMBED_SEED = 0xC0FFEE


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on (0, L) with homogeneous Dirichlet boundaries.

    Only interior nodes carry state; boundary values are zero ghosts in
    every stencil.
    """

    L: float
    n_interior: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError("grid length L must be positive and finite")
        if self.n_interior < 1:
            raise ValueError("n_interior must be at least 1")

    @property
    def h(self) -> float:
        return self.L / (self.n_interior + 1)

    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_interior + 1)


@dataclass
class State:
    """A solution snapshot: interior values (length 1 for scalar models) and time."""

    values: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class CoercivityProfile:
    """Constants certifying the drift's energy inequality.

    ``g_coeff`` or ``additive_const`` set to None mean "finite but not known
    in closed form"; the conditions module can estimate the former by
    sampling.
    """

    alpha: float
    delta: float
    g_coeff: Optional[float]
    g_exponent: float
    additive_const: Optional[float]

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise ValueError("alpha must lie in (1, 2]")
        if not (self.delta > 0):
            raise ValueError("delta must be positive")
        if self.g_coeff is not None and self.g_coeff < 0:
            raise ValueError("g_coeff must be nonnegative when given")
        if self.g_exponent < 0:
            raise ValueError("g_exponent must be nonnegative")
        if self.additive_const is not None and self.additive_const < 0:
            raise ValueError("additive_const must be nonnegative when given")


@dataclass(frozen=True, eq=False)
class Model:
    kind: str
    grid: Optional[GridSpec]
    profile: CoercivityProfile
    params: dict
    stiff_linear_part: Optional[np.ndarray]
    # Gram matrix of the state space when it is not the plain L2 space
    # (fast_diffusion only: inverse discrete Dirichlet Laplacian times h^2).
    h_metric: Optional[np.ndarray] = None

    @property
    def is_scalar(self) -> bool:
        return self.kind in SCALAR_KINDS


# ---------------------------------------------------------------------------
# stencils (all with Dirichlet zero ghosts)

def _pad1(v: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], v, [0.0]))


def _pad2(v: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0, 0.0], v, [0.0, 0.0]))


def _forward_diff(v: np.ndarray, h: float) -> np.ndarray:
    """Forward differences on the n+1 cells of the padded state."""
    w = _pad1(v)
    return (w[1:] - w[:-1]) / h


def _centered_diff(v: np.ndarray, h: float) -> np.ndarray:
    w = _pad1(v)
    return (w[2:] - w[:-2]) / (2.0 * h)


def _second_diff(v: np.ndarray, h: float) -> np.ndarray:
    w = _pad1(v)
    return (w[:-2] - 2.0 * w[1:-1] + w[2:]) / (h * h)


def _fourth_diff(v: np.ndarray, h: float) -> np.ndarray:
    w = _pad2(v)
    return (w[:-4] - 4.0 * w[1:-3] + 6.0 * w[2:-2] - 4.0 * w[3:-1] + w[4:]) / h**4


def second_difference_matrix(grid: GridSpec) -> np.ndarray:
    n, h = grid.n_interior, grid.h
    M = np.zeros((n, n))
    i = np.arange(n)
    M[i, i] = -2.0
    M[i[:-1], i[:-1] + 1] = 1.0
    M[i[1:], i[1:] - 1] = 1.0
    return M / (h * h)


def fourth_difference_matrix(grid: GridSpec) -> np.ndarray:
    n, h = grid.n_interior, grid.h
    M = np.zeros((n, n))
    for off, c in ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)):
        j = np.arange(max(0, -off), min(n, n - off))
        M[j, j + off] = c
    return M / h**4


def _inverse_laplacian_metric(grid: GridSpec) -> np.ndarray:
    """h^2 * T^{-1} for T = tridiag(-1, 2, -1), in closed form.

    (T^{-1})_{ij} = min(i,j) * (n+1-max(i,j)) / (n+1) with 1-based indices,
    so no linear solve and no factorization error enters the norm.
    """
    n = grid.n_interior
    idx = np.arange(1, n + 1, dtype=float)
    mn = np.minimum.outer(idx, idx)
    mx = np.maximum.outer(idx, idx)
    tinv = mn * (n + 1 - mx) / (n + 1)
    return grid.h * grid.h * tinv


# ---------------------------------------------------------------------------
# construction

def _scalar_profile(params: dict) -> CoercivityProfile:
    quad = params["quad_coeff"]
    sink = params["sink_coeff"]
    c0 = params["c0"]
    if quad > 0:
        # 2 u * quad u^2 <= c1 |u|^3 + C for any c1 > 2 quad; the midpoint of
        # (2 quad, quad c0^2) is used when that window is nonempty.
        if c0 * c0 > 2.0:
            c1 = quad * (2.0 + c0 * c0) / 2.0
        else:
            c1 = quad * 2.5
        return CoercivityProfile(alpha=2.0, delta=2.0, g_coeff=c1,
                                 g_exponent=1.5, additive_const=None)
    if sink > 0:
        # pure sink: 2 <A, u> = -2 sink |u|^{3/2} exactly
        return CoercivityProfile(alpha=1.5, delta=2.0 * sink, g_coeff=0.0,
                                 g_exponent=0.0, additive_const=0.0)
    # drift-free: delta * u^2 <= delta * (u^2)^1
    return CoercivityProfile(alpha=2.0, delta=1.0, g_coeff=1.0,
                             g_exponent=1.0, additive_const=0.0)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def make_model(kind: str, parameters: Optional[dict] = None,
               grid: Optional[GridSpec] = None) -> Model:
    """Build a model of the given kind, validating parameters.

    Raises ValueError for an unknown kind, invalid parameters, a missing
    grid on field kinds, or a grid passed to the scalar kind.
    """
    params = dict(parameters or {})
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind: {kind!r}")

    if kind == "superlinear_sde":
        _require(grid is None, "superlinear_sde is zero-dimensional, no grid accepted")
        params.setdefault("c0", 1.0)
        params.setdefault("m", 2.0)
        params.setdefault("m_drift", 2.0)
        params.setdefault("quad_coeff", 1.0)
        params.setdefault("sink_coeff", 0.0)
        params.setdefault("x0", 1.0)
        _require(params["c0"] >= 0, "c0 must be nonnegative")
        _require(params["m"] >= 1, "noise exponent m must be at least 1")
        _require(params["m_drift"] == 2.0, "only the quadratic drift power is implemented")
        _require(params["quad_coeff"] >= 0, "quad_coeff must be nonnegative")
        _require(params["sink_coeff"] >= 0, "sink_coeff must be nonnegative")
        unknown = set(params) - {"c0", "m", "m_drift", "quad_coeff", "sink_coeff", "x0"}
        _require(not unknown, f"unknown parameters for superlinear_sde: {sorted(unknown)}")
        return Model(kind=kind, grid=None, profile=_scalar_profile(params),
                     params=params, stiff_linear_part=None)

    _require(grid is not None, f"{kind} needs a grid")

    if kind == "p_laplace_hot":
        _require("p" in params, "p_laplace_hot needs the exponent p")
        params.setdefault("eps_reg", 1e-8)
        params.setdefault("x0", {"mode": 1, "h_norm": 1.0})
        p = params["p"]
        _require(1.0 < p < 2.0, "p must lie in (1, 2)")
        _require(params["eps_reg"] > 0, "eps_reg must be positive")
        unknown = set(params) - {"p", "eps_reg", "x0"}
        _require(not unknown, f"unknown parameters for p_laplace_hot: {sorted(unknown)}")
        profile = CoercivityProfile(
            alpha=p, delta=0.5, g_coeff=None,
            g_exponent=(4.0 * p - 3.0) / (3.0 * p - 3.0), additive_const=0.0)
        return Model(kind=kind, grid=grid, profile=profile, params=params,
                     stiff_linear_part=None)

    if kind == "fast_diffusion":
        _require("r" in params, "fast_diffusion needs the exponent r")
        params.setdefault("x0", {"mode": 1, "h_norm": 1.0})
        r = params["r"]
        _require(0.0 < r < 1.0, "r must lie in (0, 1)")
        unknown = set(params) - {"r", "x0"}
        _require(not unknown, f"unknown parameters for fast_diffusion: {sorted(unknown)}")
        profile = CoercivityProfile(alpha=r + 1.0, delta=2.0, g_coeff=0.0,
                                    g_exponent=0.0, additive_const=0.0)
        return Model(kind=kind, grid=grid, profile=profile, params=params,
                     stiff_linear_part=None,
                     h_metric=_inverse_laplacian_metric(grid))

    if kind == "surface_growth":
        params.setdefault("x0", {"mode": 1, "h_norm": 1.0})
        unknown = set(params) - {"x0"}
        _require(not unknown, f"unknown parameters for surface_growth: {sorted(unknown)}")
        a_lin = -fourth_difference_matrix(grid) - second_difference_matrix(grid)
        profile = CoercivityProfile(alpha=2.0, delta=0.5, g_coeff=None,
                                    g_exponent=3.0, additive_const=None)
        return Model(kind=kind, grid=grid, profile=profile, params=params,
                     stiff_linear_part=a_lin)

    # heat_validation
    params.setdefault("x0", {"mode": 1, "h_norm": 1.0})
    unknown = set(params) - {"x0"}
    _require(not unknown, f"unknown parameters for heat_validation: {sorted(unknown)}")
    profile = CoercivityProfile(alpha=2.0, delta=2.0, g_coeff=0.0,
                                g_exponent=1.0, additive_const=0.0)
    return Model(kind=kind, grid=grid, profile=profile, params=params,
                 stiff_linear_part=second_difference_matrix(grid))


def initial_state(model: Model) -> State:
    """Materialize the model's configured initial condition at t = 0."""
    return State(values=initial_values(model), t=0.0)


def initial_values(model: Model) -> np.ndarray:
    x0 = model.params["x0"]
    if model.is_scalar:
        return np.array([float(x0)], dtype=float)
    grid = model.grid
    n = grid.n_interior
    if isinstance(x0, (list, tuple, np.ndarray)):
        vals = np.asarray(x0, dtype=float)
        if vals.shape != (n,):
            raise ValueError(f"x0 array must have length {n}")
        return vals.copy()
    if isinstance(x0, dict):
        mode = int(x0.get("mode", 1))
        target = float(x0.get("h_norm", 1.0))
    else:
        mode, target = 1, float(x0)
    if mode < 1:
        raise ValueError("sine mode index must be >= 1")
    if target <= 0:
        raise ValueError("initial h_norm must be positive")
    vals = np.sin(mode * math.pi * grid.nodes() / grid.L)
    nh = _h_norm_values(model, vals)
    return vals * (target / nh)


# ---------------------------------------------------------------------------
# norms

def _h_norm_values(model: Model, values: np.ndarray) -> float:
    if model.is_scalar:
        return abs(float(values[0]))
    h = model.grid.h
    if model.kind == "fast_diffusion":
        quad = float(values @ model.h_metric @ values)
        return math.sqrt(h * max(quad, 0.0))
    if model.kind == "surface_growth":
        d2 = _second_diff(values, h)
        return math.sqrt(h * float(np.dot(d2, d2)))
    return math.sqrt(h * float(np.dot(values, values)))


def h_norm(model: Model, s: State) -> float:
    """Norm of the state space where blow-up and extinction are measured.

    Scalar models: |u|. p_laplace_hot and heat_validation: the L2 grid norm.
    fast_diffusion: the dual norm induced by the inverse discrete Dirichlet
    Laplacian. surface_growth: the L2 norm of the second difference.
    """
    return _h_norm_values(model, s.values)


def _v_norm_values(model: Model, values: np.ndarray) -> float:
    if model.is_scalar:
        return abs(float(values[0]))
    h = model.grid.h
    if model.kind == "p_laplace_hot":
        p = model.params["p"]
        d = _forward_diff(values, h)
        return (h * float(np.sum(np.abs(d) ** p))) ** (1.0 / p)
    if model.kind == "fast_diffusion":
        r1 = model.params["r"] + 1.0
        return (h * float(np.sum(np.abs(values) ** r1))) ** (1.0 / r1)
    if model.kind == "surface_growth":
        d4 = _fourth_diff(values, h)
        return math.sqrt(h * float(np.dot(d4, d4)))
    # heat_validation: first-difference energy norm
    d = _forward_diff(values, h)
    return math.sqrt(h * float(np.dot(d, d)))


def v_norm(model: Model, s: State) -> float:
    """Norm of the dissipation space entering the coercivity certificate."""
    return _v_norm_values(model, s.values)


# ---------------------------------------------------------------------------
# drifts

def _drift_values(model: Model, values: np.ndarray) -> np.ndarray:
    kind = model.kind
    if kind == "superlinear_sde":
        u = values
        quad = model.params["quad_coeff"]
        sink = model.params["sink_coeff"]
        return quad * (u * u) - sink * (np.sign(u) * np.sqrt(np.abs(u)))
    h = model.grid.h
    if kind == "p_laplace_hot":
        p = model.params["p"]
        eps = model.params["eps_reg"]
        d = _forward_diff(values, h)
        w = (d * d + eps * eps) ** ((p - 2.0) / 2.0) * d
        return (w[1:] - w[:-1]) / h + values * values
    if kind == "fast_diffusion":
        r = model.params["r"]
        phi = np.sign(values) * np.abs(values) ** r
        return _second_diff(phi, h)
    if kind == "surface_growth":
        grad_sq = _centered_diff(values, h) ** 2
        return (-_fourth_diff(values, h) - _second_diff(values, h)
                + _second_diff(grad_sq, h))
    # heat_validation
    return _second_diff(values, h)


def drift(model: Model, t: float, s: State) -> np.ndarray:
    """Drift vector field A(u). The family is autonomous; t is accepted for
    interface uniformity and ignored."""
    return _drift_values(model, s.values)


# ---------------------------------------------------------------------------
# embedding constant

def first_laplacian_eigenvalue(grid: GridSpec) -> float:
    """Smallest eigenvalue of -D2 on the grid, (2/h^2)(1 - cos(pi h / L))."""
    h = grid.h
    return (2.0 / (h * h)) * (1.0 - math.cos(math.pi * h / grid.L))


def _min_rayleigh_descent(n: int, v_of, grad_v, h_of, grad_h,
                          restarts: int = 50, iters: int = 500,
                          rtol: float = 1e-8) -> float:
    """Minimize v_of(u)/h_of(u) by projected gradient descent with random
    restarts. Deterministic: fixed internal seed."""
    rng = np.random.default_rng(_EMBED_SEED)
    best = math.inf
    for _ in range(restarts):
        u = rng.standard_normal(n)
        u = u / h_of(u)
        lr = 0.2
        f_prev = math.inf
        for _ in range(iters):
            V = v_of(u)
            g = grad_v(u) - V * grad_h(u)
            gn = math.sqrt(float(np.dot(g, g)))
            if gn == 0.0:
                break
            trial = u - (lr / gn) * g
            trial = trial / h_of(trial)
            f_trial = v_of(trial)
            if f_trial < V:
                u = trial
                lr = min(lr * 1.1, 1.0)
                if abs(f_prev - f_trial) <= rtol * f_trial:
                    f_prev = f_trial
                    break
                f_prev = f_trial
            else:
                lr *= 0.5
                if lr < 1e-14:
                    break
        best = min(best, v_of(u))
    return best


def embedding_constant(model: Model) -> float:
    """Largest c with c * h_norm(u) <= v_norm(u) for all grid states.

    Exact for the scalar model (both norms coincide, c = 1), closed form
    for heat_validation (sqrt of the first Laplacian eigenvalue), a dense
    generalized eigenproblem for surface_growth, and a deterministic
    multistart descent on the Rayleigh quotient for the two nonlinear
    norms.
    """
    if model.is_scalar:
        return 1.0
    grid = model.grid
    n, h = grid.n_interior, grid.h
    if model.kind == "heat_validation":
        return math.sqrt(first_laplacian_eigenvalue(grid))
    if model.kind == "surface_growth":
        from scipy.linalg import eigh
        b2 = second_difference_matrix(grid)
        b4 = fourth_difference_matrix(grid)
        lam = eigh(b4.T @ b4, b2.T @ b2, eigvals_only=True)
        return math.sqrt(max(float(lam[0]), 0.0))
    if model.kind == "p_laplace_hot":
        p = model.params["p"]

        def v_of(u):
            d = _forward_diff(u, h)
            return (h * float(np.sum(np.abs(d) ** p))) ** (1.0 / p)

        def grad_v(u):
            d = _forward_diff(u, h)
            S = h * float(np.sum(np.abs(d) ** p))
            w = np.sign(d) * np.abs(d) ** (p - 1.0)
            return S ** (1.0 / p - 1.0) * (w[:-1] - w[1:])

        def h_of(u):
            return math.sqrt(h * float(np.dot(u, u)))

        def grad_h(u):
            return h * u / h_of(u)

        return _min_rayleigh_descent(n, v_of, grad_v, h_of, grad_h)

    # fast_diffusion
    r1 = model.params["r"] + 1.0
    metric = model.h_metric

    def v_of(u):
        return (h * float(np.sum(np.abs(u) ** r1))) ** (1.0 / r1)

    def grad_v(u):
        S = h * float(np.sum(np.abs(u) ** r1))
        return S ** (1.0 / r1 - 1.0) * h * np.sign(u) * np.abs(u) ** (r1 - 1.0)

    def h_of(u):
        return math.sqrt(h * max(float(u @ metric @ u), 0.0))

    def grad_h(u):
        return h * (metric @ u) / h_of(u)

    return _min_rayleigh_descent(n, v_of, grad_v, h_of, grad_h)
