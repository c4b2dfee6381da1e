"""Multiplicative noise acting along the state direction.

The noise map sends a Wiener increment (dW_1 .. dW_K) to the state
increment

    (sum_k b_k dW_k) * h_norm(u)^m * u

so every channel pushes along u itself, scaled by a power of the state
norm. Because the map is rank one, its Hilbert-Schmidt norm and the norm
of its adjoint applied to u have exact closed forms, which the estimates
in the ensemble diagnostics rely on.

Exponent conventions: NoiseSpec.m is the exponent applied to h_norm(u) in
the formula above. The scalar model is usually written with diffusion
c0 * |u|^{m-1} u instead; ``scalar_noise`` performs that shift (series
exponent = scalar exponent - 1), since |u|^{m-1} u equals h_norm(u)^{m-1} u
for the one-point norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import Model, State, h_norm


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Channel weights b (length K >= 1), norm exponent m, cached gamma = sum b_k^2."""

    b: np.ndarray
    m: float
    gamma: float


@dataclass(frozen=True, eq=False)
class WienerIncrement:
    dW: np.ndarray
    dt: float


def make_noise(b, m: float) -> NoiseSpec:
    arr = np.atleast_1d(np.asarray(b, dtype=float))
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("b must be a nonempty vector of channel weights")
    if not np.all(np.isfinite(arr)):
        raise ValueError("channel weights must be finite")
    if not (m >= 0 and math.isfinite(m)):
        raise ValueError("noise exponent m must be finite and nonnegative")
    return NoiseSpec(b=arr, m=float(m), gamma=float(np.dot(arr, arr)))


def scalar_noise(c0: float, m: float) -> NoiseSpec:
    """Single-channel noise in the scalar convention c0 * |u|^{m-1} u."""
    if c0 < 0:
        raise ValueError("c0 must be nonnegative")
    if m < 1:
        raise ValueError("scalar noise exponent m must be at least 1")
    return make_noise([c0], m - 1.0)


def split_channels(gamma: float, m: float, channels: int = 1) -> NoiseSpec:
    """Noise with the given total intensity gamma spread over equal channels."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if channels < 1:
        raise ValueError("channels must be >= 1")
    return make_noise([math.sqrt(gamma / channels)] * channels, m)


def diffusion_apply(noise: NoiseSpec, model: Model, s: State,
                    w: WienerIncrement) -> np.ndarray:
    """State increment produced by one Wiener increment."""
    if w.dW.shape != noise.b.shape:
        raise ValueError("increment has wrong number of channels")
    coeff = float(np.dot(noise.b, w.dW))
    amp = h_norm(model, s) ** noise.m
    return (coeff * amp) * s.values


def hs_norm_sq(noise: NoiseSpec, model: Model, s: State) -> float:
    """Squared Hilbert-Schmidt norm of the noise map at s: gamma * h_norm^{2m+2}."""
    return noise.gamma * h_norm(model, s) ** (2.0 * noise.m + 2.0)


def adjoint_action_norm_sq(noise: NoiseSpec, model: Model, s: State) -> float:
    """Squared norm of the adjoint applied to s itself: gamma * h_norm^{2m+4}."""
    return noise.gamma * h_norm(model, s) ** (2.0 * noise.m + 4.0)
