"""Verification of the structural inequalities behind the experiments.

Three inequalities are checked against a profile/noise pair, all phrased
in terms of the state norm s = h_norm(u):

* growth balance: (g(s^2) + gamma s^{2m+2}) (1 + s^2)
      <= C (1 + s^2)^2 + eta gamma s^{2m+4} for some eta in (1, 2),
  the inequality that rules out norm explosion;
* extinction balance: (g(s^2) + gamma s^{2m+2}) s^2 <= alpha gamma s^{2m+4}
  with alpha in (1, 2), the strict form that drives finite-time death;
* generalized coercivity: 2 <A(u), u>_H + delta v_norm(u)^alpha
      <= g_coeff (h_norm(u)^2)^g_exponent + additive_const,
  which is estimated by sampling random fields when g_coeff is not known
  in closed form.

For the power-law g of this family all verdicts of the first two reduce,
after substituting x = s^2, to the sign of the leading coefficient of a
signomial; the numeric probe grid confirms the verdict and supplies
witnesses and margins. Exponents are combined by exact float equality, so
matched-exponent cancellations are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import (Model, CoercivityProfile, _drift_values, _h_norm_values,
                     _second_diff, _v_norm_values)
from .noise import NoiseSpec

DEFAULT_NORM_GRID = np.logspace(-3.0, 6.0, 64)

_ABSORBABLE_MAX_EXPONENT = 2.0  # x^2 is dominated by C (1+x)^2


@dataclass
class ConditionReport:
    """Outcome of one inequality check.

    margin is the minimum of RHS - LHS over the probe set; a failing
    report always carries a witness probe (appended to the probe set when
    the failure lies beyond the initial grid).
    """

    condition_id: str
    holds: bool
    witness: Optional[dict]
    margin: float
    probe_count: int
    estimates: Optional[dict] = None


@dataclass(frozen=True)
class RegimeClass:
    verdict: str  # "regularized" or "inconclusive"


class UnstableEstimate(RuntimeError):
    """Doubling the sample count moved the coercivity estimate too much."""

    def __init__(self, first: float, second: float):
        super().__init__(
            f"coercivity constant estimate unstable: {first!r} with the base "
            f"sample count vs {second!r} after doubling")
        self.first = first
        self.second = second


def _validated_grid(norm_grid) -> np.ndarray:
    s = np.asarray(DEFAULT_NORM_GRID if norm_grid is None else norm_grid,
                   dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("norm grid must be a nonempty vector")
    if not (np.all(np.isfinite(s)) and np.all(s >= 0)):
        raise ValueError("norm grid entries must be finite and nonnegative")
    return s


def _leading_sign(terms, absorb_up_to: Optional[float]) -> float:
    """Sign of the dominant combined coefficient as x -> infinity.

    terms: iterable of (exponent, coefficient). Exponents at or below
    absorb_up_to are ignored (they can be paid for by a free additive
    constant); pass None to keep every term. Returns +1.0 when everything
    relevant cancels exactly.
    """
    combined: dict = {}
    for e, c in terms:
        combined[e] = combined.get(e, 0.0) + c
    for e in sorted(combined, reverse=True):
        if absorb_up_to is not None and e <= absorb_up_to:
            continue
        if combined[e] != 0.0:
            return math.copysign(1.0, combined[e])
    return 1.0


def _scan_for_witness(eval_sides, s_start: float, factor: float,
                      limit: int = 200):
    """Walk s geometrically until RHS - LHS turns negative; None if never."""
    s = s_start
    for _ in range(limit):
        s = s * factor
        if s == 0.0 or not math.isfinite(s):
            return None
        lhs, rhs = eval_sides(s)
        if not (math.isfinite(lhs) and math.isfinite(rhs)):
            return None
        if rhs - lhs < 0:
            return s, lhs, rhs
    return None


def check_growth_balance(profile: CoercivityProfile, noise: NoiseSpec,
                         eta: float, norm_grid=None) -> ConditionReport:
    """Check the norm-explosion-preventing balance for a given eta in (1, 2).

    When the profile's additive constant is unset the check answers the
    existential question "does some finite C make the inequality hold for
    all s"; the constant actually used on the probe grid is reported (it
    is the smallest such C on the grid, inflated by a relative 1e-9 so the
    reported margin is not polluted by cancellation noise).
    """
    if not (1.0 < eta < 2.0):
        raise ValueError("eta must lie in the open interval (1, 2)")
    if profile.g_coeff is None:
        raise ValueError("profile g_coeff unknown; estimate it with "
                         "check_generalized_coercivity first")
    c0 = profile.g_coeff
    q = profile.g_exponent
    m, gamma = noise.m, noise.gamma
    s = _validated_grid(norm_grid)
    x = s * s

    def lhs_of(xv):
        return (c0 * xv**q + gamma * xv**(m + 1.0)) * (1.0 + xv)

    noise_rhs = eta * gamma * x**(m + 2.0)
    lhs = lhs_of(x)
    absorb = profile.additive_const is None
    if absorb:
        deficiency = (lhs - noise_rhs) / (1.0 + x)**2
        c_eff = max(0.0, float(deficiency.max())) * (1.0 + 1e-9)
    else:
        c_eff = profile.additive_const
    rhs = c_eff * (1.0 + x)**2 + noise_rhs
    margins = rhs - lhs

    terms = [(m + 2.0, (eta - 1.0) * gamma), (q + 1.0, -c0), (q, -c0),
             (m + 1.0, -gamma)]
    if absorb:
        tail_ok = _leading_sign(terms, _ABSORBABLE_MAX_EXPONENT) > 0
    else:
        terms += [(2.0, c_eff), (1.0, 2.0 * c_eff), (0.0, c_eff)]
        tail_ok = _leading_sign(terms, None) > 0

    margin = float(margins.min())
    probes = s.size
    holds = tail_ok and margin >= 0.0
    witness = None
    if not holds:
        if margin < 0.0:
            i = int(np.argmin(margins))
            witness = {"s": float(s[i]), "lhs": float(lhs[i]),
                       "rhs": float(rhs[i])}
        else:
            def sides(sv):
                xv = sv * sv
                return (float(lhs_of(xv)),
                        float(c_eff * (1.0 + xv)**2
                              + eta * gamma * xv**(m + 2.0)))

            found = _scan_for_witness(sides, float(s.max()) or 1.0, 2.0)
            if found is not None:
                sw, lw, rw = found
                witness = {"s": sw, "lhs": lw, "rhs": rw}
                margin = min(margin, rw - lw)
                probes += 1
            else:
                witness = {"s": math.inf,
                           "note": "dominant tail coefficient is negative"}
                margin = -math.inf
    return ConditionReport(condition_id="growth_balance", holds=holds,
                           witness=witness, margin=margin, probe_count=probes,
                           estimates={"eta": eta, "C_used": c_eff})


def check_extinction_balance(profile: CoercivityProfile, noise: NoiseSpec,
                             alpha: float, norm_grid=None) -> ConditionReport:
    """Check the strict noise-vs-growth balance that forces extinction."""
    if not (1.0 < alpha < 2.0):
        raise ValueError("alpha must lie in the open interval (1, 2)")
    if profile.g_coeff is None:
        raise ValueError("profile g_coeff unknown; estimate it with "
                         "check_generalized_coercivity first")
    c0 = profile.g_coeff
    q = profile.g_exponent
    m, gamma = noise.m, noise.gamma
    s = _validated_grid(norm_grid)
    x = s * s

    # both sides expanded over shared power arrays, so the matched-exponent
    # case q + 1 == m + 2 cancels exactly instead of to rounding noise
    def sides(sv):
        xv = sv * sv
        xq1 = xv**(q + 1.0)
        xm2 = xv**(m + 2.0)
        return (float(c0 * xq1 + gamma * xm2),
                float(alpha * gamma * xm2))

    xq1 = x**(q + 1.0)
    xm2 = x**(m + 2.0)
    lhs = c0 * xq1 + gamma * xm2
    rhs = alpha * gamma * xm2
    margins = rhs - lhs

    if c0 == 0.0:
        # gamma cancels: the comparison is 1 <= alpha pointwise
        shape_ok = True
        fails_at = None
    elif q + 1.0 == m + 2.0:
        shape_ok = (alpha - 1.0) * gamma - c0 >= 0.0
        fails_at = "tail"
    elif q + 1.0 > m + 2.0:
        shape_ok = False
        fails_at = "tail"
    else:
        shape_ok = False
        fails_at = "origin"

    margin = float(margins.min())
    probes = s.size
    holds = shape_ok and margin >= 0.0
    witness = None
    if not holds:
        if margin < 0.0:
            i = int(np.argmin(margins))
            witness = {"s": float(s[i]), "lhs": float(lhs[i]),
                       "rhs": float(rhs[i])}
        else:
            factor = 0.5 if fails_at == "origin" else 2.0
            start = float(s[s > 0].min()) if fails_at == "origin" else float(s.max())
            found = _scan_for_witness(sides, start or 1.0, factor)
            if found is not None:
                sw, lw, rw = found
                witness = {"s": sw, "lhs": lw, "rhs": rw}
                margin = min(margin, rw - lw)
                probes += 1
            else:
                witness = {"s": 0.0 if fails_at == "origin" else math.inf,
                           "note": "inequality fails in the unprobed limit"}
                margin = -math.inf
    return ConditionReport(condition_id="extinction_balance", holds=holds,
                           witness=witness, margin=margin, probe_count=probes,
                           estimates={"alpha": alpha})


def _pairing(model: Model, f: np.ndarray, u: np.ndarray) -> float:
    """Inner product <f, u> in the model's state space."""
    h = model.grid.h
    if model.kind == "fast_diffusion":
        return h * float(f @ model.h_metric @ u)
    if model.kind == "surface_growth":
        return h * float(np.dot(_second_diff(f, h), _second_diff(u, h)))
    return h * float(np.dot(f, u))


def check_generalized_coercivity(model: Model, sample_count: int,
                                 rng_seed: int = 0) -> ConditionReport:
    """Estimate the smallest g_coeff certifying the drift's energy bound.

    Random fields (Gaussian combinations of the first eight sine modes at
    amplitudes 0.1, 1, and 10) probe the inequality; the estimate is the
    largest observed ratio, inflated by a relative 1e-12 so the reported
    margin is clean of cancellation noise. The estimate must be stable:
    doubling the sample count may move it by less than 10 percent, else
    UnstableEstimate is raised with both values.
    """
    if model.is_scalar:
        raise ValueError("coercivity sampling needs a field model")
    if sample_count < 100:
        raise ValueError("sample_count must be at least 100")
    grid = model.grid
    n, h = grid.n_interior, grid.h
    delta = model.profile.delta
    alpha = model.profile.alpha
    q = model.profile.g_exponent

    rng = np.random.default_rng(rng_seed)
    modes = min(8, n)
    nodes = grid.nodes()
    basis = np.stack([np.sin(k * math.pi * nodes / grid.L)
                      for k in range(1, modes + 1)])
    amps = (0.1, 1.0, 10.0)

    ratios = []
    lhss = []
    denoms = []
    total = 2 * sample_count
    for i in range(total):
        coeffs = rng.standard_normal(modes)
        u = amps[i % 3] * (coeffs @ basis)
        xsq = _h_norm_values(model, u)**2
        if xsq == 0.0:
            continue
        f = _drift_values(model, u)
        lhs = 2.0 * _pairing(model, f, u) + delta * _v_norm_values(model, u)**alpha
        denom = xsq**q
        ratios.append(lhs / denom)
        lhss.append(lhs)
        denoms.append(denom)

    ratios = np.asarray(ratios)
    first = ratios[:sample_count]
    c0_first = max(0.0, float(first.max()))
    c0_both = max(0.0, float(ratios.max()))
    scale = max(1.0, float(np.max(np.abs(lhss))))
    if (c0_both - c0_first) > 0.1 * c0_first + 1e-10 * scale:
        raise UnstableEstimate(c0_first, c0_both)

    c0_rep = c0_both * (1.0 + 1e-12)
    margins = c0_rep * np.asarray(denoms) - np.asarray(lhss)
    return ConditionReport(
        condition_id="coercivity", holds=True, witness=None,
        margin=float(margins.min()), probe_count=len(ratios),
        estimates={"delta": delta, "C0": c0_rep,
                   "stability_gap": c0_both - c0_first})


def extinction_profile_report(profile: CoercivityProfile) -> ConditionReport:
    """Structural gate for the extinction regime.

    The dissipation exponent must sit strictly inside (1, 2), the additive
    constant must vanish identically, and the growth function must vanish
    at zero.
    """
    failing = None
    if not (1.0 < profile.alpha < 2.0):
        failing = {"field": "alpha", "value": profile.alpha}
    elif not (profile.delta > 0):
        failing = {"field": "delta", "value": profile.delta}
    elif profile.additive_const != 0.0:
        failing = {"field": "additive_const", "value": profile.additive_const}
    elif profile.g_exponent == 0.0 and profile.g_coeff != 0.0:
        failing = {"field": "g_coeff", "value": profile.g_coeff}
    holds = failing is None
    margin = min(2.0 - profile.alpha, profile.alpha - 1.0) if holds else -1.0
    return ConditionReport(condition_id="extinction_coercivity", holds=holds,
                           witness=failing, margin=margin, probe_count=1)


def classify_regime(c0: float, m: float) -> RegimeClass:
    """Classify scalar noise parameters (scalar convention exponent m).

    The known sufficient condition for a global solution is m > 3/2, or
    m = 3/2 together with c0 > sqrt(2); anything else is inconclusive
    rather than a blow-up claim.
    """
    if not (c0 > 0):
        raise ValueError("c0 must be positive")
    if m > 1.5 or (m == 1.5 and c0 > math.sqrt(2.0)):
        return RegimeClass(verdict="regularized")
    return RegimeClass(verdict="inconclusive")
