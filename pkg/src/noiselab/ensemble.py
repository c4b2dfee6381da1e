"""Monte Carlo ensembles and the statistics built on top of them.

Paths are aggregated on the shared recording grid (the stride times plus
the horizon). A blown-up path is censored from its blow-up time onward,
an extinct path contributes exact zeros, so per-time sample sizes vary
and are reported alongside every curve.

The tail-bound check is deliberately gated: it refuses to emit a bound
unless the profile passes the structural extinction gate, the strict
extinction balance, and the growth balance at eta equal to the
dissipation exponent. A refusal carries the failing report; the bound is
never computed from data alone. The growth balance is checked in its
existential form (the additive constant is the inequality's own to
choose), which is independent of the zero additive constant the
extinction gate demands of the coercivity profile.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm as _norm_dist

from .conditions import (ConditionReport, check_extinction_balance,
                         check_generalized_coercivity, check_growth_balance,
                         extinction_profile_report)
from .integrate import RngStream, SimConfig, TrajectoryRecord, run_path
from .models import Model, embedding_constant, initial_values, _h_norm_values, make_model
from .noise import NoiseSpec

Z95 = _norm_dist.ppf(0.975)

_SUP_QUANTILES = (0.5, 0.9, 0.99)


@dataclass
class EnsembleStats:
    """Aggregated view of one ensemble.

    norm_moment_curves maps a moment exponent to (mean, stderr) arrays on
    time_grid; survivor_counts is the per-time number of paths not yet
    censored by blow-up. extinction_times holds only the paths that died,
    in path order.
    """

    n_paths: int
    blowup_count: int
    extinction_times: np.ndarray
    time_grid: np.ndarray
    norm_moment_curves: Dict[float, Tuple[np.ndarray, np.ndarray]]
    sup_norm_quantiles: Dict[float, float]
    survivor_counts: np.ndarray
    master_seed: int
    horizon: float

    @property
    def extinction_count(self) -> int:
        return int(self.extinction_times.size)


def stride_time_grid(cfg: SimConfig) -> np.ndarray:
    """The exact times every completed path records, horizon included."""
    n_steps = int(round(cfg.T / cfg.dt))
    idx = np.arange(0, n_steps // cfg.record_stride + 1,
                    dtype=np.int64) * cfg.record_stride
    times = idx.astype(float) * cfg.dt
    if n_steps % cfg.record_stride != 0:
        times = np.append(times, n_steps * cfg.dt)
    return times


def _grid_norms(rec: TrajectoryRecord, grid: np.ndarray) -> np.ndarray:
    """h-norms of one record at the grid times, NaN where censored."""
    pos = np.searchsorted(rec.times, grid)
    pos_c = np.minimum(pos, rec.times.size - 1)
    row = np.full(grid.size, np.nan)
    hit = rec.times[pos_c] == grid
    row[hit] = rec.h_norms[pos_c[hit]]
    if rec.status == "blown_up":
        row[grid >= rec.event_time] = np.nan
    return row


def _path_job(args):
    model, noise, cfg, master_seed, index = args
    return run_path(model, noise, cfg, RngStream(master_seed, index))


def _default_exponents(model: Model) -> Tuple[float, ...]:
    exps = {1.0, 2.0}
    alpha = model.profile.alpha
    if 1.0 < alpha < 2.0:
        exps.add(2.0 - alpha)
    return tuple(sorted(exps))


def run_ensemble(model: Model, noise: NoiseSpec, cfg: SimConfig,
                 n_paths: int, master_seed: int, n_jobs: int = 1,
                 moment_exponents: Optional[Sequence[float]] = None
                 ) -> EnsembleStats:
    """Run n_paths independent paths and aggregate them.

    Path i draws from the stream keyed by (master_seed, i), so the result
    is identical for any n_jobs; workers only change wall time.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if moment_exponents is None:
        exps = _default_exponents(model)
    else:
        exps = tuple(sorted({float(e) for e in moment_exponents}))
        if any(e <= 0 for e in exps):
            raise ValueError("moment exponents must be positive")

    jobs = [(model, noise, cfg, master_seed, i) for i in range(n_paths)]
    if n_jobs == 1:
        records = [_path_job(j) for j in jobs]
    else:
        chunk = max(1, n_paths // (8 * n_jobs))
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            records = list(pool.map(_path_job, jobs, chunksize=chunk))

    grid = stride_time_grid(cfg)
    height = np.empty((n_paths, grid.size))
    sups = np.empty(n_paths)
    ext_times: List[float] = []
    blowups = 0
    for i, rec in enumerate(records):
        height[i] = _grid_norms(rec, grid)
        finite = rec.h_norms[np.isfinite(rec.h_norms)]
        sups[i] = finite.max() if finite.size else math.inf
        if rec.status == "blown_up":
            blowups += 1
        elif rec.status == "extinct":
            ext_times.append(rec.event_time)

    alive = ~np.isnan(height)
    counts = alive.sum(axis=0)
    curves: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}
    with np.errstate(invalid="ignore", divide="ignore"):
        for e in exps:
            powd = height**e
            total = np.nansum(powd, axis=0)
            mean = np.where(counts > 0, total / np.maximum(counts, 1), np.nan)
            dev = powd - mean
            var = np.nansum(dev * dev, axis=0) / np.maximum(counts - 1, 1)
            se = np.sqrt(var / np.maximum(counts, 1))
            se = np.where(counts > 1, se, np.nan)
            curves[e] = (mean, se)

    quants = {q: float(v) for q, v in
              zip(_SUP_QUANTILES, np.quantile(sups, _SUP_QUANTILES))}
    return EnsembleStats(
        n_paths=n_paths, blowup_count=blowups,
        extinction_times=np.asarray(ext_times, dtype=float),
        time_grid=grid, norm_moment_curves=curves,
        sup_norm_quantiles=quants, survivor_counts=counts,
        master_seed=master_seed, horizon=float(grid[-1]))


def wilson_interval(successes: int, trials: int,
                    z: float = Z95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    n = float(trials)
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    # at the boundaries the exact endpoint is 0 or 1; spare it the
    # cancellation residue of center - half
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


def blowup_probability(stats: EnsembleStats
                       ) -> Tuple[float, Tuple[float, float]]:
    """Point estimate and 95 percent Wilson interval for blow-up."""
    return (stats.blowup_count / stats.n_paths,
            wilson_interval(stats.blowup_count, stats.n_paths))


@dataclass(frozen=True, eq=False)
class EcdfCurve:
    """Right-continuous step function t -> fraction of paths dead by t."""

    times: np.ndarray
    n_paths: int

    def __call__(self, t):
        frac = np.searchsorted(self.times, t, side="right") / self.n_paths
        return float(frac) if np.isscalar(t) else frac

    @property
    def fractions(self) -> np.ndarray:
        return np.arange(1, self.times.size + 1) / self.n_paths


def extinction_ecdf(stats: EnsembleStats) -> EcdfCurve:
    return EcdfCurve(times=np.sort(stats.extinction_times),
                     n_paths=stats.n_paths)


@dataclass
class MonotonicityReport:
    """Pairwise nonincrease check of one moment curve.

    A pair (t_i, t_j), i < j, counts as a violation when the later mean
    exceeds the earlier one by more than twice the summed standard errors.
    """

    exponent: float
    holds: bool
    violating_pairs: List[dict]
    violation_count: int
    worst_excess: Optional[float]
    pair_count: int


def supermartingale_diagnostic(stats: EnsembleStats,
                               exponent: float) -> MonotonicityReport:
    if exponent not in stats.norm_moment_curves:
        have = sorted(stats.norm_moment_curves)
        raise ValueError(f"no moment curve for exponent {exponent!r}; "
                         f"available: {have}")
    mean, se = stats.norm_moment_curves[exponent]
    ok = np.isfinite(mean) & np.isfinite(se)
    t = stats.time_grid[ok]
    m = mean[ok]
    s = se[ok]
    pairs = 0
    worst: Optional[float] = None
    bad: List[dict] = []
    count = 0
    for i in range(t.size):
        allow = m[i] + 2.0 * (s[i] + s[i + 1:])
        excess = m[i + 1:] - allow
        pairs += excess.size
        if excess.size:
            top = float(excess.max())
            worst = top if worst is None else max(worst, top)
        idx = np.nonzero(excess > 0.0)[0]
        count += idx.size
        for j in idx[:max(0, 32 - len(bad))]:
            jj = i + 1 + int(j)
            bad.append({"t_earlier": float(t[i]), "t_later": float(t[jj]),
                        "mean_earlier": float(m[i]),
                        "mean_later": float(m[jj]),
                        "allowance": float(2.0 * (s[i] + s[jj]))})
    return MonotonicityReport(exponent=exponent, holds=count == 0,
                              violating_pairs=bad, violation_count=count,
                              worst_excess=worst, pair_count=pairs)


class PreconditionFailed(RuntimeError):
    """A gated analysis refused to run; the failing report is attached."""

    def __init__(self, report: ConditionReport, detail: str = ""):
        msg = f"precondition {report.condition_id!r} does not hold"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.report = report


@dataclass
class TailBoundReport:
    """Comparison of empirical survival against the proven tail decay.

    The bound coefficient / t is reported only where it says something
    (bound below one); violations lists the times where the empirical
    survival minus twice its Monte Carlo error still exceeds the bound.
    """

    times: np.ndarray
    empirical_survival: np.ndarray
    mc_stderr: np.ndarray
    theoretical_bound: np.ndarray
    violations: np.ndarray
    coefficient: float
    alpha: float
    preconditions: List[ConditionReport]


def tail_bound_check(stats: EnsembleStats, model: Model, noise: NoiseSpec,
                     x0: float) -> TailBoundReport:
    """Check P(extinction time > t) <= coef / t against the ensemble.

    coef = x0^(2 - alpha) / (delta c*^alpha (1 - alpha/2)) with c* the
    discrete embedding constant. Refuses (PreconditionFailed) when the
    profile fails any of the three gates or when the ensemble contains
    blow-ups, which contradict the extinction regime outright.
    """
    profile = model.profile
    gate = extinction_profile_report(profile)
    checks = [gate]
    if not gate.holds:
        raise PreconditionFailed(gate, f"witness {gate.witness}")
    if stats.blowup_count:
        raise PreconditionFailed(
            replace(gate, holds=False,
                    witness={"blowup_count": stats.blowup_count}),
            "ensemble contains blown-up paths")

    eff = profile
    if eff.g_coeff is None:
        est = check_generalized_coercivity(model, sample_count=200)
        checks.append(est)
        eff = replace(eff, g_coeff=est.estimates["C0"])
    balance = check_extinction_balance(eff, noise, alpha=profile.alpha)
    checks.append(balance)
    if not balance.holds:
        raise PreconditionFailed(balance, f"witness {balance.witness}")
    growth = check_growth_balance(replace(eff, additive_const=None), noise,
                                  eta=profile.alpha)
    checks.append(growth)
    if not growth.holds:
        raise PreconditionFailed(growth, f"witness {growth.witness}")

    alpha = profile.alpha
    cstar = embedding_constant(model)
    coef = x0**(2.0 - alpha) / (profile.delta * cstar**alpha
                                * (1.0 - alpha / 2.0))
    t = stats.time_grid[stats.time_grid > 0.0]
    bound = coef / t
    informative = bound < 1.0
    t = t[informative]
    bound = bound[informative]
    ecdf = extinction_ecdf(stats)
    survival = 1.0 - ecdf(t)
    se = np.sqrt(survival * (1.0 - survival) / stats.n_paths)
    bad = t[(survival - 2.0 * se) > bound]
    return TailBoundReport(times=t, empirical_survival=survival,
                           mc_stderr=se, theoretical_bound=bound,
                           violations=bad, coefficient=float(coef),
                           alpha=alpha, preconditions=checks)


@dataclass
class ContinuityReport:
    """Exceedance of a sup-norm gap under shrinking initial perturbations."""

    deltas: np.ndarray
    exceedance: np.ndarray
    n_pairs: int
    eps_tol: float


def _with_x0(model: Model, x0) -> Model:
    params = dict(model.params)
    params["x0"] = x0
    return make_model(model.kind, params,
                      None if model.is_scalar else model.grid)


def continuity_probe(model: Model, noise: NoiseSpec, x0, deltas,
                     cfg: SimConfig, n_pairs: int, eps_tol: float = 0.1,
                     master_seed: int = 0) -> ContinuityReport:
    """Couple paths started at x0 and at x0 + delta on the same noise.

    For each delta the reported number is the fraction of coupled pairs
    whose h-norm gap ever exceeds eps_tol on the recording grid (a pair
    with a blown-up member counts as exceeding). Field models are
    perturbed along the first sine mode scaled to unit h-norm.
    """
    deltas = np.asarray(list(deltas), dtype=float)
    if deltas.size == 0 or np.any(deltas < 0):
        raise ValueError("deltas must be nonnegative")
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")

    base = _with_x0(model, x0)
    if model.is_scalar:
        perturbed = [_with_x0(model, float(x0) + d) for d in deltas]
    else:
        base_values = initial_values(base)
        unit = initial_values(_with_x0(model, {"mode": 1, "h_norm": 1.0}))
        perturbed = [_with_x0(model, base_values + d * unit) for d in deltas]

    grid = stride_time_grid(cfg)
    exceed = np.zeros(deltas.size)
    for i in range(n_pairs):
        rec_a = run_path(base, noise, cfg, RngStream(master_seed, i))
        row_a = _grid_norms(rec_a, grid)
        for k, pert in enumerate(perturbed):
            rec_b = run_path(pert, noise, cfg, RngStream(master_seed, i))
            row_b = _grid_norms(rec_b, grid)
            gap = np.abs(row_a - row_b)
            blown = np.isnan(row_a) | np.isnan(row_b)
            if np.any(blown) or float(np.nanmax(gap)) > eps_tol:
                exceed[k] += 1.0
    exceed /= n_pairs
    return ContinuityReport(deltas=deltas, exceedance=exceed,
                            n_pairs=n_pairs, eps_tol=eps_tol)
