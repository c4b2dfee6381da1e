"""Experiment driver and command line entry point.

An experiment is described by one JSON file:

    {
      "name": "extinction_demo",
      "model": {"kind": "superlinear_sde", "quad_coeff": 1.0,
                "sink_coeff": 1.0, "c0": 1.0, "m": 2.0, "x0": 2.0},
      "sim": {"dt": 5e-5, "T": 20.0, "scheme": "tamed"},
      "ensemble": {"n_paths": 500, "master_seed": 0},
      "analyses": ["conditions", "extinction", "tail_bound"],
      "output_dir": "out/extinction_demo"
    }

Field models replace the scalar noise parameters with explicit "noise"
({"gamma", "m", "channels"}) and "grid" ({"L", "n_interior"}) blocks.
Unknown keys anywhere are rejected with their dotted path. Every analysis
writes its numbers under output_dir and contributes one PASS/FAIL line to
report.txt; report.json carries the same verdicts machine-readably. The
exit code is 0 only if every requested analysis passes.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields, is_dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .conditions import (UnstableEstimate, check_extinction_balance,
                         check_generalized_coercivity, check_growth_balance,
                         extinction_profile_report)
from .ensemble import (PreconditionFailed, blowup_probability,
                       continuity_probe, extinction_ecdf, run_ensemble,
                       supermartingale_diagnostic, tail_bound_check)
from .integrate import RngStream, SimConfig, record_to_csv_rows, run_path
from .models import (GridSpec, MODEL_KINDS, SCALAR_KINDS,
                     _h_norm_values, initial_values, make_model)
from .noise import scalar_noise, split_channels

ANALYSES = ("conditions", "blowup", "extinction", "supermartingale",
            "tail_bound", "continuity")

_MODEL_KEYS = {
    "superlinear_sde": {"c0", "m", "quad_coeff", "sink_coeff", "x0"},
    "p_laplace_hot": {"p", "eps_reg", "x0"},
    "fast_diffusion": {"r", "x0"},
    "surface_growth": {"x0"},
    "heat_validation": {"x0"},
}

_OPTION_KEYS = {
    "conditions": {"eta"},
    "blowup": {"max_upper"},
    "extinction": {"min_fraction"},
    "supermartingale": {"exponent"},
    "tail_bound": set(),
    "continuity": {"deltas", "n_pairs", "eps_tol"},
}

_OPTION_DEFAULTS = {
    "conditions": {"eta": None},
    "blowup": {"max_upper": 0.02},
    "extinction": {"min_fraction": 0.95},
    "supermartingale": {"exponent": None},
    "tail_bound": {},
    "continuity": {"deltas": [0.1, 0.01, 0.001], "n_pairs": 50,
                   "eps_tol": 0.1},
}


class ConfigError(ValueError):
    """A config file is malformed; the message carries the dotted path."""


@dataclass(frozen=True)
class ExperimentPlan:
    """A fully resolved experiment description (all defaults applied)."""

    name: str
    model: dict
    noise: Optional[dict]
    grid: Optional[dict]
    sim: dict
    ensemble: dict
    analyses: tuple
    options: dict
    output_dir: str


def _reject_unknown(block: dict, allowed, where: str) -> None:
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key '{where}.{unknown[0]}' (allowed: "
            f"{sorted(allowed)})")


def _need(block: dict, key: str, where: str):
    if key not in block:
        raise ConfigError(f"missing required key '{where}.{key}'")
    return block[key]


def parse_config(text: str) -> ExperimentPlan:
    """Parse and validate an experiment JSON, applying all defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    top_allowed = {"name", "model", "noise", "grid", "sim", "ensemble",
                   "analyses", "output_dir"} | set(ANALYSES)
    _reject_unknown(raw, top_allowed, "")

    model = _need(raw, "model", "")
    if not isinstance(model, dict):
        raise ConfigError("'model' must be an object")
    kind = _need(model, "kind", "model")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"'model.kind' must be one of {list(MODEL_KINDS)}")
    _reject_unknown(model, {"kind"} | _MODEL_KEYS[kind], "model")
    scalar = kind in SCALAR_KINDS

    noise = raw.get("noise")
    grid = raw.get("grid")
    if scalar:
        if noise is not None:
            raise ConfigError("'noise' does not apply to scalar models; "
                              "set model.c0 and model.m instead")
        if grid is not None:
            raise ConfigError("'grid' does not apply to scalar models")
    else:
        if not isinstance(noise, dict):
            raise ConfigError("field models need a 'noise' object "
                              "({gamma, m, channels})")
        _reject_unknown(noise, {"gamma", "m", "channels"}, "noise")
        noise = {"gamma": float(_need(noise, "gamma", "noise")),
                 "m": float(_need(noise, "m", "noise")),
                 "channels": int(noise.get("channels", 1))}
        if noise["gamma"] < 0:
            raise ConfigError("'noise.gamma' must be nonnegative")
        if noise["m"] < 0:
            raise ConfigError("'noise.m' must be nonnegative")
        if noise["channels"] < 1:
            raise ConfigError("'noise.channels' must be at least 1")
        if not isinstance(grid, dict):
            raise ConfigError("field models need a 'grid' object "
                              "({L, n_interior})")
        _reject_unknown(grid, {"L", "n_interior"}, "grid")
        grid = {"L": float(grid.get("L", 1.0)),
                "n_interior": int(_need(grid, "n_interior", "grid"))}

    analyses_raw = raw.get("analyses", ["conditions"])
    if not isinstance(analyses_raw, list) or not analyses_raw:
        raise ConfigError("'analyses' must be a nonempty list")
    analyses = []
    for a in analyses_raw:
        if a not in ANALYSES:
            raise ConfigError(f"unknown analysis {a!r} (known: "
                              f"{list(ANALYSES)})")
        if a not in analyses:
            analyses.append(a)

    sim_in = _need(raw, "sim", "")
    if not isinstance(sim_in, dict):
        raise ConfigError("'sim' must be an object")
    _reject_unknown(sim_in, {"dt", "T", "scheme", "R_blow", "eps_ext",
                             "record_stride"}, "sim")
    sim = {
        "dt": float(sim_in.get("dt", 1e-4 if scalar else 1e-3)),
        "T": float(_need(sim_in, "T", "sim")),
        "scheme": sim_in.get("scheme", "tamed"),
        "R_blow": float(sim_in.get("R_blow", 1e6)),
        "eps_ext": float(sim_in.get("eps_ext", 1e-6)),
        "record_stride": int(sim_in.get("record_stride", 100)),
    }

    ens_in = raw.get("ensemble", {})
    if not isinstance(ens_in, dict):
        raise ConfigError("'ensemble' must be an object")
    _reject_unknown(ens_in, {"n_paths", "master_seed"}, "ensemble")
    default_paths = 1000 if "blowup" in analyses else 500
    ensemble = {"n_paths": int(ens_in.get("n_paths", default_paths)),
                "master_seed": int(ens_in.get("master_seed", 0))}
    if ensemble["n_paths"] < 1:
        raise ConfigError("'ensemble.n_paths' must be at least 1")
    if ensemble["master_seed"] < 0:
        raise ConfigError("'ensemble.master_seed' must be nonnegative")

    options = {}
    for a in ANALYSES:
        block = raw.get(a, {})
        if not isinstance(block, dict):
            raise ConfigError(f"'{a}' options must be an object")
        _reject_unknown(block, _OPTION_KEYS[a], a)
        merged = dict(_OPTION_DEFAULTS[a])
        merged.update(block)
        options[a] = merged
    deltas = options["continuity"]["deltas"]
    if (not isinstance(deltas, list) or not deltas
            or any(not isinstance(d, (int, float)) or d < 0 for d in deltas)):
        raise ConfigError("'continuity.deltas' must be a list of "
                          "nonnegative numbers")

    name = raw.get("name", "experiment")
    out_dir = raw.get("output_dir", f"out/{name}")
    return ExperimentPlan(name=name, model=dict(model), noise=noise,
                          grid=grid, sim=sim, ensemble=ensemble,
                          analyses=tuple(analyses), options=options,
                          output_dir=str(out_dir))


def build_objects(plan: ExperimentPlan):
    """Materialize (model, noise, sim config) from a resolved plan."""
    params = {k: v for k, v in plan.model.items() if k != "kind"}
    kind = plan.model["kind"]
    if kind in SCALAR_KINDS:
        model = make_model(kind, params)
        noise = scalar_noise(model.params["c0"], model.params["m"])
    else:
        gspec = GridSpec(L=plan.grid["L"], n_interior=plan.grid["n_interior"])
        model = make_model(kind, params, gspec)
        noise = split_channels(plan.noise["gamma"], plan.noise["m"],
                               plan.noise["channels"])
    try:
        cfg = SimConfig(**plan.sim)
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from exc
    return model, noise, cfg


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name))
                for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def default_growth_eta(profile, noise) -> float:
    """Midpoint of the feasible eta window, 1.5 when the window is empty.

    Feasibility is monotone in eta (a larger eta only strengthens the
    noise side), so the window's lower edge is found by bisection.
    """
    def holds(eta: float) -> bool:
        return check_growth_balance(profile, noise, eta).holds

    hi = 2.0 - 1e-9
    if not holds(hi):
        return 1.5
    lo = 1.0 + 1e-9
    if holds(lo):
        edge = lo
    else:
        bad, good = lo, hi
        for _ in range(60):
            mid = 0.5 * (bad + good)
            if holds(mid):
                good = mid
            else:
                bad = mid
        edge = good
    return min(0.5 * (edge + 2.0), hi)


def conditions_suite(model, noise, eta: Optional[float] = None):
    """Run every structural check that applies to this model/noise pair.

    Returns (reports, eta_used). The growth balance is checked in its
    existential-constant form; when the profile has no closed-form growth
    coefficient it is estimated first and the estimate report included.
    """
    reports = []
    eff = model.profile
    if eff.g_coeff is None:
        est = check_generalized_coercivity(model, sample_count=200)
        reports.append(est)
        eff = replace(eff, g_coeff=est.estimates["C0"])
    growth_profile = replace(eff, additive_const=None)
    if eta is None:
        eta = default_growth_eta(growth_profile, noise)
    reports.append(check_growth_balance(growth_profile, noise, eta))
    alpha = model.profile.alpha
    if 1.0 < alpha < 2.0:
        reports.append(extinction_profile_report(model.profile))
        reports.append(check_extinction_balance(eff, noise, alpha))
    return reports, eta


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _fmt(x: float) -> str:
    return repr(float(x))


def run_experiment(plan: ExperimentPlan, n_jobs: int = 1,
                   dump_paths: bool = False) -> int:
    """Execute a plan, write its outputs, and return the exit code."""
    model, noise, cfg = build_objects(plan)
    out = Path(plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(
        json.dumps(_jsonable(plan), indent=2) + "\n")

    verdicts = {}
    summaries = {}
    details = {}

    def record(name: str, passed: bool, summary: str, payload=None) -> None:
        verdicts[name] = "PASS" if passed else "FAIL"
        summaries[name] = summary
        details[name] = payload if payload is not None else {}

    if "conditions" in plan.analyses:
        try:
            reports, eta = conditions_suite(
                model, noise, plan.options["conditions"]["eta"])
            passed = all(r.holds for r in reports)
            pieces = ", ".join(
                f"{r.condition_id}={'ok' if r.holds else 'violated'}"
                for r in reports)
            record("conditions", passed, f"{pieces} (eta={eta:.6g})",
                   {"eta": eta, "reports": [_jsonable(r) for r in reports]})
        except UnstableEstimate as exc:
            record("conditions", False,
                   f"coercivity estimate unstable: {exc.first:.6g} then "
                   f"{exc.second:.6g} after doubling",
                   {"error": str(exc)})
        (out / "conditions.json").write_text(
            json.dumps(details["conditions"], indent=2) + "\n")

    ensemble_analyses = [a for a in ("blowup", "extinction",
                                     "supermartingale", "tail_bound")
                         if a in plan.analyses]
    stats = None
    if ensemble_analyses:
        exponents = {1.0, 2.0}
        alpha = model.profile.alpha
        if 1.0 < alpha < 2.0:
            exponents.add(2.0 - alpha)
        sm_exp = plan.options["supermartingale"]["exponent"]
        if sm_exp is not None:
            exponents.add(float(sm_exp))
        stats = run_ensemble(model, noise, cfg, plan.ensemble["n_paths"],
                             plan.ensemble["master_seed"], n_jobs=n_jobs,
                             moment_exponents=sorted(exponents))
        est, (lo, hi) = blowup_probability(stats)
        (out / "ensemble_summary.json").write_text(json.dumps(_jsonable({
            "n_paths": stats.n_paths,
            "blowup_count": stats.blowup_count,
            "extinction_count": stats.extinction_count,
            "blowup_probability": est,
            "blowup_wilson_95": [lo, hi],
            "sup_norm_quantiles": stats.sup_norm_quantiles,
            "horizon": stats.horizon,
            "master_seed": stats.master_seed,
        }), indent=2) + "\n")

        moment_header = ["t", "survivors"]
        columns = [stats.time_grid, stats.survivor_counts]
        for e in sorted(stats.norm_moment_curves):
            mean, se = stats.norm_moment_curves[e]
            moment_header += [f"mean_p{e:g}", f"stderr_p{e:g}"]
            columns += [mean, se]
        _write_csv(out / "moments.csv", moment_header,
                   ([_fmt(c[i]) if np.issubdtype(np.asarray(c).dtype,
                                                 np.floating)
                     else int(c[i]) for c in columns]
                    for i in range(stats.time_grid.size)))

        curve = extinction_ecdf(stats)
        _write_csv(out / "ecdf.csv", ["t", "fraction_extinct"],
                   ((_fmt(t), _fmt(f)) for t, f in
                    zip(curve.times, curve.fractions)))

    if "blowup" in plan.analyses:
        est, (lo, hi) = blowup_probability(stats)
        limit = float(plan.options["blowup"]["max_upper"])
        record("blowup", hi <= limit,
               f"{stats.blowup_count}/{stats.n_paths} paths blew up, "
               f"Wilson 95% upper {hi:.4g} (limit {limit:g})",
               {"estimate": est, "wilson_95": [lo, hi], "limit": limit})

    if "extinction" in plan.analyses:
        frac = extinction_ecdf(stats)(stats.horizon)
        needed = float(plan.options["extinction"]["min_fraction"])
        record("extinction", frac >= needed,
               f"fraction extinct by t={stats.horizon:g} is {frac:.4f} "
               f"(needs >= {needed:g})",
               {"fraction": frac, "min_fraction": needed,
                "median_extinction_time": float(np.median(
                    stats.extinction_times))
                if stats.extinction_count else None})

    if "supermartingale" in plan.analyses:
        expo = plan.options["supermartingale"]["exponent"]
        alpha = model.profile.alpha
        if expo is None:
            if 1.0 < alpha < 2.0:
                expo = 2.0 - alpha
            else:
                record("supermartingale", False,
                       "no default moment exponent: the profile's "
                       "dissipation exponent sits outside (1, 2); set "
                       "supermartingale.exponent explicitly", {})
        if expo is not None:
            rep = supermartingale_diagnostic(stats, float(expo))
            record("supermartingale", rep.holds,
                   f"moment exponent {float(expo):g}: "
                   f"{rep.violation_count} of {rep.pair_count} time pairs "
                   "violate the nonincrease allowance",
                   _jsonable(rep))

    if "tail_bound" in plan.analyses:
        try:
            x0n = _h_norm_values(model, initial_values(model))
            tb = tail_bound_check(stats, model, noise, x0n)
            record("tail_bound", tb.violations.size == 0,
                   f"{tb.violations.size} of {tb.times.size} informative "
                   f"times violate the bound (coefficient "
                   f"{tb.coefficient:.4g})",
                   _jsonable(tb))
            _write_csv(out / "tail_bound.csv",
                       ["t", "empirical_survival", "mc_stderr", "bound"],
                       ((_fmt(t), _fmt(s), _fmt(e), _fmt(b)) for t, s, e, b
                        in zip(tb.times, tb.empirical_survival, tb.mc_stderr,
                               tb.theoretical_bound)))
        except PreconditionFailed as exc:
            record("tail_bound", False,
                   f"refused, precondition '{exc.report.condition_id}' "
                   f"fails: {exc}",
                   {"refusal": _jsonable(exc.report)})

    if "continuity" in plan.analyses:
        opts = plan.options["continuity"]
        deltas = sorted((float(d) for d in opts["deltas"]), reverse=True)
        rep = continuity_probe(model, noise, model.params["x0"], deltas,
                               cfg, int(opts["n_pairs"]),
                               float(opts["eps_tol"]),
                               master_seed=plan.ensemble["master_seed"])
        nonincreasing = bool(np.all(np.diff(rep.exceedance) <= 1e-9))
        record("continuity", nonincreasing,
               "exceedance " +
               ", ".join(f"{d:g}->{e:.3f}" for d, e in
                         zip(rep.deltas, rep.exceedance)) +
               (" is nonincreasing as the perturbation shrinks"
                if nonincreasing else
                " grows as the perturbation shrinks"),
               _jsonable(rep))
        _write_csv(out / "continuity.csv", ["delta", "exceedance"],
                   ((_fmt(d), _fmt(e)) for d, e in
                    zip(rep.deltas, rep.exceedance)))

    if dump_paths:
        pdir = out / "paths"
        pdir.mkdir(exist_ok=True)
        for i in range(plan.ensemble["n_paths"]):
            rec = run_path(model, noise, cfg,
                           RngStream(plan.ensemble["master_seed"], i))
            rows = record_to_csv_rows(rec)
            header = next(rows)
            _write_csv(pdir / f"path_{i:05d}.csv", header, rows)

    lines = [f"experiment: {plan.name}"]
    for name in plan.analyses:
        lines.append(f"{verdicts[name]} {name}: {summaries[name]}")
    all_pass = all(v == "PASS" for v in verdicts.values())
    lines.append("overall: " + ("PASS" if all_pass else "FAIL"))
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    (out / "report.json").write_text(json.dumps(_jsonable({
        "experiment": plan.name,
        "verdicts": verdicts,
        "summaries": summaries,
        "details": details,
        "overall": "PASS" if all_pass else "FAIL",
    }), indent=2) + "\n")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0 if all_pass else 1


_FIGURES = {
    "fig1": {"model": {"kind": "superlinear_sde", "quad_coeff": 1.0,
                       "sink_coeff": 0.0, "c0": 0.0, "m": 2.0, "x0": 1.0},
             "scheme": "euler_maruyama", "dt": 1e-4, "T": 1.2, "stride": 10},
    "fig2": {"model": {"kind": "superlinear_sde", "quad_coeff": 1.0,
                       "sink_coeff": 0.0, "c0": 1.0, "m": 1.0, "x0": 1.0},
             "scheme": "tamed", "dt": 1e-4, "T": 5.0, "stride": 10},
    "fig3": {"model": {"kind": "superlinear_sde", "quad_coeff": 1.0,
                       "sink_coeff": 0.0, "c0": 1.0, "m": 2.0, "x0": 1.0},
             "scheme": "tamed", "dt": 1e-4, "T": 5.0, "stride": 10},
    "fig4": {"model": {"kind": "superlinear_sde", "quad_coeff": 1.0,
                       "sink_coeff": 1.0, "c0": 0.0, "m": 2.0, "x0": 2.0},
             "scheme": "euler_maruyama", "dt": 1e-4, "T": 1.0, "stride": 10},
    "fig5": {"model": {"kind": "superlinear_sde", "quad_coeff": 1.0,
                       "sink_coeff": 1.0, "c0": 1.0, "m": 2.0, "x0": 2.0},
             "scheme": "tamed", "dt": 5e-5, "T": 20.0, "stride": 100},
}


def emit_figure_data(figure_id: str, seed: int = 0,
                     out_dir: str = ".") -> tuple:
    """Integrate one demo path and write its raw values as CSV.

    Returns (record, csv_path). The five canned setups walk the scalar
    model through its regimes: deterministic blow-up under the plain
    explicit scheme, two noise intensities that keep or fail to keep the
    path bounded, drift competition without noise, and extinction under
    the combined sink and noise.
    """
    if figure_id not in _FIGURES:
        raise ValueError(f"unknown figure {figure_id!r}; known: "
                         f"{sorted(_FIGURES)}")
    spec = _FIGURES[figure_id]
    model = make_model("superlinear_sde",
                       {k: v for k, v in spec["model"].items()
                        if k != "kind"})
    noise = scalar_noise(model.params["c0"], model.params["m"])
    cfg = SimConfig(dt=spec["dt"], T=spec["T"], scheme=spec["scheme"],
                    record_stride=spec["stride"])
    rec = run_path(model, noise, cfg, RngStream(seed, 0))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{figure_id}_path.csv"
    _write_csv(path, ["t", "x"],
               ((_fmt(t), _fmt(x)) for t, x in
                zip(rec.times, rec.scalar_values)))
    return rec, path


def _cmd_simulate(args) -> int:
    plan = parse_config(Path(args.config).read_text())
    model, noise, cfg = build_objects(plan)
    seed = plan.ensemble["master_seed"] if args.seed is None else args.seed
    rec = run_path(model, noise, cfg, RngStream(seed, args.path_index))
    out = Path(args.out or plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"path_{args.path_index:05d}.csv"
    rows = record_to_csv_rows(rec)
    header = next(rows)
    _write_csv(dest, header, rows)
    print(json.dumps(_jsonable({
        "status": rec.status,
        "event_time": rec.event_time,
        "terminal_h_norm": float(rec.h_norms[-1]),
        "recorded_points": int(rec.times.size),
        "csv": str(dest),
    }), indent=2))
    return 0


def _cmd_ensemble(args) -> int:
    plan = parse_config(Path(args.config).read_text())
    if args.paths is not None:
        plan = replace(plan, ensemble={**plan.ensemble,
                                       "n_paths": args.paths})
    if args.seed is not None:
        plan = replace(plan, ensemble={**plan.ensemble,
                                       "master_seed": args.seed})
    if args.out is not None:
        plan = replace(plan, output_dir=args.out)
    return run_experiment(plan, n_jobs=args.jobs,
                          dump_paths=args.dump_paths)


def _cmd_check(args) -> int:
    plan = parse_config(Path(args.config).read_text())
    model, noise, _ = build_objects(plan)
    try:
        reports, eta = conditions_suite(model, noise,
                                        plan.options["conditions"]["eta"])
    except UnstableEstimate as exc:
        print(json.dumps({"error": str(exc)}, indent=2))
        return 1
    print(json.dumps(_jsonable({"eta": eta,
                                "reports": reports}), indent=2))
    return 0 if all(r.holds for r in reports) else 1


def _cmd_figure(args) -> int:
    rec, path = emit_figure_data(args.figure_id, seed=args.seed,
                                 out_dir=args.out)
    print(json.dumps(_jsonable({
        "figure": args.figure_id,
        "status": rec.status,
        "event_time": rec.event_time,
        "csv": str(path),
    }), indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="noiselab",
        description="Stochastic models with norm-dependent multiplicative "
                    "noise: simulation, ensembles, and inequality checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate one path")
    p_sim.add_argument("config")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--path-index", type=int, default=0)
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=_cmd_simulate)

    p_ens = sub.add_parser("ensemble", help="run a full experiment")
    p_ens.add_argument("config")
    p_ens.add_argument("--paths", type=int, default=None)
    p_ens.add_argument("--seed", type=int, default=None)
    p_ens.add_argument("--jobs", type=int, default=1)
    p_ens.add_argument("--out", default=None)
    p_ens.add_argument("--dump-paths", action="store_true")
    p_ens.set_defaults(func=_cmd_ensemble)

    p_chk = sub.add_parser("check", help="run the structural checks only")
    p_chk.add_argument("config")
    p_chk.set_defaults(func=_cmd_check)

    p_fig = sub.add_parser("figure", help="emit one demo trajectory")
    p_fig.add_argument("figure_id", choices=sorted(_FIGURES))
    p_fig.add_argument("--seed", type=int, default=0)
    p_fig.add_argument("--out", default=".")
    p_fig.set_defaults(func=_cmd_figure)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
