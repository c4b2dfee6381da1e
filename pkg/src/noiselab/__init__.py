"""Numerical laboratory for SDEs and discretized PDEs whose multiplicative
noise strength grows with the state norm.

The package simulates a family of models (a scalar equation with
superlinear drift plus four one-dimensional field equations), checks the
structural inequalities that govern their long-time behavior, and runs
the Monte Carlo experiments that exhibit the three headline effects:
strong enough noise preventing blow-up, finite-time extinction, and the
1/t decay of the extinction-time tail.
"""

from ._kernels import BACKEND as kernel_backend
from .conditions import (ConditionReport, DEFAULT_NORM_GRID, RegimeClass,
                         UnstableEstimate, check_extinction_balance,
                         check_generalized_coercivity, check_growth_balance,
                         classify_regime, extinction_profile_report)
from .ensemble import (ContinuityReport, EcdfCurve, EnsembleStats,
                       MonotonicityReport, PreconditionFailed,
                       TailBoundReport, blowup_probability, continuity_probe,
                       extinction_ecdf, run_ensemble, stride_time_grid,
                       supermartingale_diagnostic, tail_bound_check,
                       wilson_interval)
from .integrate import (RngStream, SCHEMES, SimConfig, TrajectoryRecord,
                        run_path, step_em, step_semi_implicit, step_tamed,
                        wiener_increments)
from .models import (CoercivityProfile, FIELD_KINDS, GridSpec, MODEL_KINDS,
                     Model, SCALAR_KINDS, State, drift, embedding_constant,
                     first_laplacian_eigenvalue, h_norm, initial_state,
                     initial_values, make_model, v_norm)
from .noise import (NoiseSpec, WienerIncrement, adjoint_action_norm_sq,
                    diffusion_apply, hs_norm_sq, make_noise, scalar_noise,
                    split_channels)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend", "ConditionReport", "DEFAULT_NORM_GRID",
    "RegimeClass", "UnstableEstimate", "check_extinction_balance",
    "check_generalized_coercivity", "check_growth_balance",
    "classify_regime", "extinction_profile_report", "ContinuityReport",
    "EcdfCurve", "EnsembleStats", "MonotonicityReport", "PreconditionFailed",
    "TailBoundReport", "blowup_probability", "continuity_probe",
    "extinction_ecdf", "run_ensemble", "stride_time_grid",
    "supermartingale_diagnostic", "tail_bound_check", "wilson_interval",
    "RngStream", "SCHEMES", "SimConfig", "TrajectoryRecord", "run_path",
    "step_em", "step_semi_implicit", "step_tamed", "wiener_increments",
    "CoercivityProfile", "FIELD_KINDS", "GridSpec", "MODEL_KINDS", "Model",
    "SCALAR_KINDS", "State", "drift", "embedding_constant",
    "first_laplacian_eigenvalue", "h_norm", "initial_state",
    "initial_values", "make_model", "v_norm", "NoiseSpec",
    "WienerIncrement", "adjoint_action_norm_sq", "diffusion_apply",
    "hs_norm_sq", "make_noise", "scalar_noise", "split_channels",
]
