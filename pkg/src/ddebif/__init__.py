"""Numerical bifurcation analysis of delay differential equations.

Steady states, fold and Hopf points, periodic orbits, and connecting
(homoclinic/heteroclinic) orbits of systems with constant or state-dependent
delays: Newton correction of determining systems, characteristic roots and
Floquet multipliers, branch continuation with secant prediction, and point
conversions for branch switching.
"""

from .continuation import (
    ContinuationOutcome,
    Event,
    branch_stability,
    continue_branch,
    default_measures,
    recompute_branch,
    reverse_branch,
)
from .convert import to_fold, to_hcli, to_hopf, to_psol, to_stst
from .corrector import CorrectionReport, correct
from .collocation import (
    detect_negative_delay,
    floquet_multipliers,
    interp_profile,
    remesh,
)
from .model import (
    Branch,
    BranchMethod,
    ConnectingOrbit,
    ContinuationMethod,
    Fold,
    Hopf,
    Measure,
    Multipliers,
    ParameterControl,
    PeriodicOrbit,
    PiecewiseProfile,
    Point,
    PointMethod,
    Roots,
    Stability,
    StabilityMethod,
    SteadyState,
    branch_measure,
    default_branch,
    default_branch_method,
    default_continuation_method,
    default_point_method,
    default_stability_method,
    eval_measure,
    point_axpy,
    point_norm,
    point_normalize,
)
from .serialize import (
    branch_from_dict,
    branch_from_json,
    branch_to_dict,
    branch_to_json,
    point_from_dict,
    point_to_dict,
    read_branch,
    write_branch,
)
from .spectrum import stst_stability
from .system import Problem, assemble_problem
from .systems import BUILTIN_SYSTEMS, SystemInfo, builtin_info, builtin_problem

__version__ = "0.1.0"
