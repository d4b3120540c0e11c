"""Stochastic exit statistics for a randomly perturbed meandering jet.

The deterministic flow is a kinematic jet with meander amplitude a,
phase-speed parameter beta and weak additive noise epsilon.  The
package locates the flow's stagnation-point skeleton, builds
separatrix-bounded eddy and jet-core domains, meshes them, and solves
the escape-probability and mean-residence-time boundary value problems
with a P1 finite element method, cross-checked by a direct
Euler-Maruyama simulator.
"""

__version__ = "0.1.0"

from .flowfield import JetParameters, make_params, stream_function, velocity, velocity_fn
from .geometry import find_stagnation_points, trace_level_set
from .domains import (
    GAMMA_LOWER,
    GAMMA_UPPER,
    DomainSpec,
    build_eddy_domain,
    build_jet_core_domain,
    make_disk_domain,
    make_ellipse_domain,
    make_strip_domain,
)
from .meshing import TriangleMesh, mesh_eddy, mesh_jet_core, mesh_quality, refine_uniform
from .fem import ScalarField, assemble_system, solve_linear
from .exitproblem import (
    Resolution,
    SweepTable,
    default_beta_grid,
    detect_features,
    find_band_edges,
    find_crossing,
    find_extremum,
    monotonicity_check,
    run_default_sweep,
    solve_domain_suite,
    solve_escape,
    solve_mrt,
    sweep_beta,
)
from .mc import (
    ExitStatistics,
    dt_convergence_study,
    simulate_first_exit,
    simulate_uniform_exit,
    uniform_starts,
)

__all__ = [
    "__version__",
    "JetParameters",
    "make_params",
    "stream_function",
    "velocity",
    "velocity_fn",
    "find_stagnation_points",
    "trace_level_set",
    "GAMMA_UPPER",
    "GAMMA_LOWER",
    "DomainSpec",
    "build_eddy_domain",
    "build_jet_core_domain",
    "make_disk_domain",
    "make_ellipse_domain",
    "make_strip_domain",
    "TriangleMesh",
    "mesh_eddy",
    "mesh_jet_core",
    "mesh_quality",
    "refine_uniform",
    "ScalarField",
    "assemble_system",
    "solve_linear",
    "Resolution",
    "SweepTable",
    "default_beta_grid",
    "detect_features",
    "find_band_edges",
    "find_crossing",
    "find_extremum",
    "monotonicity_check",
    "run_default_sweep",
    "solve_domain_suite",
    "solve_escape",
    "solve_mrt",
    "sweep_beta",
    "ExitStatistics",
    "dt_convergence_study",
    "simulate_first_exit",
    "simulate_uniform_exit",
    "uniform_starts",
]
