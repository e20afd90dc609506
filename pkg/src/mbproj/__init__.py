"""Random minibatch projection subgradient methods for convex problems with
many functional constraints, plus the experiment harness that measures their
convergence rates and minibatch-size effects."""

from .oracle import (ConstraintFamily, KnownOptimum, ObjectiveOracle, OracleError,
                     ProblemSpec, SimpleSet, ValidationReport, distance_family,
                     empty_family, linear_family, positive_part_value_and_dir,
                     validate_assumptions)
from .geometry import (DistanceOracleError, PolyhedronSpec, TOL_ASSERT, TOL_METRIC,
                       distance_oracle, estimate_regularity_c, max_violation,
                       project_intersection, project_simple)
from .sampling import Sampler, SamplerConfigError, draw_minibatch
from .solver import (BatchStepDiagnostics, BetaPolicy, ConfigError, IterateState,
                     PolyhedralContext, RunRecord, RunResult, SolverAbort,
                     SolverConfig, alpha_schedule, analysis_constants,
                     averages_identity_gap, gamma_schedule, objective_step,
                     parallel_feasibility_update, polyak_step, run,
                     sequential_feasibility_update)
from .problems import (BenchmarkInstance, LNScheme, exact_ln_linear, load_instance,
                       make_builtin, make_duplicated_benchmark, make_orthant2,
                       make_orthonormal_benchmark, make_polyhedral_benchmark,
                       make_unconstrained, qb_curves, save_instance)

__version__ = "0.1.0"
