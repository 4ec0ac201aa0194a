"""Augmented decomposition solvers for multi-block separable convex programs.

The package splits into the problem model, the exact and inexact
decomposition engines, per-block subproblem solvers, ADMM-family baselines,
convergence-rate diagnostics, and the benchmark harness.
"""

from .model import (BlockSpec, FunctionDescriptor, IterateState, Problem,
                    SmoothPart, SolverParams, constraint_residual, g_norm_sq,
                    make_initial_state, objective, project_onto_W,
                    project_onto_Wperp, saddle_state, state_g_dist_sq)
from .block_solvers import (BlockSolveCertificate, BlockSolveError,
                            CachedQuadSolver, build_block_solvers,
                            build_penalized_solvers, l1_prox_block,
                            lbfgs_minimize, quad_solve, soft_threshold,
                            subgrad_dist_l1)
from .ada import (StepMetrics, Trace, ada_step, check_stop, ergodic_average,
                  phi_value, run)
from .inexact import (InexactSchedule, criterion_a_threshold,
                      criterion_b_threshold, iada_run, inexact_block_solve,
                      spectral_norm, stacked_coupling_norm)
from .baselines import (Admm2Lasso, BaselineParams, admm2_lasso_step,
                        default_prox_weights, prox_jadmm_run, prox_jadmm_step,
                        vsadmm_run, vsadmm_step)
from .diagnostics import (RateReport, kkt_residual, nu_a_nu_medians,
                          rate_report, verify_ergodic, verify_fejer,
                          verify_linear_tail, verify_monotone)
from .bench import (ExperimentConfig, build_logreg_consensus, consensus_ratio,
                    gen_exchange, gen_lasso, load_libsvm, partition_rows,
                    run_experiment, write_libsvm)

__version__ = "0.1.0"
