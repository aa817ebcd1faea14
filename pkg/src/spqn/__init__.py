"""Greedy SR1 quasi-Newton solver and benchmark harness for smooth
strongly-convex-strongly-concave saddle point problems."""

from .data import (
    Dataset,
    extract_protected,
    format_libsvm,
    load_libsvm,
    minmax_scale,
    parse_libsvm,
    read_trace_csv,
    synth_binary,
    write_trace_csv,
)
from .greedy import (
    ApproxState,
    SquaredHessian,
    bfgs_update,
    broyden_update,
    dfp_update,
    greedy_index,
    gsr1,
    gsr1_n,
    scale_correction,
    sr1_update,
)
from .linalg import (
    DimensionMismatch,
    NotPositiveDefinite,
    SpdFactorization,
    eig_extremes,
    loewner_leq,
    rank_one_symmetric,
    solve_spd,
    spd_factorize,
    symmetrize,
)
from .problems import (
    AucProblem,
    DebiasProblem,
    QuadraticSaddle,
    estimate_constants,
    finite_diff_gradient,
    finite_diff_hessian,
    quadratic_make,
)
from .solver import (
    CONVERGED,
    DIVERGED,
    MAX_ITERS,
    IterationRecord,
    SaddleProblem,
    SolverConfig,
    Trace,
    convergence_measure,
    default_M,
    extragradient_step,
    initial_state,
    mgsr1_step,
    random_sr1_step,
    solve,
    track_eta,
)

__version__ = "0.1.0"
