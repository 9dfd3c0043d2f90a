"""Low-rank symplectic gradient adjustment for h-player differentiable games."""

from .correction import SkewCorrection, build_skew_correction, exact_skew, skew_error
from .experiments import (
    BenchmarkGame,
    bilinear_game,
    compare_solvers,
    make_game,
    paper_game,
    random_quadratic_game,
)
from .game import Game, GameHessian, check_first_order, game_gradient, game_hessian, sa_decompose
from .numerics import BlockLayout, assemble_block_matrix, block_get, spectral_norm
from .secant import SecantState, broyden_increment, broyden_update, init_secant, secant_error
from .solvers import (
    FrozenMapReport,
    SolverConfig,
    SolverTrace,
    estimate_linear_rate,
    frozen_map_analysis,
    run_exact_sga,
    run_gradient_descent,
    run_multilrsga,
)

__version__ = "0.1.0"
