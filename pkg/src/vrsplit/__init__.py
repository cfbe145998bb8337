"""Variance-reduced forward-reflected splitting methods for finite-sum root
finding 0 = Gx and generalized equations 0 in Gx + Tx."""

from .core import (OracleCounter, RngStream, Trajectory, TrajectoryRecord,
                   read_trajectory_csv)
from .estimators import (EstimatorConstants, FullBatchFrq, LsvrgEstimator,
                         SagaEstimator, TheoryConstants, frq_exact,
                         lsvrg_constants, saga_constants, vfr_theory,
                         vfrbs_theory)
from .operators import (AffineFiniteSum, CallableFiniteSum, FiniteSumOperator,
                        SaddleFiniteSum, averaged_lipschitz)
from .resolvents import (MonotoneMap, box_map, element_of_T, l1_map,
                         linear_map, product_map, project_box,
                         project_simplex, resolve, simplex_map, zero_map)
from .solvers import (SolverConfig, fbs_residual, lyapunov_mu, lyapunov_value,
                      solve, vfr_residual_bound, vfrbs_residual_bound)

__version__ = "0.1.0"

__all__ = [
    "OracleCounter", "RngStream", "Trajectory", "TrajectoryRecord",
    "read_trajectory_csv",
    "EstimatorConstants", "FullBatchFrq", "LsvrgEstimator", "SagaEstimator",
    "TheoryConstants", "frq_exact", "lsvrg_constants", "saga_constants",
    "vfr_theory", "vfrbs_theory",
    "AffineFiniteSum", "CallableFiniteSum", "FiniteSumOperator",
    "SaddleFiniteSum", "averaged_lipschitz",
    "MonotoneMap", "box_map", "element_of_T", "l1_map", "linear_map",
    "product_map", "project_box", "project_simplex", "resolve", "simplex_map",
    "zero_map",
    "SolverConfig", "fbs_residual", "lyapunov_mu", "lyapunov_value", "solve",
    "vfr_residual_bound", "vfrbs_residual_bound",
]
