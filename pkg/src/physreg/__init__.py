"""Pointwise physics-constrained regression of PDE states from scattered samples.

Each query solves its own small convex program over the predicted state, its
derivatives and Taylor-remainder slacks at the query and its nearest samples.
"""
from .bench import ErrorCurve, TimingReport, l2_relative_error, run_forecast, run_interpolation
from .config import RunConfig
from .constraints import ConstraintSystem, assemble, assemble_arrays
from .neighbors import NeighborConfig, SampleIndex, select_neighbors
from .physics import PdeModel, RdsParams, StateQuadraticPde, heat_model, rds_model
from .points import AxisScaling, FieldVars, Sample, Snapshot, SpatioTemporalPoint, ThetaLayout
from .predictor import PredictionResult, PredictorConfig, predict, predict_grid, predict_points
from .qp import QpProblem, SolveReport, solve_qp
from .simulator import GroundTruth, SimConfig, sample_grid, sample_random, simulate
from .sqp import SolverConfig, solve_sqp

__version__ = "0.1.0"
