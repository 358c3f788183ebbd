"""Dimension estimates for contracting iterated function systems and
expanding repellers: singular-value spectra, sub-additive pressure,
singularity and Lyapunov dimensions, covering constructions, and empirical
box/packing dimension estimators."""

from .singular import log_singular_values, log_svf, product_spectrum
from .shift import BlockShift, StoppingFamily, Subshift, stopping_family
from .systems import (
    AffineMap,
    Box,
    IfsSystem,
    RepellerSystem,
    SinePerturbedMap,
    chaos_game,
    code_point,
    jacobians_along,
    save_points_csv,
)
from .ergodic import (
    LocalDims,
    LyapunovSpectrum,
    ShiftMeasure,
    entropy,
    local_dims,
    lyapunov_dimension,
    lyapunov_exponents,
)
from .pressure import (
    DimensionSolveResult,
    PressureEstimate,
    log_partition_sum,
    pressure,
    solve_dim_s,
    solve_tn,
    theta_series,
    theta_slope,
    variational_gap,
)
from .geometry import (
    BallCover,
    BoxCountSeries,
    box_count,
    box_dimension,
    cover_word,
    ellipsoid_cover,
    verify_cover,
)
from . import errors

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "BallCover",
    "BlockShift",
    "Box",
    "BoxCountSeries",
    "DimensionSolveResult",
    "IfsSystem",
    "LocalDims",
    "LyapunovSpectrum",
    "PressureEstimate",
    "RepellerSystem",
    "ShiftMeasure",
    "SinePerturbedMap",
    "StoppingFamily",
    "Subshift",
    "box_count",
    "box_dimension",
    "chaos_game",
    "code_point",
    "cover_word",
    "ellipsoid_cover",
    "entropy",
    "errors",
    "jacobians_along",
    "local_dims",
    "log_partition_sum",
    "log_singular_values",
    "log_svf",
    "lyapunov_dimension",
    "lyapunov_exponents",
    "pressure",
    "product_spectrum",
    "save_points_csv",
    "solve_dim_s",
    "solve_tn",
    "stopping_family",
    "theta_series",
    "theta_slope",
    "variational_gap",
    "verify_cover",
]
