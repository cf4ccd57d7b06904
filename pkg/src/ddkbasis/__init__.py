"""Data-driven knot selection, splinets and functional PCA."""

__version__ = "0.1.0"

from .bases import (
    FourierBasis,
    KnotSet,
    OrthoBasis,
    PiecewiseConstantBasis,
    SplinetBasis,
    amse,
    build_fourier,
    build_piecewise_constant,
    build_splinet,
    project,
    synthesize,
)
from .ddk import DdkConfig, DdkResult, SplitSpec, best_split, elbow_index, select_knots, split_dataset
from .fcore import FunctionalDataset, Grid, SampledFunction, inner_product
from .fpca import estimate_covariance, fpca, reconstruct, truncation_error
from .linalg import eig_sym

