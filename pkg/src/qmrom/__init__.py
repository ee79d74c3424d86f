"""Quadratic solution-manifolds and non-intrusive operator inference.

Learns a quadratic approximation ``s ~ s_ref + V s_hat + Vbar w(s_hat)`` of
snapshot data, optionally selects a subset of the quadratic features with a
group-sparse solver, and infers polynomial reduced-order models from
projected snapshots.
"""

from .errors import (
    ConfigError,
    FormatError,
    IllConditionedError,
    InstabilityError,
    IntegrationError,
    NumericalError,
    QmromError,
    SolverError,
)
from .manifold import (
    PodBasis,
    QuadFeatureMap,
    QuadraticManifold,
    SnapshotSet,
    center,
    decode,
    encode,
    fit_vbar,
    linear_manifold,
    pod,
    projection_error,
    quad_features,
    retained_energy_linear,
    retained_energy_quadratic,
)
from .numerics import SvdResult, StencilSpec, fd_derivative, solve_ridge_rows, stencil, thin_svd
from .opinf import (
    OpinfProblem,
    RomOperators,
    infer_linear,
    infer_quadratic,
    intrusive_galerkin,
    sweep_hyperparameters,
)
from .rom import RomSimConfig, Trajectory, integrate_first_order, integrate_second_order, reconstruct, rhs
from .sparsa import SparsaConfig, SparsaResult, debias, group_prox, select_columns, sparsa_solve

__version__ = "0.1.0"
