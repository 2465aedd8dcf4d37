"""Operator-compressed multiscale FEM for the 1D periodic semiclassical
Schrodinger equation: grids, potentials, basis construction, Crank-Nicolson
and time-splitting spectral propagators, and the convergence-study runner."""

from ._core import (
    DecayProfile,
    FineOperators,
    MultiscaleBasis,
    Patch,
    PeriodicGridPair,
    PotentialField,
    TrajectoryResult,
    assemble_fine_operators,
    build_global_basis,
    build_grid_pair,
    build_localized_basis,
    default_oversampling,
    discontinuous_potential,
    fem_cn_evolve,
    fit_orders,
    gaussian_wavepacket_samples,
    measure_decay,
    msfem_cn_evolve,
    patch,
    relative_errors,
    run_experiment,
    smooth_potential,
    trig_resample,
    tssp_evolve,
    validate_config,
)

__all__ = [
    "DecayProfile",
    "FineOperators",
    "MultiscaleBasis",
    "Patch",
    "PeriodicGridPair",
    "PotentialField",
    "TrajectoryResult",
    "assemble_fine_operators",
    "build_global_basis",
    "build_grid_pair",
    "build_localized_basis",
    "default_oversampling",
    "discontinuous_potential",
    "fem_cn_evolve",
    "fit_orders",
    "gaussian_wavepacket_samples",
    "measure_decay",
    "msfem_cn_evolve",
    "patch",
    "relative_errors",
    "run_experiment",
    "smooth_potential",
    "trig_resample",
    "tssp_evolve",
    "validate_config",
]

__version__ = "0.1.0"
