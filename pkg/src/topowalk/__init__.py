"""Coined quantum walks, topological diagnostics, Gaussian mode networks.

The package splits into five layers plus a command line runner:

- lattice: specs and state containers shared by everything else
- walk: the matrix-free step/evolve engine for coined walks
- topology: band structure, winding numbers, edge-state certification
- gaussian: covariance-matrix optics for coupled mode networks
- noise: Monte Carlo ensembles, spread scaling, robustness sweeps
- cli: config resolution, experiment execution, manifest output
"""

__version__ = "0.1.0"

from .errors import (
    BoundaryOverflowError,
    ChiralSymmetryError,
    ConfigError,
    DimensionCapError,
    GapClosureError,
    NormalizationError,
    ShapeMismatchError,
    SimulationError,
    ValidationError,
)
from .lattice import (
    CoinProfile,
    LatticeSpec,
    SpinorField,
    WalkSpec,
    inner_product,
    make_localized_state,
    position_distribution,
    wrap_angle,
)
from .walk import (
    StepOperator,
    coin_rotate,
    evolve,
    materialize_unitary,
    spin_translate,
    step,
    step_amplitudes,
)
from .topology import (
    BlochData,
    BoundaryWalkResult,
    EdgeCertificate,
    EdgeState,
    PhaseCell,
    SymmetryFlags,
    TopologyReport,
    bloch_decompose,
    boundary_walk_experiment,
    domain_walls,
    find_edge_states,
    momentum_step_matrix,
    phase_diagram,
    symmetry_check,
    topology_report,
    winding_number,
)
from .gaussian import (
    CorrelationReport,
    CouplerLayer,
    GainScanResult,
    GaussianState,
    ModeNetwork,
    NetworkRun,
    PhaseSweep,
    PhotonStatistics,
    RelabelLayer,
    SymplecticOp,
    apply,
    attenuate,
    correlations,
    coupler_symplectic,
    dephase,
    embed_pair,
    embed_single,
    gain_scan,
    layer_symplectic,
    log_negativity,
    mean_photons,
    network_evolve,
    network_from_walk,
    network_symplectic,
    phase_sensitivity,
    phase_shift_symplectic,
    photon_statistics,
    rail_shift_permutation,
    step_symplectic,
    su11_chain,
    symplectic_form,
    total_photons,
    walk_input_state,
)
from .noise import (
    IntensityHistogram,
    NoiseSpec,
    NoisyEnsemble,
    RobustnessReport,
    ScalingReport,
    edge_robustness,
    intensity_histogram,
    noisy_evolve,
    realization_rng,
    sigma_scaling,
)
from .cli import RunConfig, RunResult, describe, main, parse_config, run
