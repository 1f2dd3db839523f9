"""Saddle-point asymptotics for sums of Poisson arrivals on (0, 1].

The package computes the density and upper-tail asymptotics of the arrival
sum of a Poisson process whose intensity has a piecewise density on (0, 1],
and validates them against three independent oracles: a forward Volterra
march of the size-bias identity, Fourier inversion of the tilted
characteristic function, and Monte Carlo sampling.
"""

__version__ = "0.1.0"

from .asymptotics import (
    AsymptoticEstimate,
    ErrorOrder,
    density_asymptote,
    dickman_asymptote,
    tail_asymptote,
    tilted_gaussian,
)
from .cumulant import (
    ComplexCumulant,
    CumulantTriple,
    LogMoments,
    atom_mass,
    complex_cumulant,
    cumulant_triple,
    log_atom_mass,
    log_tilted_moments,
    oscillation_deficit,
    tilted_mass,
)
from .density import (
    Applicability,
    DensityPiece,
    EpsFloor,
    LevyDensitySpec,
    MassKind,
    SpecClass,
    builtin,
    classify,
    eval_g,
    parse_spec,
    restrict,
    serialize,
)
from .errors import (
    ConvergenceError,
    DomainError,
    DominationError,
    InvariantError,
    LevyAsymError,
    MassError,
    ModeError,
    PreconditionError,
    QuadratureError,
    RangeError,
    SchemaError,
    StepError,
    TailBoundError,
)
from .montecarlo import (
    CltDiagnostic,
    GammaTailReport,
    SampleBatch,
    clt_diagnostic,
    gamma_tail_check,
    sample_dickman,
    sample_finite,
    sample_split,
)
from .oracles import (
    DensityGrid,
    GridMethod,
    dickman_rho,
    fourier_density,
    fourier_tilted_standardized,
    oracle_tail,
    volterra_density,
)
from .saddle import GrowthRow, SaddlePoint, saddle_growth_report, solve_saddle

__all__ = [name for name in dir() if not name.startswith("_")]
