"""Exact multi-time dynamics of N massless Dirac particles with contact interactions in 1+1D."""

from .model import (
    Classification,
    Configuration,
    DomainError,
    Event,
    Kind,
    ModelParams,
    all_spins,
    characteristic_values,
    classify,
    component_index,
    spin_of_index,
)
from .phases import PhaseResult, collisions, phase, sort_permutation
from .initial_data import (
    GridSpec,
    InitialData,
    InitialDataFormatError,
    antisymmetrize,
    compatible_bumps,
    load,
    save,
    separated_wedge,
    validate,
)
from .solver import TraceError, WaveFunction
from .current import (
    Hypersurface,
    SlopeError,
    boundary_flux_check,
    current,
    norm_distance,
    surface_integral,
)
from .lorentz import Boost, BoostedWaveFunction, boost_event, boost_hypersurface, boost_wavefunction
from .analysis import (
    AlphaInstance,
    GridError,
    NoRootError,
    alpha_contradiction_demo,
    alpha_points,
    delta_bc_check,
    schmidt_rank,
)

__version__ = "0.1.0"
