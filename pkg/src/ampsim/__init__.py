"""ampsim: a two-state particle read out by a population-inverted amplifier.

Exact linear Schroedinger dynamics of the joint particle-apparatus system,
pointer observables with a substitution-invariance test, Born-rule
estimators built from time averages, and scaling scans toward the
thermodynamic limit.
"""

__version__ = "0.1.0"

from .born import (BornEstimate, DecoherenceSeries, PointerAlgebra, born_estimate,
                   decoherence_series, measurement_series, mixture_distance,
                   mixture_distance_of, pointer_algebra, setup_commutator)
from .config import RunConfig, load_config, parse_config_text
from .dynamics import EvolutionConfig, TimeSeries, evolve, sample_trajectory, time_average
from .errors import (ConfigError, ConvergenceError, FitRefusalError, SimulationError)
from .model import (HamiltonianOperator, ModelSpec, build_hamiltonian, closed_form_branch,
                    closed_form_overlap, initial_state, measured_basis)
from .observables import (MacroVerdict, PointerObservable, SubstitutionTest,
                          is_macroscopic, pointer_expectation, pointer_family,
                          single_unit_family, substitution_invariance,
                          threshold_probability)
from .scaling import (Extrapolation, ModelTemplate, ScalingReport, ScanRow,
                      extrapolate_limit, fit_exponential_decay, scan_n)
from .states import (MAX_UNITS, ProductFactors, ReducedDensityMatrix, StateVector,
                     basis_index, branch_decompose, branch_weights, inner_product,
                     make_product_state, partial_trace_particle, split_index)

__all__ = [name for name in dir() if not name.startswith("_")]
