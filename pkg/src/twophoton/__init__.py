"""Two quantum dots in one cavity with a shared phonon bath.

Polaron master-equation simulation of cooperative two-photon emission:
phonon-induced rates, full and far-detuned generators, emission
probabilities, detuning sweeps and cavity emission spectra.
"""
__version__ = "0.1.0"

from .bath import (NO_PHONONS, BathSpec, PhononRates, SystemParams, compute_rates,
                   correlation_phi, green_functions, half_fourier, mean_displacement,
                   spectral_density)
from .dynamics import (EmissionProbabilities, TimeSeries, emission_probabilities,
                       initial_state, propagate, time_grid, trajectory_observables)
from .errors import (ConfigurationError, HorizonError, HorizonWarning,
                     NumericalAccuracyError, TwoPhotonError)
from .liouvillian import (Superoperator, approx_liouvillian, build_liouvillian,
                          effective_hamiltonian, full_liouvillian, lindblad_dissipator,
                          phonon_dissipator_full, system_hamiltonian)
from .operators import (OperatorSet, SpaceDescriptor, basis_projector, basis_state,
                        build_operators, build_space, expectation)
from .scan import SweepConfig, SweepResult, resonance_locator, sweep_delta2
from .spectrum import (SpectrumResult, cavity_spectrum, emission_spectrum,
                       resolvent_spectrum, two_time_correlation)
