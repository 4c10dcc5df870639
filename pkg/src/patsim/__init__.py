"""patsim: photon-assisted tunneling of lattice bosons.

Exact integration of periodically driven bosonic lattice models on truncated
Fock spaces, the Bessel-dressed effective Hamiltonians they converge to, the
synthetic gauge structure of the dressed couplings, and the trapped-ion
hardware mapping behind the whole scheme.
"""

__version__ = "0.1.0"

from .dynamics import (EngineComparison, EvolutionTask, NumericalFailure,
                       ObservableSeries, compare_engines, evolve,
                       evolve_density_full, evolve_effective, evolve_pure_full,
                       max_transfer, sample_grid)
from .ensembles import SpinEnsemble, disorder_average, ensemble_from_product_state
from .fluxdecor import (compile_decoration, distinct_fluxes,
                        enumerate_tile_palette, pi_flux_defect_pattern,
                        stripe_pattern, tile_flux)
from .fock import (FockSpace, QuantumState, build_effective_hamiltonian,
                   build_fock_space, build_full_hamiltonian, hop_operator,
                   ladder_operator, single_particle_state, thermal_state)
from .gauge import (apply_gauge_transform, interference_probability,
                    landau_dressed_matrix, plaquette_flux_map,
                    unit_plaquette_path, wilson_loop)
from .ionmap import (ConstraintReport, IonArrayParams, check_constraints,
                     coulomb_coupling, map_to_model)
from .model import (Dipolar, DriveSpec, ExplicitMatrix, LatticeSpec, Mode,
                    ModelSpec, SpinConfiguration, enumerate_ordered_pairs,
                    load_model, model_from_config, model_to_config,
                    phase_at_site, save_model)
from .modulation import (DressedCoupling, bessel_j, build_dressed_matrix,
                         dressed_coupling, f_exponent, modulation_amplitude)

__all__ = [name for name in dir() if not name.startswith("_")]
