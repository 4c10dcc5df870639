"""From trap hardware numbers to the abstract driven model.

Feed microtrap-array scales (MHz traps, 20 um spacings, a 300 kHz drive
beam pair) through the parameter mapper: check every derivation inequality,
then confirm the mapped model really exchanges phonons at the dressed rate.

Run:  python3 demos/ion_mapping.py
"""

import math

from patsim import (EvolutionTask, IonArrayParams, build_fock_space,
                    check_constraints, coulomb_coupling, evolve, map_to_model,
                    sample_grid, single_particle_state)
from patsim.modulation import modulation_amplitude

PI = math.pi

params = IonArrayParams(
    dims=(2, 1), spacings=(20e-6, 20e-6),
    trap_frequencies={"x": 7.5e6, "y": 10e6, "z": 5e6},
    mass_amu=24.985837,
    gradient={"z": 200e3}, laser_beatnote=200e3, rabi=300e3,
    lamb_dicke={"z": 0.25}, delta_k=(PI / (2 * 20e-6), 0.0),
    standing_wave_rabi=300e3, standing_wave_lamb_dicke={"z": 0.25},
    sideband_rabi=300e3, sideband_detuning=1e6, r=1, axis="z")

print(f"nearest-neighbor phonon exchange: "
      f"{coulomb_coupling(params, (1, 0), (0, 0), 'z') / 1e3:.2f} kHz\n")
print(check_constraints(params).to_table())

model = map_to_model(params)
eta_d = model.drive.drive_index("z")
j_t = abs(model.bare_coupling((1, 0), (0, 0), "z"))
f_mag = abs(modulation_amplitude(1, eta_d, eta_d, model.drive.phi1))
print(f"\nmapped drive index eta_d = {eta_d:+.4f}, dressed rate "
      f"{f_mag * j_t:.3e} omega")

space = build_fock_space(model, n_trunc=2, sector=1)
psi = single_particle_state(space, (0, 0))
t_final = PI / (2 * f_mag * j_t)
series = evolve(EvolutionTask(model=model, space=space, initial=psi,
                              t_final=t_final, sample_times=sample_grid(t_final, 200),
                              engine="effective"))
print(f"full transfer after half an exchange period (t = {t_final:.0f}/omega): n2 = {series['n_1_0'][-1]:.4f}")
