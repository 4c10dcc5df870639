"""Coherent destruction of tunneling on an undriven-gradient link.

With no gradient, the drive alone renormalizes the exchange by
F_0(eta, eta, pi) = J_0(2 eta): sweep the drive index and watch the transfer
die at the Bessel zeros eta = 1.202 and 2.760.

Run:  python3 demos/dynamic_localization.py
"""

import math

import numpy as np

from patsim import (DriveSpec, EvolutionTask, ExplicitMatrix, LatticeSpec,
                    ModelSpec, build_fock_space, evolve, max_transfer,
                    sample_grid, single_particle_state)
from patsim.modulation import modulation_amplitude

PI = math.pi
J_T = 0.01
T_STAR = 100 * PI / abs(modulation_amplitude(1, 1.0, 1.0, PI))

lattice = LatticeSpec(dims=(1, 2), coupling_law=ExplicitMatrix({((0, 1), (0, 0)): J_T}))
space_model = ModelSpec(lattice=lattice,
                        drive=DriveSpec.uniform(0.0, 1.0, 0.5, phi2=PI))
space = build_fock_space(space_model, n_trunc=4, sector=1)
psi = single_particle_state(space, (0, 0))
times = sample_grid(T_STAR, 400)

print(f"horizon t* = {T_STAR:.1f}/omega")
print("eta_d   |J_0(2 eta)|   n2* (full engine)")
for eta in np.linspace(0.0, 4.0, 21):
    model = ModelSpec(lattice=lattice,
                      drive=DriveSpec.uniform(0.0, float(eta), 0.5, phi2=PI))
    task = EvolutionTask(model=model, space=space, initial=psi, t_final=T_STAR,
                         sample_times=times)
    n2 = max_transfer(evolve(task), "n_0_1", T_STAR)
    amp = abs(modulation_amplitude(0, eta, eta, PI))
    bar = "#" * int(40 * n2)
    print(f"{eta:4.1f}    {amp:8.4f}      {n2:6.4f} {bar}")
