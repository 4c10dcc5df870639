"""Spin patterns as flux stencils.

With the gradient off and the drive resonant with the spin Stark splitting,
every link's phase depends only on the two spins it connects.  The sixteen
corner tuples of a unit cell give nine distinct fluxes; at phi1 = phi2 = pi
stripes build a uniform pi-flux array and a single flipped corner spin leaves
one zero-flux defect.

Run:  python3 demos/flux_decorations.py
"""

import math

from patsim import (LatticeSpec, compile_decoration, distinct_fluxes,
                    enumerate_tile_palette, pi_flux_defect_pattern,
                    stripe_pattern)
from patsim.gauge import flux_map_ascii

PI = math.pi

print("tile palette at generic phases (phi1, phi2) = (0.7, 1.1):")
palette = enumerate_tile_palette(0.7, 1.1)
for corners, flux in sorted(palette.items(), key=lambda kv: kv[1]):
    label = "".join("+" if s == 1 else "-" for s in corners)
    print(f"  corners {label}: flux {flux:+.4f}")
values = distinct_fluxes(palette)
print(f"  -> {len(values)} distinct values")

lattice = LatticeSpec(dims=(5, 4))
print("\ncolumn stripes at (pi, pi): homogeneous pi flux")
flux, _ = compile_decoration(lattice, stripe_pattern(lattice), PI, PI)
print(flux_map_ascii(flux, lattice))

print("\none corner spin flipped: a single zero-flux defect")
lattice2 = LatticeSpec(dims=(4, 4))
flux2, _ = compile_decoration(lattice2, pi_flux_defect_pattern(lattice2), PI, PI)
print(flux_map_ascii(flux2, lattice2))
