"""Decorated synthetic flux lattices selected by frozen spin patterns.

With the trap-frequency gradient switched off and the drive resonant with the
spin Stark shift (omega_d = 2*eps/r), each link picks up a spin-dependent
photon number f = r*(sigma_i - sigma_j)/2.  A unit plaquette then carries a
flux fixed entirely by its four corner spins, so a spin pattern compiles into
a flux decoration of the whole array.

Tile corner convention (counterclockwise from the lower-left corner)::

        s4 --- s3          corners = (s1, s2, s3, s4)
        |       |          s1 at (0,0), s2 at (1,0),
        s1 --- s2          s3 at (1,1), s4 at (0,1)

For r = 1 the sixteen corner tuples produce nine distinct fluxes; at
phi1 = phi2 = pi they collapse to {0, pi} and stripe-like patterns realize a
homogeneous pi-flux lattice that single corner flips decorate with zero-flux
defects.
"""

from __future__ import annotations

import itertools
import math
import warnings
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .gauge import plaquette_flux_map, unit_plaquette_path, wilson_loop
from .model import (DriveSpec, ExplicitMatrix, LatticeSpec, Mode, ModelSpec,
                    Site, SpinConfiguration, wrap_angle)
from .modulation import DressedMap, build_dressed_matrix

Corners = Tuple[int, int, int, int]

DEFAULT_ETA_D = 1.0


def _nearest_neighbor_law(dims: Tuple[int, int], j_t: float = 1.0) -> ExplicitMatrix:
    couplings = {}
    l1, l2 = dims
    for i1 in range(l1):
        for i2 in range(l2):
            if i1 + 1 < l1:
                couplings[((i1 + 1, i2), (i1, i2))] = j_t
            if i2 + 1 < l2:
                couplings[((i1, i2 + 1), (i1, i2))] = j_t
    return ExplicitMatrix(couplings)


def decoration_model(lattice: LatticeSpec, phi1: float, phi2: float, r: int = 1,
                     eta_d: float = DEFAULT_ETA_D) -> ModelSpec:
    """Zero-gradient flux-decoration model over the given lattice.

    The drive frequency does not enter any dressed value, so it is left
    unconstrained here; a hardware-mapped model must declare omega_d = 2*eps/r.
    """
    drive = DriveSpec.uniform(0.0, eta_d, 1.0, phi1=phi1, phi2=phi2, r=r)
    return ModelSpec(lattice=lattice, drive=drive, mode=Mode.SPIN_FLUX_DECORATION)


def tile_flux(spin_corners: Sequence[int], phi1: float, phi2: float, r: int = 1,
              eta_d: float = DEFAULT_ETA_D) -> float:
    """Flux of a single plaquette with the given corner spins, in (-pi, pi]."""
    corners = tuple(int(s) for s in spin_corners)
    if len(corners) != 4 or any(s not in (1, -1) for s in corners):
        raise ValueError("spin_corners must be four values in {+1, -1}")
    lattice = LatticeSpec(dims=(2, 2), coupling_law=_nearest_neighbor_law((2, 2)))
    model = decoration_model(lattice, phi1, phi2, r, eta_d)
    s1, s2, s3, s4 = corners
    spins = SpinConfiguration({(0, 0): s1, (1, 0): s2, (1, 1): s3, (0, 1): s4})
    w = wilson_loop(build_dressed_matrix(model, spins), unit_plaquette_path((0, 0)))
    return wrap_angle(math.atan2(w.imag, w.real))


def enumerate_tile_palette(phi1: float, phi2: float, r: int = 1,
                           eta_d: float = DEFAULT_ETA_D) -> Dict[Corners, float]:
    """Flux of every one of the 16 corner-spin tuples."""
    return {c: tile_flux(c, phi1, phi2, r, eta_d)
            for c in itertools.product((1, -1), repeat=4)}


def distinct_fluxes(palette: Mapping[Corners, float], tol: float = 1e-9) -> List[float]:
    """Distinct flux values of a palette, compared on the circle."""
    out: List[float] = []
    for v in palette.values():
        if not any(abs(wrap_angle(v - u)) < tol for u in out):
            out.append(v)
    return sorted(out)


def compile_decoration(lattice: LatticeSpec, spins: SpinConfiguration,
                       phi1: float, phi2: float, r: int = 1,
                       eta_d: float = DEFAULT_ETA_D,
                       model: Optional[ModelSpec] = None
                       ) -> Tuple[Dict[Site, float], DressedMap]:
    """Compile a spin pattern into its flux map and dressed coupling map.

    A hardware-derived model may be passed in to reuse its couplings and to
    check the regime assumptions; it must have a vanishing gradient (enforced
    by the mode) and a Stark shift dominating the bare tunneling.
    """
    if model is None:
        nn = _nearest_neighbor_law(lattice.dims)
        model = decoration_model(LatticeSpec(dims=lattice.dims, spacings=lattice.spacings,
                                             coupling_law=nn), phi1, phi2, r, eta_d)
    else:
        if model.mode != Mode.SPIN_FLUX_DECORATION:
            raise ValueError("compile_decoration needs a SpinFluxDecoration model")
        _warn_if_weak_stark(model)
    spins.validate_for(model.lattice)
    dressed = build_dressed_matrix(model, spins)
    flux = plaquette_flux_map(dressed, model.lattice, model.flavors[0])
    return flux, dressed


def _warn_if_weak_stark(model: ModelSpec) -> None:
    # The decoration derivation assumes the Stark splitting dominates the bare
    # tunneling, in analogy with the gradient condition of the driven modes.
    from .model import enumerate_ordered_pairs
    for flavor in model.flavors:
        eps = abs(model.disorder_strength(flavor))
        if eps == 0.0:
            continue
        j_max = max((abs(j) for _, _, j in enumerate_ordered_pairs(model.lattice, flavor)),
                    default=0.0)
        if j_max > 0 and eps < 10.0 * j_max:
            warnings.warn(
                f"flux decoration assumes eps >> J_t; flavor {flavor!r} has "
                f"eps/J = {eps / j_max:.2f}", stacklevel=3)


def stripe_pattern(lattice: LatticeSpec, axis: int = 0) -> SpinConfiguration:
    """Spins alternating by column (axis=0) or by row (axis=1)."""
    coord = 0 if axis == 0 else 1
    return SpinConfiguration({s: 1 if s[coord] % 2 == 0 else -1
                              for s in lattice.sites()})


def checkerboard_pattern(lattice: LatticeSpec) -> SpinConfiguration:
    return SpinConfiguration({s: 1 if (s[0] + s[1]) % 2 == 0 else -1
                              for s in lattice.sites()})


def pi_flux_defect_pattern(lattice: LatticeSpec, defect_corner: Site = (0, 0)
                           ) -> SpinConfiguration:
    """Column stripes with one corner site flipped.

    At phi1 = phi2 = pi the stripes give a homogeneous pi-flux lattice; the
    flipped corner site touches exactly one plaquette, which becomes the
    single zero-flux defect.
    """
    l1, l2 = lattice.dims
    corner_sites = {(0, 0), (l1 - 1, 0), (0, l2 - 1), (l1 - 1, l2 - 1)}
    if tuple(defect_corner) not in corner_sites:
        raise ValueError(f"defect site must be a lattice corner, got {defect_corner}")
    base = stripe_pattern(lattice, axis=0)
    values = dict(base.items())
    values[tuple(defect_corner)] = -values[tuple(defect_corner)]
    return SpinConfiguration(values)
