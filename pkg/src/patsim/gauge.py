"""Wilson loops, plaquette fluxes, and gauge transformations.

The argument of a closed-loop product of dressed couplings is the synthetic
flux threading the loop; it is invariant under site-local phase redefinitions
of the bosonic operators, which act on links as J_ij -> J_ij e^{i(chi_i-chi_j)}.
A second construction path writes the same couplings in the Landau gauge as a
Peierls line integral of A = -B0*y*e1 with B0 = r*phi2/(e* d1 d2); both routes
must produce identical flux maps (e* is a bookkeeping constant fixed to 1).
"""

from __future__ import annotations

import json
import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .model import (DEFAULT_FLAVOR, LatticeSpec, Mode, ModelSpec, Site,
                    SpinConfiguration, enumerate_ordered_pairs, wrap_angle)
from .modulation import DressedCoupling, DressedMap, coupling_value, dressed_coupling

NEGLIGIBLE_COUPLING = 1e-14


def unit_plaquette_path(corner: Site) -> List[Site]:
    """Counterclockwise unit square starting at its lower-left corner."""
    i1, i2 = corner
    return [(i1, i2), (i1 + 1, i2), (i1 + 1, i2 + 1), (i1, i2 + 1), (i1, i2)]


def double_plaquette_paths(corner: Site) -> Tuple[List[Site], List[Site]]:
    """The two second-smallest loops (1x2 and 2x1) anchored at ``corner``.

    Both need range-2 couplings along one axis; each encloses twice the unit
    area.
    """
    i1, i2 = corner
    tall = [(i1, i2), (i1 + 1, i2), (i1 + 1, i2 + 2), (i1, i2 + 2), (i1, i2)]
    wide = [(i1, i2), (i1 + 2, i2), (i1 + 2, i2 + 1), (i1, i2 + 1), (i1, i2)]
    return tall, wide


def wilson_loop(dressed: Mapping, path: Sequence[Site],
                flavor: str = DEFAULT_FLAVOR) -> complex:
    """Product of dressed couplings along a closed oriented path.

    Traversing a stored pair against its i > j orientation picks up the
    complex conjugate.  Raises if the path is open or crosses a missing link.
    """
    path = [tuple(s) for s in path]
    if len(path) < 2 or path[0] != path[-1]:
        raise ValueError("loop path must be closed (first site = last site)")
    w = 1.0 + 0.0j
    for a, b in zip(path[:-1], path[1:]):
        v = coupling_value(dressed, b, a, flavor)
        if abs(v) <= NEGLIGIBLE_COUPLING:
            raise ValueError(f"path is disconnected: no coupling on link {a} -> {b}")
        w *= v
    return w


def plaquette_flux_map(dressed: Mapping, lattice: LatticeSpec,
                       flavor: str = DEFAULT_FLAVOR) -> Dict[Site, float]:
    """Flux (argument of the unit-plaquette Wilson loop) per plaquette.

    Keys are lower-left corners; plaquettes with a vanishing loop coupling are
    reported as absent.  Values lie in (-pi, pi].
    """
    l1, l2 = lattice.dims
    out: Dict[Site, float] = {}
    for i1 in range(l1 - 1):
        for i2 in range(l2 - 1):
            try:
                w = wilson_loop(dressed, unit_plaquette_path((i1, i2)), flavor)
            except ValueError:
                continue
            out[(i1, i2)] = wrap_angle(math.atan2(w.imag, w.real))
    return out


def apply_gauge_transform(dressed: Mapping, chi: Mapping[Site, float]) -> Dict:
    """Site-local phase redefinition: J'_ij = J_ij * exp(i(chi_i - chi_j))."""
    out = {}
    for (i, j, flavor), entry in dressed.items():
        delta = float(chi.get(tuple(i), 0.0)) - float(chi.get(tuple(j), 0.0))
        rot = complex(math.cos(delta), math.sin(delta))
        if isinstance(entry, DressedCoupling):
            out[(i, j, flavor)] = DressedCoupling(
                value=entry.value * rot,
                amplitude_factor=entry.amplitude_factor,
                phase_factor=entry.phase_factor + delta)
        else:
            out[(i, j, flavor)] = complex(entry) * rot
    return out


def interference_probability(flux: float) -> float:
    """Two-path interference factor (1 + cos(flux))/2 behind the plaquette runs."""
    return 0.5 * (1.0 + math.cos(flux))


def landau_dressed_matrix(model: ModelSpec,
                          spins: Optional[SpinConfiguration] = None) -> DressedMap:
    """Dressed couplings in the Landau gauge (Peierls line-integral phases).

    The straight-line integral of A = -B0*y*e1 between the sites gives the
    link phase -r*phi2*(i1-j1)*(i2+j2)/2, with the sign of the flavor's
    gradient carried along (opposite fluxes for opposite gradients).  This is
    the chi_i = r*phi1*i1^2/2 gauge transform of the direct construction, so
    every gauge-invariant quantity must agree between the two routes.
    """
    if model.mode == Mode.SPIN_FLUX_DECORATION:
        raise ValueError("the Landau construction applies to gradient modes only")
    if model.mode in (Mode.SPIN_BOND_DISORDER,) and spins is None:
        raise ValueError("bond disorder needs a spin configuration")
    drive = model.drive
    out: DressedMap = {}
    for flavor in model.flavors:
        grad = drive.gradient(flavor)
        sign = 0 if grad == 0.0 else (1 if grad > 0 else -1)
        for i, j, j_t in enumerate_ordered_pairs(model.lattice, flavor):
            base = dressed_coupling(j_t, i, j, drive, mode=model.mode,
                                    flavor=flavor, spins=spins)
            phase = -0.5 * sign * drive.r * drive.phi2 * (i[0] - j[0]) * (i[1] + j[1])
            rot = complex(math.cos(phase), math.sin(phase))
            out[(i, j, flavor)] = DressedCoupling(
                value=complex(j_t) * base.amplitude_factor * rot,
                amplitude_factor=base.amplitude_factor,
                phase_factor=phase)
    return out


def landau_gauge_function(model: ModelSpec) -> Dict[Site, float]:
    """The chi field that maps the direct construction onto the Landau gauge."""
    r_phi1 = model.drive.r * model.drive.phi1
    return {s: 0.5 * r_phi1 * s[0] ** 2 for s in model.lattice.sites()}


def diagonal_coupling_report(dressed: Mapping, lattice: LatticeSpec,
                             flavor: str = DEFAULT_FLAVOR,
                             threshold: float = 0.05) -> Dict[str, float]:
    """Strength of diagonal (two-axis) links relative to the strongest edge.

    Square-loop interference statements assume negligible diagonal tunneling;
    this reports the residual so callers can tell when that assumption breaks.
    """
    edge_max = 0.0
    diag_max = 0.0
    for (i, j, f), entry in dressed.items():
        if f != flavor:
            continue
        v = abs(entry.value if isinstance(entry, DressedCoupling) else complex(entry))
        if i[0] != j[0] and i[1] != j[1]:
            diag_max = max(diag_max, v)
        else:
            edge_max = max(edge_max, v)
    ratio = diag_max / edge_max if edge_max > 0 else 0.0
    return {"max_edge": edge_max, "max_diagonal": diag_max, "ratio": ratio,
            "negligible": float(ratio < threshold)}


def flux_map_to_json(flux_map: Mapping[Site, float], path: Optional[str] = None) -> str:
    payload = {f"{p[0]},{p[1]}": float(v) for p, v in flux_map.items()}
    text = json.dumps(payload, sort_keys=True, indent=1)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def flux_map_ascii(flux_map: Mapping[Site, float], lattice: LatticeSpec) -> str:
    """Terminal rendering of a flux map, one cell per plaquette (top row first)."""
    l1, l2 = lattice.dims
    rows = []
    for p2 in reversed(range(max(l2 - 1, 0))):
        cells = []
        for p1 in range(max(l1 - 1, 0)):
            v = flux_map.get((p1, p2))
            if v is None:
                cells.append("   .  ")
            elif abs(v) < 1e-9:
                cells.append("   0  ")
            elif abs(abs(v) - math.pi) < 1e-9:
                cells.append("  pi  " if v > 0 else " -pi  ")
            else:
                cells.append(f"{v / math.pi:+5.2f}p")
        rows.append("".join(cells))
    return "\n".join(rows)
