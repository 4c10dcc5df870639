"""Trapped-ion hardware parameters mapped onto the abstract driven model.

Inputs follow the experimental convention: frequencies in Hz (the /2pi
values), lengths in meters, mass in atomic mass units.  The mapper emits a
ModelSpec in model units (energies as multiples of the simulated axis' trap
frequency) and a constraint report that checks every inequality assumed in
the derivation, with "much smaller than" operationalized as a ratio <= 0.1
by default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .model import (DriveSpec, ExplicitMatrix, LatticeSpec, Mode, ModelSpec,
                    Site)

# CODATA values
ELEMENTARY_CHARGE = 1.602176634e-19       # C
COULOMB_CONSTANT = 8.9875517923e9         # N m^2 / C^2
ATOMIC_MASS_KG = 1.66053906660e-27        # kg

DEFAULT_RATIO_THRESHOLD = 0.1

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class IonArrayParams:
    """Microtrap-array and laser-beam parameters (Hz / m / amu units)."""

    dims: Tuple[int, int]
    spacings: Tuple[float, float]                  # d1, d2 [m]
    trap_frequencies: Mapping[str, float]          # omega_alpha / 2pi [Hz]
    mass_amu: float
    gradient: Mapping[str, float] = field(default_factory=dict)   # dOmega/2pi [Hz]
    laser_beatnote: float = 0.0                    # omega_L / 2pi [Hz]
    rabi: float = 0.0                              # Omega_L / 2pi [Hz]
    lamb_dicke: Mapping[str, float] = field(default_factory=dict)
    delta_k: Tuple[float, float] = (0.0, 0.0)      # drive-beam dk . (e1, e2) [rad/m]
    standing_wave_rabi: float = 0.0                # Omega~_L / 2pi [Hz]
    standing_wave_lamb_dicke: Mapping[str, float] = field(default_factory=dict)
    standing_wave_delta_k: Tuple[float, float] = (0.0, 0.0)
    sideband_rabi: float = 0.0                     # Omega-_L / 2pi [Hz]
    sideband_detuning: float = 0.0                 # delta-_L / 2pi [Hz]
    r: int = 1
    axis: str = "z"                                # simulated vibrational axis
    charge: int = 1
    cutoff_range: int = 3

    def __post_init__(self):
        for a, f in self.trap_frequencies.items():
            if a not in AXES:
                raise ValueError(f"unknown axis {a!r}")
            if f <= 0:
                raise ValueError(f"trap frequency of axis {a!r} must be positive")
        for a, eta in self.lamb_dicke.items():
            if not 0 <= eta < 1:
                raise ValueError(f"Lamb-Dicke parameter of axis {a!r} must lie in [0, 1)")
        if self.axis not in self.trap_frequencies:
            raise ValueError(f"no trap frequency declared for simulated axis {self.axis!r}")

    def mass_kg(self) -> float:
        return self.mass_amu * ATOMIC_MASS_KG

    def eta(self, axis: str) -> float:
        return float(self.lamb_dicke.get(axis, 0.0))

    def grad(self, axis: str) -> float:
        return float(self.gradient.get(axis, 0.0))

    def sites(self) -> List[Site]:
        return [(i1, i2) for i1 in range(self.dims[0]) for i2 in range(self.dims[1])]

    def position(self, site: Site) -> Tuple[float, float]:
        return (site[0] * self.spacings[0], site[1] * self.spacings[1])


def _coulomb_spring(params: IonArrayParams, i: Site, j: Site, axis: str) -> float:
    """Second derivative V_c;ij^(axis,axis) of the Coulomb energy [kg/s^2]."""
    xi, yi = params.position(i)
    xj, yj = params.position(j)
    rx, ry = xi - xj, yi - yj
    dist = math.hypot(rx, ry)
    if dist == 0.0:
        raise ValueError(f"sites {i} and {j} coincide")
    e2k = COULOMB_CONSTANT * (params.charge * ELEMENTARY_CHARGE) ** 2
    r_axis = {"x": rx, "y": ry, "z": 0.0}[axis]
    return 0.5 * e2k * (1.0 / dist ** 3 - 3.0 * r_axis ** 2 / dist ** 5)


def _site_trap_omega(params: IonArrayParams, site: Site, axis: str) -> float:
    """Angular trap frequency omega_alpha,i = omega_alpha + dOmega_alpha * i1."""
    f = params.trap_frequencies[axis] + params.grad(axis) * site[0]
    return 2.0 * math.pi * f


def coulomb_coupling(params: IonArrayParams, i: Site, j: Site, axis: str) -> float:
    """Phonon exchange rate J_c;ij^axis / 2pi in Hz.

    The dipolar 1/d^3 law carries the axis anisotropy of the Coulomb tensor:
    positive for the transverse axis, -2x that value for an in-plane axis
    along the bond.
    """
    if tuple(i) == tuple(j):
        raise ValueError("coulomb_coupling needs two distinct sites")
    spring = _coulomb_spring(params, i, j, axis)
    m = params.mass_kg()
    w_i = _site_trap_omega(params, i, axis)
    w_j = _site_trap_omega(params, j, axis)
    j_rad = spring / (m * math.sqrt(w_i * w_j))       # J^alpha = 2 * V/(2m sqrt(w w))
    return j_rad / (2.0 * math.pi)


def corrected_trap_frequency(params: IonArrayParams, site: Site, axis: str) -> float:
    """Trap frequency including the electrostatic self term, in Hz.

    The shift is negligible for spacings above ~10 um; the model uses the
    uncorrected gradient and this value is reported for inspection only.
    """
    e2k = COULOMB_CONSTANT * (params.charge * ELEMENTARY_CHARGE) ** 2
    self_spring = 0.0
    for other in params.sites():
        if tuple(other) == tuple(site):
            continue
        self_spring -= _coulomb_spring(params, site, other, axis)
    w = _site_trap_omega(params, site, axis)
    w_corr = math.sqrt(max(w * w + self_spring / (2.0 * params.mass_kg()), 0.0))
    return w_corr / (2.0 * math.pi)


def _coupling_table(params: IonArrayParams, axes: Sequence[str],
                    omega_ref: float) -> ExplicitMatrix:
    d_min = min(params.spacings)
    couplings: Dict[Tuple[Site, Site], Dict[str, float]] = {}
    sites = params.sites()
    for a_idx in range(len(sites)):
        for b_idx in range(a_idx + 1, len(sites)):
            j, i = sites[a_idx], sites[b_idx]
            xi, yi = params.position(i)
            xj, yj = params.position(j)
            if math.hypot(xi - xj, yi - yj) > params.cutoff_range * d_min * (1 + 1e-12):
                continue
            per_flavor = {}
            for axis in axes:
                j_hz = coulomb_coupling(params, i, j, axis)
                per_flavor[axis] = 2.0 * math.pi * j_hz / omega_ref
            couplings[(i, j)] = per_flavor
    return ExplicitMatrix(couplings)


def map_to_model(params: IonArrayParams, mode: Mode = Mode.PLAIN_PAT,
                 axes: Optional[Sequence[str]] = None) -> ModelSpec:
    """Emit the complete ModelSpec payload for the chosen vibrational axes.

    Model units: energies in multiples of the first axis' trap frequency.
    The driving path needs a nonzero laser beatnote (omega_d = omega_L,
    eta_d = -Omega_L eta^2 / omega_L, phi_a = -dk.e_a d_a); the standing wave
    feeds the on-site interactions and the sideband pair the Stark-shift
    disorder scale.
    """
    axes = tuple(axes) if axes is not None else (params.axis,)
    for a in axes:
        if a not in params.trap_frequencies:
            raise ValueError(f"no trap frequency declared for axis {a!r}")
    omega_ref = 2.0 * math.pi * params.trap_frequencies[axes[0]]

    if params.rabi != 0.0 and params.laser_beatnote == 0.0:
        raise ValueError("the driving mapping needs a nonzero laser beatnote; "
                         "a zero-beatnote standing wave only produces interactions")

    delta_omega = {a: 2.0 * math.pi * params.grad(a) / omega_ref for a in axes}
    if params.laser_beatnote > 0.0:
        omega_d = 2.0 * math.pi * params.laser_beatnote / omega_ref
        eta_d = {a: -params.rabi * params.eta(a) ** 2 / params.laser_beatnote
                 for a in axes}
    else:
        omega_d = 0.0
        eta_d = {a: 0.0 for a in axes}

    for a in axes:
        grad_hz = abs(params.grad(a))
        if grad_hz > 0 and params.laser_beatnote > 0 and eta_d[a] != 0.0:
            if not math.isclose(params.laser_beatnote * params.r, grad_hz, rel_tol=1e-9):
                raise ValueError(
                    f"resonance omega_L * r = |dOmega| violated for axis {a!r}: "
                    f"omega_L*r = {params.laser_beatnote * params.r} Hz, "
                    f"|dOmega| = {grad_hz} Hz")

    phi1 = -params.delta_k[0] * params.spacings[0]
    phi2 = -params.delta_k[1] * params.spacings[1]
    drive = DriveSpec(delta_omega=delta_omega, eta_d=eta_d, omega_d=omega_d,
                      phi1=phi1, phi2=phi2, r=params.r)

    lattice = LatticeSpec(dims=params.dims, spacings=params.spacings,
                          coupling_law=_coupling_table(params, axes, omega_ref))

    interactions: "float | Dict" = 0.0
    if params.standing_wave_rabi != 0.0:
        interactions = {}
        for site in params.sites():
            x, y = params.position(site)
            phase = (params.standing_wave_delta_k[0] * x
                     + params.standing_wave_delta_k[1] * y)
            table = {}
            for a1 in axes:
                for a2 in axes:
                    u_hz = (0.5 * params.standing_wave_rabi
                            * params.standing_wave_lamb_dicke.get(a1, 0.0) ** 2
                            * params.standing_wave_lamb_dicke.get(a2, 0.0) ** 2
                            * math.cos(phase))
                    table[(a1, a2)] = 2.0 * math.pi * u_hz / omega_ref
            interactions[site] = table

    disorder = {}
    if params.sideband_rabi != 0.0:
        if params.sideband_detuning == 0.0:
            raise ValueError("the sideband disorder path needs a nonzero detuning")
        for a in axes:
            eps_hz = (params.sideband_rabi ** 2 * params.eta(a) ** 2
                      / (4.0 * params.sideband_detuning))
            disorder[a] = 2.0 * math.pi * eps_hz / omega_ref

    return ModelSpec(lattice=lattice, drive=drive, flavors=axes,
                     onsite_interactions=interactions,
                     site_disorder_strength=disorder, mode=mode)


# -- constraint checking ----------------------------------------------------

@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    description: str
    lhs: float       # Hz
    rhs: float       # Hz
    ratio: float
    passed: bool
    margin: float    # threshold - ratio

    def row(self) -> Tuple[str, str, str, str, str, str]:
        return (self.name, f"{self.lhs:.6g}", f"{self.rhs:.6g}",
                f"{self.ratio:.4g}", "pass" if self.passed else "FAIL",
                f"{self.margin:+.4g}")


CONSTRAINT_NAMES = (
    "tunneling_vs_gradient",
    "drive_rwa",
    "slow_frequencies",
    "crystal_stability",
    "drive_taylor_tail",
    "standing_wave_rwa",
    "standing_wave_quadratic",
    "sideband_perturbative",
    "site_disorder_weak",
)


@dataclass
class ConstraintReport:
    checks: List[ConstraintCheck]
    threshold: float
    gradient_extent: Optional[int]
    frequency_correction_rel: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_table(self) -> str:
        header = ("constraint", "lhs [Hz]", "rhs [Hz]", "ratio", "status", "margin")
        rows = [header] + [c.row() for c in self.checks]
        widths = [max(len(r[k]) for r in rows) for k in range(len(header))]
        lines = ["  ".join(cell.ljust(widths[k]) for k, cell in enumerate(row))
                 for row in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        extent = "unbounded" if self.gradient_extent is None else str(self.gradient_extent)
        lines.append(f"gradient extent (sites with dOmega*i1 <= omega/2): {extent}")
        lines.append(f"electrostatic trap-frequency correction: "
                     f"{self.frequency_correction_rel:.3g} relative")
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'} "
                     f"(threshold {self.threshold})")
        return "\n".join(lines)

    def to_json(self, path: Optional[str] = None) -> str:
        payload = {
            "threshold": self.threshold,
            "passed": self.passed,
            "gradient_extent": self.gradient_extent,
            "frequency_correction_rel": self.frequency_correction_rel,
            "checks": [{"name": c.name, "description": c.description,
                        "lhs_hz": c.lhs, "rhs_hz": c.rhs, "ratio": c.ratio,
                        "passed": c.passed, "margin": c.margin}
                       for c in self.checks],
        }
        text = json.dumps(payload, sort_keys=True, indent=1)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _ratio_check(name: str, description: str, lhs: float, rhs: float,
                 threshold: float) -> ConstraintCheck:
    if rhs <= 0:
        ratio = math.inf if lhs > 0 else 0.0
    else:
        ratio = lhs / rhs
    return ConstraintCheck(name=name, description=description, lhs=lhs, rhs=rhs,
                           ratio=ratio, passed=ratio <= threshold,
                           margin=threshold - ratio)


def check_constraints(params: IonArrayParams,
                      threshold: float = DEFAULT_RATIO_THRESHOLD) -> ConstraintReport:
    """Evaluate every derivation inequality as a ratio; never raises on physics.

    A configuration passes when each of the nine ratios stays at or below the
    threshold (0.1 by default, i.e. an order of magnitude).  Also reports the
    scalability bound: the largest gradient extent compatible with the trap.
    """
    axis = params.axis
    f_trap = params.trap_frequencies[axis]
    grad = abs(params.grad(axis))
    eta = params.eta(axis)
    splittings = [abs(params.trap_frequencies[a] - params.trap_frequencies[b])
                  for a in params.trap_frequencies for b in params.trap_frequencies
                  if a < b]
    slow_rhs = min([f_trap] + splittings) if splittings else f_trap

    if params.dims[0] > 1 or params.dims[1] > 1:
        nn_pairs = []
        sites = params.sites()
        d_min = min(params.spacings)
        for a_idx in range(len(sites)):
            for b_idx in range(a_idx + 1, len(sites)):
                if math.isclose(
                        math.hypot(*(p - q for p, q in zip(params.position(sites[b_idx]),
                                                           params.position(sites[a_idx])))),
                        d_min, rel_tol=1e-9):
                    nn_pairs.append(abs(coulomb_coupling(params, sites[b_idx],
                                                         sites[a_idx], axis)))
        j_nn = max(nn_pairs) if nn_pairs else 0.0
    else:
        j_nn = 0.0

    eta_d_omega_d = params.rabi * eta ** 2    # |eta_d * omega_d| in Hz
    eps_hz = 0.0
    if params.sideband_rabi != 0.0 and params.sideband_detuning != 0.0:
        eps_hz = params.sideband_rabi ** 2 * eta ** 2 / (4.0 * params.sideband_detuning)

    sw_eta = max([v for v in params.standing_wave_lamb_dicke.values()], default=0.0)

    checks = [
        _ratio_check("tunneling_vs_gradient",
                     "bare phonon tunneling far below the gradient",
                     j_nn, grad, threshold),
        _ratio_check("drive_rwa",
                     "drive-beam coupling slow against the trap frequency",
                     eta * params.rabi, f_trap, threshold),
        _ratio_check("slow_frequencies",
                     "gradient and beatnote below trap frequency and axis splittings",
                     max(grad, params.laser_beatnote), slow_rhs, threshold),
        _ratio_check("crystal_stability",
                     "gradient and drive amplitude preserve the crystal",
                     max(grad, abs(eta_d_omega_d)), f_trap, threshold),
        _ratio_check("drive_taylor_tail",
                     "higher Lamb-Dicke orders of the drive negligible",
                     params.rabi * eta ** 4, params.laser_beatnote, threshold),
        _ratio_check("standing_wave_rwa",
                     "standing-wave coupling slow against the trap frequency",
                     params.standing_wave_rabi * sw_eta, f_trap, threshold),
        _ratio_check("standing_wave_quadratic",
                     "standing-wave quadratic shift below the gradient",
                     params.standing_wave_rabi * sw_eta ** 2, grad, threshold),
        _ratio_check("sideband_perturbative",
                     "sideband coupling below its detuning",
                     params.sideband_rabi * eta, abs(params.sideband_detuning), threshold),
        _ratio_check("site_disorder_weak",
                     "Stark-shift disorder far below the gradient",
                     abs(eps_hz), grad, threshold),
    ]
    extent = None
    if grad > 0:
        extent = int(math.floor(f_trap / (2.0 * grad)))

    corner = (params.dims[0] // 2, params.dims[1] // 2)
    f_corr = corrected_trap_frequency(params, corner, axis)
    rel = abs(f_corr - (f_trap + params.grad(axis) * corner[0])) / f_trap

    return ConstraintReport(checks=checks, threshold=threshold,
                            gradient_extent=extent, frequency_correction_rel=rel)
