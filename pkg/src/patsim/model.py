"""Lattice geometry, drive parameters, and the driven-model specification.

Units: every energy is expressed as a multiple of a reference frequency
``omega`` that is set to 1 internally; times are in units of 1/omega.
Sites are integer pairs ``(i1, i2)`` with ``i1`` the coordinate along the
gradient axis; a 1D chain is a lattice with ``L2 = 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple, Union

Site = Tuple[int, int]

DEFAULT_FLAVOR = "z"


class Mode(enum.Enum):
    """Dressing rule selected by the model (one rule per mode)."""

    PLAIN_PAT = "PlainPAT"
    SPIN_BOND_DISORDER = "SpinBondDisorder"
    SPIN_SITE_DISORDER = "SpinSiteDisorder"
    SPIN_FLUX_DECORATION = "SpinFluxDecoration"
    NON_ABELIAN = "NonAbelian"


SPIN_MODES = (Mode.SPIN_BOND_DISORDER, Mode.SPIN_SITE_DISORDER, Mode.SPIN_FLUX_DECORATION)


def site_key(site: Site) -> Tuple[int, int]:
    """Total-order key: i > j iff i1 > j1, or i1 = j1 and i2 > j2."""
    return (site[0], site[1])


def site_gt(i: Site, j: Site) -> bool:
    return site_key(i) > site_key(j)


def wrap_angle(x: float) -> float:
    """Reduce an angle to the branch (-pi, pi]."""
    y = math.fmod(x, 2.0 * math.pi)
    if y <= -math.pi:
        y += 2.0 * math.pi
    elif y > math.pi:
        y -= 2.0 * math.pi
    return y


@dataclass(frozen=True)
class Dipolar:
    """Distance-law couplings J(i,j) = j0 * (d_min/|r_i - r_j|)**3.

    Couplings between sites farther apart than ``cutoff_range`` nearest-neighbor
    distances are zero.  The default cutoff keeps up to third neighbors.
    """

    j0: complex
    cutoff_range: int = 3


@dataclass(frozen=True)
class ExplicitMatrix:
    """Explicit bare couplings keyed by ordered site pair (i > j).

    Values may be complex; per-flavor values use a ``{flavor: value}`` mapping.
    Pairs given against the ordering are folded onto their conjugate.
    """

    couplings: Mapping[Tuple[Site, Site], Union[complex, Mapping[str, complex]]]

    def normalized(self, flavors: Sequence[str]) -> Dict[Tuple[Site, Site, str], complex]:
        out: Dict[Tuple[Site, Site, str], complex] = {}
        for (a, b), val in self.couplings.items():
            a, b = tuple(a), tuple(b)
            if a == b:
                raise ValueError(f"self-coupling on site {a} is not allowed")
            if site_gt(a, b):
                i, j, conj = a, b, False
            else:
                i, j, conj = b, a, True
            per_flavor = val if isinstance(val, Mapping) else {f: val for f in flavors}
            for f, v in per_flavor.items():
                if f not in flavors:
                    raise ValueError(f"coupling flavor {f!r} not among declared flavors {flavors}")
                v = complex(v)
                if conj:
                    v = v.conjugate()
                key = (i, j, f)
                if key in out and out[key] != v:
                    raise ValueError(f"conflicting couplings for pair {i}>{j}, flavor {f!r}")
                out[key] = v
        return out


CouplingLaw = Union[Dipolar, ExplicitMatrix]


@dataclass(frozen=True)
class LatticeSpec:
    """Open-boundary rectangular lattice with a bare coupling law."""

    dims: Tuple[int, int]
    spacings: Tuple[float, float] = (1.0, 1.0)
    coupling_law: CouplingLaw = Dipolar(j0=0.0)

    def __post_init__(self):
        l1, l2 = self.dims
        if l1 < 1 or l2 < 1:
            raise ValueError(f"lattice dims must be >= 1, got {self.dims}")
        if min(self.spacings) <= 0:
            raise ValueError("lattice spacings must be positive")

    @property
    def n_sites(self) -> int:
        return self.dims[0] * self.dims[1]

    def sites(self) -> List[Site]:
        """All sites in ascending site order."""
        return [(i1, i2) for i1 in range(self.dims[0]) for i2 in range(self.dims[1])]

    def position(self, site: Site) -> Tuple[float, float]:
        return (site[0] * self.spacings[0], site[1] * self.spacings[1])

    def distance(self, i: Site, j: Site) -> float:
        xi, yi = self.position(i)
        xj, yj = self.position(j)
        return math.hypot(xi - xj, yi - yj)

    def bare_coupling(self, i: Site, j: Site, flavor: str = DEFAULT_FLAVOR) -> complex:
        """Bare J_t between sites i and j (Hermitian: swap conjugates)."""
        if i == j:
            return 0.0
        if isinstance(self.coupling_law, Dipolar):
            law = self.coupling_law
            d_min = min(self.spacings)
            dist = self.distance(i, j)
            if dist > law.cutoff_range * d_min * (1.0 + 1e-12):
                return 0.0
            return complex(law.j0) * (d_min / dist) ** 3
        table = self.coupling_law.normalized(self.flavors_hint())
        if site_gt(i, j):
            return table.get((i, j, flavor), 0.0)
        return table.get((j, i, flavor), complex(0.0)).conjugate()

    def flavors_hint(self) -> Tuple[str, ...]:
        # Explicit tables may carry per-flavor values; collect their labels.
        if isinstance(self.coupling_law, ExplicitMatrix):
            labels = set()
            for val in self.coupling_law.couplings.values():
                if isinstance(val, Mapping):
                    labels.update(val.keys())
            if labels:
                return tuple(sorted(labels))
        return (DEFAULT_FLAVOR,)


@dataclass(frozen=True)
class DriveSpec:
    """Gradient plus periodic-modulation parameters.

    ``delta_omega`` and ``eta_d`` are per-flavor maps; the drive phase at site
    i is phi1*i1 + phi2*i2.  When a flavor carries a nonzero gradient and a
    nonzero drive, the declared resonance omega_d * r = |delta_omega| must hold.
    """

    delta_omega: Mapping[str, float]
    eta_d: Mapping[str, float]
    omega_d: float
    phi1: float = 0.0
    phi2: float = 0.0
    r: int = 1

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"photon number r must be a positive integer, got {self.r}")
        if self.omega_d < 0:
            raise ValueError("omega_d must be non-negative")

    @classmethod
    def uniform(cls, delta_omega: float, eta_d: float, omega_d: float,
                phi1: float = 0.0, phi2: float = 0.0, r: int = 1,
                flavors: Sequence[str] = (DEFAULT_FLAVOR,)) -> "DriveSpec":
        return cls(delta_omega={f: delta_omega for f in flavors},
                   eta_d={f: eta_d for f in flavors},
                   omega_d=omega_d, phi1=phi1, phi2=phi2, r=r)

    def gradient(self, flavor: str) -> float:
        return float(self.delta_omega.get(flavor, 0.0))

    def drive_index(self, flavor: str) -> float:
        return float(self.eta_d.get(flavor, 0.0))


def phase_at_site(drive: DriveSpec, site: Site, wrapped: bool = False) -> float:
    """Site-dependent drive phase phi1*i1 + phi2*i2 (wrap only for display)."""
    phi = drive.phi1 * site[0] + drive.phi2 * site[1]
    return wrap_angle(phi) if wrapped else phi


class SpinConfiguration:
    """Frozen classical spin pattern sigma[site] in {+1, -1}."""

    def __init__(self, values: Mapping[Site, int]):
        vals = {tuple(s): int(v) for s, v in values.items()}
        for s, v in vals.items():
            if v not in (1, -1):
                raise ValueError(f"spin at {s} must be +1 or -1, got {v}")
        self._values = vals

    def __getitem__(self, site: Site) -> int:
        return self._values[tuple(site)]

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, site: Site) -> bool:
        return tuple(site) in self._values

    def __eq__(self, other) -> bool:
        return isinstance(other, SpinConfiguration) and self._values == other._values

    def __hash__(self):
        return hash(tuple(sorted(self._values.items())))

    def __repr__(self):
        ups = sum(1 for v in self._values.values() if v == 1)
        return f"SpinConfiguration({ups} up / {len(self) - ups} down)"

    def items(self):
        return self._values.items()

    def flipped(self) -> "SpinConfiguration":
        return SpinConfiguration({s: -v for s, v in self._values.items()})

    def as_tuple(self, lattice: LatticeSpec) -> Tuple[int, ...]:
        return tuple(self._values[s] for s in lattice.sites())

    def validate_for(self, lattice: LatticeSpec) -> None:
        missing = [s for s in lattice.sites() if tuple(s) not in self._values]
        if missing:
            raise ValueError(f"spin configuration missing sites {missing}")

    @classmethod
    def uniform(cls, lattice: LatticeSpec, value: int = 1) -> "SpinConfiguration":
        return cls({s: value for s in lattice.sites()})

    @classmethod
    def from_values(cls, lattice: LatticeSpec, values: Sequence[int]) -> "SpinConfiguration":
        sites = lattice.sites()
        if len(values) != len(sites):
            raise ValueError(f"need {len(sites)} spins, got {len(values)}")
        return cls(dict(zip(sites, values)))

    @classmethod
    def from_ascii(cls, lattice: LatticeSpec, text: str) -> "SpinConfiguration":
        """Parse a grid of +/- characters; the first row is the top (largest i2)."""
        rows = [row.strip() for row in text.strip().splitlines() if row.strip()]
        l1, l2 = lattice.dims
        if len(rows) != l2:
            raise ValueError(f"expected {l2} rows of spins, got {len(rows)}")
        values: Dict[Site, int] = {}
        for row_idx, row in enumerate(rows):
            cells = row.split() if " " in row else list(row)
            if len(cells) != l1:
                raise ValueError(f"row {row_idx}: expected {l1} spins, got {len(cells)}")
            i2 = l2 - 1 - row_idx
            for i1, c in enumerate(cells):
                if c not in "+-":
                    raise ValueError(f"row {row_idx}: spin characters must be '+' or '-', got {c!r}")
                values[(i1, i2)] = 1 if c == "+" else -1
        return cls(values)

    def to_ascii(self, lattice: LatticeSpec) -> str:
        l1, l2 = lattice.dims
        rows = []
        for i2 in reversed(range(l2)):
            rows.append("".join("+" if self._values[(i1, i2)] == 1 else "-" for i1 in range(l1)))
        return "\n".join(rows)


@dataclass(frozen=True)
class ModelSpec:
    """Complete driven-model specification shared by all engines.

    ``onsite_interactions`` is the coefficient U of the normal-ordered quartic
    a+ a+ a a; it may be a scalar (every site, every flavor pair), a
    ``{(flavor, flavor'): U}`` map, or ``{site: {(flavor, flavor'): U}}``.
    ``site_disorder_strength`` is the per-flavor Stark-shift scale eps entering
    the +eps*sigma_i*n term of the spin-site-disorder mode.
    """

    lattice: LatticeSpec
    drive: DriveSpec
    flavors: Tuple[str, ...] = (DEFAULT_FLAVOR,)
    onsite_interactions: Union[float, Mapping] = 0.0
    site_disorder_strength: Mapping[str, float] = field(default_factory=dict)
    mode: Mode = Mode.PLAIN_PAT

    def __post_init__(self):
        if not self.flavors:
            raise ValueError("at least one flavor must be declared")
        if len(set(self.flavors)) != len(self.flavors):
            raise ValueError("flavor labels must be unique")
        self.validate()

    # -- parameter access -------------------------------------------------

    def interaction(self, site: Site, f1: str, f2: str) -> float:
        u = self.onsite_interactions
        if isinstance(u, Mapping):
            if tuple(site) in u or site in u:
                table = u.get(tuple(site), u.get(site, {}))
                return float(table.get((f1, f2), table.get((f2, f1), 0.0)))
            return float(u.get((f1, f2), u.get((f2, f1), 0.0)))
        return float(u)

    def disorder_strength(self, flavor: str) -> float:
        return float(self.site_disorder_strength.get(flavor, 0.0))

    def bare_coupling(self, i: Site, j: Site, flavor: str) -> complex:
        return self.lattice.bare_coupling(i, j, flavor)

    def requires_spins(self) -> bool:
        return self.mode in SPIN_MODES

    def validate(self) -> None:
        for f in self.flavors:
            grad = self.drive.gradient(f)
            eta = self.drive.drive_index(f)
            if self.mode == Mode.SPIN_FLUX_DECORATION:
                if grad != 0.0:
                    raise ValueError("SpinFluxDecoration requires a vanishing gradient")
                eps = self.disorder_strength(f)
                if eta != 0.0 and eps != 0.0:
                    target = 2.0 * abs(eps) / self.drive.r
                    if not math.isclose(self.drive.omega_d, target, rel_tol=1e-9, abs_tol=1e-15):
                        raise ValueError(
                            f"SpinFluxDecoration resonance omega_d = 2*eps/r violated for flavor {f!r}: "
                            f"omega_d={self.drive.omega_d}, 2*eps/r={target}")
                continue
            if grad != 0.0 and eta != 0.0:
                target = abs(grad) / self.drive.r
                if not math.isclose(self.drive.omega_d, target, rel_tol=1e-9, abs_tol=1e-15):
                    raise ValueError(
                        f"gradient resonance omega_d*r = |delta_omega| violated for flavor {f!r}: "
                        f"omega_d={self.drive.omega_d}, |delta_omega|/r={target}")
        if self.mode == Mode.NON_ABELIAN and len(self.flavors) < 2:
            raise ValueError("NonAbelian mode needs two flavors")
        if isinstance(self.onsite_interactions, Mapping):
            for key, val in self.onsite_interactions.items():
                if isinstance(val, Mapping):
                    _check_symmetric_u(val)
            if all(not isinstance(v, Mapping) for v in self.onsite_interactions.values()):
                _check_symmetric_u(self.onsite_interactions)


def _check_symmetric_u(table: Mapping) -> None:
    for (f1, f2), v in table.items():
        other = table.get((f2, f1))
        if other is not None and not math.isclose(float(other), float(v), rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(f"onsite interaction U must be symmetric in flavors, mismatch at {(f1, f2)}")


def enumerate_ordered_pairs(lattice: LatticeSpec, flavor: str = DEFAULT_FLAVOR
                            ) -> List[Tuple[Site, Site, complex]]:
    """Every pair (i, j) with i > j and nonzero bare coupling, with its J_t.

    Pairs appear once, in ascending order of (j, i); no self-pairs.
    """
    sites = lattice.sites()
    if not sites:
        raise ValueError("lattice has no sites")
    out: List[Tuple[Site, Site, complex]] = []
    for a_idx in range(len(sites)):
        for b_idx in range(a_idx + 1, len(sites)):
            j, i = sites[a_idx], sites[b_idx]  # site order is ascending
            val = lattice.bare_coupling(i, j, flavor)
            if val != 0.0:
                out.append((i, j, val))
    return out


# -- configuration serialization ------------------------------------------

def model_to_config(model: ModelSpec) -> Dict:
    """Plain key-value tree mirroring the ModelSpec fields."""
    lat = model.lattice
    if isinstance(lat.coupling_law, Dipolar):
        law: Dict = {"law": "dipolar", "j0": _num(lat.coupling_law.j0),
                     "cutoff_range": lat.coupling_law.cutoff_range}
    else:
        pairs = []
        for (a, b), val in lat.coupling_law.couplings.items():
            entry: Dict = {"i": list(a), "j": list(b)}
            if isinstance(val, Mapping):
                entry["j_t"] = {f: _num(v) for f, v in val.items()}
            else:
                entry["j_t"] = _num(val)
            pairs.append(entry)
        law = {"law": "explicit", "pairs": pairs}
    cfg: Dict = {
        "mode": model.mode.value,
        "flavors": list(model.flavors),
        "lattice": {
            "dims": list(lat.dims),
            "spacings": list(lat.spacings),
            "coupling_law": law,
        },
        "drive": {
            "delta_omega": {f: model.drive.gradient(f) for f in model.flavors},
            "eta_d": {f: model.drive.drive_index(f) for f in model.flavors},
            "omega_d": model.drive.omega_d,
            "phi1": model.drive.phi1,
            "phi2": model.drive.phi2,
            "r": model.drive.r,
        },
        "onsite_interactions": _u_to_config(model.onsite_interactions),
        "site_disorder_strength": dict(model.site_disorder_strength),
    }
    return cfg


def model_from_config(cfg: Mapping) -> ModelSpec:
    try:
        mode = Mode(cfg.get("mode", "PlainPAT"))
    except ValueError:
        raise ValueError(f"mode: unknown mode {cfg.get('mode')!r}; "
                         f"expected one of {[m.value for m in Mode]}")
    flavors = tuple(cfg.get("flavors", [DEFAULT_FLAVOR]))
    lat_cfg = cfg["lattice"]
    law_cfg = lat_cfg["coupling_law"]
    if law_cfg["law"] == "dipolar":
        law: CouplingLaw = Dipolar(j0=_num_in(law_cfg["j0"]),
                                   cutoff_range=int(law_cfg.get("cutoff_range", 3)))
    elif law_cfg["law"] == "explicit":
        couplings = {}
        for entry in law_cfg["pairs"]:
            jt = entry["j_t"]
            val = ({f: _num_in(v) for f, v in jt.items()} if isinstance(jt, Mapping)
                   else _num_in(jt))
            couplings[(tuple(entry["i"]), tuple(entry["j"]))] = val
        law = ExplicitMatrix(couplings=couplings)
    else:
        raise ValueError(f"lattice.coupling_law.law: unknown law {law_cfg['law']!r}")
    lattice = LatticeSpec(dims=tuple(lat_cfg["dims"]),
                          spacings=tuple(lat_cfg.get("spacings", (1.0, 1.0))),
                          coupling_law=law)
    d = cfg["drive"]
    delta_omega = d.get("delta_omega", 0.0)
    eta_d = d.get("eta_d", 0.0)
    if not isinstance(delta_omega, Mapping):
        delta_omega = {f: float(delta_omega) for f in flavors}
    if not isinstance(eta_d, Mapping):
        eta_d = {f: float(eta_d) for f in flavors}
    drive = DriveSpec(delta_omega=dict(delta_omega), eta_d=dict(eta_d),
                      omega_d=float(d["omega_d"]), phi1=float(d.get("phi1", 0.0)),
                      phi2=float(d.get("phi2", 0.0)), r=int(d.get("r", 1)))
    return ModelSpec(lattice=lattice, drive=drive, flavors=flavors,
                     onsite_interactions=_u_from_config(cfg.get("onsite_interactions", 0.0)),
                     site_disorder_strength=dict(cfg.get("site_disorder_strength", {})),
                     mode=mode)


def save_model(model: ModelSpec, path: str) -> None:
    """Write the model as a TOML file (one top-level key per field)."""
    cfg = model_to_config(model)
    lines = [f"{key} = {_toml_value(val)}" for key, val in cfg.items()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> ModelSpec:
    try:
        import tomllib
    except ModuleNotFoundError:      # Python 3.10
        import tomli as tomllib
    with open(path, "rb") as fh:
        return model_from_config(tomllib.load(fh))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, Mapping):
        inner = ", ".join(f"{_toml_key(k)} = {_toml_value(x)}" for k, x in v.items())
        return "{ " + inner + " }" if inner else "{ }"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__} to TOML")


def _toml_key(k: str) -> str:
    k = str(k)
    if k and all(c.isalnum() or c in "-_" for c in k):
        return k
    return _toml_value(k)


def _num(v) -> Union[float, List[float]]:
    v = complex(v)
    if v.imag == 0.0:
        return v.real
    return [v.real, v.imag]


def _num_in(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _u_to_config(u):
    if isinstance(u, Mapping):
        out = {}
        for key, val in u.items():
            if isinstance(val, Mapping):
                out[",".join(str(c) for c in key)] = {"|".join(k): float(v) for k, v in val.items()}
            else:
                out["|".join(key)] = float(val)
        return out
    return float(u)


def _u_from_config(u):
    if isinstance(u, Mapping):
        out = {}
        for key, val in u.items():
            if isinstance(val, Mapping):
                site = tuple(int(c) for c in key.split(","))
                out[site] = {tuple(k.split("|")): float(v) for k, v in val.items()}
            else:
                out[tuple(key.split("|"))] = float(val)
        return out
    return float(u)
