"""Scenario configs: TOML loading, schema validation, and object building.

A scenario is one task (evolve, compare, sweep, flux_map, decorate, or
constraints) plus the model/space/initial-state tree it needs.  Validation
errors carry the dotted path of the offending field.  An ``include`` list
merges shared parameter blocks (the including file wins key-by-key).
"""

from __future__ import annotations

import os

try:
    import tomllib
except ModuleNotFoundError:          # Python 3.10
    import tomli as tomllib

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

from .ensembles import SpinEnsemble, ensemble_from_product_state
from .fock import FockSpace, QuantumState, build_fock_space, single_particle_state, thermal_state
from .ionmap import IonArrayParams
from .model import LatticeSpec, ModelSpec, SpinConfiguration, model_from_config

TASKS = ("evolve", "compare", "sweep", "flux_map", "decorate", "constraints")
SWEEP_PARAMETERS = ("phi1", "phi2", "eta_d")
ENGINES = ("full", "effective", "both")


class ScenarioError(ValueError):
    """Config validation failure; the message names the offending field."""


def _fail(path: str, message: str) -> "ScenarioError":
    return ScenarioError(f"{path}: {message}")


def _get(cfg: Mapping, path: str, key: str, kind, required: bool = True, default=None):
    where = f"{path}.{key}" if path else key
    if key not in cfg:
        if required:
            raise _fail(where, "missing required field")
        return default
    val = cfg[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise _fail(where, f"expected a number, got {type(val).__name__}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise _fail(where, f"expected an integer, got {type(val).__name__}")
        return val
    if kind is str:
        if not isinstance(val, str):
            raise _fail(where, f"expected a string, got {type(val).__name__}")
        return val
    if kind is dict:
        if not isinstance(val, Mapping):
            raise _fail(where, f"expected a table, got {type(val).__name__}")
        return val
    if kind is list:
        if not isinstance(val, Sequence) or isinstance(val, str):
            raise _fail(where, f"expected an array, got {type(val).__name__}")
        return list(val)
    raise AssertionError(kind)


def load_toml(path: str) -> Dict[str, Any]:
    """Read a TOML file and resolve its include chain (depth-first merge)."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    includes = data.pop("include", [])
    if includes:
        merged: Dict[str, Any] = {}
        base = os.path.dirname(os.path.abspath(path))
        for inc in includes:
            merged = _deep_merge(merged, load_toml(os.path.join(base, inc)))
        data = _deep_merge(merged, data)
    return data


def _deep_merge(base: Mapping, override: Mapping) -> Dict[str, Any]:
    out = dict(base)
    for k, v in override.items():
        if k in out and isinstance(out[k], Mapping) and isinstance(v, Mapping):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class SweepSpec:
    parameter: str
    start: float
    stop: float
    points: int
    observable: str
    statistic: str = "max"          # max | min
    horizon: str = "fixed"          # fixed | dressed_period
    t_star: Optional[float] = None  # for fixed horizons
    samples: int = 400
    floor: float = 1e-2             # modulation floor capping dressed_period horizons


@dataclass
class Scenario:
    """Validated scenario, ready to run."""

    name: str
    task: str
    seed: int = 0
    engine: str = "both"
    model: Optional[ModelSpec] = None
    ions: Optional[IonArrayParams] = None
    n_trunc: int = 4
    sector: Optional[int] = None
    initial_kind: Optional[str] = None
    initial_site: Optional[Tuple[int, int]] = None
    initial_flavor: Optional[str] = None
    nbar: Dict = field(default_factory=dict)
    t_final: Optional[float] = None
    samples: int = 400
    sweep: Optional[SweepSpec] = None
    spins: Optional[SpinConfiguration] = None
    ensemble: Optional[SpinEnsemble] = None
    outputs: Dict[str, str] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)

    def build_space(self) -> FockSpace:
        return build_fock_space(self.model, self.n_trunc, self.sector)

    def build_initial(self, space: FockSpace) -> QuantumState:
        if self.initial_kind == "single_particle":
            flavor = self.initial_flavor or self.model.flavors[0]
            return single_particle_state(space, self.initial_site, flavor)
        if self.initial_kind == "thermal":
            nbar = {}
            for key, value in self.nbar.items():
                parts = key.split(",")
                if len(parts) == 2:
                    site = (int(parts[0]), int(parts[1]))
                    for f in self.model.flavors:
                        nbar[(site, f)] = float(value)
                elif len(parts) == 3:
                    nbar[((int(parts[0]), int(parts[1])), parts[2])] = float(value)
                else:
                    raise _fail("initial.nbar", f"bad mode key {key!r}; use 'i1,i2' or 'i1,i2,flavor'")
            return thermal_state(space, nbar)
        raise _fail("initial.kind", f"unknown kind {self.initial_kind!r}")


ALLOWED_TOP_KEYS = {"name", "task", "seed", "engine", "description", "model", "space",
                    "initial", "evolution", "sweep", "spins", "ensemble", "ions",
                    "output"}


def parse_scenario(cfg: Mapping[str, Any]) -> Scenario:
    unknown = set(cfg.keys()) - ALLOWED_TOP_KEYS
    if unknown:
        raise _fail(sorted(unknown)[0], "unknown top-level field")
    name = _get(cfg, "", "name", str)
    task = _get(cfg, "", "task", str)
    if task not in TASKS:
        raise _fail("task", f"unknown task {task!r}; expected one of {TASKS}")
    sc = Scenario(name=name, task=task,
                  seed=_get(cfg, "", "seed", int, required=False, default=0),
                  raw=dict(cfg))

    if task == "constraints":
        sc.ions = _parse_ions(_get(cfg, "", "ions", dict))
    else:
        model_cfg = _get(cfg, "", "model", dict)
        try:
            sc.model = model_from_config(model_cfg)
        except (KeyError, TypeError) as exc:
            raise _fail("model", f"malformed model block ({exc})")
        except ValueError as exc:
            raise _fail("model", str(exc))

    if task in ("evolve", "compare", "sweep"):
        space_cfg = _get(cfg, "", "space", dict)
        sc.n_trunc = _get(space_cfg, "space", "n_trunc", int)
        sc.sector = _get(space_cfg, "space", "sector", int, required=False)
        if sc.sector is not None and sc.sector < 0:
            sc.sector = None        # TOML has no null; -1 selects the full space
        init = _get(cfg, "", "initial", dict)
        sc.initial_kind = _get(init, "initial", "kind", str)
        if sc.initial_kind == "single_particle":
            site = _get(init, "initial", "site", list)
            sc.initial_site = (int(site[0]), int(site[1]))
            sc.initial_flavor = _get(init, "initial", "flavor", str, required=False)
        elif sc.initial_kind == "thermal":
            sc.nbar = dict(_get(init, "initial", "nbar", dict))
            if sc.sector is not None:
                raise _fail("space.sector", "thermal initial states need an unsectored space")
        else:
            raise _fail("initial.kind",
                        f"unknown kind {sc.initial_kind!r}; expected single_particle or thermal")

    if task in ("evolve", "compare"):
        evo = _get(cfg, "", "evolution", dict)
        sc.t_final = _get(evo, "evolution", "t_final", float)
        if sc.t_final <= 0:
            raise _fail("evolution.t_final", "must be positive")
        sc.samples = _get(evo, "evolution", "samples", int, required=False, default=400)
        sc.engine = _get(evo, "evolution", "engine", str, required=False, default="both")
        if sc.engine not in ENGINES:
            raise _fail("evolution.engine", f"expected one of {ENGINES}, got {sc.engine!r}")

    if task == "sweep":
        sw = _get(cfg, "", "sweep", dict)
        parameter = _get(sw, "sweep", "parameter", str)
        if parameter not in SWEEP_PARAMETERS:
            raise _fail("sweep.parameter",
                        f"expected one of {SWEEP_PARAMETERS}, got {parameter!r}")
        spec = SweepSpec(
            parameter=parameter,
            start=_get(sw, "sweep", "start", float),
            stop=_get(sw, "sweep", "stop", float),
            points=_get(sw, "sweep", "points", int),
            observable=_get(sw, "sweep", "observable", str),
            statistic=_get(sw, "sweep", "statistic", str, required=False, default="max"),
            horizon=_get(sw, "sweep", "horizon", str, required=False, default="fixed"),
            t_star=_get(sw, "sweep", "t_star", float, required=False),
            samples=_get(sw, "sweep", "samples", int, required=False, default=400),
            floor=_get(sw, "sweep", "floor", float, required=False, default=1e-2),
        )
        if spec.points < 2:
            raise _fail("sweep.points", "need at least 2 grid points")
        if spec.statistic not in ("max", "min"):
            raise _fail("sweep.statistic", f"expected max or min, got {spec.statistic!r}")
        if spec.horizon not in ("fixed", "dressed_period"):
            raise _fail("sweep.horizon",
                        f"expected fixed or dressed_period, got {spec.horizon!r}")
        if spec.horizon == "fixed" and spec.t_star is None:
            raise _fail("sweep.t_star", "a fixed horizon needs t_star")
        sc.sweep = spec

    if "spins" in cfg:
        spins_cfg = _get(cfg, "", "spins", dict)
        pattern = _get(spins_cfg, "spins", "pattern", str)
        try:
            sc.spins = SpinConfiguration.from_ascii(sc.model.lattice, pattern)
        except ValueError as exc:
            raise _fail("spins.pattern", str(exc))

    if "ensemble" in cfg:
        ens_cfg = _get(cfg, "", "ensemble", dict)
        sc.ensemble = _parse_ensemble(ens_cfg, sc.model.lattice)

    if sc.model is not None and sc.model.requires_spins() and task in (
            "evolve", "compare", "flux_map", "decorate"):
        if sc.spins is None and sc.ensemble is None:
            raise _fail("spins", f"mode {sc.model.mode.value} needs a spins block "
                        "or an ensemble block")

    if task == "decorate" and sc.spins is None:
        raise _fail("spins", "decorate needs a spins block")

    out_cfg = _get(cfg, "", "output", dict, required=False, default={})
    for key, val in out_cfg.items():
        if not isinstance(val, str):
            raise _fail(f"output.{key}", "expected a path string")
        sc.outputs[key] = val
    return sc


def _parse_ensemble(cfg: Mapping, lattice: LatticeSpec) -> SpinEnsemble:
    if "configurations" in cfg:
        members = []
        entries = _get(cfg, "ensemble", "configurations", list)
        for k, entry in enumerate(entries):
            if not isinstance(entry, Mapping):
                raise _fail(f"ensemble.configurations[{k}]", "expected a table")
            pattern = _get(entry, f"ensemble.configurations[{k}]", "pattern", str)
            weight = _get(entry, f"ensemble.configurations[{k}]", "weight", float)
            members.append((SpinConfiguration.from_ascii(lattice, pattern), weight))
        try:
            return SpinEnsemble(members=tuple(members))
        except ValueError as exc:
            raise _fail("ensemble.configurations", str(exc))
    if "product" in cfg:
        table = _get(cfg, "ensemble", "product", dict)
        amplitudes = {}
        for key, pair in table.items():
            parts = key.split(",")
            if len(parts) != 2:
                raise _fail("ensemble.product", f"bad site key {key!r}; use 'i1,i2'")
            if not isinstance(pair, Sequence) or len(pair) != 2:
                raise _fail(f"ensemble.product.{key}", "expected [c_up, c_down]")
            amplitudes[(int(parts[0]), int(parts[1]))] = (float(pair[0]), float(pair[1]))
        missing = [s for s in lattice.sites() if s not in amplitudes]
        if missing:
            raise _fail("ensemble.product", f"missing sites {missing}")
        return ensemble_from_product_state(amplitudes)
    raise _fail("ensemble", "need a configurations list or a product table")


def _parse_ions(cfg: Mapping) -> IonArrayParams:
    path = "ions"
    dims = _get(cfg, path, "dims", list)
    spacings = _get(cfg, path, "spacings", list)
    try:
        return IonArrayParams(
            dims=(int(dims[0]), int(dims[1])),
            spacings=(float(spacings[0]), float(spacings[1])),
            trap_frequencies={k: float(v) for k, v in
                              _get(cfg, path, "trap_frequencies", dict).items()},
            mass_amu=_get(cfg, path, "mass_amu", float),
            gradient={k: float(v) for k, v in
                      _get(cfg, path, "gradient", dict, required=False, default={}).items()},
            laser_beatnote=_get(cfg, path, "laser_beatnote", float, required=False, default=0.0),
            rabi=_get(cfg, path, "rabi", float, required=False, default=0.0),
            lamb_dicke={k: float(v) for k, v in
                        _get(cfg, path, "lamb_dicke", dict, required=False, default={}).items()},
            delta_k=tuple(_get(cfg, path, "delta_k", list, required=False, default=[0.0, 0.0])),
            standing_wave_rabi=_get(cfg, path, "standing_wave_rabi", float,
                                    required=False, default=0.0),
            standing_wave_lamb_dicke={k: float(v) for k, v in
                                      _get(cfg, path, "standing_wave_lamb_dicke", dict,
                                           required=False, default={}).items()},
            standing_wave_delta_k=tuple(_get(cfg, path, "standing_wave_delta_k", list,
                                             required=False, default=[0.0, 0.0])),
            sideband_rabi=_get(cfg, path, "sideband_rabi", float, required=False, default=0.0),
            sideband_detuning=_get(cfg, path, "sideband_detuning", float,
                                   required=False, default=0.0),
            r=_get(cfg, path, "r", int, required=False, default=1),
            axis=_get(cfg, path, "axis", str, required=False, default="z"),
        )
    except ScenarioError:
        raise
    except (ValueError, TypeError, IndexError) as exc:
        raise _fail(path, str(exc))


def load_scenario(path: str) -> Scenario:
    return parse_scenario(load_toml(path))
