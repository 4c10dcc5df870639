"""Weighted spin-configuration ensembles for disorder averaging.

Every implemented Hamiltonian is diagonal in the frozen spins, so a spin
superposition acts on phonon observables as a classical mixture: evolve each
configuration separately and average with its probability.  Members are
evolved independently and reduced in list order, so results are bit-stable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .dynamics import EvolutionTask, ObservableSeries, evolve
from .fock import FockSpace, QuantumState
from .model import ModelSpec, Site, SpinConfiguration

WEIGHT_TOL = 1e-12
PRUNE_THRESHOLD = 1e-12
MEMBER_GUARD = 16


@dataclass(frozen=True)
class SpinEnsemble:
    """Probability-weighted spin configurations."""

    members: Tuple[Tuple[SpinConfiguration, float], ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble must have at least one member")
        total = sum(w for _, w in self.members)
        if any(w < 0 for _, w in self.members):
            raise ValueError("ensemble weights must be non-negative")
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"ensemble weights sum to {total}, not 1 within {WEIGHT_TOL}")

    def __len__(self) -> int:
        return len(self.members)

    @classmethod
    def single(cls, spins: SpinConfiguration) -> "SpinEnsemble":
        return cls(members=((spins, 1.0),))

    @classmethod
    def uniform(cls, configs: Sequence[SpinConfiguration]) -> "SpinEnsemble":
        w = 1.0 / len(configs)
        return cls(members=tuple((c, w) for c in configs))


def ensemble_from_product_state(amplitudes: Mapping[Site, Tuple[complex, complex]],
                                allow_large: bool = False) -> SpinEnsemble:
    """Expand per-site (c_up, c_down) amplitudes into the 2^N classical ensemble.

    Members below weight 1e-12 are pruned and the rest renormalized (a bias
    below 1e-10 on any observable).  More than 16 sites needs an explicit
    override; the member count explodes beyond that.
    """
    sites = list(amplitudes.keys())
    if len(sites) > MEMBER_GUARD and not allow_large:
        raise ValueError(f"{len(sites)} sites would give 2^{len(sites)} members; "
                         "pass allow_large=True to override")
    probs: Dict[Site, Tuple[float, float]] = {}
    for s, (c_up, c_down) in amplitudes.items():
        p_up = abs(complex(c_up)) ** 2
        p_down = abs(complex(c_down)) ** 2
        if abs(p_up + p_down - 1.0) > 1e-9:
            raise ValueError(f"site {s}: |c_up|^2 + |c_down|^2 = {p_up + p_down} != 1")
        probs[tuple(s)] = (p_up, p_down)

    members: List[Tuple[SpinConfiguration, float]] = []

    def expand(idx: int, spins: Dict[Site, int], weight: float):
        if weight < PRUNE_THRESHOLD:
            return
        if idx == len(sites):
            members.append((SpinConfiguration(spins), weight))
            return
        s = tuple(sites[idx])
        p_up, p_down = probs[s]
        expand(idx + 1, {**spins, s: 1}, weight * p_up)
        expand(idx + 1, {**spins, s: -1}, weight * p_down)

    expand(0, {}, 1.0)
    total = sum(w for _, w in members)
    return SpinEnsemble(members=tuple((c, w / total) for c, w in members))


def disorder_average(model: ModelSpec, space: FockSpace, initial: QuantumState,
                     ensemble: SpinEnsemble, t_final: float,
                     sample_times: np.ndarray, engine: str = "effective",
                     return_members: bool = False
                     ) -> "ObservableSeries | Tuple[ObservableSeries, List[ObservableSeries]]":
    """Average phonon observables over the spin ensemble.

    Each member evolves under its own spin-conditioned Hamiltonian; the
    returned series is the probability-weighted sum, exactly linear in the
    member series.
    """
    if not model.requires_spins():
        raise ValueError(f"mode {model.mode.value} has no spin dependence to average over")
    _warn_if_strong_disorder(model)
    member_series: List[ObservableSeries] = []
    for spins, _ in ensemble.members:
        task = EvolutionTask(model=model, space=space, initial=initial,
                             t_final=t_final, sample_times=sample_times,
                             spins=spins, engine=engine)
        member_series.append(evolve(task))
    names = member_series[0].names
    avg = {name: np.zeros_like(member_series[0][name]) for name in names}
    for (spins, weight), series in zip(ensemble.members, member_series):
        for name in names:
            avg[name] = avg[name] + weight * series[name]
    out = ObservableSeries(times=member_series[0].times, values=avg)
    if return_members:
        return out, member_series
    return out


def _warn_if_strong_disorder(model: ModelSpec) -> None:
    # The Stark-shift disorder must stay far below the gradient or it detunes
    # the photon-assisted resonance itself.
    if model.mode != model.mode.SPIN_SITE_DISORDER:
        return
    for f in model.flavors:
        eps = abs(model.disorder_strength(f))
        grad = abs(model.drive.gradient(f))
        if grad > 0 and eps >= grad / 10.0:
            warnings.warn(f"site disorder eps = {eps} is not small against the "
                          f"gradient {grad} (flavor {f!r}); the assisted-tunneling "
                          "picture degrades", stacklevel=2)
