"""Truncated multi-mode bosonic spaces and sparse Hamiltonians.

Basis states are occupation tuples over the modes ``(site, flavor)`` with a
per-mode cutoff ``n_trunc``, ordered lexicographically (stable across runs).
Single-particle work uses the total-number sector N = 1; thermal runs use the
full truncated product space.  All Hamiltonians conserve the total (and
per-flavor) particle number, so sectors never mix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sparse

from .model import DEFAULT_FLAVOR, Mode, ModelSpec, Site, SpinConfiguration, phase_at_site
from .modulation import build_dressed_matrix

HERMITICITY_TOL = 1e-12

ModeLabel = Tuple[Site, str]


def _sector_states(n_modes: int, n_trunc: int, total: int) -> List[Tuple[int, ...]]:
    # Weak compositions of `total` into n_modes parts each <= n_trunc,
    # generated directly in lexicographic order.
    out: List[Tuple[int, ...]] = []
    state = [0] * n_modes

    def fill(pos: int, remaining: int):
        if pos == n_modes - 1:
            if remaining <= n_trunc:
                state[pos] = remaining
                out.append(tuple(state))
            return
        for n in range(min(n_trunc, remaining) + 1):
            state[pos] = n
            fill(pos + 1, remaining - n)

    fill(0, total)
    return out


@dataclass(frozen=True)
class FockSpace:
    """Truncated occupation-number basis over modes (site, flavor)."""

    modes: Tuple[ModeLabel, ...]
    n_trunc: int
    sector: Optional[int]
    states: np.ndarray          # (dim, n_modes) int occupations, lexicographic
    index: Mapping[Tuple[int, ...], int]

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def mode_index(self, site: Site, flavor: str = DEFAULT_FLAVOR) -> int:
        return self.modes.index((tuple(site), flavor))

    def number_diag(self, mode_idx: int) -> np.ndarray:
        """Diagonal of the number operator of one mode."""
        return self.states[:, mode_idx].astype(float)

    def site_number_diag(self, site: Site) -> np.ndarray:
        """Diagonal of the site occupation summed over flavors."""
        cols = [k for k, (s, _) in enumerate(self.modes) if s == tuple(site)]
        return self.states[:, cols].sum(axis=1).astype(float)

    def total_number_diag(self) -> np.ndarray:
        return self.states.sum(axis=1).astype(float)


def build_fock_space(model: ModelSpec, n_trunc: int,
                     sector: Optional[int] = None) -> FockSpace:
    """Build the truncated space for a model (site-major, then flavor)."""
    if n_trunc < 1:
        raise ValueError("n_trunc must be >= 1")
    modes: Tuple[ModeLabel, ...] = tuple(
        (site, flavor) for site in model.lattice.sites() for flavor in model.flavors)
    return fock_space_for_modes(modes, n_trunc, sector)


def fock_space_for_modes(modes: Sequence[ModeLabel], n_trunc: int,
                         sector: Optional[int] = None) -> FockSpace:
    modes = tuple((tuple(s), f) for s, f in modes)
    m = len(modes)
    if sector is not None:
        if sector > m * n_trunc:
            raise ValueError(f"sector N={sector} exceeds capacity {m * n_trunc}")
        states = np.array(_sector_states(m, n_trunc, sector), dtype=np.int64)
    else:
        grids = np.indices((n_trunc + 1,) * m)
        states = grids.reshape(m, -1).T.astype(np.int64)
    index = {tuple(row): k for k, row in enumerate(states)}
    return FockSpace(modes=modes, n_trunc=n_trunc, sector=sector,
                     states=states, index=index)


def ladder_operator(space: FockSpace, mode: ModeLabel, kind: str) -> sparse.csr_matrix:
    """Single creation/annihilation operator (unsectored spaces only).

    Raising out of the cutoff state maps to zero; in number sectors single
    ladder operators leave the basis, so only bilinears are exposed there.
    """
    if space.sector is not None:
        raise ValueError("single ladder operators are undefined on a number sector; "
                         "use hop_operator for number-conserving bilinears")
    if kind not in ("create", "annihilate"):
        raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")
    k = space.modes.index((tuple(mode[0]), mode[1]))
    rows, cols, vals = [], [], []
    for idx in range(space.dim):
        n = space.states[idx]
        nk = n[k]
        if kind == "annihilate":
            if nk == 0:
                continue
            target = n.copy()
            target[k] -= 1
            rows.append(space.index[tuple(target)])
            cols.append(idx)
            vals.append(math.sqrt(nk))
        else:
            if nk == space.n_trunc:
                continue
            target = n.copy()
            target[k] += 1
            rows.append(space.index[tuple(target)])
            cols.append(idx)
            vals.append(math.sqrt(nk + 1))
    return sparse.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim),
                             dtype=complex)


def hop_operator(space: FockSpace, to_idx: int, from_idx: int) -> sparse.csr_matrix:
    """Number-conserving bilinear a+_to a_from (valid in sectors too)."""
    if to_idx == from_idx:
        return sparse.diags(space.number_diag(to_idx), dtype=complex, format="csr")
    rows, cols, vals = _hop_entries(space, to_idx, from_idx)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim),
                             dtype=complex)


def _hop_entries(space: FockSpace, to_idx: int, from_idx: int):
    rows, cols, vals = [], [], []
    states = space.states
    for idx in range(space.dim):
        n_from = states[idx, from_idx]
        n_to = states[idx, to_idx]
        if n_from == 0 or n_to == space.n_trunc:
            continue
        target = states[idx].copy()
        target[from_idx] -= 1
        target[to_idx] += 1
        rows.append(space.index[tuple(target)])
        cols.append(idx)
        vals.append(math.sqrt(n_from * (n_to + 1)))
    return rows, cols, vals


def _interaction_diag(model: ModelSpec, space: FockSpace) -> np.ndarray:
    """Diagonal of V = sum_i sum_(f,f') U a+ a+ a a  (n_f n_f' - delta n_f)."""
    diag = np.zeros(space.dim)
    site_modes: Dict[Site, List[Tuple[int, str]]] = {}
    for k, (site, flavor) in enumerate(space.modes):
        site_modes.setdefault(site, []).append((k, flavor))
    for site, modes in site_modes.items():
        for k1, f1 in modes:
            n1 = space.states[:, k1]
            for k2, f2 in modes:
                u = model.interaction(site, f1, f2)
                if u == 0.0:
                    continue
                n2 = space.states[:, k2]
                if k1 == k2:
                    diag += u * n1 * (n1 - 1)
                else:
                    diag += u * n1 * n2
    return diag


def _disorder_diag(model: ModelSpec, space: FockSpace,
                   spins: Optional[SpinConfiguration]) -> np.ndarray:
    """Diagonal of the Stark-shift term eps_f * sigma_i * n (site-disorder modes)."""
    diag = np.zeros(space.dim)
    active = any(model.disorder_strength(f) != 0.0 for f in model.flavors)
    if not active:
        return diag
    if spins is None:
        raise ValueError("site-disorder term needs a spin configuration")
    for k, (site, flavor) in enumerate(space.modes):
        eps = model.disorder_strength(flavor)
        if eps != 0.0:
            diag += eps * spins[site] * space.states[:, k]
    return diag


def _tunneling_matrix(model: ModelSpec, space: FockSpace) -> sparse.csr_matrix:
    """Bare tunneling sum_(i>j) J_t a+_i a_j + H.c. over every flavor."""
    rows: List[int] = []
    cols: List[int] = []
    vals: List[complex] = []
    from .model import enumerate_ordered_pairs
    for flavor in model.flavors:
        for i, j, j_t in enumerate_ordered_pairs(model.lattice, flavor):
            ki = space.mode_index(i, flavor)
            kj = space.mode_index(j, flavor)
            r1, c1, v1 = _hop_entries(space, ki, kj)
            rows += r1
            cols += c1
            vals += [j_t * v for v in v1]
            rows += c1
            cols += r1
            vals += [j_t.conjugate() * v for v in v1]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim),
                             dtype=complex)


@dataclass(frozen=True)
class DrivenHamiltonian:
    """Time-dependent H(t) split for the integrator.

    H(t) = diag(static + cos(omega_d t) * drive_cos - sin(omega_d t) * drive_sin)
           + tunneling,
    with everything but the tunneling diagonal in the occupation basis.
    """

    space: FockSpace
    static_diag: np.ndarray
    drive_cos: np.ndarray
    drive_sin: np.ndarray
    omega_d: float
    tunneling: sparse.csr_matrix

    def diagonal_at(self, t: float) -> np.ndarray:
        if self.omega_d == 0.0:
            return self.static_diag + self.drive_cos
        c = math.cos(self.omega_d * t)
        s = math.sin(self.omega_d * t)
        return self.static_diag + c * self.drive_cos - s * self.drive_sin

    def matrix_at(self, t: float) -> sparse.csr_matrix:
        h = self.tunneling + sparse.diags(self.diagonal_at(t).astype(complex))
        return h.tocsr()

    @property
    def has_drive(self) -> bool:
        return bool(np.any(self.drive_cos) or np.any(self.drive_sin))


def driven_hamiltonian(model: ModelSpec, space: FockSpace,
                       spins: Optional[SpinConfiguration] = None,
                       omega0: float = 1.0) -> DrivenHamiltonian:
    """Assemble the full driven Hamiltonian of the lattice model.

    The on-site part carries the constant offset omega0 (= 1 in model units),
    the gradient, the spin Stark shifts where the mode uses them, and the
    cosine modulation; the tunneling part uses the bare couplings, never the
    dressed ones.
    """
    if model.requires_spins() and spins is None:
        raise ValueError(f"mode {model.mode.value} needs a spin configuration")
    if spins is not None:
        spins.validate_for(model.lattice)
    static = np.zeros(space.dim)
    drive_cos = np.zeros(space.dim)
    drive_sin = np.zeros(space.dim)
    for k, (site, flavor) in enumerate(space.modes):
        n_k = space.states[:, k].astype(float)
        static += (omega0 + model.drive.gradient(flavor) * site[0]) * n_k
        amp = model.drive.drive_index(flavor) * model.drive.omega_d
        if model.mode == Mode.SPIN_BOND_DISORDER:
            amp *= spins[site]
        phi = phase_at_site(model.drive, site)
        drive_cos += amp * math.cos(phi) * n_k
        drive_sin += amp * math.sin(phi) * n_k
    static += _interaction_diag(model, space)
    static += _disorder_diag(model, space, spins)
    return DrivenHamiltonian(space=space, static_diag=static, drive_cos=drive_cos,
                             drive_sin=drive_sin, omega_d=model.drive.omega_d,
                             tunneling=_tunneling_matrix(model, space))


def build_full_hamiltonian(model: ModelSpec, space: FockSpace,
                           spins: Optional[SpinConfiguration] = None,
                           t: float = 0.0, omega0: float = 1.0) -> sparse.csr_matrix:
    """The driven Hamiltonian evaluated at time t (Hermitian snapshot)."""
    h = driven_hamiltonian(model, space, spins, omega0=omega0).matrix_at(t)
    assert_hermitian(h)
    return h


def build_effective_hamiltonian(model: ModelSpec, space: FockSpace,
                                spins: Optional[SpinConfiguration] = None
                                ) -> sparse.csr_matrix:
    """Time-independent Hamiltonian with Bessel-dressed couplings.

    The rotating frame absorbs the on-site offset, gradient and drive, so only
    the dressed tunneling survives, plus the interactions (unchanged by the
    dressing) and, in the spin-site-disorder mode, the residual Stark diagonal.
    """
    dressed = build_dressed_matrix(model, spins)
    rows: List[int] = []
    cols: List[int] = []
    vals: List[complex] = []
    for (i, j, flavor), entry in dressed.items():
        if entry.value == 0.0:
            continue
        ki = space.mode_index(i, flavor)
        kj = space.mode_index(j, flavor)
        r1, c1, v1 = _hop_entries(space, ki, kj)
        rows += r1
        cols += c1
        vals += [entry.value * v for v in v1]
        rows += c1
        cols += r1
        vals += [entry.value.conjugate() * v for v in v1]
    h = sparse.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim),
                          dtype=complex)
    diag = _interaction_diag(model, space)
    if model.mode == Mode.SPIN_SITE_DISORDER:
        diag = diag + _disorder_diag(model, space, spins)
    h = (h + sparse.diags(diag.astype(complex))).tocsr()
    assert_hermitian(h)
    return h


def assert_hermitian(h: sparse.spmatrix, tol: float = HERMITICITY_TOL) -> None:
    delta = (h - h.getH()).tocoo()
    worst = max(abs(delta.data)) if delta.nnz else 0.0
    if worst >= tol:
        raise AssertionError(f"Hamiltonian not Hermitian: max |H - H^+| = {worst:.3e}")


# -- states ----------------------------------------------------------------

@dataclass
class QuantumState:
    """Pure state vector or density matrix on a FockSpace."""

    kind: str                    # "pure" | "density"
    data: np.ndarray
    space: FockSpace

    def __post_init__(self):
        if self.kind not in ("pure", "density"):
            raise ValueError(f"kind must be 'pure' or 'density', got {self.kind!r}")
        self.data = np.asarray(self.data, dtype=complex)
        if self.kind == "pure":
            if self.data.shape != (self.space.dim,):
                raise ValueError("pure state dimension mismatch")
            norm = np.linalg.norm(self.data)
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"pure state norm {norm} not 1 within 1e-9")
        else:
            if self.data.shape != (self.space.dim, self.space.dim):
                raise ValueError("density matrix dimension mismatch")
            if np.abs(self.data - self.data.conj().T).max() > 1e-9:
                raise ValueError("density matrix not Hermitian within 1e-9")
            tr = np.trace(self.data).real
            if abs(tr - 1.0) > 1e-9:
                raise ValueError(f"density matrix trace {tr} not 1 within 1e-9")

    def check_positive(self, tol: float = 1e-9) -> None:
        if self.kind == "density":
            w = np.linalg.eigvalsh(self.data)
            if w.min() < -tol:
                raise ValueError(f"density matrix has negative eigenvalue {w.min():.3e}")

    def occupation_expectations(self) -> Dict[ModeLabel, float]:
        probs = (np.abs(self.data) ** 2 if self.kind == "pure"
                 else np.real(np.diag(self.data)))
        return {mode: float(probs @ self.space.number_diag(k))
                for k, mode in enumerate(self.space.modes)}


def single_particle_state(space: FockSpace, site: Site,
                          flavor: str = DEFAULT_FLAVOR) -> QuantumState:
    """a+_site|vac> represented in the given space."""
    k = space.mode_index(site, flavor)
    occ = tuple(1 if m == k else 0 for m in range(space.n_modes))
    if occ not in space.index:
        raise ValueError("single-particle state outside this space")
    vec = np.zeros(space.dim, dtype=complex)
    vec[space.index[occ]] = 1.0
    return QuantumState(kind="pure", data=vec, space=space)


def thermal_state(space: FockSpace, nbar: Mapping[ModeLabel, float]) -> QuantumState:
    """Product of single-mode geometric (Bose-Einstein) states, renormalized.

    nbar maps each mode (site, flavor) to its mean occupation; missing modes
    default to 0 (vacuum).  Requires the full product space: a fixed-N sector
    cannot hold a thermal product.
    """
    if space.sector is not None:
        raise ValueError("thermal product states mix number sectors; use an unsectored space")
    nbar = {(tuple(s), f): float(v) for (s, f), v in nbar.items()}
    if any(v < 0 for v in nbar.values()):
        raise ValueError("nbar must be non-negative")
    diag = np.ones(space.dim)
    levels = np.arange(space.n_trunc + 1)
    for k, mode in enumerate(space.modes):
        n_mean = nbar.get(mode, 0.0)
        if n_mean == 0.0:
            p = np.zeros(space.n_trunc + 1)
            p[0] = 1.0
        else:
            x = n_mean / (1.0 + n_mean)
            p = x ** levels
            p /= p.sum()
        diag *= p[space.states[:, k]]
    diag /= diag.sum()
    return QuantumState(kind="density", data=np.diag(diag.astype(complex)), space=space)


def export_operator_triplets(op: sparse.spmatrix, path: str) -> None:
    """Dump a sparse operator as '(row, col, re, im)' text lines."""
    coo = op.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        for k in order:
            v = coo.data[k]
            fh.write(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}\n")
