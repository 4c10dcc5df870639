import math

import numpy as np
import pytest
import scipy.sparse as sparse

from patsim.fock import (build_effective_hamiltonian, build_fock_space,
                         build_full_hamiltonian, export_operator_triplets,
                         fock_space_for_modes, hop_operator, ladder_operator,
                         single_particle_state, thermal_state)
from patsim.model import (Dipolar, DriveSpec, ExplicitMatrix, LatticeSpec, Mode,
                          ModelSpec, SpinConfiguration)

PI = math.pi


def chain_model(j_t=0.01, delta_omega=0.5, eta_d=1.0, omega_d=0.5, phi1=PI, **kw):
    lat = LatticeSpec(dims=(2, 1), coupling_law=ExplicitMatrix({((1, 0), (0, 0)): j_t}))
    drive = DriveSpec.uniform(delta_omega, eta_d, omega_d, phi1=phi1)
    return ModelSpec(lattice=lat, drive=drive, **kw)


def test_space_dimensions():
    m = chain_model()
    assert build_fock_space(m, n_trunc=4).dim == 25
    assert build_fock_space(m, n_trunc=4, sector=1).dim == 2
    four = fock_space_for_modes([((k, 0), "z") for k in range(4)], n_trunc=2, sector=1)
    assert four.dim == 4


def test_space_sector_capacity_error():
    m = chain_model()
    with pytest.raises(ValueError, match="sector"):
        build_fock_space(m, n_trunc=2, sector=5)


def test_basis_is_lexicographic_and_stable():
    space = fock_space_for_modes([((0, 0), "z"), ((1, 0), "z")], n_trunc=2)
    expected = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)]
    assert [tuple(s) for s in space.states] == expected


def test_ladder_matrix_elements():
    space = fock_space_for_modes([((0, 0), "z")], n_trunc=1)
    a_dag = ladder_operator(space, ((0, 0), "z"), "create")
    a = ladder_operator(space, ((0, 0), "z"), "annihilate")
    assert np.allclose((a_dag @ a).toarray().real, np.diag([0.0, 1.0]))
    # <1|a+|0> = 1
    assert a_dag[space.index[(1,)], space.index[(0,)]] == pytest.approx(1.0)


def test_truncation_commutator_artifact():
    space = fock_space_for_modes([((0, 0), "z")], n_trunc=4)
    a_dag = ladder_operator(space, ((0, 0), "z"), "create")
    a = ladder_operator(space, ((0, 0), "z"), "annihilate")
    comm = (a @ a_dag - a_dag @ a).toarray().real
    expected = np.eye(5)
    expected[4, 4] = -4.0  # raising out of the cutoff state maps to zero
    assert np.allclose(comm, expected)


def test_ladder_on_sector_raises():
    space = fock_space_for_modes([((0, 0), "z"), ((1, 0), "z")], n_trunc=2, sector=1)
    with pytest.raises(ValueError, match="sector"):
        ladder_operator(space, ((0, 0), "z"), "create")
    # number-conserving bilinears remain available
    hop = hop_operator(space, 0, 1)
    assert hop.shape == (2, 2)


def test_full_hamiltonian_diagonal_direct_evaluation():
    # direct evaluation of the driven on-site term at t = 0:
    # site (1,0): omega + 0.5 + 0.5 cos(pi) = omega; site (0,0): omega + 0.5 cos(0)
    m = chain_model()
    space = build_fock_space(m, n_trunc=4, sector=1)
    h = build_full_hamiltonian(m, space, t=0.0).toarray()
    idx_10 = space.index[(0, 1)]  # particle in mode (1,0)
    idx_00 = space.index[(1, 0)]
    assert h[idx_10, idx_10].real == pytest.approx(1.0, abs=1e-12)
    assert h[idx_00, idx_00].real == pytest.approx(1.5, abs=1e-12)
    assert h[idx_10, idx_00] == pytest.approx(0.01)


def test_full_hamiltonian_static_without_drive():
    m = chain_model(delta_omega=0.0, eta_d=0.0, omega_d=0.0)
    space = build_fock_space(m, n_trunc=3)
    h0 = build_full_hamiltonian(m, space, t=0.0)
    h1 = build_full_hamiltonian(m, space, t=17.3)
    assert (h0 - h1).nnz == 0
    # equals bare tight binding plus the constant omega * N offset
    h_eff = build_effective_hamiltonian(m, space)
    n_total = sparse.diags(space.total_number_diag())
    assert abs((h0 - h_eff - n_total)).max() < 1e-12


def test_interaction_diagonal_double_occupancy():
    lat = LatticeSpec(dims=(1, 1))
    m = ModelSpec(lattice=lat, drive=DriveSpec.uniform(0.0, 0.0, 0.0),
                  onsite_interactions=0.7)
    space = build_fock_space(m, n_trunc=3)
    h = build_full_hamiltonian(m, space).toarray().real
    # a+ a+ a a |2> = 2 |2>: energy 2u on top of 2*omega
    idx2 = space.index[(2,)]
    assert h[idx2, idx2] == pytest.approx(2 * 1.0 + 2 * 0.7)


def test_effective_two_site_structure():
    m = chain_model()
    space = build_fock_space(m, n_trunc=4, sector=1)
    h = build_effective_hamiltonian(m, space).toarray()
    assert np.allclose(np.diag(h), 0.0)
    jd = h[space.index[(0, 1)], space.index[(1, 0)]]
    assert abs(jd) == pytest.approx(0.5767248077568734 * 0.01, abs=1e-12)
    assert h[space.index[(1, 0)], space.index[(0, 1)]] == pytest.approx(np.conj(jd))


def test_effective_suppressed_without_drive():
    m = chain_model(eta_d=0.0)
    space = build_fock_space(m, n_trunc=4, sector=1)
    h = build_effective_hamiltonian(m, space).toarray()
    assert np.abs(h).max() < 1e-14


def test_effective_plaquette_loop_argument():
    lat = LatticeSpec(dims=(2, 2), coupling_law=ExplicitMatrix({
        ((1, 0), (0, 0)): 0.01, ((1, 1), (1, 0)): 0.01,
        ((1, 1), (0, 1)): 0.01, ((0, 1), (0, 0)): 0.01}))
    m = ModelSpec(lattice=lat, drive=DriveSpec.uniform(0.5, 1.0, 0.5, phi1=PI, phi2=PI))
    space = build_fock_space(m, n_trunc=1, sector=1)
    h = build_effective_hamiltonian(m, space).toarray()
    idx = {site: space.index[tuple(1 if k == j else 0 for k in range(4))]
           for j, (site, _) in enumerate(space.modes)}
    w = (h[idx[(1, 0)], idx[(0, 0)]] * h[idx[(1, 1)], idx[(1, 0)]]
         * h[idx[(0, 1)], idx[(1, 1)]] * h[idx[(0, 0)], idx[(0, 1)]])
    assert np.angle(w) == pytest.approx(PI, abs=1e-12)


def test_number_conservation_all_modes():
    # [H(t), N] = 0 for every variant, at random times
    rng = np.random.default_rng(11)
    lat = LatticeSpec(dims=(2, 2), coupling_law=Dipolar(j0=0.01, cutoff_range=2))
    spins = SpinConfiguration({s: int(v) for s, v in
                               zip(lat.sites(), rng.choice([1, -1], size=4))})
    cases = [
        ModelSpec(lattice=lat, drive=DriveSpec.uniform(0.5, 1.0, 0.5, phi1=1.1, phi2=0.3),
                  onsite_interactions=0.2),
        ModelSpec(lattice=lat, drive=DriveSpec.uniform(0.5, 1.0, 0.5, phi1=1.1),
                  mode=Mode.SPIN_BOND_DISORDER),
        ModelSpec(lattice=lat, drive=DriveSpec.uniform(0.5, 1.0, 0.5, phi1=1.1),
                  site_disorder_strength={"z": 0.01}, mode=Mode.SPIN_SITE_DISORDER),
        ModelSpec(lattice=lat, drive=DriveSpec.uniform(0.0, 1.0, 0.5, phi1=PI, phi2=PI),
                  mode=Mode.SPIN_FLUX_DECORATION),
    ]
    for m in cases:
        space = build_fock_space(m, n_trunc=2)
        n_op = sparse.diags(space.total_number_diag())
        for t in rng.uniform(0, 20, size=3):
            h = build_full_hamiltonian(m, space, spins=spins, t=t)
            comm = h @ n_op - n_op @ h
            assert abs(comm).max() < 1e-10
        h_eff = build_effective_hamiltonian(m, space, spins=spins)
        assert abs(h_eff @ n_op - n_op @ h_eff).max() < 1e-10


def test_flavor_number_conservation_non_abelian():
    lat = LatticeSpec(dims=(2, 1), coupling_law=ExplicitMatrix(
        {((1, 0), (0, 0)): {"x": 0.01, "y": 0.008}}))
    drive = DriveSpec(delta_omega={"x": 0.5, "y": -0.5}, eta_d={"x": 1.0, "y": 0.8},
                      omega_d=0.5, phi1=1.0, phi2=0.0, r=1)
    m = ModelSpec(lattice=lat, drive=drive, flavors=("x", "y"), mode=Mode.NON_ABELIAN)
    space = build_fock_space(m, n_trunc=2)
    for flavor in ("x", "y"):
        cols = [k for k, (_, f) in enumerate(space.modes) if f == flavor]
        n_f = sparse.diags(space.states[:, cols].sum(axis=1).astype(float))
        h = build_full_hamiltonian(m, space, t=0.37)
        assert abs(h @ n_f - n_f @ h).max() < 1e-10


def test_thermal_state_vacuum_limit():
    m = chain_model()
    space = build_fock_space(m, n_trunc=4)
    rho = thermal_state(space, {((0, 0), "z"): 0.0, ((1, 0), "z"): 0.0})
    vac = space.index[(0, 0)]
    assert rho.data[vac, vac] == pytest.approx(1.0)
    assert np.trace(rho.data).real == pytest.approx(1.0, abs=1e-14)


def test_thermal_state_geometric_weights():
    space = fock_space_for_modes([((0, 0), "z")], n_trunc=7)
    rho = thermal_state(space, {((0, 0), "z"): 0.5})
    # geometric distribution with ratio nbar/(1+nbar) = 1/3, renormalized
    x = 0.5 / 1.5
    p = x ** np.arange(8)
    p /= p.sum()
    assert np.allclose(np.diag(rho.data).real, p, atol=1e-14)
    n_mean = float(np.diag(rho.data).real @ np.arange(8))
    assert n_mean == pytest.approx(0.5, abs=2e-3)  # truncated tail only


def test_thermal_state_two_mode_product():
    m = chain_model()
    space = build_fock_space(m, n_trunc=7)
    rho = thermal_state(space, {((0, 0), "z"): 0.5, ((1, 0), "z"): 0.25})
    occ = rho.occupation_expectations()
    assert occ[((0, 0), "z")] == pytest.approx(0.5, abs=2e-3)
    assert occ[((1, 0), "z")] == pytest.approx(0.25, abs=1e-4)
    rho.check_positive()


def test_thermal_state_rejects_sector():
    m = chain_model()
    space = build_fock_space(m, n_trunc=4, sector=1)
    with pytest.raises(ValueError, match="sector"):
        thermal_state(space, {((0, 0), "z"): 0.5})


def test_single_particle_state_and_norm_checks():
    m = chain_model()
    space = build_fock_space(m, n_trunc=4, sector=1)
    psi = single_particle_state(space, (0, 0))
    assert psi.occupation_expectations()[((0, 0), "z")] == pytest.approx(1.0)
    from patsim.fock import QuantumState
    with pytest.raises(ValueError, match="norm"):
        QuantumState(kind="pure", data=np.array([1.0, 1.0]), space=space)


def test_truncation_convergence_single_particle_run():
    # the cutoff = 4 single-particle run shifts below 1e-4 under n_trunc -> +1
    from patsim.dynamics import EvolutionTask, evolve, sample_grid
    m = chain_model()
    t_final = math.pi / (0.5767248077568734 * 0.01)
    results = []
    for n_trunc in (4, 5):
        space = build_fock_space(m, n_trunc=n_trunc)
        psi = single_particle_state(space, (0, 0))
        times = sample_grid(t_final, 101)
        task = EvolutionTask(model=m, space=space, initial=psi, t_final=t_final,
                             sample_times=times, engine="full")
        results.append(evolve(task)["n_1_0"])
    assert np.abs(results[0] - results[1]).max() < 1e-4


def test_truncation_convergence_thermal_run():
    # the thermal cutoff = 7 is converged at the few-1e-4 level (the quartic
    # tail of the geometric distribution); 8 changes nothing at 1e-3
    from patsim.dynamics import EvolutionTask, evolve, sample_grid
    m = chain_model()
    results = []
    for n_trunc in (7, 8):
        space = build_fock_space(m, n_trunc=n_trunc)
        rho = thermal_state(space, {((0, 0), "z"): 0.5, ((1, 0), "z"): 0.25})
        times = sample_grid(100.0, 51)
        task = EvolutionTask(model=m, space=space, initial=rho, t_final=100.0,
                             sample_times=times, engine="full")
        results.append(evolve(task)["n_1_0"])
    assert np.abs(results[0] - results[1]).max() < 1e-3


def test_operator_triplet_export(tmp_path):
    m = chain_model()
    space = build_fock_space(m, n_trunc=4, sector=1)
    h = build_effective_hamiltonian(m, space)
    path = tmp_path / "h.txt"
    export_operator_triplets(h, str(path))
    rows = [line.split() for line in path.read_text().splitlines()]
    rebuilt = np.zeros((2, 2), dtype=complex)
    for r, c, re_part, im_part in rows:
        rebuilt[int(r), int(c)] = float(re_part) + 1j * float(im_part)
    assert np.allclose(rebuilt, h.toarray())
