import math

import numpy as np
import pytest

from patsim.gauge import (apply_gauge_transform, diagonal_coupling_report,
                          double_plaquette_paths, flux_map_ascii, flux_map_to_json,
                          interference_probability, landau_dressed_matrix,
                          landau_gauge_function, plaquette_flux_map,
                          unit_plaquette_path, wilson_loop)
from patsim.model import (Dipolar, DriveSpec, LatticeSpec, Mode, ModelSpec,
                          SpinConfiguration, wrap_angle)
from patsim.modulation import build_dressed_matrix

PI = math.pi


def plain_model(dims=(3, 3), phi1=0.9, phi2=1.3, r=1, eta_d=1.0, cutoff=2):
    lat = LatticeSpec(dims=dims, coupling_law=Dipolar(j0=0.01, cutoff_range=cutoff))
    drive = DriveSpec.uniform(0.5, eta_d, 0.5 / r, phi1=phi1, phi2=phi2, r=r)
    return ModelSpec(lattice=lat, drive=drive)


def test_unit_plaquette_flux_is_r_phi2():
    for r, phi2 in ((1, 0.8), (2, 0.8), (1, 2.9)):
        model = plain_model(phi2=phi2, r=r)
        dressed = build_dressed_matrix(model)
        w = wilson_loop(dressed, unit_plaquette_path((0, 0)))
        assert wrap_angle(np.angle(w) - r * phi2) == pytest.approx(0.0, abs=1e-12)


def test_backtracking_path_is_positive_real():
    model = plain_model()
    dressed = build_dressed_matrix(model)
    w = wilson_loop(dressed, [(0, 0), (1, 0), (0, 0)])
    assert w.imag == pytest.approx(0.0, abs=1e-15)
    assert w.real > 0


def test_double_plaquette_flux_doubles():
    model = plain_model()
    dressed = build_dressed_matrix(model)
    tall, wide = double_plaquette_paths((0, 0))
    for path in (tall, wide):
        w = wilson_loop(dressed, path)
        assert wrap_angle(np.angle(w) - 2 * model.drive.r * model.drive.phi2) \
            == pytest.approx(0.0, abs=1e-12)


def test_flux_additivity_composite_loop():
    model = plain_model()
    dressed = build_dressed_matrix(model)
    tall, _ = double_plaquette_paths((0, 0))
    w_tall = wilson_loop(dressed, tall)
    f1 = np.angle(wilson_loop(dressed, unit_plaquette_path((0, 0))))
    f2 = np.angle(wilson_loop(dressed, unit_plaquette_path((0, 1))))
    assert wrap_angle(np.angle(w_tall) - (f1 + f2)) == pytest.approx(0.0, abs=1e-12)


def test_open_or_disconnected_paths_rejected():
    model = plain_model()
    dressed = build_dressed_matrix(model)
    with pytest.raises(ValueError, match="closed"):
        wilson_loop(dressed, [(0, 0), (1, 0)])
    with pytest.raises(ValueError, match="disconnected"):
        wilson_loop(dressed, [(0, 0), (2, 2), (0, 0)])  # beyond the dipolar cutoff


def test_gauge_invariance_under_random_transforms():
    model = plain_model()
    dressed = build_dressed_matrix(model)
    path = unit_plaquette_path((1, 1))
    w0 = wilson_loop(dressed, path)
    rng = np.random.default_rng(42)
    for _ in range(100):
        chi = {s: rng.uniform(-PI, PI) for s in model.lattice.sites()}
        w = wilson_loop(apply_gauge_transform(dressed, chi), path)
        assert abs(abs(w) - abs(w0)) < 1e-12
        assert abs(wrap_angle(np.angle(w) - np.angle(w0))) < 1e-12


def test_gauge_transform_identity():
    model = plain_model()
    dressed = build_dressed_matrix(model)
    same = apply_gauge_transform(dressed, {s: 0.0 for s in model.lattice.sites()})
    for key in dressed:
        assert same[key].value == pytest.approx(dressed[key].value)


def test_plaquette_flux_map_uniform():
    model = plain_model(phi1=0.4, phi2=PI / 2, r=2)
    dressed = build_dressed_matrix(model)
    fm = plaquette_flux_map(dressed, model.lattice)
    assert len(fm) == 4
    for flux in fm.values():
        assert wrap_angle(flux - PI) == pytest.approx(0.0, abs=1e-12)


def test_flux_absent_when_loop_coupling_vanishes():
    # phi1 = 0 makes the gradient links vanish: F_1(e, e, 0) = 0
    model = plain_model(phi1=0.0, phi2=1.1, cutoff=1)
    dressed = build_dressed_matrix(model)
    fm = plaquette_flux_map(dressed, model.lattice)
    assert fm == {}


def test_landau_construction_matches_flux_map():
    model = plain_model()
    direct = build_dressed_matrix(model)
    landau = landau_dressed_matrix(model)
    fm_direct = plaquette_flux_map(direct, model.lattice)
    fm_landau = plaquette_flux_map(landau, model.lattice)
    assert set(fm_direct) == set(fm_landau)
    for key in fm_direct:
        assert wrap_angle(fm_direct[key] - fm_landau[key]) == pytest.approx(0.0, abs=1e-12)


def test_landau_gauge_transform_maps_links_exactly():
    # at r = 1 the transform chi_i = phi1 i1^2 / 2 carries the direct
    # construction onto the Landau form link by link
    model = plain_model(r=1)
    direct = build_dressed_matrix(model)
    landau = landau_dressed_matrix(model)
    transformed = apply_gauge_transform(direct, landau_gauge_function(model))
    for key in direct:
        assert transformed[key].value == pytest.approx(landau[key].value, abs=1e-15)


def test_non_abelian_opposite_fluxes():
    lat = LatticeSpec(dims=(3, 3), coupling_law=Dipolar(j0=0.01, cutoff_range=1))
    drive = DriveSpec(delta_omega={"x": 0.5, "y": -0.5}, eta_d={"x": 1.0, "y": 0.8},
                      omega_d=0.5, phi1=0.7, phi2=1.2, r=1)
    model = ModelSpec(lattice=lat, drive=drive, flavors=("x", "y"),
                      mode=Mode.NON_ABELIAN)
    dressed = build_dressed_matrix(model)
    fx = plaquette_flux_map(dressed, lat, "x")
    fy = plaquette_flux_map(dressed, lat, "y")
    assert set(fx) == set(fy) and len(fx) == 4
    for key in fx:
        assert wrap_angle(fx[key] + fy[key]) == pytest.approx(0.0, abs=1e-12)


def test_spin_flux_uniform_spins_zero_flux():
    lat = LatticeSpec(dims=(3, 3), coupling_law=Dipolar(j0=0.01, cutoff_range=1))
    model = ModelSpec(lattice=lat, drive=DriveSpec.uniform(0.0, 1.0, 0.5,
                                                           phi1=0.9, phi2=1.3),
                      mode=Mode.SPIN_FLUX_DECORATION)
    dressed = build_dressed_matrix(model, SpinConfiguration.uniform(lat))
    fm = plaquette_flux_map(dressed, lat)
    for flux in fm.values():
        assert flux == pytest.approx(0.0, abs=1e-12)


def test_interference_probability_values():
    assert interference_probability(PI) == pytest.approx(0.0, abs=1e-15)
    assert interference_probability(0.0) == pytest.approx(1.0)
    assert interference_probability(PI / 2) == pytest.approx(0.5)


def test_diagonal_coupling_report():
    model = plain_model(cutoff=2)
    dressed = build_dressed_matrix(model)
    report = diagonal_coupling_report(dressed, model.lattice)
    assert report["max_edge"] > 0
    assert report["max_diagonal"] > 0
    assert 0 < report["ratio"] < 1


def test_flux_map_exports():
    model = plain_model(phi2=PI, phi1=PI, cutoff=1)
    dressed = build_dressed_matrix(model)
    fm = plaquette_flux_map(dressed, model.lattice)
    text = flux_map_to_json(fm)
    import json
    payload = json.loads(text)
    assert "0,0" in payload
    art = flux_map_ascii(fm, model.lattice)
    assert "pi" in art
