import numpy as np
import pytest

from legendrian_lab import contact, grid_ops, grids, immersions

SQRT3 = np.sqrt(3.0)
A_TORUS = 4 * np.pi**2 / np.sqrt(3)


# ---------------------------------------------------------------------------
# catalog values


def test_torus_value_and_first_jet_at_origin():
    t = immersions.catalog("legendrian_torus", theta=0.0)
    jet = immersions.eval_jet2(t, 0.0, 0.0)
    assert np.allclose(jet.value, np.array([1, 0, 1, 0, 1, 0]) / SQRT3, atol=1e-15)
    assert np.allclose(jet.du, np.array([0, 1, 0, 0, 0, -1]) / SQRT3, atol=1e-15)


def test_clifford_value_at_origin():
    c = immersions.catalog("clifford_s3")
    jet = immersions.eval_jet2(c, 0.0, 0.0)
    assert np.allclose(jet.value, [1 / np.sqrt(2), 0, 1 / np.sqrt(2), 0, 0, 0])


def test_veronese_pole_hits_fifth_axis():
    # parameter (u, v=0) maps to (x, y, z) = (0, 0, sqrt3)
    v = immersions.catalog("veronese_s4")
    jet = v.evaluator(np.array(0.0), np.array(0.0))
    expected = np.zeros(6)
    expected[4] = -1.0
    assert np.allclose(jet.value, expected, atol=1e-15)


def test_unknown_surface_rejected_and_theta_normalized():
    with pytest.raises(ValueError):
        immersions.catalog("moebius")
    t = immersions.catalog("legendrian_torus", theta=2 * np.pi + 1.0)
    jet = immersions.eval_jet2(t, 0.3, 0.4)
    t2 = immersions.catalog("legendrian_torus", theta=1.0)
    jet2 = immersions.eval_jet2(t2, 0.3, 0.4)
    assert np.allclose(jet.value, jet2.value)


def test_jets_tangent_to_sphere_everywhere():
    rng = np.random.default_rng(0)
    for name in immersions.CATALOG_NAMES:
        surf = immersions.catalog(name)
        (u0, u1), (v0, v1) = surf.domain
        u = rng.uniform(u0, u1, 300)
        v = rng.uniform(v0 + 1e-3, v1 - 1e-3, 300)
        jet = immersions.eval_jet2(surf, u, v)
        assert np.max(np.abs(contact.dot(jet.du, jet.value))) < 1e-10
        assert np.max(np.abs(contact.dot(jet.dv, jet.value))) < 1e-10


def test_equatorial_sphere_real_locus():
    s = immersions.catalog("equatorial_legendrian_sphere")
    jet = immersions.eval_jet2(s, 1.0, 0.5)
    for arr in (jet.value, jet.du, jet.dv, jet.duu, jet.duv, jet.dvv):
        assert np.max(np.abs(arr[..., 1::2])) == 0.0


def test_out_of_domain_rejected_for_charts():
    s = immersions.catalog("equatorial_legendrian_sphere")
    with pytest.raises(ValueError):
        immersions.eval_jet2(s, 0.0, 1.5)


# ---------------------------------------------------------------------------
# jet consistency (finite-difference oracle)


@pytest.mark.parametrize("name", immersions.CATALOG_NAMES)
def test_jet_consistency_at_h_1e4(name):
    surf = immersions.catalog(name)
    res = immersions.jet_consistency_check(surf, 0.9, 1.1, h=1e-4)
    assert res < 1e-6


def test_jet_consistency_second_order_in_h():
    surf = immersions.catalog("legendrian_torus")
    r1 = immersions.jet_consistency_check(surf, 0.7, 0.3, h=1e-3)
    r2 = immersions.jet_consistency_check(surf, 0.7, 0.3, h=5e-4)
    assert 3.2 < r1 / r2 < 4.8


def test_jet_consistency_rejects_bad_step():
    surf = immersions.catalog("legendrian_torus")
    with pytest.raises(ValueError):
        immersions.jet_consistency_check(surf, 0.0, 0.0, h=1e-2)


# ---------------------------------------------------------------------------
# Legendrian residuals of the catalog


def test_torus_strictly_legendrian_clifford_not():
    rng = np.random.default_rng(1)
    u = rng.uniform(0, 2 * np.pi, 500)
    v = rng.uniform(0, 2 * np.pi, 500)
    for theta in (0.0, 1.0, np.pi):
        t = immersions.catalog("legendrian_torus", theta=theta)
        jet = immersions.eval_jet2(t, u, v)
        au = contact.contact_form(jet.value, jet.du, check=False)
        av = contact.contact_form(jet.value, jet.dv, check=False)
        assert max(np.max(np.abs(au)), np.max(np.abs(av))) < 1e-12
    c = immersions.catalog("clifford_s3")
    jet = immersions.eval_jet2(c, u, v)
    au = contact.contact_form(jet.value, jet.du, check=False)
    av = contact.contact_form(jet.value, jet.dv, check=False)
    assert np.max(np.abs(au - 0.5)) < 1e-12
    assert np.max(np.abs(av - 0.5)) < 1e-12


def test_equatorial_sphere_legendrian():
    s = immersions.catalog("equatorial_legendrian_sphere")
    rng = np.random.default_rng(2)
    u = rng.uniform(0, 2 * np.pi, 200)
    v = rng.uniform(-1.2, 1.2, 200)
    jet = immersions.eval_jet2(s, u, v)
    assert np.max(np.abs(contact.contact_form(jet.value, jet.du, check=False))) < 1e-12
    assert np.max(np.abs(contact.contact_form(jet.value, jet.dv, check=False))) < 1e-12


# ---------------------------------------------------------------------------
# grid resampling and differentiation schemes


def test_resample_requires_double_periodicity():
    s = immersions.catalog("equatorial_legendrian_sphere")
    with pytest.raises(ValueError):
        immersions.resample_to_grid(s, 16)
    with pytest.raises(ValueError):
        immersions.resample_to_grid(immersions.catalog("legendrian_torus"), 15)
    with pytest.raises(ValueError):
        immersions.resample_to_grid(immersions.catalog("legendrian_torus"), 6)


def _max_jet_error(grid, analytic):
    uu, vv = grids.grid_nodes(grid.n)
    exact = analytic.evaluator(uu, vv)
    fd = grid.jets()
    return max(
        float(np.max(contact.norm(getattr(fd, f) - getattr(exact, f))))
        for f in ("du", "dv", "duu", "duv", "dvv")
    )


def test_grid_jets_spectral_machine_accurate():
    t = immersions.catalog("legendrian_torus")
    g = immersions.resample_to_grid(t, 32, "spectral")
    assert _max_jet_error(g, t) < 1e-12


def test_grid_jets_fd4_accuracy_and_refinement():
    t = immersions.catalog("legendrian_torus")
    e32 = _max_jet_error(immersions.resample_to_grid(t, 32, "fd4"), t)
    assert e32 < 1e-4
    e64 = _max_jet_error(immersions.resample_to_grid(t, 64, "fd4"), t)
    order = np.log2(e32 / e64)
    assert order > 3.5


def test_grid_jets_fd2_second_order():
    t = immersions.catalog("legendrian_torus")
    e16 = _max_jet_error(immersions.resample_to_grid(t, 16, "fd2"), t)
    e32 = _max_jet_error(immersions.resample_to_grid(t, 32, "fd2"), t)
    assert 3.2 < e16 / e32 < 4.8


# ---------------------------------------------------------------------------
# serialization


def test_grid_round_trip(tmp_path):
    g = immersions.perturbed_torus(eps=0.02, n=16, scheme="fd4", seed=3)
    path = tmp_path / "grid.txt"
    immersions.save_grid(g, path)
    loaded = immersions.load_grid(path)
    assert loaded.scheme == "fd4"
    assert loaded.n == 16
    assert np.array_equal(loaded.positions, g.positions)
    header = path.read_text().splitlines()[0]
    assert header == "legendrian-lab grid v1 N=16 scheme=fd4"


def test_grid_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a grid\n")
    with pytest.raises(ValueError):
        immersions.load_grid(path)


# ---------------------------------------------------------------------------
# perturbations


def test_perturb_zero_field_is_identity():
    g = immersions.resample_to_grid(immersions.catalog("legendrian_torus"), 16, "spectral")
    out = immersions.perturb_legendrian(g, np.zeros((16, 16)), steps=3, tau=0.5)
    assert np.allclose(out.surface.positions, g.positions, atol=1e-15)
    assert out.legendrian_residual < 1e-12


def test_perturb_drift_quadratic_in_amplitude():
    g = immersions.resample_to_grid(immersions.catalog("legendrian_torus"), 32, "spectral")
    uu, _ = grids.grid_nodes(32)
    residuals = []
    amps = [0.01, 0.02, 0.04]
    for eps in amps:
        out = immersions.perturb_legendrian(g, eps * np.cos(uu), steps=1, tau=1.0)
        residuals.append(out.legendrian_residual)
    slope = np.polyfit(np.log(amps), np.log(residuals), 1)[0]
    assert slope > 1.9


def test_perturb_rejects_non_legendrian_source_and_large_steps():
    c = immersions.resample_to_grid(immersions.catalog("clifford_s3"), 16, "spectral")
    with pytest.raises(ValueError):
        immersions.perturb_legendrian(c, np.zeros((16, 16)))
    g = immersions.resample_to_grid(immersions.catalog("legendrian_torus"), 16, "spectral")
    uu, _ = grids.grid_nodes(16)
    with pytest.raises(ValueError):
        immersions.perturb_legendrian(g, 0.8 * np.cos(uu), steps=4, tau=1.0)


def test_stable_mode_perturbation_increases_area():
    geo = grid_ops.derived_geometry(
        immersions.perturbed_torus(eps=0.02, n=32, scheme="spectral", seed=0, mode="stable")
    )
    assert grid_ops.surface_area(geo) > A_TORUS + 1e-4


def test_euler_perturbation_along_stable_mode_increases_area():
    # cos(2u) sits above the stability threshold of the torus area Hessian,
    # so the deformed surface is strictly larger (quadrature oracle)
    g = immersions.resample_to_grid(immersions.catalog("legendrian_torus"), 32, "spectral")
    uu, _ = grids.grid_nodes(32)
    out = immersions.perturb_legendrian(g, 0.02 * np.cos(2 * uu), steps=1, tau=1.0)
    geo = grid_ops.derived_geometry(out.surface)
    assert grid_ops.surface_area(geo) > A_TORUS + 1e-6


def test_ambient_perturbation_exactly_legendrian():
    for mode in ("stable", "generic"):
        g = immersions.perturbed_torus(eps=0.02, n=16, scheme="spectral", seed=1, mode=mode)
        assert immersions.legendrian_residual_of_grid(g) < 1e-10


def test_ambient_perturbation_scale_set_by_eps():
    ham = immersions.random_contact_hamiltonian(0.05, seed=2)
    base = immersions.resample_to_grid(immersions.catalog("legendrian_torus"), 32, "fd4")
    f = ham.value(base.positions)
    assert np.max(np.abs(f)) == pytest.approx(0.05, rel=1e-12)
