from __future__ import annotations

import numpy as np
import pytest

from tanhvof.grid import CartesianGrid2D, cell_center, field_from_interior
from tanhvof.reconstruction import (
    DegenerateGradientError,
    LevelSetPolynomial,
    ThincReconstruction,
    beta_from_thickness,
    build_reconstructions,
    cell_average_H,
    fit_polynomial,
    fit_quadratic_coeffs,
    inverse_thinc_eval,
    make_quadrature,
    psi_eval,
    solve_shift,
    thinc_eval,
)

# Simpson+bisection oracle value for P = X, vof = 0.75, beta = 6 on the unit
# cell (101x101 composite Simpson; the closed-form root is 0.2542454803).
ORACLE_SHIFT_075 = 0.2542454837060295


def unit_poly(*coeffs):
    return LevelSetPolynomial((0.0, 0.0), np.array(coeffs, dtype=float))


# ---------------------------------------------------------------------------
# Quadrature


def test_volume_weights_sum_to_cell_area():
    q = make_quadrature(0.25, 0.5)
    assert q.vol_w.sum() == pytest.approx(0.125, rel=1e-14)
    assert q.face_weights_x.sum() == pytest.approx(0.5, rel=1e-14)
    assert q.face_weights_y.sum() == pytest.approx(0.25, rel=1e-14)


def test_volume_rule_exact_for_degree_five():
    q = make_quadrature(1.0, 1.0)
    got = np.sum(q.vol_w * q.vol_x**5)
    assert got == pytest.approx(0.0, abs=1e-16)
    # int_{-1/2}^{1/2} x^4 dx = 1/80;  int y^2 dy = 1/12
    got = np.sum(q.vol_w * q.vol_x**4 * q.vol_y**2)
    assert got == pytest.approx((1.0 / 80.0) * (1.0 / 12.0), rel=1e-13)


def test_face_rule_exact_for_degree_three():
    q = make_quadrature(1.0, 1.0)
    got = np.sum(q.face_weights_x * q.face_offsets_x**3)
    assert got == pytest.approx(0.0, abs=1e-16)
    got = np.sum(q.face_weights_x * q.face_offsets_x**2)
    assert got == pytest.approx(1.0 / 12.0, rel=1e-13)


# ---------------------------------------------------------------------------
# Polynomial fit


def test_fit_linear_field_exactly():
    grid = CartesianGrid2D(8, 8)
    X, Y = grid.interior_centers()
    phi = field_from_interior(grid, X - 0.5)
    coeffs = fit_quadratic_coeffs(phi, (4, 4))
    xc, _ = cell_center(grid, 4, 4)
    assert coeffs[0] == pytest.approx(xc - 0.5, abs=1e-14)
    assert coeffs[1] == pytest.approx(1.0, abs=1e-13)
    assert np.abs(coeffs[2:]).max() < 1e-12
    poly = fit_polynomial(phi, (4, 4))
    assert poly.gradient_magnitude_at_origin == pytest.approx(1.0, abs=1e-12)


def test_fit_reproduces_exact_quadratic():
    grid = CartesianGrid2D(16, 16)
    X, Y = grid.interior_centers()
    cx, cy, r = 0.4, 0.6, 0.2
    phi = field_from_interior(
        grid, ((X - cx) ** 2 + (Y - cy) ** 2 - r * r) / (2.0 * r)
    )
    cell = (5, 9)
    xc, yc = cell_center(grid, *cell)
    expected = np.array(
        [
            ((xc - cx) ** 2 + (yc - cy) ** 2 - r * r) / (2 * r),
            (xc - cx) / r,
            (yc - cy) / r,
            1.0 / (2 * r),
            0.0,
            1.0 / (2 * r),
        ]
    )
    fitted = fit_quadratic_coeffs(phi, cell)
    assert np.abs(fitted - expected).max() < 1e-12


def test_fit_circle_sdf_interface_accuracy():
    # fitted polynomial evaluated at the true nearest interface point stays
    # O(dx^3): oracle is the closed-form distance to the circle
    grid = CartesianGrid2D(64, 64)
    cx, cy, r = 0.5, 0.75, 0.15
    X, Y = grid.interior_centers()
    phi = field_from_interior(grid, r - np.hypot(X - cx, Y - cy))
    dx = grid.dx
    worst = 0.0
    for i in range(grid.nx):
        for j in range(grid.ny):
            xc, yc = cell_center(grid, i, j)
            rho = np.hypot(xc - cx, yc - cy)
            if abs(r - rho) > 0.5 * dx:
                continue
            poly = fit_polynomial(phi, (i, j))
            px = cx + r * (xc - cx) / rho
            py = cy + r * (yc - cy) / rho
            worst = max(worst, abs(float(poly(px, py))))
    assert worst <= 10.0 * dx**3


def test_fit_degenerate_gradient_raises():
    grid = CartesianGrid2D(8, 8)
    phi = field_from_interior(grid, np.full((8, 8), 2.0))
    with pytest.raises(DegenerateGradientError):
        fit_polynomial(phi, (4, 4))


# ---------------------------------------------------------------------------
# Steepness


def test_beta_from_thickness_values():
    assert beta_from_thickness(1.5, 1e-8, 1.0) == pytest.approx(6.14, abs=0.01)
    assert beta_from_thickness(1.5, 1e-8, 1.0 / 64.0) == pytest.approx(392.97, abs=0.01)


def test_beta_from_thickness_domain_errors():
    with pytest.raises(ValueError):
        beta_from_thickness(1.5, 0.5, 1.0)
    with pytest.raises(ValueError):
        beta_from_thickness(-1.0, 1e-8, 1.0)
    with pytest.raises(ValueError):
        beta_from_thickness(1.5, 1e-8, 0.0)


# ---------------------------------------------------------------------------
# Shift solve


def test_solve_shift_symmetric_root_is_zero():
    quad = make_quadrature(1.0, 1.0)
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    for beta in (2.0, 6.0, 20.0):
        assert abs(solve_shift(poly, 0.5, beta, None, quad)) < 1e-12


def test_solve_shift_matches_simpson_bisection_oracle():
    quad = make_quadrature(1.0, 1.0)
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    d = solve_shift(poly, 0.75, 6.0, None, quad)
    assert d == pytest.approx(ORACLE_SHIFT_075, abs=1e-6)


def test_simpson_oracle_reproduces_frozen_value():
    from tanhvof.acceptance import simpson_shift_oracle

    coeffs = np.array([[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]])
    d = simpson_shift_oracle(coeffs, np.array([0.75]), 6.0, 1.0, 1.0)
    assert d[0] == pytest.approx(ORACLE_SHIFT_075, abs=1e-12)


def test_solve_shift_monotone_in_vof():
    quad = make_quadrature(1.0, 1.0)
    poly = unit_poly(0.05, 0.8, 0.6, 0.3, -0.2, 0.1)
    d_low = solve_shift(poly, 0.6, 6.0, None, quad)
    d_high = solve_shift(poly, 0.9, 6.0, None, quad)
    assert d_high > d_low


def test_solve_shift_band_edges_converge():
    quad = make_quadrature(1.0 / 64.0, 1.0 / 64.0)
    poly = unit_poly(0.002, 0.6, -0.8, 3.0, 1.0, -2.0)
    beta = 6.0 * 64.0
    for vof in (1e-8, 1e-6, 0.5, 1.0 - 1e-6, 1.0 - 1e-8):
        d = solve_shift(poly, vof, beta, None, quad)
        recon = ThincReconstruction(poly, d, beta, (0, 0))
        assert abs(cell_average_H(recon, quad) - vof) <= 1e-10


def test_solve_shift_precondition():
    quad = make_quadrature(1.0, 1.0)
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        solve_shift(poly, 1e-9, 6.0, None, quad)
    with pytest.raises(ValueError):
        solve_shift(poly, 1.0, 6.0, None, quad)


# ---------------------------------------------------------------------------
# Point evaluations


def test_thinc_eval_examples():
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    recon = ThincReconstruction(poly, 0.0, 6.0, (0, 0))
    assert thinc_eval(recon, (0.0, 0.3)) == pytest.approx(0.5, abs=1e-15)
    recon2 = ThincReconstruction(poly, 0.25, 6.0, (0, 0))
    assert thinc_eval(recon2, (0.0, 0.0)) == pytest.approx(0.952574, abs=1e-6)


def test_thinc_antisymmetry_is_exact():
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    recon = ThincReconstruction(poly, 0.0, 6.0, (0, 0))
    for s in np.linspace(-2.0, 2.0, 41):
        assert thinc_eval(recon, (s, 0.0)) + thinc_eval(recon, (-s, 0.0)) == 1.0


def test_thinc_strictly_inside_unit_interval_near_interface():
    poly = unit_poly(0.1, 0.8, -0.6, 0.5, 0.3, -0.4)
    recon = ThincReconstruction(poly, 0.05, 6.0, (0, 0))
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1.5, 1.5, (500, 2))
    h = thinc_eval(recon, (pts[:, 0], pts[:, 1]))
    assert (h > 0.0).all() and (h < 1.0).all()


def test_inverse_thinc_examples():
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    recon = ThincReconstruction(poly, 0.0, 6.0, (0, 0))
    assert inverse_thinc_eval(recon, (0.0, 0.0)) == pytest.approx(0.0, abs=1e-15)
    recon2 = ThincReconstruction(poly, 0.25, 6.0, (0, 0))
    # inverse of the thinc_eval example: H = 0.952574... at psi = 0.25
    assert inverse_thinc_eval(recon2, (0.0, 0.0)) == pytest.approx(0.25, abs=1e-12)


def test_inverse_thinc_roundtrip_matches_psi():
    poly = unit_poly(0.02, 0.6, 0.8, 0.4, -0.3, 0.2)
    recon = ThincReconstruction(poly, 0.03, 6.0, (0, 0))
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1.2, 1.2, (2000, 2))
    h = thinc_eval(recon, (pts[:, 0], pts[:, 1]))
    keep = (h >= 1e-7) & (h <= 1 - 1e-7)
    inv = inverse_thinc_eval(recon, (pts[keep, 0], pts[keep, 1]))
    psi = psi_eval(recon, (pts[keep, 0], pts[keep, 1]))
    assert np.abs(inv - psi).max() <= 1e-9


def test_inverse_thinc_saturation_clamped():
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    recon = ThincReconstruction(poly, 0.0, 6.0, (0, 0))
    far = inverse_thinc_eval(recon, (100.0, 0.0))
    assert np.isfinite(far)


def test_psi_eval_properties():
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    recon = ThincReconstruction(poly, 0.1, 6.0, (0, 0))
    # zero set of psi = X + 0.1 is the line X = -0.1, where H = 1/2
    assert psi_eval(recon, (-0.1, 0.7)) == pytest.approx(0.0, abs=1e-15)
    assert thinc_eval(recon, (-0.1, 0.7)) == pytest.approx(0.5, abs=1e-15)
    # shift is constant: grad psi == grad P
    gx, gy = recon.poly.gradient(0.3, -0.2)
    assert (gx, gy) == (1.0, 0.0)


def test_cell_average_H_examples():
    quad = make_quadrature(1.0, 1.0)
    poly = unit_poly(0, 1, 0, 0, 0, 0)
    saturated = ThincReconstruction(poly, -50.0, 6.0, (0, 0))
    assert cell_average_H(saturated, quad) <= 1e-8
    symmetric = ThincReconstruction(poly, 0.0, 6.0, (0, 0))
    assert cell_average_H(symmetric, quad) == pytest.approx(0.5, abs=1e-12)
    d = solve_shift(poly, 0.3, 6.0, None, quad)
    solved = ThincReconstruction(poly, d, 6.0, (0, 0))
    assert cell_average_H(solved, quad) == pytest.approx(0.3, abs=1e-10)


def test_cell_average_H_cell_mismatch():
    quad = make_quadrature(1.0, 1.0)
    recon = ThincReconstruction(unit_poly(0, 1, 0, 0, 0, 0), 0.0, 6.0, (3, 4))
    with pytest.raises(ValueError):
        cell_average_H(recon, quad, cell=(0, 0))


# ---------------------------------------------------------------------------
# Whole-field table


def _disk_fields(n=48):
    grid = CartesianGrid2D(n, n)
    X, Y = grid.interior_centers()
    sdf = 0.15 - np.hypot(X - 0.5, Y - 0.75)
    phi = field_from_interior(grid, sdf)
    vof = field_from_interior(grid, np.clip(0.5 + sdf / grid.dx, 0.0, 1.0))
    return grid, vof, phi


def test_build_reconstructions_band_and_lookup():
    grid, vof, phi = _disk_fields()
    quad = make_quadrature(grid.dx, grid.dy)
    table = build_reconstructions(vof, phi, 6.0, quad)
    vin = vof.interior
    band = (vin >= 1e-8) & (vin <= 1 - 1e-8)
    assert np.array_equal(table.band_mask, band)
    assert table.n == band.sum()
    assert not table.degenerate_mask.any()
    i, j = map(int, np.argwhere(band)[0])
    recon = table.get(i, j)
    assert recon is not None
    assert recon.cell == (i, j)
    outside = map(int, np.argwhere(~band)[0])
    assert table.get(*outside) is None


def test_build_reconstructions_closes_conservation_per_cell():
    grid, vof, phi = _disk_fields()
    quad = make_quadrature(grid.dx, grid.dy)
    table = build_reconstructions(vof, phi, 6.0, quad)
    vin = vof.interior
    worst = 0.0
    for slot in range(table.n):
        i, j = table.cells[slot]
        recon = table.get(int(i), int(j))
        worst = max(worst, abs(cell_average_H(recon, quad) - vin[i, j]))
    assert worst <= 1e-10


def test_build_reconstructions_empty_band():
    grid = CartesianGrid2D(8, 8)
    ones = field_from_interior(grid, np.ones((8, 8)))
    table = build_reconstructions(ones, ones, 6.0, make_quadrature(grid.dx, grid.dy))
    assert table.n == 0
    assert not table.effective_mask.any()


def test_normalized_gradient_unit_at_origin():
    grid, vof, phi = _disk_fields()
    quad = make_quadrature(grid.dx, grid.dy)
    table = build_reconstructions(vof, phi, 6.0, quad)
    g = np.hypot(table.coeffs[:, 1], table.coeffs[:, 2])
    assert np.abs(g - 1.0).max() <= 1e-12
