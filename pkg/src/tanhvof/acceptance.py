"""Self-contained property checks behind the CLI ``verify`` subcommand.

Each check exercises one contract of the scheme against an independent
oracle (closed forms, fine composite Simpson quadrature, exact
characteristics) and reports a pass/fail with the measured numbers. The
pytest acceptance suite runs these same functions plus the long benchmark
criteria. All randomness is from fixed-seed generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .benchmark import make_case, init_fields
from .grid import CartesianGrid2D, field_from_interior
from .reconstruction import (
    LevelSetPolynomial,
    ThincReconstruction,
    cell_average_H,
    fit_quadratic_coeffs,
    make_quadrature,
    poly_eval,
    psi_eval,
    inverse_thinc_eval,
    thinc_eval,
    solve_shift,
)
from .reinit import dilate_mask, eikonal_residual, fast_sweep_reinit, tag_interface_cells
from .transport import SchemeState, VelocityField, advance_step, departure_point


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_unit_gradient_quadratics(
    rng: np.random.Generator, n: int, dx: float, curvature: float = 0.5
) -> np.ndarray:
    """(n, 6) coefficient rows with |grad| = 1 at the origin and quadratic
    coefficients up to `curvature` in cell units."""
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    a00 = rng.uniform(-0.6, 0.6, n) * dx
    quad = rng.uniform(-curvature, curvature, (n, 3)) / dx
    return np.column_stack([a00, np.cos(theta), np.sin(theta), quad])


def simpson_shift_oracle(
    coeffs: np.ndarray, vof: np.ndarray, beta: float, dx: float, dy: float,
    npts: int = 101,
) -> np.ndarray:
    """Bisection root of the conservation constraint on a composite-Simpson
    tensor grid (npts^2 points), independent of the production Newton path."""
    x = np.linspace(-0.5 * dx, 0.5 * dx, npts)
    y = np.linspace(-0.5 * dy, 0.5 * dy, npts)
    wx = np.ones(npts)
    wx[1:-1:2], wx[2:-1:2] = 4.0, 2.0
    wx *= (dx / (npts - 1)) / 3.0
    wy = np.ones(npts)
    wy[1:-1:2], wy[2:-1:2] = 4.0, 2.0
    wy *= (dy / (npts - 1)) / 3.0
    X, Y = np.meshgrid(x, y, indexing="ij")
    wmean = np.outer(wx, wy).ravel() / (dx * dy)

    out = np.empty(len(coeffs))
    h = max(dx, dy)
    for start in range(0, len(coeffs), 200):
        sl = slice(start, min(start + 200, len(coeffs)))
        pq = poly_eval(coeffs[sl], X.ravel()[None, :], Y.ravel()[None, :])
        target = vof[sl]
        lo = np.full(pq.shape[0], -5.0 * h)
        hi = np.full(pq.shape[0], 5.0 * h)

        def mean_h(d):
            return (0.5 * (1.0 + np.tanh(beta * (pq + d[:, None])))) @ wmean

        for _ in range(64):
            grow_lo = mean_h(lo) > target
            grow_hi = mean_h(hi) < target
            if not (grow_lo.any() or grow_hi.any()):
                break
            lo[grow_lo] *= 2.0
            hi[grow_hi] *= 2.0
        while (hi - lo).max() > 1e-13:
            mid = 0.5 * (lo + hi)
            high = mean_h(mid) > target
            hi[high] = mid[high]
            lo[~high] = mid[~high]
        out[sl] = 0.5 * (lo + hi)
    return out


def check_conservation_closure(
    n_cells: int = 1000, dx: float = 1.0 / 64.0, beta0: float = 6.0, seed: int = 2024
) -> CheckResult:
    """Randomized interface cells: the solved shift must close the cell
    average to 1e-10 and match the Simpson/bisection oracle to 1e-8."""
    rng = np.random.default_rng(seed)
    quad = make_quadrature(dx, dx)
    beta = beta0 / dx
    coeffs = random_unit_gradient_quadratics(rng, n_cells, dx)
    vof = rng.uniform(1e-6, 1.0 - 1e-6, n_cells)

    worst_closure = 0.0
    shifts = np.empty(n_cells)
    for k in range(n_cells):
        poly = LevelSetPolynomial((0.0, 0.0), coeffs[k])
        d = solve_shift(poly, float(vof[k]), beta, None, quad)
        shifts[k] = d
        recon = ThincReconstruction(poly, d, beta, (0, 0))
        worst_closure = max(worst_closure, abs(cell_average_H(recon, quad) - vof[k]))

    oracle = simpson_shift_oracle(coeffs, vof, beta, dx, dx)
    worst_shift = float(np.abs(shifts - oracle).max())
    passed = worst_closure <= 1e-10 and worst_shift <= 1e-8
    return CheckResult(
        "conservation-closure", passed,
        f"{n_cells} cells: max|avg(H)-vof|={worst_closure:.2e} (<=1e-10), "
        f"max|d-oracle|={worst_shift:.2e} (<=1e-8)",
    )


def check_scaling_roundtrip(n_points: int = 100_000, seed: int = 7) -> CheckResult:
    """thinc_eval then the inverse recovers psi to 1e-9 wherever H is
    unsaturated (H in [1e-7, 1-1e-7])."""
    rng = np.random.default_rng(seed)
    dx = 1.0 / 64.0
    beta = 6.0 / dx
    worst = 0.0
    total = 0
    while total < n_points:
        coeffs = random_unit_gradient_quadratics(rng, 200, dx)[0]
        poly = LevelSetPolynomial((0.0, 0.0), coeffs)
        recon = ThincReconstruction(poly, float(rng.uniform(-dx, dx)), beta, (0, 0))
        px = rng.uniform(-1.5 * dx, 1.5 * dx, 2000)
        py = rng.uniform(-1.5 * dx, 1.5 * dx, 2000)
        h = thinc_eval(recon, (px, py))
        keep = (h >= 1e-7) & (h <= 1.0 - 1e-7)
        if not keep.any():
            continue
        px, py = px[keep], py[keep]
        err = np.abs(
            inverse_thinc_eval(recon, (px, py)) - psi_eval(recon, (px, py))
        ).max()
        worst = max(worst, float(err))
        total += int(keep.sum())
    return CheckResult(
        "scaling-roundtrip", worst <= 1e-9,
        f"{total} points: max|inverse - psi| = {worst:.2e} (<= 1e-9)",
    )


def check_fit_exactness(n_fields: int = 100, seed: int = 11) -> CheckResult:
    """The stencil fit reproduces global quadratics to 1e-12 per coefficient
    (before gradient normalization)."""
    rng = np.random.default_rng(seed)
    grid = CartesianGrid2D(32, 32)
    X, Y = grid.interior_centers()
    worst = 0.0
    for _ in range(n_fields):
        c = rng.uniform(-1.0, 1.0, 6)  # c00, c10, c01, c20, c11, c02 (global x, y)
        phi = field_from_interior(
            grid,
            c[0] + c[1] * X + c[2] * Y + c[3] * X * X + c[4] * X * Y + c[5] * Y * Y,
        )
        i = int(rng.integers(1, grid.nx - 1))
        j = int(rng.integers(1, grid.ny - 1))
        xc = grid.x0 + (i + 0.5) * grid.dx
        yc = grid.y0 + (j + 0.5) * grid.dy
        expected = np.array([
            c[0] + c[1] * xc + c[2] * yc + c[3] * xc * xc + c[4] * xc * yc + c[5] * yc * yc,
            c[1] + 2.0 * c[3] * xc + c[4] * yc,
            c[2] + c[4] * xc + 2.0 * c[5] * yc,
            c[3], c[4], c[5],
        ])
        fitted = fit_quadratic_coeffs(phi, (i, j))
        worst = max(worst, float(np.abs(fitted - expected).max()))
    return CheckResult(
        "fit-exactness", worst <= 1e-12,
        f"{n_fields} random quadratics: max coefficient error {worst:.2e} (<= 1e-12)",
    )


def check_uniform_fixed_point(n: int = 64, steps: int = 100) -> CheckResult:
    """A VOF field identically 1 must stay put under the vortex flow."""
    case = make_case("vortex")
    grid = CartesianGrid2D(n, n)
    ones = np.ones((n, n))
    state = SchemeState.from_fields(
        field_from_interior(grid, ones),
        field_from_interior(grid, ones),
        quad=make_quadrature(grid.dx, grid.dy),
    )
    dt = 0.25 * grid.dx / case.velocity.max_speed
    for _ in range(steps):
        state, _ = advance_step(state, case.velocity, dt)
    worst = float(np.abs(state.vof.interior - 1.0).max())
    return CheckResult(
        "uniform-fixed-point", worst <= 1e-13,
        f"{steps} steps on {n}^2: max deviation {worst:.2e} (<= 1e-13)",
    )


def check_eikonal_quality(n: int = 128) -> CheckResult:
    """Reinitializing the exact disk distance field keeps the band bit-frozen
    and leaves a Godunov gradient within 5% of 1 away from the band."""
    case = make_case("vortex")
    grid = CartesianGrid2D(n, n)
    vof, phi = init_fields(case, grid)
    mask = tag_interface_cells(vof)
    out = fast_sweep_reinit(phi, mask)
    frozen_ok = bool(
        np.array_equal(out.interior[mask.mask], phi.interior[mask.mask])
    )
    res = eikonal_residual(out)
    far = ~dilate_mask(mask.mask, 2)
    worst = float(np.abs(res[far] - 1.0).max())
    passed = frozen_ok and worst <= 0.05
    return CheckResult(
        "eikonal-quality", passed,
        f"band bit-frozen: {frozen_ok}; max||grad|-1| off-band = {worst:.2e} (<= 0.05)",
    )


def check_departure_order(dt: float = 0.1) -> CheckResult:
    """Halving dt must cut the one-step backtrace error by ~8x (in [6, 10])."""
    case = make_case("zalesak")

    def max_err(step):
        worst = 0.0
        for k in range(8):
            ang = 2.0 * math.pi * k / 8.0
            p = (0.5 + 0.25 * math.cos(ang), 0.5 + 0.25 * math.sin(ang))
            got = departure_point(p, case.velocity, 1.0, step)
            c, s = math.cos(step), math.sin(step)
            X, Y = p[0] - 0.5, p[1] - 0.5
            exact = (0.5 + c * X - s * Y, 0.5 + s * X + c * Y)
            worst = max(worst, math.hypot(got[0] - exact[0], got[1] - exact[1]))
        return worst

    ratio = max_err(dt) / max_err(0.5 * dt)
    return CheckResult(
        "departure-order", 6.0 <= ratio <= 10.0,
        f"error ratio dt/(dt/2) = {ratio:.2f} (in [6, 10])",
    )


def quick_checks() -> list[CheckResult]:
    """The fast property suite run by the CLI ``verify`` subcommand."""
    return [
        check_fit_exactness(),
        check_conservation_closure(),
        check_scaling_roundtrip(),
        check_departure_order(),
        check_uniform_fixed_point(),
        check_eikonal_quality(),
    ]
