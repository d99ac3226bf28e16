from __future__ import annotations

import numpy as np
import pytest

from tanhvof.grid import (
    CartesianGrid2D,
    CellField,
    LocationError,
    cell_center,
    fill_ghosts,
    field_from_interior,
    locate_cell,
    locate_cells,
)


def test_cell_center_examples():
    g = CartesianGrid2D(2, 2)
    assert cell_center(g, 0, 0) == (0.25, 0.25)
    assert cell_center(g, 1, 1) == (0.75, 0.75)
    g100 = CartesianGrid2D(100, 100)
    assert cell_center(g100, 49, 74) == pytest.approx((0.495, 0.745), abs=1e-15)


def test_cell_center_ghost_extrapolates():
    g = CartesianGrid2D(4, 4)
    x, y = cell_center(g, -1, 4)
    assert x == pytest.approx(-0.125)
    assert y == pytest.approx(1.125)


def test_cell_center_out_of_range():
    g = CartesianGrid2D(4, 4)
    with pytest.raises(IndexError):
        cell_center(g, 7, 0)
    with pytest.raises(IndexError):
        cell_center(g, 0, -3)


def test_locate_cell_examples():
    g = CartesianGrid2D(10, 10)
    assert locate_cell(g, (0.05, 0.05)) == (0, 0)
    # tie on the face x = 0.1 resolves to the lower cell
    assert locate_cell(g, (0.1, 0.55)) == (0, 5)


def test_locate_cell_roundtrip_identity():
    g = CartesianGrid2D(13, 7)
    for i in range(g.nx):
        for j in range(g.ny):
            assert locate_cell(g, cell_center(g, i, j)) == (i, j)


def test_locate_cell_ghost_range_and_errors():
    g = CartesianGrid2D(10, 10)
    assert locate_cell(g, (-0.05, 0.5)) == (-1, 4)
    # exactly on the extended-domain lower face belongs to the outermost ghost
    assert locate_cell(g, (-0.2, 0.5)) == (-2, 4)
    with pytest.raises(LocationError):
        locate_cell(g, (-0.21, 0.5))
    with pytest.raises(LocationError):
        locate_cell(g, (0.5, 1.3))


def test_locate_cells_vectorized_matches_scalar():
    g = CartesianGrid2D(9, 11)
    rng = np.random.default_rng(3)
    xs = rng.uniform(-0.15, 1.15, 200)
    ys = rng.uniform(-0.15, 1.15, 200)
    ii, jj = locate_cells(g, xs, ys)
    for x, y, i, j in zip(xs, ys, ii, jj):
        assert locate_cell(g, (x, y)) == (i, j)


def test_fill_ghosts_constant_and_copy_rule():
    g = CartesianGrid2D(4, 4)
    f = field_from_interior(g, np.full((4, 4), 3.5))
    assert (f.values == 3.5).all()

    column = np.tile(np.arange(4.0)[:, None], (1, 4))
    f2 = field_from_interior(g, column)
    # ghost at i = -1 copies the i = 0 interior value
    assert (f2.values[g.nghost - 1, :] == 0.0).all()
    assert (f2.values[0, :] == 0.0).all()
    assert (f2.values[-1, :] == 3.0).all()


def test_fill_ghosts_idempotent_and_interior_untouched():
    g = CartesianGrid2D(5, 6)
    rng = np.random.default_rng(11)
    f = CellField(g, rng.normal(size=g.shape))
    interior_before = f.interior.copy()
    fill_ghosts(f)
    assert np.array_equal(f.interior, interior_before)
    once = f.values.copy()
    fill_ghosts(f)
    assert np.array_equal(f.values, once)


def test_fill_ghosts_preserves_interior_mass():
    g = CartesianGrid2D(6, 6)
    rng = np.random.default_rng(5)
    f = CellField(g, rng.uniform(size=g.shape))
    mass_before = f.interior.sum() * g.cell_area
    fill_ghosts(f)
    assert f.interior.sum() * g.cell_area == mass_before


def test_grid_validation():
    with pytest.raises(ValueError):
        CartesianGrid2D(4, 4, nghost=1)
    with pytest.raises(ValueError):
        CartesianGrid2D(0, 4)
    with pytest.raises(ValueError):
        CartesianGrid2D(4, 4, x0=1.0, x1=0.0)


def test_field_shape_validation():
    g = CartesianGrid2D(4, 4)
    with pytest.raises(ValueError):
        CellField(g, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        field_from_interior(g, np.zeros((5, 4)))
