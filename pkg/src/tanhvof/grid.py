"""Uniform 2D Cartesian grid with ghost layers and cell-centered scalar fields.

Interior cells are indexed zero-based, row-major over (i, j): i along x,
j along y, j varying fastest in file output. Ghost indices run from
-nghost to n+nghost-1 on each axis. Arrays are stored padded, shape
(nx + 2*nghost, ny + 2*nghost), with axis 0 = i and axis 1 = j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class LocationError(ValueError):
    """Point lies outside the ghost-extended domain."""


@dataclass(frozen=True)
class CartesianGrid2D:
    """Uniform cell layout on [x0, x1] x [y0, y1] with nghost ghost layers."""

    nx: int
    ny: int
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0
    nghost: int = 2

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"cell counts must be positive, got ({self.nx}, {self.ny})")
        if self.nghost < 2:
            raise ValueError(f"nghost must be >= 2, got {self.nghost}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("domain bounds must satisfy x1 > x0 and y1 > y0")

    @property
    def dx(self) -> float:
        return (self.x1 - self.x0) / self.nx

    @property
    def dy(self) -> float:
        return (self.y1 - self.y0) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        """Padded array shape including ghosts."""
        g = self.nghost
        return (self.nx + 2 * g, self.ny + 2 * g)

    def interior_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids (nx, ny) of interior cell-center coordinates."""
        xs = self.x0 + (np.arange(self.nx) + 0.5) * self.dx
        ys = self.y0 + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(xs, ys, indexing="ij")


def cell_center(grid: CartesianGrid2D, i: int, j: int) -> tuple[float, float]:
    """Center of cell (i, j); ghost indices extrapolate the uniform layout."""
    g = grid.nghost
    if not (-g <= i < grid.nx + g and -g <= j < grid.ny + g):
        raise IndexError(f"cell ({i}, {j}) outside interior-plus-ghost range")
    return (grid.x0 + (i + 0.5) * grid.dx, grid.y0 + (j + 0.5) * grid.dy)


def locate_cell(grid: CartesianGrid2D, p: tuple[float, float]) -> tuple[int, int]:
    """Cell whose closed box contains p; face ties resolve to the lower index."""
    i = _locate_axis(p[0], grid.x0, grid.dx, grid.nx, grid.nghost)
    j = _locate_axis(p[1], grid.y0, grid.dy, grid.ny, grid.nghost)
    if i is None or j is None:
        raise LocationError(f"point {p} outside ghost-extended domain")
    return (i, j)


def _locate_axis(x: float, x0: float, dx: float, n: int, g: int) -> int | None:
    k = int(np.ceil((x - x0) / dx)) - 1
    if k == -g - 1 and x >= x0 - g * dx:
        k = -g  # exactly on the extended-domain lower face: only one cell owns it
    if -g <= k < n + g:
        return k
    return None


def locate_cells(
    grid: CartesianGrid2D, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized locate_cell; raises if any point is outside the extended domain."""
    g = grid.nghost
    i = np.ceil((np.asarray(x) - grid.x0) / grid.dx).astype(np.int64) - 1
    j = np.ceil((np.asarray(y) - grid.y0) / grid.dy).astype(np.int64) - 1
    i[(i == -g - 1) & (np.asarray(x) >= grid.x0 - g * grid.dx)] = -g
    j[(j == -g - 1) & (np.asarray(y) >= grid.y0 - g * grid.dy)] = -g
    if (
        (i < -g).any() or (i >= grid.nx + g).any()
        or (j < -g).any() or (j >= grid.ny + g).any()
    ):
        raise LocationError("point(s) outside ghost-extended domain")
    return i, j


@dataclass
class CellField:
    """One scalar per cell, ghosts included. values has shape grid.shape."""

    grid: CartesianGrid2D
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(self.grid.shape)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} != padded grid shape {self.grid.shape}"
            )

    @property
    def interior(self) -> np.ndarray:
        """View of the interior block, shape (nx, ny)."""
        g = self.grid.nghost
        return self.values[g : g + self.grid.nx, g : g + self.grid.ny]

    def copy(self) -> "CellField":
        return CellField(self.grid, self.values.copy())


def fill_ghosts(field: CellField) -> CellField:
    """Zero-gradient fill: each ghost cell copies the nearest interior value.

    Interior values are untouched (bit-identical). Returns the field.
    """
    grid = field.grid
    g = grid.nghost
    interior = field.values[g : g + grid.nx, g : g + grid.ny].copy()
    ii = np.clip(np.arange(-g, grid.nx + g), 0, grid.nx - 1)
    jj = np.clip(np.arange(-g, grid.ny + g), 0, grid.ny - 1)
    field.values[:] = interior[np.ix_(ii, jj)]
    return field


def field_from_interior(grid: CartesianGrid2D, interior: np.ndarray) -> CellField:
    """Build a CellField from an (nx, ny) interior array and fill its ghosts."""
    interior = np.asarray(interior, dtype=np.float64)
    if interior.shape != (grid.nx, grid.ny):
        raise ValueError(f"interior shape {interior.shape} != ({grid.nx}, {grid.ny})")
    out = CellField(grid)
    out.interior[:] = interior
    return fill_ghosts(out)
