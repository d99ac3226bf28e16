"""Isocontour extraction: marching squares over scattered node grids.

Used for VOF level contours (nodes = cell centers, bilinear interpolant) and
for the per-cell interface polynomial zero sets (nodes = a subgrid of psi
samples inside one cell). Saddle cells are disambiguated by the average of
the four corner values; crossing points are computed once per lattice edge so
chained polylines share coordinates exactly.
"""

from __future__ import annotations

import numpy as np

from .grid import CellField
from .transport import SchemeState

# Segment endpoints (pairs of local edge ids) for each of the 16 corner-sign
# cases; saddles (5, 10) are resolved at runtime. Local edges: b(ottom),
# r(ight), t(op), l(eft) of one lattice quad.
_CASES: dict[int, tuple[tuple[str, str], ...]] = {
    0: (), 15: (),
    1: (("l", "b"),), 14: (("l", "b"),),
    2: (("b", "r"),), 13: (("b", "r"),),
    3: (("l", "r"),), 12: (("l", "r"),),
    4: (("r", "t"),), 11: (("r", "t"),),
    6: (("b", "t"),), 9: (("b", "t"),),
    7: (("t", "l"),), 8: (("t", "l"),),
}
_SADDLE_JOINED = (("b", "r"), ("t", "l"))  # center on the inside: corners 1&3 linked
_SADDLE_SPLIT = (("l", "b"), ("r", "t"))


def _edge_key(which: str, ix: int, iy: int) -> tuple[str, int, int]:
    if which == "b":
        return ("h", ix, iy)
    if which == "t":
        return ("h", ix, iy + 1)
    if which == "l":
        return ("v", ix, iy)
    return ("v", ix + 1, iy)


def marching_squares(
    xs: np.ndarray, ys: np.ndarray, values: np.ndarray, level: float
) -> list[np.ndarray]:
    """Polylines of the bilinear-interpolant level set over a node lattice.

    xs (m,), ys (k,) are node coordinates; values is (m, k). Returns each
    polyline as an (npts, 2) array; closed loops repeat their first point.
    """
    v = np.asarray(values, dtype=np.float64)
    inside = v >= level
    m, k = v.shape
    if m < 2 or k < 2:
        return []

    a = inside[:-1, :-1]
    b = inside[1:, :-1]
    c = inside[1:, 1:]
    d = inside[:-1, 1:]
    case = (
        a.astype(np.int8)
        | (b.astype(np.int8) << 1)
        | (c.astype(np.int8) << 2)
        | (d.astype(np.int8) << 3)
    )
    hot = np.argwhere((case != 0) & (case != 15))
    if hot.size == 0:
        return []

    points: dict[tuple[str, int, int], tuple[float, float]] = {}

    def crossing(key):
        pt = points.get(key)
        if pt is None:
            which, ix, iy = key
            if which == "h":
                v0, v1 = v[ix, iy], v[ix + 1, iy]
                t = (level - v0) / (v1 - v0)
                pt = (xs[ix] + t * (xs[ix + 1] - xs[ix]), ys[iy])
            else:
                v0, v1 = v[ix, iy], v[ix, iy + 1]
                t = (level - v0) / (v1 - v0)
                pt = (xs[ix], ys[iy] + t * (ys[iy + 1] - ys[iy]))
            points[key] = pt
        return pt

    segments: list[tuple[tuple, tuple]] = []
    for ix, iy in hot:
        code = int(case[ix, iy])
        if code in (5, 10):
            center = 0.25 * (v[ix, iy] + v[ix + 1, iy] + v[ix + 1, iy + 1] + v[ix, iy + 1])
            center_inside = center >= level
            pairs = _SADDLE_JOINED if center_inside == (code == 5) else _SADDLE_SPLIT
        else:
            pairs = _CASES[code]
        for e1, e2 in pairs:
            k1 = _edge_key(e1, ix, iy)
            k2 = _edge_key(e2, ix, iy)
            crossing(k1)
            crossing(k2)
            segments.append((k1, k2))

    return _chain_segments(segments, points)


def _chain_segments(segments, points) -> list[np.ndarray]:
    """Join segments sharing lattice edges into polylines, deterministically."""
    adjacency: dict[tuple, list[int]] = {}
    for sid, (k1, k2) in enumerate(segments):
        adjacency.setdefault(k1, []).append(sid)
        adjacency.setdefault(k2, []).append(sid)

    used = [False] * len(segments)

    def walk(start_key):
        chain = [start_key]
        key = start_key
        while True:
            nxt = None
            for sid in adjacency[key]:
                if not used[sid]:
                    nxt = sid
                    break
            if nxt is None:
                break
            used[nxt] = True
            k1, k2 = segments[nxt]
            key = k2 if k1 == key else k1
            chain.append(key)
        return chain

    polylines = []
    open_ends = sorted(key for key, sids in adjacency.items() if len(sids) == 1)
    for key in open_ends:
        if all(used[s] for s in adjacency[key]):
            continue
        chain = walk(key)
        polylines.append(np.array([points[k] for k in chain]))
    for key in sorted(adjacency.keys()):
        if all(used[s] for s in adjacency[key]):
            continue
        chain = walk(key)  # remaining segments form closed loops
        polylines.append(np.array([points[k] for k in chain]))
    return polylines


def extract_contour(vof: CellField, level: float) -> list[np.ndarray]:
    """Level contours of the cell-center bilinear interpolant of a field."""
    if not (0.0 < level < 1.0):
        raise ValueError(f"contour level must lie in (0, 1), got {level}")
    grid = vof.grid
    xs = grid.x0 + (np.arange(grid.nx) + 0.5) * grid.dx
    ys = grid.y0 + (np.arange(grid.ny) + 0.5) * grid.dy
    return marching_squares(xs, ys, vof.interior, level)


def extract_psi_segments(state: SchemeState, samples_per_cell: int = 8) -> list[np.ndarray]:
    """Zero set of each interface cell's psi, clipped to the cell box.

    psi is sampled on an s x s node subgrid spanning the cell and contoured
    with marching squares; cells whose psi does not change sign contribute
    nothing. Polylines from different cells are kept separate.
    """
    if samples_per_cell < 2:
        raise ValueError("samples_per_cell must be >= 2")
    if state.recons is None:
        state.rebuild_reconstructions()
    table = state.recons
    grid = state.grid
    s = samples_per_cell
    frac = np.linspace(-0.5, 0.5, s)
    out: list[np.ndarray] = []
    for slot in range(table.n):
        xc, yc = table.origins[slot]
        xs = xc + frac * grid.dx
        ys = yc + frac * grid.dy
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        psi = table.psi_at(np.full(X.shape, slot), X, Y)
        out.extend(marching_squares(xs, ys, psi, 0.0))
    return out
