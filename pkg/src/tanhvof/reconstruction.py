"""Cell-local interface reconstruction via tanh scaling of a level set polynomial.

Each interface cell carries a quadratic surrogate P(X, Y) of the signed-distance
field in cell-local coordinates (X, Y) = (x - xc, y - yc), fitted from the 3x3
block of cell-center level set samples and rescaled to unit gradient at the cell
center. The cell's smoothed indicator is

    H(x) = 0.5 * (1 + tanh(beta * (P(x) + shift)))

where the scalar shift is solved so that the cell average of H matches the
cell's VOF value (Newton iteration on the quadrature residual, bisection
fallback), and beta = beta0 / cell size. psi(x) = P(x) + shift is the local
interface surrogate; its zero set is the reconstructed interface. The inverse
map (1/beta) * atanh(2H - 1) recovers psi from H wherever tanh is unsaturated.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

# default to OpenMP: the sandboxed TBB is too old and numba warns about it
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import numba
import numpy as np
from numba import njit, prange

from .grid import CartesianGrid2D, CellField

# Interface band: cells with EPS_BAND <= vof <= 1 - EPS_BAND hold a reconstruction.
EPS_BAND = 1.0e-8
# Residual tolerance and iteration cap of the conservation (shift) solve.
NEWTON_TOL = 1.0e-10
NEWTON_MAX_ITER = 50
# Clamp on H before atanh so the inverse scaling stays finite.
INVERSE_CLAMP = 1.0e-12
# Fitted gradients below this are treated as degenerate (cell skipped).
DEGENERATE_GRADIENT = 1.0e-12

_STENCIL_OFFSETS = [(oi, oj) for oi in (-1, 0, 1) for oj in (-1, 0, 1)]
# Least-squares pseudo-inverse of the quadratic design matrix over the 3x3
# stencil in unit offsets; constant for every cell of a uniform grid.
_DESIGN = np.array(
    [[1.0, oi, oj, oi * oi, oi * oj, oj * oj] for oi, oj in _STENCIL_OFFSETS]
)
_STENCIL_PINV = np.linalg.pinv(_DESIGN)


class DegenerateGradientError(ValueError):
    """Fitted polynomial gradient is too small to define an interface normal."""


@dataclass(frozen=True)
class LevelSetPolynomial:
    """Quadratic P(X, Y) = a00 + a10 X + a01 Y + a20 X^2 + a11 XY + a02 Y^2.

    Coefficients are in physical length units; (X, Y) are offsets from origin.
    """

    origin: tuple[float, float]
    coeffs: np.ndarray  # (6,) = [a00, a10, a01, a20, a11, a02]

    def __call__(self, x, y):
        X = np.asarray(x) - self.origin[0]
        Y = np.asarray(y) - self.origin[1]
        return poly_eval(self.coeffs, X, Y)

    def gradient(self, x, y):
        X = np.asarray(x) - self.origin[0]
        Y = np.asarray(y) - self.origin[1]
        a = self.coeffs
        return (a[1] + 2.0 * a[3] * X + a[4] * Y, a[2] + a[4] * X + 2.0 * a[5] * Y)

    @property
    def gradient_magnitude_at_origin(self) -> float:
        return float(np.hypot(self.coeffs[1], self.coeffs[2]))


@dataclass(frozen=True)
class ThincReconstruction:
    """One cell's tanh-profile reconstruction: polynomial, shift, steepness."""

    poly: LevelSetPolynomial
    shift: float
    beta: float
    cell: tuple[int, int]


def poly_eval(coeffs: np.ndarray, X, Y):
    """Evaluate quadratic(s) at local offsets. coeffs is (6,) or (N, 6) with
    X, Y broadcastable to (N, ...)."""
    c = np.asarray(coeffs)
    if c.ndim == 1:
        return c[0] + c[1] * X + c[2] * Y + c[3] * X * X + c[4] * X * Y + c[5] * Y * Y
    c0, c1, c2, c3, c4, c5 = (c[:, k].reshape((-1,) + (1,) * (np.ndim(X) - 1)) for k in range(6))
    return c0 + c1 * X + c2 * Y + c3 * X * X + c4 * X * Y + c5 * Y * Y


# ---------------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Cell-volume and face rules for one grid spacing.

    Volume rule: tensor Gauss-Legendre over the cell box, weights summing to
    the cell area. Face rule: Gauss points along each face, weights summing to
    the face length. Offsets are cell-local (relative to the cell center).
    """

    dx: float
    dy: float
    volume_order: int
    face_order: int
    vol_x: np.ndarray  # (Q,) local x offsets
    vol_y: np.ndarray  # (Q,) local y offsets
    vol_w: np.ndarray  # (Q,) weights, sum = dx*dy
    face_offsets_x: np.ndarray  # (q,) along-face offsets for x-normal faces
    face_weights_x: np.ndarray  # (q,) sum = dy
    face_offsets_y: np.ndarray  # (q,) along-face offsets for y-normal faces
    face_weights_y: np.ndarray  # (q,) sum = dx

    @property
    def vol_w_mean(self) -> np.ndarray:
        """Volume weights normalized to sum to 1 (cell-averaging weights)."""
        return self.vol_w / (self.dx * self.dy)


def make_quadrature(
    dx: float, dy: float, volume_order: int = 16, face_order: int = 2
) -> QuadratureRule:
    gx, gw = np.polynomial.legendre.leggauss(volume_order)
    x1 = 0.5 * dx * gx
    y1 = 0.5 * dy * gx
    wx = 0.5 * dx * gw
    wy = 0.5 * dy * gw
    X, Y = np.meshgrid(x1, y1, indexing="ij")
    W = np.outer(wx, wy)
    fx, fw = np.polynomial.legendre.leggauss(face_order)
    return QuadratureRule(
        dx=dx,
        dy=dy,
        volume_order=volume_order,
        face_order=face_order,
        vol_x=X.ravel(),
        vol_y=Y.ravel(),
        vol_w=W.ravel(),
        face_offsets_x=0.5 * dy * fx,
        face_weights_x=0.5 * dy * fw,
        face_offsets_y=0.5 * dx * fx,
        face_weights_y=0.5 * dx * fw,
    )


# ---------------------------------------------------------------------------
# Polynomial fit


def fit_quadratic_coeffs(phi: CellField, cell: tuple[int, int]) -> np.ndarray:
    """Raw least-squares quadratic over the 3x3 stencil, no normalization.

    Returns local-coordinate coefficients [a00, a10, a01, a20, a11, a02] in
    physical units. Exact (to rounding) on globally quadratic fields.
    """
    grid = phi.grid
    g = grid.nghost
    i, j = cell
    block = phi.values[g + i - 1 : g + i + 2, g + j - 1 : g + j + 2]
    return _coeffs_from_stencils(block.reshape(1, 9), grid.dx, grid.dy)[0]


def _coeffs_from_stencils(stencils: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """LS fit for a batch of 3x3 stencils, rows ordered like _STENCIL_OFFSETS.

    The fit is done in unit offsets with the center value subtracted, which
    keeps the constant design matrix perfectly conditioned; coefficients are
    then rescaled to physical units.
    """
    center = stencils[:, 4]
    c = (stencils - center[:, None]) @ _STENCIL_PINV.T
    c[:, 0] += center
    scale = np.array([1.0, dx, dy, dx * dx, dx * dy, dy * dy])
    return c / scale


def fit_polynomial(phi: CellField, cell: tuple[int, int]) -> LevelSetPolynomial:
    """Fit the quadratic surrogate at a cell and rescale it to unit gradient.

    All six coefficients are divided by |grad P| at the cell center so that
    beta * P is dimensionless with beta = beta0 / cell size. Raises
    DegenerateGradientError if the pre-normalization gradient is below
    DEGENERATE_GRADIENT; callers treat such cells as non-interface.
    """
    from .grid import cell_center

    coeffs = fit_quadratic_coeffs(phi, cell)
    gmag = float(np.hypot(coeffs[1], coeffs[2]))
    if gmag < DEGENERATE_GRADIENT:
        raise DegenerateGradientError(
            f"gradient magnitude {gmag:.3e} below {DEGENERATE_GRADIENT:.0e} at cell {cell}"
        )
    return LevelSetPolynomial(cell_center(phi.grid, *cell), coeffs / gmag)


# ---------------------------------------------------------------------------
# Steepness


def beta_from_thickness(eta: float, eps: float, dx: float) -> float:
    """Steepness giving a jump transition of half-thickness eta cells.

    beta = atanh(1 - 2*eps) / (eta * dx): the profile passes eps and 1 - eps
    at a distance of eta cells from the interface. Division by dx converts the
    grid-normalized steepness to physical 1/length units, matching the
    unit-gradient polynomial normalization.
    """
    if not (0.0 < eps < 0.5):
        raise ValueError(f"eps must lie in (0, 0.5), got {eps}")
    if eta <= 0.0 or dx <= 0.0:
        raise ValueError(f"eta and dx must be positive, got eta={eta}, dx={dx}")
    return float(np.arctanh(1.0 - 2.0 * eps) / (eta * dx))


# ---------------------------------------------------------------------------
# Point evaluations


def thinc_eval(recon: ThincReconstruction, p) -> float | np.ndarray:
    """H(p) = 0.5 * (1 + tanh(beta * (P(p) + shift))), strictly inside (0, 1)
    until tanh saturates in floating point (|argument| ~ 19)."""
    x, y = p
    return 0.5 * (1.0 + np.tanh(recon.beta * (recon.poly(x, y) + recon.shift)))


def psi_eval(recon: ThincReconstruction, p) -> float | np.ndarray:
    """psi(p) = P(p) + shift; its zero set is the reconstructed interface."""
    x, y = p
    return recon.poly(x, y) + recon.shift


def inverse_thinc_eval(recon: ThincReconstruction, p) -> float | np.ndarray:
    """(1/beta) * atanh(2H - 1) with H clamped to [1e-12, 1 - 1e-12].

    Equals psi(p) wherever the clamp is inactive; saturated points are far
    from the interface and get overwritten by reinitialization.
    """
    h = np.clip(thinc_eval(recon, p), INVERSE_CLAMP, 1.0 - INVERSE_CLAMP)
    return np.arctanh(2.0 * h - 1.0) / recon.beta


def cell_average_H(
    recon: ThincReconstruction, quad: QuadratureRule, cell: tuple[int, int] | None = None
) -> float:
    """Quadrature approximation of the cell average of H over the recon's cell."""
    if cell is not None and tuple(cell) != tuple(recon.cell):
        raise ValueError(f"cell {cell} does not match reconstruction cell {recon.cell}")
    arg = recon.beta * (
        poly_eval(recon.poly.coeffs, quad.vol_x, quad.vol_y) + recon.shift
    )
    return float(np.sum(quad.vol_w_mean * 0.5 * (1.0 + np.tanh(arg))))


# ---------------------------------------------------------------------------
# Conservation shift solve


def solve_shift(
    poly: LevelSetPolynomial,
    vof: float,
    beta: float,
    cell: tuple[int, int] | None,
    quad: QuadratureRule,
) -> float:
    """Shift d such that the quadrature cell-average of H(P + d) equals vof.

    The residual is strictly increasing in d, so the root is unique.
    Clamped Newton with residual tolerance NEWTON_TOL; falls back to
    bisection on a geometrically expanded bracket if Newton fails.
    """
    if not (EPS_BAND <= vof <= 1.0 - EPS_BAND):
        raise ValueError(
            f"vof {vof} outside interface band [{EPS_BAND}, {1.0 - EPS_BAND}]"
        )
    pq = poly_eval(poly.coeffs, quad.vol_x, quad.vol_y).reshape(1, -1)
    d = _solve_shifts(pq, quad.vol_w_mean, np.array([vof]), beta, max(quad.dx, quad.dy))
    return float(d[0])


def _residual(pq, wmean, d, vof, beta):
    """Cell-average of H minus target vof; pq (N, Q), d/vof (N,)."""
    h = 0.5 * (1.0 + np.tanh(beta * (pq + d[:, None])))
    return h @ wmean - vof


_THREAD_CAP_APPLIED = False


def _apply_thread_cap() -> None:
    """Honor TANHVOF_THREADS for the per-cell parallel kernels (0 or 1 means
    fully sequential). Per-cell work is independent, so results are bitwise
    identical for any thread count."""
    global _THREAD_CAP_APPLIED
    if _THREAD_CAP_APPLIED:
        return
    raw = os.environ.get("TANHVOF_THREADS", "")
    if raw:
        try:
            numba.set_num_threads(max(1, int(raw)))
        except ValueError:
            pass
    _THREAD_CAP_APPLIED = True


@njit(cache=True, parallel=True)
def _newton_kernel(pq, wmean, vof, d0, beta, h_cell, tol, max_iter):  # pragma: no cover - jit
    n, nq = pq.shape
    out = np.empty(n)
    unconverged = np.zeros(n, dtype=np.bool_)
    for k in prange(n):
        d = d0[k]
        done = False
        for it in range(max_iter + 1):
            r = 0.0
            dr = 0.0
            for q in range(nq):
                a = 2.0 * beta * (pq[k, q] + d)
                if a > 700.0:
                    t = 1.0
                elif a < -700.0:
                    t = -1.0
                else:
                    t = 1.0 - 2.0 / (math.exp(a) + 1.0)  # tanh(a/2)
                r += wmean[q] * t
                dr += wmean[q] * (1.0 - t * t)
            r = 0.5 + 0.5 * r - vof[k]
            if abs(r) <= tol:
                done = True
                break
            if it == max_iter:
                break
            dr *= 0.5 * beta
            if dr > 1e-300:
                step = r / dr
            else:
                step = h_cell if r > 0.0 else -h_cell
            if step > h_cell:
                step = h_cell
            elif step < -h_cell:
                step = -h_cell
            d -= step
        out[k] = d
        if not done:
            unconverged[k] = True
    return out, unconverged


def _solve_shifts(
    pq: np.ndarray,
    wmean: np.ndarray,
    vof: np.ndarray,
    beta: float,
    h_cell: float,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> np.ndarray:
    """Vectorized shift solve for a batch of cells (see solve_shift).

    Newton starts from the closed-form shift of the 1D unit-gradient profile
    (exact when P is linear across the cell, ~right for every interface cell)
    and steps are clamped to one cell size; anything still unconverged after
    max_iter falls back to bisection.
    """
    _apply_thread_cap()
    d0 = _linear_profile_shift(np.asarray(vof, dtype=np.float64), beta, h_cell)
    d, stuck = _newton_kernel(
        np.ascontiguousarray(pq, dtype=np.float64),
        np.ascontiguousarray(wmean, dtype=np.float64),
        np.asarray(vof, dtype=np.float64),
        d0, beta, h_cell, tol, max_iter,
    )
    if stuck.any():
        d[stuck] = _bisect_shifts(pq[stuck], wmean, vof[stuck], beta, h_cell, tol)
    return d


def _linear_profile_shift(vof, beta: float, h: float) -> np.ndarray:
    """Exact shift for a 1D unit-gradient profile P = X across a cell of size h:
    the cell average of 0.5(1+tanh(beta(X+d))) equals vof at
    d = ln((z q - 1) / (q - z)) / (2 beta), z = exp(2 beta h (vof - 1/2)),
    q = exp(beta h). Used as the Newton start."""
    z = np.exp(2.0 * beta * h * (np.asarray(vof) - 0.5))
    q = np.exp(beta * h)
    return np.log((z * q - 1.0) / (q - z)) / (2.0 * beta)


def _bisect_shifts(pq, wmean, vof, beta, h_cell, tol) -> np.ndarray:
    lo = np.full(pq.shape[0], -5.0 * h_cell)
    hi = np.full(pq.shape[0], 5.0 * h_cell)
    for _ in range(64):
        bad_lo = _residual(pq, wmean, lo, vof, beta) > 0.0
        bad_hi = _residual(pq, wmean, hi, vof, beta) < 0.0
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo[bad_lo] *= 2.0
        hi[bad_hi] *= 2.0
    else:
        raise RuntimeError("bisection bracket expansion failed")
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        r = _residual(pq, wmean, mid, vof, beta)
        if np.all(np.abs(r) <= tol):
            break
        pos = r > 0.0
        hi[pos] = mid[pos]
        lo[~pos] = mid[~pos]
        mid = 0.5 * (lo + hi)
    else:
        raise RuntimeError("bisection failed to reach residual tolerance")
    return mid


# ---------------------------------------------------------------------------
# Whole-field reconstruction table


class ReconstructionTable:
    """Reconstructions for every interface cell of one (vof, phi) snapshot.

    Stores the per-cell data as flat arrays for vectorized evaluation plus a
    padded slot map for O(1) lookup by cell index (ghosts map to no slot).
    """

    def __init__(
        self,
        grid: CartesianGrid2D,
        beta: float,
        cells: np.ndarray,
        origins: np.ndarray,
        coeffs: np.ndarray,
        shifts: np.ndarray,
        band_mask: np.ndarray,
        degenerate_mask: np.ndarray,
    ):
        self.grid = grid
        self.beta = beta
        self.cells = cells  # (N, 2) interior indices
        self.origins = origins  # (N, 2)
        self.coeffs = coeffs  # (N, 6)
        self.shifts = shifts  # (N,)
        self.band_mask = band_mask  # (nx, ny) eps-band mask
        self.degenerate_mask = degenerate_mask  # (nx, ny) D-flagged cells
        g = grid.nghost
        slot_of = np.full(grid.shape, -1, dtype=np.int64)
        if len(cells):
            slot_of[g + cells[:, 0], g + cells[:, 1]] = np.arange(len(cells))
        self.slot_of = slot_of

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def effective_mask(self) -> np.ndarray:
        """Interior cells that actually hold a reconstruction."""
        return self.band_mask & ~self.degenerate_mask

    def psi_at(self, slots: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        X = x - self.origins[slots, 0]
        Y = y - self.origins[slots, 1]
        c = self.coeffs[slots]
        return (
            c[..., 0]
            + c[..., 1] * X
            + c[..., 2] * Y
            + c[..., 3] * X * X
            + c[..., 4] * X * Y
            + c[..., 5] * Y * Y
            + self.shifts[slots]
        )

    def H_at(self, slots: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return 0.5 * (1.0 + np.tanh(self.beta * self.psi_at(slots, x, y)))

    def inverse_at(self, slots: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        h = np.clip(self.H_at(slots, x, y), INVERSE_CLAMP, 1.0 - INVERSE_CLAMP)
        return np.arctanh(2.0 * h - 1.0) / self.beta

    def get(self, i: int, j: int) -> ThincReconstruction | None:
        g = self.grid.nghost
        slot = int(self.slot_of[g + i, g + j])
        if slot < 0:
            return None
        return ThincReconstruction(
            poly=LevelSetPolynomial(tuple(self.origins[slot]), self.coeffs[slot]),
            shift=float(self.shifts[slot]),
            beta=self.beta,
            cell=(int(self.cells[slot, 0]), int(self.cells[slot, 1])),
        )


def build_reconstructions(
    vof: CellField, phi: CellField, beta0: float, quad: QuadratureRule
) -> ReconstructionTable:
    """Fit polynomials and solve conservation shifts for all interface cells.

    The interface band is EPS_BAND <= vof <= 1 - EPS_BAND on interior cells;
    cells whose fitted gradient is degenerate are flagged and skipped (their
    fluxes fall back to the cell-average value). phi ghosts must be filled.
    """
    grid = vof.grid
    g = grid.nghost
    vin = vof.interior
    band = (vin >= EPS_BAND) & (vin <= 1.0 - EPS_BAND)
    beta = beta0 / min(grid.dx, grid.dy)
    degenerate = np.zeros_like(band)
    idx = np.argwhere(band)
    if idx.size == 0:
        return ReconstructionTable(
            grid, beta, idx.reshape(0, 2), np.empty((0, 2)), np.empty((0, 6)),
            np.empty(0), band, degenerate,
        )

    ii = idx[:, 0] + g
    jj = idx[:, 1] + g
    stencils = np.stack(
        [phi.values[ii + oi, jj + oj] for oi, oj in _STENCIL_OFFSETS], axis=1
    )
    coeffs = _coeffs_from_stencils(stencils, grid.dx, grid.dy)
    gmag = np.hypot(coeffs[:, 1], coeffs[:, 2])
    degen = gmag < DEGENERATE_GRADIENT
    if degen.any():
        degenerate[idx[degen, 0], idx[degen, 1]] = True
        idx = idx[~degen]
        coeffs = coeffs[~degen]
        gmag = gmag[~degen]
    coeffs = coeffs / gmag[:, None]

    xc = grid.x0 + (idx[:, 0] + 0.5) * grid.dx
    yc = grid.y0 + (idx[:, 1] + 0.5) * grid.dy
    origins = np.column_stack([xc, yc])

    qx, qy = quad.vol_x, quad.vol_y
    monomials = np.column_stack([np.ones_like(qx), qx, qy, qx * qx, qx * qy, qy * qy])
    pq = coeffs @ monomials.T
    targets = vin[idx[:, 0], idx[:, 1]]
    shifts = _solve_shifts(
        pq, quad.vol_w_mean, targets, beta, max(grid.dx, grid.dy)
    )
    return ReconstructionTable(grid, beta, idx, origins, coeffs, shifts, band, degenerate)
