"""Sharp interface transport on 2D Cartesian grids, coupling a conservative
VOF field and a signed-distance level set through tanh scaling of a cell-local
interface polynomial."""

from .grid import CartesianGrid2D, CellField, cell_center, fill_ghosts, locate_cell
from .reconstruction import (
    LevelSetPolynomial,
    QuadratureRule,
    ThincReconstruction,
    beta_from_thickness,
    build_reconstructions,
    cell_average_H,
    fit_polynomial,
    inverse_thinc_eval,
    make_quadrature,
    psi_eval,
    solve_shift,
    thinc_eval,
)
from .reinit import InterfaceMask, fast_sweep_reinit, tag_interface_cells
from .transport import (
    SchemeState,
    VelocityField,
    advance_step,
    departure_point,
    rk3_advance_vof,
    semi_lagrangian_phi_update,
    upwind_cell,
    vof_substep,
)
from .benchmark import (
    BenchmarkCase,
    convergence_table,
    init_fields,
    l1_error,
    make_case,
    run_case,
    total_mass,
    vortex_velocity,
    zalesak_velocity,
)
from .contour import extract_contour, extract_psi_segments
from .config import RunConfig, parse_config

__version__ = "0.1.0"
