"""Result serialization: plain-text CSV field dumps, contour/segment polylines,
mass histories, and aligned convergence tables. All floats are written with 17
significant digits so reruns are byte-identical and values round-trip."""

from __future__ import annotations

import os

from .benchmark import CaseReport, ConvergenceRow
from .config import RunConfig
from .contour import extract_contour, extract_psi_segments
from .grid import CellField


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_fields_csv(path: str, vof: CellField, phi: CellField) -> None:
    """Interior cells as "i,j,x,y,vof,phi", row-major over (i, j)."""
    grid = vof.grid
    vin = vof.interior
    pin = phi.interior
    with open(path, "w", newline="\n") as f:
        f.write("i,j,x,y,vof,phi\n")
        for i in range(grid.nx):
            x = grid.x0 + (i + 0.5) * grid.dx
            for j in range(grid.ny):
                y = grid.y0 + (j + 0.5) * grid.dy
                f.write(
                    f"{i},{j},{_fmt(x)},{_fmt(y)},{_fmt(vin[i, j])},{_fmt(pin[i, j])}\n"
                )


def write_polylines_csv(path: str, polylines) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("poly_id,x,y\n")
        for pid, poly in enumerate(polylines):
            for x, y in poly:
                f.write(f"{pid},{_fmt(x)},{_fmt(y)}\n")


def write_mass_history_csv(path: str, history) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("step,time,total_mass,clipped_mass\n")
        for step, t, mass, clipped in history:
            f.write(f"{step},{_fmt(t)},{_fmt(mass)},{_fmt(clipped)}\n")


def format_convergence_table(case_name: str, rows: list[ConvergenceRow]) -> str:
    """Aligned text table: sizes across the top, orders between the errors."""
    header = ["method"]
    line = [case_name]
    for k, row in enumerate(rows):
        if k > 0:
            header.append("order")
            line.append(f"{row.order:.2f}")
        header.append(f"{row.n}^2")
        line.append(f"{row.l1:.2e}")
    widths = [max(len(h), len(v)) for h, v in zip(header, line)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return fmt.format(*header).rstrip() + "\n" + fmt.format(*line).rstrip() + "\n"


def write_convergence_table(path: str, case_name: str, rows: list[ConvergenceRow]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(format_convergence_table(case_name, rows))


def emit_outputs(report: CaseReport, config: RunConfig) -> list[str]:
    """Write the configured artifacts for one finished case run.

    Files are named <case>_<n>_<kind>.csv in config.outdir; snapshot dumps
    get an _s<k> suffix on the kind. Returns the written paths.
    """
    os.makedirs(config.outdir, exist_ok=True)
    base = os.path.join(config.outdir, f"{report.case.name}_{report.n}")
    written: list[str] = []

    def emit_state(vof, phi, state, suffix=""):
        if config.fields:
            path = f"{base}_fields{suffix}.csv"
            write_fields_csv(path, vof, phi)
            written.append(path)
        if config.contours:
            path = f"{base}_contour{suffix}.csv"
            write_polylines_csv(path, extract_contour(vof, 0.5))
            written.append(path)
        if config.psi and state is not None:
            path = f"{base}_psi{suffix}.csv"
            write_polylines_csv(path, extract_psi_segments(state))
            written.append(path)

    emit_state(report.final_state.vof, report.final_state.phi, report.final_state)
    for k, (_, _, vof, phi) in enumerate(report.snapshots, start=1):
        emit_state(vof, phi, None, suffix=f"_s{k}")

    if config.mass_history:
        path = f"{base}_mass.csv"
        write_mass_history_csv(path, report.mass_history)
        written.append(path)
    return written
