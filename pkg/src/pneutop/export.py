"""Result export: delimited history, density matrices, PGM images, legacy VTK
fields, SVG contours and matplotlib report figures.

All writes are atomic (write to a temp file in the target directory, then
rename).  Formatting is fixed-width-free and deterministic so identical runs
produce byte-identical artifacts.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .contour import polyline_area
from .driver import HISTORY_COLUMNS
from .mesh import DomainModel


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12e")


def atomic_write(path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_history_csv(path, history: list[dict]) -> None:
    lines = [",".join(HISTORY_COLUMNS)]
    for row in history:
        lines.append(",".join(_fmt(row[col]) for col in HISTORY_COLUMNS))
    atomic_write(path, "\n".join(lines) + "\n")


def density_to_matrix(field: np.ndarray, nelx: int, nely: int) -> np.ndarray:
    """Flat column-major element field -> image-like matrix (top row first)."""
    return np.asarray(field).reshape(nelx, nely).T[::-1]


def matrix_to_density(matrix: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Inverse of density_to_matrix; returns (field, nelx, nely)."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    nely, nelx = matrix.shape
    return matrix[::-1].T.reshape(-1), nelx, nely


def write_density_matrix(path, field: np.ndarray, nelx: int, nely: int) -> None:
    mat = density_to_matrix(field, nelx, nely)
    lines = [" ".join(format(v, ".17g") for v in row) for row in mat]
    atomic_write(path, "\n".join(lines) + "\n")


def read_density_matrix(path) -> tuple[np.ndarray, int, int]:
    return matrix_to_density(np.loadtxt(path, ndmin=2))


def write_pgm(path, field: np.ndarray, nelx: int, nely: int) -> None:
    """Grayscale density image, solid = black: value = round(255 (1 - rho))."""
    mat = density_to_matrix(field, nelx, nely)
    values = np.rint(255.0 * (1.0 - mat)).astype(int)
    lines = ["P2", f"{nelx} {nely}", "255"]
    lines += [" ".join(str(v) for v in row) for row in values]
    atomic_write(path, "\n".join(lines) + "\n")


def write_vtk(
    path,
    domain: DomainModel,
    cell_fields: dict[str, np.ndarray] | None = None,
    point_scalars: dict[str, np.ndarray] | None = None,
    point_vectors: dict[str, np.ndarray] | None = None,
) -> None:
    """Legacy ASCII VTK structured grid with nodal and per-element data."""
    nelx, nely, h = domain.nelx, domain.nely, domain.elem_size
    out = [
        "# vtk DataFile Version 3.0",
        "pneutop fields",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nelx + 1} {nely + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {h:.12g} {h:.12g} {h:.12g}",
    ]

    def node_grid(values):
        # package node order is x-major; VTK wants x fastest
        return np.asarray(values).reshape(nelx + 1, nely + 1).T.reshape(-1)

    def cell_grid(values):
        return np.asarray(values).reshape(nelx, nely).T.reshape(-1)

    if point_scalars or point_vectors:
        out.append(f"POINT_DATA {(nelx + 1) * (nely + 1)}")
        for name, values in (point_scalars or {}).items():
            out.append(f"SCALARS {name} double 1")
            out.append("LOOKUP_TABLE default")
            out += [format(v, ".12e") for v in node_grid(values)]
        for name, values in (point_vectors or {}).items():
            vx = node_grid(np.asarray(values)[0::2])
            vy = node_grid(np.asarray(values)[1::2])
            out.append(f"VECTORS {name} double")
            out += [
                f"{format(x, '.12e')} {format(y, '.12e')} 0.0"
                for x, y in zip(vx, vy)
            ]
    if cell_fields:
        out.append(f"CELL_DATA {nelx * nely}")
        for name, values in cell_fields.items():
            out.append(f"SCALARS {name} double 1")
            out.append("LOOKUP_TABLE default")
            out += [format(v, ".12e") for v in cell_grid(values)]
    atomic_write(path, "\n".join(out) + "\n")


def write_contours_svg(path, loops, width: float, height: float) -> None:
    paths = []
    for loop in loops:
        # flip y so the SVG renders with the domain's upward y-axis
        points = " L ".join(
            f"{x:.6g} {height - y:.6g}" for x, y in loop[:-1]
        )
        paths.append(f'<path d="M {points} Z" />')
    body = "\n".join(paths)
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:.6g} {height:.6g}">\n'
        f'<g fill="none" stroke="black" stroke-width="0.25" fill-rule="evenodd">\n'
        f"{body}\n</g>\n</svg>\n"
    )
    atomic_write(path, svg)


def write_contours_txt(path, loops) -> None:
    """Plain segment list: one `x0 y0 x1 y1` line per polyline segment."""
    lines = [f"# {len(loops)} closed polylines, signed areas: "
             + " ".join(f"{polyline_area(l):.6g}" for l in loops)]
    for loop in loops:
        for (x0, y0), (x1, y1) in zip(loop[:-1], loop[1:]):
            lines.append(f"{x0:.9g} {y0:.9g} {x1:.9g} {y1:.9g}")
    atomic_write(path, "\n".join(lines) + "\n")


def save_density_figure(path, fields: dict[str, np.ndarray], nelx: int, nely: int) -> None:
    fig, axes = plt.subplots(
        1, len(fields), figsize=(2.2 * len(fields) + 1, 2.2 * nely / nelx + 1),
        squeeze=False,
    )
    for ax, (title, field) in zip(axes[0], fields.items()):
        ax.imshow(
            density_to_matrix(field, nelx, nely),
            cmap="gray_r",
            vmin=0.0,
            vmax=1.0,
            interpolation="nearest",
            extent=(0, nelx, 0, nely),
        )
        ax.set_title(title, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_convergence_figure(path, history: list[dict]) -> None:
    iters = [row["iter"] for row in history]
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(iters, [row["f_b"] for row in history], "k-", lw=1, label="blueprint objective")
    ax1.plot(iters, [row["f_e"] for row in history], "b--", lw=1, label="eroded objective")
    ax1.set_xlabel("MMA iteration")
    ax1.set_ylabel("output displacement")
    ax2 = ax1.twinx()
    v_frac = [row["g1"] for row in history]
    ax2.plot(iters, v_frac, "r-", lw=1, label="volume ratio g1")
    ax2.set_ylabel("g1")
    betas = [row["beta"] for row in history]
    for i in range(1, len(betas)):
        if betas[i] != betas[i - 1]:
            ax1.axvline(iters[i], color="0.8", lw=0.5, zorder=0)
    lines, labels = ax1.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax1.legend(lines + lines2, labels + labels2, fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_field_figure(path, nodal_field: np.ndarray, nelx: int, nely: int, title: str) -> None:
    grid = np.asarray(nodal_field).reshape(nelx + 1, nely + 1).T[::-1]
    fig, ax = plt.subplots(figsize=(3, 3 * nely / nelx))
    im = ax.imshow(grid, cmap="viridis", extent=(0, nelx, 0, nely))
    ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
