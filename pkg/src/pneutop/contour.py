"""Contour extraction of the element-density field.

Marching squares at the given level on the cell-centered density grid, with
one ring of zero padding so every solid region closes into a loop.  Returned
polylines are closed (first point repeated last) in physical coordinates with
counter-clockwise orientation around solid regions, so the shoelace areas of
holes subtract from the total.
"""

from __future__ import annotations

import numpy as np
from skimage import measure


def extract_contour(
    rho_bar: np.ndarray,
    nelx: int,
    nely: int,
    level: float = 0.5,
    elem_size: float = 1.0,
) -> list[np.ndarray]:
    """Closed polylines of the iso-`level` boundary, (n, 2) arrays of (x, y)."""
    grid = np.asarray(rho_bar, dtype=float).reshape(nelx, nely)
    # find_contours indexes [row, col]; use row = ey so axis order is (y, x)
    padded = np.zeros((nely + 2, nelx + 2))
    padded[1:-1, 1:-1] = grid.T
    loops = []
    # positive_orientation refers to (row, col) axes; the (col, row) -> (x, y)
    # swap below mirrors the plane, so "low" here yields counter-clockwise
    # loops around solid regions in physical coordinates.
    for contour in measure.find_contours(padded, level, positive_orientation="low"):
        # index (row, col) -> cell center ((col - 1 + 0.5) h, (row - 1 + 0.5) h)
        xy = np.column_stack(
            [(contour[:, 1] - 0.5) * elem_size, (contour[:, 0] - 0.5) * elem_size]
        )
        if not np.allclose(xy[0], xy[-1]):
            xy = np.vstack([xy, xy[0]])
        loops.append(xy)
    return loops


def polyline_area(loop: np.ndarray) -> float:
    """Signed shoelace area of a closed polyline."""
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def total_area(loops: list[np.ndarray]) -> float:
    return sum(polyline_area(loop) for loop in loops)
