"""Conventional rectangular-chamber reference design.

A binary density field: solid everywhere except the configured cavity
rectangles, which stay void and open toward the inlet edge.  Used as the
comparison design for the linear-FE analyzer.
"""

from __future__ import annotations

import numpy as np

from .config import OptConfig
from .errors import ConfigurationError
from .mesh import build_domain


def baseline_rectangular(cfg: OptConfig) -> np.ndarray:
    """Raw density field of the rectangular chamber on the configured mesh."""
    domain = build_domain(cfg.domain)
    nelx, nely = domain.nelx, domain.nely
    wall = cfg.baseline_wall
    if wall < 2:
        raise ConfigurationError("baseline wall thickness must be >= 2 elements")
    if not cfg.baseline_cavity:
        raise ConfigurationError("baseline cavity is empty")
    inlet_edges = {seg.edge for seg in cfg.domain.inlet}
    rho = np.ones(domain.nel)
    for r in cfg.baseline_cavity:
        if not (0 <= r.x0 < r.x1 <= nelx and 0 <= r.y0 < r.y1 <= nely):
            raise ConfigurationError(f"baseline cavity {r} exceeds the domain")
        margins = {
            "left": r.x0,
            "right": nelx - r.x1,
            "bottom": r.y0,
            "top": nely - r.y1,
        }
        for edge, margin in margins.items():
            if edge not in inlet_edges and margin < wall:
                raise ConfigurationError(
                    f"baseline cavity {r} leaves a {margin}-element {edge} wall, "
                    f"need >= {wall}"
                )
        ex, ey = np.meshgrid(np.arange(nelx), np.arange(nely), indexing="ij")
        inside = (
            (ex.reshape(-1) >= r.x0)
            & (ex.reshape(-1) < r.x1)
            & (ey.reshape(-1) >= r.y0)
            & (ey.reshape(-1) < r.y1)
        )
        rho[inside] = 0.0
    return rho
