"""Structured bilinear-quad design domain with region tags and boundary conditions.

Numbering is column-major and deterministic:

* node (ix, iy) -> ix * (nely + 1) + iy, with iy counted upward from the
  bottom edge and ix rightward from the left edge,
* element (ex, ey) -> ex * nely + ey,
* displacement dofs of node n are (2n, 2n + 1) for (ux, uy).

Element corner nodes are stored counter-clockwise starting at the lower-left
corner, so the element Jacobian is positive everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# Region tags per element.
DESIGN = 0
NDS = 1  # non-design solid, pinned at rho_bar = 1
NDV = 2  # non-design void, pinned at rho_bar = 0

EDGES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned element-index rectangle, half-open: [x0, x1) x [y0, y1)."""

    x0: int
    x1: int
    y0: int
    y1: int

    def contains(self, ex: int, ey: int) -> bool:
        return self.x0 <= ex < self.x1 and self.y0 <= ey < self.y1


@dataclass(frozen=True)
class EdgeSegment:
    """Node range [start, stop) along a domain edge.

    For the left/right edges the running index is iy in [0, nely], for the
    bottom/top edges it is ix in [0, nelx].  ``stop = -1`` means "to the end".
    """

    edge: str
    start: int = 0
    stop: int = -1


@dataclass
class DomainConfig:
    nelx: int
    nely: int
    elem_size: float = 1.0
    nds: list[Rect] = field(default_factory=list)
    ndv: list[Rect] = field(default_factory=list)
    inlet: list[EdgeSegment] = field(default_factory=list)
    ambient: list[EdgeSegment] = field(default_factory=list)
    fixed: list[EdgeSegment] = field(default_factory=list)
    symmetry: str | None = None  # edge name; normal displacement is fixed
    output_node: tuple[int, int] = (0, 0)  # (ix, iy)
    output_dof: str = "y"  # "x" | "y"
    output_sign: float = 1.0
    ks: float = 1.0  # output spring stiffness


@dataclass
class DomainModel:
    """Immutable after construction; safe to share across workers."""

    nelx: int
    nely: int
    elem_size: float
    enodes: np.ndarray  # (nel, 4) corner nodes, CCW from lower-left
    edofs: np.ndarray  # (nel, 8) displacement dofs, (ux, uy) per corner
    coords: np.ndarray  # (nnode, 2) node coordinates
    centers: np.ndarray  # (nel, 2) element centroids
    volumes: np.ndarray  # (nel,) element areas
    tags: np.ndarray  # (nel,) DESIGN | NDS | NDV
    inlet_nodes: np.ndarray
    ambient_nodes: np.ndarray
    fixed_dofs: np.ndarray
    out_node: int
    out_dof: int  # global displacement dof index
    out_sign: float
    ks: float
    symmetry: str | None

    @property
    def nel(self) -> int:
        return self.nelx * self.nely

    @property
    def nnode(self) -> int:
        return (self.nelx + 1) * (self.nely + 1)

    @property
    def ndof(self) -> int:
        return 2 * self.nnode

    def node_id(self, ix, iy):
        return np.asarray(ix) * (self.nely + 1) + np.asarray(iy)

    def design_mask(self) -> np.ndarray:
        return self.tags == DESIGN

    def output_selector(self) -> np.ndarray:
        """Signed selector vector l with f = l @ u."""
        l = np.zeros(self.ndof)
        l[self.out_dof] = self.out_sign
        return l


def edge_nodes(nelx: int, nely: int, seg: EdgeSegment) -> np.ndarray:
    """Node ids of an edge segment, in increasing running-index order."""
    if seg.edge not in EDGES:
        raise ConfigurationError(f"unknown edge {seg.edge!r}")
    n_along = nely if seg.edge in ("left", "right") else nelx
    stop = n_along + 1 if seg.stop == -1 else seg.stop
    if not (0 <= seg.start < stop <= n_along + 1):
        raise ConfigurationError(f"edge segment {seg} out of range")
    idx = np.arange(seg.start, stop)
    if seg.edge == "left":
        return idx
    if seg.edge == "right":
        return nelx * (nely + 1) + idx
    if seg.edge == "bottom":
        return idx * (nely + 1)
    return idx * (nely + 1) + nely  # top


def _check_rect(r: Rect, nelx: int, nely: int, label: str) -> None:
    if not (0 <= r.x0 < r.x1 <= nelx and 0 <= r.y0 < r.y1 <= nely):
        raise ConfigurationError(f"{label} rectangle {r} outside {nelx}x{nely} domain")


def _rect_mask(rects: list[Rect], nelx: int, nely: int) -> np.ndarray:
    ex, ey = np.meshgrid(np.arange(nelx), np.arange(nely), indexing="ij")
    mask = np.zeros((nelx, nely), dtype=bool)
    for r in rects:
        mask |= (ex >= r.x0) & (ex < r.x1) & (ey >= r.y0) & (ey < r.y1)
    return mask.reshape(-1)  # element order ex * nely + ey


def build_domain(config: DomainConfig) -> DomainModel:
    """Builds the reference domain per the configured layout.

    Raises ConfigurationError for overlapping NDS/NDV regions, an output node
    buried in non-design void, or an empty inlet set.
    """
    nelx, nely, h = config.nelx, config.nely, config.elem_size
    if nelx < 2 or nely < 2:
        raise ConfigurationError("nelx and nely must both be >= 2")
    if h <= 0:
        raise ConfigurationError("elem_size must be positive")

    for r in config.nds:
        _check_rect(r, nelx, nely, "NDS")
    for r in config.ndv:
        _check_rect(r, nelx, nely, "NDV")
    nds_mask = _rect_mask(config.nds, nelx, nely)
    ndv_mask = _rect_mask(config.ndv, nelx, nely)
    if np.any(nds_mask & ndv_mask):
        raise ConfigurationError("NDS and NDV regions overlap")
    tags = np.full(nelx * nely, DESIGN, dtype=np.int8)
    tags[nds_mask] = NDS
    tags[ndv_mask] = NDV

    ix, iy = np.meshgrid(np.arange(nelx + 1), np.arange(nely + 1), indexing="ij")
    coords = np.column_stack([ix.reshape(-1) * h, iy.reshape(-1) * h])

    ex, ey = np.meshgrid(np.arange(nelx), np.arange(nely), indexing="ij")
    ex = ex.reshape(-1)
    ey = ey.reshape(-1)
    n0 = ex * (nely + 1) + ey
    enodes = np.column_stack([n0, n0 + (nely + 1), n0 + (nely + 2), n0 + 1])
    edofs = np.empty((nelx * nely, 8), dtype=np.int64)
    edofs[:, 0::2] = 2 * enodes
    edofs[:, 1::2] = 2 * enodes + 1
    centers = np.column_stack([(ex + 0.5) * h, (ey + 0.5) * h])
    volumes = np.full(nelx * nely, h * h)

    if not config.inlet:
        raise ConfigurationError("inlet node set must be non-empty")
    inlet = np.unique(np.concatenate([edge_nodes(nelx, nely, s) for s in config.inlet]))
    if config.ambient:
        ambient = np.unique(
            np.concatenate([edge_nodes(nelx, nely, s) for s in config.ambient])
        )
    else:
        ambient = np.empty(0, dtype=np.int64)
    if np.intersect1d(inlet, ambient).size:
        raise ConfigurationError("inlet and ambient pressure node sets overlap")

    fixed = []
    for seg in config.fixed:
        nodes = edge_nodes(nelx, nely, seg)
        fixed.extend(2 * nodes)
        fixed.extend(2 * nodes + 1)
    if config.symmetry is not None:
        nodes = edge_nodes(nelx, nely, EdgeSegment(config.symmetry))
        normal = 0 if config.symmetry in ("left", "right") else 1
        fixed.extend(2 * nodes + normal)
    fixed_dofs = np.unique(np.asarray(fixed, dtype=np.int64))

    ox, oy = config.output_node
    if not (0 <= ox <= nelx and 0 <= oy <= nely):
        raise ConfigurationError(f"output node {config.output_node} outside domain")
    out_node = int(ox * (nely + 1) + oy)
    if config.output_dof not in ("x", "y"):
        raise ConfigurationError("output_dof must be 'x' or 'y'")
    out_dof = 2 * out_node + (0 if config.output_dof == "x" else 1)
    if out_dof in fixed_dofs:
        raise ConfigurationError("output dof lies in the structural fixed set")
    adj = [
        (ax, ay)
        for ax in (ox - 1, ox)
        for ay in (oy - 1, oy)
        if 0 <= ax < nelx and 0 <= ay < nely
    ]
    if adj and all(tags[ax * nely + ay] == NDV for ax, ay in adj):
        raise ConfigurationError("output node lies inside a non-design void region")
    if config.ks < 0:
        raise ConfigurationError("output spring stiffness must be >= 0")

    for arr in (coords, enodes, edofs, centers, volumes, tags, inlet, ambient, fixed_dofs):
        arr.setflags(write=False)

    return DomainModel(
        nelx=nelx,
        nely=nely,
        elem_size=h,
        enodes=enodes,
        edofs=edofs,
        coords=coords,
        centers=centers,
        volumes=volumes,
        tags=tags,
        inlet_nodes=inlet,
        ambient_nodes=ambient,
        fixed_dofs=fixed_dofs,
        out_node=out_node,
        out_dof=out_dof,
        out_sign=config.output_sign,
        ks=config.ks,
        symmetry=config.symmetry,
    )
