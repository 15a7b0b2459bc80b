"""Flat key = value run configuration with section headers.

The format is diff-able and echo-able: `echo_config` emits the fully resolved
configuration and parsing that echo reproduces an identical OptConfig.
Unknown sections or keys are rejected; geometry keys left out fall back to a
default layout scaled from (nelx, nely): a pressure chamber (non-design void
wrapped in a thin non-design solid skin) against the left symmetry edge, a
fixed bottom edge, ambient pressure on the right and top edges, and the
output port with its workpiece spring at the top right corner.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError
from .mesh import EDGES, DomainConfig, EdgeSegment, Rect
from .mma import MmaOptions
from .pressure import FlowParams


@dataclass
class OptConfig:
    domain: DomainConfig
    rmin: float = 7.6  # filter radius in element-edge units
    beta_start: float = 1.0
    beta_max: float = 128.0
    beta_double_every: int = 50
    delta_eta: float = 0.10  # eroded threshold is 0.5 + delta_eta
    e1: float = 1.0
    e0: float = 1e-9
    nu: float = 0.40
    penalty: float = 3.0
    flow: FlowParams = field(default_factory=FlowParams)
    v_star: float = 0.20
    s_f: float = 0.90
    max_iter: int = 400
    obj_scale: float = 0.0  # 0 -> auto-normalize from the first evaluation
    early_stop: bool = False
    snapshot_every: int = 0
    mma: MmaOptions = field(default_factory=MmaOptions)
    baseline_cavity: list[Rect] = field(default_factory=list)
    baseline_wall: int = 4

    def validate(self) -> "OptConfig":
        if self.rmin <= 0:
            raise ConfigurationError("filter.rmin must be positive")
        if self.beta_start < 1 or self.beta_max < self.beta_start:
            raise ConfigurationError("projection.beta schedule must satisfy 1 <= beta_start <= beta_max")
        if self.beta_double_every < 1:
            raise ConfigurationError("projection.beta_double_every must be >= 1")
        if not 0.0 <= self.delta_eta < 0.5:
            raise ConfigurationError("projection.delta_eta must lie in [0, 0.5)")
        if self.e0 >= self.e1:
            raise ConfigurationError("material.e0 must be smaller than material.e1")
        if not 0.0 <= self.nu < 0.5:
            raise ConfigurationError("material.nu must lie in [0, 0.5)")
        if self.penalty < 1:
            raise ConfigurationError("material.penalty must be >= 1")
        if not 0.0 < self.v_star <= 1.0:
            raise ConfigurationError("optimization.v_star must lie in (0, 1]")
        if not 0.0 < self.s_f <= 1.0:
            raise ConfigurationError("optimization.s_f must lie in (0, 1]")
        if self.max_iter < 0:
            raise ConfigurationError("optimization.max_iter must be >= 0")
        if self.obj_scale < 0:
            raise ConfigurationError("optimization.obj_scale must be >= 0")
        if self.snapshot_every < 0:
            raise ConfigurationError("optimization.snapshot_every must be >= 0")
        if self.baseline_wall < 2:
            raise ConfigurationError("baseline.wall must be >= 2 elements")
        return self


def default_layout(nelx: int, nely: int) -> dict:
    """Chamber-against-symmetry-edge layout scaled from the mesh size."""
    cx1 = max(2, round(0.45 * nelx))
    cy0 = max(2, round(0.15 * nely))
    cy1 = round(0.55 * nely)
    t = 2  # non-design solid skin thickness in elements
    return {
        "ndv": [Rect(0, cx1, cy0, cy1)],
        "nds": [
            Rect(0, cx1 + t, cy0 - t, cy0),
            Rect(0, cx1 + t, cy1, cy1 + t),
            Rect(cx1, cx1 + t, cy0, cy1),
        ],
        "inlet": [EdgeSegment("left", cy0, cy1 + 1)],
        "ambient": [EdgeSegment("right"), EdgeSegment("top")],
        "fixed": [EdgeSegment("bottom")],
        "symmetry": "left",
        "output_node": (nelx, nely),
        "output_dof": "y",
        "output_sign": -1.0,
    }


def _parse_rects(text: str, key: str) -> list[Rect]:
    rects = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        try:
            xs, ys = part.split(",")
            x0, x1 = (int(v) for v in xs.split(":"))
            y0, y1 = (int(v) for v in ys.split(":"))
        except ValueError as exc:
            raise ConfigurationError(
                f"{key}: expected 'x0:x1,y0:y1' rectangles, got {part!r}"
            ) from exc
        rects.append(Rect(x0, x1, y0, y1))
    return rects


def _format_rects(rects: list[Rect]) -> str:
    return " ; ".join(f"{r.x0}:{r.x1},{r.y0}:{r.y1}" for r in rects)


def _parse_segments(text: str, key: str) -> list[EdgeSegment]:
    segments = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        bits = part.split(":")
        if bits[0] not in EDGES:
            raise ConfigurationError(f"{key}: unknown edge {bits[0]!r}")
        if len(bits) == 1:
            segments.append(EdgeSegment(bits[0]))
        elif len(bits) == 3:
            try:
                segments.append(EdgeSegment(bits[0], int(bits[1]), int(bits[2])))
            except ValueError as exc:
                raise ConfigurationError(f"{key}: bad segment {part!r}") from exc
        else:
            raise ConfigurationError(f"{key}: expected 'edge' or 'edge:start:stop', got {part!r}")
    return segments


def _format_segments(segments: list[EdgeSegment]) -> str:
    parts = []
    for s in segments:
        if s.start == 0 and s.stop == -1:
            parts.append(s.edge)
        else:
            parts.append(f"{s.edge}:{s.start}:{s.stop}")
    return " ; ".join(parts)


_SCHEMA: dict[str, set[str]] = {
    "domain": {
        "nelx", "nely", "elem_size", "nds", "ndv", "inlet", "ambient",
        "fixed", "symmetry", "output_node", "output_dof", "output_sign", "ks",
    },
    "filter": {"rmin"},
    "projection": {"beta_start", "beta_max", "beta_double_every", "delta_eta"},
    "material": {"e1", "e0", "nu", "penalty"},
    "flow": {
        "kv", "epsilon", "eta_f", "beta_f", "r", "delta_s", "p_in", "p_0",
        "drainage_exponent",
    },
    "optimization": {
        "v_star", "s_f", "max_iter", "obj_scale", "early_stop", "snapshot_every",
    },
    "mma": {"move", "asy_init", "asy_incr", "asy_decr", "albefa", "constraint_penalty"},
    "baseline": {"cavity", "wall"},
}


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser

    def get(self, section, key, cast, default):
        if not self.parser.has_option(section, key):
            return default
        raw = self.parser.get(section, key)
        try:
            if cast is bool:
                if raw.lower() not in ("true", "false"):
                    raise ValueError(raw)
                return raw.lower() == "true"
            return cast(raw)
        except ValueError as exc:
            raise ConfigurationError(f"{section}.{key}: cannot parse {raw!r}") from exc


def load_config(text: str) -> OptConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"unknown config key {section}.{key}")

    missing = [k for k in ("nelx", "nely") if not parser.has_option("domain", k)]
    if missing:
        raise ConfigurationError(
            "missing required keys: " + ", ".join(f"domain.{k}" for k in missing)
        )
    r = _Reader(parser)
    nelx = r.get("domain", "nelx", int, None)
    nely = r.get("domain", "nely", int, None)
    layout = default_layout(nelx, nely)

    out_node_raw = r.get("domain", "output_node", str, None)
    if out_node_raw is None:
        output_node = layout["output_node"]
    else:
        try:
            ox, oy = (int(v) for v in out_node_raw.split(","))
        except ValueError as exc:
            raise ConfigurationError(
                f"domain.output_node: expected 'ix,iy', got {out_node_raw!r}"
            ) from exc
        output_node = (ox, oy)

    symmetry = r.get("domain", "symmetry", str, layout["symmetry"])
    if symmetry in ("", "none"):
        symmetry = None

    def geom(key, parse, fmt_default):
        raw = r.get("domain", key, str, None)
        return fmt_default if raw is None else parse(raw, f"domain.{key}")

    domain = DomainConfig(
        nelx=nelx,
        nely=nely,
        elem_size=r.get("domain", "elem_size", float, 1.0),
        nds=geom("nds", _parse_rects, layout["nds"]),
        ndv=geom("ndv", _parse_rects, layout["ndv"]),
        inlet=geom("inlet", _parse_segments, layout["inlet"]),
        ambient=geom("ambient", _parse_segments, layout["ambient"]),
        fixed=geom("fixed", _parse_segments, layout["fixed"]),
        symmetry=symmetry,
        output_node=output_node,
        output_dof=r.get("domain", "output_dof", str, layout["output_dof"]),
        output_sign=r.get("domain", "output_sign", float, layout["output_sign"]),
        ks=r.get("domain", "ks", float, 1.0),
    )

    rmin = r.get("filter", "rmin", float, 7.6)
    try:
        flow = FlowParams(
            kv=r.get("flow", "kv", float, 1.0),
            epsilon=r.get("flow", "epsilon", float, 1e-7),
            eta_f=r.get("flow", "eta_f", float, 0.1),
            beta_f=r.get("flow", "beta_f", float, 10.0),
            r=r.get("flow", "r", float, 0.1),
            delta_s=r.get("flow", "delta_s", float, rmin * domain.elem_size),
            p_in=r.get("flow", "p_in", float, 1.0),
            p_0=r.get("flow", "p_0", float, 0.0),
            drainage_exponent=r.get("flow", "drainage_exponent", int, 2),
        )
        mma = MmaOptions(
            move=r.get("mma", "move", float, 0.1),
            asy_init=r.get("mma", "asy_init", float, 0.5),
            asy_incr=r.get("mma", "asy_incr", float, 1.2),
            asy_decr=r.get("mma", "asy_decr", float, 0.7),
            albefa=r.get("mma", "albefa", float, 0.1),
            constraint_penalty=r.get("mma", "constraint_penalty", float, 1000.0),
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc

    cavity_raw = r.get("baseline", "cavity", str, None)
    cfg = OptConfig(
        domain=domain,
        rmin=rmin,
        beta_start=r.get("projection", "beta_start", float, 1.0),
        beta_max=r.get("projection", "beta_max", float, 128.0),
        beta_double_every=r.get("projection", "beta_double_every", int, 50),
        delta_eta=r.get("projection", "delta_eta", float, 0.10),
        e1=r.get("material", "e1", float, 1.0),
        e0=r.get("material", "e0", float, 1e-9),
        nu=r.get("material", "nu", float, 0.40),
        penalty=r.get("material", "penalty", float, 3.0),
        flow=flow,
        v_star=r.get("optimization", "v_star", float, 0.20),
        s_f=r.get("optimization", "s_f", float, 0.90),
        max_iter=r.get("optimization", "max_iter", int, 400),
        obj_scale=r.get("optimization", "obj_scale", float, 0.0),
        early_stop=r.get("optimization", "early_stop", bool, False),
        snapshot_every=r.get("optimization", "snapshot_every", int, 0),
        mma=mma,
        baseline_cavity=(
            list(domain.ndv) if cavity_raw is None
            else _parse_rects(cavity_raw, "baseline.cavity")
        ),
        baseline_wall=r.get("baseline", "wall", int, 4),
    )
    return cfg.validate()


def parse_config(path) -> OptConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())


def echo_config(cfg: OptConfig) -> str:
    """Fully resolved configuration text; parses back to an identical OptConfig."""
    d = cfg.domain
    f = cfg.flow
    m = cfg.mma
    buf = io.StringIO()

    def section(name, items):
        buf.write(f"[{name}]\n")
        for key, val in items:
            buf.write(f"{key} = {val}\n")
        buf.write("\n")

    section("domain", [
        ("nelx", d.nelx),
        ("nely", d.nely),
        ("elem_size", repr(d.elem_size)),
        ("nds", _format_rects(d.nds)),
        ("ndv", _format_rects(d.ndv)),
        ("inlet", _format_segments(d.inlet)),
        ("ambient", _format_segments(d.ambient)),
        ("fixed", _format_segments(d.fixed)),
        ("symmetry", d.symmetry or "none"),
        ("output_node", f"{d.output_node[0]},{d.output_node[1]}"),
        ("output_dof", d.output_dof),
        ("output_sign", repr(d.output_sign)),
        ("ks", repr(d.ks)),
    ])
    section("filter", [("rmin", repr(cfg.rmin))])
    section("projection", [
        ("beta_start", repr(cfg.beta_start)),
        ("beta_max", repr(cfg.beta_max)),
        ("beta_double_every", cfg.beta_double_every),
        ("delta_eta", repr(cfg.delta_eta)),
    ])
    section("material", [
        ("e1", repr(cfg.e1)),
        ("e0", repr(cfg.e0)),
        ("nu", repr(cfg.nu)),
        ("penalty", repr(cfg.penalty)),
    ])
    section("flow", [
        ("kv", repr(f.kv)),
        ("epsilon", repr(f.epsilon)),
        ("eta_f", repr(f.eta_f)),
        ("beta_f", repr(f.beta_f)),
        ("r", repr(f.r)),
        ("delta_s", repr(f.delta_s)),
        ("p_in", repr(f.p_in)),
        ("p_0", repr(f.p_0)),
        ("drainage_exponent", f.drainage_exponent),
    ])
    section("optimization", [
        ("v_star", repr(cfg.v_star)),
        ("s_f", repr(cfg.s_f)),
        ("max_iter", cfg.max_iter),
        ("obj_scale", repr(cfg.obj_scale)),
        ("early_stop", "true" if cfg.early_stop else "false"),
        ("snapshot_every", cfg.snapshot_every),
    ])
    section("mma", [
        ("move", repr(m.move)),
        ("asy_init", repr(m.asy_init)),
        ("asy_incr", repr(m.asy_incr)),
        ("asy_decr", repr(m.asy_decr)),
        ("albefa", repr(m.albefa)),
        ("constraint_penalty", repr(m.constraint_penalty)),
    ])
    section("baseline", [
        ("cavity", _format_rects(cfg.baseline_cavity)),
        ("wall", cfg.baseline_wall),
    ])
    return buf.getvalue()


def default_config_text(nelx: int = 80, nely: int = 320, **overrides) -> str:
    """Config text for the published run recipe at the given resolution."""
    cfg = load_config(f"[domain]\nnelx = {nelx}\nnely = {nely}\n")
    if overrides:
        if "rmin" in overrides and "flow" not in overrides:
            # keep the drainage depth tied to the filter radius default
            overrides = dict(overrides)
            overrides["flow"] = replace(
                cfg.flow,
                delta_s=overrides["rmin"] * cfg.domain.elem_size,
            )
        cfg = replace(cfg, **overrides).validate()
    return echo_config(cfg)
