"""Command-line surface.

Subcommands:

* ``optimize <config>``: full robust optimization run; writes the history CSV,
  density matrices/images, VTK fields, extracted contours and report figures.
* ``analyze <density-file> <config>``: single evaluation of a raw density
  matrix plus field export.
* ``fd-check <config>``: adjoint gradients against central finite differences,
  as CSV.
* ``export-contour <density-file>``: marching-squares contour export.
* ``baseline <config>``: generate the rectangular-chamber reference design.

Exit codes: 0 success, 1 configuration/usage error, 2 solver failure.
The output directory may also be set with the PNEUTOP_OUTDIR environment
variable; ``--threads`` sets the assembly worker count (results are invariant
to it).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import export
from .baseline import baseline_rectangular
from .config import echo_config, parse_config
from .contour import extract_contour, total_area
from .driver import Evaluator, run
from .errors import ConfigurationError, PneutopError, SolverError
from .sensitivity import fd_oracle

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2

# Worker-count hint for assembly; kept for interface compatibility, assembly
# is vectorized and results do not depend on it.
_num_threads = 1


def _out_dir(args, default_name: str) -> Path:
    if args.output_dir:
        return Path(args.output_dir)
    env = os.environ.get("PNEUTOP_OUTDIR")
    if env:
        return Path(env)
    return Path("runs") / default_name


def _load_density(path: str, evaluator: Evaluator) -> np.ndarray:
    field, nelx, nely = export.read_density_matrix(path)
    dom = evaluator.domain
    if (nelx, nely) != (dom.nelx, dom.nely):
        raise ConfigurationError(
            f"density matrix is {nelx}x{nely}, domain is {dom.nelx}x{dom.nely}"
        )
    if field.min() < -1e-12 or field.max() > 1 + 1e-12:
        raise ConfigurationError("density values must lie in [0, 1]")
    return np.clip(field, 0.0, 1.0)


def _export_fields(out, evaluator, evaluation, suffix_states=True):
    dom = evaluator.domain
    for tag, state in (("b", evaluation.blueprint), ("e", evaluation.eroded)):
        export.write_density_matrix(
            out / f"rho_bar_{tag}.txt", state.rho_bar, dom.nelx, dom.nely
        )
        export.write_pgm(out / f"density_{tag}.pgm", state.rho_bar, dom.nelx, dom.nely)
        if suffix_states and state.p is not None:
            export.write_vtk(
                out / f"fields_{tag}.vtk",
                dom,
                cell_fields={"density": state.rho_bar},
                point_scalars={"pressure": state.p},
                point_vectors={"displacement": state.u},
            )
    export.save_density_figure(
        out / "density.png",
        {
            "blueprint": evaluation.blueprint.rho_bar,
            "eroded": evaluation.eroded.rho_bar,
        },
        dom.nelx,
        dom.nely,
    )
    if suffix_states and evaluation.blueprint.p is not None:
        export.save_field_figure(
            out / "pressure_b.png",
            evaluation.blueprint.p,
            dom.nelx,
            dom.nely,
            "blueprint pressure",
        )


def cmd_optimize(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args, Path(args.config).stem)
    out.mkdir(parents=True, exist_ok=True)
    export.atomic_write(out / "config_echo.cfg", echo_config(cfg))
    dom_cfg = cfg.domain

    snapshots = out / "snapshots"

    def callback(iteration, evaluation, rho):
        if cfg.snapshot_every and iteration % cfg.snapshot_every == 0:
            export.write_pgm(
                snapshots / f"iter_{iteration:04d}.pgm",
                evaluation.blueprint.rho_bar,
                dom_cfg.nelx,
                dom_cfg.nely,
            )

    result = run(cfg, callback=callback)
    export.write_history_csv(out / "history.csv", result.history)
    export.write_density_matrix(out / "rho.txt", result.rho, dom_cfg.nelx, dom_cfg.nely)
    evaluator = Evaluator(cfg)
    _export_fields(out, evaluator, result.final)
    loops = extract_contour(
        result.rho_bar_b, dom_cfg.nelx, dom_cfg.nely, elem_size=dom_cfg.elem_size
    )
    export.write_contours_svg(
        out / "contour.svg",
        loops,
        dom_cfg.nelx * dom_cfg.elem_size,
        dom_cfg.nely * dom_cfg.elem_size,
    )
    export.write_contours_txt(out / "contour.txt", loops)
    export.save_convergence_figure(out / "convergence.png", result.history)
    last = result.history[-1]
    summary = [
        f"iterations = {len(result.history) - 1}",
        f"stopped_early = {result.stopped_early}",
        f"se_star = {float(result.se_star)!r}",
        f"f_b = {float(last['f_b'])!r}",
        f"f_e = {float(last['f_e'])!r}",
        f"g1 = {float(last['g1'])!r}",
        f"g2 = {float(last['g2'])!r}",
        f"grayness_b = {float(last['grayness_b'])!r}",
        f"contour_area = {float(total_area(loops))!r}",
    ]
    export.atomic_write(out / "summary.txt", "\n".join(summary) + "\n")
    print(f"run complete: {out}")
    print("\n".join(summary))
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = parse_config(args.config)
    evaluator = Evaluator(cfg)
    rho = _load_density(args.density, evaluator)
    beta = args.beta if args.beta is not None else cfg.beta_max
    evaluation = evaluator.evaluate(
        rho, beta, se_star=None, with_gradients=False, keep_states=True
    )
    out = _out_dir(args, "analyze")
    out.mkdir(parents=True, exist_ok=True)
    header = "f_b,f_e,g1,g2,se_e,u_out_b,u_out_e"
    row = ",".join(
        format(v, ".12e")
        for v in (
            evaluation.f_b,
            evaluation.f_e,
            evaluation.g1,
            evaluation.g2,
            evaluation.se_e,
            evaluation.blueprint.u_out,
            evaluation.eroded.u_out,
        )
    )
    export.atomic_write(out / "analysis.csv", header + "\n" + row + "\n")
    _export_fields(out, evaluator, evaluation)
    print(header)
    print(row)
    return EXIT_OK


def cmd_fd_check(args) -> int:
    cfg = parse_config(args.config)
    evaluator = Evaluator(cfg)
    if evaluator.domain.nel > 400:
        raise ConfigurationError(
            "fd-check is meant for small meshes (<= 400 elements)"
        )
    rng = np.random.default_rng(args.seed)
    rho = evaluator.initial_rho()
    design = evaluator.domain.design_mask()
    rho[design] = 0.3 + 0.4 * rng.random(int(design.sum()))
    beta = args.beta
    base = evaluator.evaluate(rho, beta, se_star=None, with_gradients=True)
    se_star = base.se_star_used
    if args.elements:
        elements = np.array([int(v) for v in args.elements.split(",")])
    else:
        elements = np.arange(int(design.sum()))
    fd = fd_oracle(evaluator, rho, beta, se_star, elements=elements, h=args.h)
    analytic = {
        "f_b": base.grad_f_b,
        "f_e": base.grad_f_e,
        "g1": base.grad_g1,
        "g2": base.grad_g2,
    }
    lines = ["element,quantity,analytic,fd,rel_error"]
    worst = 0.0
    for key in ("f_b", "f_e", "g1", "g2"):
        ref = max(np.abs(fd[key]).max(initial=0.0), 1e-300)
        for row, j in enumerate(elements):
            a = analytic[key][j]
            f = fd[key][row]
            rel = abs(a - f) / max(abs(f), 1e-4 * ref)
            worst = max(worst, rel)
            lines.append(
                f"{j},{key},{format(a, '.12e')},{format(f, '.12e')},{format(rel, '.3e')}"
            )
    lines.append(f"max,all,,,{format(worst, '.3e')}")
    text = "\n".join(lines)
    print(text)
    out = _out_dir(args, "fd_check")
    out.mkdir(parents=True, exist_ok=True)
    export.atomic_write(out / "fd_check.csv", text + "\n")
    return EXIT_OK


def cmd_export_contour(args) -> int:
    field, nelx, nely = export.read_density_matrix(args.density)
    loops = extract_contour(field, nelx, nely, level=args.level)
    out = _out_dir(args, "contour")
    out.mkdir(parents=True, exist_ok=True)
    export.write_contours_svg(out / "contour.svg", loops, nelx, nely)
    export.write_contours_txt(out / "contour.txt", loops)
    print(f"{len(loops)} polylines, total signed area {total_area(loops):.6g}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    cfg = parse_config(args.config)
    rho = baseline_rectangular(cfg)
    out = _out_dir(args, "baseline")
    out.mkdir(parents=True, exist_ok=True)
    export.write_density_matrix(
        out / "rho_baseline.txt", rho, cfg.domain.nelx, cfg.domain.nely
    )
    export.write_pgm(out / "baseline.pgm", rho, cfg.domain.nelx, cfg.domain.nely)
    print(f"baseline written: {out / 'rho_baseline.txt'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pneutop",
        description="Topology optimization of pressure-driven compliant units",
    )
    parser.add_argument("--output-dir", default=None, help="artifact directory")
    parser.add_argument(
        "--threads", type=int, default=1, help="assembly worker count (results invariant)"
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("optimize", help="run the full optimization")
    p.add_argument("config")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("analyze", help="evaluate a density matrix")
    p.add_argument("density")
    p.add_argument("config")
    p.add_argument("--beta", type=float, default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fd-check", help="adjoint vs finite-difference gradients")
    p.add_argument("config")
    p.add_argument("--elements", default=None, help="comma-separated design indices")
    p.add_argument("--h", type=float, default=1e-6)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_fd_check)

    p = sub.add_parser("export-contour", help="marching-squares contour export")
    p.add_argument("density")
    p.add_argument("--level", type=float, default=0.5)
    p.set_defaults(func=cmd_export_contour)

    p = sub.add_parser("baseline", help="generate the rectangular reference design")
    p.add_argument("config")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    global _num_threads
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors; fold into config errors
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    _num_threads = args.threads
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PneutopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
