import numpy as np
import pytest

from pneutop.cli import main
from pneutop.config import default_config_text
from pneutop.export import read_density_matrix, write_density_matrix

TINY = dict(nelx=12, nely=24, rmin=2.0, max_iter=4)


@pytest.fixture
def tiny_cfg_path(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(default_config_text(**TINY))
    return path


def test_optimize_smoke(tmp_path, tiny_cfg_path):
    out = tmp_path / "run"
    assert main(["--output-dir", str(out), "optimize", str(tiny_cfg_path)]) == 0
    for name in (
        "history.csv",
        "rho.txt",
        "rho_bar_b.txt",
        "rho_bar_e.txt",
        "density_b.pgm",
        "fields_b.vtk",
        "contour.svg",
        "contour.txt",
        "density.png",
        "convergence.png",
        "summary.txt",
        "config_echo.cfg",
    ):
        assert (out / name).exists(), name
    header = (out / "history.csv").read_text().splitlines()[0]
    assert header.startswith("iter,beta,f_b,f_e,g1,g2")


def test_analyze_all_void_zero_displacement(tmp_path):
    # without a drain boundary the pressure is uniform, so the coupled load
    # vanishes and the structure does not move
    cfg_path = tmp_path / "novent.cfg"
    cfg_path.write_text(
        "[domain]\nnelx = 8\nnely = 8\nnds =\nndv =\n"
        "inlet = left\nambient =\nfixed = bottom\nsymmetry =\n"
        "output_node = 8,8\n"
        "[filter]\nrmin = 1.5\n[flow]\ndelta_s = 2.0\n"
    )
    rho_path = tmp_path / "void.txt"
    write_density_matrix(rho_path, np.zeros(64), 8, 8)
    out = tmp_path / "an"
    code = main(["--output-dir", str(out), "analyze", str(rho_path), str(cfg_path)])
    assert code == 0
    row = (out / "analysis.csv").read_text().splitlines()[1].split(",")
    u_out_b, u_out_e = float(row[5]), float(row[6])
    assert abs(u_out_b) <= 1e-10
    assert abs(u_out_e) <= 1e-10


def test_fd_check_reports_small_error(tmp_path):
    cfg_path = tmp_path / "small.cfg"
    cfg_path.write_text(
        "[domain]\nnelx = 4\nnely = 4\nnds =\nndv =\n"
        "inlet = left\nambient = right\nfixed = bottom\nsymmetry =\n"
        "output_node = 4,4\n"
        "[filter]\nrmin = 1.5\n[flow]\ndelta_s = 2.0\n"
    )
    out = tmp_path / "fd"
    code = main(["--output-dir", str(out), "fd-check", str(cfg_path), "--elements", "0,3,7"])
    assert code == 0
    lines = (out / "fd_check.csv").read_text().splitlines()
    assert lines[0] == "element,quantity,analytic,fd,rel_error"
    assert lines[-1].startswith("max,all")
    assert float(lines[-1].split(",")[-1]) <= 1e-3


def test_export_contour(tmp_path):
    rho_path = tmp_path / "rho.txt"
    rho = np.zeros(100)
    rho[33:66] = 1.0
    write_density_matrix(rho_path, rho, 10, 10)
    out = tmp_path / "ct"
    assert main(["--output-dir", str(out), "export-contour", str(rho_path)]) == 0
    assert (out / "contour.svg").exists()
    assert (out / "contour.txt").exists()


def test_baseline_command(tmp_path, tiny_cfg_path):
    out = tmp_path / "base"
    assert main(["--output-dir", str(out), "baseline", str(tiny_cfg_path)]) == 0
    field, nelx, nely = read_density_matrix(out / "rho_baseline.txt")
    assert (nelx, nely) == (12, 24)
    assert set(np.unique(field)) <= {0.0, 1.0}
    assert 0.0 < field.mean() < 1.0


def test_missing_config_exit_code(tmp_path):
    assert main(["optimize", str(tmp_path / "absent.cfg")]) == 1


def test_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[domain]\nnelx = 8\n")
    assert main(["optimize", str(bad)]) == 1


def test_unknown_subcommand_exit_code(capsys):
    assert main(["transmogrify"]) == 1
    assert main([]) == 1


def test_bad_threads_rejected(tiny_cfg_path):
    assert main(["--threads", "0", "baseline", str(tiny_cfg_path)]) == 1


def test_density_shape_mismatch(tmp_path, tiny_cfg_path):
    rho_path = tmp_path / "wrong.txt"
    write_density_matrix(rho_path, np.zeros(16), 4, 4)
    assert main(["analyze", str(rho_path), str(tiny_cfg_path)]) == 1
