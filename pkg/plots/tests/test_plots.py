import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fgmplots import PlotJob, read_vtk, render
from fgmplots.cli import main as plot_main
from fgmplots.vtk_reader import VtkFormatError


# ----------------------------------------------------------------------
# fixtures: a handcrafted single-element artifact directory, plus (when
# the optimizer CLI is installed) a real smoke run produced through it
# ----------------------------------------------------------------------

UNIT_QUAD_VTK = """\
# vtk DataFile Version 3.0
single element fixture
ASCII
DATASET UNSTRUCTURED_GRID
POINTS 9 double
0.0 0.0 0.0
1.0 0.0 0.0
1.0 1.0 0.0
0.0 1.0 0.0
0.5 0.0 0.0
1.0 0.5 0.0
0.5 1.0 0.0
0.0 0.5 0.0
0.5 0.5 0.0
CELLS 1 10
9 0 1 2 3 4 5 6 7 8
CELL_TYPES 1
28
POINT_DATA 9
SCALARS temperature double 1
LOOKUP_TABLE default
{temps}
SCALARS volume_fraction double 1
LOOKUP_TABLE default
{vfs}
VECTORS displacement double
{disps}
CELL_DATA 1
SCALARS von_mises_mean double 1
LOOKUP_TABLE default
2.5e6
"""


@pytest.fixture()
def artifact_dir(tmp_path):
    temps = "\n".join(str(100.0 * k / 8) for k in range(9))
    vfs = "\n".join("0.5" for _ in range(9))
    disps = "\n".join("0.001 0.0 0.0" for _ in range(9))
    (tmp_path / "fields.vtk").write_text(
        UNIT_QUAD_VTK.format(temps=temps, vfs=vfs, disps=disps)
    )
    rows = ["generation,best_fitness,mean_fitness,feasible_fraction"]
    best = [5.0, 4.0, 4.0, 2.5, 1.0]
    for g, b in enumerate(best):
        rows.append(f"{g},{b},{b + 1.0},1.0")
    (tmp_path / "history.csv").write_text("\n".join(rows) + "\n")
    return tmp_path


def test_read_vtk_fixture(artifact_dir):
    mesh = read_vtk(artifact_dir / "fields.vtk")
    assert mesh.n_points == 9
    assert mesh.n_cells == 1
    assert set(mesh.point_scalars) == {"temperature", "volume_fraction"}
    assert "displacement" in mesh.point_vectors
    assert mesh.cell_scalars["von_mises_mean"][0] == pytest.approx(2.5e6)


def test_read_vtk_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.vtk"
    bad.write_text("this is not vtk\n")
    with pytest.raises(VtkFormatError):
        read_vtk(bad)


def test_render_vf_colorbar_pinned(artifact_dir, tmp_path):
    out = tmp_path / "vf.png"
    result = render(PlotJob(input_dir=artifact_dir, fields="vf", output=out))
    assert out.exists() and out.stat().st_size > 0
    assert result.clim == (0.0, 1.0)
    assert result.data_min == pytest.approx(0.5)
    assert result.data_max == pytest.approx(0.5)


def test_render_temperature_and_stress(artifact_dir, tmp_path):
    r1 = render(PlotJob(input_dir=artifact_dir, fields="temperature",
                        output=tmp_path / "t.png"))
    assert r1.path.exists() and r1.path.stat().st_size > 0
    assert r1.data_max == pytest.approx(100.0)
    r2 = render(PlotJob(input_dir=artifact_dir, fields="stress",
                        output=tmp_path / "s.png"))
    assert r2.path.exists() and r2.path.stat().st_size > 0
    assert r2.data_max == pytest.approx(2.5)  # MPa


def test_render_history_series_monotone(artifact_dir, tmp_path):
    result = render(PlotJob(input_dir=artifact_dir, fields="history",
                            output=tmp_path / "h.png"))
    best = result.series["best_fitness"]
    assert best == [5.0, 4.0, 4.0, 2.5, 1.0]
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert result.path.exists() and result.path.stat().st_size > 0


def test_render_deterministic_output(artifact_dir, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render(PlotJob(input_dir=artifact_dir, fields="vf", output=a))
    render(PlotJob(input_dir=artifact_dir, fields="vf", output=b))
    assert a.read_bytes() == b.read_bytes()


def test_render_does_not_mutate_inputs(artifact_dir, tmp_path):
    before = (artifact_dir / "fields.vtk").read_bytes()
    render(PlotJob(input_dir=artifact_dir, fields="vf", output=tmp_path / "x.png"))
    assert (artifact_dir / "fields.vtk").read_bytes() == before


def test_cli_success_and_failure(artifact_dir, tmp_path):
    rc = plot_main(["--field", "vf", "--in", str(artifact_dir),
                    "--out", str(tmp_path / "cli.png")])
    assert rc == 0
    assert (tmp_path / "cli.png").exists()
    rc = plot_main(["--field", "vf", "--in", str(tmp_path / "nowhere"),
                    "--out", str(tmp_path / "no.png")])
    assert rc != 0


def test_cli_corrupt_input_fails(artifact_dir, tmp_path):
    (artifact_dir / "fields.vtk").write_text("corrupted")
    rc = plot_main(["--field", "temperature", "--in", str(artifact_dir),
                    "--out", str(tmp_path / "no.png")])
    assert rc != 0


# ----------------------------------------------------------------------
# end-to-end smoke against the optimizer CLI (external interface only)
# ----------------------------------------------------------------------

@pytest.mark.skipif(shutil.which("fgmopt") is None,
                    reason="optimizer CLI not installed")
def test_full_pipeline_from_smoke_run(tmp_path):
    run_dir = tmp_path / "run"
    proc = subprocess.run(
        ["fgmopt", "run", "toy", "--seed", "1", "--out", str(run_dir)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    for field in ("vf", "stress", "temperature", "history"):
        out = tmp_path / f"{field}.png"
        result = render(PlotJob(input_dir=run_dir, fields=field, output=out))
        assert out.exists() and out.stat().st_size > 0
        if field == "vf":
            assert result.clim == (0.0, 1.0)
