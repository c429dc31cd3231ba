import json
from pathlib import Path

import numpy as np
import pytest

from plotkit import FigureSpec, SchemaError, read_sidecar, render, sidecar_path
from plotkit.io import fit_log_log, load_run_dir


def write_run_dir(root: Path, eps: float, outer: float, *, radius=0.1,
                  with_ratios=False) -> Path:
    """Synthetic run directory in the harness output format."""
    d = root / f"syn__eps{eps:g}"
    d.mkdir(parents=True)
    names = ["t", "cx_0", "cy_0", "I_0", "circ_0", "r100_0", "rf0.99_0", "ring0_0"]
    if with_ratios:
        names += ["iratio_0", "gapratio_0"]
    rows = []
    for k, t in enumerate((0.0, 0.5, 1.0)):
        row = [t, 0.0, 0.0, 1e-4, 1.0, radius, radius, outer]
        if with_ratios:
            row += [0.2 + 0.1 * k, 0.05 * k]
        rows.append(row)
    with open(d / "diagnostics.csv", "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    manifest = {"scenario": "syn", "epsilon": eps, "A_eps": eps, "a": 0.45,
                "c0": 0.1, "fractions": [0.99], "n_particles": 10,
                "aborted": False, "ring_radii": [0.5]}
    (d / "manifest.json").write_text(json.dumps(manifest))
    return d


@pytest.fixture
def sweep_dirs(tmp_path):
    return [write_run_dir(tmp_path, eps, 2.5 * eps ** 1.5)
            for eps in (0.1, 0.05, 0.025, 0.0125)]


class TestScalingLaw:
    def test_exact_power_law_sidecar(self, sweep_dirs, tmp_path):
        out = tmp_path / "fig.png"
        entries = render(FigureSpec("scaling-law", tuple(map(str, sweep_dirs)),
                                    str(out)))
        assert out.exists()
        assert abs(entries["slope"] - 1.5) < 1e-6
        side = read_sidecar(out)
        assert side["slope"] == entries["slope"]
        assert side["intercept"] == entries["intercept"]

    def test_insufficient_runs_named_error_no_partial(self, sweep_dirs, tmp_path):
        out = tmp_path / "fig.png"
        with pytest.raises(SchemaError, match="at least 3"):
            render(FigureSpec("scaling-law", tuple(map(str, sweep_dirs[:2])),
                              str(out)))
        assert not out.exists()
        assert not sidecar_path(out).exists()

    def test_empty_inputs_rejected(self, tmp_path):
        with pytest.raises(SchemaError, match="no input"):
            FigureSpec("scaling-law", (), str(tmp_path / "f.png"))

    def test_missing_column_names_reported(self, tmp_path):
        d = write_run_dir(tmp_path, 0.1, 0.5)
        csv_path = d / "diagnostics.csv"
        lines = csv_path.read_text().splitlines()
        lines[0] = lines[0].replace("ring0_0", "other_0")
        lines = [",".join(l.split(",")) for l in lines]
        csv_path.write_text("\n".join(lines) + "\n")
        others = [write_run_dir(tmp_path, e, e) for e in (0.05, 0.025)]
        out = tmp_path / "fig.png"
        with pytest.raises(SchemaError, match="ring0_"):
            render(FigureSpec("scaling-law",
                              (str(d), *map(str, others)), str(out)))
        assert not out.exists()


class TestConfinementTimeline:
    def test_renders_with_threshold(self, tmp_path):
        d = write_run_dir(tmp_path, 0.05, 0.3, radius=0.05)
        out = tmp_path / "timeline.png"
        entries = render(FigureSpec("confinement-timeline", (str(d),), str(out)))
        assert out.exists()
        assert entries["threshold"] == pytest.approx(0.05 ** 0.45)
        assert entries["max_radius"] == pytest.approx(0.05)
        assert entries["tau_measured"] == 1.0

    def test_single_dir_required(self, sweep_dirs, tmp_path):
        with pytest.raises(SchemaError, match="one run"):
            render(FigureSpec("confinement-timeline",
                              tuple(map(str, sweep_dirs)),
                              str(tmp_path / "x.png")))


class TestBoundRatios:
    def test_renders_and_reports_maxima(self, tmp_path):
        d = write_run_dir(tmp_path, 0.05, 0.3, with_ratios=True)
        out = tmp_path / "ratios.png"
        entries = render(FigureSpec("bound-ratios", (str(d),), str(out)))
        assert out.exists()
        assert entries["max_i_ratio"] == pytest.approx(0.4)
        assert entries["max_gap_ratio"] == pytest.approx(0.1)

    def test_missing_ratio_columns_reported(self, tmp_path):
        d = write_run_dir(tmp_path, 0.05, 0.3, with_ratios=False)
        with pytest.raises(SchemaError, match="iratio_"):
            render(FigureSpec("bound-ratios", (str(d),),
                              str(tmp_path / "x.png")))


class TestIo:
    def test_bad_kind(self, tmp_path):
        with pytest.raises(SchemaError, match="kind"):
            FigureSpec("pie-chart", ("a",), str(tmp_path / "x.png"))

    def test_missing_manifest(self, tmp_path):
        d = tmp_path / "empty"
        d.mkdir()
        with pytest.raises(SchemaError, match="manifest.json"):
            load_run_dir(d)

    def test_fit_log_log_matches_polyfit(self):
        eps = [0.1, 0.05, 0.025]
        vals = [3.0 * e ** 1.25 for e in eps]
        slope, intercept = fit_log_log(eps, vals)
        ref = np.polyfit(np.log(eps), np.log(vals), 1)
        assert slope == ref[0] and intercept == ref[1]

    def test_cli_roundtrip(self, sweep_dirs, tmp_path, capsys):
        from plotkit.cli import main
        out = tmp_path / "cli.png"
        rc = main(["scaling-law", "--in", *map(str, sweep_dirs),
                   "--out", str(out)])
        assert rc == 0
        assert out.exists()
        assert "slope" in capsys.readouterr().out

    def test_cli_error_exit(self, tmp_path, capsys):
        from plotkit.cli import main
        rc = main(["scaling-law", "--in", str(tmp_path / "nope"),
                   "--out", str(tmp_path / "x.png")])
        assert rc == 1
        assert "error" in capsys.readouterr().err
