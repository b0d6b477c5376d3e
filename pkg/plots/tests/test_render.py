import hashlib
import json
import shutil
from pathlib import Path

import pytest

from walkplots import FigureSpec, SchemaError, render
from walkplots.cli import main

FIXTURES = Path(__file__).parent / "fixtures"

# The six figure configurations covering every figure family: parameter-map
# heatmap, gap map, Chern map, time-series lines, overlap scatter, scaling.
SPECS = {
    "sweep_heatmap": dict(
        kind="heatmap", inputs=["sweep_walker.csv"], value="max_prob",
        expect_schema="sweep_walker", angles_in_pi=True,
        xlabel="theta1", ylabel="theta2", output="sweep_heatmap.png",
    ),
    "gap_map": dict(
        kind="heatmap", inputs=["gapmap.csv"], value="gap0_min",
        expect_schema="gapmap", angles_in_pi=True,
        xlabel="theta1", ylabel="theta2", output="gap_map.png",
    ),
    "chern_map": dict(
        kind="heatmap", inputs=["chern.csv"], value="chern_plus",
        expect_schema="chern", angles_in_pi=True,
        xlabel="theta1", ylabel="theta2", output="chern_map.png",
    ),
    "series_lines": dict(
        kind="lines", inputs=["baseline.csv"], x="t",
        series=[{"y": "p_def", "label": "walk"}, {"y": "p_classical", "label": "classical"}],
        expect_schema="baseline", xlabel="t", ylabel="P", output="series_lines.png",
    ),
    "overlap_scatter": dict(
        kind="scatter", inputs=["spectrum.csv"], x="energy", y="s", log_y=True,
        expect_schema="spectrum", xlabel="E", ylabel="overlap product", output="overlap_scatter.png",
    ),
    "scaling_curve": dict(
        kind="scaling", inputs=["scaling.csv"], x="L", y="search_time",
        expect_schema="scaling", xlabel="sqrt(N)", ylabel="search time", output="scaling_curve.png",
    ),
}


def _spec_for(tmp_path, name, output_name=None):
    raw = dict(SPECS[name])
    raw["inputs"] = [str(FIXTURES / p) for p in raw["inputs"]]
    raw["output"] = str(tmp_path / (output_name or raw["output"]))
    return FigureSpec.from_dict(raw)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.mark.parametrize("name", sorted(SPECS))
def test_render_all_kinds_pixel_stable(tmp_path, name):
    first = render(_spec_for(tmp_path, name, "a.png"))
    second = render(_spec_for(tmp_path, name, "b.png"))
    assert first.exists() and second.exists()
    assert first.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert _sha256(first) == _sha256(second)


def test_schema_mismatch_names_column(tmp_path):
    broken = tmp_path / "scaling.csv"
    text = (FIXTURES / "scaling.csv").read_text().replace("search_time", "search_tim")
    broken.write_text(text)
    spec = FigureSpec.from_dict(
        dict(kind="scaling", inputs=[str(broken)], expect_schema="scaling", output=str(tmp_path / "x.png"))
    )
    with pytest.raises(SchemaError) as err:
        render(spec)
    assert "search_time" in str(err.value)
    assert "search_tim" in str(err.value)


def test_missing_column_reported(tmp_path):
    spec = FigureSpec.from_dict(
        dict(kind="scatter", inputs=[str(FIXTURES / "spectrum.csv")], x="energy", y="nope",
             output=str(tmp_path / "x.png"))
    )
    with pytest.raises(SchemaError, match="nope"):
        render(spec)


def test_spec_validation():
    with pytest.raises(ValueError, match="kind"):
        FigureSpec.from_dict(dict(kind="pie", inputs=["a.csv"], output="x.png"))
    with pytest.raises(ValueError, match="unknown figure-spec keys"):
        FigureSpec.from_dict(dict(kind="lines", inputs=["a.csv"], output="x.png", bogus=1))


def test_cli_renders_spec_files(tmp_path):
    spec_paths = []
    for name in ("sweep_heatmap", "scaling_curve"):
        raw = dict(SPECS[name])
        raw["inputs"] = [str(FIXTURES / p) for p in raw["inputs"]]
        # output stays relative: resolved next to the spec json
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(raw))
        spec_paths.append(str(path))
    assert main(spec_paths) == 0
    assert (tmp_path / "sweep_heatmap.png").exists()
    assert (tmp_path / "scaling_curve.png").exists()


def test_cli_reports_schema_error(tmp_path, capsys):
    broken_csv = tmp_path / "scaling.csv"
    shutil.copy(FIXTURES / "sweep_walker.csv", broken_csv)  # wrong schema on purpose
    raw = dict(SPECS["scaling_curve"])
    raw["inputs"] = [str(broken_csv)]
    spec_path = tmp_path / "bad.json"
    spec_path.write_text(json.dumps(raw))
    assert main([str(spec_path)]) == 2
    assert "schema" in capsys.readouterr().err
