"""Artifact layer: CSV identity, SVG structure, table formatting."""

import xml.etree.ElementTree as ET

import pytest

from bridgebench.bench import BenchRecord, ScoreResult
from bridgebench.games import game_id
from bridgebench.regress import RegressionModel
from bridgebench.report import (
    GRID_CELLS, DatasetRow, HeatmapPoint, ModelRow, ReportError, ScoreRow,
    format_equation, read_bench_csv, read_dataset_rows, render_heatmap,
    rows_to_dataset, write_bench_csv, write_dataset_csv, write_model_table,
    write_score_table,
)


def _records():
    return [
        BenchRecord(game=game_id("tictactoe"), algorithm="uct",
                    backend="native", budget_s=1.0, trials=3,
                    raw_counts=(101, 99, 103), normalized_mean=101.0,
                    stddev=2.0, ci99_half_width=2.97),
        BenchRecord(game=game_id("synthetic", branching=3, depth=6),
                    algorithm="minimax", backend="socket", budget_s=0.1,
                    trials=1, raw_counts=(57,), normalized_mean=570.0,
                    stddev=0.0, ci99_half_width=0.0),
    ]


def test_bench_csv_round_trip_identity(tmp_path):
    path = tmp_path / "bench.csv"
    records = _records()
    write_bench_csv(records, path, invocation="bridgebench bench --seed 7")
    assert read_bench_csv(path) == records
    text = path.read_text()
    assert text.startswith("# bridgebench bench --seed 7\n")
    # the game cell with commas must survive csv quoting
    assert "synthetic{branching=3,depth=6}" in text


def test_bench_csv_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    write_bench_csv(_records(), path)
    lines = path.read_text().splitlines()
    lines[2] = lines[2].replace("570.0", "not-a-number")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ReportError, match="line 3"):
        read_bench_csv(path)
    path.write_text("nope,really\n")
    with pytest.raises(ReportError, match="bad header"):
        read_bench_csv(path)


def test_dataset_csv_round_trip(tmp_path):
    rows = [
        DatasetRow("tictactoe", "uct", "native", 7.5, 3e-6, 5.2, 30000.0),
        DatasetRow("tictactoe", "minimax", "native", 7.5, 3e-6, 5.2, 9000.0),
        DatasetRow("nim{h1=3}", "uct", "native", 2.0, 1e-6, 2.0, 50000.0),
    ]
    path = tmp_path / "dataset.csv"
    write_dataset_csv(rows, path, invocation="bridgebench sweep --plan p.ini")
    assert read_dataset_rows(path) == rows
    ds = rows_to_dataset(rows, "uct")
    assert ds.n == 2
    assert ds.feature_names == ("d", "t", "b")
    with pytest.raises(ReportError):
        rows_to_dataset(rows, "minimax")  # only one row


def _model():
    return RegressionModel(target_name="r", feature_names=("d", "t"),
                           coefficients=(-0.946, -0.492), intercept=6.291,
                           mse_train=0.011, mse_test=0.014)


def test_format_equation_three_decimals():
    assert format_equation(_model()) == \
        "ln(r) = -0.946*ln(d) - 0.492*ln(t) + 6.291"
    positive = RegressionModel("e", ("b",), (0.5,), -1.25, 0.0)
    assert format_equation(positive) == "ln(e) = 0.500*ln(b) - 1.250"


def test_heatmap_svg_structure(tmp_path):
    path = tmp_path / "map.svg"
    points = [HeatmapPoint(10.0, 1e-4, 900.0), HeatmapPoint(50.0, 1e-3, 80.0),
              HeatmapPoint(999.0, 1e-3, 5.0)]  # last point sits outside
    render_heatmap(_model(), "d", "t", (2.0, 100.0), (1e-5, 1e-2),
                   points, path, title="uct cost surface")
    tree = ET.parse(path)  # must be well-formed xml
    root = tree.getroot()
    ns = "{http://www.w3.org/2000/svg}"
    rects = root.findall(f"{ns}rect")
    circles = root.findall(f"{ns}circle")
    assert len(rects) == GRID_CELLS * GRID_CELLS + 2  # grid + background + frame
    assert len(circles) == 2
    assert "outside the plotted range" in path.read_text()


def test_heatmap_constant_model_is_uniform(tmp_path):
    model = RegressionModel("r", ("d",), (0.0,), 2.0, 0.0)
    path = tmp_path / "flat.svg"
    render_heatmap(model, "d", "t", (1.0, 10.0), (1.0, 10.0), [], path)
    fills = {seg.split('fill="')[1].split('"')[0]
             for seg in path.read_text().split("<rect")[2:]} - {"none"}
    assert len(fills) == 1  # every grid cell identical


def test_heatmap_rejects_bad_ranges(tmp_path):
    path = tmp_path / "x.svg"
    with pytest.raises(ReportError, match="positive"):
        render_heatmap(_model(), "d", "t", (0.0, 10.0), (1.0, 2.0), [], path)
    with pytest.raises(ReportError, match="degenerate"):
        render_heatmap(_model(), "d", "t", (5.0, 5.0), (1.0, 2.0), [], path)
    with pytest.raises(ReportError, match="fixed value"):
        render_heatmap(_model(), "d", "b", (1.0, 9.0), (1.0, 9.0), [], path)


def test_model_table_text_and_csv_twin(tmp_path):
    path = tmp_path / "models.txt"
    rows = [ModelRow("uct", "native", _model()),
            ModelRow("minimax", "socket",
                     RegressionModel("e", ("b", "t"), (0.61, -0.8), 2.0,
                                     0.002, None))]
    write_model_table(rows, path, invocation="bridgebench fit --target r")
    text = path.read_text()
    assert "-0.946*ln(d)" in text
    assert text.splitlines()[0] == "# bridgebench fit --target r"
    twin = tmp_path / "models.csv"
    assert twin.exists()
    assert "0.610*ln(b)" in twin.read_text()


def test_score_table_names_highest_or_tie(tmp_path):
    rows = [
        ScoreRow("uct/native", "uct/socket",
                 ScoreResult(10, 5, 0, 5, 0.5, (1.0,) * 5 + (0.0,) * 5)),
        ScoreRow("minimax", "uct",
                 ScoreResult(10, 7, 1, 2, 0.75, (1.0,) * 10)),
    ]
    path = tmp_path / "scores.txt"
    write_score_table(rows, path)
    text = path.read_text()
    assert "tie" in text
    assert "minimax" in text
    assert (tmp_path / "scores.csv").read_text().count("0.7500") == 1
