"""Command-line behavior: exit codes, file outputs, plan handling."""

import math

import pytest

from bridgebench.cli import ExperimentPlan, UsageError, load_plan, main
from bridgebench.regress import load_model
from bridgebench.report import read_bench_csv, read_dataset_rows


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- usage and listing -------------------------------------------------

def test_games_list(capsys):
    code, out, _ = run(capsys, "games", "list")
    assert code == 0
    for family in ("synthetic", "tictactoe", "nim", "breakthrough"):
        assert family in out


def test_unknown_subcommand_is_usage(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 1
    assert "error" in err


def test_unknown_flag_is_usage(capsys):
    code, _, _ = run(capsys, "bench", "--game", "tictactoe", "--agent", "uct",
                     "--warp", "9")
    assert code == 1


def test_missing_required_flag_is_usage(capsys):
    code, _, _ = run(capsys, "bench", "--game", "tictactoe")
    assert code == 1


def test_games_without_action_is_usage(capsys):
    code, _, _ = run(capsys, "games")
    assert code == 1


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0


def test_selfcheck_passes(capsys):
    code, out, _ = run(capsys, "selfcheck")
    assert code == 0
    assert "all checks passed" in out


# --- profile -----------------------------------------------------------

def test_profile_prints_features_and_writes_file(capsys, tmp_path):
    out_file = tmp_path / "profile.txt"
    code, out, _ = run(capsys, "profile", "nim{h1=3,h2=4}", "--playouts",
                       "40", "--seed", "6", "--out", str(out_file))
    assert code == 0
    for key in ("d=", "t=", "b=", "playouts=40"):
        assert key in out
    body = out_file.read_text()
    assert body.startswith("# bridgebench profile")
    assert "--seed 6" in body.splitlines()[0]


def test_profile_bad_game_is_runtime_error(capsys):
    code, _, err = run(capsys, "profile", "nim{h1=0}")
    assert code == 2
    assert "error" in err


# --- bench -------------------------------------------------------------

def test_bench_writes_round_trippable_csv(capsys, tmp_path):
    out_file = tmp_path / "bench.csv"
    code, out, _ = run(capsys, "bench", "--game", "tictactoe", "--agent",
                       "uct", "--budget-ms", "40", "--trials", "2",
                       "--seed", "3", "--out", str(out_file))
    assert code == 0
    assert "playouts/s" in out
    records = read_bench_csv(out_file)
    assert len(records) == 1
    assert records[0].algorithm == "uct"
    assert records[0].trials == 2
    first = out_file.read_text().splitlines()[0]
    assert first.startswith("# bridgebench bench")
    assert "--seed 3" in first


def test_bench_embedded_without_component_exits_two(capsys, monkeypatch):
    monkeypatch.delenv("BRIDGEBENCH_EMBED_CMD", raising=False)
    code, _, err = run(capsys, "bench", "--game", "tictactoe", "--agent",
                       "uct", "--backend", "embedded", "--budget-ms", "40",
                       "--trials", "1")
    assert code == 2
    assert "embedded" in err
    assert "BRIDGEBENCH_EMBED_CMD" in err


def test_bench_rejects_nonpositive_budget(capsys):
    code, _, _ = run(capsys, "bench", "--game", "tictactoe", "--agent",
                     "uct", "--budget-ms", "0", "--trials", "1")
    assert code == 1


# --- match -------------------------------------------------------------

def test_match_writes_score_table_and_twin(capsys, tmp_path):
    out_file = tmp_path / "score.txt"
    code, out, _ = run(capsys, "match", "--game", "nim{h1=2,h2=3}", "--p1",
                       "uct", "--p2", "minimax", "--games", "4",
                       "--iterations", "48", "--seed", "2",
                       "--out", str(out_file))
    assert code == 0
    assert "score_avg=" in out
    assert out_file.exists()
    twin = tmp_path / "score.csv"
    assert twin.exists()
    assert "uct/native" in out_file.read_text()


def test_match_bad_agent_spec_is_usage(capsys):
    code, _, _ = run(capsys, "match", "--game", "tictactoe", "--p1",
                     "alphago", "--p2", "uct", "--games", "2")
    assert code == 1


def test_match_spec_with_backend_and_constant(capsys, tmp_path):
    code, out, _ = run(capsys, "match", "--game", "nim{h1=2}", "--p1",
                       "uct:c=0.7", "--p2", "uct@native:c=0.7", "--games",
                       "2", "--iterations", "16", "--seed", "1")
    assert code == 0
    # one stone: the first mover takes it and wins both mirrored games
    assert "2W 0D 0L" in out or "0W 0D 2L" in out or "1W 0D 1L" in out


# --- plans and sweep ---------------------------------------------------

PLAN = """
[plan]
algorithms = uct, minimax
backends = native
budget_ms = 40
trials = 2
profile_playouts = 30
seed = 11

[games]
list =
    tictactoe

[synthetic-grid]
branching = 2, 3
depth = 3
cost_knob = 8
"""


def test_load_plan_expands_grid(tmp_path):
    plan_file = tmp_path / "plan.ini"
    plan_file.write_text(PLAN)
    plan = load_plan(plan_file)
    assert len(plan.games) == 3
    assert plan.budget_ms == 40
    assert plan.seed == 11
    texts = [g.text() for g in plan.games]
    assert "tictactoe" in texts
    assert "synthetic{branching=2,cost_knob=8,depth=3}" in texts


def test_plan_without_games_is_usage(tmp_path):
    plan_file = tmp_path / "plan.ini"
    plan_file.write_text("[plan]\nalgorithms = uct\n")
    with pytest.raises(UsageError):
        load_plan(plan_file)


def test_plan_unknown_key_rejected(tmp_path):
    plan_file = tmp_path / "plan.ini"
    plan_file.write_text("[plan]\nwarp = 9\n[games]\nlist = tictactoe\n")
    with pytest.raises(UsageError):
        load_plan(plan_file)


def test_plan_bad_game_id_rejected(tmp_path):
    plan_file = tmp_path / "plan.ini"
    plan_file.write_text("[games]\nlist = nim{h1=0}\n")
    with pytest.raises(UsageError):
        load_plan(plan_file)


def test_experiment_plan_validation():
    plan = ExperimentPlan()
    with pytest.raises(UsageError):
        plan.validate()


def test_missing_plan_file_is_usage(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep", "--plan", str(tmp_path / "absent.ini"))
    assert code == 1


def test_sweep_emits_expected_row_counts(capsys, tmp_path):
    plan_file = tmp_path / "plan.ini"
    plan_file.write_text(PLAN)
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "sweep", "--plan", str(plan_file),
                       "--out-dir", str(out_dir))
    assert code == 0
    records = read_bench_csv(out_dir / "bench.csv")
    rows = read_dataset_rows(out_dir / "dataset.csv")
    # 3 games x 2 algorithms x 1 backend
    assert len(records) == 6
    assert len(rows) == 6
    assert {r.algorithm for r in rows} == {"uct", "minimax"}
    first = (out_dir / "bench.csv").read_text().splitlines()[0]
    assert first.startswith("# bridgebench sweep")


# --- fit / predict / heatmap ------------------------------------------

def write_power_law_dataset(path, noise=0.0):
    # exact ln r = 2.5 - 1.5 ln d - 0.5 ln t + 0 ln b
    ds = [2, 4, 8, 16, 32, 64, 5, 11]
    ts = [0.1, 0.05, 0.2, 0.4, 0.025, 0.8, 0.3, 0.15]
    bs = [2, 5, 3, 4, 2, 5, 4, 3]
    lines = ["game,algorithm,backend,d,t,b,target"]
    for i, (d, t, b) in enumerate(zip(ds, ts, bs)):
        r = math.exp(2.5 - 1.5 * math.log(d) - 0.5 * math.log(t))
        lines.append(f"g{i},uct,native,{d},{t},{b},{r!r}")
        lines.append(f"g{i},minimax,native,{d},{t},{b},{r * 2!r}")
    path.write_text("\n".join(lines) + "\n")


def test_fit_recovers_exact_power_law(capsys, tmp_path):
    data = tmp_path / "dataset.csv"
    write_power_law_dataset(data)
    model_file = tmp_path / "model.txt"
    code, out, _ = run(capsys, "fit", "--data", str(data), "--target", "r",
                       "--out", str(model_file))
    assert code == 0
    assert "ln(r) =" in out
    model = load_model(model_file)
    assert model.target_name == "r"
    assert abs(model.coefficient("d") + 1.5) < 1e-3
    assert abs(model.coefficient("t") + 0.5) < 1e-3
    assert abs(model.coefficient("b")) < 1e-3
    assert abs(model.intercept - 2.5) < 1e-2
    assert model_file.read_text().startswith("# bridgebench fit")


def test_fit_prune_drops_idle_feature(capsys, tmp_path):
    data = tmp_path / "dataset.csv"
    write_power_law_dataset(data)
    model_file = tmp_path / "model.txt"
    code, _, _ = run(capsys, "fit", "--data", str(data), "--target", "r",
                     "--prune", "--out", str(model_file))
    assert code == 0
    model = load_model(model_file)
    assert model.feature_names == ("d", "t")


def test_fit_ols_and_table(capsys, tmp_path):
    data = tmp_path / "dataset.csv"
    write_power_law_dataset(data)
    table = tmp_path / "models.txt"
    code, _, _ = run(capsys, "fit", "--data", str(data), "--target", "e",
                     "--method", "ols", "--table", str(table))
    assert code == 0
    assert table.exists()
    assert (tmp_path / "models.csv").exists()
    assert "ln(e) =" in table.read_text()


def test_fit_unknown_feature_is_usage(capsys, tmp_path):
    data = tmp_path / "dataset.csv"
    write_power_law_dataset(data)
    code, _, _ = run(capsys, "fit", "--data", str(data), "--target", "r",
                     "--features", "d,q")
    assert code == 1


def test_predict_pinned_model(capsys, tmp_path):
    model_file = tmp_path / "pinned.txt"
    model_file.write_text(
        "target=r\nfeatures=d,t\ncoef_d=-0.946\ncoef_t=-0.492\n"
        "intercept=6.291\nmse_train=0.0357\n")
    code, out, _ = run(capsys, "predict", "--model", str(model_file),
                       "--d", "100", "--t", "0.001")
    assert code == 0
    assert "ln(r) = 5.333" in out
    assert "207" in out


def test_predict_missing_feature_is_usage(capsys, tmp_path):
    model_file = tmp_path / "pinned.txt"
    model_file.write_text(
        "target=r\nfeatures=d,t\ncoef_d=-0.946\ncoef_t=-0.492\n"
        "intercept=6.291\nmse_train=0.0357\n")
    code, _, err = run(capsys, "predict", "--model", str(model_file),
                       "--d", "100")
    assert code == 1
    assert "t" in err


def test_predict_missing_model_file_is_runtime(capsys, tmp_path):
    code, _, _ = run(capsys, "predict", "--model",
                     str(tmp_path / "absent.txt"), "--d", "2")
    assert code == 2


def test_heatmap_renders_svg(capsys, tmp_path):
    import xml.etree.ElementTree as ET

    data = tmp_path / "dataset.csv"
    write_power_law_dataset(data)
    model_file = tmp_path / "model.txt"
    run(capsys, "fit", "--data", str(data), "--target", "r",
        "--out", str(model_file))
    svg = tmp_path / "heat.svg"
    code, out, _ = run(capsys, "heatmap", "--model", str(model_file),
                       "--data", str(data), "--x", "t", "--y", "d",
                       "--out", str(svg))
    assert code == 0
    root = ET.parse(svg).getroot()
    assert root.tag.endswith("svg")


def test_heatmap_same_axes_is_usage(capsys, tmp_path):
    data = tmp_path / "dataset.csv"
    write_power_law_dataset(data)
    code, _, _ = run(capsys, "heatmap", "--model", "m", "--data", str(data),
                     "--x", "d", "--y", "d", "--out", str(tmp_path / "h.svg"))
    assert code == 1


# --- serve game filter -------------------------------------------------

def test_service_game_filter_blocks_unlisted():
    from bridgebench.bridge.protocol import ERR_BAD_PARAMS, BridgeMessage
    from bridgebench.bridge.service import EngineService

    service = EngineService(allowed_games=("tictactoe",))
    ok = service.handle(BridgeMessage.request(1, "new_trial",
                                              {"game": "tictactoe"}))
    assert ok.result is not None
    refused = service.handle(BridgeMessage.request(
        2, "new_trial", {"game": "nim{h1=3}"}))
    assert refused.error is not None
    assert refused.error["code"] == ERR_BAD_PARAMS
    assert "not served" in refused.error["message"]


def test_service_game_filter_accepts_full_text():
    from bridgebench.bridge.protocol import BridgeMessage
    from bridgebench.bridge.service import EngineService

    service = EngineService(allowed_games=("nim{h1=3}",))
    ok = service.handle(BridgeMessage.request(1, "new_trial",
                                              {"game": "nim{h1=3}"}))
    assert ok.result is not None
