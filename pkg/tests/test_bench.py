"""Benchmark layer: intervals, profiles, throughput rules, match scoring."""

import math

import pytest

from bridgebench.agents import SearchBudget
from bridgebench.bench import (
    AgentSpec, BenchRecord, ComplexityProfile, confidence_interval,
    profile_complexity, run_match, run_throughput,
)
from bridgebench.games import game_id


# --- confidence intervals ---------------------------------------------

def test_interval_frozen_values():
    # samples 1..5: mean 3, sample stddev sqrt(2.5)
    samples = [1.0, 2.0, 3.0, 4.0, 5.0]
    mean99, half99 = confidence_interval(samples, 0.99)
    assert mean99 == 3.0
    assert abs(half99 - 2.576 * math.sqrt(2.5) / math.sqrt(5)) < 1e-12
    mean95, half95 = confidence_interval(samples, 0.95)
    assert abs(half95 - 1.96 * math.sqrt(2.5) / math.sqrt(5)) < 1e-12
    assert half95 < half99


def test_interval_single_sample_is_degenerate():
    assert confidence_interval([7.5], 0.99) == (7.5, 0.0)


def test_interval_rejects_unknown_level():
    with pytest.raises(ValueError):
        confidence_interval([1.0, 2.0], 0.90)
    with pytest.raises(ValueError):
        confidence_interval([], 0.99)


# --- profiles ----------------------------------------------------------

def test_synthetic_profile_is_exact():
    game = game_id("synthetic", branching=3, depth=5)
    prof = profile_complexity(game, playouts=50, seed=1)
    assert prof.d == 5.0
    assert prof.b == 3.0
    assert prof.t > 0
    assert prof.playouts == 50


def test_tictactoe_profile_in_sane_ranges():
    prof = profile_complexity(game_id("tictactoe"), playouts=300, seed=2)
    assert 5.0 < prof.d <= 9.0
    assert 3.0 < prof.b < 9.0
    assert prof.t > 0


def test_profile_is_seed_deterministic_in_shape():
    game = game_id("nim", h1=3, h2=4)
    a = profile_complexity(game, playouts=100, seed=5)
    b = profile_complexity(game, playouts=100, seed=5)
    assert (a.d, a.b) == (b.d, b.b)  # t is wall time and may differ


# --- throughput --------------------------------------------------------

def test_throughput_record_shape_and_normalization():
    rec = run_throughput(game_id("tictactoe"), "uct", budget_ms=50,
                         trials=4, seed=3)
    assert isinstance(rec, BenchRecord)
    assert rec.trials == 4 and len(rec.raw_counts) == 4
    assert rec.backend == "native"
    assert all(c >= 20 for c in rec.raw_counts)
    expect_mean = sum(rec.raw_counts) / 4 / rec.budget_s
    assert abs(rec.normalized_mean - expect_mean) < 1e-9
    assert rec.ci99_half_width >= 0


def test_throughput_auto_raises_tiny_budgets():
    # 1 ms on a game too slow for 20 iterations forces the x10 rule
    game = game_id("synthetic", branching=2, depth=3, cost_knob=2000)
    rec = run_throughput(game, "uct", budget_ms=1, trials=2, seed=1)
    assert rec.budget_s == pytest.approx(0.01)


def test_throughput_keeps_adequate_budgets():
    rec = run_throughput(game_id("tictactoe"), "uct", budget_ms=40,
                         trials=2, seed=1)
    assert rec.budget_s == pytest.approx(0.04)


def test_throughput_rejects_bad_inputs():
    with pytest.raises(ValueError):
        run_throughput(game_id("tictactoe"), "uct", budget_ms=50, trials=0)


# --- matches -----------------------------------------------------------

def test_selfplay_mirror_pairs_sum_to_one():
    spec = AgentSpec("uct")
    result = run_match(game_id("tictactoe"), spec, spec, games_count=8,
                       budget=SearchBudget.iterations(64), seed=11)
    assert result.games_played == 8
    assert result.wins + result.draws + result.losses == 8
    for i in range(0, 8, 2):
        assert result.per_game[i] + result.per_game[i + 1] == 1.0
    assert result.score_avg == pytest.approx(
        (result.wins + 0.5 * result.draws) / 8)


def test_match_alternates_starts_and_scores_both_sides():
    strong = AgentSpec("minimax")
    weak = AgentSpec("uct")
    result = run_match(game_id("nim", h1=2, h2=3), strong, weak,
                       games_count=4, budget=SearchBudget.iterations(60),
                       seed=7)
    assert 0.0 <= result.score_avg <= 1.0
    assert len(result.per_game) == 4


def test_match_rejects_zero_games():
    with pytest.raises(ValueError):
        run_match(game_id("tictactoe"), AgentSpec("uct"), AgentSpec("uct"),
                  games_count=0, budget=SearchBudget.iterations(5))
