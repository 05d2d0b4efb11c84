import math

import numpy as np
import pytest

from agnostic_erm.combinatorics import find_eluder
from agnostic_erm.concept_class import ClassKind, make_builtin
from agnostic_erm.curves import (ClassifyConfig, LearningCurve, Regime, Scenario, checkpoint_compare,
                                 classify_rate, estimate_curve, geometric_grid, parse_grid)
from agnostic_erm.distributions import build_eluder_adversarial, finite_gap_fixture
from agnostic_erm.erm import TiePolicy, brute_force_expected_excess
from agnostic_erm.errors import GridMismatch, InsufficientGrid, InvalidParams

SC = Scenario("synthetic", "none", "FirstIndex", 0, 0)


def _curve(grid, means, se=None):
    se = se or [0.0] * len(grid)
    return LearningCurve(tuple(grid), tuple(means), tuple(se), tuple([100] * len(grid)), SC)


def test_grids():
    g = geometric_grid(10, 1000, 4)
    assert g[0] == 10 and g[-1] == 1000 and all(b > a for a, b in zip(g, g[1:]))
    assert parse_grid("2,4,8") == [2, 4, 8]
    assert parse_grid("geom:10:1000:4") == g
    assert parse_grid([1, 3]) == [1, 3]


def test_estimate_curve_matches_oracle_and_is_deterministic():
    cls, dist = finite_gap_fixture()
    for pol in TiePolicy:
        c = estimate_curve(cls, dist, pol, [2, 6], 20000, seed=5, prefix_len=3)
        for n, m, s in zip(c.grid, c.means, c.stderrs):
            want = brute_force_expected_excess(cls.enumerate(3), dist, n, pol)
            assert abs(m - want) <= 4 * s
        again = estimate_curve(cls, dist, pol, [2, 6], 20000, seed=5, prefix_len=3)
        assert again.means == c.means and again.stderrs == c.stderrs


def test_worker_count_does_not_change_results(monkeypatch):
    cls, dist = finite_gap_fixture()
    monkeypatch.setenv("AGNOSTIC_ERM_WORKERS", "1")
    a = estimate_curve(cls, dist, "random", [4], 10000, seed=1, prefix_len=3)
    monkeypatch.setenv("AGNOSTIC_ERM_WORKERS", "3")
    b = estimate_curve(cls, dist, "random", [4], 10000, seed=1, prefix_len=3)
    assert a.means == b.means


def test_stderr_halving():
    cls, dist = finite_gap_fixture()
    full = estimate_curve(cls, dist, "adversarial", [4], 40000, seed=9, prefix_len=3)
    half = estimate_curve(cls, dist, "adversarial", [4], 20000, seed=9, prefix_len=3)
    assert half.stderrs[0] / full.stderrs[0] == pytest.approx(math.sqrt(2), rel=0.2)


def test_reps_guard():
    cls, dist = finite_gap_fixture()
    with pytest.raises(InvalidParams):
        estimate_curve(cls, dist, "first", [4], 0, seed=1, prefix_len=3)


def test_csv_roundtrip(tmp_path):
    cls, dist = finite_gap_fixture()
    c = estimate_curve(cls, dist, "first", [2, 4, 8], 100, seed=2, prefix_len=3)
    path = tmp_path / "curve.csv"
    c.write_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "n,mean_excess,stderr,replications,scenario_id"
    back = LearningCurve.read_csv(path)
    assert back.grid == c.grid and back.means == c.means and back.stderrs == c.stderrs


def test_classify_synthetic_families():
    n = np.array(geometric_grid(100, 10000, 6), dtype=float)
    assert classify_rate(_curve(n.astype(int), np.exp(-n / 500))).regime is Regime.EXPONENTIAL
    assert classify_rate(_curve(n.astype(int), n ** -1.0)).regime is Regime.SUPER_ROOT
    slow = classify_rate(_curve(n.astype(int), 1 / np.log(n + math.e), [1e-4] * len(n)))
    assert slow.regime is Regime.ARBITRARILY_SLOW
    assert classify_rate(_curve(n.astype(int), n ** -0.5 * 0 + 0.0)).regime is Regime.EXPONENTIAL
    with pytest.raises(InsufficientGrid):
        classify_rate(_curve([1, 2, 3, 4, 5, 6], [1.0] * 6))
    strict = ClassifyConfig(root_factor=1e9, slope_max=-5.0)
    assert classify_rate(_curve(n.astype(int), n ** -1.0), strict).regime is not Regime.SUPER_ROOT


def test_checkpoint_compare_grid_mismatch():
    ex5 = make_builtin(ClassKind.EXAMPLE5)
    seq = find_eluder(ex5, ex5.hypothesis(0), 2, candidates=range(1, 64))
    con = build_eluder_adversarial(seq, "inverse_log", 2, ex5)
    with pytest.raises(GridMismatch):
        checkpoint_compare(_curve([1, 2, 3], [0.1, 0.1, 0.1]), con)
    grid = [cp.n_int for cp in con.checkpoints]
    rep = checkpoint_compare(_curve(grid, [1.0] * len(grid)), con)
    assert rep.passed and len(rep.rows) == 2
    rep = checkpoint_compare(_curve(grid, [0.0] * len(grid)), con)
    assert not rep.passed
