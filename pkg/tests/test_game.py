import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evclass.dual import LambdaVector
from evclass.exceptions import InfeasibleLambdaError, NotProperError
from evclass.game import (Game, GameState, Trajectory, play_round, run_test, threshold,
                          ville_reject)
from evclass.hypothesis import ConstraintSpec, Hypothesis, SampleGrid, support_restriction

H = Hypothesis.interval_mean(0.5)
NON_PROPER = Hypothesis(SampleGrid.explicit([0.0, 1.0, 2.0]), ConstraintSpec.from_expressions(["x"]))


class TestPlayRound:
    def test_rewards(self):
        s = play_round(GameState(), LambdaVector([2.0]), H, 1.0)
        assert s.log_wealth == pytest.approx(math.log(2)) and s.round == 1 and s.history == (1.0,)
        s = play_round(s, LambdaVector([0.0]), H, 0.3)
        assert s.log_wealth == pytest.approx(math.log(2))
        s = play_round(s, LambdaVector([2.0]), H, 0.0)
        assert s.log_wealth == -math.inf
        s = play_round(s, LambdaVector([-2.0]), H, 0.0)
        assert s.log_wealth == -math.inf


class TestVille:
    def test_examples(self):
        assert ville_reject(GameState(log_wealth=3.1), 0.05)
        assert not ville_reject(GameState(log_wealth=2.9), 0.05)
        assert ville_reject(GameState(log_wealth=0.70), 0.5)

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.1, 1.5])
    def test_bad_delta(self, delta):
        with pytest.raises(ValueError):
            threshold(delta)


class TestRunTest:
    def test_constant_survives(self):
        v, traj = run_test(np.random.default_rng(0).random(50), H, {"kind": "constant"}, 0.05)
        assert not v.rejected and v.round == 50 and str(v) == "survived(50)"
        assert np.all(traj.log_wealth == 0)

    def test_five_ones(self):
        v, traj = run_test([1.0] * 10, H, {"kind": "fixed", "lam": [2.0]}, 0.05)
        assert str(v) == "rejected(5, threshold)"
        assert len(traj) == 5 and traj.log_wealth[-1] == pytest.approx(5 * math.log(2))

    def test_outside_support(self):
        v, traj = run_test([0.0, 0.0, 1.0, 0.0], NON_PROPER, {"kind": "ftl"}, 0.05)
        assert (v.round, v.cause) == (3, "outside_support")
        v, _ = run_test([2.0], NON_PROPER, {"kind": "constant"}, 0.05)
        assert (v.round, v.cause) == (1, "outside_support")

    def test_outside_sample_space(self):
        v, _ = run_test([0.4, 1.2], H, {"kind": "ftl"}, 0.05)
        assert (v.round, v.cause) == (2, "outside_support")

    def test_snap_tolerance(self):
        H01 = Hypothesis.interval_mean(0.5, step=0.1)
        assert not run_test([1.04], H01, {"kind": "constant"}, 0.05)[0].rejected
        assert run_test([1.06], H01, {"kind": "constant"}, 0.05)[0].rejected

    def test_max_rounds(self):
        v, traj = run_test([0.5] * 20, H, {"kind": "ftl"}, 0.05, max_rounds=7)
        assert v.round == 7 and len(traj) == 7

    def test_dead_wealth_keeps_playing(self):
        v, traj = run_test([0.0, 1.0, 1.0], H, {"kind": "fixed", "lam": [2.0]}, 0.05)
        assert not v.rejected and v.round == 3
        assert np.all(traj.log_wealth == -np.inf)

    def test_strategy_errors_propagate(self):
        with pytest.raises(InfeasibleLambdaError):
            run_test([0.5], H, {"kind": "fixed", "lam": [3.0]}, 0.05)

    def test_loose_non_proper_unsupported(self):
        with pytest.raises(NotProperError):
            run_test([1.0], Hypothesis.heavy_tail_mean(1.0), {"kind": "constant"}, 0.05)

    def test_latched_after_rejection(self):
        g = Game(H, {"kind": "fixed", "lam": [2.0]}, 0.05)
        for _ in range(5):
            g.step(1.0)
        assert g.rejected_at == 5
        assert g.step(0.0) and g.rejected_at == 5 and g.round == 5
        assert g.state.rejected_at == 5 and g.state.cause == "threshold"

    @given(st.integers(0, 10**6), st.sampled_from(["fixed", "grid_mixture", "ftl"]))
    def test_bookkeeping_identity(self, seed, kind):
        rng = np.random.default_rng(seed)
        spec = {"fixed": {"kind": "fixed", "lam": [rng.uniform(-2, 2)]},
                "grid_mixture": {"kind": "grid_mixture", "n": 5},
                "ftl": {"kind": "ftl"}}[kind]
        xs = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=40)
        v, traj = run_test(xs, H, spec, 0.01)
        # running sum in round order, so equality is exact (including -inf)
        assert np.array_equal(traj.log_wealth, np.cumsum(traj.reward))
        with np.errstate(divide="ignore"):
            expected = np.log(np.maximum(1 + traj.lam[:, 0] * (traj.x[:, 0] - 0.5), 0))
        np.testing.assert_allclose(traj.reward, expected, atol=1e-12)

    def test_trajectory_csv_round_trip(self):
        v, traj = run_test([0.0, 1.0, 0.5, 1.0], H, {"kind": "ftl"}, 0.05)
        buf = io.StringIO()
        traj.to_csv(buf)
        buf.seek(0)
        back = Trajectory.from_csv(buf)
        for name in ("lam", "x", "reward", "log_wealth"):
            np.testing.assert_array_equal(getattr(back, name), getattr(traj, name))

    def test_heavy_tail_trajectory_columns(self):
        _, traj = run_test([0.0, 2.0], Hypothesis.heavy_tail_mean(0.0), {"kind": "ftl"}, 0.05)
        assert traj.header() == ["t", "lam_alpha", "lam_beta", "x", "reward", "R_t"]


def test_restriction_path_example():
    keep, _ = support_restriction(NON_PROPER)
    assert keep.tolist() == [0]
    v, _ = run_test([0.0, 0.0, 0.0], NON_PROPER, {"kind": "ftl"}, 0.05)
    assert not v.rejected
