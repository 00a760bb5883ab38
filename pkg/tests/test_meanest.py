import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evclass.exceptions import InfeasibleLambdaError
from evclass.meanest import (ConfidenceSequence, MuGrid, boundary_set_u, bounded_mean_cs,
                             encode_u, heavy_tail_cs)
from evclass.streams import synthetic_stream

GRID = MuGrid.arange(0.1, 0.9, 0.1)


class TestMuGrid:
    def test_parse_range(self):
        g = MuGrid.parse("0.01:0.99:0.001")
        assert len(g) == 981 and g.values[0] == 0.01 and g.values[-1] == 0.99

    def test_parse_list(self):
        assert MuGrid.parse("0.2, 0.5").values.tolist() == [0.2, 0.5]

    def test_defaults(self):
        assert MuGrid.bounded_default().values[0] == pytest.approx(0.001)
        assert MuGrid.heavy_default().values[-1] == pytest.approx(0.998)

    def test_invalid(self):
        with pytest.raises(ValueError):
            MuGrid([0.5, 0.2])
        with pytest.raises(ValueError):
            MuGrid.parse("0:1")


class TestBoundary:
    def test_examples(self):
        assert boundary_set_u([1, 1, 1]) == frozenset({1})
        assert boundary_set_u([-1, -1]) == frozenset({-1})
        assert boundary_set_u([1, -1]) == frozenset()
        assert boundary_set_u([]) == frozenset()

    def test_encoding(self):
        assert [encode_u(frozenset()), encode_u(frozenset({1})), encode_u(frozenset({-1}))] == [0, 1, -1]


class TestBounded:
    def test_empty_stream(self):
        cs = bounded_mean_cs([], GRID, 0.05, {"kind": "ftl"})
        assert cs.rounds == 0 and cs.in_set.all()

    def test_first_round_keeps_everything_under_ftl(self):
        cs = bounded_mean_cs([0.95], GRID, 0.05, {"kind": "ftl"})
        assert cs.in_set[1].all() and np.all(cs.log_wealth[1] == 0)

    def test_five_ones_excludes_half(self):
        cs = bounded_mean_cs([1.0] * 5, MuGrid([0.5]), 0.05, {"kind": "fixed", "edge": "upper"})
        assert cs.in_set[:5, 0].all() and not cs.in_set[5, 0]

    def test_stopped_wealth_is_frozen(self):
        cs = bounded_mean_cs([1.0] * 8, MuGrid([0.5]), 0.05, {"kind": "fixed", "edge": "upper"})
        assert np.all(cs.log_wealth[5:, 0] == cs.log_wealth[5, 0])

    def test_boundary_candidate(self):
        cs = bounded_mean_cs([0.0, 0.0, 0.3], MuGrid([0.0, 0.3]), 0.05, {"kind": "ftl"})
        assert cs.in_set[:3, 0].all() and not cs.in_set[3, 0]
        assert cs.in_set[:, 1].all()

    def test_candidates_outside_interval(self):
        with pytest.raises(ValueError):
            bounded_mean_cs([0.5], MuGrid([1.2]), 0.05, {"kind": "ftl"})

    @given(st.integers(0, 10**6))
    def test_nested_and_strategy_feasible(self, seed):
        X = synthetic_stream({"distribution": "uniform"}, 60, seed=seed)
        cs = bounded_mean_cs(X, GRID, 0.1, {"kind": "ftl"})
        assert cs.is_nested()

    def test_power_regression(self):
        X = synthetic_stream({"distribution": "bernoulli", "p": 0.8}, 2000, seed=1)
        cs = bounded_mean_cs(X, MuGrid.arange(0.01, 0.99, 0.01), 0.05, {"kind": "ftl"})
        assert cs.width(2000) < 0.2
        assert 0.8 in np.round(cs.members(2000), 10)


class TestHeavy:
    def test_empty_stream(self):
        cs = heavy_tail_cs([], MuGrid([-0.5, 0.0, 0.5]), 0.05, {"kind": "ftl"})
        assert cs.in_set.all() and cs.boundary.tolist() == [0]

    def test_all_ones(self):
        cs = heavy_tail_cs([1.0, 1.0, 1.0], MuGrid([0.0]), 0.05, {"kind": "ftl"})
        assert cs.boundary.tolist() == [0, 1, 1, 1]
        cs = heavy_tail_cs([-1.0, -1.0, 0.5], MuGrid([0.0]), 0.05, {"kind": "ftl"})
        assert cs.boundary.tolist() == [0, -1, -1, 0]

    def test_infeasible_strategy_before_any_round(self):
        with pytest.raises(InfeasibleLambdaError):
            heavy_tail_cs([0.0], MuGrid([0.0]), 0.05, {"kind": "fixed", "lam": [0.0, 1.5]})

    def test_rescaled_second_moment(self):
        X = synthetic_stream({"distribution": "discrete", "values": [-4, 0, 4], "probs": [0.1, 0.8, 0.1]},
                             100, seed=3)
        cs = heavy_tail_cs(X, MuGrid([-1.0, 0.0, 1.0]), 0.05, {"kind": "ftl"}, second_moment=4.0)
        ref = heavy_tail_cs(X / 2, MuGrid([-0.5, 0.0, 0.5]), 0.05, {"kind": "ftl"})
        np.testing.assert_array_equal(cs.in_set, ref.in_set)
        with pytest.raises(ValueError):
            heavy_tail_cs(X, MuGrid([2.5]), 0.05, {"kind": "ftl"}, second_moment=4.0)

    def test_csv_round_trip(self):
        X = synthetic_stream({"distribution": "discrete", "values": [-2, 0, 2], "probs": [0.1, 0.8, 0.1]},
                             30, seed=9)
        cs = heavy_tail_cs(X, MuGrid.arange(-0.8, 0.8, 0.4), 0.05, {"kind": "ftl"})
        buf = io.StringIO()
        cs.to_csv(buf)
        assert buf.getvalue().splitlines()[0] == "t,mu,in_set,R_t,U_t"
        buf.seek(0)
        back = ConfidenceSequence.from_csv(buf)
        np.testing.assert_array_equal(back.in_set, cs.in_set)
        np.testing.assert_array_equal(back.log_wealth, cs.log_wealth)
        np.testing.assert_array_equal(back.boundary, cs.boundary)
        np.testing.assert_array_equal(back.mu, cs.mu)


def test_parallel_equals_serial():
    X = synthetic_stream({"distribution": "bernoulli", "p": 0.3}, 80, seed=4)
    a = bounded_mean_cs(X, GRID, 0.05, {"kind": "ftl"}, workers=1)
    b = bounded_mean_cs(X, GRID, 0.05, {"kind": "ftl"}, workers=2)
    np.testing.assert_array_equal(a.in_set, b.in_set)
    np.testing.assert_array_equal(a.log_wealth, b.log_wealth)
