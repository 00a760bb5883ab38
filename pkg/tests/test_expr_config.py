import numpy as np
import pytest

from evclass.config import get_tolerances, set_tolerances, tolerances
from evclass.expr import ExpressionError, parse_expression


def test_expression_one_variable():
    f = parse_expression("0.5 - x", 1)
    np.testing.assert_allclose(f(np.array([[0.0], [1.0]])), [0.5, -0.5])


def test_expression_powers_and_names():
    f = parse_expression("x1^2 - 2*x2 + 3", 2)
    np.testing.assert_allclose(f(np.array([[1.0, 1.0], [2.0, 0.5]])), [2.0, 6.0])


def test_constant_expression_broadcasts():
    np.testing.assert_allclose(parse_expression("2", 1)(np.zeros((3, 1))), [2, 2, 2])


@pytest.mark.parametrize("text", ["x / 2", "sin(x)", "x ** -1", "x ** 0.5", "y", "__import__('os')", "x +"])
def test_rejected_expressions(text):
    with pytest.raises(ExpressionError):
        parse_expression(text, 1)


def test_tolerance_override_is_scoped():
    base = get_tolerances().feasibility
    with tolerances(feasibility=1e-6) as t:
        assert t.feasibility == 1e-6
        assert get_tolerances().feasibility == 1e-6
    assert get_tolerances().feasibility == base


def test_unknown_tolerance():
    with pytest.raises(KeyError):
        set_tolerances(bogus=1.0)
