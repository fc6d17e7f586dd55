import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from feedback_grover import analytic as an
from feedback_grover.problem import DomainError


@pytest.mark.parametrize("p,r,expected", [(0.25, 0, 0.25), (0.25, 1, 1.0), (0.5, 7, 0.5)])
def test_success_after_rotations(p, r, expected):
    assert an.success_after_rotations(p, r) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_success_after_rotations_domain(p):
    with pytest.raises(DomainError):
        an.success_after_rotations(p, 1)


def brute_argmax(p):
    # One full period of sin^2 in the rotation angle; later peaks only repeat it.
    theta = math.asin(math.sqrt(p))
    upper = math.floor(math.pi / (2 * theta)) + 1
    vals = [math.sin((2 * r + 1) * theta) ** 2 for r in range(upper)]
    best = max(vals)
    return next(r for r, v in enumerate(vals) if v >= best - 1e-12)


@pytest.mark.parametrize("p", [0.25, 0.5, 1.0, 1 / 1024, 3 / 64, 0.3, 0.01])
def test_optimal_rotation_count_matches_brute_force(p):
    assert an.optimal_rotation_count(p) == brute_argmax(p)


def test_optimal_rotation_count_examples():
    assert an.optimal_rotation_count(0.25) == 1
    assert an.optimal_rotation_count(0.5) == 0
    assert an.optimal_rotation_count(1.0) == 0


def test_rotations_to_reach():
    assert an.rotations_to_reach(0.25, 1.0) == pytest.approx(1.0)
    assert an.rotations_to_reach(0.3, 0.3) == 0.0
    assert an.rotations_to_reach(0.5, 0.5) == 0.0
    with pytest.raises(DomainError):
        an.rotations_to_reach(0.3, 0.2)


def test_expected_ratio_discrete_examples():
    assert an.expected_ratio_discrete(0.5, 6) == pytest.approx(1.0)
    assert an.expected_ratio_discrete(0.25, 0) == pytest.approx(1 / 3)
    assert an.expected_ratio_discrete(0.25, 1) == pytest.approx(5 / 3)


def test_adaptive_simpson_against_antiderivative():
    val = an.adaptive_simpson(math.sin, 0.0, 3.0)
    assert val == pytest.approx(1 - math.cos(3.0), abs=1e-10)


def test_expected_ratio_integral_printed_cells():
    # Table values for p -> 0, g = 1 and p = 1/4, g = 3/4.
    assert an.expected_ratio_integral(1e-12, 1.0) == pytest.approx(1.00, abs=1e-5)
    assert an.expected_ratio_integral(0.25, 0.75) == pytest.approx(1.00, abs=1e-6)


def test_expected_ratio_integral_against_scipy_quad():
    for p, g in [(0.01, 0.9), (0.2, 0.5), (0.4, 1.0)]:
        theta = math.asin(math.sqrt(p))
        horizon = an.rotations_to_reach(p, g)
        ones, _ = integrate.quad(lambda r: math.sin((2 * r + 1) * theta) ** 2, 0, horizon, epsabs=1e-13)
        assert an.expected_ratio_integral(p, g) == pytest.approx(ones / (horizon - ones), rel=1e-9)


@pytest.mark.parametrize("theta,X,expected,tol", [
    (math.pi / 6, math.pi / 2, 2.41, 0.005),
    (math.pi / 4, math.pi / 3, 1.69, 0.005),
    (math.pi / 4, math.pi / 4, 1.00, 0.005),
    (0.0, math.pi / 4, (math.pi / 2 - 1) / (math.pi / 2 + 1), 1e-12),
])
def test_expected_ratio_closed_examples(theta, X, expected, tol):
    assert an.expected_ratio_closed(theta, X) == pytest.approx(expected, abs=tol)


def test_expected_ratio_closed_case_one_half_value():
    assert an.expected_ratio_closed(0.0, math.pi / 4) == pytest.approx(0.2220, abs=5e-5)


def test_expected_ratio_closed_domain():
    with pytest.raises(DomainError):
        an.expected_ratio_closed(0.5, 0.4)


@pytest.mark.parametrize("eps", [1e-6, 1e-9, 1e-12])
@pytest.mark.parametrize("theta", [0.1, math.pi / 6, math.pi / 4, 0.7])
def test_limit_branch(theta, eps):
    assert an.expected_ratio_closed(theta, theta + eps) == pytest.approx(math.tan(theta) ** 2, rel=1e-3)


def test_monotone_in_end_angle():
    for theta in np.linspace(0, math.pi / 4, 12):
        xs = np.linspace(theta, math.pi / 2, 400)
        vals = [an.expected_ratio_closed(float(theta), float(x)) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))


@given(p=st.floats(1e-6, 0.499), frac=st.floats(0, 1))
def test_probability_and_angle_forms_agree(p, frac):
    g = p + (1 - p) * frac
    direct = an.expected_ratio_closed(math.asin(math.sqrt(p)), math.asin(math.sqrt(g)))
    assert an.expected_ratio_from_probabilities(p, g) == direct


def test_discrete_converges_to_integral():
    p, g = 1e-6, 1.0
    horizon = round(an.rotations_to_reach(p, g))
    assert abs(an.expected_ratio_discrete(p, horizon) - an.expected_ratio_integral(p, g)) <= 0.02


def test_integral_matches_closed_on_grid():
    worst = 0.0
    for p in np.linspace(0.005, 0.495, 20):
        for g in np.linspace(p, 1.0, 20):
            a = an.expected_ratio_integral(float(p), float(g))
            b = an.expected_ratio_from_probabilities(float(p), float(g))
            worst = max(worst, abs(a - b))
    assert worst <= 1e-8


def test_table1_structure():
    grid = an.table1()
    assert len(grid.rows) == 3 and all(len(r) == 3 for r in grid.rows)
    for row in grid.rows:
        ratios = [c.prediction.ratio for c in row]
        assert ratios == sorted(ratios)


def test_table1_reported_values():
    grid = an.table1()
    assert grid.cell("I", 0.75).rounded == pytest.approx(0.4149, abs=1e-4)
    assert grid.cell("III", 1.0).rounded == pytest.approx(4.5039, abs=1e-4)
    assert grid.cell("II", 0.5).rounded == pytest.approx(0.5925, abs=1e-4)
    assert grid.cell("II", 1.0).rounded == pytest.approx(2.4100, abs=1e-4)
    flagged = {(c.case, c.g) for c in grid.discrepancies()}
    assert ("I", 0.5) in flagged


def test_recommended_set_val_brackets():
    assert an.recommended_set_val() == 1.0
    grid = an.table1()
    v = an.recommended_set_val()
    # Threshold sits at the upper end for p -> 0, inside for p = 1/4, at the lower end for p = 1/2.
    assert grid.cell("I", 0.5).prediction.ratio <= v <= grid.cell("I", 1.0).prediction.ratio + 1e-12
    assert grid.cell("II", 0.5).prediction.ratio <= v <= grid.cell("II", 1.0).prediction.ratio
    assert grid.cell("III", 0.5).prediction.ratio - 1e-12 <= v <= grid.cell("III", 1.0).prediction.ratio
