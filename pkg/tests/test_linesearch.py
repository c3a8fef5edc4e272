"""Step-size machinery: BB trial steps, clamping, the averaged non-monotone
reference, and Armijo backtracking along the projected curve."""

import math

import numpy as np
import pytest

import stiefelopt.linesearch
from stiefelopt import (
    LineSearchError,
    NonmonotoneState,
    RankDeficientError,
    StiefelPoint,
    backtrack,
    bb_steps,
    clamp_step,
    descent_derivative,
    gradient_split,
    mixed_direction,
    nonmonotone_update,
    retract,
)


class _ValueOnly:
    """Minimal objective for backtracking tests (only ``value`` is needed)."""

    def __init__(self, fun):
        self._fun = fun

    def value(self, x):
        return self._fun(x)


def _circle_quadratic_case():
    """X = (1,1)/sqrt2 on the unit circle with F(x) = x^T diag(1,3) x.

    F(X) = 2, the skew factor has entries +-2 (norm^2 = 8), the canonical
    direction is (-sqrt2, sqrt2), and the pure-canonical slope is -4.
    """
    objective = _ValueOnly(lambda x: float(x[0, 0] ** 2 + 3.0 * x[1, 0] ** 2))
    point = StiefelPoint(np.array([[1.0], [1.0]]) / math.sqrt(2.0))
    grad = np.array([[2.0 * point.x[0, 0]], [6.0 * point.x[1, 0]]])
    split = gradient_split(point, grad)
    direction = mixed_direction(split, 1.0, 0.0)
    slope = descent_derivative(point, grad, split, 1.0, 0.0)
    assert slope == pytest.approx(-4.0, abs=1e-12)
    return objective, point, direction, slope


# -- BB trial steps -------------------------------------------------------------


def test_bb_steps_hand_values():
    s = np.array([[1.0], [1.0]])
    r = np.array([[1.0], [2.0]])
    # ||S||^2 = 2, <S,R> = 3, ||R||^2 = 5.
    bb1, bb2 = bb_steps(s, r)
    assert bb1 == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert bb2 == pytest.approx(3.0 / 5.0, rel=1e-15)


def test_bb_steps_take_absolute_values():
    s = np.array([[1.0], [1.0]])
    assert bb_steps(s, -np.array([[1.0], [2.0]])) == pytest.approx((2.0 / 3.0, 0.6))


def test_bb_steps_degenerate_denominators():
    s = np.array([[1.0], [0.0]])
    bb1, bb2 = bb_steps(s, np.array([[0.0], [1.0]]))  # orthogonal: <S,R> = 0
    assert bb1 == math.inf and bb2 == 0.0
    bb1, bb2 = bb_steps(s, np.zeros((2, 1)))  # zero residual
    assert bb1 == math.inf and bb2 == math.inf
    assert clamp_step(bb1, 1e-20, 1e20) == 1e20


def test_clamp_step_and_validation():
    assert clamp_step(5.0, 1.0, 10.0) == 5.0
    assert clamp_step(0.1, 1.0, 10.0) == 1.0
    assert clamp_step(100.0, 1.0, 10.0) == 10.0
    with pytest.raises(ValueError, match="tau_min"):
        clamp_step(1.0, 0.0, 10.0)
    with pytest.raises(ValueError, match="tau_min"):
        clamp_step(1.0, 2.0, 1.0)


# -- non-monotone reference ------------------------------------------------------


def test_nonmonotone_update_hand_values():
    state = nonmonotone_update(NonmonotoneState(q=1.0, c=10.0), 4.0, eta=0.85)
    assert state.q == pytest.approx(1.85)
    assert state.c == pytest.approx(12.5 / 1.85)  # (0.85*10 + 4) / 1.85


def test_nonmonotone_update_eta_zero_collapses_to_newest():
    state = nonmonotone_update(NonmonotoneState(q=3.0, c=10.0), 4.0, eta=0.0)
    assert (state.q, state.c) == (1.0, 4.0)


def test_nonmonotone_update_eta_one_is_running_mean():
    values = [10.0, 4.0, 7.0, 1.0]
    state = NonmonotoneState(q=1.0, c=values[0])
    for i, v in enumerate(values[1:], start=2):
        state = nonmonotone_update(state, v, eta=1.0)
        assert state.q == pytest.approx(i)
        assert state.c == pytest.approx(sum(values[:i]) / i)


def test_nonmonotone_update_validates_eta():
    state = NonmonotoneState(q=1.0, c=0.0)
    for eta in (-0.1, 1.1):
        with pytest.raises(ValueError, match="eta"):
            nonmonotone_update(state, 0.0, eta)


# -- backtracking ------------------------------------------------------------------


def test_backtrack_accepts_first_trial_on_the_circle():
    # With tau0 = 1 the fallback projection of X - H is (3,-1)/sqrt(10),
    # where F = (9 + 3)/10 = 1.2, well below 2 - rho1*4.
    objective, point, direction, slope = _circle_quadratic_case()
    result = backtrack(objective, point, direction, slope, 1.0, c_ref=2.0)
    assert result.tau == 1.0
    assert result.nfe == 1
    assert not result.used_taylor
    assert result.value == pytest.approx(1.2, abs=1e-12)
    expected = np.array([[3.0], [-1.0]]) / math.sqrt(10.0)
    np.testing.assert_allclose(result.point.x, expected, atol=1e-12)


def test_backtrack_shrinks_until_sufficient_decrease():
    # rho1 = 0.9 makes the threshold brutal: trials at tau = 8, 2.4, 0.72,
    # 0.216 all fail, and tau = 8 * 0.3^4 = 0.0648 is the first accept
    # (F there is ~1.74508 vs threshold ~1.76672, from the angle form
    # F = 2 - cos(2 theta) of this objective on the circle).
    objective, point, direction, slope = _circle_quadratic_case()
    result = backtrack(
        objective, point, direction, slope, 8.0, c_ref=2.0, rho1=0.9
    )
    assert result.tau == pytest.approx(8.0 * 0.3**4, rel=1e-15)
    assert result.nfe == 5
    assert result.value == pytest.approx(1.745081649404, abs=1e-9)
    assert result.value < 2.0 + 0.9 * result.tau * slope


def test_backtrack_rejects_exact_ties():
    # A constant objective equal to the first threshold is *not* accepted
    # (the test is strict), but passes against the looser second threshold.
    point = StiefelPoint(np.array([[1.0], [0.0]]))
    direction = np.array([[0.0], [1.0]])
    c_ref, slope, tau0, rho1 = 5.0, -1.0, 1.0, 1e-4
    tie_value = c_ref + rho1 * tau0 * slope
    result = backtrack(
        _ValueOnly(lambda x: tie_value), point, direction, slope, tau0, c_ref, rho1=rho1
    )
    assert result.nfe == 2
    assert result.tau == pytest.approx(0.3 * tau0, rel=1e-15)


def test_backtrack_exhaustion_carries_best_candidate():
    point = StiefelPoint(np.array([[1.0], [0.0]]))
    direction = np.array([[0.0], [1.0]])
    with pytest.raises(LineSearchError, match="no sufficient decrease") as excinfo:
        backtrack(
            _ValueOnly(lambda x: 7.5),
            point,
            direction,
            slope=-1.0,
            tau0=1.0,
            c_ref=5.0,
            max_halvings=5,
        )
    err = excinfo.value
    assert err.nfe == 6  # initial trial plus five shrinks
    assert err.best is not None
    assert err.best.value == 7.5
    assert err.best.tau == 1.0  # ties keep the first candidate seen
    assert err.best.nfe == 1


def test_backtrack_halves_through_rank_deficient_projections(monkeypatch):
    objective, point, direction, slope = _circle_quadratic_case()
    calls = {"count": 0}

    def flaky_retract(pnt, h, tau):
        calls["count"] += 1
        if calls["count"] <= 2:
            raise RankDeficientError("synthetic rank failure")
        return retract(pnt, h, tau)

    monkeypatch.setattr(stiefelopt.linesearch, "retract", flaky_retract)
    result = backtrack(objective, point, direction, slope, 1.0, c_ref=2.0)
    # Two rank retries halve tau twice before the first (accepted) evaluation.
    assert result.tau == pytest.approx(0.25)
    assert result.nfe == 1


def test_backtrack_gives_up_after_rank_retry_budget(monkeypatch):
    objective, point, direction, slope = _circle_quadratic_case()

    def always_deficient(pnt, h, tau):
        raise RankDeficientError("synthetic rank failure")

    monkeypatch.setattr(stiefelopt.linesearch, "retract", always_deficient)
    with pytest.raises(LineSearchError, match="rank deficient") as excinfo:
        backtrack(
            objective, point, direction, slope, 1.0, c_ref=2.0, max_rank_retries=3
        )
    assert excinfo.value.best is None
    assert excinfo.value.nfe == 0


def test_backtrack_validates_arguments():
    objective, point, direction, slope = _circle_quadratic_case()
    with pytest.raises(ValueError, match="slope"):
        backtrack(objective, point, direction, 0.0, 1.0, c_ref=2.0)
    with pytest.raises(ValueError, match="tau0"):
        backtrack(objective, point, direction, slope, 0.0, c_ref=2.0)
    with pytest.raises(ValueError, match="rho1"):
        backtrack(objective, point, direction, slope, 1.0, c_ref=2.0, rho1=1.0)
    with pytest.raises(ValueError, match="delta"):
        backtrack(objective, point, direction, slope, 1.0, c_ref=2.0, delta=0.0)
