import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimodal_nav.kinematics import Axis, BodyState
from bimodal_nav.mpc import (
    InfeasibleConfigError,
    MpcConfig,
    MpcProblem,
    horizon_cost,
    predict,
    select_axis,
    solve,
    stage_cost,
)

from oracles import mpc_grid_search

CFG = MpcConfig()
TH = math.radians(45)


def test_defaults():
    assert CFG.Q == (3.0, 3.0) and CFG.R == 0.2 and CFG.N == 3
    assert CFG.a_max == pytest.approx(0.183030, abs=1e-6)


@pytest.mark.parametrize("kw", [{"N": 0}, {"R": 0.0}, {"Q": (-1, 1)}, {"a_max": 0.0}, {"a_min": 0.01}])
def test_invalid_config(kw):
    with pytest.raises(InfeasibleConfigError):
        MpcConfig(**kw)


def test_predict():
    s = predict(BodyState(0, 0), 0.1, Axis.X, TH)
    assert s.x == pytest.approx(0.141421, abs=1e-6) and s.y == 0 and s.k == 1
    assert predict(BodyState(0, 0), 0.0, Axis.Y, TH) == BodyState(0, 0, 1)
    with pytest.raises(ValueError):
        predict(BodyState(0, 0), 0.3, Axis.X, TH, a_max=CFG.a_max)


def test_stage_cost():
    assert stage_cost((1.0, 2.0), (0.0, 0.0), 0.5, MpcConfig(Q=(3, 3), R=0.2)) == pytest.approx(15.05)


def test_saturates_when_far_behind():
    p = MpcProblem(BodyState(0.0, 0.0), ((3.6, 0.0),) * 3, Axis.X, TH)
    sol = solve(p, CFG)
    assert sol.u == pytest.approx((CFG.a_max,) * 3, abs=1e-12)
    c, _ = mpc_grid_search((0.0, 0.0), [(3.6, 0.0)] * 3, "X", TH, 1, CFG.Q, CFG.R, CFG.a_max)
    assert sol.cost == pytest.approx(c, abs=1e-9)


def test_shortens_near_goal():
    p = MpcProblem(BodyState(3.55, 0.0), ((3.6, 0.0),) * 3, Axis.X, TH)
    sol = solve(p, CFG)
    assert 0 < sol.u[0] < CFG.a_max
    c, _ = mpc_grid_search((3.55, 0.0), [(3.6, 0.0)] * 3, "X", TH, 1, CFG.Q, CFG.R, CFG.a_max)
    assert abs(sol.cost - c) < 1e-6


def test_at_reference_stays_put():
    p = MpcProblem(BodyState(1.0, 2.0), ((1.0, 2.0),) * 3, Axis.Y, TH)
    assert solve(p, CFG).u == (0.0, 0.0, 0.0)


def test_reference_length_must_match():
    with pytest.raises(ValueError):
        solve(MpcProblem(BodyState(0, 0), ((1.0, 0.0),) * 2), CFG)


@settings(max_examples=100, deadline=None)
@given(
    x0=st.floats(-2, 2),
    y0=st.floats(-2, 2),
    refs=st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=3, max_size=3),
    axis=st.sampled_from(list(Axis)),
    sign=st.sampled_from([1, -1]),
)
def test_solution_feasible_and_no_worse_than_corners(x0, y0, refs, axis, sign):
    p = MpcProblem(BodyState(x0, y0), refs, axis, TH, sign)
    sol = solve(p, CFG)
    assert all(0.0 <= u <= CFG.a_max for u in sol.u)
    assert sol.cost == pytest.approx(horizon_cost(p, sol.u, CFG))
    for corner in np.ndindex(2, 2, 2):
        u = tuple(c * CFG.a_max for c in corner)
        assert sol.cost <= horizon_cost(p, u, CFG) + 1e-12


@settings(max_examples=50, deadline=None)
@given(
    x0=st.floats(-1, 1),
    refs=st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    scale=st.floats(0.1, 10),
)
def test_argmin_invariant_to_weight_scaling(x0, refs, scale):
    p = MpcProblem(BodyState(x0, 0.0), [(r, 0.0) for r in refs], Axis.X, TH)
    u1 = solve(p, CFG).u
    u2 = solve(p, MpcConfig(Q=(3 * scale, 3 * scale), R=0.2 * scale)).u
    assert u1 == pytest.approx(u2, abs=1e-7)


@pytest.mark.parametrize(
    "state, target, expected",
    [
        ((0, 0), (1, 0.5), (Axis.X, 1)),
        ((0, 0), (0.1, -0.5), (Axis.Y, -1)),
        ((0, 0), (-1, 1), (Axis.X, -1)),  # tie goes to X
        ((0, 0), (0, 0), (Axis.X, 1)),
    ],
)
def test_select_axis(state, target, expected):
    assert select_axis(state, target) == expected
