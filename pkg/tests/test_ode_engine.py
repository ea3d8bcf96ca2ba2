import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifespan_lab.errors import PreconditionError
from lifespan_lab.ode_engine import (
    GlobalUpTo,
    OdeSystemSpec,
    comparison_check,
    integrate,
    ode_alpha,
    rate_probe,
)
from oracles import rk4_cyclic


def test_scalar_riccati_blows_up_at_one():
    traj, est = integrate(OdeSystemSpec((2,), (1,), 0, (1,)), 10)
    assert est.blew_up
    assert est.T_num == pytest.approx(1.0, rel=1e-8)
    assert est.extrapolation_exponent == pytest.approx(1.0, rel=1e-3)
    lo, hi = est.bracket
    assert lo <= est.T_num <= hi
    # relative error grows like 1/(T - t), so compare away from the singularity
    keep = traj.t < 0.99
    assert np.allclose(traj.y[keep, 0], 1 / (1 - traj.t[keep]), rtol=1e-8)


def test_symmetric_pair_matches_scalar():
    _, est = integrate(OdeSystemSpec((2, 2), (1, 1), 0, (1, 1)), 10)
    assert est.T_num == pytest.approx(1.0, rel=1e-8)


def test_against_fixed_step_oracle():
    spec = OdeSystemSpec((2, 2), (1, 1), 1.0, (0, 5))
    traj, est = integrate(spec, 10)
    T = est.T_num
    ts, ys = rk4_cyclic(spec.p, spec.coefficients, 1.0, spec.initial, 1e-6, 0.9 * T)
    ts, ys = np.array(ts), np.array(ys)
    sel = np.linspace(0, len(ts) - 1, 400).astype(int)
    got = traj.at(ts[sel])
    assert np.max(np.abs(got - ys[sel]) / np.maximum(1.0, np.abs(ys[sel]))) < 1e-4
    # blow-up time with the minorant comparison of the chain module
    assert 0.38 < T < 0.99412


def test_tolerance_halving_is_stable():
    spec = OdeSystemSpec((2, 3), (1, 0.5), 0.7, (0.5, 2))
    _, a = integrate(spec, 100, 1e-8)
    _, b = integrate(spec, 100, 5e-9)
    assert abs(a.T_num - b.T_num) < 1e-3 * a.T_num


def test_global_when_no_growth():
    traj, est = integrate(OdeSystemSpec((2, 2), (1, 1), 50.0, (0, 1e-3)), 5)
    assert isinstance(est.T_num, GlobalUpTo) and est.T_num.horizon == 5
    assert not est.blew_up
    assert traj.t[-1] == pytest.approx(5)


@pytest.mark.parametrize("rel_tol", [1e-13, 1e-2, 0.5])
def test_rel_tol_range(rel_tol):
    with pytest.raises(PreconditionError):
        integrate(OdeSystemSpec((2,), (1,), 0, (1,)), 1, rel_tol)


@pytest.mark.parametrize(
    "p,coeff,y0",
    [((2,), (1,), (1,)), ((2, 3), (1, 1), (1, 1)), ((2, 2), (1, 1), (1, 1)), ((2, 2, 2), (1, 1, 1), (1, 1, 1))],
)
def test_rate_probe_recovers_alpha(p, coeff, y0):
    slopes = rate_probe(OdeSystemSpec(p, coeff, 0, y0))
    assert np.allclose(slopes, -ode_alpha(p), atol=5e-3)


def test_ode_alpha_closed_form():
    assert np.allclose(ode_alpha((2, 3)), (0.6, 0.8))
    with pytest.raises(PreconditionError):
        ode_alpha((1, 1))


def test_comparison_holds_for_larger_data():
    f = OdeSystemSpec((2, 2), (1.2, 1), 0.5, (0.1, 1.0))
    g = OdeSystemSpec((2, 2), (1, 1), 0.5, (0.0, 1.0))
    w = comparison_check(f, g, 10)
    assert w.holds and w.first_violation is None
    assert np.all(w.gaps > 0)


def test_comparison_needs_strict_order():
    f = OdeSystemSpec((2, 2), (1, 1), 0.5, (0.1, 1.0))
    with pytest.raises(PreconditionError):
        comparison_check(f, f, 10)
    g = OdeSystemSpec((2, 2), (1, 1), 0.5, (0.2, 0.5))
    with pytest.raises(PreconditionError):
        comparison_check(f, g, 10)
    with pytest.raises(PreconditionError):
        comparison_check(f, OdeSystemSpec((2, 2), (2, 1), 0.5, (0, 0.5)), 10)


def test_spec_validation():
    with pytest.raises(PreconditionError):
        OdeSystemSpec((2, 2), (1,), 0, (1, 1))
    with pytest.raises(PreconditionError):
        OdeSystemSpec((2,), (1,), 0, (-1,))
    with pytest.raises(PreconditionError):
        OdeSystemSpec((2,), (0,), 0, (1,))
    with pytest.raises(PreconditionError):
        OdeSystemSpec((2,), (1,), -1, (1,))


def test_interpolation_range():
    traj, _ = integrate(OdeSystemSpec((2,), (1,), 0, (1,)), 10)
    with pytest.raises(ValueError):
        traj.at(-0.1)
    assert traj.at(0.5)[0, 0] == pytest.approx(2.0, rel=1e-7)


@settings(max_examples=25)
@given(st.floats(0.5, 3.0), st.floats(1.05, 3.0))
def test_more_data_blows_up_sooner(a, scale):
    base = integrate(OdeSystemSpec((2, 3), (1, 1), 0.3, (a, a)), 1e3)[1]
    more = integrate(OdeSystemSpec((2, 3), (1, 1), 0.3, (a * scale, a * scale)), 1e3)[1]
    assert base.blew_up and more.blew_up
    assert more.T_num < base.T_num


@settings(max_examples=25)
@given(st.floats(0.1, 2.0))
def test_trajectory_nondecreasing(a):
    traj, _ = integrate(OdeSystemSpec((2, 2), (1, 1), 1.0, (0, a)), 5)
    assert np.all(np.diff(traj.y, axis=0) >= -1e-12 * np.maximum(1, traj.y[1:]))
    assert math.isfinite(traj.y[-1].max())
