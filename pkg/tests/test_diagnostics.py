import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normprr import benchmarks as B
from normprr import prox as P
from normprr.diagnostics import (
    check_complexity_bound,
    check_error_bound,
    check_merit_descent,
    check_stat_trace,
    check_variance_trace,
    fit_geometric,
    fit_loglog,
    fit_rate,
)
from normprr.problem import CompositeObjective, ProblemInstance
from normprr.solvers import RunConfig, Schedule, run
from normprr.stationarity import default_lambda, theory_constants


def ks(m=100):
    return np.arange(1, m + 1, dtype=float)


def test_fit_rate_examples():
    k = ks()
    assert fit_rate(zip(k, k**-2.0)) == pytest.approx(-2.0, abs=1e-10)
    assert fit_rate(zip(k, 5 / k)) == pytest.approx(-1.0, abs=1e-10)
    noise = np.random.default_rng(0).uniform(-0.05, 0.05, k.size)
    assert abs(fit_rate(zip(k, k ** (-2 / 3) * (1 + noise))) + 2 / 3) <= 0.1


@settings(max_examples=25, deadline=None)
@given(c=st.floats(1e-3, 1e3), p=st.floats(-3, 0.5))
def test_fit_rate_scale_invariant(c, p):
    k = ks(60)
    assert fit_rate(zip(k, c * k**p)) == pytest.approx(p, abs=1e-8)


def test_fit_needs_ten_points():
    k = ks(18)
    with pytest.raises(ValueError):
        fit_rate(zip(k, 1 / k))  # the last half has 9 points
    assert fit_loglog(zip(k, 1 / k), window=1.0).points == 18


def test_fit_drops_nonpositive_values():
    k = ks(40)
    y = 1 / k**2
    y[-3] = 0.0
    assert fit_rate(zip(k, y)) == pytest.approx(-2.0, abs=1e-10)


def test_fit_geometric():
    k = ks(50)
    fit = fit_geometric(zip(k, 3 * 0.9**k))
    assert np.exp(fit.slope) == pytest.approx(0.9, rel=1e-10)
    assert fit.r == pytest.approx(-1.0)


def _norm_prr(b, sched, epochs, seed=0, lam=None, record=True):
    lam = b.lam if lam is None else lam
    return run(RunConfig("norm-prr", b.objective, lam, sched, epochs, seed=seed, record_iterates=record))


def test_not_applicable_gates():
    b = B.make_quadratic_l1(rng=0)
    c = theory_constants(b.objective.problem.lipschitz, 0.0, b.lam)
    big = _norm_prr(b, Schedule("constant", alpha=0.5, n=32), 5)
    assert not check_error_bound(big, c).applicable
    assert not check_merit_descent(big, c).applicable
    assert not check_complexity_bound(big, c, 0.0).applicable
    rr = run(RunConfig("rr", b.objective, b.lam, Schedule("constant", alpha=1e-4, n=32), 5))
    rep = check_error_bound(rr, c)
    assert not rep.applicable and "not-applicable" in rep.summary()
    other = theory_constants(b.objective.problem.lipschitz, 0.0, b.lam / 2)
    small = _norm_prr(b, Schedule.safe_polynomial(c, 32, 0.6), 5)
    assert not check_merit_descent(small, other).applicable


def test_large_lambda_rho_gate():
    b = B.make_quadratic_l1(rng=0)
    obj = CompositeObjective(b.objective.problem, P.mcp(0.05, 4.0))  # rho = 0.25
    lam = 1.2
    c = theory_constants(b.objective.problem.lipschitz, 0.0, 0.5)
    c = dataclasses.replace(c, rho=0.25, lam=lam)
    tr = run(RunConfig("norm-prr", obj, lam, Schedule("constant", alpha=1e-5, n=32), 3))
    assert not check_merit_descent(tr, c).applicable


def test_error_bound_single_component():
    prob = ProblemInstance(1, 2, lambda w, i: np.array(w, dtype=float), lambda w, i: 0.5 * float(w @ w), 1.0, 0.0)
    obj = CompositeObjective(prob, P.l1(0.1))
    c = theory_constants(1.0, 0.0, 0.5)
    tr = run(RunConfig("norm-prr", obj, 0.5, Schedule.safe_polynomial(c, 1, 0.6), 50, start=np.ones(2)))
    rep = check_error_bound(tr, c)
    assert rep.holds and rep.epochs_checked == 50


def test_merit_descent_quadratic_l1():
    b = B.make_quadratic_l1(rng=3)
    L = b.objective.problem.lipschitz
    lam = default_lambda(L, 0.0)
    c = theory_constants(L, 0.0, lam)
    tr = _norm_prr(b, Schedule.safe_polynomial(c, 32, 0.6), 500, lam=lam, record=False)
    rep = check_merit_descent(tr, c)
    assert rep.holds and rep.epochs_checked == 500


def test_complexity_and_error_bound_tanh():
    b = B.make_tanh_classification(B.synthetic_classification(40, 6, rng=0), nu=0.01)
    obj = b.objective
    L = obj.problem.lipschitz
    lam = default_lambda(L, 0.0)
    c = theory_constants(L, 0.0, lam)
    tr = run(RunConfig("norm-prr", obj, lam, Schedule.theory(c, 40, 200, regime="worst-case"), 200,
                       seed=2, record_iterates=True))
    for rep in (check_complexity_bound(tr, c, 0.0), check_error_bound(tr, c),
                check_variance_trace(tr, obj), check_stat_trace(tr, obj)):
        assert rep.holds, rep.summary()
    assert check_complexity_bound(tr, c, 0.0).epochs_checked == 200


def test_variance_trace_gates():
    toy = B.make_toy_1d()
    tr = run(RunConfig("norm-prr", toy.objective, 1.0, Schedule("constant", alpha=0.1, n=100), 2,
                       start=toy.start, record_iterates=True))
    assert not check_variance_trace(tr, toy.objective).applicable
    simplex = B.make_simplex_interpolation(n=30, d=5, support_size=2, rng=0)
    tr = run(RunConfig("norm-prr", simplex.objective, simplex.lam, Schedule("constant", alpha=0.1, n=30), 2,
                       record_iterates=True))
    assert "lower bound" in check_variance_trace(tr, simplex.objective).reason
    assert not check_stat_trace(run(RunConfig("psgd", simplex.objective, 1.0, Schedule("constant", alpha=0.1, n=30),
                                              2, record_iterates=True)), simplex.objective).applicable
