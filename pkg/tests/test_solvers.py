import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normprr import benchmarks as B
from normprr import prox as P
from normprr.problem import CompositeObjective, ProblemInstance
from normprr.solvers import (
    RunConfig,
    Schedule,
    pgd_solve,
    run,
    run_eprr,
    run_norm_prr,
    run_pgd,
    run_psgd,
    step_size,
)
from normprr.stationarity import natural_residual, theory_constants


def half_square():
    return ProblemInstance(1, 1, lambda w, i: np.array(w, dtype=float), lambda w, i: 0.5 * float(w @ w), 1.0, 0.0)


def two_quadratics():
    """f_1 = w^2/2, f_2 = (w - 2)^2/2."""
    c = [0.0, 2.0]
    return ProblemInstance(
        2, 1, lambda w, i: w - c[i], lambda w, i: 0.5 * float((w[0] - c[i]) ** 2), 1.0, 0.0
    )


def forced(order):
    return lambda k: np.array(order)


# ---------------------------------------------------------------------------
# schedules


def test_step_size_examples():
    assert step_size(Schedule("polynomial", alpha=1.0, gamma=1.0), 4) == 0.25
    s = Schedule("constant", alpha=0.5, n=5)
    assert all(step_size(s, k) == pytest.approx(0.1) for k in (1, 7, 100))


def test_theory_schedule_example():
    c = theory_constants(1.0, 0.0, 1.0)
    eta = (2 * 1 * 100) ** (-1 / 3)
    s = Schedule.theory(c, 8, 1000, eta=eta)
    assert step_size(s, 1) == pytest.approx(eta * 2 / 10 / 8, rel=1e-12)
    assert step_size(s, 1000) == step_size(s, 1)


def test_theory_schedule_default_eta_respects_cap():
    c = theory_constants(3.0, 0.0, 1 / 3)
    s = Schedule.theory(c, 16, 200, regime="worst-case")
    assert 16 * step_size(s, 1) * 200 ** (1 / 3) <= c.alpha_bar * 200 ** (1 / 3) * (1 + 1e-12)
    assert s.eta <= (2 * c.L * c.C) ** (-1 / 3)


def test_safe_polynomial_sum_bound():
    c = theory_constants(2.0, 0.0, 0.5)
    s = Schedule.safe_polynomial(c, 10, 0.6)
    etas = np.array([10 * step_size(s, k) for k in range(1, 200_000)])
    assert np.max(etas) <= c.alpha_bar
    assert np.sum(etas**3) <= 1 / (2 * c.L * c.C)


@pytest.mark.parametrize("gamma", [0.2, 1 / 3, 1.5])
def test_polynomial_gamma_validation(gamma):
    with pytest.raises(ValueError):
        Schedule("polynomial", alpha=1.0, gamma=gamma)


# ---------------------------------------------------------------------------
# hand-stepped examples


def test_norm_prr_one_component_equals_pgd_step():
    obj = CompositeObjective(half_square(), P.zero())
    tr = run_norm_prr(RunConfig("norm-prr", obj, 0.5, Schedule("constant", alpha=0.5, n=1), 1,
                                start=np.array([1.0]), record_iterates=True))
    assert tr.iterates[1][0] == 0.5


def test_norm_prr_two_quadratics_by_hand():
    obj = CompositeObjective(two_quadratics(), P.nonneg())
    sched = Schedule("polynomial", alpha=0.1, gamma=1.0, beta=0.0, n=2)
    # alpha_1 = 0.1 / 1 = 0.1
    tr = run_norm_prr(RunConfig("norm-prr", obj, 1.0, sched, 1, start=np.zeros(1),
                                index_source=forced([0, 1]), record_iterates=True))
    assert tr.z_iterates[1][0] == pytest.approx(0.2)
    assert tr.iterates[1][0] == pytest.approx(0.2)


def test_eprr_two_quadratics_by_hand():
    obj = CompositeObjective(two_quadratics(), P.nonneg())
    sched = Schedule("constant", alpha=0.2, n=2)
    tr = run_eprr(RunConfig("e-prr", obj, 1.0, sched, 1, start=np.zeros(1),
                            index_source=forced([0, 1]), record_iterates=True))
    assert tr.iterates[1][0] == pytest.approx(0.2)


def test_psgd_examples():
    obj = CompositeObjective(half_square(), P.zero())
    tr = run_psgd(RunConfig("psgd", obj, 1.0, Schedule("constant", alpha=0.5, n=1), 1,
                            start=np.array([1.0]), record_iterates=True))
    assert tr.iterates[1][0] == 0.5
    obj = CompositeObjective(two_quadratics(), P.nonneg())
    # draw f_1 then f_2: 0 -> 0 -> 0.2; draw f_2 then f_1: 0 -> 0.2 -> 0.18
    for order, expected in (([0, 1], 0.2), ([1, 0], 0.18)):
        tr = run_psgd(RunConfig("psgd", obj, 1.0, Schedule("constant", alpha=0.2, n=2), 1,
                                start=np.zeros(1), index_source=forced(order), record_iterates=True))
        assert tr.iterates[1][0] == pytest.approx(expected)


def test_pgd_fixed_point():
    obj = CompositeObjective(half_square(), P.zero())
    tr = run_pgd(RunConfig("pgd", obj, 0.5, Schedule("constant", alpha=1.0), 5, start=np.zeros(1),
                           record_iterates=True))
    assert all(w[0] == 0.0 for w in tr.iterates)


def test_pgd_solve_reaches_tolerance():
    b = B.make_quadratic_l1(rng=9)
    w, res, its = pgd_solve(b.objective, b.lam, tol=1e-10, max_iter=10_000)
    assert res <= 1e-10 and its < 10_000
    assert np.linalg.norm(natural_residual(b.objective, w, b.lam)) <= 1e-9


# ---------------------------------------------------------------------------
# run behaviour


def test_determinism():
    b = B.make_quadratic_l1(rng=1)
    sched = Schedule("polynomial", alpha=0.05, beta=2.0, gamma=0.8, n=32)
    cfg = RunConfig("norm-prr", b.objective, b.lam, sched, 30, seed=11, record_iterates=True)
    a, c = run(cfg), run(cfg)
    assert all(np.array_equal(x, y) for x, y in zip(a.iterates, c.iterates))
    assert a.series("psi").tobytes() == c.series("psi").tobytes()


def test_toy_eprr_fails_and_norm_prr_stays_feasible():
    b = B.make_toy_1d()
    sched = Schedule("polynomial", alpha=1.0, gamma=1.0, n=100)
    e = run(RunConfig("e-prr", b.objective, b.lam, sched, 20, seed=0, start=b.start, domain_guard=b.domain_guard))
    assert e.status == "failed-infeasible" and e.failure_epoch == 1
    assert not e.records[-1].feasible
    for alg in ("norm-prr", "psgd"):
        tr = run(RunConfig(alg, b.objective, b.lam, sched, 20, seed=0, start=b.start,
                           domain_guard=b.domain_guard, record_iterates=True))
        assert tr.status == "completed"
        assert all(w[0] >= 0 for w in tr.iterates)


def test_divergence_detected():
    obj = CompositeObjective(half_square(), P.zero())
    tr = run(RunConfig("rr", obj, 1.0, Schedule("constant", alpha=5.0, n=1), 200, start=np.ones(1)))
    assert tr.status == "diverged"
    assert tr.failure_epoch is not None and tr.failure_epoch < 200


def test_error_norm_zero_for_single_component():
    obj = CompositeObjective(half_square(), P.l1(0.1))
    tr = run(RunConfig("norm-prr", obj, 0.5, Schedule("constant", alpha=0.3, n=1), 10, start=np.ones(1)))
    assert all(r.err_norm <= 1e-15 for r in tr.records)


def test_records_after_each_epoch():
    b = B.make_quadratic_l1(rng=1)
    tr = run(RunConfig("norm-prr", b.objective, b.lam, Schedule("constant", alpha=0.1, n=32), 3))
    assert [r.k for r in tr.records] == [1, 2, 3]
    assert tr.initial.k == 0 and tr.initial.step is None
    assert all(r.merit is not None and r.sigma2 is not None for r in tr.records)


def test_bad_run_configs():
    obj = CompositeObjective(half_square(), P.zero())
    s = Schedule("constant", alpha=1.0)
    with pytest.raises(ValueError):
        RunConfig("sgd", obj, 1.0, s, 5)
    with pytest.raises(ValueError):
        RunConfig("rr", obj, 1.0, s, 0)
    with pytest.raises(ValueError):
        run(RunConfig("rr", obj, 1.0, s, 1, start=np.zeros(3)))
    mcp = CompositeObjective(half_square(), P.mcp(0.5, 2.0))
    with pytest.raises(P.ProxParameterError):
        run(RunConfig("norm-prr", mcp, 3.0, s, 1))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 12))
def test_zero_regularizer_matches_rr(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, 3))
    prob = B._least_squares_problem(A, rng.standard_normal(n))
    obj = CompositeObjective(prob, P.zero())
    s = Schedule("constant", alpha=0.3 / prob.lipschitz, n=n)
    w0 = rng.standard_normal(3)
    a = run(RunConfig("norm-prr", obj, 1.0, s, 10, seed=seed, start=w0, record_iterates=True))
    c = run(RunConfig("rr", obj, 1.0, s, 10, seed=seed, start=w0, record_iterates=True))
    assert max(np.max(np.abs(x - y)) for x, y in zip(a.iterates, c.iterates)) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_indicator_iterates_stay_feasible(seed):
    b = B.make_simplex_interpolation(n=40, d=6, support_size=2, rng=seed % 50)
    s = Schedule("constant", alpha=1.0 / b.L, n=40)
    for alg in ("norm-prr", "psgd"):
        tr = run(RunConfig(alg, b.objective, b.lam, s, 5, seed=seed, start=b.start, record_iterates=True))
        assert all(b.objective.regularizer.in_domain(w, tol=1e-12) for w in tr.iterates)
        assert math.isfinite(tr.records[-1].psi)
