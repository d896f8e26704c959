import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from normprr import benchmarks as B
from normprr import prox as P
from normprr.problem import CompositeObjective, ProblemInstance, eval_full_grad
from normprr.prox import ProxParameterError
from normprr.stationarity import (
    check_stat_inequality,
    default_lambda,
    merit,
    natural_residual,
    normal_map,
    subdifferential_distance,
    theory_constants,
)


def shifted(center=3.0):
    """f(w) = (w - center)^2 / 2 in one dimension."""
    return ProblemInstance(1, 1, lambda w, i: w - center, lambda w, i: 0.5 * float((w[0] - center) ** 2), 1.0, 0.0)


def half_square(d=1):
    return ProblemInstance(1, d, lambda w, i: np.array(w, dtype=float), lambda w, i: 0.5 * float(w @ w), 1.0, 0.0)


def test_natural_residual_examples():
    obj = CompositeObjective(shifted(), P.l1(1.0))
    assert natural_residual(obj, np.array([2.0]), 1.0)[0] == pytest.approx(0.0)
    smooth = CompositeObjective(half_square(), P.zero())
    assert natural_residual(smooth, np.array([2.0]), 1.0)[0] == pytest.approx(2.0)


def test_normal_map_examples():
    obj = CompositeObjective(shifted(), P.l1(1.0))
    nm = normal_map(obj, np.array([3.0]), 1.0)
    assert nm.w[0] == 2.0 and nm.value[0] == 0.0
    nm = normal_map(obj, np.array([0.0]), 1.0)
    assert nm.w[0] == 0.0 and nm.value[0] == -3.0
    smooth = CompositeObjective(half_square(2), P.zero())
    np.testing.assert_array_equal(normal_map(smooth, np.ones(2), 1.0).value, [1.0, 1.0])


def test_merit_example():
    obj = CompositeObjective(half_square(), P.zero())
    assert merit(obj, np.array([1.0]), 1.0, 0.25) == pytest.approx(0.625)


def test_merit_independent_of_tau_at_stationary_point():
    obj = CompositeObjective(shifted(), P.l1(1.0))
    z = np.array([3.0])
    assert merit(obj, z, 1.0, 0.1) == merit(obj, z, 1.0, 0.4)


@pytest.mark.parametrize(
    "L,rho,lam,C,tau,abar",
    [
        (1.0, 0.0, 1.0, 100.0, 0.25, 1 / 1600),
        (2.0, 0.0, 0.5, 400.0, 0.25, 1 / 3200),
        (1.0, 0.5, 0.4, 351.5625, 0.2 / 1.52, None),
    ],
)
def test_theory_constants_examples(L, rho, lam, C, tau, abar):
    c = theory_constants(L, rho, lam)
    assert c.C == pytest.approx(C, rel=1e-12)
    assert c.tau == pytest.approx(tau, rel=1e-12)
    if abar is not None:
        assert c.alpha_bar == pytest.approx(abar, rel=1e-12)


def test_theory_constants_rejects_large_lambda():
    with pytest.raises(ProxParameterError):
        theory_constants(1.0, 0.5, 0.5)


def test_theory_constants_monotone_in_L():
    Ls = np.linspace(0.5, 20, 40)
    cs = [theory_constants(L, 0.1, 0.2) for L in Ls]
    assert all(a.C < b.C for a, b in zip(cs, cs[1:]))
    assert all(a.alpha_bar > b.alpha_bar for a, b in zip(cs, cs[1:]))


def test_default_lambda():
    assert default_lambda(4.0, 0.0) == 0.25
    assert default_lambda(1.0, 0.5) == 0.25


def test_stat_inequality_examples():
    obj = CompositeObjective(shifted(), P.l1(1.0))
    rep = check_stat_inequality(obj, np.array([3.0]), 1.0)
    assert rep.lhs == pytest.approx(0.0) and rep.rhs == 0.0 and rep.holds
    smooth = CompositeObjective(half_square(2), P.zero())
    rep = check_stat_inequality(smooth, np.array([1.0, -2.0]), 0.5)
    assert rep.lhs == pytest.approx(rep.rhs)


def test_stat_inequality_random_sweep():
    b = B.make_quadratic_l1(rng=7)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        assert check_stat_inequality(b.objective, 3 * rng.standard_normal(8), b.lam).holds


@settings(max_examples=60, deadline=None)
@given(z=arrays(float, 8, elements=st.floats(-4, 4)))
def test_normal_map_is_l1_subgradient(z):
    b = B.make_quadratic_l1(rng=2)
    obj, lam = b.objective, b.lam
    nu = obj.regularizer.params["nu"]
    nm = normal_map(obj, z, lam)
    s = nm.value - eval_full_grad(obj.problem, nm.w)
    assert np.all(np.abs(s) <= nu + 1e-9)
    nz = nm.w != 0
    np.testing.assert_allclose(s[nz], nu * np.sign(nm.w[nz]), atol=1e-9)
    d = subdifferential_distance(obj, nm.w)
    assert d <= np.linalg.norm(nm.value) + 1e-9


@settings(max_examples=60, deadline=None)
@given(z=arrays(float, 3, elements=st.floats(-4, 4)))
def test_normal_map_nonneg_subgradient(z):
    p = B.make_quadratic_l1(n=12, d=3, rng=4).objective.problem
    obj = CompositeObjective(p, P.nonneg())
    nm = normal_map(obj, z, 0.3)
    s = nm.value - eval_full_grad(p, nm.w)
    # normal cone of R_+: zero where w > 0, nonpositive where w = 0
    assert np.all(np.abs(s[nm.w > 0]) <= 1e-9)
    assert np.all(s[nm.w == 0] <= 1e-9)
    assert subdifferential_distance(obj, nm.w) <= np.linalg.norm(nm.value) + 1e-9


def test_zero_normal_map_iff_zero_residual():
    b = B.make_quadratic_l1(rng=3)
    obj, lam = b.objective, b.lam
    w_star = b.known_solution.w
    z_star = w_star - lam * eval_full_grad(obj.problem, w_star)
    assert np.linalg.norm(normal_map(obj, z_star, lam).value) <= 1e-9
    assert np.linalg.norm(natural_residual(obj, w_star, lam)) <= 1e-9


def test_subdifferential_distance_unavailable_for_mcp():
    obj = CompositeObjective(half_square(), P.mcp(0.5, 3.0))
    assert subdifferential_distance(obj, np.array([0.2])) is None
