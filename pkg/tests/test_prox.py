import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from normprr import prox as P

finite = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)
vectors = arrays(float, st.integers(1, 8), elements=finite)
steps = st.floats(min_value=1e-3, max_value=5.0)

CONVEX = [P.zero(), P.l1(0.3), P.box(-1.0, 2.0), P.nonneg(), P.simplex(), P.elastic_net(0.2, 0.5)]


def test_l1_soft_threshold_example():
    assert P.l1(0.01).prox(np.array([0.5]), 1.0)[0] == pytest.approx(0.49)


def test_soft_threshold_tie_goes_to_zero():
    assert P.soft_threshold(np.array([0.5, -0.5]), 0.5).tolist() == [0.0, 0.0]


def test_nonneg_projection():
    assert P.nonneg().prox(np.array([-3.0, 2.0]), 0.7).tolist() == [0.0, 2.0]


@pytest.mark.parametrize("z,expected", [([2.0, 0.0], [1.0, 0.0]), ([0.6, 0.6], [0.5, 0.5])])
def test_simplex_examples(z, expected):
    np.testing.assert_allclose(P.simplex().prox(np.array(z), 1.0), expected, atol=1e-15)


def test_mcp_matches_grid():
    reg = P.mcp(1.0, 2.0)
    assert reg.rho == 0.5
    z = np.array([0.3])
    exact = reg.prox(z, 1.0)
    grid = np.linspace(-1, 1, 2_000_001)
    a = np.abs(grid)
    pen = np.where(a <= 2.0, a - a * a / 4.0, 1.0)
    vals = (grid - 0.3) ** 2 / 2 + pen
    assert abs(exact[0] - grid[np.argmin(vals)]) <= 1e-6


def test_mcp_large_input_is_identity():
    reg = P.mcp(0.5, 3.0)
    assert reg.prox(np.array([10.0]), 1.0)[0] == 10.0


def test_prox_errors():
    with pytest.raises(P.ProxParameterError):
        P.mcp(1.0, 2.0).prox(np.array([0.1]), 2.0)
    with pytest.raises(P.ProxParameterError):
        P.l1(1.0).prox(np.array([0.1]), 0.0)
    with pytest.raises(ValueError):
        P.l1(1.0).prox(np.array([np.nan]), 1.0)


def test_values_and_domains():
    assert P.nonneg().value(np.array([-1.0])) == math.inf
    assert P.nonneg().value(np.array([1.0])) == 0.0
    assert P.simplex().in_domain(np.array([0.5, 0.5]))
    assert not P.simplex().in_domain(np.array([0.5, 0.6]))
    assert P.box(0, 1).value(np.array([2.0])) == math.inf
    assert P.l1(2.0).value(np.array([1.0, -2.0])) == 6.0
    assert P.elastic_net(1.0, 1.0).value(np.array([2.0])) == 6.0


def test_make_regularizer():
    assert P.make_regularizer("l1", nu=0.1).kind == "l1"
    assert P.make_regularizer("mcp", nu=0.1, concavity=2.0).rho == 0.5
    with pytest.raises(ValueError):
        P.make_regularizer("bogus")


@pytest.mark.parametrize(
    "reg,z,expected",
    [(P.zero(), 0.7, 0.7), (P.l1(0.01), -0.005, 0.0), (P.nonneg(), -1.0, 0.0)],
)
def test_brute_force_examples(reg, z, expected):
    got = P.brute_force_prox(reg, np.array([z]), 1.0, radius=2.0)
    assert abs(got[0] - expected) <= 2 * (4.0 / 2000)


def test_brute_force_rejects_dimension_and_coarse_grid():
    with pytest.raises(P.UnsupportedDimensionError):
        P.brute_force_prox(P.zero(), np.zeros(3), 1.0, 1.0)
    with pytest.raises(ValueError):
        P.brute_force_prox(P.zero(), np.zeros(1), 1.0, 1.0, grid_points=100)


@pytest.mark.parametrize("reg", [P.l1(0.5), P.simplex(), P.zero(), P.mcp(0.5, 3.0)])
def test_cocoercivity(reg):
    rep = P.check_cocoercivity(reg, 1.0, 200, rng=0)
    assert rep.holds


@settings(max_examples=200, deadline=None)
@given(v=vectors)
def test_simplex_projection_feasible(v):
    x = P.project_simplex(v)
    assert np.all(x >= 0)
    assert abs(x.sum() - 1.0) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(w=vectors, data=st.data(), step=steps)
def test_convex_prox_firmly_nonexpansive(w, data, step):
    y = data.draw(arrays(float, w.shape, elements=finite))
    for reg in CONVEX:
        dp = reg.prox(w, step) - reg.prox(y, step)
        assert dp @ dp <= dp @ (w - y) + 1e-9 * (1 + np.abs(w - y).sum()) ** 2


@settings(max_examples=200, deadline=None)
@given(w=vectors, data=st.data(), step=st.floats(min_value=0.01, max_value=2.9))
def test_weakly_convex_prox_lipschitz(w, data, step):
    y = data.draw(arrays(float, w.shape, elements=finite))
    reg = P.mcp(0.7, 3.0)
    dp = reg.prox(w, step) - reg.prox(y, step)
    assert np.linalg.norm(dp) <= np.linalg.norm(w - y) / (1 - step * reg.rho) + 1e-9


@settings(max_examples=100, deadline=None)
@given(z=vectors, step=steps)
def test_prox_outputs_in_domain(z, step):
    for reg in (P.nonneg(), P.box(-1.0, 1.0), P.simplex()):
        assert reg.in_domain(reg.prox(z, step), tol=1e-12)
