from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logdirichlet import closed_forms as cf
from logdirichlet import quadrature as quad
from logdirichlet import spaces as sp
from logdirichlet.errors import ParameterDomainError


@pytest.fixture(scope="module")
def interval():
    return sp.make_interval_space(-1, 1, 200)


@pytest.fixture(scope="module")
def shift6():
    return sp.make_shift_space(2, 2.0, 6)


# ---------------------------------------------------------------------------
# annulus and tail integrals


def test_annulus_with_exponent_zero_is_the_measure(interval):
    assert quad.annulus_integral(interval, 0.0, 0.0, 1.0, 0.0) == pytest.approx(2.0)


def test_log_annulus_on_interval(interval):
    assert quad.annulus_integral(interval, 0.0, math.exp(-1), 1.0, 1.0) == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 3, 5])
def test_shift_cylinder_annulus(shift6, n):
    x = (1, 2, 1, 1, 2, 2)
    val = quad.annulus_integral(shift6, x, 2.0 ** -(n + 1), 2.0**-n + 1e-12, shift6.delta)
    assert val == pytest.approx(0.5, rel=1e-12)


def test_log_tail_closed_forms(interval, shift6):
    assert quad.log_tail_integral(interval, 0.0, 0.1) == pytest.approx(2 * math.log(10), rel=1e-12)
    for n in range(1, 6):
        assert quad.log_tail_integral(shift6, (2, 1, 1, 2, 1, 2), 2.0**-n) == pytest.approx(n / 2, rel=1e-12)


def test_node_method_approximates_exact_method():
    s = sp.make_interval_space(-1, 1, 800)
    exact = quad.annulus_integral(s, 0.0, 0.2, 0.9, 0.5)
    nodes = quad.annulus_integral(s, 0.0, 0.2, 0.9, 0.5, method="nodes")
    assert nodes == pytest.approx(exact, rel=2e-2)


def test_log_tail_requires_radius_inside_diameter(interval):
    with pytest.raises(ParameterDomainError):
        quad.log_tail_integral(interval, 0.0, 3.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1, 1), st.floats(0.01, 0.4), st.floats(0.5, 1.9))
def test_annulus_additivity(x, r1, r2):
    s = sp.make_interval_space(-1, 1, 8)
    mid = 0.5 * (r1 + r2)
    whole = quad.annulus_integral(s, x, r1, r2, 0.7)
    parts = quad.annulus_integral(s, x, r1, mid, 0.7) + quad.annulus_integral(s, x, mid, r2, 0.7)
    assert whole == pytest.approx(parts, rel=1e-9, abs=1e-12)


# ---------------------------------------------------------------------------
# annulus estimates


CATALOG = {
    "shift": sp.make_shift_space(2, 2.0, 8),
    "shift3": sp.make_shift_space(3, 2.0, 5),
    "interval": sp.make_interval_space(-1, 1, 32),
    "circle": sp.make_circle_space(32),
}


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_lemma_checks_hold_on_catalog(name):
    space = CATALOG[name]
    centers = sp.sample_centers(space, 25, seed=1)
    radii = space.diam * np.geomspace(1e-3, 0.9, 6)
    res = quad.lemma_checks(space, centers, radii)
    for check in res["small_ball"] + res["tail"] + [res["annulus"]]:
        assert check.holds, check.as_dict()
    assert res["log_tail"]["holds"], res["log_tail"]


def test_lemma_bound_formula():
    s = CATALOG["interval"]
    assert quad.lemma_bound(s, 0.5) == pytest.approx(2 * math.exp(1.5) / math.expm1(0.5))


def test_log_tail_window_is_ordered():
    for space in CATALOG.values():
        c1, c2 = quad.log_tail_window(space)
        assert 0 < c1 < c2


# ---------------------------------------------------------------------------
# truncated kernels


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_truncated_kernel_is_row_stochastic(name):
    space = CATALOG[name]
    k = quad.truncated_kernel(space, 0.3 * space.diam)
    assert np.allclose(k.row_sums(), 1.0, atol=1e-10)
    assert np.allclose(quad.truncated_kernel_apply(k, np.ones(space.size)), 1.0, atol=1e-10)


def test_truncated_kernel_averages(interval):
    k = quad.truncated_kernel(interval, 1.0)
    out = quad.truncated_kernel_apply(k, interval.nodes)
    assert np.all(out >= -1) and np.all(out <= 1)


def test_approximation_defect_constant_is_zero(interval):
    assert quad.approximation_defect(interval, 0.1, np.full(interval.size, 3.0)) == 0.0


def test_approximation_defect_bounded_on_interval(interval):
    vals = [quad.approximation_defect(interval, r, interval.nodes) for r in (1e-1, 1e-2, 1e-3)]
    # no growth trend as r shrinks
    assert all(np.isfinite(vals))
    assert max(vals[1:]) <= 2 * vals[0]


def test_approximation_defect_bounded_on_shift(shift6):
    wav = cf.haar_wavelets(2, 1, 6).values[:, 0]
    vals = [quad.approximation_defect(shift6, 2.0**-k, wav) for k in range(3, 6)]
    assert all(np.isfinite(vals))
    assert max(vals) <= 4 * min(vals)
    w2 = cf.haar_wavelets(2, 2, 6).values[:, 0]
    assert np.isfinite(quad.approximation_defect(shift6, 2.0**-4, w2))


def test_pair_energy_kills_constants(interval):
    assert abs(quad.pair_energy(interval, np.ones(interval.size))) < 1e-10


# ---------------------------------------------------------------------------
# graded rule


def test_graded_rule_integrates_algebraic_singularity():
    x, w = quad.graded_rule(0.0, 1.0, [0.3])
    val = np.sum(w * np.abs(x - 0.3) ** -0.5)
    # the dropped innermost slivers carry about 4 sqrt(1e-15) of the integral
    assert val == pytest.approx(2 * (math.sqrt(0.3) + math.sqrt(0.7)), abs=2e-7)
    smooth = np.sum(w * np.abs(x - 0.3) ** 0.5)
    assert smooth == pytest.approx((2 / 3) * (0.3**1.5 + 0.7**1.5), rel=1e-12)


def test_graded_rule_weights_sum_to_length():
    x, w = quad.graded_rule(-2.0, 5.0, [0.0, 1.0])
    assert w.sum() == pytest.approx(7.0, rel=1e-12)
    assert np.all((x > -2) & (x < 5))
