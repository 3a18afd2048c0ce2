from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logdirichlet import closed_forms as cf
from logdirichlet import dini
from logdirichlet import form_engine as fe
from logdirichlet import spaces as sp
from logdirichlet.errors import DomainError, ParameterDomainError


@pytest.fixture(scope="module")
def unit():
    return sp.make_interval_space(0, 1, 400)


# ---------------------------------------------------------------------------
# modulus of continuity


def test_identity_modulus_is_t(unit):
    prof = dini.modulus_of_continuity(unit, unit.nodes, t_grid=[0.5, 0.1, 0.01])
    # omega is sampled on node pairs, so it can fall short of t by one node gap
    assert np.allclose(prof.omega, [0.5, 0.1, 0.01], atol=2e-2 * 0.5)
    assert np.all(prof.omega <= np.array([0.5, 0.1, 0.01]) + 1e-12)


def test_dini_constant_converges_under_refinement(unit):
    vals = [dini.modulus_of_continuity(unit, unit.nodes, m=m).dini_constant for m in (1, 2, 4, 8)]
    errs = [abs(v - 1) for v in vals]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 0.02


def test_constant_function_has_zero_modulus(unit):
    prof = dini.modulus_of_continuity(unit, np.full(unit.size, 2.0))
    assert np.all(prof.omega == 0) and prof.dini_constant == 0.0
    assert prof.dini_norm == 2.0


def test_shift_indicator_modulus():
    s = sp.make_shift_space(2, 2.0, 5)
    f = np.array([1.0 if s.node_point(i)[0] == 1 else 0.0 for i in range(s.size)])
    prof = dini.modulus_of_continuity(s, f, t_grid=[1.0, 0.99, 0.5, 0.1])
    assert list(prof.omega) == [1.0, 0.0, 0.0, 0.0]
    assert np.isfinite(prof.dini_constant)


def test_modulus_rejects_bad_grids(unit):
    with pytest.raises(ParameterDomainError):
        dini.modulus_of_continuity(unit, unit.nodes, t_grid=[1.5])
    with pytest.raises(ParameterDomainError):
        dini.modulus_of_continuity(unit, unit.nodes[:-1])


def test_geometric_sum_is_comparable(unit):
    for f in (unit.nodes, np.sqrt(unit.nodes), np.sin(5 * unit.nodes)):
        prof = dini.modulus_of_continuity(unit, f)
        assert prof.dini_constant > 0
        ratio = prof.geometric_sum / prof.dini_constant
        assert 0.2 <= ratio <= 5.0
        assert prof.geometric_sum <= 5.0 * prof.dini_norm


# ---------------------------------------------------------------------------
# algebra property


def test_algebra_defect_examples(unit):
    x = unit.nodes
    assert dini.dini_algebra_defect(unit, x, x) <= 0
    assert dini.dini_algebra_defect(unit, np.full(unit.size, 3.0), np.sin(4 * x)) <= 1e-12


def _piecewise_linear(space, knots):
    xs = np.linspace(0, 1, len(knots))
    return np.interp(space.nodes, xs, knots)


knot_lists = st.lists(st.floats(-3, 3), min_size=3, max_size=8)
SMALL = sp.make_interval_space(0, 1, 120)


@settings(max_examples=50, deadline=None)
@given(knot_lists, knot_lists)
def test_algebra_defect_on_random_pairs(a, b):
    f, g = _piecewise_linear(SMALL, a), _piecewise_linear(SMALL, b)
    assert dini.dini_algebra_defect(SMALL, f, g) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(knot_lists, knot_lists)
def test_dini_norm_is_submultiplicative(a, b):
    f, g = _piecewise_linear(SMALL, a), _piecewise_linear(SMALL, b)
    nf = dini.modulus_of_continuity(SMALL, f).dini_norm
    ng = dini.modulus_of_continuity(SMALL, g).dini_norm
    nfg = dini.modulus_of_continuity(SMALL, f * g).dini_norm
    assert nfg <= nf * ng * (1 + 1e-12) + 1e-12


# ---------------------------------------------------------------------------
# commutators


def test_constant_multiplier_has_zero_kernel():
    s = sp.make_interval_space(-1, 1, 200)
    K, norm = dini.commutator_kernel_matrix(s, lambda x: np.full_like(x, 2.0), cf.legendre_basis(s, 8))
    assert np.abs(K).max() <= 1e-12 and norm <= 1e-12
    assert dini.commutator_defect(s, lambda x: np.full_like(x, 2.0), cf.legendre_basis(s, 8)) <= 1e-12


def test_shift_kernel_matrix_matches_commutator():
    s = sp.make_shift_space(2, 2.0, 5)
    h = lambda w: 1.0 if w[0] == 1 else 0.0
    rep = dini.commutator_report(s, h, cf.haar_basis(s, 2))
    assert rep["defect"] <= 1e-10
    assert rep["commutator_norm"] == pytest.approx(rep["kernel_norm"], abs=1e-10)


def test_shift_commutator_is_exact():
    s = sp.make_shift_space(2, 2.0, 5)
    h = lambda w: 1.0 if tuple(w[:2]) in ((1, 2), (2, 1)) else 0.0
    for basis in (fe.cylinder_basis(s, 3), cf.haar_basis(s, 3, normalized=False)):
        rep = dini.commutator_report(s, h, basis, exact=True)
        assert rep["exact"] and rep["defect"] == 0


def test_interval_commutator_defects():
    s = sp.make_interval_space(-1, 1, 200)
    reps = [dini.commutator_report(s, lambda x: x, cf.legendre_basis(s, d)) for d in (8, 16, 24)]
    defects = [r["defect"] for r in reps]
    assert max(defects) <= 1e-3
    # non-increasing trend, up to a roundoff floor
    assert all(b <= max(a, 1e-10) for a, b in zip(defects, defects[1:]))
    norms = [r["commutator_norm"] for r in reps]
    assert max(norms) <= 2 * min(norms)
    h_din = dini.modulus_of_continuity(s, s.nodes).dini_norm
    assert reps[-1]["kernel_norm"] / h_din < 10


def test_circle_commutator():
    s = sp.make_circle_space(128)
    rep = dini.commutator_report(s, np.cos, cf.fourier_basis(s, 6))
    assert rep["defect"] <= 1e-6


def test_incompatible_basis_is_rejected():
    s = sp.make_interval_space(-1, 1, 50)
    with pytest.raises(DomainError):
        dini.commutator_report(s, lambda x: x, fe.nodal_basis(s))


def test_module_inequality_samples():
    s = sp.make_interval_space(-1, 1, 150)
    rng = np.random.default_rng(2)
    ratios = []
    for _ in range(5):
        f = np.interp(s.nodes, np.linspace(-1, 1, 6), rng.normal(size=6))
        ratios.append(dini.module_ratio(s, np.sin, f))
    assert all(np.isfinite(ratios)) and max(ratios) < 10


# ---------------------------------------------------------------------------
# Hölder inputs


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
def test_holder_exponent_is_preserved(alpha):
    s = sp.make_interval_space(-1, 1, 64)
    slope, incr = dini.holder_exponent_fit(s, dini.holder_profile(0.1, alpha), 0.1)
    assert np.all(incr > 0)
    assert slope >= alpha - 0.1
