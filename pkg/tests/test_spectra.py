from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logdirichlet import closed_forms as cf
from logdirichlet import spectra
from logdirichlet.errors import DataError, ParameterDomainError, UndeterminedError
from logdirichlet.form_engine import SpectralModel

SHIFT_T0 = 2 * math.log(2)


@pytest.fixture(scope="module")
def shift_model():
    return cf.oracle_model("shift", 40, N=2)


@pytest.fixture(scope="module")
def interval_model():
    return cf.oracle_model("interval", 20000)


# ---------------------------------------------------------------------------
# heat traces


def test_shift_heat_trace_value(shift_model):
    rep = spectra.heat_trace(shift_model, [2.0], levels=[40])
    expected = 1 + math.exp(-2) / (1 - 2 / math.e)
    assert rep.traces[0] == pytest.approx(expected, abs=1e-4)


def test_shift_verdicts(shift_model):
    rep = spectra.heat_trace(shift_model, [1.3, 1.5])
    assert rep.verdicts == ("diverging", "converged")


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 4.0).filter(lambda t: abs(t - SHIFT_T0) >= 0.05))
def test_shift_verdicts_match_ratio_test(t):
    model = cf.oracle_model("shift", 40, N=2)
    rep = spectra.heat_trace(model, [t])
    assert rep.verdicts[0] == ("converged" if t > SHIFT_T0 else "diverging")


def test_interval_verdicts(interval_model):
    rep = spectra.heat_trace(interval_model, [0.4, 0.6])
    assert rep.verdicts == ("diverging", "converged")


def test_generic_verdicts_on_a_galerkin_like_model():
    n = np.arange(1, 3001)
    lam = np.concatenate([[0.0], 2 * np.log(n) + 1])
    model = SpectralModel(lam, np.ones(len(lam), dtype=int))
    rep = spectra.heat_trace(model, [0.3, 1.5])
    assert rep.verdicts[0] == "diverging"
    assert rep.verdicts[1] == "converged"


def test_verdicts_consistent_with_threshold(interval_model):
    rep = spectra.heat_trace(interval_model, [0.45, 0.55, 0.8])
    for t, v in zip(rep.t_grid, rep.verdicts):
        if v == "converged":
            assert t > 0.95 * rep.t0_estimate


def test_partial_sums_are_monotone(shift_model):
    rep = spectra.heat_trace(shift_model, [1.0, 3.0], levels=[0, 5, 10, 20])
    assert np.all(np.diff(rep.partial_sums, axis=1) > 0)
    assert rep.partial_sums[0, 0] == 1.0
    assert len(rep.rows()) == 8


def test_heat_trace_rejects_bad_input(shift_model):
    with pytest.raises(ParameterDomainError):
        spectra.heat_trace(shift_model, [0.0])
    with pytest.raises(ParameterDomainError):
        spectra.heat_trace(shift_model, [])


def test_classify_increments_rules():
    geom = 0.5 ** np.arange(40)
    assert spectra.classify_increments(geom, geom.sum())[0] == "converged"
    assert spectra.classify_increments(np.ones(40), 40.0)[0] == "diverging"
    # increments 1/n sit exactly on the Raabe boundary, so no verdict is claimed
    harmonic = 1.0 / np.arange(1, 41)
    assert spectra.classify_increments(harmonic, harmonic.sum())[0] == "undetermined"
    slow = 1.0 / np.sqrt(np.arange(1, 41))
    assert spectra.classify_increments(slow, slow.sum())[0] == "diverging"
    p2 = 1.0 / np.arange(1, 41) ** 2.5
    assert spectra.classify_increments(p2, p2.sum())[0] == "converged"
    assert spectra.classify_increments(np.ones(5), 5.0)[0] == "undetermined"


# ---------------------------------------------------------------------------
# thresholds and growth fits


@pytest.mark.parametrize(
    "family,trunc,params,target",
    [("shift", 14, {"N": 2}, SHIFT_T0), ("interval", 500, {}, 0.5), ("circle", 500, {}, 0.5)],
)
def test_trace_threshold(family, trunc, params, target):
    model = cf.oracle_model(family, trunc, **params)
    assert spectra.trace_threshold(model) == pytest.approx(target, rel=0.05)


def test_growth_fit_slopes():
    shift = spectra.log_growth_fit(cf.oracle_model("shift", 16, N=2))
    assert shift.c == pytest.approx(0.5 / math.log(2), rel=0.02)
    interval = spectra.log_growth_fit(cf.oracle_model("interval", 2000))
    assert interval.c == pytest.approx(2.0, rel=0.02)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 10))
def test_growth_fit_is_affine_invariant(c):
    model = cf.oracle_model("interval", 300)
    a = spectra.log_growth_fit(model)
    b = spectra.log_growth_fit(model.shifted(c))
    assert b.c == pytest.approx(a.c, rel=1e-9)
    assert b.b == pytest.approx(a.b + c, rel=1e-9, abs=1e-9)


def test_growth_fit_preconditions():
    with pytest.raises(DataError):
        spectra.log_growth_fit(cf.oracle_model("interval", 20))
    flat = SpectralModel(np.concatenate([[0.0], np.full(1, 1.0)]), np.array([1, 200]))
    with pytest.raises(UndeterminedError):
        spectra.log_growth_fit(flat)


# ---------------------------------------------------------------------------
# singular values


@pytest.mark.parametrize(
    "family,trunc,params",
    [("shift", 20, {"N": 2}), ("interval", 100000, {}), ("circle", 50000, {})],
)
def test_li_summability_profile(family, trunc, params):
    model = cf.oracle_model(family, trunc, **params)
    prof = spectra.singular_value_profile(model, max_index=100000)
    assert prof.s_n[0] == 1.0
    assert np.all(np.diff(prof.s_n) <= 0)
    assert prof.tail_ratio <= 4.0
    if family == "shift":
        assert prof.li_bound <= 3.2


def test_sqrt_resolvent_ratio_bounds():
    r = spectra.sqrt_resolvent_ratio(cf.oracle_model("interval", 5000))
    assert np.all(r >= 1 - 1e-12) and np.all(r <= 2 + 1e-12)
