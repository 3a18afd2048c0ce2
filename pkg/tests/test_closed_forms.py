from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logdirichlet import closed_forms as cf
from logdirichlet import form_engine as fe
from logdirichlet import spaces as sp
from logdirichlet.errors import ResolutionWarning


def _as_dict(model):
    return {round(float(l), 12): int(m) for l, m in zip(model.eigenvalues, model.multiplicities)}


# ---------------------------------------------------------------------------
# shift


def test_shift_spectrum_examples():
    assert _as_dict(cf.shift_spectrum(2, 2)) == {0.0: 1, 1.0: 1, 1.5: 2, 2.0: 4}
    assert _as_dict(cf.shift_spectrum(3, 1)) == {0.0: 1, 1.0: 2, round(5 / 3, 12): 6}
    assert _as_dict(cf.shift_spectrum(2, 0)) == {0.0: 1, 1.0: 1}


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 8))
def test_shift_level_formula(N, n):
    lam, mult = cf.OracleSpectrum("shift", {"N": N}, n + 1).level(n)
    assert lam == pytest.approx(1 + (1 - 1 / N) * n)
    assert mult == N**n * (N - 1)


def test_haar_wavelets_small_levels():
    w0 = cf.haar_wavelets(2, 0, 1)
    assert w0.size == 1
    assert np.allclose(np.abs(w0.values[:, 0]), 1.0)
    w1 = cf.haar_wavelets(2, 1, 3)
    assert w1.size == 2
    supp = [set(np.flatnonzero(w1.values[:, j])) for j in range(2)]
    assert not supp[0] & supp[1]


@pytest.mark.parametrize("N,level", [(2, 0), (2, 2), (3, 1), (4, 0)])
def test_wavelets_have_mean_zero(N, level):
    s = sp.make_shift_space(N, 2.0, level + 2)
    w = cf.haar_wavelets(N, level, level + 2)
    assert np.abs(s.weights @ w.values).max() <= 1e-14


def test_haar_basis_is_orthonormal():
    s = sp.make_shift_space(3, 2.0, 3)
    b = cf.haar_basis(s)
    assert b.size == 27
    assert b.check_orthonormal(s) <= 1e-12


def test_wavelets_are_exact_eigenvectors():
    """E v = lambda M v exactly for unnormalized wavelets on the cylinder form."""
    s = sp.make_shift_space(2, 2.0, 4)
    b = cf.haar_basis(s, normalized=False)
    fm = fe.assemble_form_matrix(s, b, exact=True)
    E, M = fm.E_exact, fm.M_exact
    lams = [Fraction(0)] + [cf.OracleSpectrum("shift", {"N": 2}, 4).exact_level(int(l) - 1) for l in b.labels[1:]]
    n = len(lams)
    for j in range(n):
        for i in range(n):
            assert Fraction(E[i][j]) == lams[j] * Fraction(M[i][j])


# ---------------------------------------------------------------------------
# interval


def test_interval_spectrum_examples():
    assert np.allclose(cf.interval_spectrum(3).eigenvalues, [0, 2, 3, 11 / 3])
    assert np.allclose(cf.interval_spectrum(1).eigenvalues, [0, 2])


def test_interval_gaps():
    lam = cf.interval_spectrum(40).eigenvalues
    n = np.arange(1, 40)
    assert np.allclose(np.diff(lam)[1:], 2 / (n + 1))


def test_harmonic_numbers():
    assert cf.harmonic(3) == Fraction(11, 6)
    assert cf.harmonic(0) == 0


def test_legendre_identity_pointwise():
    s = sp.make_interval_space(-1, 1, 2000)
    xs = np.linspace(-0.95, 0.95, 20)
    for n in (1, 4, 10):
        b = cf.legendre_basis(s, n)
        p = lambda t, n=n: b.evaluate(np.atleast_1d(t))[:, n]
        lam = 2 * float(cf.harmonic(n))
        for x in xs:
            got = fe.apply_logdirichlet(s, p, x)
            want = lam * float(p(x)[0])
            assert got == pytest.approx(want, rel=1e-6, abs=1e-9)


# ---------------------------------------------------------------------------
# circle


def test_circle_eigenvalue_examples():
    assert cf.circle_eigenvalue(1) == pytest.approx(4.0)
    assert cf.circle_eigenvalue(2) == pytest.approx(16 / 3)
    assert cf.circle_eigenvalue(3) == pytest.approx(92 / 15)


def test_circle_closed_form_matches_quadrature():
    k = np.arange(0, 65)
    q = cf.circle_eigenvalue_quadrature(k, nodes=1024)
    assert q[0] == 0.0
    assert np.allclose(q[1:], cf.circle_eigenvalues_closed(64), atol=1e-10)


def test_circle_spectrum_multiplicities():
    m = cf.circle_spectrum(5, 512)
    assert [int(x) for x in m.multiplicities] == [1, 2, 2, 2, 2, 2]


def test_circle_spectrum_warns_when_underresolved():
    with pytest.warns(ResolutionWarning):
        cf.circle_spectrum(12, 64)


@pytest.mark.parametrize("family", ["interval", "circle"])
def test_logarithmic_growth_slope_two(family):
    if family == "interval":
        lam = cf.interval_spectrum(200).eigenvalues
    else:
        lam = cf.circle_eigenvalues_closed(201)
    n = np.arange(20, 201)
    slope = np.polyfit(np.log(n), lam[20:201], 1)[0]
    assert slope == pytest.approx(2.0, abs=0.05)


def test_fourier_basis_orthonormal():
    s = sp.make_circle_space(64)
    b = cf.fourier_basis(s, 6)
    assert b.size == 13
    assert b.check_orthonormal(s) <= 1e-12


def test_oracle_model_groups_and_threshold():
    m = cf.oracle_model("shift", 5, N=3)
    assert m.oracle.t0_exact == pytest.approx(3 * math.log(3) / 2)
    assert cf.oracle_model("interval", 5).oracle.t0_exact == 0.5
    assert [int(x) for x in m.multiplicities] == [1, 2, 6, 18, 54, 162]
