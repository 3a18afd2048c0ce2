"""Exact spectral models: Haar wavelets on shifts, Legendre polynomials, Fourier modes.

These are the oracles the Galerkin solver is compared against.

* Shift: the wavelets of level ``n`` (mean zero, supported in one length-``n``
  cylinder, constant on its children) span an eigenspace with eigenvalue
  ``1 + (1 - 1/N) n`` of dimension ``N**n (N - 1)``.
* Interval ``[-1, 1]``: the Legendre polynomial ``p_n`` has eigenvalue ``2 h_n``
  with ``h_n`` the n-th harmonic number.
* Circle: ``cos(k t)`` and ``sin(k t)`` share the eigenvalue
  ``lambda_k = integral_0^{2 pi} (1 - cos k u) / (2 sin(u/2)) du``, which reduces to
  ``4 sum_{j<=k} 1/(2j - 1)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import roots_legendre

from . import spaces as sp
from .errors import ParameterDomainError, ResolutionWarning
from .form_engine import BasisSet, SpectralModel

__all__ = [
    "OracleSpectrum",
    "shift_spectrum",
    "shift_eigenvalue",
    "haar_wavelets",
    "haar_basis",
    "interval_spectrum",
    "harmonic",
    "legendre_basis",
    "circle_spectrum",
    "circle_eigenvalue",
    "circle_eigenvalues_closed",
    "circle_eigenvalue_quadrature",
    "fourier_basis",
    "oracle_model",
]


@dataclass(frozen=True)
class OracleSpectrum:
    """Closed-form eigenvalue family.

    ``level(i)`` returns the ``i``-th nonzero eigenvalue group (0-based) as
    ``(eigenvalue, multiplicity)``, so any truncation can be generated on demand.
    """

    family: str
    params: dict
    truncation: int

    def level(self, i: int) -> tuple[float, int]:
        if self.family == "shift":
            N = self.params["N"]
            return shift_eigenvalue(N, i), N**i * (N - 1)
        if self.family == "interval":
            return 2.0 * _harmonic_float(i + 1), 1
        if self.family == "circle":
            return circle_eigenvalue(i + 1), 2
        raise ParameterDomainError(f"unknown oracle family {self.family!r}")

    def exact_level(self, i: int) -> Fraction:
        if self.family == "shift":
            N = self.params["N"]
            return 1 + Fraction(N - 1, N) * i
        if self.family == "interval":
            return 2 * harmonic(i + 1)
        if self.family == "circle":
            return 4 * sum(Fraction(1, 2 * j - 1) for j in range(1, i + 2))
        raise ParameterDomainError(f"unknown oracle family {self.family!r}")

    def groups(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        """First ``count`` nonzero groups as arrays (eigenvalues, multiplicities as float)."""
        i = np.arange(count, dtype=float)
        if self.family == "shift":
            N = self.params["N"]
            lam = 1.0 + (1.0 - 1.0 / N) * i
            with np.errstate(over="ignore"):
                mult = (N - 1) * np.power(float(N), i)
            return lam, mult
        if self.family == "interval":
            return 2.0 * np.cumsum(1.0 / (i + 1.0)), np.ones(count)
        return circle_eigenvalues_closed(count), np.full(count, 2.0)

    @property
    def t0_exact(self) -> float:
        if self.family == "shift":
            N = self.params["N"]
            return N * math.log(N) / (N - 1)
        return 0.5

    def model(self, truncation: int | None = None) -> SpectralModel:
        n = self.truncation if truncation is None else truncation
        lam, fmult = self.groups(n)
        if n == 0 or fmult.max() < 2.0**53:
            mult = np.concatenate([[1], fmult]).astype(np.int64)
        else:
            mult = np.array([1] + [self.level(i)[1] for i in range(n)], dtype=object)
        return SpectralModel(
            np.concatenate([[0.0], lam]),
            mult,
            source="closed-form",
            basis=_FAMILY_BASIS[self.family],
            oracle=OracleSpectrum(self.family, self.params, n),
            exact_eigenvalues=(Fraction(0),) + tuple(self.exact_level(i) for i in range(n))
            if self.family == "shift"
            else None,
        )


_FAMILY_BASIS = {"shift": "haar", "interval": "legendre", "circle": "fourier"}


def oracle_model(family: str, truncation: int, **params) -> SpectralModel:
    """Closed-form model with ``truncation`` nonzero eigenvalue groups (circle values from the sum formula)."""
    if family not in _FAMILY_BASIS:
        raise ParameterDomainError(f"unknown oracle family {family!r}")
    if family == "shift" and int(params.get("N", 0)) < 2:
        raise ParameterDomainError("shift oracle needs N >= 2")
    return OracleSpectrum(family, dict(params), int(truncation)).model()


# ---------------------------------------------------------------------------
# shift


def shift_eigenvalue(N: int, n: int) -> float:
    return 1.0 + (1.0 - 1.0 / N) * n


def shift_spectrum(N: int, maxLevel: int) -> SpectralModel:
    """Eigenvalue 0 plus ``1 + (1 - 1/N) n`` with multiplicity ``N**n (N - 1)``, ``n <= maxLevel``."""
    if N < 2:
        raise ParameterDomainError("N must be >= 2")
    if maxLevel < 0:
        raise ParameterDomainError("maxLevel must be >= 0")
    return OracleSpectrum("shift", {"N": int(N)}, maxLevel + 1).model()


def _helmert(N: int, normalized: bool) -> np.ndarray:
    """Rows ``k = 1..N-1``: ``(1, ..., 1, -k, 0, ...)``, an orthogonal completion of the constant vector."""
    H = np.zeros((N - 1, N), dtype=object if not normalized else float)
    for k in range(1, N):
        H[k - 1, :k] = 1
        H[k - 1, k] = -k
        if normalized:
            H[k - 1] = H[k - 1] / math.sqrt(k * (k + 1))
    return H


def haar_wavelets(N: int, level: int, depth: int, normalized: bool = True) -> BasisSet:
    """Level-``level`` Haar wavelets on the words of length ``depth``, nodes in lexicographic order.

    Wavelets are ordered by cylinder, then by the Helmert index. With
    ``normalized=False`` the integer (unnormalized) versions are returned and the
    basis also carries exact values.
    """
    if not 0 <= level < depth:
        raise ParameterDomainError(f"wavelet level must satisfy 0 <= level < depth, got {level}, {depth}")
    n = N**depth
    child = N ** (depth - level - 1)
    H = _helmert(N, normalized)
    count = N**level * (N - 1)
    vals = np.zeros((n, count), dtype=object if not normalized else float)
    col = 0
    for c in range(N**level):
        base = c * N * child
        for k in range(N - 1):
            for j in range(N):
                vals[base + j * child : base + (j + 1) * child, col] = H[k, j]
            col += 1
    if normalized:
        vals *= N ** ((level + 1) / 2.0)
        return BasisSet(f"haar-level-{level}", vals, orthonormal=True)
    return BasisSet(f"haar-level-{level}", vals.astype(float), orthonormal=False, exact_values=vals)


def haar_basis(space: sp.Space, maxLevel: int | None = None, normalized: bool = True) -> BasisSet:
    """Constant function followed by all wavelets of levels ``0..maxLevel-1`` (default: full depth)."""
    if space.kind != "shift":
        raise ParameterDomainError("Haar bases live on shift spaces")
    N, depth = space.params["N"], space.params["depth"]
    maxLevel = depth if maxLevel is None else int(maxLevel)
    if not 0 <= maxLevel <= depth:
        raise ParameterDomainError(f"maxLevel must lie in 0..{depth}")
    n = N**depth
    cols = [np.ones((n, 1), dtype=float if normalized else object)]
    if not normalized:
        cols[0][:] = 1
    levels = [0]
    for lev in range(maxLevel):
        w = haar_wavelets(N, lev, depth, normalized)
        cols.append(w.values if normalized else w.exact_values)
        levels.extend([lev + 1] * w.size)
    vals = np.concatenate(cols, axis=1)
    labels = tuple(levels)  # 0 for the constant, n+1 for level-n wavelets
    if normalized:
        return BasisSet("haar", vals, orthonormal=True, labels=labels)
    return BasisSet("haar", vals.astype(float), orthonormal=False, exact_values=vals, labels=labels)


# ---------------------------------------------------------------------------
# interval


def harmonic(n: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))


def _harmonic_float(n: int) -> float:
    return float(np.sum(1.0 / np.arange(1, n + 1)))


def interval_spectrum(maxDegree: int) -> SpectralModel:
    """Eigenvalue 0 plus ``2 h_n`` for ``1 <= n <= maxDegree``; eigenvectors are Legendre coefficients."""
    if maxDegree < 1:
        raise ParameterDomainError("maxDegree must be >= 1")
    model = OracleSpectrum("interval", {}, maxDegree).model()
    return SpectralModel(
        model.eigenvalues,
        model.multiplicities,
        eigenvectors=np.eye(maxDegree + 1) if maxDegree <= 4096 else None,
        source="closed-form",
        basis="legendre",
        oracle=model.oracle,
    )


def legendre_basis(space: sp.Space, maxDegree: int, normalized: bool = False) -> BasisSet:
    """Legendre polynomials ``p_0..p_maxDegree`` transplanted to ``[a, b]``.

    Unnormalized polynomials satisfy ``p_n(b) = 1``; with ``normalized=True`` they
    are scaled to unit L2 norm.
    """
    if space.kind != "interval":
        raise ParameterDomainError("Legendre bases live on interval spaces")
    a, b = space.params["a"], space.params["b"]
    scale = np.ones(maxDegree + 1)
    if normalized:
        scale = np.sqrt((2 * np.arange(maxDegree + 1) + 1) / (b - a))

    def evaluate(x):
        t = (2.0 * np.asarray(x, dtype=float) - (a + b)) / (b - a)
        return npleg.legvander(t, maxDegree) * scale

    return BasisSet("legendre", evaluate(space.nodes), orthonormal=normalized, evaluate=evaluate)


# ---------------------------------------------------------------------------
# circle


def circle_eigenvalues_closed(count: int) -> np.ndarray:
    """``lambda_k = 4 sum_{j<=k} 1/(2j-1)`` for ``k = 1..count``."""
    return 4.0 * np.cumsum(1.0 / (2.0 * np.arange(1, count + 1) - 1.0))


def circle_eigenvalue(k: int) -> float:
    if k < 0:
        raise ParameterDomainError("frequency must be >= 0")
    return float(circle_eigenvalues_closed(k)[-1]) if k else 0.0


def circle_eigenvalue_quadrature(k, nodes: int = 512) -> np.ndarray:
    """``integral_0^{2 pi} sin(u/2) F_k(u) du`` with ``F_k = sin(ku/2)**2 / sin(u/2)**2`` (Fejér kernel).

    The integrand equals ``(1 - cos k u) / (2 sin(u/2))`` but has no cancellation and
    no singularity at ``u = 0``; it is entire, so Gauss-Legendre converges fast.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    g, w = roots_legendre(int(nodes))
    u = math.pi * (g + 1.0)
    s = np.sin(0.5 * u)
    out = np.empty(len(k))
    for start in range(0, len(k), 256):
        kk = k[start : start + 256]
        fejer = (np.sin(0.5 * kk[:, None] * u[None, :]) / s[None, :]) ** 2
        out[start : start + 256] = math.pi * (fejer * s[None, :]) @ w
    return out


def circle_spectrum(maxFreq: int, quadNodes: int) -> SpectralModel:
    """Eigenvalue 0 plus ``lambda_k`` (multiplicity 2), ``k <= maxFreq``, by quadrature."""
    if maxFreq < 1:
        raise ParameterDomainError("maxFreq must be >= 1")
    if quadNodes < 8 * maxFreq:
        warnings.warn(
            f"quadNodes={quadNodes} < 8*maxFreq={8 * maxFreq}; high frequencies may be unresolved",
            ResolutionWarning,
            stacklevel=2,
        )
    lam = circle_eigenvalue_quadrature(np.arange(1, maxFreq + 1), quadNodes)
    vals = np.concatenate([[0.0], lam])
    mult = np.concatenate([[1], np.full(maxFreq, 2)]).astype(np.int64)
    return SpectralModel(
        vals,
        mult,
        source="closed-form",
        basis="fourier",
        oracle=OracleSpectrum("circle", {"quadNodes": int(quadNodes)}, maxFreq),
    )


def fourier_basis(space: sp.Space, maxFreq: int) -> BasisSet:
    """Orthonormal real Fourier modes ``1, cos t, sin t, ..., cos Kt, sin Kt`` (normalized)."""
    if space.kind != "circle":
        raise ParameterDomainError("Fourier bases live on the circle")
    if maxFreq < 0:
        raise ParameterDomainError("maxFreq must be >= 0")

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (2 * maxFreq + 1,))
        out[..., 0] = 1.0 / math.sqrt(2 * math.pi)
        k = np.arange(1, maxFreq + 1)
        arg = t[..., None] * k
        out[..., 1::2] = np.cos(arg) / math.sqrt(math.pi)
        out[..., 2::2] = np.sin(arg) / math.sqrt(math.pi)
        return out

    labels = (0,) + tuple(k for k in range(1, maxFreq + 1) for _ in (0, 1))
    return BasisSet("fourier", evaluate(space.nodes), orthonormal=True, evaluate=evaluate, labels=labels)
