"""Möbius maps of the circle, their unitary action and commutator growth.

A disk automorphism ``gamma(z) = e^{i phi} (z - a) / (1 - conj(a) z)`` restricts to
a diffeomorphism of the unit circle with conformal derivative
``|gamma'(z)| = (1 - |a|**2) / |1 - conj(a) z|**2``. It scales chordal distances
by the geometric mean of the derivatives at the two endpoints, and it acts
unitarily on ``L2`` by ``U f = |(gamma^-1)'|**1/2 f o gamma^-1``.

The contrast experiment compares the commutator of ``U`` with the logarithmic
operator (eigenvalues ``lambda_k``, logarithmic growth) and with the fractional
operator of order ``alpha`` (eigenvalues growing like ``k**alpha``), both truncated
to frequencies ``<= K``.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .closed_forms import circle_eigenvalues_closed
from .errors import ParameterDomainError, ResolutionWarning

__all__ = [
    "MobiusMap",
    "mobius_evaluate",
    "conformal_identity_defect",
    "composition_defect",
    "unitary_matrix",
    "unitarity_defect",
    "FractionalModel",
    "fractional_eigenvalues",
    "commutator_growth",
    "growth_verdict",
    "measure_defect",
    "change_of_variables_defect",
]


@dataclass(frozen=True)
class MobiusMap:
    a: complex = 0j
    rotation: float = 0.0

    def __post_init__(self):
        a = complex(self.a)
        if not abs(a) < 1:
            raise ParameterDomainError(f"Möbius parameter must lie in the open unit disk, got |a|={abs(a)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "rotation", float(self.rotation))

    # SU(1,1) representative [[alpha, beta], [conj(beta), conj(alpha)]]
    def matrix(self) -> np.ndarray:
        s = math.sqrt(1.0 - abs(self.a) ** 2)
        half = cmath.exp(0.5j * self.rotation)
        alpha = half / s
        beta = -self.a * half / s
        return np.array([[alpha, beta], [beta.conjugate(), alpha.conjugate()]])

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "MobiusMap":
        alpha, beta = complex(m[0, 0]), complex(m[0, 1])
        return cls(-beta / alpha, (2.0 * cmath.phase(alpha)) % (2 * math.pi))

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """``self o other``."""
        return MobiusMap.from_matrix(self.matrix() @ other.matrix())

    def inverse(self) -> "MobiusMap":
        m = self.matrix()
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
        return MobiusMap.from_matrix(inv)

    def __call__(self, theta):
        z = np.exp(1j * np.asarray(theta, dtype=float))
        w = cmath.exp(1j * self.rotation) * (z - self.a) / (1.0 - np.conj(self.a) * z)
        return np.mod(np.angle(w), 2 * math.pi)

    def deriv(self, theta):
        z = np.exp(1j * np.asarray(theta, dtype=float))
        return (1.0 - abs(self.a) ** 2) / np.abs(1.0 - np.conj(self.a) * z) ** 2

    def is_identity(self, tol: float = 1e-12) -> bool:
        """True when ``a`` and the rotation angle (mod 2 pi) vanish within ``tol``."""
        angle = abs(math.remainder(self.rotation, 2 * math.pi))
        return abs(self.a) <= tol and angle <= tol


def mobius_evaluate(map: MobiusMap, theta: float) -> tuple[float, float]:
    """Image angle in ``[0, 2 pi)`` and conformal derivative at ``theta``."""
    return float(map(theta)), float(map.deriv(theta))


def _chord(x, y):
    return 2.0 * np.abs(np.sin(0.5 * (x - y)))


def conformal_identity_defect(map: MobiusMap, samples: int, seed: int = 0) -> float:
    """Max over sampled pairs of ``|d(gx, gy) - |g'(x)|^1/2 |g'(y)|^1/2 d(x, y)|``."""
    if samples < 2:
        raise ParameterDomainError("need at least 2 samples")
    th = np.random.default_rng(seed).uniform(0, 2 * math.pi, samples)
    x, y = np.meshgrid(th, th, indexing="ij")
    lhs = _chord(map(x), map(y))
    rhs = np.sqrt(map.deriv(x) * map.deriv(y)) * _chord(x, y)
    return float(np.max(np.abs(lhs - rhs)))


def composition_defect(g: MobiusMap, h: MobiusMap, samples: int = 64, seed: int = 0) -> float:
    """Max of ``| |(g o h)'(x)| - |g'(h x)| |h'(x)| |`` over sampled angles."""
    th = np.random.default_rng(seed).uniform(0, 2 * math.pi, samples)
    gh = g.compose(h)
    return float(np.max(np.abs(gh.deriv(th) - g.deriv(h(th)) * h.deriv(th))))


def _mode_values(theta: np.ndarray, K: int) -> np.ndarray:
    """Orthonormal real Fourier modes ``1, cos t, sin t, ...`` up to ``K`` at ``theta``."""
    out = np.empty(theta.shape + (2 * K + 1,))
    out[..., 0] = 1.0 / math.sqrt(2 * math.pi)
    k = np.arange(1, K + 1)
    out[..., 1::2] = np.cos(theta[..., None] * k) / math.sqrt(math.pi)
    out[..., 2::2] = np.sin(theta[..., None] * k) / math.sqrt(math.pi)
    return out


def unitary_matrix(map: MobiusMap, maxFreq: int, quadNodes: int) -> np.ndarray:
    """Coefficients of ``U(gamma)`` in the orthonormal real Fourier basis.

    Columns are the input modes of frequency ``0..maxFreq`` (ordered
    ``1, cos, sin, ...``). Rows are every output mode the ``quadNodes``-point
    trapezoid rule resolves (frequencies below ``quadNodes/2``), in the same
    ordering, so the leading square block is the compression to frequencies
    ``<= maxFreq`` and the full matrix has orthonormal columns.
    """
    if maxFreq < 0:
        raise ParameterDomainError("maxFreq must be >= 0")
    # the pulled-back modes oscillate up to (1+|a|)/(1-|a|) times faster than the originals
    distortion = (1 + abs(map.a)) / (1 - abs(map.a))
    if quadNodes < 8 * maxFreq * distortion:
        warnings.warn(
            f"quadNodes={quadNodes} < 8*maxFreq*distortion={8 * maxFreq * distortion:.0f}; "
            "U(gamma) may be under-resolved",
            ResolutionWarning,
            stacklevel=2,
        )
    Q = int(quadNodes)
    theta = 2 * math.pi * np.arange(Q) / Q
    inv = map.inverse()
    g = np.sqrt(inv.deriv(theta))[:, None] * _mode_values(inv(theta), maxFreq)
    F = np.fft.rfft(g, axis=0)
    R = (Q - 1) // 2
    scale = 2 * math.pi / Q
    out = np.empty((2 * R + 1, 2 * maxFreq + 1))
    out[0] = scale * F[0].real / math.sqrt(2 * math.pi)
    out[1::2] = scale * F[1 : R + 1].real / math.sqrt(math.pi)
    out[2::2] = -scale * F[1 : R + 1].imag / math.sqrt(math.pi)
    return out


def unitarity_defect(U: np.ndarray) -> float:
    """``|| U^T U - I ||_2`` (the Fourier basis is orthonormal, so the mass matrix is ``I``)."""
    return float(np.linalg.norm(U.T @ U - np.eye(U.shape[1]), 2))


@dataclass(frozen=True)
class FractionalModel:
    alpha: float
    eigenvalues: np.ndarray  # index k = 0..maxFreq

    def growth_exponent(self, k_min: int = 20, k_max: int = 200) -> float:
        """Slope of ``log lambda_k`` against ``log k`` over ``[k_min, k_max]``."""
        k = np.arange(k_min, min(k_max, len(self.eigenvalues) - 1) + 1)
        return float(np.polyfit(np.log(k), np.log(self.eigenvalues[k]), 1)[0])


def fractional_eigenvalues(alpha: float, maxFreq: int, nodes: int | None = None) -> FractionalModel:
    """``lambda_k = int_0^{2 pi} (1 - cos k u) / (2 sin(u/2))**(1 + alpha) du`` for ``k <= maxFreq``.

    By symmetry this is ``2 int_0^pi 2 sin(ku/2)**2 / (2 sin(u/2))**(1+alpha) du``.
    Writing the integrand as ``u**(1-alpha) g(u)`` with ``g`` smooth on ``[0, pi]``,
    the integral is evaluated by Gauss-Jacobi quadrature, whose nodes cluster at
    ``u = 0`` exactly as the algebraic factor requires.
    """
    if not 0 < alpha < 1:
        raise ParameterDomainError("alpha must lie in (0, 1)")
    n = 4 * maxFreq + 200 if nodes is None else int(nodes)
    x, w = roots_jacobi(n, 0.0, 1.0 - alpha)
    u = 0.5 * math.pi * (1.0 + x)
    jac = (0.5 * math.pi) ** (2.0 - alpha)
    lam = np.zeros(maxFreq + 1)
    shape = (u / (2.0 * np.sin(0.5 * u))) ** (1.0 + alpha) / u**2
    for k in range(1, maxFreq + 1):
        g = 2.0 * np.sin(0.5 * k * u) ** 2 * shape
        lam[k] = 2.0 * jac * np.dot(w, g)
    return FractionalModel(float(alpha), lam)


def _mode_eigenvalues(K: int, kind: str, alpha: float) -> np.ndarray:
    if kind == "log":
        lam = np.concatenate([[0.0], circle_eigenvalues_closed(K)]) if K else np.zeros(1)
    elif kind == "fractional":
        lam = fractional_eigenvalues(alpha, K).eigenvalues
    else:
        raise ParameterDomainError(f"unknown operator kind {kind!r}")
    return np.concatenate([[lam[0]], np.repeat(lam[1:], 2)])


def commutator_growth(
    map: MobiusMap,
    kind: str,
    freq_list: Sequence[int],
    alpha: float = 0.5,
    quad_factor: int = 8,
) -> list[float]:
    """Operator norms of ``[Op, U(gamma)]`` compressed to frequencies ``<= K`` for each ``K``.

    ``Op`` is diagonal in the Fourier basis with the circle eigenvalues (``kind="log"``)
    or the fractional eigenvalues of order ``alpha`` (``kind="fractional"``).
    """
    freq_list = [int(k) for k in freq_list]
    if any(b <= a for a, b in zip(freq_list, freq_list[1:])):
        raise ParameterDomainError("freq_list must be increasing")
    norms = []
    for K in freq_list:
        size = 2 * K + 1
        distortion = (1 + abs(map.a)) / (1 - abs(map.a))
        U = unitary_matrix(map, K, max(int(math.ceil(quad_factor * K * distortion)), 64))[:size]
        lam = _mode_eigenvalues(K, kind, alpha)
        C = lam[:, None] * U - U * lam[None, :]
        norms.append(float(np.linalg.norm(C, 2)))
    return norms


def growth_verdict(norms: Sequence[float], kind: str) -> str:
    """``bounded-trend`` when max/min <= 2; ``growing-trend`` when strictly increasing with final/initial >= 4."""
    norms = np.asarray(norms, dtype=float)
    if np.all(norms <= 1e-10):
        return "bounded-trend"
    if np.all(np.diff(norms) > 0) and norms[-1] >= 4 * norms[0]:
        return "growing-trend"
    if norms.max() <= 2 * norms.min():
        return "bounded-trend"
    return "undetermined"


def measure_defect(map: MobiusMap, f: Callable, nodes: int = 512) -> float:
    """``| int f(gamma x) |gamma'(x)| dx - int f dx |`` by the trapezoid rule."""
    th = 2 * math.pi * np.arange(nodes) / nodes
    w = 2 * math.pi / nodes
    return float(abs(w * np.sum(f(map(th)) * map.deriv(th)) - w * np.sum(f(th))))


def change_of_variables_defect(map: MobiusMap, F: Callable, nodes: int = 512) -> float:
    """Difference of ``iint F(x,y)/d(x,y)`` and ``iint F(gx, gy) |g'(x)|^1/2 |g'(y)|^1/2 / d(x,y)``.

    ``F`` must vanish on the diagonal so both integrands stay bounded; the diagonal
    is excluded from the node sums.
    """
    th = 2 * math.pi * np.arange(nodes) / nodes
    w = (2 * math.pi / nodes) ** 2
    x, y = np.meshgrid(th, th, indexing="ij")
    d = _chord(x, y)
    off = ~np.eye(nodes, dtype=bool)
    lhs = np.sum(F(x, y)[off] / d[off])
    wt = np.sqrt(map.deriv(x) * map.deriv(y))
    rhs = np.sum((F(map(x), map(y)) * wt)[off] / d[off])
    return float(abs(lhs - rhs) * w)
