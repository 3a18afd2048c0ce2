"""Singular annulus integrals and truncated-kernel smoothing operators.

Annuli follow the closed-ball convention of :mod:`logdirichlet.spaces`:
``annulus_integral(x, r1, r2, e)`` integrates ``d(x, y)**-e`` over
``{y : r1 < d(x, y) <= r2}``, so that ``r1 = 0`` gives the closed ball minus the
center and the tail ``X \\ B(x, r)`` is ``{d > r}``.

Two evaluation routes are available. ``method="exact"`` integrates against the
continuum measure (shell sums on the shift, antiderivatives on the interval,
adaptive quadrature in arc length on the circle). ``method="nodes"`` sums the
quadrature weights of the discretized space and is what the truncated kernel
operators use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from . import spaces as sp
from .errors import DegenerateTruncationError, ParameterDomainError

__all__ = [
    "annulus_integral",
    "log_tail_integral",
    "log_tail_window",
    "lemma_bound",
    "lemma_checks",
    "TruncatedKernel",
    "truncated_kernel",
    "truncated_kernel_apply",
    "approximation_defect",
    "pair_energy",
    "graded_rule",
]


# ---------------------------------------------------------------------------
# annulus integrals


def _shift_shells(space: sp.Space, r1: float, r2: float, exponent: float) -> float:
    N, lam = space.params["N"], space.params["lambda"]
    # shell j (first difference at index j+1) sits at distance lam**-j with mass N**-j (1 - 1/N)
    frac = 1.0 - 1.0 / N
    logl = math.log(lam)
    # shells with r1 < lam**-j <= r2; indices snap to integers within 1e-9
    j_lo = max(0, math.ceil(math.log(1.0 / r2) / logl - 1e-9))
    q = lam**exponent / N
    if r1 <= 0:
        if q >= 1.0:
            return math.inf
        return frac * q**j_lo / (1.0 - q)
    j_hi = math.ceil(math.log(1.0 / r1) / logl - 1e-9) - 1
    if j_hi < j_lo:
        return 0.0
    j = np.arange(j_lo, j_hi + 1, dtype=float)
    return float(frac * np.sum(q**j))


def _power_integral(lo: float, hi: float, exponent: float) -> float:
    """Integral of ``rho**-exponent`` over ``(lo, hi]``."""
    if hi <= lo:
        return 0.0
    if math.isclose(exponent, 1.0, rel_tol=0, abs_tol=1e-15):
        if lo <= 0:
            return math.inf
        return math.log(hi / lo)
    p = 1.0 - exponent
    if lo <= 0:
        return math.inf if p <= 0 else hi**p / p
    return (hi**p - lo**p) / p


def _interval_annulus(space: sp.Space, x: float, r1: float, r2: float, exponent: float) -> float:
    a, b = space.params["a"], space.params["b"]
    total = 0.0
    for side in (x - a, b - x):
        total += _power_integral(min(r1, side), min(r2, side), exponent)
    return total


def _circle_annulus(r1: float, r2: float, exponent: float) -> float:
    u1 = 2.0 * math.asin(min(r1, 2.0) / 2.0)
    u2 = 2.0 * math.asin(min(r2, 2.0) / 2.0)
    if u2 <= u1:
        return 0.0
    if u1 == 0.0:
        if exponent >= 1.0:
            return math.inf
        # (2 sin(u/2))**-e = u**-e * (u / (2 sin(u/2)))**e, the second factor is smooth
        smooth = lambda u: (u / (2.0 * math.sin(0.5 * u))) ** exponent if u > 0 else 1.0
        val, _ = integrate.quad(smooth, 0.0, u2, weight="alg", wvar=(-exponent, 0.0), epsabs=1e-13, epsrel=1e-12)
    else:
        val, _ = integrate.quad(
            lambda u: (2.0 * math.sin(0.5 * u)) ** -exponent, u1, u2, epsabs=1e-13, epsrel=1e-12, limit=200
        )
    return 2.0 * val


def annulus_integral(space: sp.Space, x, r1: float, r2: float, exponent: float, method: str = "exact") -> float:
    """Integral of ``d(x, y)**-exponent`` over ``{y : r1 < d(x, y) <= r2}``.

    Returns ``inf`` when the integral diverges (``r1 = 0`` and ``exponent >= delta``).
    """
    if not (0 <= r1 < r2):
        raise ParameterDomainError(f"annulus needs 0 <= r1 < r2, got r1={r1}, r2={r2}")
    if r2 > space.diam * (1 + 1e-12):
        raise ParameterDomainError(f"annulus outer radius {r2} exceeds diam={space.diam}")
    if method == "nodes":
        d = sp.distances_from(space, x)
        mask = (d > r1) & (d <= r2) & (d > 0)
        return float(np.sum(space.weights[mask] * d[mask] ** -exponent))
    if method != "exact":
        raise ParameterDomainError(f"unknown method {method!r}")
    p = sp._check_point(space, x)
    if space.kind == "shift":
        return _shift_shells(space, r1, r2, exponent)
    if space.kind == "interval":
        return _interval_annulus(space, p, r1, r2, exponent)
    return _circle_annulus(r1, r2, exponent)


def log_tail_integral(space: sp.Space, x, r: float, method: str = "exact") -> float:
    """Integral of ``d(x, y)**-delta`` over the complement of the closed ball ``B(x, r)``."""
    if not (0 < r < space.diam):
        raise ParameterDomainError(f"log-tail radius must lie in (0, {space.diam}), got {r}")
    return annulus_integral(space, x, r, space.diam, space.delta, method=method)


def log_tail_window(space: sp.Space, r_min: float = 1e-4, r_max: float = 1e-1) -> tuple[float, float]:
    """Fixed bracket ``[c1, c2]`` for ``log_tail_integral(x, r) / log(1/r)``.

    The bracket is derived once per space from counting shells (shift) or from
    elementary antiderivatives (interval, circle), uniformly over centers and
    over ``r`` in ``[r_min, r_max]``; it does not look at any computed tail.
    """
    if not (0 < r_min < r_max < 1):
        raise ParameterDomainError("need 0 < r_min < r_max < 1")
    L_lo, L_hi = math.log(1 / r_max), math.log(1 / r_min)
    if space.kind == "shift":
        N, lam = space.params["N"], space.params["lambda"]
        frac = 1.0 - 1.0 / N
        # number of shells above r is ceil(log_lam(1/r)), between log_lam(1/r) and log_lam(1/r) + 1
        return frac / math.log(lam), frac * (1.0 / math.log(lam) + 1.0 / L_lo)
    if space.kind == "interval":
        D = space.diam
        # the longer side has length >= D/2, each side contributes at most log(D/r)
        lo = min(math.log(D / (2 * r)) / math.log(1 / r) for r in (r_min, r_max))
        hi = max(2.0 * math.log(D / r) / math.log(1 / r) for r in (r_min, r_max))
        return lo, hi
    # circle: tail = -2 log tan(u/4) with u = 2 arcsin(r/2), and r/4 <= tan(u/4) <= r/2 for r <= 1
    return 2.0 * (1.0 + math.log(2.0) / L_hi), 2.0 * (1.0 + math.log(4.0) / L_lo)


def lemma_bound(space: sp.Space, s: float, C: float | None = None) -> float:
    """Constant ``C e**(delta+s) / (e**s - 1)`` of the small-ball and tail estimates."""
    if s <= 0:
        raise ParameterDomainError("s must be positive")
    C = space.regularity_constant if C is None else C
    return C * math.exp(space.delta + s) / math.expm1(s)


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    bound: float
    observed_max: float

    @property
    def margin(self) -> float:
        return self.bound - self.observed_max

    @property
    def holds(self) -> bool:
        return self.observed_max <= self.bound * (1 + 1e-12)

    def as_dict(self) -> dict:
        return {"name": self.name, "bound": self.bound, "observed_max": self.observed_max, "margin": self.margin}


def lemma_checks(
    space: sp.Space,
    centers: Sequence,
    radii: Sequence[float],
    s_values: Sequence[float] = (0.25, 0.5, 1.0),
    log_radii: Sequence[float] | None = None,
) -> dict:
    """Evaluate the four annulus estimates on the given centers.

    The small-ball and tail integrals are normalized by ``r**s`` and ``r**-s`` and
    compared with :func:`lemma_bound`. The ``(r/e, r]`` annulus is compared with
    ``C e**delta``, which follows from ``d >= r/e`` and ``mu(B(x, r)) <= C r**delta``.
    The log tail is reported as its ratio to ``log(1/r)`` against
    :func:`log_tail_window`.
    """
    C = space.regularity_constant
    d = space.delta
    out: dict = {"small_ball": [], "tail": [], "annulus": None, "log_tail": None}
    for s in s_values:
        bound = lemma_bound(space, s)
        small = max(annulus_integral(space, x, 0.0, r, d - s) / r**s for x in centers for r in radii)
        tail = max(
            annulus_integral(space, x, r, space.diam, d + s) * r**s
            for x in centers
            for r in radii
            if r < space.diam
        )
        out["small_ball"].append(LemmaCheck(f"small_ball(s={s})", bound, small))
        out["tail"].append(LemmaCheck(f"tail(s={s})", bound, tail))
    ann = max(annulus_integral(space, x, r / math.e, r, d) for x in centers for r in radii)
    out["annulus"] = LemmaCheck("annulus", C * math.exp(d), ann)
    if log_radii is None:
        log_radii = np.geomspace(1e-4, 1e-1, 13)
    log_radii = np.asarray(log_radii, dtype=float)
    c1, c2 = log_tail_window(space, float(log_radii.min()), float(log_radii.max()))
    ratios = np.array([[log_tail_integral(space, x, r) / math.log(1 / r) for r in log_radii] for x in centers])
    out["log_tail"] = {
        "c1": c1,
        "c2": c2,
        "observed_min": float(ratios.min()),
        "observed_max": float(ratios.max()),
        "holds": bool(ratios.min() >= c1 * (1 - 1e-12) and ratios.max() <= c2 * (1 + 1e-12)),
    }
    return out


# ---------------------------------------------------------------------------
# truncated kernels


@dataclass(frozen=True)
class TruncatedKernel:
    """Kernel ``d**-delta`` restricted to ``d >= r`` on the nodes, with per-node L1 masses."""

    space: sp.Space
    r: float
    normalization: np.ndarray
    matrix: np.ndarray

    def row_sums(self) -> np.ndarray:
        return (self.matrix * self.space.weights[None, :]).sum(axis=1) / self.normalization


def truncated_kernel(space: sp.Space, r: float) -> TruncatedKernel:
    if not (0 < r < space.diam):
        raise ParameterDomainError(f"truncation radius must lie in (0, {space.diam}), got {r}")
    D = space.distances
    keep = D >= r * (1 - 1e-12)
    K = np.where(keep & (D > 0), space.kernel, 0.0)
    norm = K @ space.weights
    if np.any(norm <= 0):
        raise DegenerateTruncationError(f"truncated kernel has a row with zero mass at r={r}")
    return TruncatedKernel(space, float(r), norm, K)


def truncated_kernel_apply(kernel: TruncatedKernel, f) -> np.ndarray:
    """Apply the L1-normalized truncated kernel to node values."""
    f = np.asarray(f, dtype=float)
    if f.shape != (kernel.space.size,):
        raise ParameterDomainError(f"expected {kernel.space.size} node values, got shape {f.shape}")
    return (kernel.matrix @ (kernel.space.weights * f)) / kernel.normalization


def pair_energy(space: sp.Space, f, g=None) -> float:
    """Node-pair Dirichlet form ``1/2 sum_{p != q} w_p w_q (f_p - f_q)(g_p - g_q) / d_pq**delta``."""
    f = np.asarray(f, dtype=float)
    g = f if g is None else np.asarray(g, dtype=float)
    w = space.weights
    A = space.kernel * w[:, None] * w[None, :]
    deg = A.sum(axis=1)
    return float(np.dot(f, deg * g) - f @ A @ g)


def approximation_defect(space: sp.Space, r: float, f) -> float:
    """``||f - T_r f||^2 log(1/r) / E(f, f)``, defined as 0 for constant ``f``."""
    f = np.asarray(f, dtype=float)
    energy = pair_energy(space, f)
    scale = max(1.0, float(np.abs(f).max())) ** 2
    if energy <= 1e-14 * scale:
        return 0.0
    kern = truncated_kernel(space, r)
    resid = f - truncated_kernel_apply(kern, f)
    return float(np.dot(space.weights, resid**2) * math.log(1.0 / r) / energy)


# ---------------------------------------------------------------------------
# graded composite Gauss rules


def graded_rule(
    a: float,
    b: float,
    breakpoints: Sequence[float] = (),
    order: int = 24,
    sigma: float = 0.15,
    min_width: float = 1e-15,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on ``[a, b]`` graded geometrically toward breakpoints.

    Every segment between consecutive breakpoints is split at its midpoint and each
    half is subdivided geometrically (ratio ``sigma``) toward its breakpoint end, down
    to panels of relative width ``min_width``. The innermost sliver is dropped, which
    is harmless for integrands with integrable algebraic singularities.
    """
    if not b > a:
        raise ParameterDomainError("graded_rule needs b > a")
    pts = sorted({float(a), float(b), *(float(p) for p in breakpoints if a < p < b)})
    x0, w0 = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    scale = b - a
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        for end, other in ((lo, mid), (hi, mid)):
            half = abs(other - end)
            if half <= 0:
                continue
            levels = max(1, math.ceil(math.log(min_width * scale / half) / math.log(sigma)))
            edges = [half * sigma**k for k in range(levels + 1)]
            for outer, inner in zip(edges[:-1], edges[1:]):
                # panel [inner, outer] measured from `end`, oriented toward `other`
                sgn = 1.0 if other > end else -1.0
                p, q = end + sgn * inner, end + sgn * outer
                lo_p, hi_p = min(p, q), max(p, q)
                h = 0.5 * (hi_p - lo_p)
                xs.append(lo_p + h * (x0 + 1.0))
                ws.append(h * w0)
    return np.concatenate(xs), np.concatenate(ws)
