"""Moduli of continuity, Dini norms and the commutator kernel ``K_h``.

``omega_f(t)`` is the largest ``|f(x) - f(y)|`` over node pairs with
``d(x, y) <= t * diam``. The Dini constant ``Din(f) = int_0^1 omega_f(t) dt / t`` is
computed on the geometric grid ``t_n = theta**n`` with ``theta = exp(-1/m)``: in the
variable ``s = -log t`` the integral becomes ``int_0^inf omega(e**-s) ds``, which is
evaluated by the trapezoid rule with step ``1/m``. ``m = 1`` gives the plain
``theta = 1/e`` grid. The sum ``sum_n omega(e**-n)`` is reported alongside,
because it is comparable to the Dini constant from both sides.

The commutator of the form operator with a multiplication operator ``m_h`` is an
integral operator with kernel ``K_h(x, y) = (h(x) - h(y)) / d(x, y)**delta``:
``E(h f, g) - E(f, h g) = <K_h f, g>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from . import spaces as sp
from .errors import DataError, DomainError, ParameterDomainError
from .form_engine import BasisSet, assemble_form_matrix, split_pairs, apply_logdirichlet, dirichlet_energy

__all__ = [
    "DiniProfile",
    "modulus_of_continuity",
    "dini_algebra_defect",
    "kernel_gram",
    "commutator_kernel_matrix",
    "commutator_report",
    "commutator_defect",
    "m_norm",
    "module_ratio",
    "holder_profile",
    "holder_exponent_fit",
]

MAX_PAIR_NODES = 4096


@dataclass(frozen=True)
class DiniProfile:
    t_grid: np.ndarray
    omega: np.ndarray
    dini_constant: float
    sup_norm: float
    geometric_sum: float
    m: int
    sample_count: int

    @property
    def dini_norm(self) -> float:
        return self.sup_norm + self.dini_constant

    @property
    def theta(self) -> float:
        return math.exp(-1.0 / self.m)

    def rows(self):
        return [(float(t), float(w)) for t, w in zip(self.t_grid, self.omega)]


class _PairModulus:
    """Sorted pair distances with running maxima of ``|f(x) - f(y)|``."""

    def __init__(self, space: sp.Space, f: np.ndarray, max_nodes: int, seed: int):
        n = space.size
        if n > max_nodes:
            idx = np.sort(np.random.default_rng(seed).choice(n, size=max_nodes, replace=False))
            D = np.array([sp.distances_from(space, space.node_point(i))[idx] for i in idx])
        else:
            idx = np.arange(n)
            D = space.distances
        iu = np.triu_indices(len(idx), k=1)
        d = D[iu] / space.diam
        jump = np.abs(f[idx][:, None] - f[idx][None, :])[iu]
        order = np.argsort(d, kind="stable")
        self.d = d[order]
        self.run = np.maximum.accumulate(jump[order]) if len(order) else np.zeros(0)
        self.sample_count = len(idx)
        pos = self.d[self.d > 0]
        self.d_min = float(pos[0]) if len(pos) else 1.0

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.searchsorted(self.d, t * (1 + 1e-12), side="right") - 1
        return np.where(k >= 0, self.run[np.clip(k, 0, None)], 0.0)


def _dini_sums(omega: _PairModulus, m: int) -> tuple[float, float]:
    # grid reaches below the smallest positive pair distance, where omega vanishes
    n_max = int(math.ceil(m * math.log(1.0 / omega.d_min))) + m + 1
    s = np.arange(n_max + 1) / m
    w = omega(np.exp(-s))
    trap = (w.sum() - 0.5 * (w[0] + w[-1])) / m + w[-1]
    g = omega(np.exp(-np.arange(int(math.ceil(math.log(1.0 / omega.d_min))) + 2)))
    return float(trap), float(g.sum())


def modulus_of_continuity(
    space: sp.Space,
    f,
    t_grid: Sequence[float] | None = None,
    m: int = 4,
    max_nodes: int = MAX_PAIR_NODES,
    seed: int = 0,
) -> DiniProfile:
    """Sampled modulus of continuity of node values ``f`` and its Dini constant.

    ``t_grid`` (fractions of the diameter in ``(0, 1]``) only selects where omega is
    reported; the Dini constant always uses the refined geometric grid with ``m``
    points per unit of ``log(1/t)``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (space.size,):
        raise ParameterDomainError(f"expected {space.size} node values, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise DataError("non-finite function values")
    if m < 1:
        raise ParameterDomainError("m must be >= 1")
    if t_grid is None:
        t_grid = np.exp(-np.arange(0, 12 * m + 1) / m)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ParameterDomainError("empty t grid")
    if np.any(t_grid <= 0) or np.any(t_grid > 1):
        raise ParameterDomainError("t grid must lie in (0, 1]")
    t_grid = np.sort(t_grid)[::-1]
    om = _PairModulus(space, f, max_nodes, seed)
    din, geo = _dini_sums(om, m)
    return DiniProfile(t_grid, om(t_grid), din, float(np.abs(f).max()), geo, m, om.sample_count)


def dini_algebra_defect(space: sp.Space, f, g, t_grid: Sequence[float] | None = None) -> float:
    """``max_t omega_fg(t) - (omega_g(t) |f|_inf + omega_f(t) |g|_inf)``; nonpositive up to rounding."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    pf = modulus_of_continuity(space, f, t_grid)
    pg = modulus_of_continuity(space, g, t_grid)
    pfg = modulus_of_continuity(space, f * g, t_grid)
    return float(np.max(pfg.omega - (pg.omega * pf.sup_norm + pf.omega * pg.sup_norm)))


# ---------------------------------------------------------------------------
# commutators

_COMPATIBLE = {
    "shift": ("haar", "cylinder-indicators"),
    "interval": ("legendre",),
    "circle": ("fourier",),
}


def _node_values(space: sp.Space, h) -> np.ndarray:
    if callable(h):
        if space.kind == "shift":
            return np.array([h(space.node_point(i)) for i in range(space.size)], dtype=float)
        return np.asarray(h(space.nodes), dtype=float)
    h = np.asarray(h, dtype=float)
    if h.shape != (space.size,):
        raise ParameterDomainError(f"expected {space.size} node values, got shape {h.shape}")
    return h


def kernel_gram(space: sp.Space, h, basis: BasisSet, method: str = "auto") -> np.ndarray:
    """``G_ij = iint b_i(x) K_h(x, y) b_j(y)``, i.e. ``<K_h b_j, b_i>``."""
    if method == "auto":
        method = "split" if (space.kind != "shift" and callable(h) and basis.evaluate is not None) else "pairs"
    if method == "pairs":
        hv = _node_values(space, h)
        w = space.weights
        Kh = space.kernel * (hv[:, None] - hv[None, :]) * w[:, None] * w[None, :]
        G = basis.values.T @ Kh @ basis.values
    elif method == "split":
        if not callable(h) or basis.evaluate is None:
            raise DataError("split kernel assembly needs callable h and basis")
        size = basis.size
        G = np.zeros((size, size))
        for x, wx, y, wk in split_pairs(space):
            bx = basis.evaluate(x)
            by = basis.evaluate(y.ravel()).reshape(y.shape + (size,))
            dh = np.asarray(h(x))[:, None] - np.asarray(h(y.ravel())).reshape(y.shape)
            G += np.einsum("pq,pi,pqj->ij", wx[:, None] * wk * dh, bx, by, optimize=True)
    else:
        raise ParameterDomainError(f"unknown method {method!r}")
    if not np.all(np.isfinite(G)):
        raise DataError("commutator kernel matrix has non-finite entries")
    return G


def m_norm(X: np.ndarray, M: np.ndarray) -> float:
    """Operator norm of the coefficient map ``X`` with respect to the inner product ``M``."""
    L = linalg.cholesky(M, lower=True)
    Y = L.T @ X
    Z = linalg.solve_triangular(L, Y.T, lower=True).T  # Y L^{-T}
    return float(np.linalg.norm(Z, 2))


def commutator_kernel_matrix(space: sp.Space, h, basis: BasisSet, method: str = "auto") -> tuple[np.ndarray, float]:
    """Operator matrix ``M^{-1} G`` of ``K_h`` in the basis, with its M-norm."""
    G = kernel_gram(space, h, basis, method)
    M = basis.gram(space)
    Kop = np.linalg.solve(M, G)
    return Kop, m_norm(Kop, M)


def _frac_solve(M, B):
    """Solve ``M X = B`` exactly (Gauss-Jordan over fractions)."""
    n = len(M)
    A = [[Fraction(v) for v in M[i]] + [Fraction(v) for v in B[i]] for i in range(n)]
    for c in range(n):
        piv = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        p = A[c][c]
        A[c] = [v / p for v in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return np.array([row[n:] for row in A], dtype=object)


def _exact_commutator(space: sp.Space, h, basis: BasisSet) -> dict:
    from .form_engine import _exact_shift_matrices

    hv = _node_values(space, h)
    hq = [Fraction(float(v)).limit_denominator(10**9) for v in hv]
    if any(abs(float(q) - v) > 1e-15 for q, v in zip(hq, hv)):
        raise DataError("exact commutator needs rational h values")
    E, M = _exact_shift_matrices(space, basis)
    N, depth = space.params["N"], space.params["depth"]
    w = Fraction(1, N**depth)
    B = basis.exact_values
    first = sp._first_difference(space)
    n = space.size
    Kh = np.empty((n, n), dtype=object)
    for p in range(n):
        for q in range(n):
            Kh[p, q] = w * w * N ** (int(first[p, q]) - 1) * (hq[p] - hq[q]) if first[p, q] > 0 else Fraction(0)
    G = B.T.dot(Kh).dot(B)
    Hm = B.T.dot(np.array([B[p] * (w * hq[p]) for p in range(n)], dtype=object))
    A = _frac_solve(M, E)
    H = _frac_solve(M, Hm)
    K = _frac_solve(M, G)
    D = A.dot(H) - H.dot(A) - K
    return {"defect": float(max(abs(v) for v in D.ravel())), "commutator": A.dot(H) - H.dot(A), "kernel": K}


def commutator_report(space: sp.Space, h, basis: BasisSet, exact: bool = False, method: str = "auto") -> dict:
    """Discretized ``[Delta, m_h]`` versus ``K_h`` over a domain-compatible basis.

    The basis must span a spectral subspace of the operator (Haar or cylinder
    indicators on a shift, Legendre on the interval, Fourier on the circle), so that
    products of Galerkin matrices represent compressions of the true operators.
    Returns ``basis_size``, ``commutator_norm``, ``kernel_norm`` and ``defect``
    (all norms in the mass inner product).
    """
    if basis.name not in _COMPATIBLE.get(space.kind, ()):
        raise DomainError(f"basis {basis.name!r} is not domain-compatible on a {space.kind} space")
    if exact:
        if space.kind != "shift" or basis.exact_values is None:
            raise DomainError("exact commutators need a shift space and a rational basis")
        ex = _exact_commutator(space, h, basis)
        C = np.array(ex["commutator"], dtype=float)
        K = np.array(ex["kernel"], dtype=float)
        M = basis.gram(space)
        return {
            "basis_size": basis.size,
            "commutator_norm": m_norm(C, M),
            "kernel_norm": m_norm(K, M),
            "defect": ex["defect"],
            "exact": True,
        }
    fm = assemble_form_matrix(space, basis, method=method, exact=False)
    M = fm.M
    hv = _node_values(space, h)
    Hm = basis.values.T @ (space.weights[:, None] * hv[:, None] * basis.values)
    A = np.linalg.solve(M, fm.E)
    H = np.linalg.solve(M, Hm)
    K, knorm = commutator_kernel_matrix(space, h, basis, method=method)
    C = A @ H - H @ A
    return {
        "basis_size": basis.size,
        "commutator_norm": m_norm(C, M),
        "kernel_norm": knorm,
        "defect": m_norm(C - K, M),
        "exact": False,
    }


def commutator_defect(space: sp.Space, h, basis: BasisSet, exact: bool = False) -> float:
    """``|| [Delta, m_h] - K_h ||`` over the span of a domain-compatible basis."""
    return float(commutator_report(space, h, basis, exact=exact)["defect"])


def module_ratio(space: sp.Space, h, f) -> float:
    """``E(hf, hf)**1/2 / (||h||_Din (||f||_2 + E(f, f)**1/2))`` on node values."""
    hv = _node_values(space, h)
    f = np.asarray(f, dtype=float)
    num = math.sqrt(dirichlet_energy(space, hv * f))
    l2 = math.sqrt(float(np.dot(space.weights, f**2)))
    den = modulus_of_continuity(space, hv).dini_norm * (l2 + math.sqrt(dirichlet_energy(space, f)))
    return num / den if den > 0 else 0.0


# ---------------------------------------------------------------------------
# Hölder profiles


def holder_profile(x0: float, alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """``f(x) = |x - x0|**alpha``."""
    if not 0 < alpha <= 1:
        raise ParameterDomainError("alpha must lie in (0, 1]")
    return lambda x: np.abs(np.asarray(x, dtype=float) - x0) ** alpha


def holder_exponent_fit(
    space: sp.Space,
    f: Callable,
    x0: float,
    radii: Sequence[float] = tuple(np.geomspace(1e-9, 1e-6, 7)),
    breakpoints: Sequence[float] = (),
) -> tuple[float, np.ndarray]:
    """Empirical Hölder exponent of ``Delta f`` at ``x0``.

    Fits the log-log slope of ``max(|Delta f(x0 + r) - Delta f(x0)|, |Delta f(x0 - r) - Delta f(x0)|)``
    against ``r``. Evaluation uses graded quadrature with breakpoints at ``x0`` and
    at the evaluation point.
    """
    if space.kind != "interval":
        raise ParameterDomainError("the Hölder fit is implemented on the interval")
    bps = [x0, *breakpoints]
    base = apply_logdirichlet(space, f, x0, breakpoints=bps)
    radii = np.asarray(radii, dtype=float)
    incr = []
    for r in radii:
        up = abs(apply_logdirichlet(space, f, x0 + r, breakpoints=bps) - base)
        dn = abs(apply_logdirichlet(space, f, x0 - r, breakpoints=bps) - base)
        incr.append(max(up, dn))
    incr = np.asarray(incr)
    slope = float(np.polyfit(np.log(radii), np.log(incr), 1)[0])
    return slope, incr
