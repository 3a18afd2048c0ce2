"""Galerkin matrices of the logarithmic Dirichlet form and their spectra.

The form is ``E(f, g) = 1/2 iint (f(x) - f(y)) (g(x) - g(y)) d(x, y)**-delta``.
Two assembly routes exist:

``pairs``
    Sum over distinct node pairs of the space's quadrature. With node weights
    ``W`` and kernel ``K`` this is ``E = B^T (diag(A 1) - A) B`` with ``A = W K W``,
    i.e. a weighted graph Laplacian. On shift spaces this is exact, and when the
    basis has rational values an exact integer/fraction copy is kept as well.
``split``
    For the interval and the circle with callable bases: an outer rule in ``x``
    and, for every outer node, an inner Gauss rule whose panels end at ``x``. The
    inner integrand is then smooth (polynomial for Legendre bases, analytic for
    Fourier bases), so no diagonal error enters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy import linalg

from . import spaces as sp
from .errors import ConditioningError, DataError, ParameterDomainError, UndeterminedError
from .quadrature import graded_rule, pair_energy

__all__ = [
    "BasisSet",
    "FormMatrices",
    "SpectralModel",
    "nodal_basis",
    "cylinder_basis",
    "assemble_form_matrix",
    "split_pairs",
    "solve_spectrum",
    "group_eigenvalues",
    "certify_spectrum",
    "exact_rank",
    "apply_logdirichlet",
    "dirichlet_energy",
]


@dataclass(frozen=True)
class BasisSet:
    """Basis functions tabulated at the nodes of a space.

    ``values`` has shape ``(nodes, size)``. ``evaluate`` (optional) maps an array of
    coordinates to an array of shape ``(len(x), size)``; it enables the ``split``
    assembly. ``exact_values`` (optional) is an object array of integers or
    fractions with the same shape as ``values`` and enables rational assembly.
    """

    name: str
    values: np.ndarray
    orthonormal: bool = False
    evaluate: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_values: Optional[np.ndarray] = None
    labels: tuple = ()

    @property
    def size(self) -> int:
        return self.values.shape[1]

    def gram(self, space: sp.Space) -> np.ndarray:
        B = self.values
        return B.T @ (space.weights[:, None] * B)

    def check_orthonormal(self, space: sp.Space, tol: float = 1e-8) -> float:
        """Max deviation of the Gram matrix from the identity."""
        return float(np.abs(self.gram(space) - np.eye(self.size)).max())

    def constant_coefficients(self, space: sp.Space) -> np.ndarray:
        """Coefficients of the constant function 1 (least squares in the mass inner product)."""
        M = self.gram(space)
        rhs = self.values.T @ space.weights
        return np.linalg.solve(M, rhs)


@dataclass(frozen=True)
class FormMatrices:
    E: np.ndarray
    M: np.ndarray
    basis: BasisSet
    space: sp.Space
    method: str = "pairs"
    E_exact: Optional[np.ndarray] = None
    M_exact: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SpectralModel:
    """Distinct eigenvalues (ascending) with multiplicities and optional eigenvectors.

    ``eigenvectors`` holds M-orthonormal coefficient columns, one per expanded
    eigenvalue. ``exact_eigenvalues`` is set when the spectrum has been certified
    in rational arithmetic. ``oracle`` links a closed-form model to its generator.
    """

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    source: str = "galerkin"
    basis: str = ""
    oracle: object = None
    exact_eigenvalues: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.multiplicities):
            raise DataError("eigenvalues and multiplicities differ in length")
        if len(self.eigenvalues) and np.any(np.diff(self.eigenvalues) < 0):
            raise DataError("eigenvalues must be ascending")
        if np.any(np.asarray(self.multiplicities) < 1):
            raise DataError("multiplicities must be >= 1")

    @property
    def total(self) -> int:
        return int(sum(int(m) for m in self.multiplicities))

    def expanded(self, cap: int | None = None) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, truncated at a complete group within ``cap``."""
        mult = [int(m) for m in self.multiplicities]
        if cap is not None:
            keep, acc = 0, 0
            for m in mult:
                if acc + m > cap:
                    break
                acc += m
                keep += 1
            if keep == 0 and mult:
                return np.full(cap, float(self.eigenvalues[0]))
            return np.repeat(np.asarray(self.eigenvalues[:keep], float), mult[:keep])
        return np.repeat(np.asarray(self.eigenvalues, float), mult)

    def head(self, count: int) -> np.ndarray:
        """First ``count`` entries of the expanded sequence (the last group may be cut)."""
        out, acc = [], 0
        for lam, m in zip(self.eigenvalues, self.multiplicities):
            take = min(int(m), count - acc)
            if take <= 0:
                break
            out.append(np.full(take, float(lam)))
            acc += take
        return np.concatenate(out) if out else np.zeros(0)

    def shifted(self, c: float) -> "SpectralModel":
        return replace(self, eigenvalues=np.asarray(self.eigenvalues, float) + c, exact_eigenvalues=None, oracle=None)

    def rows(self):
        """``(index, eigenvalue, multiplicity)`` rows with 0-based index over distinct eigenvalues."""
        return [(i, float(l), int(m)) for i, (l, m) in enumerate(zip(self.eigenvalues, self.multiplicities))]


# ---------------------------------------------------------------------------
# simple bases


def nodal_basis(space: sp.Space) -> BasisSet:
    """Normalized point masses: ``b_i = w_i**-1/2`` at node ``i`` and 0 elsewhere."""
    vals = np.diag(1.0 / np.sqrt(space.weights))
    return BasisSet("nodal", vals, orthonormal=True)


def cylinder_basis(space: sp.Space, level: int | None = None) -> BasisSet:
    """Indicators of all cylinders of the given length (default: the full depth)."""
    if space.kind != "shift":
        raise ParameterDomainError("cylinder indicators exist only on shift spaces")
    N, depth = space.params["N"], space.params["depth"]
    level = depth if level is None else int(level)
    if not 0 <= level <= depth:
        raise ParameterDomainError(f"cylinder level must lie in 0..{depth}")
    block = N ** (depth - level)
    idx = np.arange(space.size) // block
    vals = (idx[:, None] == np.arange(N**level)[None, :]).astype(float)
    exact = vals.astype(np.int64).astype(object)
    labels = tuple(tuple(int(s) for s in space.nodes[i * block, :level]) for i in range(N**level))
    return BasisSet("cylinder-indicators", vals, orthonormal=False, exact_values=exact, labels=labels)


# ---------------------------------------------------------------------------
# assembly


def _check_basis(space: sp.Space, basis: BasisSet) -> None:
    if basis.values.ndim != 2 or basis.values.shape[0] != space.size:
        raise DataError(f"basis values must have shape ({space.size}, size), got {basis.values.shape}")
    if basis.size < 1:
        raise DataError("empty basis")
    if not np.all(np.isfinite(basis.values)):
        raise DataError("basis values contain non-finite entries")


def _laplacian(space: sp.Space) -> np.ndarray:
    w = space.weights
    A = space.kernel * w[:, None] * w[None, :]
    return np.diag(A.sum(axis=1)) - A


def _exact_shift_matrices(space: sp.Space, basis: BasisSet) -> tuple[np.ndarray, np.ndarray]:
    """Rational E and M for a shift space and a basis with rational node values."""
    N, depth = space.params["N"], space.params["depth"]
    first = sp._first_difference(space)
    n = space.size
    K = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            K[i, j] = N ** (int(first[i, j]) - 1) if first[i, j] > 0 else 0
    L = -K
    for i in range(n):
        L[i, i] = sum(K[i, :])
    B = basis.exact_values
    Bt = B.T
    scale = Fraction(1, N ** (2 * depth))
    E = (Bt.dot(L)).dot(B)
    M = Bt.dot(B)
    E = np.vectorize(lambda v: Fraction(v) * scale, otypes=[object])(E)
    M = np.vectorize(lambda v: Fraction(v) * Fraction(1, N**depth), otypes=[object])(M)
    return E, M


def split_pairs(space: sp.Space, inner_order: int | None = None, chunk: int = 256) -> Iterator[tuple]:
    """Yield ``(x, wx, y, wk)`` chunks of a product rule for ``iint F(x, y) d(x, y)**-delta``.

    ``x`` has shape ``(P,)`` and ``y``, ``wk`` have shape ``(P, Q)``; the kernel
    ``d**-delta`` is folded into ``wk``. For every outer node the inner panels end at
    the node itself, so ``F(x, y) / d`` is integrated as a smooth function of ``y``
    whenever ``F`` vanishes linearly on the diagonal.
    """
    if space.kind == "shift":
        raise ParameterDomainError("split assembly is available on the interval and the circle only")
    x_all, wx_all = space.nodes, space.weights
    if space.kind == "interval":
        order = 48 if inner_order is None else int(inner_order)
        g, gw = np.polynomial.legendre.leggauss(order)
        a, b = space.params["a"], space.params["b"]
        for s in range(0, len(x_all), chunk):
            x = x_all[s : s + chunk]
            left = 0.5 * (x - a)
            right = 0.5 * (b - x)
            yl = a + left[:, None] * (g[None, :] + 1.0)
            yr = x[:, None] + right[:, None] * (g[None, :] + 1.0)
            wl = left[:, None] * gw[None, :]
            wr = right[:, None] * gw[None, :]
            y = np.concatenate([yl, yr], axis=1)
            w = np.concatenate([wl, wr], axis=1)
            yield x, wx_all[s : s + chunk], y, w / np.abs(x[:, None] - y)
    else:
        order = 96 if inner_order is None else int(inner_order)
        g, gw = np.polynomial.legendre.leggauss(order)
        u = math.pi * (g + 1.0)
        wu = math.pi * gw / (2.0 * np.sin(0.5 * u))
        for s in range(0, len(x_all), chunk):
            x = x_all[s : s + chunk]
            y = x[:, None] + u[None, :]
            yield x, wx_all[s : s + chunk], y, np.broadcast_to(wu, y.shape)


def _split_assemble(space: sp.Space, basis: BasisSet, inner_order: int | None) -> np.ndarray:
    size = basis.size
    E = np.zeros((size, size))
    for x, wx, y, wk in split_pairs(space, inner_order):
        bx = basis.evaluate(x)  # (P, size)
        by = basis.evaluate(y.ravel()).reshape(y.shape + (size,))  # (P, Q, size)
        diff = bx[:, None, :] - by
        E += np.einsum("pq,pqi,pqj->ij", wx[:, None] * wk, diff, diff, optimize=True)
    # symmetrize, then apply the 1/2 in front of the double integral
    return 0.25 * (E + E.T)


def assemble_form_matrix(
    space: sp.Space,
    basis: BasisSet,
    method: str = "auto",
    exact: bool | None = None,
    inner_order: int | None = None,
) -> FormMatrices:
    """Assemble stiffness ``E`` and mass ``M`` of the form over ``basis``.

    ``method`` is ``"pairs"``, ``"split"`` or ``"auto"`` (split when the space is
    continuous and the basis is callable). ``exact`` adds rational copies on shift
    spaces; by default it is enabled whenever the basis carries exact values.
    """
    _check_basis(space, basis)
    if method == "auto":
        method = "split" if (space.kind != "shift" and basis.evaluate is not None) else "pairs"
    B = basis.values
    M = B.T @ (space.weights[:, None] * B)
    if method == "pairs":
        E = B.T @ _laplacian(space) @ B
        E = 0.5 * (E + E.T)
    elif method == "split":
        if basis.evaluate is None:
            raise DataError("split assembly needs a callable basis")
        E = _split_assemble(space, basis, inner_order)
    else:
        raise ParameterDomainError(f"unknown assembly method {method!r}")
    if not (np.all(np.isfinite(E)) and np.all(np.isfinite(M))):
        raise DataError("assembled matrices contain non-finite entries")
    if exact is None:
        exact = space.kind == "shift" and basis.exact_values is not None
    E_ex = M_ex = None
    if exact:
        if space.kind != "shift" or basis.exact_values is None:
            raise DataError("exact assembly needs a shift space and a basis with rational values")
        E_ex, M_ex = _exact_shift_matrices(space, basis)
    return FormMatrices(E, 0.5 * (M + M.T), basis, space, method, E_ex, M_ex)


# ---------------------------------------------------------------------------
# spectra


def group_eigenvalues(values: np.ndarray, multiplicity_tol: float = 1e-6) -> list[tuple[int, int]]:
    """Split ascending ``values`` into ``(start, stop)`` groups within ``tol * (1 + |lambda|)``."""
    groups = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[start] > multiplicity_tol * (1.0 + abs(values[start])):
            groups.append((start, i))
            start = i
    return groups


def solve_spectrum(fm: FormMatrices, multiplicity_tol: float = 1e-6) -> SpectralModel:
    """Solve ``E v = lambda M v`` via a Cholesky reduction and a dense symmetric eigensolve."""
    M = fm.M
    scale = float(np.abs(np.diag(M)).max())
    try:
        Lc = linalg.cholesky(M, lower=True)
        pivot = float(np.min(np.diag(Lc)) ** 2)
    except linalg.LinAlgError:
        Lc, pivot = None, float(np.linalg.eigvalsh(M).min())
    if Lc is None or pivot <= 1e-14 * scale:
        raise ConditioningError(f"mass matrix is numerically singular (smallest pivot {pivot:.3e})", pivot=pivot)
    X = linalg.solve_triangular(Lc, fm.E, lower=True)
    C = linalg.solve_triangular(Lc, X.T, lower=True)
    C = 0.5 * (C + C.T)
    vals, Y = linalg.eigh(C)
    V = linalg.solve_triangular(Lc.T, Y, lower=False)
    groups = group_eigenvalues(vals, multiplicity_tol)
    ev = np.array([vals[s:e].mean() for s, e in groups])
    mult = np.array([e - s for s, e in groups], dtype=np.int64)
    return SpectralModel(
        ev,
        mult,
        eigenvectors=V,
        source="galerkin",
        basis=fm.basis.name,
        meta={"method": fm.method, "multiplicity_tol": multiplicity_tol, "raw": vals},
    )


def _to_integer_matrix(A) -> list[list[int]]:
    rows = [[Fraction(v) for v in row] for row in A]
    den = 1
    for row in rows:
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
    return [[int(v * den) for v in row] for row in rows]


def exact_rank(A) -> int:
    """Rank of a rational matrix by fraction-free (Bareiss) elimination."""
    m = _to_integer_matrix(A)
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    rank = 0
    prev = 1
    for c in range(n_cols):
        piv = next((r for r in range(rank, n_rows) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][c]
        for r in range(rank + 1, n_rows):
            mr = m[r]
            f = mr[c]
            mk = m[rank]
            for k in range(c + 1, n_cols):
                mr[k] = (p * mr[k] - f * mk[k]) // prev
            mr[c] = 0
        prev = p
        rank += 1
        if rank == n_rows:
            break
    return rank


def certify_spectrum(fm: FormMatrices, model: SpectralModel, max_denominator: int = 10_000) -> SpectralModel:
    """Certify a floating spectrum in rational arithmetic.

    Each grouped eigenvalue is rounded to a nearby fraction and the nullity of
    ``E - lambda M`` is computed exactly. The spectrum is certified when the
    nullities equal the multiplicities and add up to the basis size.
    """
    if fm.E_exact is None or fm.M_exact is None:
        raise DataError("certification needs exact matrices (shift space with a rational basis)")
    size = fm.basis.size
    exact = []
    for lam, mult in zip(model.eigenvalues, model.multiplicities):
        q = Fraction(float(lam)).limit_denominator(max_denominator)
        if abs(float(q) - lam) > 1e-8 * (1 + abs(lam)):
            raise UndeterminedError(f"eigenvalue {lam!r} has no small-denominator rational form")
        A = fm.E_exact - q * fm.M_exact
        nullity = size - exact_rank(A)
        if nullity != int(mult):
            raise UndeterminedError(
                f"eigenvalue {q} has exact nullity {nullity}, floating multiplicity {int(mult)}",
                diagnostics={"eigenvalue": str(q), "nullity": nullity, "multiplicity": int(mult)},
            )
        exact.append(q)
    if sum(int(m) for m in model.multiplicities) != size:
        raise UndeterminedError("exact nullities do not exhaust the basis")
    return replace(model, exact_eigenvalues=tuple(exact), meta={**model.meta, "certified": True})


# ---------------------------------------------------------------------------
# pointwise operator and energy


def _node_index(space: sp.Space, x) -> int:
    d = sp.distances_from(space, x)
    hits = np.flatnonzero(d == 0)
    if hits.size == 0:
        raise ParameterDomainError("node-value input needs x to be a quadrature node; pass a callable instead")
    return int(hits[0])


def apply_logdirichlet(
    space: sp.Space,
    f,
    x,
    breakpoints: Sequence[float] = (),
    order: int = 24,
) -> float:
    """Evaluate ``integral (f(x) - f(y)) d(x, y)**-delta dmu(y)`` at the point ``x``.

    ``f`` is either an array of node values (the discrete sum over nodes with
    ``d(x, q) > 0``; ``x`` must be a node) or, on the interval and the circle, a
    vectorized callable. Callables are integrated with a composite Gauss rule graded
    toward ``x`` and toward any extra ``breakpoints`` (e.g. the kink of a Hölder
    profile), so the result carries no diagonal error.
    """
    if callable(f):
        if space.kind == "shift":
            vals = np.array([f(space.node_point(i)) for i in range(space.size)], dtype=float)
            return apply_logdirichlet(space, vals, x)
        x = sp._check_point(space, x)
        fx = float(f(np.array([x]))[0])
        if space.kind == "interval":
            a, b = space.params["a"], space.params["b"]
            y, w = graded_rule(a, b, [x, *breakpoints], order=order)
            return float(np.sum(w * (fx - f(y)) / np.abs(x - y)))
        bps = [(float(p) - x) % (2 * math.pi) for p in breakpoints]
        u, w = graded_rule(0.0, 2 * math.pi, bps, order=order)
        return float(np.sum(w * (fx - f(x + u)) / (2.0 * np.sin(0.5 * u))))
    f = np.asarray(f, dtype=float)
    if f.shape != (space.size,):
        raise ParameterDomainError(f"expected {space.size} node values, got shape {f.shape}")
    i = _node_index(space, x)
    d = sp.distances_from(space, x)
    mask = d > 0
    return float(np.sum(space.weights[mask] * (f[i] - f[mask]) * space.kernel[i, mask]))


def apply_logdirichlet_nodes(space: sp.Space, f) -> np.ndarray:
    """Discrete operator applied at every node: ``(L f) / w``."""
    f = np.asarray(f, dtype=float)
    return (_laplacian(space) @ f) / space.weights


def dirichlet_energy(space: sp.Space, f, g=None) -> float:
    """Node-pair form ``E(f, g)``; with ``g`` omitted, the energy ``E(f, f) >= 0``."""
    val = pair_energy(space, f, g)
    if g is None:
        f = np.asarray(f, dtype=float)
        if np.ptp(f) == 0:
            return 0.0
        return max(val, 0.0)
    return val
