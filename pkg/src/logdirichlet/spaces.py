"""Catalog of Ahlfors regular metric-measure spaces.

Three concrete families are supported:

* ``shift``: the full N-shift with the ultrametric ``lambda**-(k-1)`` (k the first
  index where two words differ) and the Bernoulli measure. Nodes are all words
  of a fixed depth, each carrying the measure of its cylinder.
* ``interval``: ``[a, b]`` with the Euclidean metric and Lebesgue measure,
  discretized by Gauss-Legendre quadrature.
* ``circle``: the unit circle with the chordal metric and arc-length measure,
  discretized by the equispaced trapezoid rule.

Balls are closed throughout: ``ball_measure(x, r)`` is the measure of
``{y : d(x, y) <= r}``. On the shift the closed ball of radius ``lambda**-n`` is
exactly the depth-n cylinder around ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from .errors import ParameterDomainError

KINDS = ("shift", "interval", "circle")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadratureScheme:
    """Nodes and positive weights discretizing the measure of a space.

    For shift spaces ``nodes`` is an integer array of shape ``(n, depth)`` with
    symbols in ``1..N``; otherwise it is a float array of coordinates/angles.
    """

    nodes: np.ndarray
    weights: np.ndarray
    level: int

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Space:
    kind: str
    delta: float
    diam: float
    regularity_constant: float
    quadrature: QuadratureScheme
    params: dict = field(default_factory=dict)

    @property
    def nodes(self) -> np.ndarray:
        return self.quadrature.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.quadrature.weights

    @property
    def size(self) -> int:
        return len(self.quadrature)

    @property
    def total_mass(self) -> float:
        if self.kind == "shift":
            return 1.0
        if self.kind == "interval":
            return self.params["b"] - self.params["a"]
        return 2.0 * math.pi

    @cached_property
    def distances(self) -> np.ndarray:
        """Dense matrix of node-to-node distances."""
        return _readonly(_distance_matrix(self))

    @cached_property
    def kernel(self) -> np.ndarray:
        """``d(p, q)**-delta`` for distinct nodes and 0 on coincident pairs."""
        if self.kind == "shift":
            first = _first_difference(self)
            N = self.params["N"]
            # lambda**(delta*(k-1)) == N**(k-1) exactly
            K = np.where(first > 0, float(N) ** (first - 1).clip(min=0), 0.0)
        else:
            d = self.distances
            with np.errstate(divide="ignore"):
                K = np.where(d > 0, d ** (-self.delta), 0.0)
        return _readonly(K)

    def node_point(self, i: int):
        """The i-th node as a point value accepted by :func:`distance`."""
        if self.kind == "shift":
            return tuple(int(s) for s in self.nodes[i])
        return float(self.nodes[i])

    def coordinates(self) -> np.ndarray:
        """Real coordinates of the nodes (shift: position of the cylinder in [0, 1))."""
        if self.kind != "shift":
            return np.asarray(self.nodes, dtype=float)
        N = self.params["N"]
        depth = self.params["depth"]
        scale = float(N) ** -np.arange(1, depth + 1)
        return (self.nodes - 1) @ scale


# ---------------------------------------------------------------------------
# constructors


def make_shift_space(N: int, lam: float, depth: int) -> Space:
    """Full N-shift with ultrametric base ``lam``, discretized at word length ``depth``."""
    if not isinstance(N, (int, np.integer)) or N < 2:
        raise ParameterDomainError(f"shift alphabet size N must be an integer >= 2, got {N!r}")
    if not lam > 1:
        raise ParameterDomainError(f"shift base lambda must exceed 1, got {lam!r}")
    if not isinstance(depth, (int, np.integer)) or depth < 1:
        raise ParameterDomainError(f"shift depth must be an integer >= 1, got {depth!r}")
    N, depth = int(N), int(depth)
    n = N**depth
    idx = np.arange(n)
    digits = np.empty((n, depth), dtype=np.int64)
    for j in range(depth):
        digits[:, depth - 1 - j] = (idx // N**j) % N + 1
    weights = np.full(n, float(N) ** -depth)
    quad = QuadratureScheme(_readonly(digits), _readonly(weights), depth)
    return Space(
        kind="shift",
        delta=math.log(N) / math.log(lam),
        diam=1.0,
        regularity_constant=float(N),
        quadrature=quad,
        params={"N": N, "lambda": float(lam), "depth": depth},
    )


def make_interval_space(a: float, b: float, nodes: int) -> Space:
    """``[a, b]`` with Gauss-Legendre nodes."""
    if not b > a:
        raise ParameterDomainError(f"interval needs b > a, got a={a!r}, b={b!r}")
    if nodes < 2:
        raise ParameterDomainError(f"interval needs at least 2 nodes, got {nodes!r}")
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    half = 0.5 * (b - a)
    pts = a + half * (x + 1.0)
    quad = QuadratureScheme(_readonly(pts), _readonly(half * w), int(nodes))
    return Space(
        kind="interval",
        delta=1.0,
        diam=float(b - a),
        regularity_constant=2.0,
        quadrature=quad,
        params={"a": float(a), "b": float(b), "nodes": int(nodes)},
    )


def make_circle_space(nodes: int) -> Space:
    """Unit circle with the chordal metric and equispaced trapezoid nodes."""
    if nodes < 4:
        raise ParameterDomainError(f"circle needs at least 4 nodes, got {nodes!r}")
    nodes = int(nodes)
    theta = 2.0 * math.pi * np.arange(nodes) / nodes
    w = np.full(nodes, 2.0 * math.pi / nodes)
    quad = QuadratureScheme(_readonly(theta), _readonly(w), nodes)
    return Space(
        kind="circle",
        delta=1.0,
        diam=2.0,
        regularity_constant=math.pi,
        quadrature=quad,
        params={"nodes": nodes},
    )


def make_space(desc: dict[str, Any]) -> Space:
    """Build a space from a flat description (keys: kind, N, lambda, depth, a, b, nodes)."""
    kind = desc.get("kind")
    if kind == "shift":
        return make_shift_space(int(desc["N"]), float(desc["lambda"]), int(desc["depth"]))
    if kind == "interval":
        return make_interval_space(float(desc["a"]), float(desc["b"]), int(desc["nodes"]))
    if kind == "circle":
        return make_circle_space(int(desc["nodes"]))
    raise ParameterDomainError(f"unknown space kind {kind!r}; expected one of {KINDS}")


# ---------------------------------------------------------------------------
# metric and measure


def _check_point(space: Space, p):
    if space.kind == "shift":
        if isinstance(p, (str, bytes)) or not isinstance(p, (Sequence, np.ndarray)):
            raise TypeError(f"shift points are symbol sequences, got {type(p).__name__}")
        w = tuple(int(s) for s in p)
        N = space.params["N"]
        if any(s < 1 or s > N for s in w):
            raise ParameterDomainError(f"word {w} has symbols outside 1..{N}")
        return w
    if isinstance(p, (Sequence, np.ndarray)) and not np.isscalar(p):
        raise TypeError(f"{space.kind} points are real numbers, got {type(p).__name__}")
    x = float(p)
    if space.kind == "interval":
        a, b = space.params["a"], space.params["b"]
        if not a <= x <= b:
            raise ParameterDomainError(f"coordinate {x} outside [{a}, {b}]")
        return x
    return x % (2.0 * math.pi)


def distance(space: Space, p, q) -> float:
    p = _check_point(space, p)
    q = _check_point(space, q)
    if space.kind == "shift":
        if len(p) != len(q):
            raise ParameterDomainError("shift words must have equal length")
        for k, (s, t) in enumerate(zip(p, q), start=1):
            if s != t:
                return space.params["lambda"] ** -(k - 1)
        return 0.0
    if space.kind == "interval":
        return abs(p - q)
    return 2.0 * abs(math.sin(0.5 * (p - q)))


def distances_from(space: Space, p) -> np.ndarray:
    """Distances from ``p`` to every node."""
    p = _check_point(space, p)
    if space.kind == "shift":
        nodes = space.nodes
        if len(p) < nodes.shape[1]:
            raise ParameterDomainError("shift point shorter than the node depth")
        w = np.asarray(p[: nodes.shape[1]])
        neq = nodes != w
        any_neq = neq.any(axis=1)
        first = np.where(any_neq, neq.argmax(axis=1) + 1, 0)
        lam = space.params["lambda"]
        return np.where(any_neq, lam ** -(first - 1.0), 0.0)
    if space.kind == "interval":
        return np.abs(space.nodes - p)
    return 2.0 * np.abs(np.sin(0.5 * (space.nodes - p)))


def _first_difference(space: Space) -> np.ndarray:
    """1-based index of the first differing symbol for every node pair (0 on the diagonal)."""
    nodes = space.nodes
    n, depth = nodes.shape
    first = np.zeros((n, n), dtype=np.int64)
    for j in range(depth):
        col = nodes[:, j]
        mask = (first == 0) & (col[:, None] != col[None, :])
        first[mask] = j + 1
    return first


def _distance_matrix(space: Space) -> np.ndarray:
    if space.kind == "shift":
        first = _first_difference(space)
        lam = space.params["lambda"]
        return np.where(first > 0, lam ** -(first - 1.0), 0.0)
    x = space.nodes
    if space.kind == "interval":
        return np.abs(x[:, None] - x[None, :])
    return 2.0 * np.abs(np.sin(0.5 * (x[:, None] - x[None, :])))


def ball_measure(space: Space, center, r: float, use_quadrature: bool = False) -> float:
    """Measure of the closed ball ``{y : d(center, y) <= r}``.

    Closed forms are used unless ``use_quadrature`` is set, in which case the
    node weights inside the ball are summed.
    """
    if r <= 0:
        raise ParameterDomainError(f"ball radius must be positive, got {r}")
    if use_quadrature:
        d = distances_from(space, center)
        return float(space.weights[d <= r].sum())
    c = _check_point(space, center)
    if space.kind == "shift":
        N, lam = space.params["N"], space.params["lambda"]
        # smallest j >= 0 with lam**-j <= r
        j = max(0, math.ceil(math.log(1.0 / r) / math.log(lam) - 1e-12))
        return float(N) ** -j
    if space.kind == "interval":
        a, b = space.params["a"], space.params["b"]
        return max(0.0, min(b, c + r) - max(a, c - r))
    return 4.0 * math.asin(min(r, 2.0) / 2.0)


@dataclass(frozen=True)
class RegularityReport:
    estimated_C: float
    radii: np.ndarray
    min_ratio: np.ndarray
    max_ratio: np.ndarray
    sample_count: int

    def rows(self):
        return [(float(r), float(lo), float(hi)) for r, lo, hi in zip(self.radii, self.min_ratio, self.max_ratio)]


def sample_centers(space: Space, count: int, seed: int = 0) -> list:
    """Deterministic random centers (node points for shifts, uniform draws otherwise)."""
    rng = np.random.default_rng(seed)
    if space.kind == "shift":
        depth = space.params["depth"]
        N = space.params["N"]
        words = rng.integers(1, N + 1, size=(count, depth))
        return [tuple(int(s) for s in w) for w in words]
    if space.kind == "interval":
        return list(rng.uniform(space.params["a"], space.params["b"], size=count))
    return list(rng.uniform(0.0, 2.0 * math.pi, size=count))


def verify_ahlfors(space: Space, sample_count: int, radii: Sequence[float], seed: int = 0) -> RegularityReport:
    """Min/max of ``mu(B(x, r)) / r**delta`` over sampled centers for each radius."""
    if sample_count < 1:
        raise ParameterDomainError("sample_count must be >= 1")
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0) or np.any(radii > space.diam * (1 + 1e-12)):
        raise ParameterDomainError(f"radii must lie in (0, {space.diam}]")
    centers = sample_centers(space, sample_count, seed)
    lo = np.empty(len(radii))
    hi = np.empty(len(radii))
    for i, r in enumerate(radii):
        ratios = [ball_measure(space, c, r) / r**space.delta for c in centers]
        lo[i], hi[i] = min(ratios), max(ratios)
    C = max(1.0, float(hi.max()), float(1.0 / lo.min()))
    return RegularityReport(C, radii, lo, hi, sample_count)


def covering_number(space: Space, radius: float) -> int:
    """Size of a greedy farthest-point cover of the nodes by closed balls of ``radius``.

    For a shift at ``radius = lambda**-n`` with ``n <= depth`` this is exactly ``N**n``.
    """
    if radius <= 0:
        raise ParameterDomainError(f"covering radius must be positive, got {radius}")
    if radius > space.diam * (1 + 1e-12):
        raise ParameterDomainError(f"covering radius must not exceed diam={space.diam}")
    D = space.distances
    tol = 1e-12 * space.diam
    nearest = D[0].copy()
    count = 1
    while True:
        far = int(np.argmax(nearest))
        if nearest[far] <= radius + tol:
            return count
        count += 1
        np.minimum(nearest, D[far], out=nearest)
