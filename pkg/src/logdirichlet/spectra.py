"""Heat traces, trace-class thresholds and singular-value profiles.

Eigenvalues that grow like ``c log n`` make ``sum_n exp(-t lambda_n)`` behave like
``sum_n n**(-t c)``, which converges exactly when ``t > 1/c``. The threshold is
estimated from a fit of the multiplicity-expanded eigenvalues against ``log n``;
partial sums are classified by increment tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DataError, ParameterDomainError, UndeterminedError
from .form_engine import SpectralModel

__all__ = [
    "HeatTraceReport",
    "heat_trace",
    "classify_increments",
    "GrowthFit",
    "log_growth_fit",
    "trace_threshold",
    "SingularProfile",
    "singular_value_profile",
    "sqrt_resolvent_ratio",
]

EXPANSION_CAP = 10**6
KERNEL_TOL = 1e-8
DEFAULT_ORACLE_LEVELS = {"shift": 40, "interval": 20000, "circle": 20000}


@dataclass(frozen=True)
class HeatTraceReport:
    t_grid: np.ndarray
    levels: np.ndarray
    partial_sums: np.ndarray  # shape (len(t_grid), len(levels))
    verdicts: tuple
    verdict_basis: tuple
    t0_estimate: float
    t0_exact: float | None
    fit: dict = field(default_factory=dict)

    @property
    def traces(self) -> np.ndarray:
        """Partial sums at the deepest truncation level, one per ``t``."""
        return self.partial_sums[:, -1]

    def rows(self):
        out = []
        for i, t in enumerate(self.t_grid):
            for j, lev in enumerate(self.levels):
                out.append((float(t), int(lev), float(self.partial_sums[i, j]), self.verdicts[i]))
        return out


def _groups(model: SpectralModel, max_level: int | None):
    """Eigenvalue groups ``(lambda_i, m_i)`` for ``i = 0..L``; group 0 is the lowest eigenvalue."""
    oracle = model.oracle
    if oracle is not None and getattr(oracle, "family", None) in DEFAULT_ORACLE_LEVELS:
        L = DEFAULT_ORACLE_LEVELS[oracle.family] if max_level is None else int(max_level)
        lam, mult = oracle.groups(L)
        return np.concatenate([[0.0], lam]), np.concatenate([[1.0], mult]), oracle
    lam = np.asarray(model.eigenvalues, dtype=float)
    mult = np.asarray([float(m) for m in model.multiplicities])
    if max_level is not None:
        lam, mult = lam[: max_level + 1], mult[: max_level + 1]
    return lam, mult, None


def classify_increments(inc: np.ndarray, total: float) -> tuple[str, str]:
    """Classify a series from its positive increments.

    Rules, applied in order: a final increment below ``1e-10`` of the sum means
    converged; ten nondecreasing increments mean diverging; a constant ratio over
    the last ten increments decides by d'Alembert; otherwise the median Raabe
    statistic ``n (I_n / I_{n+1} - 1)`` over the last ten increments decides (above
    1.1 converged, below 0.9 diverging). Anything else is undetermined.
    """
    inc = np.asarray(inc, dtype=float)
    if len(inc) < 12:
        return "undetermined", "too-few-levels"
    if inc[-1] < 1e-10 * total:
        return "converged", "increment-below-tolerance"
    last = inc[-10:]
    if np.all(np.diff(last) >= 0):
        return "diverging", "increments-nondecreasing"
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = inc[-11:][1:] / inc[-11:][:-1]
    if np.all(np.isfinite(ratios)) and np.ptp(ratios) <= 1e-12 * ratios.max():
        return ("converged" if ratios[-1] < 1.0 else "diverging"), "ratio-test"
    n = np.arange(len(inc) - 10, len(inc), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        raabe = n * (inc[-11:-1] / inc[-10:] - 1.0)
    stat = float(np.median(raabe))
    if stat > 1.1:
        return "converged", "raabe"
    if stat < 0.9:
        return "diverging", "raabe"
    return "undetermined", "raabe-inconclusive"


def heat_trace(model: SpectralModel, t_grid: Sequence[float], levels: Sequence[int] | None = None) -> HeatTraceReport:
    """Partial sums ``sum_{i <= L} m_i exp(-t lambda_i)`` over truncation levels ``L``.

    Level ``L`` counts eigenvalue groups beyond the lowest one, so level 0 is the
    kernel alone. Closed-form models are extended analytically to the deepest
    requested level; for shift oracles the verdict is the exact ratio test with
    ratio ``N exp(-t (1 - 1/N))``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(t_grid <= 0):
        raise ParameterDomainError("t grid must be non-empty and positive")
    if len(model.eigenvalues) == 0:
        raise DataError("empty spectral model")
    max_level = None if levels is None else int(max(levels))
    lam, mult, oracle = _groups(model, max_level)
    avail = len(lam) - 1
    if levels is None:
        levels = np.arange(avail + 1)
    levels = np.asarray(sorted(set(int(l) for l in levels if 0 <= l <= avail)), dtype=int)
    if levels.size == 0:
        raise DataError("no requested level is available in the model")
    sums = np.empty((len(t_grid), len(levels)))
    verdicts, basis = [], []
    for i, t in enumerate(t_grid):
        terms = mult * np.exp(-t * lam)
        csum = np.cumsum(terms)
        sums[i] = csum[levels]
        if oracle is not None and oracle.family == "shift":
            N = oracle.params["N"]
            r = N * math.exp(-t * (1.0 - 1.0 / N))
            verdicts.append("converged" if r < 1 else ("diverging" if r > 1 else "undetermined"))
            basis.append("exact-ratio-test")
        else:
            v, b = classify_increments(terms[1:], float(csum[-1]))
            verdicts.append(v)
            basis.append(b)
    fit = {}
    t0_est = float("nan")
    try:
        fit_model = model
        if oracle is not None:
            fit_model = _oracle_fit_model(model)
        gf = log_growth_fit(fit_model)
        t0_est = 1.0 / gf.c
        fit = gf._asdict()
    except (UndeterminedError, DataError) as exc:
        fit = {"error": str(exc)}
    t0_exact = oracle.t0_exact if oracle is not None else None
    return HeatTraceReport(t_grid, levels, sums, tuple(verdicts), tuple(basis), t0_est, t0_exact, fit)


def _oracle_fit_model(model: SpectralModel) -> SpectralModel:
    """Oracle truncation with as many complete groups as fit under the expansion cap."""
    oracle = model.oracle
    _, mult = oracle.groups(64 if oracle.family == "shift" else 50000)
    with np.errstate(over="ignore"):
        total = 1.0 + np.cumsum(mult)
    count = int(np.searchsorted(total, EXPANSION_CAP, side="right"))
    return oracle.model(count)


class GrowthFit(NamedTuple):
    c: float
    b: float
    residual: float
    r_squared: float
    count: int


def log_growth_fit(model: SpectralModel, tail_start: int = 10, cap: int = EXPANSION_CAP) -> GrowthFit:
    """Fit ``lambda_n ~ c log n + b`` on the multiplicity-expanded ascending sequence.

    ``n`` is 1-based (the kernel eigenvalue is ``n = 1``). Only the tail
    ``n >= tail_start`` enters, with weights ``1/n`` so that every octave of indices
    carries comparable weight. ``residual`` is the weighted RMS residual.
    """
    lam = model.expanded(cap)
    if len(lam) < 50:
        raise DataError(f"log-growth fit needs at least 50 expanded eigenvalues, got {len(lam)}")
    n = np.arange(1, len(lam) + 1, dtype=float)
    sel = n >= tail_start
    x, y, w = np.log(n[sel]), lam[sel], 1.0 / n[sel]
    X = np.column_stack([x, np.ones_like(x)])
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    c, b = float(coef[0]), float(coef[1])
    res = y - (c * x + b)
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    ss_res = float(np.sum(w * res**2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    residual = math.sqrt(ss_res / np.sum(w))
    diagnostics = {"c": c, "b": b, "r_squared": r2, "residual": residual, "count": int(sel.sum())}
    if not (c > 0 and r2 >= 0.9):
        raise UndeterminedError("logarithmic growth fit is degenerate", diagnostics=diagnostics)
    return GrowthFit(c, b, residual, r2, int(sel.sum()))


def trace_threshold(model: SpectralModel) -> float:
    """Estimated trace-class threshold ``1/c`` from :func:`log_growth_fit`."""
    return 1.0 / log_growth_fit(model).c


@dataclass(frozen=True)
class SingularProfile:
    n: np.ndarray
    s_n: np.ndarray
    li_bound: float
    tail_ratio: float

    def rows(self):
        return [(int(i), float(s)) for i, s in zip(self.n, self.s_n)]


def singular_value_profile(model: SpectralModel, max_index: int | None = None, tail_start: int = 10) -> SingularProfile:
    """Singular values ``s_n = 1/(1 + lambda_n)`` of the resolvent (1-based, nonincreasing).

    ``li_bound`` is ``max_n s_n log(n + 2)``; ``tail_ratio`` is the max/min of that
    product over ``n >= tail_start``.
    """
    lam = model.head(max_index) if max_index is not None else model.expanded(EXPANSION_CAP)
    if len(lam) == 0:
        raise DataError("empty spectral model")
    s = 1.0 / (1.0 + np.sort(lam))
    n = np.arange(1, len(s) + 1)
    prod = s * np.log(n + 2.0)
    tail = prod[n >= tail_start]
    ratio = float(tail.max() / tail.min()) if len(tail) else float("nan")
    return SingularProfile(n, s, float(prod.max()), ratio)


def sqrt_resolvent_ratio(model: SpectralModel, max_index: int | None = None) -> np.ndarray:
    """``s_n((1+Delta)^-1) / s_n((1+Delta^1/2)^-1)**2 = (1 + sqrt(lambda))**2 / (1 + lambda)``.

    The ratio lies in ``[1, 2]``, so the square of the second resolvent lies in the
    same ideal as the first.
    """
    lam = model.head(max_index) if max_index is not None else model.expanded(EXPANSION_CAP)
    lam = np.clip(np.sort(lam), 0.0, None)
    s1 = 1.0 / (1.0 + lam)
    s_half = 1.0 / (1.0 + np.sqrt(lam))
    return s1 / s_half**2
