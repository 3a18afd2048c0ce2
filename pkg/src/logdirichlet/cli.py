"""Batch command-line frontend.

Each subcommand reads an optional configuration file (see :mod:`logdirichlet.config`),
runs one experiment and writes CSV/JSON reports (and optionally SVG plots) into the
output directory.

Exit status: 0 on success, 1 on a numerical failure or a violated invariant (a
``diagnostic.json`` is written), 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import closed_forms as cf
from . import conformal as conf
from . import dini
from . import form_engine as fe
from . import quadrature as quad
from . import reports
from . import spaces as sp
from . import spectra
from .config import TASKS, ConfigError, ExperimentConfig, default_config, load_config
from .errors import DataError, DomainError, ParameterDomainError

log = logging.getLogger("logdirichlet")


class HardFailure(Exception):
    """An invariant checked by a task did not hold."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# helpers


def _space_summary(space: sp.Space) -> dict:
    return {"kind": space.kind, **{k: v for k, v in space.params.items()}, "nodes": space.size}


def _function(cfg: ExperimentConfig, space: sp.Space, prefix: str = "function", default: str | None = None):
    """Named test function from the catalog, as a callable accepted by the modules."""
    if default is None:
        default = {"shift": "cylinder", "interval": "identity", "circle": "cosine"}[space.kind]
    name = cfg.get_str(prefix, default, choices=("identity", "power", "cosine", "cylinder"))
    desc = {"name": name}
    if name == "cylinder":
        if space.kind != "shift":
            raise ConfigError(f"{prefix}=cylinder needs a shift space", cfg.line_of("task", prefix), cfg.path)
        word = tuple(cfg.get_list("word", [1], cast=int))
        desc["word"] = list(word)
        return (lambda w: 1.0 if tuple(w[: len(word)]) == word else 0.0), desc
    if space.kind == "shift":
        raise ConfigError(f"{prefix}={name} needs a real coordinate", cfg.line_of("task", prefix), cfg.path)
    if name == "identity":
        return (lambda x: np.asarray(x, dtype=float)), desc
    if name == "power":
        x0 = cfg.get_float("x0", 0.5)
        alpha = cfg.get_float("alpha", 0.5)
        desc.update(x0=x0, alpha=alpha)
        return dini.holder_profile(x0, alpha), desc
    k = cfg.get_int("k", 1, minimum=0)
    desc["k"] = k
    return (lambda x: np.cos(k * np.asarray(x, dtype=float))), desc


def _node_values(space: sp.Space, f) -> np.ndarray:
    if space.kind == "shift":
        return np.array([f(space.node_point(i)) for i in range(space.size)], dtype=float)
    return np.asarray(f(space.nodes), dtype=float)


def _galerkin(cfg: ExperimentConfig, space: sp.Space):
    """Assemble and solve the Galerkin problem described by ``[task]``; returns (model, oracle, info)."""
    kinds = {"shift": ("cylinder", "haar", "nodal"), "interval": ("legendre", "nodal"), "circle": ("fourier", "nodal")}
    basis_name = cfg.get_str("basis", kinds[space.kind][0], choices=kinds[space.kind])
    tol = cfg.tolerance("multiplicity", 1e-6)
    oracle = None
    if basis_name == "nodal":
        basis = fe.nodal_basis(space)
    elif space.kind == "shift":
        depth = space.params["depth"]
        level = cfg.get_int("level", depth, minimum=1)
        if level > depth:
            raise ConfigError(f"level must be <= depth {depth}", cfg.line_of("task", "level"), cfg.path)
        basis = fe.cylinder_basis(space, level) if basis_name == "cylinder" else cf.haar_basis(space, level - 1)
        oracle = cf.shift_spectrum(space.params["N"], level - 1)
    elif space.kind == "interval":
        deg = cfg.get_int("max_degree", 10, minimum=0)
        basis = cf.legendre_basis(space, deg)
        oracle = cf.interval_spectrum(deg)
    else:
        K = cfg.get_int("max_freq", 8, minimum=0)
        basis = cf.fourier_basis(space, K)
        oracle = cf.circle_spectrum(K, max(512, 8 * K))
    exact = cfg.get_bool("exact", space.kind == "shift" and basis_name != "nodal")
    method = cfg.get_str("method", "auto", choices=("auto", "pairs", "split"))
    fm = fe.assemble_form_matrix(space, basis, method=method, exact=exact)
    model = fe.solve_spectrum(fm, multiplicity_tol=tol)
    certified = False
    if exact and fm.E_exact is not None:
        model = fe.certify_spectrum(fm, model)
        certified = True
    info = {"basis": basis_name, "basis_size": basis.size, "method": fm.method, "certified": certified}
    return model, oracle, info


def _check_kernel(model) -> None:
    lam0, m0 = float(model.eigenvalues[0]), int(model.multiplicities[0])
    if abs(lam0) > spectra.KERNEL_TOL or m0 != 1:
        raise HardFailure(
            "kernel is not exactly the constants",
            {"lowest_eigenvalue": lam0, "lowest_multiplicity": m0},
        )


def _compare_to_oracle(model, oracle, tol: float) -> float:
    n = len(oracle.eigenvalues)
    diag = {"galerkin_groups": len(model.eigenvalues), "oracle_groups": n}
    if len(model.eigenvalues) != n:
        raise HardFailure("Galerkin and closed-form spectra have different group counts", diag)
    mult_ok = all(int(a) == int(b) for a, b in zip(model.multiplicities, oracle.multiplicities))
    err = float(np.max(np.abs(np.asarray(model.eigenvalues, float) - np.asarray(oracle.eigenvalues, float))))
    diag.update(max_error=err, tolerance=tol, multiplicities_match=mult_ok)
    if not mult_ok or err > tol:
        raise HardFailure("Galerkin spectrum disagrees with the closed form", diag)
    return err


def _oracle_for(cfg: ExperimentConfig, space: sp.Space, default_truncation: dict):
    truncation = cfg.get_int("truncation", default_truncation[space.kind], minimum=1)
    params = {"N": space.params["N"]} if space.kind == "shift" else {}
    return cf.oracle_model(space.kind, truncation, **params), truncation


def _spectrum_model(cfg: ExperimentConfig, space: sp.Space, default_truncation: dict):
    source = cfg.get_str("source", "oracle", choices=("oracle", "galerkin"))
    if source == "oracle":
        model, truncation = _oracle_for(cfg, space, default_truncation)
        return model, {"source": "closed-form", "truncation": truncation}
    model, _, info = _galerkin(cfg, space)
    return model, {"source": "galerkin", **info}


def _plot(enabled: bool, out: Path, name: str, series: dict, **kw) -> list[str]:
    if not enabled:
        return []
    from .plotting import emit_plot

    try:
        emit_plot(series, out / name, **kw)
    except ImportError:
        log.warning("matplotlib is not installed; skipping %s", name)
        return []
    except (OSError, ValueError) as exc:
        log.warning("could not write plot %s: %s", name, exc)
        return []
    return [name]


# ---------------------------------------------------------------------------
# tasks


def task_spectrum(cfg: ExperimentConfig, out: Path, plot: bool) -> list[str]:
    space = sp.make_space(cfg.space)
    model, oracle, info = _galerkin(cfg, space)
    _check_kernel(model)
    header = ("index", "eigenvalue", "multiplicity")
    reports.write_csv(out / "spectrum.csv", header, model.rows())
    files = ["spectrum.csv"]
    tolerances = {"multiplicity": cfg.tolerance("multiplicity", 1e-6)}
    summary = {"task": "spectrum", "source": "galerkin", "space": _space_summary(space), **info}
    if oracle is not None:
        tol = cfg.tolerance("oracle", 1e-8)
        tolerances["oracle"] = tol
        err = _compare_to_oracle(model, oracle, tol)
        reports.write_csv(out / "oracle.csv", header, oracle.rows())
        files.append("oracle.csv")
        summary["oracle"] = {"source": "closed-form", "max_error": err}
    summary["tolerances"] = tolerances
    summary["groups"] = len(model.eigenvalues)
    summary["total_multiplicity"] = model.total
    reports.write_json(out / "spectrum.json", summary)
    files.append("spectrum.json")
    lam = model.expanded()
    files += _plot(plot, out, "spectrum.svg", {"eigenvalues": (np.arange(1, len(lam) + 1), lam)},
                   xlabel="index n", ylabel="eigenvalue", logx=True, step=True)
    return files


HEAT_TRUNCATION = spectra.DEFAULT_ORACLE_LEVELS
THRESHOLD_TRUNCATION = {"shift": 14, "interval": 500, "circle": 500}


def task_heat_trace(cfg: ExperimentConfig, out: Path, plot: bool) -> list[str]:
    space = sp.make_space(cfg.space)
    model, info = _spectrum_model(cfg, space, HEAT_TRUNCATION)
    t_grid = cfg.get_list("t", [2.0])
    avail = info.get("truncation", len(model.eigenvalues) - 1)
    default_levels = sorted(set(int(v) for v in np.unique(np.geomspace(1, avail, 12).round())) | {0, avail})
    levels = cfg.get_list("levels", default_levels, cast=int)
    if info["source"] == "closed-form":
        levels = sorted(set(levels) | {avail})
    rep = spectra.heat_trace(model, t_grid, levels)
    reports.write_csv(out / "heat_trace.csv", ("t", "level", "partial_sum", "verdict"), rep.rows())
    fit = {k: rep.fit[k] for k in ("c", "b", "residual", "r_squared", "count") if k in rep.fit}
    fit = {"slope": fit.get("c"), "intercept": fit.get("b"), "residual": fit.get("residual"),
           "r_squared": fit.get("r_squared"), "count": fit.get("count")} if fit else {"error": rep.fit.get("error")}
    traces = [
        {"t": float(t), "trace": float(tr), "level": int(rep.levels[-1]), "verdict": v, "verdict_basis": b}
        for t, tr, v, b in zip(rep.t_grid, rep.traces, rep.verdicts, rep.verdict_basis)
    ]
    summary = {
        "task": "heat-trace",
        "space": _space_summary(space),
        **info,
        "trace": traces[0]["trace"],
        "traces": traces,
        "t0_estimate": rep.t0_estimate,
        "t0_exact": rep.t0_exact,
        "fit": fit,
    }
    reports.write_json(out / "heat_trace.json", summary)
    files = ["heat_trace.csv", "heat_trace.json"]
    series = {f"t={t:g}": (np.maximum(rep.levels, 1), rep.partial_sums[i]) for i, t in enumerate(rep.t_grid)}
    files += _plot(plot, out, "heat_trace.svg", series, xlabel="truncation level", ylabel="partial sum", logx=True)
    return files


def task_threshold(cfg: ExperimentConfig, out: Path, plot: bool) -> list[str]:
    space = sp.make_space(cfg.space)
    model, info = _spectrum_model(cfg, space, THRESHOLD_TRUNCATION)
    gf = spectra.log_growth_fit(model)
    t0 = 1.0 / gf.c
    exact = model.oracle.t0_exact if model.oracle is not None else None
    summary = {
        "task": "threshold",
        "space": _space_summary(space),
        **info,
        "t0_estimate": t0,
        "t0_exact": exact,
        "relative_error": abs(t0 - exact) / exact if exact else None,
        "fit": {"slope": gf.c, "intercept": gf.b, "residual": gf.residual, "r_squared": gf.r_squared, "count": gf.count},
    }
    offset = cfg.get_float("offset", 0.1)
    ref = exact if exact is not None else t0
    if model.oracle is not None and ref - offset > 0:
        heat_model = cf.oracle_model(space.kind, HEAT_TRUNCATION[space.kind], **model.oracle.params)
        rep = spectra.heat_trace(heat_model, [ref - offset, ref + offset])
        summary["verdicts"] = {"below": rep.verdicts[0], "above": rep.verdicts[1], "offset": offset}
    reports.write_json(out / "threshold.json", summary)
    files = ["threshold.json"]
    lam = model.expanded(spectra.EXPANSION_CAP)
    n = np.arange(1, len(lam) + 1)
    idx = np.unique(np.geomspace(1, len(lam), 200).astype(int)) - 1
    files += _plot(plot, out, "threshold.svg",
                   {"eigenvalues": (n[idx], lam[idx]), "fit": (n[idx], gf.c * np.log(n[idx]) + gf.b)},
                   xlabel="index n", ylabel="eigenvalue", logx=True)
    return files


def task_dini(cfg: ExperimentConfig, out: Path, plot: bool) -> list[str]:
    space = sp.make_space(cfg.space)
    f, desc = _function(cfg, space, default="identity" if space.kind != "shift" else "cylinder")
    m = cfg.get_int("m", 4, minimum=1)
    prof = dini.modulus_of_continuity(space, _node_values(space, f), m=m, seed=cfg.seed)
    reports.write_csv(out / "dini.csv", ("t", "omega"), prof.rows())
    summary = {
        "task": "dini",
        "space": _space_summary(space),
        "function": desc,
        "m": m,
        "theta": prof.theta,
        "dini_constant": prof.dini_constant,
        "sup_norm": prof.sup_norm,
        "dini_norm": prof.dini_norm,
        "geometric_sum": prof.geometric_sum,
        "sample_count": prof.sample_count,
        "seed": cfg.seed,
    }
    reports.write_json(out / "dini.json", summary)
    files = ["dini.csv", "dini.json"]
    files += _plot(plot, out, "dini.svg", {"omega": (prof.t_grid, prof.omega)}, xlabel="t", ylabel="omega(t)",
                   logx=True, logy=True)
    return files


def task_commutator(cfg: ExperimentConfig, out: Path, plot: bool) -> list[str]:
    space = sp.make_space(cfg.space)
    h, desc = _function(cfg, space)
    tol = cfg.tolerance("commutator", 1e-3)
    if space.kind == "shift":
        depth = space.params["depth"]
        sizes = cfg.get_list("levels", list(range(1, depth + 1)), cast=int)
        make = lambda L: fe.cylinder_basis(space, L)
    elif space.kind == "interval":
        sizes = cfg.get_list("degrees", [6, 12, 24], cast=int)
        make = lambda d: cf.legendre_basis(space, d)
    else:
        sizes = cfg.get_list("freqs", [4, 8, 16], cast=int)
        make = lambda K: cf.fourier_basis(space, K)
    exact = cfg.get_bool("exact", space.kind == "shift")
    rows = []
    for s in sizes:
        rep = dini.commutator_report(space, h, make(s), exact=exact)
        rows.append({"size": int(s), **{k: rep[k] for k in ("basis_size", "commutator_norm", "kernel_norm", "defect", "exact")}})
    reports.write_csv(
        out / "commutator.csv",
        ("size", "basis_size", "commutator_norm", "kernel_norm", "defect"),
        [(r["size"], r["basis_size"], r["commutator_norm"], r["kernel_norm"], r["defect"]) for r in rows],
    )
    norms = np.array([r["commutator_norm"] for r in rows])
    summary = {
        "task": "commutator",
        "space": _space_summary(space),
        "function": desc,
        "tolerance": tol,
        "reports": rows,
        "trend": conf.growth_verdict(norms, "log"),
    }
    reports.write_json(out / "commutator.json", summary)
    worst = max(r["defect"] for r in rows)
    if worst > tol:
        raise HardFailure("commutator defect exceeds tolerance", {"max_defect": worst, "tolerance": tol})
    files = ["commutator.csv", "commutator.json"]
    files += _plot(plot, out, "commutator.svg", {"commutator norm": ([r["basis_size"] for r in rows], norms)},
                   xlabel="basis size", ylabel="norm")
    return files


def task_conformal(cfg: ExperimentConfig, out: Path, plot: bool) -> list[str]:
    a = complex(cfg.get_float("a", 0.5), cfg.get_float("a_imag", 0.0))
    rotation = cfg.get_float("rotation", 0.0)
    g = conf.MobiusMap(a, rotation)
    freq_list = cfg.get_list("freq_list", [32, 64, 128, 256], cast=int)
    alpha = cfg.get_float("alpha", 0.5)
    kinds = cfg.get_list("kinds", ["log", "fractional"], cast=str)
    kinds = [k.strip() for k in kinds]
    bad = [k for k in kinds if k not in ("log", "fractional")]
    if bad:
        raise ConfigError(f"unknown kind {bad[0]!r}", cfg.line_of("task", "kinds"), cfg.path)
    samples = cfg.get_int("samples", 64, minimum=2)
    unit_freq = cfg.get_int("unitarity_freq", 16, minimum=1)
    unit_nodes = cfg.get_int("unitarity_nodes", 512, minimum=4)
    identity = conf.conformal_identity_defect(g, samples, seed=cfg.seed)
    unitarity = conf.unitarity_defect(conf.unitary_matrix(g, unit_freq, unit_nodes))
    experiments, rows = [], []
    for kind in kinds:
        norms = conf.commutator_growth(g, kind, freq_list, alpha=alpha)
        exp = {"kind": kind, "freq_list": freq_list, "norms": norms, "verdict": conf.growth_verdict(norms, kind)}
        if kind == "fractional":
            exp["alpha"] = alpha
        experiments.append(exp)
        rows += [(kind, K, v) for K, v in zip(freq_list, norms)]
    reports.write_csv(out / "conformal.csv", ("kind", "K", "norm"), rows)
    summary = {
        "task": "conformal",
        "map": {"a": [a.real, a.imag], "rotation": rotation},
        "freq_list": freq_list,
        "identity_defect": identity,
        "unitarity_defect": unitarity,
        "unitarity_freq": unit_freq,
        "experiments": experiments,
    }
    reports.write_json(out / "conformal.json", summary)
    id_tol = cfg.tolerance("identity", 1e-10)
    un_tol = cfg.tolerance("unitarity", 1e-6)
    if identity > id_tol or unitarity > un_tol:
        raise HardFailure(
            "conformal invariants violated",
            {"identity_defect": identity, "identity_tolerance": id_tol, "unitarity_defect": unitarity, "unitarity_tolerance": un_tol},
        )
    files = ["conformal.csv", "conformal.json"]
    series = {e["kind"]: (freq_list, e["norms"]) for e in experiments}
    files += _plot(plot, out, "conformal.svg", series, xlabel="K", ylabel="commutator norm", logx=True, logy=True)
    return files


def task_verify_ahlfors(cfg: ExperimentConfig, out: Path, plot: bool) -> list[str]:
    space = sp.make_space(cfg.space)
    samples = cfg.get_int("samples", 100, minimum=1)
    radii = cfg.get_list("radii", list(space.diam * np.geomspace(1e-3, 1.0, 7)))
    rep = sp.verify_ahlfors(space, samples, radii, seed=cfg.seed)
    reports.write_csv(out / "ahlfors.csv", ("radius", "min_ratio", "max_ratio"), rep.rows())
    summary = {
        "task": "verify-ahlfors",
        "space": _space_summary(space),
        "estimated_C": rep.estimated_C,
        "regularity_constant": space.regularity_constant,
        "delta": space.delta,
        "diam": space.diam,
        "sample_count": samples,
        "seed": cfg.seed,
    }
    failures = []
    if cfg.get_bool("lemmas", True):
        centers = sp.sample_centers(space, samples, cfg.seed)
        lem_radii = [r for r in radii if r < space.diam]
        checks = quad.lemma_checks(space, centers, lem_radii)
        lemmas = {
            "small_ball": [c.as_dict() for c in checks["small_ball"]],
            "tail": [c.as_dict() for c in checks["tail"]],
            "annulus": checks["annulus"].as_dict(),
            "log_tail": checks["log_tail"],
        }
        summary["lemmas"] = lemmas
        all_checks = checks["small_ball"] + checks["tail"] + [checks["annulus"]]
        failures += [c.name for c in all_checks if not c.holds]
        if not checks["log_tail"]["holds"]:
            failures.append("log_tail")
    reports.write_json(out / "ahlfors.json", summary)
    if rep.estimated_C > space.regularity_constant * (1 + 1e-9):
        failures.append("regularity_constant")
    if failures:
        raise HardFailure("regularity estimates violated", {"failed": failures, "estimated_C": rep.estimated_C})
    files = ["ahlfors.csv", "ahlfors.json"]
    files += _plot(plot, out, "ahlfors.svg",
                   {"min ratio": (rep.radii, rep.min_ratio), "max ratio": (rep.radii, rep.max_ratio)},
                   xlabel="radius", ylabel="mu(B) / r^delta", logx=True)
    return files


TASK_RUNNERS = {
    "spectrum": task_spectrum,
    "heat-trace": task_heat_trace,
    "threshold": task_threshold,
    "dini": task_dini,
    "commutator": task_commutator,
    "conformal": task_conformal,
    "verify-ahlfors": task_verify_ahlfors,
}


# ---------------------------------------------------------------------------
# entry points


def run_config(cfg: ExperimentConfig, out: str | Path | None = None, plot: bool = False) -> int:
    """Run one experiment; returns the exit status."""
    out = Path(out if out is not None else cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        files = TASK_RUNNERS[cfg.task](cfg, out, plot)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParameterDomainError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (HardFailure, ArithmeticError, DataError, np.linalg.LinAlgError) as exc:
        diag = {
            "task": cfg.task,
            "error": type(exc).__name__,
            "message": str(exc),
            "diagnostics": getattr(exc, "diagnostics", None) or {},
        }
        if hasattr(exc, "pivot"):
            diag["diagnostics"]["pivot"] = exc.pivot
        reports.write_json(out / "diagnostic.json", diag, canonical=False)
        print(f"failure: {exc} (see {out / 'diagnostic.json'})", file=sys.stderr)
        return 1
    for name in files:
        print(out / name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logdirichlet", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    common.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
    common.add_argument("--plot", action="store_true", help="also write SVG plots (needs matplotlib)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="task", required=True, metavar="TASK")
    helps = {
        "spectrum": "Galerkin spectrum compared with the closed form",
        "heat-trace": "heat-trace partial sums and convergence verdicts",
        "threshold": "trace-class threshold from logarithmic eigenvalue growth",
        "dini": "modulus of continuity and Dini norm of a test function",
        "commutator": "commutator with a multiplication operator against its kernel operator",
        "conformal": "commutators with a disk automorphism for log and fractional operators",
        "verify-ahlfors": "regularity constant and annulus estimates",
    }
    for task in TASKS:
        sub.add_parser(task, parents=[common], help=helps[task])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, args.task) if args.config else default_config(args.task)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    return run_config(cfg, args.out, args.plot)


if __name__ == "__main__":
    sys.exit(main())
