"""Experiment configuration files.

A configuration is a sectioned key-value file::

    [run]
    task = spectrum
    seed = 0

    [space]
    kind = shift
    N = 2
    lambda = 2
    depth = 4

    [task]
    basis = haar

    [output]
    dir = out

    [tolerances]
    multiplicity = 1e-6

Keys are case-insensitive. Lists are comma separated. Every error carries the
line number of the offending entry when one exists.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_SEED = 0
TASKS = ("spectrum", "heat-trace", "threshold", "dini", "commutator", "conformal", "verify-ahlfors")
SECTIONS = ("run", "space", "task", "output", "tolerances")

DEFAULT_SPACES = {
    "spectrum": {"kind": "shift", "N": "2", "lambda": "2", "depth": "4"},
    "heat-trace": {"kind": "shift", "N": "2", "lambda": "2", "depth": "4"},
    "threshold": {"kind": "shift", "N": "2", "lambda": "2", "depth": "4"},
    "dini": {"kind": "interval", "a": "0", "b": "1", "nodes": "400"},
    "commutator": {"kind": "interval", "a": "-1", "b": "1", "nodes": "200"},
    "conformal": {"kind": "circle", "nodes": "512"},
    "verify-ahlfors": {"kind": "interval", "a": "-1", "b": "1", "nodes": "64"},
}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path or '<config>'}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass
class ExperimentConfig:
    task: str
    space: dict
    params: dict = field(default_factory=dict)
    output_dir: str = "out"
    tolerances: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    path: str | None = None
    _lines: dict = field(default_factory=dict, repr=False)

    def line_of(self, section: str, key: str | None = None) -> int | None:
        return self._lines.get((section, key.lower() if key else None))

    def _fail(self, section: str, key: str, message: str):
        raise ConfigError(message, self.line_of(section, key), self.path)

    # typed accessors for [task] and [tolerances]
    def get(self, key: str, default=None, section: str = "task"):
        src = self.params if section == "task" else self.tolerances
        return src.get(key.lower(), default)

    def get_str(self, key: str, default: str, choices=None, section: str = "task") -> str:
        v = self.get(key, default, section)
        if choices is not None and v not in choices:
            self._fail(section, key, f"{key} must be one of {', '.join(choices)}; got {v!r}")
        return v

    def get_int(self, key: str, default: int, minimum: int | None = None, section: str = "task") -> int:
        v = self.get(key, None, section)
        if v is None:
            return default
        try:
            out = int(v)
        except ValueError:
            self._fail(section, key, f"{key} must be an integer; got {v!r}")
        if minimum is not None and out < minimum:
            self._fail(section, key, f"{key} must be >= {minimum}; got {out}")
        return out

    def get_float(self, key: str, default: float, section: str = "task") -> float:
        v = self.get(key, None, section)
        if v is None:
            return default
        try:
            return float(v)
        except ValueError:
            self._fail(section, key, f"{key} must be a number; got {v!r}")

    def get_bool(self, key: str, default: bool, section: str = "task") -> bool:
        v = self.get(key, None, section)
        if v is None:
            return default
        low = v.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        self._fail(section, key, f"{key} must be a boolean; got {v!r}")

    def get_list(self, key: str, default, cast=float, section: str = "task") -> list:
        v = self.get(key, None, section)
        if v is None:
            return list(default)
        try:
            return [cast(item) for item in v.split(",") if item.strip()]
        except ValueError:
            self._fail(section, key, f"{key} must be a comma-separated list of {cast.__name__}; got {v!r}")

    def tolerance(self, key: str, default: float) -> float:
        return self.get_float(key, default, section="tolerances")


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            lines.setdefault((section, None), i)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), i)
    return lines


SPACE_KEYS = {
    "shift": (("N", int), ("lambda", float), ("depth", int)),
    "interval": (("a", float), ("b", float), ("nodes", int)),
    "circle": (("nodes", int),),
}


def _space_description(raw: dict, lines: dict, path: str | None) -> dict:
    """Typed space description; unknown kinds, missing keys and bad values are reported by line."""
    kind = raw.get("kind")
    if kind not in SPACE_KEYS:
        raise ConfigError(
            f"space kind must be one of {', '.join(SPACE_KEYS)}; got {kind!r}",
            lines.get(("space", "kind"), lines.get(("space", None))),
            path,
        )
    desc = {"kind": kind}
    allowed = {"kind"} | {k.lower() for k, _ in SPACE_KEYS[kind]}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for a {kind} space", lines.get(("space", key)), path)
    for key, cast in SPACE_KEYS[kind]:
        if key.lower() not in raw:
            raise ConfigError(f"{kind} space needs key {key!r}", lines.get(("space", None)), path)
        try:
            desc[key] = cast(raw[key.lower()])
        except ValueError:
            raise ConfigError(
                f"{key} must be {'an integer' if cast is int else 'a number'}; got {raw[key.lower()]!r}",
                lines.get(("space", key.lower())),
                path,
            ) from None
    return desc


def parse_config(text: str, path: str | None = None, task: str | None = None) -> ExperimentConfig:
    """Parse configuration text. ``task`` (from the command line) fills in or must match ``[run] task``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("missing section header", exc.lineno, path) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("cannot parse line (expected 'key = value')", line, path) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(":", 1)[-1].strip(), getattr(exc, "lineno", None), path) from None
    lines = _line_index(text)
    for sec in cp.sections():
        if sec.lower() not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", lines.get((sec.lower(), None)), path)
    get = lambda sec: {k.lower(): v.strip() for k, v in cp.items(sec)} if cp.has_section(sec) else {}
    run = get("run")
    cfg_task = run.get("task")
    if cfg_task is not None and cfg_task not in TASKS:
        raise ConfigError(f"unknown task {cfg_task!r}", lines.get(("run", "task")), path)
    if task is not None and cfg_task is not None and task != cfg_task:
        raise ConfigError(f"config task {cfg_task!r} does not match subcommand {task!r}", lines.get(("run", "task")), path)
    task = task or cfg_task
    if task is None:
        raise ConfigError("no task given ([run] task or a subcommand)", None, path)
    space = _space_description(get("space") or {k.lower(): v for k, v in DEFAULT_SPACES[task].items()}, lines, path)
    seed = DEFAULT_SEED
    if "seed" in run:
        try:
            seed = int(run["seed"])
        except ValueError:
            raise ConfigError(f"seed must be an integer; got {run['seed']!r}", lines.get(("run", "seed")), path) from None
    out = get("output").get("dir", "out")
    return ExperimentConfig(task, space, get("task"), out, get("tolerances"), seed, path, lines)


def load_config(path, task: str | None = None) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(p)) from None
    return parse_config(text, str(p), task)


def default_config(task: str) -> ExperimentConfig:
    return parse_config(f"[run]\ntask = {task}\n", None, task)
