"""Experiment configuration: INI-style key-value files.

Sections ``[model]``, ``[sim]``, ``[checks]``, ``[output]`` and one optional
``[check.<ID>]`` section per check id.  Keys are addressed as
``section.key`` in diagnostics (``model.kind``, ``sim.epsilon``...).
"""

from __future__ import annotations

import configparser
import hashlib
import io
import re
from dataclasses import dataclass, field, fields, replace

from .levy_models import ModelKind, REGISTRY, model_from_fields

KNOWN_CHECKS = ("T1.2", "T1.4", "T1.3", "T1.3x", "T1.5", "T2.6", "T2.7", "PZ", "TS.7", "TS.8",
                "TR", "TE", "TG", "TH", "TI", "vigon", "bridge", "meander_conv", "eq22", "DA",
                "LLT", "equivtails_index", "EA")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` and ``line`` locate the problem when known."""

    def __init__(self, message, key=None, line=None):
        loc = ""
        if key:
            loc += f"{key}: "
        if line:
            loc = f"line {line}: " + loc
        super().__init__(loc + message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class ModelBlock:
    kind: str = "BrownianMotion"
    alpha: float | None = None
    beta: float = 0.0
    sigma: float = 1.0
    lam: float = 1.0
    jump_mean: float = 1.0
    name: str = ""

    def build(self):
        if self.name and self.name in REGISTRY and not self._explicit():
            return REGISTRY[self.name]
        m = model_from_fields(self.kind, self.alpha, self.sigma, self.lam, self.jump_mean, self.beta)
        return replace(m, name=self.name) if self.name else m

    def _explicit(self):
        return self != ModelBlock(name=self.name)


@dataclass(frozen=True)
class SimBlock:
    dt: float = 1e-3
    horizon: float = 1.0
    n_paths: int = 100_000
    start_x: float = 1.0
    epsilon: float = 0.25  # small-jump cutoff in units of c(dt)
    master_seed: int = 0
    worker_count: int = 1
    n_excursions: int = 0
    theta: float = 3.0
    probe_times: tuple = ()


@dataclass(frozen=True)
class CheckBlock:
    id: str
    t_grid: tuple = ()
    x_grid: tuple = ()
    deltas: tuple = ()
    tolerance: float | None = None
    n_paths: int | None = None


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelBlock = field(default_factory=ModelBlock)
    sim: SimBlock = field(default_factory=SimBlock)
    checks: tuple = ()
    output: OutputBlock = field(default_factory=OutputBlock)

    def check(self, cid):
        for c in self.checks:
            if c.id == cid:
                return c
        return CheckBlock(cid)

    def to_text(self):
        return dumps(self)

    def hash(self):
        return hashlib.sha256(dumps(self).encode()).hexdigest()


# ---------------------------------------------------------------------------


_MODEL_KEYS = {"kind": "kind", "alpha": "alpha", "beta": "beta", "sigma": "sigma", "lambda": "lam",
               "jump_mean": "jump_mean", "name": "name"}
_TUPLE_FLOAT = {"probe_times", "t_grid", "x_grid", "deltas"}


def _line_of(text, section, key):
    sec = None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            sec = m.group(1).strip()
            continue
        if sec == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


def _convert(value, typ, key, text, section, raw_key):
    try:
        if typ is bool:
            return value.lower() in ("1", "true", "yes", "on")
        if typ == "floats":
            return tuple(float(v) for v in value.replace(",", " ").split()) if value.strip() else ()
        if typ == "strs":
            return tuple(v for v in value.replace(",", " ").split())
        if typ is int:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if typ == "optfloat":
            return None if value.strip().lower() in ("", "none") else float(value)
        if typ == "optint":
            return None if value.strip().lower() in ("", "none") else int(float(value))
        return typ(value)
    except ValueError:
        raise ConfigError(f"cannot parse {value!r}", key, _line_of(text, section, raw_key)) from None


def loads(text):
    """Parse configuration text into an :class:`ExperimentConfig`."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line=line) from None
    known = {"model", "sim", "checks", "output"}
    for sec in cp.sections():
        if sec not in known and not sec.startswith("check."):
            raise ConfigError("unknown section", sec, _section_line(text, sec))

    def block(section, cls, spec, rename=None):
        vals = {}
        if not cp.has_section(section):
            return cls()
        for raw_key, value in cp.items(section):
            key = (rename or {}).get(raw_key, raw_key)
            if key not in spec:
                raise ConfigError("unknown key", f"{section}.{raw_key}",
                                  _line_of(text, section, raw_key))
            vals[key] = _convert(value, spec[key], f"{section}.{raw_key}", text, section, raw_key)
        return cls(**vals)

    model = block("model", ModelBlock,
                  {"kind": str, "alpha": "optfloat", "beta": float, "sigma": float, "lam": float,
                   "jump_mean": float, "name": str}, _MODEL_KEYS)
    sim = block("sim", SimBlock,
                {"dt": float, "horizon": float, "n_paths": int, "start_x": float, "epsilon": float,
                 "master_seed": int, "worker_count": int, "n_excursions": int, "theta": float,
                 "probe_times": "floats"})
    output = block("output", OutputBlock, {"directory": str, "formats": "strs"})
    ids = ()
    if cp.has_section("checks"):
        for raw_key, value in cp.items("checks"):
            if raw_key != "ids":
                raise ConfigError("unknown key", f"checks.{raw_key}", _line_of(text, "checks", raw_key))
            ids = _convert(value, "strs", "checks.ids", text, "checks", "ids")
    checks = []
    for cid in ids:
        sec = f"check.{cid}"
        spec = {"t_grid": "floats", "x_grid": "floats", "deltas": "floats", "tolerance": "optfloat",
                "n_paths": "optint"}
        b = block(sec, lambda **kw: CheckBlock(cid, **kw), spec)
        checks.append(b)
    for sec in cp.sections():
        if sec.startswith("check.") and sec[6:] not in ids:
            raise ConfigError("section for a check not listed in checks.ids", sec,
                              _section_line(text, sec))
    cfg = ExperimentConfig(model, sim, tuple(checks), output)
    validate(cfg, text)
    return cfg


def _section_line(text, sec):
    for i, raw in enumerate(text.splitlines(), 1):
        if raw.strip() == f"[{sec}]":
            return i
    return None


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def validate(cfg, text=""):
    def fail(msg, section, key):
        raise ConfigError(msg, f"{section}.{key}", _line_of(text, section, key) if text else None)

    try:
        ModelKind(cfg.model.kind)
    except ValueError:
        fail(f"unknown kind {cfg.model.kind!r}; expected one of {[k.value for k in ModelKind]}",
             "model", "kind")
    try:
        cfg.model.build()
    except ValueError as exc:
        fail(str(exc), "model", "kind")
    s = cfg.sim
    if s.n_paths <= 0:
        fail("n_paths must be positive", "sim", "n_paths")
    if not s.dt > 0:
        fail("dt must be positive", "sim", "dt")
    if not s.horizon > 0:
        fail("horizon must be positive", "sim", "horizon")
    if s.dt > s.horizon / 1e3:
        fail("dt must be <= horizon / 1000", "sim", "dt")
    if not s.start_x > 0:
        fail("start_x must be positive", "sim", "start_x")
    if not 0 < s.epsilon <= 0.5:
        fail("epsilon (units of c(dt)) must lie in (0, 0.5]", "sim", "epsilon")
    if s.worker_count < 1:
        fail("worker_count must be >= 1", "sim", "worker_count")
    if s.n_excursions < 0:
        fail("n_excursions must be >= 0", "sim", "n_excursions")
    if s.master_seed < 0:
        fail("master_seed must be >= 0", "sim", "master_seed")
    for c in cfg.checks:
        if c.id not in KNOWN_CHECKS:
            fail(f"unknown check id {c.id!r}", "checks", "ids")
        for name in ("t_grid", "x_grid", "deltas"):
            v = getattr(c, name)
            if v and any(not x == x for x in v):
                fail("grid values must be numbers", f"check.{c.id}", name)
        if c.n_paths is not None and c.n_paths <= 0:
            fail("n_paths must be positive", f"check.{c.id}", "n_paths")
    return cfg


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def dumps(cfg):
    """Canonical text form; ``loads(dumps(c)) == c``."""
    out = io.StringIO()
    out.write("[model]\n")
    inv = {v: k for k, v in _MODEL_KEYS.items()}
    for f in fields(ModelBlock):
        out.write(f"{inv[f.name]} = {_fmt(getattr(cfg.model, f.name))}\n")
    out.write("\n[sim]\n")
    for f in fields(SimBlock):
        out.write(f"{f.name} = {_fmt(getattr(cfg.sim, f.name))}\n")
    out.write("\n[checks]\n")
    out.write(f"ids = {_fmt(tuple(c.id for c in cfg.checks))}\n")
    for c in cfg.checks:
        out.write(f"\n[check.{c.id}]\n")
        for f in fields(CheckBlock):
            if f.name != "id":
                out.write(f"{f.name} = {_fmt(getattr(c, f.name))}\n")
    out.write("\n[output]\n")
    for f in fields(OutputBlock):
        out.write(f"{f.name} = {_fmt(getattr(cfg.output, f.name))}\n")
    return out.getvalue()
