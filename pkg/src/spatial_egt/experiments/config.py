"""Run configuration files.

Configs are INI files.  Numbers may be written as arithmetic expressions in
``pi`` (``-pi/6``, ``2/3``); time steps may also use ``N`` (nodes per axis),
e.g. ``0.001/(0.25*N**2)``.  Every key is validated at load time and unknown
sections or keys are rejected; errors carry the offending ``section.key`` path.

Schema (``*`` = required)::

    [experiment]  kind*  (ide | dispersion | convergence | deviation | lumpability)
                  name, description
    [game]        a11* a22*  a12 a21 (default 0)
    [kernel]      profile* (gaussian | uniform | ball)  b  R  truncation  kernel_2d (radial)
    [domain]      dim  n  lower  upper  bc (periodic | fixed)  active (lo, hi)
                  boundary_left  boundary_right
    [branch:NAME] dynamic*  kappa  family  response          (one section per compared dynamic)
    [time]        t_end*  dt (number, expression in N, or "stable")  caption_dt  snapshot_times
    [initial]     kind* (constant | random_cos | indicator | profile_cos)
                  base  amplitude  mode  lo  hi  inside  outside  rho
    [meanfield]   enabled
    [dispersion]  p0 (zeta | 0 | 1 | number)  K  transform (continuous | grid)
    [convergence] gammas  coarse_cells  ide_nodes  replicas  t_end
    [deviation]   n_list  eps  T  replicas  rho0
    [lumpability] sites  replicas  t_end  rho0
    [run]         seed  threads  output  plots
"""

from __future__ import annotations

import ast
import configparser
import operator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..game import ConfigurationError, Game
from ..ide import Dynamic

KINDS = ("ide", "dispersion", "convergence", "deviation", "lumpability")

_SCHEMA = {
    "experiment": {"kind", "name", "description"},
    "game": {"a11", "a12", "a21", "a22"},
    "kernel": {"profile", "b", "r", "truncation", "kernel_2d"},
    "domain": {"dim", "n", "lower", "upper", "bc", "active", "boundary_left", "boundary_right"},
    "branch": {"dynamic", "kappa", "family", "response"},
    "time": {"t_end", "dt", "caption_dt", "snapshot_times"},
    "initial": {"kind", "base", "amplitude", "mode", "lo", "hi", "inside", "outside", "rho"},
    "meanfield": {"enabled"},
    "dispersion": {"p0", "k", "transform"},
    "convergence": {"gammas", "coarse_cells", "ide_nodes", "replicas", "t_end"},
    "deviation": {"n_list", "eps", "t", "replicas", "rho0"},
    "lumpability": {"sites", "replicas", "t_end", "rho0"},
    "run": {"seed", "threads", "output", "plots"},
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


class ConfigError(ConfigurationError):
    """Invalid configuration; ``key`` is the ``section.key`` path."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.detail = message


def evaluate(text: str, names: dict | None = None) -> float:
    """Evaluate a numeric expression built from literals, ``pi``, ``inf`` and ``names``."""
    env = {"pi": np.pi, "inf": np.inf, **(names or {})}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in env:
            return float(env[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    return ev(ast.parse(text.strip(), mode="eval"))


@dataclass(frozen=True)
class KernelSpec:
    profile: str
    b: float = 1.0
    R: float = 1.0
    truncation: float = 1e-12
    kernel_2d: str = "radial"


@dataclass(frozen=True)
class DomainSpec:
    dim: int = 1
    n: int = 256
    lower: float = -np.pi
    upper: float = np.pi
    bc: str = "periodic"
    active: tuple | None = None
    boundary_left: float = 0.0
    boundary_right: float = 1.0


@dataclass(frozen=True)
class BranchSpec:
    name: str
    dynamic: Dynamic
    kappa: float = np.inf
    family: str | None = None
    response: str | None = None


@dataclass(frozen=True)
class TimeSpec:
    t_end: float
    dt: float | None = None
    dt_text: str = "stable"
    caption_dt: str | None = None
    snapshot_times: tuple = ()


@dataclass(frozen=True)
class InitialSpec:
    kind: str
    base: float = 0.5
    amplitude: float = 0.0
    mode: int = 1
    lo: float = 0.0
    hi: float = 0.0
    inside: float = 1.0
    outside: float = 0.0
    rho: tuple = ()


@dataclass
class RunConfig:
    """Validated experiment description (see the module docstring for the file schema)."""

    kind: str
    name: str
    game: Game
    kernel: KernelSpec | None
    domain: DomainSpec
    branches: list
    time: TimeSpec | None
    initial: InitialSpec | None
    meanfield: bool = False
    dispersion: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    deviation: dict = field(default_factory=dict)
    lumpability: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    output: str = "out"
    plots: bool = True
    description: str = ""
    source: str | None = None
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Resolved raw key-value pairs, for manifests."""
        return {sec: dict(vals) for sec, vals in self.raw.items()}


class _Section:
    """Typed access to one INI section with key-path error reporting."""

    def __init__(self, name: str, items: dict):
        self.name = name
        self.items = items

    def _path(self, key):
        return f"{self.name}.{key}"

    def has(self, key) -> bool:
        return key in self.items

    def text(self, key, default=None, required=False, choices=None) -> str | None:
        if key not in self.items:
            if required:
                raise ConfigError(self._path(key), "missing required key")
            return default
        v = self.items[key].strip()
        if choices is not None and v not in choices:
            raise ConfigError(self._path(key), f"expected one of {sorted(choices)}, got {v!r}")
        return v

    def number(self, key, default=None, required=False, positive=False, names=None) -> float | None:
        raw = self.text(key, required=required)
        if raw is None:
            return default
        try:
            v = evaluate(raw, names)
        except (ValueError, SyntaxError, ZeroDivisionError) as exc:
            raise ConfigError(self._path(key), f"not a number: {raw!r} ({exc})") from None
        if np.isnan(v):
            raise ConfigError(self._path(key), "NaN is not allowed")
        if positive and not v > 0:
            raise ConfigError(self._path(key), f"must be positive, got {v}")
        return v

    def integer(self, key, default=None, required=False, positive=False) -> int | None:
        v = self.number(key, None, required, positive)
        if v is None:
            return default
        if v != int(v):
            raise ConfigError(self._path(key), f"must be an integer, got {v}")
        return int(v)

    def numbers(self, key, default=(), required=False) -> tuple:
        raw = self.text(key, required=required)
        if raw is None:
            return tuple(default)
        out = []
        for part in raw.replace(";", ",").split(","):
            if part.strip():
                try:
                    out.append(evaluate(part))
                except (ValueError, SyntaxError, ZeroDivisionError):
                    raise ConfigError(self._path(key), f"not a number list: {raw!r}") from None
        return tuple(out)

    def boolean(self, key, default=False) -> bool:
        raw = self.text(key)
        if raw is None:
            return default
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(self._path(key), f"not a boolean: {raw!r}")


def parse_config(text: str, source: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse and validate config text; ``overrides`` maps ``section.key`` to replacement text."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    raw = {sec: dict(cp.items(sec)) for sec in cp.sections()}
    for path, value in (overrides or {}).items():
        if "." not in path:
            raise ConfigError(path, "override keys are written section.key")
        sec, key = path.rsplit(".", 1)
        raw.setdefault(sec, {})[key.lower()] = value
    for sec, items in raw.items():
        base = sec.split(":", 1)[0]
        if base not in _SCHEMA:
            raise ConfigError(sec, "unknown section")
        if (base == "branch") != (":" in sec):
            raise ConfigError(sec, "branch sections are written [branch:NAME]")
        for key in items:
            if key not in _SCHEMA[base]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
    S = {sec: _Section(sec, items) for sec, items in raw.items()}
    empty = lambda name: S.get(name, _Section(name, {}))

    exp = S.get("experiment")
    if exp is None:
        raise ConfigError("experiment", "missing required section")
    kind = exp.text("kind", required=True, choices=KINDS)

    g = S.get("game")
    if g is None:
        raise ConfigError("game", "missing required section")
    a = [[g.number("a11", required=True), g.number("a12", 0.0)],
         [g.number("a21", 0.0), g.number("a22", required=True)]]
    game = Game(np.array(a))

    dom_s = empty("domain")
    dim = dom_s.integer("dim", 1)
    if dim not in (1, 2):
        raise ConfigError("domain.dim", "must be 1 or 2")
    bc = dom_s.text("bc", "periodic", choices={"periodic", "fixed"})
    active = dom_s.numbers("active") or None
    if bc == "fixed" and (active is None or len(active) != 2 * dim):
        raise ConfigError("domain.active", "fixed boundaries need one (lo, hi) pair per axis")
    domain = DomainSpec(dim, dom_s.integer("n", 256, positive=True), dom_s.number("lower", -np.pi),
                        dom_s.number("upper", np.pi), bc, active,
                        dom_s.number("boundary_left", 0.0), dom_s.number("boundary_right", 1.0))
    if domain.upper <= domain.lower:
        raise ConfigError("domain.upper", "must exceed domain.lower")

    kernel = None
    if "kernel" in S:
        k = S["kernel"]
        profile = k.text("profile", required=True, choices={"gaussian", "uniform", "ball"})
        kernel = KernelSpec(profile, k.number("b", 1.0, positive=True), k.number("r", 1.0, positive=True),
                            k.number("truncation", 1e-12, positive=True),
                            k.text("kernel_2d", "radial", choices={"radial"}))
        if profile == "gaussian" and not k.has("b"):
            raise ConfigError("kernel.b", "gaussian kernels need a width parameter b")
    elif kind in ("ide", "dispersion", "convergence"):
        raise ConfigError("kernel", "missing required section")

    branches = []
    for sec, sect in S.items():
        if not sec.startswith("branch:"):
            continue
        name = sec.split(":", 1)[1].strip()
        dyn_text = sect.text("dynamic", required=True, choices={d.value for d in Dynamic})
        br = BranchSpec(name, Dynamic(dyn_text), sect.number("kappa", np.inf, positive=True),
                        sect.text("family"), sect.text("response"))
        if br.dynamic is Dynamic.GENERAL and (br.family is None or br.response is None):
            raise ConfigError(f"{sec}.family", "general dynamics need family and response")
        branches.append(br)
    if kind in ("ide", "dispersion", "convergence", "deviation", "lumpability") and not branches:
        raise ConfigError("branch", "at least one [branch:NAME] section is required")

    time = None
    if "time" in S:
        t = S["time"]
        dt_text = t.text("dt", "stable")
        dt = None if dt_text == "stable" else t.number("dt", positive=True, names={"N": domain.n})
        snaps = t.numbers("snapshot_times")
        t_end = t.number("t_end", required=True)
        if t_end < 0:
            raise ConfigError("time.t_end", "must be nonnegative")
        if any(s < 0 or s > t_end for s in snaps):
            raise ConfigError("time.snapshot_times", "snapshot times must lie in [0, t_end]")
        time = TimeSpec(t_end, dt, dt_text, t.text("caption_dt"), tuple(sorted(set(snaps))))
    elif kind == "ide":
        raise ConfigError("time", "missing required section")

    initial = None
    if "initial" in S:
        i = S["initial"]
        ikind = i.text("kind", required=True, choices={"constant", "random_cos", "indicator", "profile_cos"})
        initial = InitialSpec(ikind, i.number("base", 0.5), i.number("amplitude", 0.0),
                              i.integer("mode", 1), i.number("lo", 0.0), i.number("hi", 0.0),
                              i.number("inside", 1.0), i.number("outside", 0.0), i.numbers("rho"))
        if ikind == "indicator" and not initial.hi > initial.lo:
            raise ConfigError("initial.hi", "indicator needs hi > lo")
    elif kind in ("ide", "convergence"):
        raise ConfigError("initial", "missing required section")

    disp = {}
    if "dispersion" in S or kind == "dispersion":
        d = empty("dispersion")
        p0 = d.text("p0", "zeta")
        disp = {"p0": p0 if p0 == "zeta" else d.number("p0"),
                "K": d.integer("k", None, positive=True),
                "transform": d.text("transform", "continuous", choices={"continuous", "grid"})}
    conv = {}
    if kind == "convergence":
        c = empty("convergence")
        gammas = c.numbers("gammas", required=True)
        if any(not 0 < x <= 1 for x in gammas) or list(gammas) != sorted(gammas, reverse=True):
            raise ConfigError("convergence.gammas", "need decreasing values in (0, 1]")
        conv = {"gammas": gammas, "coarse_cells": c.integer("coarse_cells", 16, positive=True),
                "ide_nodes": c.integer("ide_nodes", 512, positive=True),
                "replicas": c.integer("replicas", 20, positive=True),
                "t_end": c.number("t_end", 1.0, positive=True)}
    dev = {}
    if kind == "deviation":
        d = empty("deviation")
        n_list = tuple(int(v) for v in d.numbers("n_list", required=True))
        if list(n_list) != sorted(n_list) or len(set(n_list)) != len(n_list):
            raise ConfigError("deviation.n_list", "must be strictly increasing")
        dev = {"n_list": n_list, "eps": d.number("eps", required=True, positive=True),
               "T": d.number("t", required=True, positive=True),
               "replicas": d.integer("replicas", 500, positive=True),
               "rho0": d.numbers("rho0", required=True)}
    lump = {}
    if kind == "lumpability":
        d = empty("lumpability")
        lump = {"sites": d.integer("sites", 50, positive=True),
                "replicas": d.integer("replicas", 500, positive=True),
                "t_end": d.number("t_end", 1.0, positive=True),
                "rho0": d.numbers("rho0", required=True)}

    run = empty("run")
    cfg = RunConfig(
        kind=kind, name=exp.text("name", Path(source).stem if source else kind),
        game=game, kernel=kernel, domain=domain, branches=branches, time=time, initial=initial,
        meanfield=empty("meanfield").boolean("enabled", False), dispersion=disp,
        convergence=conv, deviation=dev, lumpability=lump,
        seed=run.integer("seed", 0), threads=run.integer("threads", 1, positive=True),
        output=run.text("output", "out"), plots=run.boolean("plots", True),
        description=exp.text("description", ""), source=source, raw=raw)
    _check_preconditions(cfg)
    return cfg


def _check_preconditions(cfg: RunConfig) -> None:
    """Fail fast on module preconditions that are knowable before running."""
    from ..game import coordination_params
    from ..kernels import KernelError, grid_discretize

    reduced = {Dynamic.REDUCED_REPLICATOR, Dynamic.REDUCED_LOGIT}
    if any(b.dynamic in reduced for b in cfg.branches) or cfg.kind == "dispersion":
        try:
            coordination_params(cfg.game)
        except ConfigurationError as exc:
            raise ConfigError("game", str(exc)) from None
    if cfg.kernel is not None and cfg.kind in ("ide", "dispersion"):
        from .build import make_grid, make_kernel
        try:
            grid_discretize(make_kernel(cfg), make_grid(cfg))
        except KernelError as exc:
            raise ConfigError("domain.n", str(exc)) from None
        except ValueError as exc:
            raise ConfigError("domain", str(exc)) from None
    if cfg.initial is not None and cfg.initial.kind == "constant" and cfg.initial.rho:
        rho = np.asarray(cfg.initial.rho)
        if rho.size != cfg.game.num_strategies or rho.min() < 0 or abs(rho.sum() - 1) > 1e-9:
            raise ConfigError("initial.rho", "must be a probability vector over the strategies")


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and validate a config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError("<file>", f"no such config file: {p}")
    return parse_config(p.read_text(), str(p), overrides)


def bundled(name: str) -> Path:
    """Path of a config shipped with the package (``fig2``, ``convergence``, ...)."""
    p = Path(__file__).with_name("configs") / (name if name.endswith(".cfg") else f"{name}.cfg")
    if not p.is_file():
        raise FileNotFoundError(p)
    return p
