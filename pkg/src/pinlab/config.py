"""Experiment configuration: option schema and YAML loading.

A config file names one experiment and its parameters::

    experiment: partition      # any subcommand name
    seed: 7                    # optional, default 0
    output: results            # optional, default "."
    threads: 2                 # optional, default 1
    params:                    # options of the subcommand
      n_charges: 10
      beta: 6

Parameter names are the subcommand's long options with dashes or
underscores. Every schema violation raises ConfigError carrying the line
of the offending node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .errors import ConfigError


@dataclass(frozen=True)
class Option:
    name: str
    type: type
    default: object = None
    help: str = ""
    multiple: bool = False
    choices: tuple | None = None
    required: bool = False

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_LAW = (
    Option("beta", int, 6, "intensity level of the two-atom law"),
    Option("c", float, None, "charge density exponent: p = exp(-c beta); default 0.55 if p is not given"),
    Option("p", float, None, "charge density p (overrides c)"),
)
_C = Option("C", float, None, "partition constant C (default: the n^{-3/2} limit of U(n) n^{3/2} for the SRW)")

COMMANDS: dict[str, tuple[str, tuple[Option, ...]]] = {
    "gen-env": (
        "sample an environment from the two-atom law",
        _LAW + (Option("n-charges", int, 1000, "number of positive charges"), Option("file", str, "env.txt", "output file name")),
    ),
    "partition": (
        "log Z_n(omega, C) on one environment",
        _LAW
        + (
            Option("env", str, None, "environment file (sampled from the law when absent)"),
            Option("n-charges", int, 10, "charges to sample when no file is given"),
            Option("n", int, None, "charge count n (default: all)"),
            _C,
        ),
    ),
    "free-energy": (
        "replica estimate of the charge free energy",
        _LAW
        + (
            Option("n-charges", int, 2000, "charges per replica"),
            Option("replicas", int, 16, "independent replicas"),
            _C,
        ),
    ),
    "renormalize": (
        "apply one renormalization step to an environment file",
        (
            Option("env", str, None, "environment file", required=True),
            Option("b", int, None, "level (default: the file header level)"),
            Option("cal-c", float, None, "renewal constant (default as for C)"),
            Option("C", float, None, "partition constant at this level (default: cal-c)"),
            Option("k-b", int, None, "override K_b"),
            Option("l-b", int, None, "override L_b"),
            Option("drop-incomplete", bool, False, "drop a trailing incomplete block"),
        ),
    ),
    "iterate-measure": (
        "run the charge law and constant flow",
        (
            Option("beta", int, 5, "starting level"),
            Option("c", float, 0.8, "starting density exponent: mu(beta) = exp(-c beta)"),
            Option("b-max", int, None, "last level (default beta + 3)"),
            Option("x-max", int, None, "support truncation (default 20(b + 2K) + current support)"),
            Option("tol", float, 1e-12, "series truncation tolerance"),
            Option("max-lost", float, None, "abort when truncation has lost more mass (default 100 tol)"),
            Option("k", int, 3, "fixed K"),
            Option("l", int, 20, "fixed L"),
            Option("level-constants", bool, False, "use the level-dependent K_b, L_b instead of --k/--l"),
            Option("cal-c", float, None, "renewal constant"),
        ),
    ),
    "verify-bounds": (
        "numerical checks of the lemma inequalities",
        (Option("suite", str, "quick", "which checks to run", choices=("quick", "full")),),
    ),
    "scan-critical": (
        "bisection scan of the localization threshold",
        (
            Option("betas", int, (4, 5, 6), "intensities to scan", multiple=True),
            Option("n-charges", int, 500, "charges per replica"),
            Option("replicas", int, 8, "replicas per probe"),
            Option("epsilon", float, 1e-9, "free-energy threshold"),
            Option("max-depth", int, 20, "bisection depth (capped at 20)"),
            _C,
        ),
    ),
}

TOP_LEVEL = ("experiment", "seed", "output", "threads", "params")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    output: str = "."
    threads: int = 1
    params: dict = field(default_factory=dict)


def _line(node) -> int:
    return node.start_mark.line + 1


def _scalar(node, typ: type, what: str):
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError(f"{what}: expected a scalar", _line(node))
    value = yaml.safe_load(node.value) if node.style is None else node.value
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if typ is float and isinstance(value, str) and node.style is None:
        # YAML 1.1 reads 1e-9 (no dot) as a string
        try:
            value = float(value)
        except ValueError:
            pass
    if typ is bool:
        ok = isinstance(value, bool)
    elif typ is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, typ)
    if not ok:
        raise ConfigError(f"{what}: expected {typ.__name__}, got {node.value!r}", _line(node))
    return value


def _value(node, opt: Option, what: str):
    if opt.multiple:
        if not isinstance(node, yaml.SequenceNode):
            raise ConfigError(f"{what}: expected a list", _line(node))
        return [_scalar(n, opt.type, what) for n in node.value]
    v = _scalar(node, opt.type, what)
    if opt.choices and v not in opt.choices:
        raise ConfigError(f"{what}: must be one of {', '.join(opt.choices)}", _line(node))
    return v


def _mapping(node, what: str) -> list:
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{what}: expected a mapping", _line(node))
    seen = {}
    for k, _ in node.value:
        key = k.value
        if key in seen:
            raise ConfigError(f"{what}: duplicate key {key!r} (first at line {seen[key]})", _line(k))
        seen[key] = _line(k)
    return node.value


def parse_config(text: str) -> ExperimentConfig:
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        raise ConfigError(f"YAML syntax: {e.problem}", line) from e
    if root is None:
        raise ConfigError("empty config", 1)
    items = {k.value: (k, v) for k, v in _mapping(root, "config")}
    for key, (k, _) in items.items():
        if key not in TOP_LEVEL:
            raise ConfigError(f"unknown top-level key {key!r}; allowed: {', '.join(TOP_LEVEL)}", _line(k))
    if "experiment" not in items:
        raise ConfigError("missing required key 'experiment'", _line(root))
    exp_node = items["experiment"][1]
    exp = _scalar(exp_node, str, "experiment")
    if exp not in COMMANDS:
        raise ConfigError(f"unknown experiment {exp!r}; allowed: {', '.join(COMMANDS)}", _line(exp_node))
    cfg = ExperimentConfig(exp)
    if "seed" in items:
        cfg.seed = _scalar(items["seed"][1], int, "seed")
        if not 0 <= cfg.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", _line(items["seed"][1]))
    if "output" in items:
        cfg.output = _scalar(items["output"][1], str, "output")
    if "threads" in items:
        cfg.threads = _scalar(items["threads"][1], int, "threads")
        if cfg.threads < 1:
            raise ConfigError("threads must be >= 1", _line(items["threads"][1]))
    options = {o.dest: o for o in COMMANDS[exp][1]}
    if "params" in items:
        for k, v in _mapping(items["params"][1], "params"):
            dest = k.value.replace("-", "_")
            if dest not in options:
                raise ConfigError(f"unknown parameter {k.value!r} for {exp}; allowed: {', '.join(options)}", _line(k))
            cfg.params[dest] = _value(v, options[dest], f"params.{k.value}")
    for o in options.values():
        if o.required and o.dest not in cfg.params:
            raise ConfigError(f"{exp} needs parameter {o.dest!r}", _line(root))
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from e
    return parse_config(text)
