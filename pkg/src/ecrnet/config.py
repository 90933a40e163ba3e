"""Experiment configuration files.

A config is a flat list of ``key = value`` lines. Keys are dotted
(``hp.alpha``, ``gen.noise_sigma``, ``evo.population_size``); a ``[section]``
header prefixes the keys below it. Values are Python literals. Each value
must match the type of its default, and unknown keys are errors that name
the key and line::

    [experiment]
    d = [5, 7, 10]
    K = [3, 5, 10]
    samples_per_regime = [2000]
    replicates = 5
    master_seed = 2024

    [hp]
    alpha = 1e-4
"""

from __future__ import annotations

import ast
import itertools
from dataclasses import dataclass, field, fields

from .evolve import EvoConfig
from .model import HyperParams
from .simgen import GenConfig

FULL_D = [5, 7, 10]
FULL_K = [3, 4, 5, 10]
FULL_SAMPLES = [2000, 3333, 6667]
METHODS = ("ecr", "static", "ecr+evolve")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    d: int
    K: int
    samples_per_regime: int

    @property
    def cell_id(self):
        return f"d{self.d}_K{self.K}_n{self.samples_per_regime}"

    @property
    def T(self):
        return self.samples_per_regime * self.K


@dataclass
class ExperimentConfig:
    d: list = field(default_factory=lambda: [5, 7, 10])
    K: list = field(default_factory=lambda: [3, 5, 10])
    samples_per_regime: list = field(default_factory=lambda: [2000])
    replicates: int = 5
    master_seed: int = 2024
    methods: list = field(default_factory=lambda: ["ecr", "static"])
    out: str = "runs"
    hp: HyperParams = field(default_factory=lambda: HyperParams())
    gen: dict = field(default_factory=dict)
    evo: EvoConfig = field(default_factory=lambda: EvoConfig())

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        for c in self.cells():
            if c.d < 2 or c.K < 1 or c.samples_per_regime < 10:
                raise ConfigError(f"invalid cell {c.cell_id}: need d >= 2, K >= 1, samples_per_regime >= 10")

    def cells(self):
        return [Cell(d, K, n) for d, K, n in itertools.product(self.d, self.K, self.samples_per_regime)]

    def expand_full(self):
        """Switch to the full 3 x 4 x 3 factorial grid."""
        self.d, self.K, self.samples_per_regime = list(FULL_D), list(FULL_K), list(FULL_SAMPLES)
        return self

    def gen_config(self, cell):
        return GenConfig(d=cell.d, K=cell.K, T=cell.T, **self.gen)


_EXPERIMENT_KEYS = {"d", "K", "samples_per_regime", "replicates", "master_seed", "methods", "out"}
_GEN_KEYS = {f.name for f in fields(GenConfig)} - {"d", "K", "T"}


def _defaults():
    exp = ExperimentConfig()
    table = {f"experiment.{k}": getattr(exp, k) for k in _EXPERIMENT_KEYS}
    table.update({f"hp.{f.name}": getattr(exp.hp, f.name) for f in fields(HyperParams)})
    gen = GenConfig()
    table.update({f"gen.{k}": getattr(gen, k) for k in _GEN_KEYS})
    table.update({f"evo.{f.name}": getattr(exp.evo, f.name) for f in fields(EvoConfig)})
    return table


def _coerce(key, value, default, line):
    if key == "gen.init_sigma":
        if value is None or isinstance(value, (int, float)) and not isinstance(value, bool):
            return None if value is None else float(value)
    elif isinstance(default, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif isinstance(default, (list, tuple)):
        if isinstance(value, (list, tuple)):
            return type(default)(value)
    elif isinstance(default, dict):
        if isinstance(value, dict):
            return value
    elif isinstance(default, str):
        if isinstance(value, str):
            return value
    raise ConfigError(
        f"line {line}: key {key!r} expects {type(default).__name__}, got {type(value).__name__} ({value!r})"
    )


def parse_config(text):
    """Parse config text into a ``{dotted_key: value}`` mapping."""
    defaults = _defaults()
    values = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if section:
            key = f"{section}.{key}"
        if key not in defaults:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, _literal(val), defaults[key], lineno)
    return values


def _literal(text):
    for candidate in (text, text.split("#", 1)[0].strip()):
        try:
            return ast.literal_eval(candidate)
        except (ValueError, SyntaxError):
            pass
    # Bare words are taken as strings.
    return text.split("#", 1)[0].strip()


def build_config(values):
    """Assemble an :class:`ExperimentConfig` from parsed key/value pairs."""
    exp = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("experiment.")}
    hp = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("hp.")}
    gen = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("gen.")}
    evo = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("evo.")}
    try:
        cfg = ExperimentConfig(hp=HyperParams(**hp), gen=gen, evo=EvoConfig(**evo), **exp)
        for cell in cfg.cells():
            cfg.gen_config(cell)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return build_config(parse_config(fh.read()))


def parse_overrides(items, section="hp"):
    """Parse ``key=value`` command-line overrides for one section."""
    lines = []
    for item in items:
        if "=" not in item:
            raise ConfigError(f"malformed override {item!r}; expected key=value")
        key, val = item.split("=", 1)
        lines.append(f"{section}.{key.strip()} = {val.strip()}")
    return parse_config("\n".join(lines))
