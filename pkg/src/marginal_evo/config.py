"""Experiment configuration: typed parameters, validation, file I/O, seeds.

The on-disk format is a flat key-value text file with bracketed section
headers (one section per parameter group), a single top-level ``schema``
version key, ``#`` comments, and ``key = value`` lines.  The canonical form
written by :func:`save_config` round-trips exactly through
:func:`load_config`: floats are serialized with 17 significant digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import InvalidParameter, ParseError, ValidationError

SCHEMA_VERSION = 1

MODEL_TAGS = ("A", "B", "C")

GINIBRE = "ginibre"
REAL_SYMMETRIC = "real_symmetric"
PHASED_GINIBRE = "phased_ginibre"

#: connectivity ensemble used by each model variant
TAG_ENSEMBLE = {"A": GINIBRE, "B": REAL_SYMMETRIC, "C": PHASED_GINIBRE}


@dataclass(frozen=True)
class DynamicsParams:
    """Parameters of the linear stochastic depth dynamics.

    n_units is the state dimension, n_steps the number of depth steps,
    dt the depth increment, gamma the leak rate (1/depth), kappa the
    noise amplitude.  The horizon T = n_steps * dt.
    """

    n_units: int = 256
    n_steps: int = 2000
    dt: float = 0.05
    gamma: float = 1.0
    kappa: float = 1.0

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def validate(self) -> None:
        if not isinstance(self.n_units, int) or self.n_units < 2:
            raise ValidationError("n_units", "must be an integer >= 2")
        if not isinstance(self.n_steps, int) or self.n_steps < 2:
            raise ValidationError("n_steps", "must be an integer >= 2")
        if not (self.dt > 0.0) or not math.isfinite(self.dt):
            raise ValidationError("dt", "must be a positive finite real")
        if not (self.gamma > 0.0) or not math.isfinite(self.gamma):
            raise ValidationError("gamma", "must be a positive finite real")
        if not (self.kappa > 0.0) or not math.isfinite(self.kappa):
            raise ValidationError("kappa", "must be a positive finite real")


@dataclass(frozen=True)
class EvolutionParams:
    """Population-search hyperparameters.

    The mutation standard deviation at generation k is exactly
    mut_std0 * mut_decay**k; the inverse selection temperature is
    beta0 * beta_growth**k.
    """

    population: int = 48
    generations: int = 100
    init_low: float = 0.30
    init_high: float = 1.30
    mut_std0: float = 0.02
    mut_decay: float = 0.98
    beta0: float = 5.0
    beta_growth: float = 1.05
    clip_low: float = 0.30
    clip_high: float = 1.30
    n_seeds: int = 4
    elitism: bool = False  # keep the single best individual each generation

    def mut_std_at(self, generation: int) -> float:
        return self.mut_std0 * self.mut_decay**generation

    def beta_at(self, generation: int) -> float:
        return self.beta0 * self.beta_growth**generation

    def validate(self) -> None:
        if not isinstance(self.population, int) or self.population < 1:
            raise ValidationError("population", "must be an integer >= 1")
        if not isinstance(self.generations, int) or self.generations < 1:
            raise ValidationError("generations", "must be an integer >= 1")
        if not self.init_low < self.init_high:
            raise ValidationError("init_low", "init_low must be < init_high")
        if not (self.mut_std0 >= 0.0):
            raise ValidationError("mut_std0", "must be >= 0")
        if not (0.0 < self.mut_decay <= 1.0):
            raise ValidationError("mut_decay", "must lie in (0, 1]")
        if not (self.beta0 > 0.0):
            raise ValidationError("beta0", "must be > 0")
        if not (self.beta_growth >= 1.0):
            raise ValidationError("beta_growth", "must be >= 1")
        if self.clip_low > self.init_low:
            raise ValidationError("clip_low", "must be <= init_low")
        if self.clip_high < self.init_high:
            raise ValidationError("clip_high", "must be >= init_high")
        if not isinstance(self.n_seeds, int) or self.n_seeds < 1:
            raise ValidationError("n_seeds", "must be an integer >= 1")


@dataclass(frozen=True)
class FitnessWeights:
    """Weights of the three fitness terms and the spectral band edges."""

    w_spec: float = 1.0
    w_lambda: float = 1.0
    w_crit: float = 1.0
    band_min: float = 0.1
    band_max: float = 2.0

    def validate(self) -> None:
        for name in ("w_spec", "w_lambda", "w_crit"):
            if not (getattr(self, name) >= 0.0):
                raise ValidationError(name, "must be >= 0")
        if not (self.band_max > 0.0):
            raise ValidationError("band_max", "must be > 0")
        if not (0.0 <= self.band_min < self.band_max):
            raise ValidationError("band_min", "must satisfy 0 <= band_min < band_max")


@dataclass(frozen=True)
class ModelVariant:
    """Named model variant: tag, connectivity ensemble, phase spread."""

    tag: str
    ensemble: str
    phase_std: float = 0.0

    def validate(self) -> None:
        if self.tag not in MODEL_TAGS:
            raise ValidationError("tag", f"must be one of {MODEL_TAGS}")
        if self.ensemble != TAG_ENSEMBLE[self.tag]:
            raise ValidationError(
                "ensemble", f"tag {self.tag} requires ensemble {TAG_ENSEMBLE[self.tag]!r}"
            )
        if not (self.phase_std >= 0.0):
            raise ValidationError("phase_std", "must be >= 0")
        if self.tag == "C" and not (self.phase_std > 0.0):
            raise ValidationError("phase_std", "must be > 0 for model C")


def variant_from_tag(tag: str, phase_std: float = 0.0) -> ModelVariant:
    """Build the variant for a tag, deriving its ensemble."""
    if tag not in MODEL_TAGS:
        raise ValidationError("tag", f"must be one of {MODEL_TAGS}")
    return ModelVariant(tag=tag, ensemble=TAG_ENSEMBLE[tag], phase_std=phase_std)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete, validated run specification."""

    dynamics: DynamicsParams
    evolution: EvolutionParams
    fitness: FitnessWeights
    variant: ModelVariant
    master_seed: int = 0
    out_dir: str = "out"

    def validate(self) -> None:
        self.dynamics.validate()
        self.evolution.validate()
        self.fitness.validate()
        self.variant.validate()
        if not isinstance(self.master_seed, int) or not (0 <= self.master_seed < 2**64):
            raise ValidationError("master_seed", "must be a 64-bit unsigned integer")
        if not self.out_dir:
            raise ValidationError("out_dir", "must be a non-empty path")
        # cross-field consistency between variant and fitness weights
        if self.variant.tag == "A" and self.fitness.w_crit != 0.0:
            raise ValidationError("w_crit", "must be 0 for model A")
        if self.variant.tag in ("B", "C") and not (self.fitness.w_crit > 0.0):
            raise ValidationError("w_crit", f"must be > 0 for model {self.variant.tag}")

    def replace(self, **overrides) -> "ExperimentConfig":
        cfg = replace(self, **overrides)
        cfg.validate()
        return cfg


def reference_config(tag: str, master_seed: int = 0, out_dir: str = "out") -> ExperimentConfig:
    """Return the reference experiment for a model tag.

    Reference values: N=256, L=2000, dt=0.05, gamma=kappa=1, population 48,
    100 generations, genotypes initialized uniformly on [0.30, 1.30],
    mutation schedule 0.02 * 0.98**k, phase spread 0.3 for model C.
    Model A runs without the critical anchor (w_crit = 0).
    """
    variant = variant_from_tag(tag, phase_std=0.3 if tag == "C" else 0.0)
    weights = FitnessWeights(w_crit=0.0 if tag == "A" else 1.0)
    cfg = ExperimentConfig(
        dynamics=DynamicsParams(),
        evolution=EvolutionParams(),
        fitness=weights,
        variant=variant,
        master_seed=master_seed,
        out_dir=out_dir,
    )
    cfg.validate()
    return cfg


def derive_seed(master_seed: int, generation: int, individual: int, replica: int) -> int:
    """Deterministic, collision-resistant stream seed for one task.

    Distinct (generation, individual, replica) tuples yield independent
    streams; identical tuples always return the identical 64-bit seed.
    """
    for name, v in (
        ("master_seed", master_seed),
        ("generation", generation),
        ("individual", individual),
        ("replica", replica),
    ):
        if v < 0:
            raise InvalidParameter(f"{name} must be nonnegative, got {v}")
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(generation, individual, replica))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# file schema
# ---------------------------------------------------------------------------

_SECTIONS = {
    "variant": (ModelVariant, ("tag", "phase_std")),
    "dynamics": (DynamicsParams, None),
    "evolution": (EvolutionParams, None),
    "fitness": (FitnessWeights, None),
    "run": (None, ("master_seed", "out_dir")),
}


def _section_keys(section: str) -> tuple[str, ...]:
    cls, keys = _SECTIONS[section]
    if keys is not None:
        return keys
    return tuple(f.name for f in fields(cls))


def _parse_scalar(section: str, key: str, raw: str, kind: type):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ValidationError(f"{section}.{key}", f"cannot parse {raw!r} as {kind.__name__}")


_FIELD_TYPES = {
    ("variant", "tag"): str,
    ("variant", "phase_std"): float,
    ("run", "master_seed"): int,
    ("run", "out_dir"): str,
}
for _sec in ("dynamics", "evolution", "fitness"):
    _cls = _SECTIONS[_sec][0]
    for _f in fields(_cls):
        _FIELD_TYPES[(_sec, _f.name)] = _f.type if isinstance(_f.type, type) else {
            "int": int, "float": float, "bool": bool, "str": str
        }[_f.type]


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment file.

    Raises ParseError on malformed syntax and ValidationError (naming the
    offending field) on unknown keys, missing keys, or invariant violations.
    """
    path = Path(path)
    text = path.read_text()

    values: dict[str, dict[str, str]] = {name: {} for name in _SECTIONS}
    schema_seen: int | None = None
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"{path}:{lineno}: unterminated section header {raw!r}")
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ValidationError(f"[{section}]", "unknown section")
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if not key or not val:
            raise ParseError(f"{path}:{lineno}: empty key or value in {raw!r}")
        if section is None:
            if key != "schema":
                raise ValidationError(key, "only 'schema' may appear before the first section")
            if schema_seen is not None:
                raise ParseError(f"{path}:{lineno}: duplicate schema key")
            schema_seen = _parse_scalar("", "schema", val, int)
            continue
        if key not in _section_keys(section):
            raise ValidationError(f"{section}.{key}", "unknown key")
        if key in values[section]:
            raise ParseError(f"{path}:{lineno}: duplicate key {section}.{key}")
        values[section][key] = val

    if schema_seen is None:
        raise ValidationError("schema", "missing schema version key")
    if schema_seen != SCHEMA_VERSION:
        raise ValidationError("schema", f"unsupported schema version {schema_seen}")

    parsed: dict[str, dict] = {}
    for section in _SECTIONS:
        parsed[section] = {}
        for key in _section_keys(section):
            if key not in values[section]:
                raise ValidationError(f"{section}.{key}", "missing key")
            kind = _FIELD_TYPES[(section, key)]
            parsed[section][key] = _parse_scalar(section, key, values[section][key], kind)

    variant = variant_from_tag(parsed["variant"]["tag"], parsed["variant"]["phase_std"])
    cfg = ExperimentConfig(
        dynamics=DynamicsParams(**parsed["dynamics"]),
        evolution=EvolutionParams(**parsed["evolution"]),
        fitness=FitnessWeights(**parsed["fitness"]),
        variant=variant,
        master_seed=parsed["run"]["master_seed"],
        out_dir=parsed["run"]["out_dir"],
    )
    cfg.validate()
    return cfg


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)  # shortest representation that round-trips exactly
    return str(v)


def config_text(cfg: ExperimentConfig) -> str:
    """Canonical serialized form of a config."""
    lines = [f"schema = {SCHEMA_VERSION}", ""]
    groups = {
        "variant": {"tag": cfg.variant.tag, "phase_std": cfg.variant.phase_std},
        "dynamics": {f.name: getattr(cfg.dynamics, f.name) for f in fields(DynamicsParams)},
        "evolution": {f.name: getattr(cfg.evolution, f.name) for f in fields(EvolutionParams)},
        "fitness": {f.name: getattr(cfg.fitness, f.name) for f in fields(FitnessWeights)},
        "run": {"master_seed": cfg.master_seed, "out_dir": cfg.out_dir},
    }
    for section, kv in groups.items():
        lines.append(f"[{section}]")
        for key, v in kv.items():
            lines.append(f"{key} = {_fmt(v)}")
        lines.append("")
    return "\n".join(lines)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    """Write the canonical form; load_config(save_config(c)) == c."""
    cfg.validate()
    Path(path).write_text(config_text(cfg))
