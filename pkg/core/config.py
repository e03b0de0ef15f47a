"""
Experiment configuration, weight-spec resolution and logging setup.

A run is described by one frozen `ExperimentConfig`. It can be built from
command-line flags, from a YAML file (flags win), or from its own
`to_dict()` output; dictionaries are checked against `CONFIG_SCHEMA` with
jsonschema before use.
"""

import json
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import colorlog
import jsonschema
import yaml

from core.errors import DomainError, UsageError
from core.weights import WeightFamily, WeightSequence, validate, weight_family_from_spec

DEFAULT_SEED = 0x5EED
COMMANDS = ("moment", "bound", "simulate", "verify", "table")
FORMATS = ("csv", "json")
SWEEPS = ("n", "M")
EUCLIDEAN_SPEC = "euclidean"

CONFIG_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "n": {"type": ["integer", "null"], "minimum": 2},
        "weights": {"type": "string"},
        "s": {"type": ["number", "null"]},
        "k": {"type": "number"},
        "epsilon": {"type": "number"},
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "format": {"enum": list(FORMATS)},
        "out": {"type": ["string", "null"]},
        "sweep": {"enum": list(SWEEPS)},
        "n_values": {"type": "array", "items": {"type": "integer", "minimum": 2}},
        "m_values": {"type": "array", "items": {"type": "number", "minimum": 1}},
        "intervals": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "batch_size": {"type": ["integer", "null"], "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "progress": {"type": "boolean"},
        "verbosity": {"type": "integer", "minimum": 0},
    },
}

WEIGHTS_FILE_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["n", "a"],
    "properties": {
        "n": {"type": "integer", "minimum": 2},
        "a": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "family": {"type": "string"},
    },
}

_CONFIG_VALIDATOR = jsonschema.Draft7Validator(CONFIG_SCHEMA)


def _describe(error: jsonschema.ValidationError) -> str:
    where = ".".join(str(part) for part in error.path)
    return f"{where}: {error.message}" if where else error.message


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    n: Optional[int] = None
    weights: str = "equal"
    s: Optional[float] = None
    k: float = 1.0
    epsilon: float = 0.3
    samples: int = 100_000
    seed: int = DEFAULT_SEED
    format: str = "json"
    out: Optional[str] = None
    sweep: str = "n"
    n_values: Tuple[int, ...] = (100, 1000, 10000)
    m_values: Tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    intervals: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)
    batch_size: Optional[int] = None
    workers: int = 1
    progress: bool = False
    verbosity: int = 0

    @property
    def euclidean(self) -> bool:
        return self.weights == EUCLIDEAN_SPEC

    def violations(self) -> List[str]:
        """Every constraint the configuration breaks (empty when usable)."""
        problems: List[str] = []
        if self.command not in COMMANDS:
            problems.append(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.n is not None and self.n < 2:
            problems.append(f"--n must be >= 2, got {self.n}")
        if self.command in ("moment", "simulate") and self.n is None and not self.weights.startswith("custom:"):
            problems.append(f"{self.command} needs --n")
        if self.command == "moment" and self.s is None:
            problems.append("moment needs --s")
        if not self.euclidean:
            try:
                weight_family_from_spec(self.weights, custom=_PLACEHOLDER)
            except DomainError as exc:
                problems.append(str(exc))
        elif self.command == "bound":
            problems.append("bound certificates are defined for weighted spheres, not --weights euclidean")
        if not self.k > 0:
            problems.append(f"--k must be > 0, got {self.k}")
        if not 0.0 < self.epsilon < 1.0:
            problems.append(f"--eps must lie in (0, 1), got {self.epsilon}")
        if self.samples < 1:
            problems.append(f"--samples must be >= 1, got {self.samples}")
        if not 0 <= self.seed < 2 ** 64:
            problems.append(f"--seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.format not in FORMATS:
            problems.append(f"--format must be csv or json, got {self.format!r}")
        if self.sweep not in SWEEPS:
            problems.append(f"--sweep must be n or M, got {self.sweep!r}")
        if any(n < 2 for n in self.n_values):
            problems.append(f"--n-values entries must be >= 2, got {list(self.n_values)}")
        if any(m < 1 for m in self.m_values):
            problems.append(f"--m-values entries must be >= 1, got {list(self.m_values)}")
        for lo, hi in self.intervals:
            if not 0.0 <= lo < hi:
                problems.append(f"--interval needs 0 <= lo < hi, got ({lo}, {hi})")
        if self.batch_size is not None and self.batch_size < 1:
            problems.append(f"--batch-size must be >= 1, got {self.batch_size}")
        if self.workers < 1:
            problems.append(f"--workers must be >= 1, got {self.workers}")
        return problems

    def validated(self) -> "ExperimentConfig":
        problems = self.violations()
        if problems:
            raise UsageError(problems)
        return self

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["n_values"] = list(self.n_values)
        payload["m_values"] = list(self.m_values)
        payload["intervals"] = [list(pair) for pair in self.intervals]
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ExperimentConfig":
        errors = sorted(_CONFIG_VALIDATOR.iter_errors(payload), key=lambda e: [str(p) for p in e.path])
        if errors:
            raise UsageError([_describe(error) for error in errors])
        data = dict(payload)
        if "n_values" in data:
            data["n_values"] = tuple(int(v) for v in data["n_values"])
        if "m_values" in data:
            data["m_values"] = tuple(float(v) for v in data["m_values"])
        if "intervals" in data:
            data["intervals"] = tuple((float(lo), float(hi)) for lo, hi in data["intervals"])
        return cls(**data)

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)


# config-file spellings of the command-line flags whose dest differs
FILE_KEY_ALIASES = {"eps": "epsilon"}

# placeholder contents for custom:@file while only the weight-spec syntax is checked
_PLACEHOLDER = WeightSequence(a=[1.0, 1.0])


def load_config_file(path: str) -> Dict[str, Any]:
    """Defaults from a YAML (or JSON, a YAML subset) file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError([f"cannot read config file {path}: {exc}"]) from None
    if not isinstance(data, dict):
        raise UsageError([f"config file {path} must contain a mapping"])
    values = {}
    for key, value in data.items():
        key = str(key).replace("-", "_")
        values[FILE_KEY_ALIASES.get(key, key)] = value
    return values


def load_custom_weights(path: str) -> WeightSequence:
    """Read, schema-check and validate a custom weights file."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DomainError(f"cannot read custom weights {path}: {exc}") from None
    try:
        jsonschema.validate(payload, WEIGHTS_FILE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DomainError(f"custom weights {path} do not match the schema: {exc.message}") from None
    weights = WeightSequence.from_dict(payload)
    violations = validate(weights)
    if violations:
        report = "; ".join(str(v) for v in violations)
        raise DomainError(f"custom weights {path} are invalid: {report}")
    return weights


def resolve_family(config: ExperimentConfig) -> Optional[WeightFamily]:
    """The weight family named by --weights, or None for the Euclidean sphere."""
    if config.euclidean:
        return None
    custom = None
    if config.weights.startswith("custom:@"):
        custom = load_custom_weights(config.weights[len("custom:@"):])
    return weight_family_from_spec(config.weights, custom=custom)


def resolve_dimension(config: ExperimentConfig, family: Optional[WeightFamily]) -> int:
    if family is not None and family.fixed_n is not None:
        if config.n is not None and config.n != family.fixed_n:
            raise DomainError(f"--n {config.n} disagrees with the custom weights' n={family.fixed_n}")
        return family.fixed_n
    if config.n is None:
        raise DomainError("this command needs --n")
    return config.n


def setup_logging(verbosity: int = 0) -> None:
    """Colored logs on stderr; WARNING by default, INFO with -v, DEBUG with -vv."""
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(colorlog.ColoredFormatter(
        "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s",
        log_colors={
            "DEBUG": "cyan",
            "INFO": "green",
            "WARNING": "yellow",
            "ERROR": "red",
            "CRITICAL": "red,bg_white",
        },
    ))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)
