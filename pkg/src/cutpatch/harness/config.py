"""Study configuration: defaults, environment, command-line flags and config files."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional

from ..assembly.discretization import DEFAULT_BETA, DEFAULT_GAMMA, FormParams
from ..geometry.surfaces import DEFAULT_SCALE
from ..utils.errors import ConfigError
from .problems import PROBLEM_NAMES

STUDIES = ("convergence", "rotation", "condition", "boundary")
DEFAULT_OUT = "results.csv"
DEFAULT_SWEEP = (1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)


def default_meshes(order):
    return [8, 16, 32, 64] if order == 1 else [4, 8, 16, 32]


@dataclass
class StudyConfig:
    study: str = "convergence"
    problem: str = "sphere"
    order: int = 1
    meshes: Optional[List[int]] = None
    beta: float = DEFAULT_BETA
    gamma: List[float] = field(default_factory=lambda: [DEFAULT_GAMMA])
    gammas: List[float] = field(default_factory=lambda: list(DEFAULT_SWEEP))
    samples: int = 20
    seed: int = 42
    scale: float = DEFAULT_SCALE
    out: str = field(default_factory=lambda: os.environ.get("CUTPATCH_OUT", DEFAULT_OUT))
    check: bool = False
    timing: bool = False
    gnuplot: bool = False

    def __post_init__(self):
        if self.meshes is None:
            self.meshes = default_meshes(self.order)

    def validate(self):
        """Raise ConfigError for inconsistent settings; return self otherwise."""
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study '{self.study}' (choose from {', '.join(STUDIES)})")
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem '{self.problem}' (choose from {', '.join(PROBLEM_NAMES)})")
        if self.order not in (1, 2, 3):
            raise ConfigError(f"order must be 1, 2 or 3, got {self.order}")
        if not self.meshes or any(n < 2 for n in self.meshes):
            raise ConfigError("meshes must be a list of grid sizes >= 2")
        if any(b <= a for a, b in zip(self.meshes[:-1], self.meshes[1:])):
            raise ConfigError(f"meshes must be strictly increasing, got {self.meshes}")
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if any(g < 0 for g in list(self.gamma) + list(self.gammas)):
            raise ConfigError("gamma values must be nonnegative")
        if len(self.gamma) not in (1, self.order):
            raise ConfigError(f"gamma needs 1 or {self.order} values, got {len(self.gamma)}")
        if self.study == "rotation" and self.samples < 2:
            raise ConfigError(f"the rotation study needs at least 2 samples, got {self.samples}")
        if self.study == "condition" and self.samples < 1:
            raise ConfigError(f"the condition study needs at least 1 placement per grid, got {self.samples}")
        if not 0 < self.scale <= 2 ** -0.5:
            raise ConfigError(f"scale must lie in (0, 1/sqrt(2)], got {self.scale}")
        return self

    def form_params(self, gamma=None):
        gamma = self.gamma if gamma is None else gamma
        if isinstance(gamma, (int, float)):
            gamma = [gamma]
        return FormParams(beta=self.beta, gamma=tuple(float(g) for g in gamma))

    def with_overrides(self, **values):
        return replace(self, **values)


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


PARSERS = {
    "study": str,
    "problem": str,
    "order": int,
    "meshes": _int_list,
    "beta": float,
    "gamma": _float_list,
    "gammas": _float_list,
    "samples": int,
    "seed": int,
    "scale": float,
    "out": str,
    "check": _bool,
    "timing": _bool,
    "gnuplot": _bool,
}


def parse_value(key, text):
    try:
        return PARSERS[key](text)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value for '{key}': {text!r} ({e})") from e


def load_config_file(path):
    """Read ``key = value`` lines; ``#`` starts a comment, keys may use - or _.

    Raises:
        ConfigError: for unreadable files, malformed lines or unknown keys
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        values[key] = parse_value(key, value)
    return values


def build_config(flags=None, config_file=None):
    """Defaults, then CUTPATCH_OUT, then ``flags`` (non-None entries), then the config file."""
    cfg = StudyConfig()
    known = {f.name for f in fields(StudyConfig)}
    values = {k: v for k, v in (flags or {}).items() if v is not None and k in known}
    if config_file:
        values.update(load_config_file(config_file))
    if "order" in values and "meshes" not in values:
        values["meshes"] = default_meshes(values["order"])
    return cfg.with_overrides(**values).validate()
