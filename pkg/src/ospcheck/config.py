"""Physical and renormalization parameters consumed by the bound formulas.

All numeric fields accept ``float`` or ``fractions.Fraction``; the derived
quantities keep the input type so that exact comparisons remain possible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Union

import yaml

Number = Union[float, Fraction]

#: coupling threshold below which positivity is claimed
WEAK_CONDITION = Fraction(1, 6)
#: coupling range in which the splitting-sequence bounds were constructed
CONSTRUCTION_RANGE = Fraction(1, 25)

RENORM_KEYS = ("a0", "rho0", "d0", "n3_val", "n3_deriv")
MODEL_KEYS = ("lambda", "mass") + RENORM_KEYS


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration input."""


def _finite(x: Number) -> bool:
    return math.isfinite(float(x))


@dataclass(frozen=True)
class PhysicalParams:
    lam: Number
    mass: Number

    def __post_init__(self) -> None:
        if not _finite(self.lam) or self.lam <= 0:
            raise ConfigError("lambda must be positive")
        if not _finite(self.mass) or self.mass <= 0:
            raise ConfigError("mass must be positive")

    def _threshold(self, exact: Fraction) -> Number:
        # a float coupling is compared with the float nearest the threshold,
        # so that 1/6 typed as a float is not silently "inside"
        return float(exact) if isinstance(self.lam, float) else exact

    @property
    def in_weak_range(self) -> bool:
        return self.lam < self._threshold(WEAK_CONDITION)

    @property
    def in_construction_range(self) -> bool:
        return self.lam <= self._threshold(CONSTRUCTION_RANGE)

    @property
    def range_flag(self) -> str:
        if self.in_construction_range:
            return "construction"
        if self.in_weak_range:
            return "weak-condition"
        return "outside-weak-condition"


@dataclass(frozen=True)
class RenormConstants:
    """Mass-shell loop constants.

    ``defaulted`` lists the keys that were not supplied and fell back to 0;
    it is provenance only and does not take part in equality.
    """

    a0: Number = 0
    rho0: Number = 0
    d0: Number = 0
    n3_val: Number = 0
    n3_deriv: Number = 0
    defaulted: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        for key in RENORM_KEYS:
            v = getattr(self, key)
            if not _finite(v) or v < 0:
                raise ConfigError(f"{key} must be finite and >= 0")

    def gamma_max(self, lam: Number) -> Number:
        return 1 + 9 * lam * (1 + 6 * lam * lam)

    gamma_min = 1

    def rho_max(self, lam: Number) -> Number:
        return 6 * lam * lam * self.n3_deriv

    def a_max(self, lam: Number) -> Number:
        return 6 * lam * self.n3_val

    def any_positive(self) -> bool:
        return any(getattr(self, k) > 0 for k in RENORM_KEYS)

    def as_dict(self) -> dict[str, float]:
        return {k: float(getattr(self, k)) for k in RENORM_KEYS}


def constants_from_mapping(doc: Mapping[str, Any]) -> RenormConstants:
    values = {}
    defaulted = []
    for key in RENORM_KEYS:
        if key in doc and doc[key] is not None:
            values[key] = _as_number(doc[key], key)
        else:
            defaulted.append(key)
    return RenormConstants(**values, defaulted=tuple(defaulted))


def _as_number(value: Any, key: str) -> Number:
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got a boolean")
    if isinstance(value, (int, float, Fraction)):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value) if "/" in value else float(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {value!r} as a number") from exc
    raise ConfigError(f"{key}: expected a number, got {type(value).__name__}")


def parse_document(source: Union[str, Path, Mapping[str, Any]]) -> dict[str, Any]:
    """Parse a key/value document given as a mapping, a path, or raw text.

    Raw text and ``.json``/``.yaml``/``.yml`` files are accepted; YAML is a
    superset of JSON so one parser covers both.
    """
    if isinstance(source, Mapping):
        return dict(source)
    text = source
    if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source and Path(source).suffix in {".json", ".yaml", ".yml"}
    ):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        doc = yaml.safe_load(text) if not str(text).lstrip().startswith("{") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"parse failure: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("parse failure: config must be a key/value mapping")
    return doc


def load_config(source: Union[str, Path, Mapping[str, Any]]) -> tuple[PhysicalParams, RenormConstants]:
    doc = parse_document(source)
    unknown = sorted(set(doc) - set(MODEL_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    for key in ("lambda", "mass"):
        if key not in doc:
            raise ConfigError(f"missing required key: {key}")
    params = PhysicalParams(_as_number(doc["lambda"], "lambda"), _as_number(doc["mass"], "mass"))
    return params, constants_from_mapping(doc)
