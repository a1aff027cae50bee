"""JSON run configuration.

Example::

    {
      "family": {"preset": "group", "eta": 1.0},
      "z_interval": [-10, 10],
      "tolerances": {"eps_f": 1e-9, "eps_red": 1e-6, "casimir_tol": 1e-8},
      "output_dir": "out"
    }

A custom family replaces the preset with
``{"custom": {"U": "...", "V": "...", "P": "...", "Q": "..."}}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .expr import ParseError
from .family import DEFAULT_Z_INTERVAL, Family, FamilyError, FamilySpec, build_family


class ConfigError(ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class Tolerances:
    eps_f: float = 1e-9
    eps_axis: float = 1e-9
    eps_red: float = 1e-6
    casimir_tol: float = 1e-8
    rtol: float = 1e-10
    atol: float = 1e-12


@dataclass(frozen=True)
class Config:
    family: FamilySpec
    z_interval: tuple[float, float] = DEFAULT_Z_INTERVAL
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: str = "out"

    def build(self) -> Family:
        return build_family(self.family, self.z_interval)

    def with_output_dir(self, out: str | None) -> "Config":
        return self if out is None else replace(self, output_dir=out)


_TOP_KEYS = {"family", "z_interval", "tolerances", "output_dir"}
_FAMILY_KEYS = {"preset", "eta", "custom"}
_CUSTOM_KEYS = {"U", "V", "P", "Q"}
_TOL_KEYS = set(Tolerances.__dataclass_fields__)


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _number(v, what, path, text, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{what} must be a number", path, _line_of(text, key))
    return float(v)


def parse_config(text: str, path: str | None = None) -> Config:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", path, 1)

    def reject_unknown(obj, allowed, where):
        for k in obj:
            if k not in allowed:
                raise ConfigError(f"unknown key {k!r} in {where}", path, _line_of(text, k))

    reject_unknown(data, _TOP_KEYS, "config")
    if "family" not in data:
        raise ConfigError("missing 'family'", path)
    fam = data["family"]
    if not isinstance(fam, dict):
        raise ConfigError("'family' must be an object", path, _line_of(text, "family"))
    reject_unknown(fam, _FAMILY_KEYS, "family")
    try:
        if "custom" in fam:
            if "preset" in fam or "eta" in fam:
                raise ConfigError("'custom' excludes 'preset' and 'eta'", path, _line_of(text, "custom"))
            cus = fam["custom"]
            if not isinstance(cus, dict):
                raise ConfigError("'custom' must be an object", path, _line_of(text, "custom"))
            reject_unknown(cus, _CUSTOM_KEYS, "family.custom")
            missing = _CUSTOM_KEYS - set(cus)
            if missing:
                raise ConfigError(f"custom family lacks {sorted(missing)}", path, _line_of(text, "custom"))
            for k in _CUSTOM_KEYS:
                if not isinstance(cus[k], str):
                    raise ConfigError(f"custom {k} must be a string", path, _line_of(text, k))
            spec = FamilySpec.custom(cus["U"], cus["V"], cus["P"], cus["Q"])
        else:
            if "preset" not in fam:
                raise ConfigError("family needs 'preset' or 'custom'", path, _line_of(text, "family"))
            eta = _number(fam.get("eta", 1.0), "eta", path, text, "eta")
            spec = FamilySpec(preset=fam["preset"], eta=eta)
    except FamilyError as exc:
        raise ConfigError(str(exc), path, _line_of(text, "family")) from None

    z_interval = DEFAULT_Z_INTERVAL
    if "z_interval" in data:
        zi = data["z_interval"]
        if not (isinstance(zi, list) and len(zi) == 2):
            raise ConfigError("'z_interval' must be [z_min, z_max]", path, _line_of(text, "z_interval"))
        z_interval = tuple(_number(v, "z_interval entry", path, text, "z_interval") for v in zi)
        if not z_interval[0] < z_interval[1]:
            raise ConfigError("'z_interval' must have z_min < z_max", path, _line_of(text, "z_interval"))

    tol = Tolerances()
    if "tolerances" in data:
        t = data["tolerances"]
        if not isinstance(t, dict):
            raise ConfigError("'tolerances' must be an object", path, _line_of(text, "tolerances"))
        reject_unknown(t, _TOL_KEYS, "tolerances")
        vals = {k: _number(v, k, path, text, k) for k, v in t.items()}
        for k, v in vals.items():
            if not v > 0:
                raise ConfigError(f"tolerance {k} must be positive", path, _line_of(text, k))
        tol = Tolerances(**vals)

    out = data.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("'output_dir' must be a string", path, _line_of(text, "output_dir"))
    return Config(spec, z_interval, tol, out)


def load_config(path) -> Config:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(p)) from None
    return parse_config(text, str(p))


def build_checked(cfg: Config, path: str | None = None) -> Family:
    """Build the family, reporting construction failures as config errors."""
    try:
        return cfg.build()
    except (FamilyError, ParseError) as exc:
        raise ConfigError(f"family construction failed: {exc}", path) from None
