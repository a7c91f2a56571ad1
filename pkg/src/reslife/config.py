"""Flat ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored.  Values are coerced
to the type of the target dataclass field's default; tuples are written as
comma-separated numbers.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Mapping, Optional


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def load_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text)


def format_config(values: Mapping[str, object]) -> str:
    lines = []
    for key, value in values.items():
        if isinstance(value, (tuple, list)):
            value = ",".join(_plain(v) for v in value)
        elif value is None:
            value = ""
        else:
            value = _plain(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _plain(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _coerce(name: str, default, raw: str):
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes"):
                return True
            if raw.lower() in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        return raw
    except ValueError:
        raise ConfigError(f"{name}: cannot interpret {raw!r} as {type(default).__name__}") from None


def build_dataclass(cls, values: Mapping[str, str], overrides: Optional[Mapping[str, object]] = None):
    """Instantiate ``cls`` from string values, then apply already-typed overrides."""
    defaults = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in values.items():
        if key not in known:
            raise ConfigError(f"unknown setting {key!r} for {cls.__name__}")
        kwargs[key] = _coerce(key, getattr(defaults, key), raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def dataclass_values(obj) -> dict[str, object]:
    return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
