"""Sectioned key=value text files.

One parser serves both geometric profiles and run configuration files:
`#` comments, `[section]` headers, `key = value` lines. Keys before the
first header land in the "" section.
"""

from __future__ import annotations

import os

from .errors import ConfigError


def parse_sections(text: str, source: str = "<string>") -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {"": {}}
    current = sections[""]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"{source}:{lineno}: empty section name")
            if name in sections:
                raise ConfigError(f"{source}:{lineno}: duplicate section [{name}]")
            sections[name] = {}
            current = sections[name]
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        current[key] = value.strip()
    return sections


def load_sections(path: str | os.PathLike) -> dict[str, dict[str, str]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_sections(text, source=os.fspath(path))
