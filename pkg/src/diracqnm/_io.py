"""Artifact plumbing for the command line: atomic file writes,
full-precision CSV tables with JSON mirrors, and INI-style config files
with line-numbered diagnostics."""

from __future__ import annotations

import configparser
import json
import os
import tempfile
from dataclasses import dataclass

__all__ = [
    "ConfigError",
    "ConfigFile",
    "atomic_write_bytes",
    "atomic_write_text",
    "format_value",
    "load_config_file",
    "write_csv",
    "write_json",
]


class ConfigError(ValueError):
    """A config file or option that cannot be used; the message carries
    ``path:line`` when the offending line is known."""


def atomic_write_bytes(path, data: bytes) -> None:
    """Write ``data`` to ``path`` via a temporary file in the same
    directory plus an atomic rename, so readers never see a partial
    file and reruns replace artifacts in one step."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def format_value(value) -> str:
    """One CSV cell: floats in full-precision scientific notation
    (17 significant digits), ints and strings verbatim."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return "%.16e" % value
    if isinstance(value, str):
        return value
    # numpy scalars and anything else numeric-like
    try:
        as_int = int(value)
        if as_int == value:
            return str(as_int)
    except (TypeError, ValueError):
        pass
    return "%.16e" % float(value)


def write_csv(path, columns, rows) -> str:
    """Write a one-line-header CSV atomically; returns the path."""
    lines = [",".join(columns)]
    ncol = len(columns)
    for row in rows:
        cells = [format_value(cell) for cell in row]
        if len(cells) != ncol:
            raise ValueError(
                f"row has {len(cells)} cells but the header has {ncol}"
            )
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")
    return os.fspath(path)


def write_json(path, payload) -> str:
    """Write a sorted, indented JSON document atomically."""
    atomic_write_text(
        path, json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    return os.fspath(path)


@dataclass(frozen=True)
class ConfigFile:
    """A parsed INI-style config plus enough source information to
    point error messages at the offending line."""

    path: str
    sections: dict

    def get(self, section: str, key: str):
        """The raw string for ``[section] key``, or None when absent."""
        return self.sections.get(section, {}).get(key)

    def locate(self, section: str, key: str) -> int:
        """Best-effort 1-based line number of ``key`` inside
        ``[section]`` (0 when it cannot be found)."""
        try:
            with open(self.path, "r", encoding="utf-8") as handle:
                lines = handle.readlines()
        except OSError:
            return 0
        current = None
        for lineno, line in enumerate(lines, start=1):
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                current = stripped[1:-1].strip().lower()
                continue
            if current == section.lower():
                name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
                if name.lower() == key.lower():
                    return lineno
        return 0

    def error(self, section: str, key: str, raw: str, reason: str):
        lineno = self.locate(section, key)
        where = f"{self.path}:{lineno}" if lineno else self.path
        return ConfigError(
            f"{where}: [{section}] {key} = {raw!r}: {reason}"
        )


def load_config_file(path) -> ConfigFile:
    """Parse an INI config; parse failures raise :class:`ConfigError`
    with a ``path:line`` prefix."""
    path = os.fspath(path)
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle, source=path)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config file: {exc}") from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}: option before any [section] header"
        ) from exc
    except configparser.ParsingError as exc:
        errors = getattr(exc, "errors", None)
        if errors:
            lineno, text = errors[0]
            raise ConfigError(
                f"{path}:{lineno}: cannot parse line {text}"
            ) from exc
        raise ConfigError(f"{path}: {exc}") from exc
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f"{path}:{lineno}" if lineno else path
        raise ConfigError(f"{where}: {exc.message}") from exc
    sections = {
        name.lower(): {key: value for key, value in parser.items(name)}
        for name in parser.sections()
    }
    return ConfigFile(path=path, sections=sections)
