"""Line-oriented ``key = value`` files with optional ``[section]`` headers.

Both relation files and scenario files use this format; every entry keeps
its line number so that semantic errors can point at the offending line.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


@dataclass(frozen=True)
class Entry:
    section: str
    key: str
    value: str
    line: int


def parse_text(text: str, path: str | None = None) -> list[Entry]:
    entries: list[Entry] = []
    seen: set[tuple[str, str]] = set()
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"bad section header {raw.strip()!r}", lineno, path)
            section = line[1:-1].strip().lower()
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno, path)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno, path)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        seen.add((section, key))
        entries.append(Entry(section, key, value, lineno))
    if not entries:
        raise ConfigError("file contains no entries", None, path)
    return entries


def parse_file(path: str | Path) -> list[Entry]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}", None, str(path)) from None
    return parse_text(text, str(path))


def to_float(entry: Entry, path: str | None = None) -> float:
    try:
        return float(entry.value)
    except ValueError:
        raise ConfigError(f"{entry.key} must be a number, got {entry.value!r}", entry.line, path) from None


def to_int(entry: Entry, path: str | None = None) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise ConfigError(f"{entry.key} must be an integer, got {entry.value!r}", entry.line, path) from None


def to_bool(entry: Entry, path: str | None = None) -> bool:
    v = entry.value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{entry.key} must be on/off, got {entry.value!r}", entry.line, path)
