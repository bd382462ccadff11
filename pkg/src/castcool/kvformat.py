"""Plain-text key-value file format with optional table blocks.

Files consist of `key = value` lines, comments starting with `#`, and
`[name]` blocks whose body is whitespace-separated numeric rows.  This is
the on-disk format for material, layout and experiment files.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def parse_kv_text(text: str) -> tuple[dict, dict]:
    """Return (scalars, tables) parsed from `text`.

    Scalar values are kept as strings; callers coerce types.  Table blocks
    become float arrays of shape (rows, columns).
    """
    scalars: dict[str, str] = {}
    tables: dict[str, list[list[float]]] = {}
    block: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            block = line[1:-1].strip()
            if not block:
                raise ConfigError(f"line {lineno}: empty block name")
            tables.setdefault(block, [])
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if block is not None:
                key = f"{block}.{key}"
            scalars[key] = value.strip()
            continue
        if block is None:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        try:
            tables[block].append([float(tok) for tok in line.split()])
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad table row {raw!r}") from exc
    arrays = {}
    for name, rows in tables.items():
        if not rows:
            continue
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ConfigError(f"block [{name}] has ragged rows")
        arrays[name] = np.asarray(rows, dtype=float)
    return scalars, arrays


def read_kv_file(path) -> tuple[dict, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_text(fh.read())


def format_kv(scalars: dict, tables: dict | None = None, header: str = "") -> str:
    out = []
    if header:
        out.extend(f"# {line}" for line in header.splitlines())
    grouped: dict[str | None, list[tuple[str, object]]] = {}
    for key, value in scalars.items():
        block, _, name = key.rpartition(".")
        grouped.setdefault(block or None, []).append((name, value))
    for name, value in grouped.get(None, []):
        out.append(f"{name} = {value}")
    for block in sorted(k for k in grouped if k is not None):
        out.append("")
        out.append(f"[{block}]")
        for name, value in grouped[block]:
            out.append(f"{name} = {value}")
    for name, arr in (tables or {}).items():
        out.append("")
        out.append(f"[{name}]")
        for row in np.atleast_2d(np.asarray(arr, dtype=float)):
            out.append(" ".join(f"{x:.10g}" for x in row))
    return "\n".join(out) + "\n"


def write_kv_file(path, scalars: dict, tables: dict | None = None, header: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_kv(scalars, tables, header))


def get_float(scalars: dict, key: str, default=None) -> float:
    if key not in scalars:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return float(default)
    try:
        return float(scalars[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r} is not a number: {scalars[key]!r}") from exc


def get_int(scalars: dict, key: str, default=None) -> int:
    value = get_float(scalars, key, default)
    if value != int(value):
        raise ConfigError(f"key {key!r} must be an integer, got {value}")
    return int(value)


def get_str(scalars: dict, key: str, default=None) -> str:
    if key not in scalars:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return str(default)
    return scalars[key]


def get_floats(scalars: dict, key: str, default=None) -> list[float]:
    if key not in scalars:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return list(default)
    try:
        return [float(tok) for tok in scalars[key].split()]
    except ValueError as exc:
        raise ConfigError(f"key {key!r} is not a number list: {scalars[key]!r}") from exc
