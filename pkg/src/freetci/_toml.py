"""TOML reading on interpreters without :mod:`tomllib`.

Python 3.11+ provides ``tomllib`` and it is used when available.  On 3.10 we
fall back to a reader for the subset this package itself writes: top-level
keys, ``[table]`` headers, comments, and values that are strings, booleans,
integers, floats or flat arrays thereof.  That subset is all the shipped
potential blocks and CLI config files ever contain.
"""

import re

try:  # pragma: no cover - version dependent
    import tomllib as _tomllib
except ImportError:  # pragma: no cover
    _tomllib = None

from .errors import ConfigError

_KEY_RE = re.compile(r"^[A-Za-z0-9_-]+$")


def _parse_scalar(text):
    text = text.strip()
    if not text:
        raise ConfigError("empty TOML value")
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"unsupported TOML value: {text!r}") from None


def _split_array_items(body):
    items, depth, start, in_str = [], 0, 0, False
    for i, ch in enumerate(body):
        if ch == '"':
            in_str = not in_str
        elif not in_str:
            if ch == "[":
                depth += 1
            elif ch == "]":
                depth -= 1
            elif ch == "," and depth == 0:
                items.append(body[start:i])
                start = i + 1
    tail = body[start:].strip()
    if tail:
        items.append(tail)
    return items


def _parse_value(text):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        body = text[1:-1].strip()
        if not body:
            return []
        return [_parse_value(item) for item in _split_array_items(body)]
    return _parse_scalar(text)


def _strip_comment(line):
    out, in_str = [], False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def _loads_subset(text):
    root = {}
    table = root
    # values may span lines only inside arrays; join bracketed continuations
    pending = ""
    for raw in text.splitlines():
        line = _strip_comment(raw).strip()
        if not line and not pending:
            continue
        line = (pending + " " + line).strip() if pending else line
        if "=" in line and line.count("[") > line.count("]"):
            pending = line
            continue
        pending = ""
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name or not all(_KEY_RE.match(p) for p in name.split(".")):
                raise ConfigError(f"bad TOML table header: {line!r}")
            table = root
            for part in name.split("."):
                table = table.setdefault(part, {})
                if not isinstance(table, dict):
                    raise ConfigError(f"TOML table clashes with a value: {name!r}")
            continue
        if "=" not in line:
            raise ConfigError(f"cannot parse TOML line: {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().strip('"')
        if not _KEY_RE.match(key):
            raise ConfigError(f"bad TOML key: {key!r}")
        table[key] = _parse_value(value)
    if pending:
        raise ConfigError(f"unterminated TOML array: {pending!r}")
    return root


def loads(text):
    """Parse TOML text into a dict."""
    if _tomllib is not None:
        try:
            return _tomllib.loads(text)
        except _tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc
    return _loads_subset(text)


def load_path(path):
    """Read and parse a TOML file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize {type(value).__name__} to TOML")


def dumps(data):
    """Serialize a dict of flat tables (and top-level scalars) to TOML."""
    lines = []
    tables = []
    for key, value in data.items():
        if isinstance(value, dict):
            tables.append((key, value))
        else:
            lines.append(f"{key} = {_format_value(value)}")
    for name, table in tables:
        if lines and lines[-1] != "":
            lines.append("")
        lines.append(f"[{name}]")
        for key, value in table.items():
            lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"
