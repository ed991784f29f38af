"""`key = value` configuration files.

UTF-8 text; blank lines and lines starting with # are ignored; values keep
everything after the first =, stripped. Flag precedence is CLI > config file
> built-in default.
"""

from pathlib import Path


def parse_config(path) -> dict[str, str]:
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def resolve(flag_value, config: dict[str, str], key: str, default, cast):
    """First non-missing of CLI flag, config-file entry, default."""
    if flag_value is not None:
        return flag_value
    if key in config:
        raw = config[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return default
