"""
circsim utilities
"""
import csv
import dataclasses
import functools
import json
import math
import os
from typing import Any, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError


def format_float(value, name='value') -> str:
    """
    Decimal text of ``value`` with 17 significant digits, enough to round-trip any double.
    """
    try:
        return format(float(value), '.17g')
    except (TypeError, ValueError) as err:
        raise TypeError('%s (%.20r) is not a real number' % (name.title(), value)) from err


def parse_float(text, name='value') -> float:
    """
    Parse decimal text into a finite float.
    """
    try:
        value = float(text)
    except (TypeError, ValueError) as err:
        raise ValueError('%s (%.20r) is not a decimal number' % (name.title(), text)) from err

    if not math.isfinite(value):
        raise ValueError('%s (%.20r) is not finite' % (name.title(), text))

    return value


def log_call(func):
    """
    Decorator to log the command being executed.
    """

    @functools.wraps(func)
    def wrapper(ref, *args, **kwargs):
        command = getattr(ref, "command", None) or func.__name__
        ref.logger.debug(f"Running {command.upper()} with {args!r} {kwargs!r}")
        return func(ref, *args, **kwargs)

    return wrapper


def locate_key(text: str, key: str) -> Optional[int]:
    """
    Line number (1-based) of the first occurrence of ``"key"`` in a JSON document.
    """
    needle = json.dumps(key)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def dataclass_from_mapping(cls, mapping: Mapping[str, Any], where: str = None):
    """
    Build the frozen dataclass ``cls`` from ``mapping``, rejecting unknown keys.
    """
    if mapping is None:
        mapping = {}
    if not isinstance(mapping, Mapping):
        raise ConfigurationError(f"{where or cls.__name__} must be an object, got {type(mapping).__name__}")

    known = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(mapping) - known)

    if unknown:
        raise ConfigurationError(
            f"Unknown key(s) in {where or cls.__name__}: " + ", ".join(unknown) +
            f" (valid keys: {', '.join(sorted(known))})"
        )

    return cls(**dict(mapping))


def comment_header(config: Mapping[str, Any] = None, seed: Optional[int] = None) -> List[str]:
    lines = []
    if config is not None:
        lines.append("config: " + json.dumps(config, sort_keys=True, default=str))
    if seed is not None:
        lines.append(f"seed: {seed}")
    return lines


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence[Any]], header: Sequence[str] = ()):
    """
    Write a CSV file whose first lines are ``# ...`` comments (config echo, seed).

    Floats are written with 17 significant digits so reruns compare byte for byte.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)

    with open(path, "w", newline="") as fp:
        for line in header:
            fp.write(f"# {line}\n")

        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_csv_columns(path) -> Mapping[str, np.ndarray]:
    """
    Read a numeric CSV written by :func:`write_csv` into a ``{column: array}`` mapping.
    """
    try:
        with open(path) as fp:
            lines = [line for line in fp if not line.lstrip().startswith("#")]
        # genfromtxt would take a leading comment line for the header row
        data = np.genfromtxt(lines, delimiter=",", names=True, dtype=float)
    except (OSError, ValueError) as err:
        raise ConfigurationError(f"Cannot read CSV: {err}", path=str(path)) from err

    data = np.atleast_1d(data)
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}


def write_json(path, document: Mapping[str, Any]):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fp:
        json.dump(document, fp, indent=2, sort_keys=True, default=_json_default)
        fp.write("\n")


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return value


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    return str(obj)


__all__ = [
    "format_float", "parse_float", "log_call", "locate_key", "dataclass_from_mapping", "comment_header",
    "write_csv", "read_csv_columns", "write_json"
]
