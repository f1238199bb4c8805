"""Plain-text stream files and JSON helpers.

A stream file is UTF-8 text::

    # label=a
    # angle_rad=1.0471975511965976
    # seed=42
    +1
    -1
    ...

``label`` and ``angle_rad`` are required, ``seed`` is optional. One outcome
per line, written as ``+1`` or ``-1``.
"""

from __future__ import annotations

import json
import os
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core_streams import SpinStream, StreamError, label_slug, normalize_label

STREAM_SUFFIX = ".stream"


class StreamFormatError(StreamError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def parse_seed(text: str | int) -> int:
    """Decimal or 0x-hex unsigned 64-bit seed."""
    if isinstance(text, int):
        value = text
    else:
        s = text.strip().lower()
        try:
            value = int(s, 16) if s.startswith("0x") else int(s, 10)
        except ValueError:
            raise ValueError(f"seed {text!r} is not a decimal or 0x-hex integer") from None
    if not 0 <= value < 2**64:
        raise ValueError(f"seed {value} outside unsigned 64-bit range")
    return value


def format_stream(stream: SpinStream, seed: int | None = None) -> str:
    lines = [f"# label={stream.label}", f"# angle_rad={stream.angle!r}"]
    if seed is not None:
        lines.append(f"# seed={seed}")
    body = np.where(stream.outcomes > 0, "+1", "-1")
    return "\n".join(lines) + "\n" + "\n".join(body.tolist()) + "\n"


def write_stream(path: str | os.PathLike, stream: SpinStream, seed: int | None = None) -> Path:
    path = Path(path)
    # newline="\n" keeps the bytes identical across platforms.
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_stream(stream, seed))
    return path


def stream_filename(label: str) -> str:
    return label_slug(label) + STREAM_SUFFIX


def read_stream(path: str | os.PathLike) -> tuple[SpinStream, int | None]:
    """Parse a stream file, returning the stream and its seed header (if any)."""
    path = Path(path)
    header: dict[str, str] = {}
    values: list[int] = []
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise StreamFormatError(path, None, f"not UTF-8 text ({exc.reason})") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if values:
                raise StreamFormatError(path, lineno, "header line after data")
            body = line[1:].strip()
            if "=" not in body:
                continue  # free comment
            key, _, val = body.partition("=")
            header[key.strip()] = val.strip()
            continue
        if line == "+1":
            values.append(1)
        elif line == "-1":
            values.append(-1)
        else:
            raise StreamFormatError(path, lineno, f"token {line!r} is not +1 or -1")

    for key in ("label", "angle_rad"):
        if key not in header:
            raise StreamFormatError(path, None, f"missing header '# {key}=...'")
    try:
        label = normalize_label(header["label"])
    except StreamError as exc:
        raise StreamFormatError(path, None, str(exc)) from None
    try:
        angle = float(header["angle_rad"])
    except ValueError:
        raise StreamFormatError(path, None, f"bad angle_rad {header['angle_rad']!r}") from None
    seed = None
    if "seed" in header:
        try:
            seed = parse_seed(header["seed"])
        except ValueError as exc:
            raise StreamFormatError(path, None, str(exc)) from None
    if not values:
        raise StreamFormatError(path, None, "no outcomes")
    return SpinStream(np.array(values, dtype=np.int8), angle, label), seed


def _default(obj):
    if isinstance(obj, Fraction):
        return {"numerator": obj.numerator, "denominator": obj.denominator}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def write_json(path: str | os.PathLike, obj) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
    return path


def read_json(path: str | os.PathLike):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
