"""CSV, key-value sidecar and run-manifest files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


class FormatError(ValueError):
    pass


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise FormatError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path, expected_header=None):
    """Return (header, rows) with every row checked against the header width."""
    try:
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    if expected_header is not None and tuple(header) != tuple(expected_header):
        raise FormatError(f"{path}: unexpected header {header}")
    for n, r in enumerate(body, 2):
        if len(r) != len(header):
            raise FormatError(f"{path}:{n}: expected {len(header)} fields, got {len(r)}")
    return header, body


def write_kv(path, mapping):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{k} = {_fmt(v)}" for k, v in mapping.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


@dataclass
class RunManifest:
    command: str
    argv: list
    config: dict
    artifacts: list = field(default_factory=list)
    duration_s: float = 0.0
    version: str = __version__

    def to_mapping(self):
        out = {
            "command": self.command,
            "argv": " ".join(self.argv),
            "version": self.version,
            "duration_s": round(self.duration_s, 3),
        }
        out.update({f"config.{k}": v for k, v in self.config.items()})
        for i, a in enumerate(self.artifacts):
            out[f"artifact.{i}"] = str(a)
        return out

    def write(self, path):
        return write_kv(path, self.to_mapping())
