"""Problem configuration files and JSON encoding of complex data.

Complex numbers are written as ``[re, im]`` pairs everywhere; plain numbers
are accepted on input as real values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .moments import MomentFamily

__all__ = ["ProblemConfig", "load_config", "parse_complex", "parse_points", "encode", "dumps"]


def parse_complex(x) -> complex:
    if isinstance(x, bool):
        raise ConfigError(f"not a number: {x!r}")
    if isinstance(x, (int, float)):
        return complex(float(x), 0.0)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        try:
            return complex(x.replace(" ", "").replace("i", "j"))
        except ValueError as exc:
            raise ConfigError(f"cannot read {x!r} as a complex number") from exc
    raise ConfigError(f"cannot read {x!r} as a complex number")


@dataclass(frozen=True)
class ProblemConfig:
    matrix: np.ndarray
    moment: MomentFamily
    z0: complex | None = None
    y0: np.ndarray | None = None
    N: int = 150
    tol: float = 1e-10
    hints: tuple[complex, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def has_cauchy(self) -> bool:
        return self.y0 is not None

    @classmethod
    def from_dict(cls, data: dict) -> ProblemConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("matrix", "moment"):
            if key not in data:
                raise ConfigError(f"config is missing {key!r}")
        rows = data["matrix"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise ConfigError("matrix must be a nonempty list of rows")
        A = np.array([[parse_complex(v) for v in row] for row in rows], dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError(f"matrix must be square, got {len(rows)} rows of lengths {[len(r) for r in rows]}")
        moment = MomentFamily.from_dict(data["moment"])
        z0 = y0 = None
        if data.get("cauchy") is not None:
            c = data["cauchy"]
            z0 = parse_complex(c.get("z0", 0.0))
            if "y0" not in c:
                raise ConfigError("cauchy block needs y0")
            y0 = np.array([parse_complex(v) for v in c["y0"]], dtype=complex)
            if y0.size != A.shape[0]:
                raise ConfigError(f"y0 has length {y0.size} but the matrix is {A.shape[0]}x{A.shape[0]}")
        trunc = data.get("truncation", {}) or {}
        try:
            N = int(trunc.get("N", 150))
            tol = float(trunc.get("tol", 1e-10))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad truncation block: {exc}") from exc
        if N < 1:
            raise ConfigError("truncation N must be at least 1")
        if not (tol > 0 and math.isfinite(tol)):
            raise ConfigError("truncation tol must be positive")
        hints = tuple(parse_complex(h) for h in data.get("hints", []) or [])
        return cls(A, moment, z0, y0, N, tol, hints)

    def to_dict(self) -> dict:
        out = {
            "matrix": encode(self.matrix),
            "moment": self.moment.to_dict(),
            "truncation": {"N": self.N, "tol": self.tol},
        }
        if self.has_cauchy:
            out["cauchy"] = {"z0": encode(self.z0), "y0": encode(self.y0)}
        if self.hints:
            out["hints"] = encode(list(self.hints))
        return out


def load_config(path) -> ProblemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ProblemConfig.from_dict(data)


def parse_points(spec: str) -> list[complex]:
    """Points from a file (JSON list or one value per line) or an inline list.

    Inline lists are comma separated, e.g. ``"0,1,2+1j,-1.5i"``, or JSON.
    """
    path = Path(spec)
    text = path.read_text() if path.is_file() else spec
    text = text.strip()
    if not text:
        raise ConfigError("no points given")
    if text.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"points are not valid JSON: {exc}") from exc
        return [parse_complex(v) for v in data]
    items = [t for chunk in text.splitlines() for t in chunk.split(",")]
    return [parse_complex(t) for t in items if t.strip()]


def encode(x):
    """Recursively turn complex values and arrays into JSON-ready data."""
    if isinstance(x, np.ndarray):
        return [encode(v) for v in x.tolist()]
    if isinstance(x, (complex, np.complexfloating)):
        return [_num(x.real), _num(x.imag)]
    if isinstance(x, (np.floating, float)):
        return _num(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: encode(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [encode(v) for v in x]
    return x


def _num(v: float):
    # JSON has no inf/nan; keep them readable as strings
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def dumps(data) -> str:
    return json.dumps(encode(data), indent=2, allow_nan=False)
