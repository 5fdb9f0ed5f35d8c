"""System files: JSON with one matrix row per line, 'p/q' strings for exact entries."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import linalg as la
from .errors import DimensionError, InputError

TOL_ENV = "FUNCTAL_TOL"


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    """Bundled JSON schema ``name`` (``"system"`` or ``"report"``)."""
    text = resources.files("functal.schemas").joinpath(f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def env_tolerance() -> float | None:
    raw = os.environ.get(TOL_ENV)
    if raw is None or not raw.strip():
        return None
    try:
        tol = float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV}={raw!r} is not a decimal number") from None
    if tol < 0:
        raise InputError(f"{TOL_ENV} must be nonnegative, got {raw!r}")
    return tol


@dataclass
class SystemFile:
    name: str
    scalar: str
    A: np.ndarray
    F: np.ndarray
    B: np.ndarray | None = None
    C: np.ndarray | None = None
    horizon: float = 1.0
    tolerances: dict[str, float] = field(default_factory=dict)
    extra: dict[str, object] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def field(self) -> la.ScalarField:
        """Scalar field; file tolerances beat FUNCTAL_TOL, which beats the default."""
        if self.scalar == la.RATIONAL:
            return la.EXACT
        rank = self.tolerances.get("rank", env_tolerance())
        return la.ScalarField(la.FLOAT64, rank, self.tolerances.get("eig_cluster"))


def _matrix(rows, scalar: str, name: str) -> np.ndarray:
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{name}: rows have different lengths")
    if scalar == la.RATIONAL:
        for r in rows:
            for x in r:
                if isinstance(x, float):
                    raise InputError(f"{name}: float entry {x!r} in a rational file; "
                                     "write it as a 'p/q' string")
        return la.as_exact(rows)
    return np.array([[float(Fraction(x)) if isinstance(x, str) else float(x) for x in r]
                     for r in rows])


def _check_dims(s: SystemFile) -> None:
    n = s.A.shape[0]
    if s.A.shape != (n, n):
        raise DimensionError(f"A must be square, got {s.A.shape[0]}x{s.A.shape[1]}")
    if s.F.shape[1] != n:
        raise DimensionError(f"F has {s.F.shape[1]} columns, expected {n}")
    if s.C is not None and s.C.shape[1] != n:
        raise DimensionError(f"C has {s.C.shape[1]} columns, expected {n}")
    if s.B is not None and s.B.shape[0] != n:
        raise DimensionError(f"B has {s.B.shape[0]} rows, expected {n}")


def parse_system(text: str, source: str = "<string>") -> SystemFile:
    """Parse and validate a system file; errors carry ``source:line:column``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
    try:
        jsonschema.validate(data, load_schema("system"))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise InputError(f"{source}: {where}: {e.message}") from None
    scalar = data["scalar"]
    try:
        mats = {k: _matrix(data[k], scalar, k) for k in ("A", "B", "C", "F") if k in data}
    except InputError as e:
        raise InputError(f"{source}: {e}") from None
    known = {"name", "scalar", "A", "B", "C", "F", "horizon", "tolerances"}
    s = SystemFile(data["name"], scalar, mats["A"], mats["F"], mats.get("B"), mats.get("C"),
                   float(data.get("horizon", 1.0)), dict(data.get("tolerances", {})),
                   {k: v for k, v in data.items() if k not in known})
    try:
        _check_dims(s)
    except DimensionError as e:
        raise DimensionError(f"{source}: {e}") from None
    return s


def load_system(path) -> SystemFile:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path}: not valid UTF-8") from None
    return parse_system(text, str(path))


def _entry(x, scalar: str):
    if scalar == la.RATIONAL:
        return str(Fraction(x))
    return float(x)


def dump_system(s: SystemFile) -> str:
    """Deterministic text form: fixed key order, one matrix row per line."""
    parts = [f'  "name": {json.dumps(s.name)}', f'  "scalar": {json.dumps(s.scalar)}']
    for key in ("A", "B", "C", "F"):
        M = getattr(s, key)
        if M is None:
            continue
        rows = [json.dumps([_entry(x, s.scalar) for x in row]) for row in M]
        parts.append(f'  "{key}": [\n    ' + ",\n    ".join(rows) + "\n  ]")
    parts.append(f'  "horizon": {json.dumps(float(s.horizon))}')
    if s.tolerances:
        parts.append(f'  "tolerances": {json.dumps(s.tolerances, sort_keys=True)}')
    for k in sorted(s.extra):
        parts.append(f'  {json.dumps(k)}: {json.dumps(s.extra[k], sort_keys=True)}')
    return "{\n" + ",\n".join(parts) + "\n}\n"
