"""Emitter geometries and the plain-text positions format.

File format: one "x y z" triple per line; a header comment declares the
length unit, e.g. ``# units: nm``.  Lengths are converted to micrometres.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DomainError

UNITS_TO_UM = {
    "m": 1e6,
    "cm": 1e4,
    "mm": 1e3,
    "um": 1.0,
    "micron": 1.0,
    "nm": 1e-3,
    "angstrom": 1e-4,
    "a": 1e-4,
}
_UNITS_RE = re.compile(r"^\s*#\s*units?\s*[:=]\s*(\S+)", re.IGNORECASE)


def coincident(N: int) -> np.ndarray:
    return np.zeros((N, 3))


def chain(N: int, a: float) -> np.ndarray:
    pos = np.zeros((N, 3))
    pos[:, 0] = a * np.arange(N)
    return pos


def cube_random(N: int, a: float, seed: int = 0) -> np.ndarray:
    """N points uniform in a cube of side ``a``."""
    return np.random.default_rng(seed).uniform(0.0, a, size=(N, 3))


def builtin(spec: str, N: int) -> np.ndarray:
    """Parse 'coincident', 'chain(a)' or 'cube_random(a, seed)'."""
    m = re.fullmatch(r"\s*(\w+)\s*(?:\((.*)\))?\s*", spec)
    if not m:
        raise DomainError(f"cannot parse geometry {spec!r}")
    name, args = m.group(1), [s for s in (m.group(2) or "").split(",") if s.strip()]
    if name == "coincident" and not args:
        return coincident(N)
    if name == "chain" and len(args) == 1:
        return chain(N, float(args[0]))
    if name == "cube_random" and len(args) in (1, 2):
        return cube_random(N, float(args[0]), int(args[1]) if len(args) == 2 else 0)
    raise DomainError(f"unknown geometry {spec!r}")


def read_positions(path) -> np.ndarray:
    """Positions in micrometres; a units header is required."""
    scale = None
    rows = []
    for line in Path(path).read_text().splitlines():
        m = _UNITS_RE.match(line)
        if m:
            unit = m.group(1).lower()
            if unit not in UNITS_TO_UM:
                raise DomainError(f"unknown length unit {unit!r}")
            scale = UNITS_TO_UM[unit]
            continue
        line = line.split("#", 1)[0].strip()
        if line:
            vals = line.split()
            if len(vals) != 3:
                raise DomainError(f"expected 'x y z', got {line!r}")
            rows.append([float(v) for v in vals])
    if scale is None:
        raise DomainError(f"{path}: missing '# units: ...' header")
    return np.array(rows, dtype=float).reshape(-1, 3) * scale


def write_positions(path, positions, unit: str = "um") -> None:
    scale = UNITS_TO_UM[unit]
    lines = [f"# units: {unit}"]
    lines += [" ".join(f"{v / scale:.17g}" for v in row) for row in np.asarray(positions)]
    Path(path).write_text("\n".join(lines) + "\n")


def extent(positions) -> tuple[float, float]:
    """(ell, a): largest and smallest pair distance."""
    pos = np.asarray(positions, dtype=float)
    if len(pos) < 2:
        raise DomainError("need at least two positions")
    d = pdist(pos)
    return float(d.max()), float(d.min())
