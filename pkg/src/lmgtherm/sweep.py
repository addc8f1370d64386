"""Parameter sweeps over (N, j, Gamma, beta) and report files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import ConvergenceError, DomainError
from .rates import DEFAULT_GAMMA
from .sector import SectorParams, critical_field, ground_and_first_excited
from .times import thermalization_time

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COLUMNS = (
    "N",
    "two_j",
    "J_coupling",
    "Gamma",
    "Gamma_over_Gammac",
    "beta",
    "gamma_coupling",
    "delta",
    "gap",
    "branch",
    "mz_ground",
    "tauQ_b",
    "tauP_b",
    "tau_b",
    "mu2",
    "argmax_m",
    "argmax_n",
    "degeneracy_flag",
)


def parse_beta(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    b = float(v)
    if not b > 0:
        raise DomainError(f"beta must be positive or 'inf', got {v!r}")
    return b


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition.  ``j_rule`` is "N/2", a fixed j, or "alpha=<a>" (j = aN)."""

    N: tuple[int, ...]
    beta: tuple[float, ...]
    Gamma: tuple[float, ...] | None = None
    Gamma_over_Gammac: tuple[float, ...] | None = None
    j_rule: str = "N/2"
    gamma: float = DEFAULT_GAMMA
    J: float = 1.0
    format: str = "csv"
    parallel: int = 1

    def __post_init__(self):
        for name in ("N", "beta", "Gamma", "Gamma_over_Gammac"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(v))
        object.__setattr__(self, "beta", tuple(parse_beta(b) for b in self.beta))
        if not self.N:
            raise DomainError("N grid is empty")
        if not self.beta:
            raise DomainError("beta grid is empty")
        if (self.Gamma is None) == (self.Gamma_over_Gammac is None):
            raise DomainError("give exactly one of Gamma and Gamma_over_Gammac")
        if not (self.Gamma or self.Gamma_over_Gammac):
            raise DomainError("Gamma grid is empty")
        if self.format not in ("csv", "json"):
            raise DomainError(f"unknown format {self.format!r}")
        if int(self.parallel) < 1:
            raise DomainError("parallel must be >= 1")
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> SweepSpec:
        known = {f.name for f in fields(cls)}
        extra = set(cfg) - known - {"j"}
        if extra:
            raise DomainError(f"unknown sweep keys: {sorted(extra)}")
        cfg = dict(cfg)
        if "j" in cfg:
            cfg["j_rule"] = str(cfg.pop("j"))
        return cls(**cfg)

    def to_config(self) -> dict[str, Any]:
        d = asdict(self)
        d["beta"] = [format_value(b) if math.isinf(b) else b for b in self.beta]
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def two_j(self, N: int) -> int:
        rule = self.j_rule.replace(" ", "")
        if rule == "N/2":
            return int(N)
        if rule.startswith("alpha="):
            tj = Fraction(rule[6:]) * 2 * N
            if tj.denominator != 1:
                raise DomainError(f"j = {rule[6:]}*N is not a multiple of 1/2 at N={N}")
            return int(tj)
        tj = Fraction(rule) * 2
        if tj.denominator != 1:
            raise DomainError(f"j={rule} is not a multiple of 1/2")
        return int(tj)

    def points(self) -> list[tuple[SectorParams, float, float]]:
        """(sector, Gamma/Gamma_c, beta) in lexicographic (N, Gamma, beta) order; validates all."""
        out = []
        for N in self.N:
            try:
                base = SectorParams(int(N), self.two_j(N), float(self.J), 0.0)
            except DomainError as exc:
                raise DomainError(f"invalid grid point N={N}, j rule {self.j_rule!r}: {exc}") from None
            gc = critical_field(base)
            if self.Gamma is not None:
                gammas = [(float(g), float(g) / gc) for g in self.Gamma]
            else:
                gammas = [(float(r) * gc, float(r)) for r in self.Gamma_over_Gammac]
            for g, ratio in gammas:
                if not math.isfinite(g):
                    raise DomainError(f"invalid grid point N={N}: Gamma={g!r}")
                for b in self.beta:
                    out.append((base.with_field(g), ratio, b))
        return out


@dataclass(frozen=True)
class SweepRecord:
    N: int
    two_j: int
    J_coupling: float
    Gamma: float
    Gamma_over_Gammac: float
    beta: float
    gamma_coupling: float
    delta: float
    gap: float
    branch: str
    mz_ground: float
    tauQ_b: float
    tauP_b: float
    tau_b: float
    mu2: float
    argmax_m: float
    argmax_n: float
    degeneracy_flag: bool

    def as_row(self) -> list[str]:
        return [format_value(getattr(self, c)) for c in COLUMNS]


def evaluate_point(point: tuple[SectorParams, float, float], gamma: float) -> SweepRecord:
    sector, ratio, beta = point
    try:
        r = thermalization_time(sector, beta, gamma)
        g = r.gap
        return SweepRecord(
            sector.N, sector.two_j, sector.coupling, sector.field, ratio, beta, gamma,
            g.delta_offset, g.gap, g.branch, g.ground_mz, r.tauQ_b, r.tauP_b, r.tau_b,
            r.mu2, r.argmax[0], r.argmax[1], bool(g.degeneracy_flag),
        )
    except (ArithmeticError, AssertionError, ValueError, ConvergenceError) as exc:
        # keep the row so a bad point never hides its neighbours
        log.error("grid point %s beta=%s failed: %s", sector, beta, exc)
        nan = math.nan
        gs = ground_and_first_excited(sector)
        return SweepRecord(
            sector.N, sector.two_j, sector.coupling, sector.field, ratio, beta, gamma,
            nan, nan, "error", gs.mz_ground, nan, nan, nan, nan, nan, nan, True,
        )


def _evaluate_chunk(args) -> list[SweepRecord]:
    points, gamma = args
    return [evaluate_point(p, gamma) for p in points]


def run_sweep(spec: SweepSpec) -> list[SweepRecord]:
    """One record per grid point, in grid order whatever the worker count."""
    pts = spec.points()
    if spec.parallel == 1 or len(pts) < 2:
        return [evaluate_point(p, spec.gamma) for p in pts]
    nchunks = min(len(pts), 4 * spec.parallel)
    chunks = [pts[i::nchunks] for i in range(nchunks)]
    with ProcessPoolExecutor(max_workers=spec.parallel) as pool:
        parts = list(pool.map(_evaluate_chunk, [(c, spec.gamma) for c in chunks]))
    out: list[SweepRecord | None] = [None] * len(pts)
    for i, part in enumerate(parts):
        out[i::nchunks] = part
    return out  # type: ignore[return-value]


def render_csv(records: Sequence[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow(r.as_row())
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return format_value(v)
    return v


def render_json(records: Sequence[SweepRecord], config: dict | None = None) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config": config or {},
        "columns": list(COLUMNS),
        "records": [{c: _json_value(getattr(r, c)) for c in COLUMNS} for r in records],
    }
    return json.dumps(doc, indent=1) + "\n"


def emit_report(
    records: Sequence[SweepRecord], path, fmt: str = "csv", config: dict | None = None
) -> Path:
    path = Path(path)
    if fmt == "csv":
        text = render_csv(records)
    elif fmt == "json":
        text = render_json(records, config)
    else:
        raise DomainError(f"unknown format {fmt!r}")
    path.write_text(text)
    return path


_TYPES = {f.name: f.type for f in fields(SweepRecord)}


def _parse(col: str, v) -> Any:
    t = _TYPES[col]
    if t == "int":
        return int(v)
    if t == "bool":
        return v if isinstance(v, bool) else str(v).lower() == "true"
    if t == "str":
        return str(v)
    return float(v)


def load_report(path) -> list[SweepRecord]:
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise DomainError(f"unsupported schema version {doc.get('schema_version')!r}")
        rows = doc["records"]
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
        if rows and tuple(rows[0].keys()) != COLUMNS:
            raise DomainError("CSV header does not match the report schema")
    return [SweepRecord(**{c: _parse(c, row[c]) for c in COLUMNS}) for row in rows]


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    n_min: float
    n_max: float
    residual_rms: float
    points: int
    extra: dict = field(default_factory=dict)

    def predict(self, N) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(N, dtype=float) ** self.slope


def fit_scaling_exponent(N, values, n_range: tuple[float, float] | None = None) -> ScalingFit:
    """Least-squares line through (log N, log value), restricted to ``n_range``."""
    N = np.asarray(N, dtype=float)
    v = np.asarray(values, dtype=float)
    if N.shape != v.shape:
        raise DomainError("N and values differ in length")
    if n_range is not None:
        keep = (N >= n_range[0]) & (N <= n_range[1])
        N, v = N[keep], v[keep]
    if N.size < 3:
        raise DomainError(f"need at least 3 points, got {N.size}")
    if np.any(v <= 0) or np.any(N <= 0) or not np.all(np.isfinite(v)):
        raise DomainError("scaling fit needs positive finite values")
    x, y = np.log(N), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return ScalingFit(
        float(slope), float(intercept), float(N.min()), float(N.max()),
        float(np.sqrt(np.mean(res**2))), int(N.size),
    )
