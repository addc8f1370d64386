"""Datasets behind the three relaxation-time figures.

fig1: b tau_mn surfaces at N = 100, j = 50 for Gamma/Gamma_c in {2, 1, 0.5}
      and beta J in {1, 10}.
fig2: b tau_{j, j-1} against even N, j = N/2, Gamma/Gamma_c above and below 1,
      beta J in {1, 10, 100, 1000}, with the zero-temperature reference
      b N^2 / (gamma J^3).
fig3: b tau_P against even N on the same grid, with the zero-temperature
      reference b N^2 / (2 gamma J^3).

With the default gamma = 1/2 and J = 1 the references are 2 N^2 and N^2.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .rates import DEFAULT_GAMMA, sector_generator
from .sector import SectorParams, critical_field, gap
from .sweep import format_value
from .times import b_scale, mu2_and_tau_P, tau_j_jm1, tau_surface

log = logging.getLogger(__name__)

FIG_BETAS = (1.0, 10.0, 100.0, 1000.0)
# ratios chosen so that Gamma N / 2J never lands on a rounding tie for N = 0 mod 4
RATIOS_BELOW = (0.5, 0.8, 0.9, 0.98, 1.0)
RATIOS_ABOVE = (1.0, 1.02, 1.1, 1.2, 1.5, 2.0)


def default_n_grid(n_min: int = 10, n_max: int = 3200, points: int = 40) -> list[int]:
    """Even N, log-spaced, restricted to multiples of 4 (all three N mod 6 classes occur)."""
    raw = np.geomspace(n_min, n_max, points)
    grid = np.unique(4 * np.round(raw / 4).astype(int))
    return [int(n) for n in grid if n_min <= n <= n_max]


@dataclass
class FigureConfig:
    N_fig1: int = 100
    fig1_ratios: tuple[float, ...] = (2.0, 1.0, 0.5)
    fig1_betas: tuple[float, ...] = (1.0, 10.0)
    N_grid: list[int] = field(default_factory=default_n_grid)
    betas: tuple[float, ...] = FIG_BETAS
    ratios_below: tuple[float, ...] = RATIOS_BELOW
    ratios_above: tuple[float, ...] = RATIOS_ABOVE
    gamma: float = DEFAULT_GAMMA
    J: float = 1.0

    @classmethod
    def from_overrides(cls, overrides: dict | None) -> FigureConfig:
        cfg = cls()
        for k, v in (overrides or {}).items():
            if not hasattr(cfg, k):
                raise KeyError(f"unknown figure option {k!r}")
            setattr(cfg, k, type(getattr(cfg, k))(v) if isinstance(v, list) else v)
        return cfg

    def reference_Q(self, N) -> np.ndarray:
        return b_scale(self.gamma, self.J) * np.asarray(N, float) ** 2 / (self.gamma * self.J**3)

    def reference_P(self, N) -> np.ndarray:
        return 0.5 * self.reference_Q(N)


def _write_csv(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format_value(v) for v in r])
    return path


def _sector(N: int, ratio: float, J: float) -> SectorParams:
    base = SectorParams(N, N, J, 0.0)
    return base.with_field(ratio * critical_field(base))


def _tag(x: float) -> str:
    return format(x, "g").replace(".", "p")


def fig1(cfg: FigureConfig, out: Path) -> list[Path]:
    files = []
    b = b_scale(cfg.gamma, cfg.J)
    for ratio in cfg.fig1_ratios:
        s = _sector(cfg.N_fig1, ratio, cfg.J)
        mz = s.mz_values()
        for beta in cfg.fig1_betas:
            T = b * tau_surface(sector_generator(s, beta, cfg.gamma))
            rows = [
                (mz[m], mz[n], T[m, n])
                for m in range(mz.size)
                for n in range(mz.size)
                if m != n
            ]
            name = f"fig1_N{cfg.N_fig1}_G{_tag(ratio)}_beta{_tag(beta)}.csv"
            files.append(_write_csv(out / name, ("m_z", "n_z", "b_tau_mn"), rows))
    return files


def _n_sweep(cfg: FigureConfig, ratios, beta: float, quantity: str) -> list[tuple]:
    rows = []
    b = b_scale(cfg.gamma, cfg.J)
    for ratio in ratios:
        for N in cfg.N_grid:
            s = _sector(N, ratio, cfg.J)
            A = sector_generator(s, beta, cfg.gamma)
            if quantity == "tau_j_jm1":
                val = b * tau_j_jm1(s, beta, cfg.gamma)
            else:
                val = b * mu2_and_tau_P(A).tau_P
            flag = gap(s).degeneracy_flag
            rows.append((N, N % 6, ratio, s.field, beta, val, flag))
    return rows


_NHEADER = ("N", "N_mod_6", "Gamma_over_Gammac", "Gamma", "beta", "value_b", "degeneracy_flag")


def fig2(cfg: FigureConfig, out: Path) -> list[Path]:
    files = []
    for beta in cfg.betas:
        for side, ratios in (("above", cfg.ratios_above), ("below", cfg.ratios_below)):
            rows = _n_sweep(cfg, ratios, beta, "tau_j_jm1")
            name = f"fig2_{side}_beta{_tag(beta)}.csv"
            files.append(_write_csv(out / name, _NHEADER, rows))
    ref = [(N, r) for N, r in zip(cfg.N_grid, cfg.reference_Q(cfg.N_grid))]
    files.append(_write_csv(out / "fig2_reference_zeroT.csv", ("N", "b_tauQ_zeroT"), ref))
    return files


def fig3(cfg: FigureConfig, out: Path) -> list[Path]:
    files = []
    ratios = tuple(dict.fromkeys(cfg.ratios_below + cfg.ratios_above))
    for beta in cfg.betas:
        rows = _n_sweep(cfg, ratios, beta, "tau_P")
        files.append(_write_csv(out / f"fig3_beta{_tag(beta)}.csv", _NHEADER, rows))
    ref = [(N, r) for N, r in zip(cfg.N_grid, cfg.reference_P(cfg.N_grid))]
    files.append(_write_csv(out / "fig3_reference_zeroT.csv", ("N", "b_tauP_zeroT"), ref))
    return files


_BUILDERS = {"fig1": fig1, "fig2": fig2, "fig3": fig3}


def figure_datasets(which, out_dir, overrides: dict | None = None) -> dict[str, list[Path]]:
    """Write the requested datasets (``'fig1'``, ``'fig2'``, ``'fig3'`` or a list) and a manifest."""
    names = [which] if isinstance(which, str) else list(which)
    names = [f"fig{n}" if str(n).isdigit() else str(n) for n in names]
    for n in names:
        if n not in _BUILDERS:
            raise KeyError(f"unknown figure {n!r}")
    cfg = FigureConfig.from_overrides(overrides)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    produced = {}
    for n in names:
        produced[n] = _BUILDERS[n](cfg, out)
        log.info("%s: %d files in %s", n, len(produced[n]), out)
    manifest = {
        "schema_version": 1,
        "tool_version": __version__,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()},
        "files": {k: [p.name for p in v] for k, v in produced.items()},
    }
    (out / f"manifest_{'_'.join(names)}.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return produced


def read_series(path) -> dict[float, tuple[np.ndarray, np.ndarray]]:
    """{Gamma/Gamma_c: (N, value_b)} from a fig2/fig3 file."""
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    out: dict[float, list] = {}
    for r in rows:
        out.setdefault(float(r["Gamma_over_Gammac"]), []).append(
            (int(r["N"]), float(r["value_b"]))
        )
    return {k: (np.array([a for a, _ in v]), np.array([b for _, b in v])) for k, v in out.items()}


def finite_size_departure(path, ref_path, ratio: float = 1.0) -> np.ndarray:
    """value / reference along N for one Gamma/Gamma_c series."""
    N, val = read_series(path)[ratio]
    with Path(ref_path).open() as fh:
        ref = {int(r["N"]): float(list(r.values())[1]) for r in csv.DictReader(fh)}
    return val / np.array([ref[int(n)] for n in N])
