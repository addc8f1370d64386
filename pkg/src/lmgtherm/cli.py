"""Command-line front end.

Every subcommand accepts ``--config PATH`` (a JSON document); explicit flags
override keys from the config.  ``inf`` is accepted wherever a beta is.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import ConvergenceError, DomainError, ResourceError
from .figures import figure_datasets
from .fullspace import FullSpaceModel, coherent_dipoles, incoherent_dipoles, solve
from .geometry import builtin, extent, read_positions
from .qtensor import general_rates
from .rates import DEFAULT_GAMMA, sector_generator
from .regime import DEFAULT_MARGIN, regime_classify
from .sector import SectorParams, critical_field, gap, partition_function, spectrum
from .sweep import SweepSpec, emit_report, format_value, parse_beta, render_csv, render_json, run_sweep
from .times import evolve_pauli, gibbs_vector, log_gibbs, relative_entropy, thermalization_time

log = logging.getLogger("lmgtherm")


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _betas(s: str) -> list[float]:
    return [parse_beta(v) for v in s.split(",") if v.strip()]


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else format_value(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(_json_safe(doc), indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _merge(args: argparse.Namespace, keys: dict[str, Any]) -> dict[str, Any]:
    """Resolve each key: explicit flag, then config file, then default."""
    cfg: dict[str, Any] = {}
    if getattr(args, "config", None):
        cfg = json.loads(Path(args.config).read_text())
    out = {}
    for k, default in keys.items():
        flag = getattr(args, k, None)
        out[k] = flag if flag is not None else cfg.get(k, default)
    return out


def _sector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, help="number of spins")
    p.add_argument("--j", type=float, help="total spin (default N/2)")
    p.add_argument("--J", type=float, help="coupling (default 1)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--Gamma", type=float, help="transverse field")
    g.add_argument("--Gamma-ratio", dest="Gamma_ratio", type=float, help="field as Gamma/Gamma_c")


_SECTOR_KEYS = {"N": None, "j": None, "J": 1.0, "Gamma": None, "Gamma_ratio": None}


def _make_sector(c: dict) -> SectorParams:
    if c["N"] is None:
        raise DomainError("--N is required")
    N = int(c["N"])
    base = SectorParams.from_j(N, c["j"] if c["j"] is not None else N / 2, float(c["J"]), 0.0)
    if c["Gamma_ratio"] is not None:
        return base.with_field(float(c["Gamma_ratio"]) * critical_field(base))
    return base.with_field(float(c["Gamma"] or 0.0))


def cmd_spectrum(args) -> int:
    c = _merge(args, {**_SECTOR_KEYS, "beta": None, "out": None})
    s = _make_sector(c)
    sp = spectrum(s)
    g = gap(s)
    doc = {
        "sector": {"N": s.N, "two_j": s.two_j, "J": s.coupling, "Gamma": s.field},
        "critical_field": critical_field(s),
        "levels": [{"m_z": m, "energy": e} for m, e in sp.sorted_levels()],
        "degeneracy_flag": sp.degeneracy_flag,
        "gap": asdict(g),
    }
    if c["beta"] is not None:
        pf = partition_function(s, parse_beta(c["beta"]))
        doc["partition_function"] = {
            "log_z": pf.log_z,
            "log_z_shifted": pf.log_z_shifted,
            "e_min": pf.e_min,
            "log_z_asymptotic": pf.log_z_asymptotic,
            "ratio_exact_over_asymptotic": pf.ratio,
        }
    _emit(doc, c["out"])
    return 0


def cmd_times(args) -> int:
    c = _merge(args, {**_SECTOR_KEYS, "beta": "inf", "gamma": DEFAULT_GAMMA, "out": None})
    s = _make_sector(c)
    r = thermalization_time(s, parse_beta(c["beta"]), float(c["gamma"]))
    doc = {
        "sector": {"N": s.N, "two_j": s.two_j, "J": s.coupling, "Gamma": s.field},
        "beta": r.beta,
        "gamma": r.gamma,
        "branch": r.gap.branch,
        "gap": r.gap.gap,
        "tauQ_b": r.tauQ_b,
        "tauP_b": r.tauP_b,
        "tau_b": r.tau_b,
        "mu2": r.mu2,
        "argmax": list(r.argmax),
        "degeneracy_flag": r.degeneracy_flag,
        "warnings": r.warnings,
    }
    _emit(doc, c["out"])
    return 0


def cmd_dynamics(args) -> int:
    c = _merge(
        args,
        {**_SECTOR_KEYS, "beta": 1.0, "gamma": DEFAULT_GAMMA, "t_max": None, "steps": 50,
         "initial": "top", "method": "auto", "out": None},
    )
    s = _make_sector(c)
    beta = parse_beta(c["beta"])
    A = sector_generator(s, beta, float(c["gamma"]))
    r = thermalization_time(s, beta, float(c["gamma"]))
    t_max = float(c["t_max"]) if c["t_max"] is not None else 10.0 * r.tau
    times = np.linspace(0.0, t_max, int(c["steps"]))
    p0 = np.zeros(A.size)
    order = np.argsort(A.energies)
    if c["initial"] == "top":
        p0[order[-1]] = 1.0
    elif c["initial"] == "ground":
        p0[order[0]] = 1.0
    else:
        p0[A.index_of(float(c["initial"]))] = 1.0
    traj = evolve_pauli(A, p0, times, method=c["method"])
    lq = log_gibbs(A.energies, beta)
    header = ["t", "relative_entropy"] + [f"p[{format_value(m)}]" for m in A.mz]
    lines = [",".join(header)]
    for t, p in zip(traj.times, traj.populations):
        vals = [t, relative_entropy(p, lq)] + list(p)
        lines.append(",".join(format_value(float(v)) for v in vals))
    text = "\n".join(lines) + "\n"
    if c["out"]:
        Path(c["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    log.info("method=%s, final l1 distance to Gibbs %.3g", traj.method,
             float(np.abs(traj.populations[-1] - gibbs_vector(A.energies, beta)).sum()))
    return 0


def cmd_sweep(args) -> int:
    c = _merge(
        args,
        {"N": None, "j": "N/2", "Gamma": None, "Gamma_over_Gammac": None, "beta": None,
         "gamma": DEFAULT_GAMMA, "J": 1.0, "format": "csv", "parallel": 1, "out": None},
    )
    spec = SweepSpec(
        N=c["N"] or (),
        beta=c["beta"] or (),
        Gamma=c["Gamma"],
        Gamma_over_Gammac=c["Gamma_over_Gammac"],
        j_rule=str(c["j"]),
        gamma=float(c["gamma"]),
        J=float(c["J"]),
        format=c["format"],
        parallel=int(c["parallel"]),
    )
    records = run_sweep(spec)
    if c["out"]:
        out = Path(c["out"])
        if out.is_dir() or not out.suffix:
            out.mkdir(parents=True, exist_ok=True)
            out = out / f"sweep.{spec.format}"
        emit_report(records, out, spec.format, spec.to_config())
        log.info("wrote %d records to %s", len(records), out)
    else:
        text = render_csv(records) if spec.format == "csv" else render_json(records, spec.to_config())
        sys.stdout.write(text)
    return 0


def cmd_figures(args) -> int:
    c = _merge(args, {"figure": None, "out": "figures", "overrides": None})
    which = [f"fig{c['figure']}"] if c["figure"] else ["fig1", "fig2", "fig3"]
    produced = figure_datasets(which, c["out"], c["overrides"])
    for name, files in produced.items():
        print(f"{name}: {len(files)} files")
        for f in files:
            print(f"  {f}")
    return 0


def _positions(c: dict, N: int) -> np.ndarray | None:
    if c["positions"]:
        pos = read_positions(c["positions"])
        if len(pos) != N:
            raise DomainError(f"positions file has {len(pos)} rows, expected N={N}")
        return pos
    if c["geometry"]:
        return builtin(c["geometry"], N)
    return None


def cmd_fullspace(args) -> int:
    c = _merge(
        args,
        {"N": None, "J": 1.0, "Gamma": 0.0, "gamma_y": 1.0, "gamma": DEFAULT_GAMMA,
         "beta": None, "positions": None, "geometry": None, "light_speed": 1.0, "out": None},
    )
    if c["N"] is None:
        raise DomainError("--N is required")
    N = int(c["N"])
    pos = _positions(c, N)
    model = FullSpaceModel(N, float(c["J"]), float(c["Gamma"]), float(c["gamma_y"]), pos)
    sys_ = solve(model)
    Dc = coherent_dipoles(sys_, float(c["gamma"]))
    Di = incoherent_dipoles(sys_, float(c["gamma"]))
    cross = sys_.j_labels[:, None] != sys_.j_labels[None, :]
    doc = {
        "model": {"N": N, "J": model.coupling, "Gamma": model.field, "gamma_y": model.gamma_y},
        "levels": [
            {"energy": e, "j": j, "parity": int(p)}
            for e, j, p in zip(sys_.energies, sys_.j_labels, sys_.parity_labels)
        ],
        "selection_rules": {
            "coherent_max_cross_j_relative": float(Dc[cross].max() / Dc.max()) if cross.any() else 0.0,
            "incoherent_max_cross_j_relative": float(Di[cross].max() / Di.max()) if cross.any() else 0.0,
        },
    }
    if pos is not None:
        ell, a = extent(pos)
        doc["geometry"] = {"ell": ell, "a": a}
        if c["beta"] is not None:
            g = general_rates(sys_, model, parse_beta(c["beta"]), float(c["gamma"]), float(c["light_speed"]))
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(Dc > 0, g.dipoles / Dc, np.nan)
            off = ~np.eye(sys_.size, dtype=bool) & (Dc > 1e-12 * Dc.max())
            doc["general_rates"] = {
                "effective_dipoles": g.dipoles,
                "ratio_to_coherent_range": [float(np.nanmin(ratio[off])), float(np.nanmax(ratio[off]))]
                if off.any() else None,
                "max_cross_j_relative": float(g.dipoles[cross].max() / g.dipoles.max()) if cross.any() else 0.0,
            }
    _emit(doc, c["out"])
    return 0


def cmd_regime(args) -> int:
    c = _merge(
        args,
        {"ell": None, "a": None, "delta_e": None, "beta": None, "margin_factor": DEFAULT_MARGIN,
         "positions": None, "estimate_coupling": False, "out": None},
    )
    ell, a = c["ell"], c["a"]
    if c["positions"]:
        ell, a = extent(read_positions(c["positions"]))
    if ell is None or a is None:
        raise DomainError("give --ell and --a, or --positions")
    beta = parse_beta(c["beta"]) if c["beta"] is not None else None
    res = regime_classify(
        float(ell), float(a),
        float(c["delta_e"]) if c["delta_e"] is not None else None,
        beta, float(c["margin_factor"]), bool(c["estimate_coupling"]),
    )
    text = res.to_json() + "\n"
    if c["out"]:
        Path(c["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lmgtherm", description="LMG thermalization under blackbody radiation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON config; flags override its keys")
        sp.add_argument("--out", help="output file or directory")
        sp.set_defaults(func=fn)
        return sp

    sp = add("spectrum", cmd_spectrum, "sector spectrum, gap and partition function")
    _sector_args(sp)
    sp.add_argument("--beta", help="inverse temperature for the partition function")

    sp = add("times", cmd_times, "decoherence, dissipation and thermalization times")
    _sector_args(sp)
    sp.add_argument("--beta", help="inverse temperature or 'inf'")
    sp.add_argument("--gamma", type=float, help="blackbody coupling (default 0.5)")

    sp = add("dynamics", cmd_dynamics, "Pauli-equation population dynamics")
    _sector_args(sp)
    sp.add_argument("--beta", help="inverse temperature")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--t-max", dest="t_max", type=float, help="final time (default 10 tau)")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--initial", help="'top', 'ground' or an m_z value")
    sp.add_argument("--method", choices=["auto", "spectral", "runge-kutta"])

    sp = add("sweep", cmd_sweep, "parameter sweep report")
    sp.add_argument("--N", type=_ints, help="comma-separated N grid")
    sp.add_argument("--j", help="'N/2', a fixed j, or 'alpha=<a>'")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--Gamma", type=_floats)
    g.add_argument("--Gamma-ratio", dest="Gamma_over_Gammac", type=_floats)
    sp.add_argument("--beta", type=_betas, help="comma-separated, 'inf' allowed")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--J", type=float)
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--parallel", type=int)

    sp = add("figures", cmd_figures, "datasets for the relaxation-time figures")
    sp.add_argument("--figure", type=int, choices=[1, 2, 3])

    sp = add("fullspace", cmd_fullspace, "exact small-N model with selection-rule checks")
    sp.add_argument("--N", type=int)
    sp.add_argument("--J", type=float)
    sp.add_argument("--Gamma", type=float)
    sp.add_argument("--gamma-y", dest="gamma_y", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--beta", help="enables the general-rate computation (needs positions)")
    sp.add_argument("--positions", help="positions file ('x y z' lines, '# units: ...' header)")
    sp.add_argument("--geometry", help="coincident | chain(a) | cube_random(a, seed)")
    sp.add_argument("--light-speed", dest="light_speed", type=float, help="c in model units")

    sp = add("regime", cmd_regime, "coherent / incoherent regime assessment (eV, um)")
    sp.add_argument("--ell", type=float, help="largest pair distance [um]")
    sp.add_argument("--a", type=float, help="smallest pair distance [um]")
    sp.add_argument("--delta-e", dest="delta_e", type=float, help="largest relevant splitting [eV]")
    sp.add_argument("--beta", help="inverse temperature [1/eV]")
    sp.add_argument("--margin-factor", dest="margin_factor", type=float)
    sp.add_argument("--positions")
    sp.add_argument("--estimate-coupling", dest="estimate_coupling", action="store_const", const=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DomainError, ResourceError, ConvergenceError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"lmgtherm {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
