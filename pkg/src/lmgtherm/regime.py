"""Which dipole formula applies: coherent, incoherent, or neither.

Units: energies in eV, lengths in micrometres, beta in 1/eV.  A "much
less than" is read as a ratio of at least ``margin_factor``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from scipy import constants as sc

from .errors import DomainError

HC_EV_UM = sc.h * sc.c / sc.e * 1e6  # 1.23984 eV um
BOHR_UM = sc.physical_constants["Bohr radius"][0] * 1e6
ALPHA = sc.fine_structure
DEFAULT_MARGIN = 100.0


def dipolar_coupling_estimate(a_um: float) -> float:
    """J hbar^2 ~ alpha^3 a0^2 pi hbar c / a^3 in eV, for moments of order the Bohr magneton."""
    if not a_um > 0:
        raise DomainError("a must be positive")
    return ALPHA**3 * BOHR_UM**2 * (HC_EV_UM / 2.0) / a_um**3


@dataclass(frozen=True)
class RegimeAssessment:
    regime: str
    ell: float
    a: float
    delta_e: float
    beta: float | None
    margin_factor: float
    coherent_margin: float  # (hc/ell) / |dE|
    incoherent_margin: float  # |dE| / (hc/a)
    thermal_margin: float | None  # 1 / (beta hc / a)
    estimated_coupling: float | None = None
    dipolar_coherent_margin: float | None = None  # (a^3/ell) / (alpha^3 a0^2)
    dipolar_incoherent_margin: float | None = None  # alpha^3 a0^2 / a^2

    def to_json(self) -> str:
        rec = asdict(self)
        rec["constants"] = {
            "hc_eV_um": HC_EV_UM,
            "bohr_radius_um": BOHR_UM,
            "fine_structure": ALPHA,
        }
        return json.dumps(rec, indent=2, sort_keys=True)


def regime_classify(
    ell: float,
    a: float,
    delta_e: float | None = None,
    beta: float | None = None,
    margin_factor: float = DEFAULT_MARGIN,
    estimate_coupling: bool = False,
) -> RegimeAssessment:
    """Evaluate the three conditions and pick one regime tag.

    ``delta_e`` is the largest splitting among dipole-connected pairs.  If it
    is omitted, the dipolar estimate of the coupling at spacing ``a`` is used.
    The coherent condition takes precedence; incoherent holds when either the
    splitting or the temperature condition passes.
    """
    if not (a > 0 and ell >= a):
        raise DomainError(f"need 0 < a <= ell, got a={a!r}, ell={ell!r}")
    if not margin_factor > 1:
        raise DomainError("margin factor must exceed 1")
    est = None
    if delta_e is None or estimate_coupling:
        est = dipolar_coupling_estimate(a)
    de = abs(delta_e) if delta_e is not None else est
    if not de > 0:
        raise DomainError("energy scale must be positive")
    coh = (HC_EV_UM / ell) / de
    inc = de / (HC_EV_UM / a)
    thermal = None
    if beta is not None:
        if not beta > 0:
            raise DomainError("beta must be positive")
        thermal = a / (beta * HC_EV_UM)
    if coh >= margin_factor:
        tag = "fully_coherent"
    elif inc >= margin_factor or (thermal is not None and thermal >= margin_factor):
        tag = "fully_incoherent"
    else:
        tag = "intermediate"
    lam = ALPHA**3 * BOHR_UM**2
    return RegimeAssessment(
        regime=tag,
        ell=ell,
        a=a,
        delta_e=de,
        beta=beta,
        margin_factor=margin_factor,
        coherent_margin=coh,
        incoherent_margin=inc,
        thermal_margin=thermal,
        estimated_coupling=est,
        dipolar_coherent_margin=(a**3 / ell) / lam if est is not None else None,
        dipolar_incoherent_margin=lam / a**2 if est is not None else None,
    )
