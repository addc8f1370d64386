"""Static properties of the isotropic LMG model inside one total-spin sector.

With gamma_y = 1 the Hamiltonian restricted to the (2j+1)-dimensional sector
is diagonal in the J_z basis,

    E(j, m) = -J j(j+1)/N + m (J m / N - Gamma),

so the spectrum, the first gap and the partition function have closed forms.
Units: hbar = 1, energies in the same units as the coupling ``J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError

# A grid tie is declared when x sits this close (absolute, in grid units) to a midpoint.
TIE_TOL = 1e-9
# delta is snapped to zero when x lands within a few ulps of a grid point.
_SNAP_ULPS = 64.0
GAP_RTOL = 1e-12

Branch = Literal["paramagnetic", "transient", "inner"]


@dataclass(frozen=True)
class SectorParams:
    """Fixed-j LMG sector. ``two_j`` stores 2j so half-integers stay exact."""

    N: int
    two_j: int
    coupling: float = 1.0
    field: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N!r}")
        if int(self.two_j) != self.two_j or self.two_j < 1:
            raise DomainError(f"2j must be a positive integer, got {self.two_j!r}")
        if self.two_j > self.N:
            raise DomainError(f"j={self.two_j / 2} exceeds N/2={self.N / 2}")
        if (self.two_j - self.N) % 2:
            kind = "integer" if self.N % 2 == 0 else "half-integer"
            raise DomainError(f"N={self.N} requires {kind} j, got j={self.two_j / 2}")
        if self.two_j < 2:
            raise DomainError("sectors j=0 and j=1/2 carry no dynamics")
        if not (self.coupling > 0 and math.isfinite(self.coupling)):
            raise DomainError(f"coupling must be positive and finite, got {self.coupling!r}")
        if not math.isfinite(self.field):
            raise DomainError(f"field must be finite, got {self.field!r}")

    @classmethod
    def from_j(cls, N: int, j, coupling: float = 1.0, field: float = 0.0) -> SectorParams:
        two_j = Fraction(j) * 2 if not isinstance(j, float) else Fraction(j).limit_denominator(2) * 2
        if two_j.denominator != 1:
            raise DomainError(f"j must be a multiple of 1/2, got {j!r}")
        return cls(int(N), int(two_j), float(coupling), float(field))

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def dim(self) -> int:
        return self.two_j + 1

    @property
    def half_integer(self) -> bool:
        return self.two_j % 2 == 1

    @property
    def x(self) -> float:
        """Field in grid units, Gamma N / (2 J): the unconstrained minimiser of E(m)."""
        return self.field * self.N / (2.0 * self.coupling)

    def with_field(self, field: float) -> SectorParams:
        return SectorParams(self.N, self.two_j, self.coupling, float(field))

    def mz_values(self) -> np.ndarray:
        """Magnetisations -j, -j+1, ..., j in ascending order."""
        return np.arange(-self.two_j, self.two_j + 1, 2) / 2.0


@dataclass(frozen=True)
class SectorSpectrum:
    mz: np.ndarray
    energies: np.ndarray
    degeneracy_flag: bool

    @property
    def levels(self) -> list[tuple[float, float]]:
        return list(zip(self.mz.tolist(), self.energies.tolist()))

    def sorted_levels(self) -> list[tuple[float, float]]:
        order = np.argsort(self.energies, kind="stable")
        return [(float(self.mz[k]), float(self.energies[k])) for k in order]


@dataclass(frozen=True)
class GroundState:
    mz_ground: float
    e_ground: float
    mz_excited: float
    e_excited: float
    degeneracy_flag: bool


@dataclass(frozen=True)
class GapReport:
    delta_offset: float
    ground_mz: float
    first_excited_mz: float
    gap: float
    branch: Branch
    critical_field: float
    r_flag: int
    degeneracy_flag: bool = False


@dataclass(frozen=True)
class PartitionFunction:
    """Log-domain partition function of one sector.

    ``log_z_shifted`` is log sum exp(-beta (E - e_min)); the true log Z is
    ``log_z_shifted - beta * e_min``.
    """

    log_z_shifted: float
    e_min: float
    beta: float
    log_z_asymptotic: float | None

    @property
    def log_z(self) -> float:
        return self.log_z_shifted - self.beta * self.e_min

    @property
    def z_exact(self) -> float:
        return math.exp(self.log_z) if self.log_z < 709 else math.inf

    @property
    def z_asymptotic(self) -> float | None:
        if self.log_z_asymptotic is None:
            return None
        return math.exp(self.log_z_asymptotic) if self.log_z_asymptotic < 709 else math.inf

    @property
    def ratio(self) -> float | None:
        """Z_exact / Z_asymptotic, computed without forming either."""
        if self.log_z_asymptotic is None:
            return None
        return math.exp(self.log_z - self.log_z_asymptotic)


def _sgn(v: float) -> int:
    return -1 if v < 0 else 1


def _on_grid(sector: SectorParams, m_z) -> float:
    m = float(m_z)
    k = m + sector.j
    if not math.isfinite(m) or abs(k - round(k)) > 1e-9:
        raise DomainError(f"m_z={m_z!r} is not on the grid of j={sector.j}")
    if abs(m) > sector.j + 1e-9:
        raise DomainError(f"|m_z|={abs(m)} exceeds j={sector.j}")
    return round(k) - sector.j


def energy(sector: SectorParams, m_z) -> float:
    """Closed-form level E(j, m_z)."""
    m = _on_grid(sector, m_z)
    J, N, j = sector.coupling, sector.N, sector.j
    return -J * j * (j + 1) / N + m * (J * m / N - sector.field)


def energies(sector: SectorParams) -> np.ndarray:
    """All 2j+1 energies, indexed by m_z = -j .. j."""
    m = sector.mz_values()
    J, N, j = sector.coupling, sector.N, sector.j
    return -J * j * (j + 1) / N + m * (J * m / N - sector.field)


def round_to_j_grid(
    x: float, j_parity: Literal["integer", "half_integer"], tol: float = TIE_TOL
) -> tuple[float, bool]:
    """Nearest point of the integer or half-integer grid.

    On a tie the candidate of smaller magnitude is returned and ``tied`` is
    True.  The half-integer grid ties at x = 0 between -1/2 and +1/2; there the
    candidate carrying the sign of x (+1/2 for x = 0) is chosen.
    """
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")
    shift = 0.5 if j_parity == "half_integer" else 0.0
    if j_parity not in ("integer", "half_integer"):
        raise DomainError(f"unknown grid parity {j_parity!r}")
    y = x - shift
    lo = math.floor(y)
    frac = y - lo
    if abs(frac - 0.5) < tol:
        a, b = lo + shift, lo + 1 + shift
        if abs(abs(a) - abs(b)) < 1e-12:
            return (b if x >= 0 else a), True
        return (a if abs(a) < abs(b) else b), True
    return (lo + 1 if frac > 0.5 else lo) + shift, False


def _grid_parity(sector: SectorParams) -> Literal["integer", "half_integer"]:
    return "half_integer" if sector.half_integer else "integer"


def _snap(delta: float, x: float) -> float:
    if abs(delta) <= _SNAP_ULPS * np.finfo(float).eps * max(1.0, abs(x)):
        return 0.0
    return delta


def delta_offset(sector: SectorParams) -> float:
    """delta = [x]_j - x with x = Gamma N / (2 J); |delta| <= 1/2."""
    x = sector.x
    k, _ = round_to_j_grid(x, _grid_parity(sector))
    return _snap(k - x, x)


def _mirrored(sector: SectorParams):
    """Rounded |x|, its offset and the tie flag, for the Gamma >= 0 mirror image."""
    ax = abs(sector.x)
    k, tied = round_to_j_grid(ax, _grid_parity(sector))
    return ax, k, _snap(k - ax, ax), tied


def ground_and_first_excited(sector: SectorParams) -> GroundState:
    """Ground and first excited magnetisations by the closed-form case rule."""
    j = sector.j
    ax, k, delta, tied = _mirrored(sector)
    s_field = _sgn(sector.field)

    m1 = min(k, j)
    degenerate = tied and abs(k) <= j and abs(k + (1 if k < ax else -1)) <= j
    if m1 == j and k > j:
        m2 = j - 1
    else:
        s = -1 if delta < 0 else 1
        if abs(m1 - s) <= j:
            m2 = m1 - s
        elif abs(m1 + s) <= j:
            m2 = m1 + s
        else:
            m2 = j - 1
    m1 *= s_field
    m2 *= s_field
    return GroundState(m1, energy(sector, m1), m2, energy(sector, m2), bool(degenerate))


def critical_field(sector: SectorParams) -> float:
    """Positive exact critical field 2 j J / N (the other root is its negative)."""
    return sector.two_j * sector.coupling / sector.N


def spectrum(sector: SectorParams) -> SectorSpectrum:
    m = sector.mz_values()
    e = energies(sector)
    # E(m) = E(m') for m != m' iff m + m' = 2x, which needs 2x integer inside the range.
    two_x = 2.0 * sector.x
    hit = abs(two_x - round(two_x)) < 2 * TIE_TOL and abs(round(two_x)) <= sector.two_j - 1
    return SectorSpectrum(m, e, bool(hit))


_SPLIT = 134217729.0  # 2**27 + 1


def _two_product(a: float, b: float) -> tuple[float, float]:
    """Dekker: a * b == p + err exactly (barring overflow)."""
    p = a * b
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLIT * b
    bh = c - (c - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _scaled_offset(a: float, sector: SectorParams, field: float) -> float:
    """(a J - field N) / N, rounded once before the division.

    Every gap is of this form; near a level tie the two products nearly
    cancel, so they are kept exact and summed with fsum.
    """
    p1, e1 = _two_product(float(a), sector.coupling)
    p2, e2 = _two_product(field, float(sector.N))
    return math.fsum((p1, e1, -p2, -e2)) / sector.N


def _level_difference(sector: SectorParams, m_hi: float, m_lo: float) -> float:
    """E(m_hi) - E(m_lo) in factored form, free of the large constant offset."""
    return (m_hi - m_lo) * _scaled_offset(m_hi + m_lo, sector, sector.field)


def _spectral_gap(sector: SectorParams) -> tuple[float, float, float]:
    m = sector.mz_values()
    key = (m - sector.x) ** 2
    order = np.argsort(key, kind="stable")
    m1, m2 = float(m[order[0]]), float(m[order[1]])
    d = _level_difference(sector, m2, m1)
    if d < 0:  # keys tied after rounding; the factored difference knows the order
        m1, m2, d = m2, m1, -d
    return m1, m2, d


def gap(sector: SectorParams) -> GapReport:
    """First gap from the three-branch formula, cross-checked against the spectrum."""
    j = sector.j
    _, k, delta_abs, _ = _mirrored(sector)
    gs = ground_and_first_excited(sector)
    delta = delta_offset(sector)
    r_flag = 1 if delta * sector.field < 0 else 0

    G = abs(sector.field)
    if k > j:
        branch: Branch = "paramagnetic"
        value = -_scaled_offset(2 * j - 1, sector, G)
    elif k == j and delta_abs < 0:
        branch = "transient"
        # J (1 + 2|delta|) / N with |delta| = |x| - j
        value = -_scaled_offset(2 * j - 1, sector, G)
    else:
        branch = "inner"
        # J (1 - 2|delta|) / N is twice the distance from x to the nearer tie point
        # k +- 1/2; formed that way it keeps full relative accuracy next to a tie
        value = min(abs(_scaled_offset(2 * k - 1, sector, G)), abs(_scaled_offset(2 * k + 1, sector, G)))

    _, _, reference = _spectral_gap(sector)
    scale = max(abs(value), abs(reference))
    if abs(value - reference) > GAP_RTOL * scale + 1e-300:
        raise AssertionError(
            f"gap formula {value!r} disagrees with spectrum {reference!r} for {sector}"
        )
    return GapReport(
        delta_offset=delta,
        ground_mz=gs.mz_ground,
        first_excited_mz=gs.mz_excited,
        gap=max(value, 0.0),
        branch=branch,
        critical_field=critical_field(sector),
        r_flag=r_flag,
        degeneracy_flag=gs.degeneracy_flag,
    )


def partition_function(sector: SectorParams, beta: float) -> PartitionFunction:
    """Sector partition function, exact (log-sum-exp) and large-N Gaussian form.

    The asymptotic form is returned only when the saddle Gamma N / (2 J) lies
    strictly inside (-j, j) and beta > 0.
    """
    if not (beta >= 0) or not math.isfinite(beta):
        raise DomainError(f"beta must be finite and >= 0, got {beta!r}")
    e = energies(sector)
    e_min = float(e.min())
    log_z_shifted = float(logsumexp(-beta * (e - e_min)))

    J, N, j, G = sector.coupling, sector.N, sector.j, sector.field
    log_asym = None
    if beta > 0 and abs(sector.x) < j:
        alpha = j / N
        # Gaussian sum over x = m/j with spacing 1/j; alpha cancels in the result.
        log_prefactor = math.log(j) + 0.5 * math.log(math.pi / (beta * J * N * alpha**2))
        log_asym = log_prefactor + beta * J * j * (j + 1) / N + beta * G * G * N / (4 * J)
    return PartitionFunction(log_z_shifted, e_min, float(beta), log_asym)


def ground_state_weight(sector: SectorParams, beta: float) -> float:
    """exp(-beta E_GS) / Z_j, evaluated in the log domain."""
    pf = partition_function(sector, beta)
    return math.exp(-pf.log_z_shifted)
