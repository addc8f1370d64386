"""Blackbody transition rates and the Pauli-equation generator.

Convention: populations obey dp/dt = -A p with

    A[m, n] = -W(n -> m)          (m != n)
    A[n, n] = sum_m W(n -> m),

and the blackbody rate into m from n is W(n -> m) = D[m, n] * f(E_m - E_n),
where f is :func:`planck_weight`.  Columns of A sum to zero.

The inverse temperature ``beta`` is a float in (0, inf]; ``math.inf`` is the
zero-temperature state and is handled structurally, never as a large number.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .sector import SectorParams, energies

log = logging.getLogger(__name__)

ZERO_T = math.inf
SERIES_THRESHOLD = 1e-6
DEFAULT_GAMMA = 0.5


def check_beta(beta: float, allow_zero: bool = False) -> float:
    beta = float(beta)
    if math.isnan(beta) or beta < 0 or (beta == 0 and not allow_zero):
        raise DomainError(f"beta must be in (0, inf], got {beta!r}")
    return beta


def planck_weight(delta_e, beta: float):
    """Planck rate kernel f(dE) for a transition with energy change dE = E_final - E_initial.

    dE > 0 (absorption):        dE^3 / (exp(beta dE) - 1)
    dE < 0 (emission):          |dE|^3 / (1 - exp(-beta |dE|))
    dE = 0:                     0

    At beta = inf only spontaneous emission survives.  Scalars in, scalar out.
    """
    beta = check_beta(beta)
    x = np.asarray(delta_e, dtype=float)
    y = np.abs(x)
    out = np.zeros_like(y)
    if math.isinf(beta):
        np.copyto(out, y**3, where=x < 0)
        return out if out.ndim else float(out)

    by = beta * y
    small = (by < SERIES_THRESHOLD) & (y > 0)
    big = by >= SERIES_THRESHOLD
    with np.errstate(over="ignore", under="ignore"):
        # x^3/(e^{bx}-1) ~ (x^2/b)(1 - bx/2 + (bx)^2/12); the emission side flips the sign of the odd term.
        sgn = np.where(x > 0, -1.0, 1.0)
        series = (y * y / beta) * (1.0 + sgn * by / 2.0 + by * by / 12.0)
        em = np.exp(-by)
        denom = -np.expm1(-by)
        absorb = y**3 * em / np.where(big, denom, 1.0)
        emit = y**3 / np.where(big, denom, 1.0)
    np.copyto(out, np.where(x > 0, absorb, emit), where=big)
    np.copyto(out, series, where=small)
    return out if out.ndim else float(out)


def sector_dipoles(sector: SectorParams, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Coherent dipole table D[m, n] in the J_z basis (index k <-> m_z = -j + k).

    D[m, n] = gamma * sum_h |<j,m| 2 J_h |j,n>|^2, non-zero only for |m - n| = 1.
    """
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    j = sector.j
    n = sector.mz_values()[:-1]
    link = 2.0 * gamma * (j - n) * (j + n + 1)  # connects n and n+1
    D = np.diag(link, 1) + np.diag(link, -1)
    return D


def _ladder_weights(sector: SectorParams, gamma: float) -> np.ndarray:
    n = sector.mz_values()[:-1]
    j = sector.j
    return 2.0 * gamma * (j - n) * (j + n + 1)


@dataclass
class GeneratorMatrix:
    """Pauli generator A.  Tridiagonal generators keep only three bands."""

    diag: np.ndarray
    lower: np.ndarray | None  # A[k+1, k]
    upper: np.ndarray | None  # A[k, k+1]
    energies: np.ndarray
    beta: float
    gamma: float | None = None
    dense: np.ndarray | None = None
    mz: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.diag)

    @property
    def is_tridiagonal(self) -> bool:
        return self.dense is None

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense.copy()
        A = np.diag(self.diag)
        if self.size > 1:
            A += np.diag(self.lower, -1) + np.diag(self.upper, 1)
        return A

    def norm(self) -> float:
        """Max-column-sum norm; for a generator this is twice the largest diagonal."""
        return float(2.0 * np.max(np.abs(self.diag))) if self.size else 0.0

    def matvec(self, p: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense @ p
        out = self.diag * p
        out[1:] += self.lower * p[:-1]
        out[:-1] += self.upper * p[1:]
        return out

    def rates(self) -> tuple[np.ndarray, np.ndarray]:
        """Birth-death rates (up[k] = W(k -> k+1), down[k] = W(k+1 -> k))."""
        if self.dense is not None:
            raise DomainError("birth-death rates exist only for tridiagonal generators")
        return -self.lower, -self.upper

    def index_of(self, m_z: float) -> int:
        if self.mz is None:
            raise DomainError("generator carries no m_z labels")
        hit = np.flatnonzero(np.abs(self.mz - float(m_z)) < 1e-9)
        if hit.size != 1:
            raise DomainError(f"m_z={m_z!r} not in this sector")
        return int(hit[0])


def sector_generator(
    sector: SectorParams, beta: float, gamma: float = DEFAULT_GAMMA
) -> GeneratorMatrix:
    """Tridiagonal generator of the fixed-j LMG sector in the J_z basis."""
    beta = check_beta(beta)
    e = energies(sector)
    link = _ladder_weights(sector, gamma)
    mz = sector.mz_values()
    # E(m+1) - E(m) in factored form; subtracting the two energies loses ~log10(N^2) digits
    step = sector.coupling * (2.0 * mz[:-1] + 1.0) / sector.N - sector.field
    up = link * planck_weight(step, beta)  # W(k -> k+1)
    down = link * planck_weight(-step, beta)  # W(k+1 -> k)
    diag = np.zeros(sector.dim)
    diag[:-1] += up
    diag[1:] += down
    gen = GeneratorMatrix(
        diag=diag,
        lower=-up,
        upper=-down,
        energies=e,
        beta=beta,
        gamma=gamma,
        mz=mz,
    )
    if np.any((up == 0) & (down == 0)):
        msg = "degenerate neighbouring levels: generator splits into decoupled blocks"
        gen.warnings.append(msg)
        log.warning("%s (%s)", msg, sector)
    return gen


def generator_from_spectrum(energies_: np.ndarray, D: np.ndarray, beta: float) -> GeneratorMatrix:
    """Dense generator for an arbitrary spectrum and dipole table."""
    beta = check_beta(beta)
    E = np.asarray(energies_, dtype=float)
    D = np.asarray(D, dtype=float)
    M = E.size
    if D.shape != (M, M):
        raise DomainError(f"dipole table shape {D.shape} does not match {M} levels")
    scale = max(float(np.max(np.abs(D))), 1e-300)
    if not np.allclose(D, D.T, rtol=1e-12, atol=1e-14 * scale):
        raise DomainError("dipole table must be symmetric")
    if np.any(D < -1e-14 * scale):
        raise DomainError("dipole table must be non-negative")
    if np.any(np.diff(E) < 0):
        raise DomainError("energies must be ascending")
    W = D * planck_weight(E[:, None] - E[None, :], beta)  # W[m, n] = rate n -> m
    np.fill_diagonal(W, 0.0)
    A = -W
    np.fill_diagonal(A, W.sum(axis=0))
    gen = GeneratorMatrix(
        diag=np.diag(A).copy(), lower=None, upper=None, energies=E, beta=beta, dense=A
    )
    if np.any(np.diff(E) == 0):
        gen.warnings.append("degenerate energies: zero rate between equal levels")
    return gen


@dataclass(frozen=True)
class DetailedBalanceCertificate:
    max_asymmetry: float
    C_matrix_norm: float

    @property
    def relative_asymmetry(self) -> float:
        return self.max_asymmetry / self.C_matrix_norm if self.C_matrix_norm else 0.0


def symmetrized_rates(A: GeneratorMatrix) -> np.ndarray:
    """C[m, n] = exp(-beta E_m / 2) W(m -> n) exp(beta E_n / 2), formed in the log domain."""
    E = A.energies
    W = -A.to_dense().T  # W[m, n] = rate m -> n
    np.fill_diagonal(W, 0.0)
    C = np.zeros_like(W)
    pos = W > 0
    mi, ni = np.nonzero(pos)
    C[mi, ni] = np.exp(np.log(W[mi, ni]) + 0.5 * A.beta * (E[ni] - E[mi]))
    return C


def detailed_balance_check(A: GeneratorMatrix) -> DetailedBalanceCertificate | None:
    """Asymmetry of the Boltzmann-conjugated rate matrix.

    Returns None at zero temperature, where the similarity is undefined; use
    :func:`is_energy_triangular` there instead.
    """
    if A.zero_temperature:
        return None
    C = symmetrized_rates(A)
    asym = float(np.max(np.abs(C - C.T))) if C.size else 0.0
    return DetailedBalanceCertificate(asym, float(np.max(np.abs(C))) if C.size else 0.0)


def is_energy_triangular(A: GeneratorMatrix) -> bool:
    """True when A[m, n] = 0 whenever E_m > E_n (no upward transitions)."""
    dense = A.to_dense()
    E = A.energies
    mask = (E[:, None] > E[None, :]) & ~np.eye(A.size, dtype=bool)
    return bool(np.all(dense[mask] == 0.0))
