"""Angular Q tensor and blackbody rates for arbitrary emitter positions.

Q(d, w) = int dOmega exp(i u.d w/c) (delta - u u^T) over the unit sphere.
Coincident emitters give (8 pi / 3) * identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError
from .fullspace import AXES, FullSpaceModel, LabeledEigensystem, site_operator
from .rates import GeneratorMatrix, check_beta, generator_from_spectrum, planck_weight

Q_TOL = 1e-9
MAX_DOUBLINGS = 4
MAX_POINTS = 20_000_000  # 2 n^2 directions; beyond this the rule no longer fits in memory
_IMAG_TOL = 1e-10


@lru_cache(maxsize=32)
def _sphere_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in cos(theta) times 2n uniform phi points: unit vectors and weights."""
    x, wx = np.polynomial.legendre.leggauss(n)
    phi = np.arange(2 * n) * (math.pi / n)
    st = np.sqrt(1.0 - x * x)
    u = np.stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(x, 2 * n),
        ],
        axis=1,
    )
    w = np.repeat(wx, 2 * n) * (math.pi / n)
    return u, w


def _q_at_order(kvec: np.ndarray, n: int) -> np.ndarray:
    u, w = _sphere_rule(n)
    phase = np.exp(1j * (u @ kvec)) * w
    Q = phase.sum() * np.eye(3) - np.einsum("k,kh,kl->hl", phase, u, u)
    return Q


def q_tensor(r_i, r_j, omega: float, c: float = 1.0) -> np.ndarray:
    """Real symmetric 3x3 Q^{ij} for emitters at ``r_i``, ``r_j`` and frequency ``omega``.

    The quadrature order doubles until two successive tensors agree to 1e-9.
    """
    if omega < 0:
        raise DomainError(f"omega must be non-negative, got {omega!r}")
    kvec = (np.asarray(r_i, dtype=float) - np.asarray(r_j, dtype=float)) * (omega / c)
    k = float(np.linalg.norm(kvec))
    if k == 0.0:
        return (8.0 * math.pi / 3.0) * np.eye(3)
    n = 16 + int(math.ceil(k))
    if 2 * (2 * n) ** 2 > MAX_POINTS:
        raise ConvergenceError(f"Q tensor at k={k:.6g} needs more than {MAX_POINTS} quadrature points")
    prev = _q_at_order(kvec, n)
    delta = math.inf
    for _ in range(MAX_DOUBLINGS):
        n *= 2
        if 2 * n * n > MAX_POINTS:
            break
        cur = _q_at_order(kvec, n)
        delta = float(np.max(np.abs(cur - prev)))
        prev = cur
        if delta < Q_TOL:
            break
    if not delta < Q_TOL:
        raise ConvergenceError(f"Q tensor quadrature did not converge (k={k:.6g})", last_delta=delta)
    if np.max(np.abs(prev.imag)) > _IMAG_TOL:
        raise ConvergenceError("Q tensor has a non-negligible imaginary part", last_delta=delta)
    Q = prev.real
    return 0.5 * (Q + Q.T)


@dataclass(frozen=True)
class GeneralRates:
    """Effective dipole table and rates W[n, m] (rate m -> n) at one temperature."""

    dipoles: np.ndarray
    rates: np.ndarray
    generator: GeneratorMatrix


def _site_elements(sys: LabeledEigensystem) -> np.ndarray:
    """Complex <n| sigma_i^h |m>, shape (N, 3, M, M)."""
    out = np.empty((sys.N, 3, sys.size, sys.size), dtype=complex)
    for i in range(sys.N):
        for a, h in enumerate(AXES):
            el = sys.matrix_elements(site_operator(sys.N, h, i))
            out[i, a] = -1j * el if h == "y" else el
    return out


def general_rates(
    sys: LabeledEigensystem,
    model: FullSpaceModel,
    beta: float,
    gamma: float,
    c: float = 1.0,
    omega_digits: int = 12,
) -> GeneralRates:
    """Rates from the double sum over sites and axes weighted by Q tensors.

    Normalised by 3 gamma / (8 pi), so coincident emitters give exactly the
    coherent dipole table and fully suppressed cross terms the incoherent one.
    Absolute values beyond these two limits depend on this convention.
    """
    if model.positions is None:
        raise DomainError("general rates need emitter positions")
    beta = check_beta(beta)
    pos = model.positions
    el = _site_elements(sys)
    E = sys.energies
    M = sys.size
    D = np.zeros((M, M))
    cache: dict[tuple[float, int, int], np.ndarray] = {}
    for n in range(M):
        for m in range(n + 1, M):
            a = el[:, :, n, m]
            if not np.any(np.abs(a) > 1e-14):
                continue
            w = abs(E[n] - E[m])
            key_w = float(f"{w:.{omega_digits}g}")
            acc = 0.0
            for i in range(model.N):
                for j in range(model.N):
                    key = (key_w, min(i, j), max(i, j))
                    if key not in cache:
                        cache[key] = q_tensor(pos[i], pos[j], w, c)
                    acc += float(np.real(a[i] @ cache[key] @ np.conj(a[j])))
            D[n, m] = D[m, n] = max(acc, 0.0)
    D *= 3.0 * gamma / (8.0 * math.pi)
    W = D * planck_weight(E[:, None] - E[None, :], beta)
    np.fill_diagonal(W, 0.0)
    return GeneralRates(D, W, generator_from_spectrum(E, D, beta))
