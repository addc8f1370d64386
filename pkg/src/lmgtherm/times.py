"""Relaxation times of the Pauli/Lindblad dynamics and population evolution.

Times follow the usual split:

* off-diagonal (coherence) decay: tau_mn = 2 / (A_mm + A_nn), tau_Q = max tau_mn;
* population (energy) relaxation: tau_P = 1 / mu_2(A), mu_2 the smallest
  non-zero eigenvalue of the generator;
* thermalization: tau = max(tau_P, tau_Q).

Reported "b-times" are multiplied by b = 2 gamma J^3.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .errors import ConvergenceError, DomainError
from .rates import DEFAULT_GAMMA, GeneratorMatrix, check_beta, sector_generator
from .sector import GapReport, SectorParams, critical_field, gap
from .tridiag import birth_death_smallest, sturm_count

log = logging.getLogger(__name__)

STATIONARY_TOL = 1e-8
ZERO_T_RATIO_TOL = 0.05


def b_scale(gamma: float, coupling: float = 1.0) -> float:
    return 2.0 * gamma * coupling**3


def decoherence_time(A: GeneratorMatrix, m: int, n: int) -> float:
    """tau_mn = 2 / (A_mm + A_nn); inf when neither state has any outgoing rate."""
    if m == n:
        raise DomainError("decoherence time needs two distinct states")
    if not (0 <= m < A.size and 0 <= n < A.size):
        raise DomainError(f"state indices ({m}, {n}) outside 0..{A.size - 1}")
    s = A.diag[m] + A.diag[n]
    if s <= 0:
        log.warning("states %d and %d carry no outgoing rate; tau_mn = inf", m, n)
        return math.inf
    return 2.0 / s


def tau_surface(A: GeneratorMatrix) -> np.ndarray:
    """Full tau_mn table; the diagonal is NaN."""
    d = A.diag
    with np.errstate(divide="ignore"):
        T = 2.0 / (d[:, None] + d[None, :])
    np.fill_diagonal(T, np.nan)
    return T


def tau_Q(A: GeneratorMatrix) -> tuple[float, tuple[int, int]]:
    """Decoherence time and the index pair attaining it.

    The maximum of 2/(d_m + d_n) over m != n sits at the two smallest
    diagonal entries, so this is O(M).
    """
    if A.size < 2:
        raise DomainError("need at least two states")
    d = A.diag
    i1, i2 = np.argpartition(d, 1)[:2] if A.size > 2 else (0, 1)
    i1, i2 = int(i1), int(i2)
    if d[i2] < d[i1]:
        i1, i2 = i2, i1
    s = d[i1] + d[i2]
    if s <= 0:
        log.warning("two states without outgoing rates: tau_Q = inf")
        return math.inf, (i1, i2)
    return 2.0 / s, (i1, i2)


def _stationary_blocks_dense(A: np.ndarray) -> int:
    adj = (np.abs(A) > 0) & ~np.eye(A.shape[0], dtype=bool)
    n, _ = connected_components(adj, directed=False)
    return int(n)


@dataclass(frozen=True)
class Mu2Result:
    mu2: float
    tau_P: float
    blocks: int = 1
    warnings: tuple[str, ...] = ()


def _mu2_tridiagonal(A: GeneratorMatrix, rtol: float) -> Mu2Result:
    up, down = A.rates()
    if A.zero_temperature:
        d = A.diag
        nz = d[d > 0]
        mu2 = float(nz.min()) if nz.size else 0.0
        return Mu2Result(mu2, 1.0 / mu2 if mu2 > 0 else math.inf)

    # symmetrised A: off-diagonals -sqrt(lower*upper); its smallest eigenvalue must be the stationary zero
    sym_off = -np.sqrt(up * down)
    nrm = A.norm()
    if sturm_count(A.diag, sym_off, STATIONARY_TOL * nrm + np.finfo(float).tiny) < 1:
        raise AssertionError("generator has no stationary eigenvalue; rates are inconsistent")

    # links with both rates zero isolate stationary blocks; one zero per block is excluded
    cut = (up == 0) & (down == 0)
    warnings: tuple[str, ...] = ()
    runs: list[tuple[int, int]] = []
    start = 0
    for k, c in enumerate(cut):
        if c:
            if k > start:
                runs.append((start, k))
            start = k + 1
    if start < up.size:
        runs.append((start, up.size))
    blocks = int(cut.sum()) + 1
    if blocks > 1:
        warnings = (f"generator decomposes into {blocks} stationary blocks",)
    if not runs:
        return Mu2Result(0.0, math.inf, blocks, warnings)
    mu2 = min(birth_death_smallest(up[a:b], down[a:b], rtol=rtol) for a, b in runs)
    return Mu2Result(mu2, 1.0 / mu2 if mu2 > 0 else math.inf, blocks, warnings)


def _mu2_dense(A: GeneratorMatrix) -> Mu2Result:
    dense = A.to_dense()
    blocks = _stationary_blocks_dense(dense)
    if A.zero_temperature:
        ev = np.sort(A.diag)
    else:
        E = A.energies
        s = 0.5 * A.beta * (E - E.min())
        # B = diag(e^{s}) A diag(e^{-s}) is symmetric under detailed balance
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            B = dense * np.exp(s[:, None] - s[None, :])
        B[~np.isfinite(B)] = 0.0
        B = 0.5 * (B + B.T)
        ev = np.linalg.eigvalsh(B)
    rest = ev[blocks:]
    if rest.size == 0:
        return Mu2Result(0.0, math.inf, blocks)
    mu2 = float(rest[0])
    warnings = (f"generator decomposes into {blocks} stationary blocks",) if blocks > 1 else ()
    return Mu2Result(mu2, 1.0 / mu2 if mu2 > 0 else math.inf, blocks, warnings)


def mu2_and_tau_P(A: GeneratorMatrix, rtol: float = 1e-12) -> Mu2Result:
    """Smallest non-zero generator eigenvalue and the dissipation time 1/mu_2.

    Tridiagonal generators use Sturm bisection on the reduced birth-death
    chain; at zero temperature the generator is triangular in the energy
    order and mu_2 is its smallest non-zero diagonal entry.
    """
    if A.size < 2:
        raise DomainError("need at least two states")
    if A.is_tridiagonal:
        return _mu2_tridiagonal(A, rtol)
    return _mu2_dense(A)


@dataclass
class ThermalizationReport:
    sector: SectorParams
    beta: float
    gamma: float
    generator: GeneratorMatrix
    gap: GapReport
    tau_Q: float
    argmax: tuple[float, float]
    mu2: float
    tau_P: float
    warnings: list[str] = field(default_factory=list)

    @property
    def tau(self) -> float:
        return max(self.tau_P, self.tau_Q)

    @property
    def b(self) -> float:
        return b_scale(self.gamma, self.sector.coupling)

    @property
    def tauQ_b(self) -> float:
        return self.b * self.tau_Q

    @property
    def tauP_b(self) -> float:
        return self.b * self.tau_P

    @property
    def tau_b(self) -> float:
        return self.b * self.tau

    @property
    def degeneracy_flag(self) -> bool:
        return self.gap.degeneracy_flag

    def tau_mn(self, m_z: float, n_z: float) -> float:
        A = self.generator
        return decoherence_time(A, A.index_of(m_z), A.index_of(n_z))

    def tau_surface(self) -> np.ndarray:
        return tau_surface(self.generator)


def thermalization_time(
    sector: SectorParams, beta: float, gamma: float = DEFAULT_GAMMA
) -> ThermalizationReport:
    beta = check_beta(beta)
    A = sector_generator(sector, beta, gamma)
    gr = gap(sector)
    tq, (i, k) = tau_Q(A)
    res = mu2_and_tau_P(A)
    warnings = list(A.warnings) + list(res.warnings)
    if math.isinf(beta) and sector.N >= 20 and math.isfinite(tq) and math.isfinite(res.tau_P):
        ratio = tq / res.tau_P
        if abs(ratio - 2.0) > 2.0 * ZERO_T_RATIO_TOL:
            warnings.append(f"zero-temperature tau_Q/tau_P = {ratio:.6g}, expected 2")
    return ThermalizationReport(
        sector=sector,
        beta=beta,
        gamma=gamma,
        generator=A,
        gap=gr,
        tau_Q=tq,
        argmax=(float(A.mz[i]), float(A.mz[k])),
        mu2=res.mu2,
        tau_P=res.tau_P,
        warnings=warnings,
    )


def tau_j_jm1(sector: SectorParams, beta: float, gamma: float = DEFAULT_GAMMA) -> float:
    """tau_{m=j, n=j-1}: the pair plotted against N for the critical scaling."""
    A = sector_generator(sector, beta, gamma)
    return decoherence_time(A, A.size - 1, A.size - 2)


def log_gibbs(energies_: np.ndarray, beta: float) -> np.ndarray:
    E = np.asarray(energies_, dtype=float)
    if math.isinf(beta):
        ground = E == E.min()
        out = np.full(E.size, -np.inf)
        out[ground] = -math.log(ground.sum())
        return out
    w = -beta * (E - E.min())
    return w - logsumexp(w)


def gibbs_vector(energies_: np.ndarray, beta: float) -> np.ndarray:
    """Normalised Boltzmann weights; beta = inf gives the (uniform) ground-state mass."""
    beta = check_beta(beta, allow_zero=True)
    return np.exp(log_gibbs(energies_, beta))


def relative_entropy(p: np.ndarray, log_q: np.ndarray) -> float:
    """Kullback-Leibler divergence sum p log(p/q), with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - log_q[mask])))


def offdiagonal_decay(initial: float, tau_mn: float, t: float) -> float:
    if not tau_mn > 0:
        raise DomainError(f"tau_mn must be positive, got {tau_mn!r}")
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    return abs(initial) * math.exp(-t / tau_mn)


@dataclass(frozen=True)
class PauliTrajectory:
    times: np.ndarray
    populations: np.ndarray  # shape (len(times), M)
    method: str


# the spectral path divides by sqrt(pi); its error grows like eps * pi_max / pi_min
SPECTRAL_MAX_LOG_SPREAD = math.log(1e-9 / np.finfo(float).eps)
# eigenvalues from the symmetric solver carry an absolute error ~ eps ||A||, which
# shifts a slow mode by at most ~ eps ||A|| / mu_2 before it has decayed
SPECTRAL_MAX_CONDITION = 1e-9 / np.finfo(float).eps
# beyond this ||A|| * t_end the explicit pair is replaced by implicit Radau IIA
STIFF_THRESHOLD = 1e5


def _finish(times: np.ndarray, P: np.ndarray, method: str) -> PauliTrajectory:
    if np.min(P) < -1e-8:
        raise ConvergenceError(f"{method} produced populations down to {np.min(P):.3g}", float(np.min(P)))
    P = np.where(P < 0, 0.0, P)
    P /= P.sum(axis=1, keepdims=True)
    return PauliTrajectory(times, P, method)


def _spectral(A: GeneratorMatrix, p0: np.ndarray, times: np.ndarray) -> PauliTrajectory:
    up, down = A.rates()
    # S = diag(s) with s_{k+1}/s_k = sqrt(up_k/down_k) makes S^{-1} A S symmetric
    log_s = np.concatenate([[0.0], np.cumsum(0.5 * (np.log(up) - np.log(down)))])
    log_s -= log_s.max()
    lam, V = eigh_tridiagonal(A.diag, -np.sqrt(up * down))
    lam[np.argmin(np.abs(lam))] = 0.0  # the stationary mode is exact
    with np.errstate(under="ignore"):
        y = V.T @ (p0 * np.exp(-log_s))
        s = np.exp(log_s)
        P = np.array([s * (V @ (np.exp(-lam * t) * y)) for t in times])
    return _finish(times, P, "spectral")


def _integrate(A: GeneratorMatrix, p0: np.ndarray, times: np.ndarray, tol: float) -> PauliTrajectory:
    if times[-1] == times[0]:
        return _finish(times, np.tile(p0, (times.size, 1)), "runge-kutta")
    stiff = A.norm() * (times[-1] - times[0]) > STIFF_THRESHOLD
    kwargs = {}
    if stiff:
        J = -A.to_dense()
        kwargs["jac"] = csr_matrix(J) if A.is_tridiagonal else J
    try:
        sol = solve_ivp(
            lambda _t, p: -A.matvec(p),
            (float(times[0]), float(times[-1])),
            p0,
            method="Radau" if stiff else "DOP853",
            t_eval=times,
            rtol=tol,
            atol=tol * 1e-6,  # Gibbs tails sit many decades below the largest population
            **kwargs,
        )
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        # e.g. ||A|| t_end ~ 1e200: the implicit stage matrix is singular to working precision
        raise ConvergenceError(f"integrator failed over ||A|| t = {A.norm() * times[-1]:.3g}: {exc}") from exc
    if not sol.success:
        raise ConvergenceError(f"integrator failed: {sol.message}")
    return _finish(times, sol.y.T, "runge-kutta")


def evolve_pauli(
    A: GeneratorMatrix, p0, times, method: str = "auto", tol: float = 1e-10
) -> PauliTrajectory:
    """Solve dp/dt = -A p at the requested ``times`` (ascending, starting at t=0 for p0).

    ``method='auto'`` uses the symmetrised eigendecomposition when the
    generator is a connected finite-temperature birth-death chain, otherwise
    adaptive Runge-Kutta integration (explicit Dormand-Prince, or implicit
    Radau IIA when the problem is stiff).
    """
    p0 = np.asarray(p0, dtype=float)
    times = np.asarray(times, dtype=float)
    if p0.shape != (A.size,):
        raise DomainError(f"p0 must have {A.size} entries")
    if np.any(p0 < -1e-14) or abs(p0.sum() - 1.0) > 1e-12:
        raise DomainError("p0 must be a normalised probability vector")
    if times.ndim != 1 or np.any(np.diff(times) < 0) or times[0] < 0:
        raise DomainError("times must be ascending and non-negative")

    spectral_ok = A.is_tridiagonal and not A.zero_temperature
    if spectral_ok:
        up, down = A.rates()
        spectral_ok = bool(np.all(up > 0) and np.all(down > 0))
        if spectral_ok:
            log_s = np.cumsum(0.5 * (np.log(up) - np.log(down)))
            spread = 2.0 * (max(log_s.max(), 0.0) - min(log_s.min(), 0.0))
            spectral_ok = spread < SPECTRAL_MAX_LOG_SPREAD
    if spectral_ok:
        spectral_ok = A.norm() < SPECTRAL_MAX_CONDITION * mu2_and_tau_P(A).mu2
    if method == "spectral" and not spectral_ok:
        raise DomainError("spectral path needs a connected finite-temperature tridiagonal generator")
    if method == "spectral" or (method == "auto" and spectral_ok):
        return _spectral(A, p0, times)
    if method not in ("auto", "runge-kutta"):
        raise DomainError(f"unknown method {method!r}")
    return _integrate(A, p0, times, tol)


@dataclass(frozen=True)
class AsymptoticPrediction:
    branch: str
    tau_Q: float
    expression: str


def asymptotic_predictions(
    sector: SectorParams, beta: float, gamma: float = DEFAULT_GAMMA, critical_rtol: float = 1e-9
) -> AsymptoticPrediction:
    """Order-of-magnitude decoherence time for the regime the field selects.

    Paramagnetic: 1/(gamma ||Gamma| - 2Jj/N|^3 j).  Inside the ferromagnetic
    window: N^2/(gamma |Gamma| J^2 (j^2 + j - x^2 + |x|)) with x = Gamma N/2J,
    which reduces to ~N/(gamma Gamma^2 J) at the critical field and to
    ~1/(gamma |Gamma| J^2) well inside.  Valid for beta*J, beta*|Gamma| = O(1).
    """
    check_beta(beta)
    J, N, j, G = sector.coupling, sector.N, sector.j, abs(sector.field)
    gc = critical_field(sector)
    gr = gap(sector)
    if gr.branch == "paramagnetic":
        val = 1.0 / (gamma * abs(G - gc) ** 3 * j)
        return AsymptoticPrediction("paramagnetic", val, "1/(gamma*|Gamma-Gamma_c|^3*j)")
    if G == 0:
        return AsymptoticPrediction("inner", math.inf, "diverges as Gamma -> 0")
    x = G * N / (2 * J)
    val = N**2 / (gamma * G * J**2 * (j * j + j - x * x + x))
    tag = "critical" if abs(G - gc) <= critical_rtol * gc else "inner"
    return AsymptoticPrediction(tag, val, "N^2/(gamma*|Gamma|*J^2*(j^2+j-x^2+|x|))")
