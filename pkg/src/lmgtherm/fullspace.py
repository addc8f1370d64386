"""Exact LMG model on the full 2^N spin-1/2 Hilbert space.

Basis: sigma^z product states; bit i of the index (site 0 most significant)
is 0 for spin up.  Everything here is real: sigma^y = -i a with the real
antisymmetric a = [[0, 1], [-1, 0]], so J_y^2 = -(sum a_i / 2)^2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, DomainError, ResourceError

log = logging.getLogger(__name__)

N_CAP = 12
CLUSTER_RTOL = 1e-8
J_GRID_TOL = 1e-4
LABEL_RTOL = 1e-8

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "a": np.array([[0.0, 1.0], [-1.0, 0.0]]),  # i * sigma^y
    "z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class FullSpaceModel:
    N: int
    coupling: float = 1.0
    field: float = 0.0
    gamma_y: float = 1.0
    positions: np.ndarray | None = None
    n_cap: int = N_CAP

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N!r}")
        if self.N > self.n_cap:
            raise ResourceError(
                f"N={self.N} exceeds the full-space cap {self.n_cap} (2^N = {2**self.N} states)"
            )
        if not self.coupling > 0:
            raise DomainError(f"coupling must be positive, got {self.coupling!r}")
        if not 0.0 <= self.gamma_y <= 1.0:
            raise DomainError(f"gamma_y must lie in [0, 1], got {self.gamma_y!r}")
        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=float)
            if pos.shape != (self.N, 3):
                raise DomainError(f"positions must have shape ({self.N}, 3), got {pos.shape}")
            object.__setattr__(self, "positions", pos)

    @property
    def dim(self) -> int:
        return 2**self.N


@lru_cache(maxsize=16)
def _site_ops(N: int) -> dict[tuple[str, int], sp.csr_matrix]:
    ops = {}
    for name, mat in _PAULI.items():
        for i in range(N):
            left = sp.identity(2**i, format="csr")
            right = sp.identity(2 ** (N - i - 1), format="csr")
            ops[name, i] = sp.kron(sp.kron(left, sp.csr_matrix(mat)), right, format="csr")
    return ops


def site_operator(N: int, axis: str, i: int) -> sp.csr_matrix:
    """sigma_i^axis as a sparse matrix; for axis 'y' the real matrix i*sigma^y is returned."""
    key = "a" if axis == "y" else axis
    return _site_ops(N)[key, i]


def collective(N: int, axis: str) -> sp.csr_matrix:
    """sum_i sigma_i^axis (again i*sigma^y for 'y')."""
    key = "a" if axis == "y" else axis
    ops = _site_ops(N)
    return sum((ops[key, i] for i in range(N)), sp.csr_matrix((2**N, 2**N)))


def total_spin_squared(N: int) -> sp.csr_matrix:
    Sx, Sa, Sz = (collective(N, h) for h in AXES)
    return ((Sx @ Sx - Sa @ Sa + Sz @ Sz) / 4.0).tocsr()


def parity_operator(N: int) -> sp.dia_matrix:
    idx = np.arange(2**N)
    downs = np.array([bin(k).count("1") for k in idx])
    return sp.diags(np.where(downs % 2 == 0, 1.0, -1.0))


def build_hamiltonian(model: FullSpaceModel) -> np.ndarray:
    """H = -(J/N)(J_x^2 + gamma_y J_y^2) - Gamma J_z, dense and real symmetric.

    This equals the pairwise form -(J/4N) sum_{i != j}(s^x s^x + gamma_y s^y s^y)
    - (Gamma/2) sum s^z plus the constant J (1 + gamma_y) / 4.
    """
    N = model.N
    Sx, Sa, Sz = (collective(N, h) for h in AXES)
    Jx2 = (Sx @ Sx) / 4.0
    Jy2 = -(Sa @ Sa) / 4.0
    H = -(model.coupling / N) * (Jx2 + model.gamma_y * Jy2) - model.field * Sz / 2.0
    return H.toarray()


def j_grid_round(jj: float, N: int) -> float:
    """j from a J^2 eigenvalue j(j+1), snapped to the grid allowed for N spins."""
    j = 0.5 * (-1.0 + math.sqrt(max(1.0 + 4.0 * jj, 0.0)))
    two_j = round(2.0 * j)
    if (two_j - N) % 2:
        two_j += 1 if 2.0 * j > two_j else -1
    if abs(2.0 * j - two_j) > 2.0 * J_GRID_TOL or not 0 <= two_j <= N:
        raise ValueError(f"J^2 eigenvalue {jj!r} gives j={j!r}, off the grid for N={N}")
    return two_j / 2.0


@dataclass
class LabeledEigensystem:
    N: int
    energies: np.ndarray
    vectors: np.ndarray
    j_labels: np.ndarray
    parity_labels: np.ndarray
    clusters: list[np.ndarray] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.energies.size

    def matrix_elements(self, op: sp.spmatrix) -> np.ndarray:
        """<n| op |m> in the eigenbasis."""
        V = self.vectors
        return V.T @ (op @ V)


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return np.split(np.arange(values.size), breaks)


def _rotate_within(V: np.ndarray, op, tol: float) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Diagonalise ``op`` inside span(V); return rotated V, its eigenvalues, and sub-clusters."""
    small = V.T @ (op @ V)
    w, U = np.linalg.eigh(0.5 * (small + small.T))
    return V @ U, w, _clusters(w, tol)


def diagonalize_labeled(
    H: np.ndarray, J2, P, N: int, cluster_rtol: float = CLUSTER_RTOL
) -> LabeledEigensystem:
    """Eigendecomposition of H with simultaneous (J^2, parity) labels.

    Degenerate energy clusters are rotated to diagonalise J^2, and each
    resulting J^2 group is rotated to diagonalise the parity.
    """
    E, V = np.linalg.eigh(H)
    scale = max(float(E[-1] - E[0]), float(np.max(np.abs(E))), 1.0)
    j2_norm = (N / 2) * (N / 2 + 1)
    clusters = _clusters(E, cluster_rtol * scale)
    j_labels = np.empty(E.size)
    p_labels = np.empty(E.size, dtype=int)
    for cid, idx in enumerate(clusters):
        block = V[:, idx]
        if idx.size > 1:
            block, jj, groups = _rotate_within(block, J2, cluster_rtol * j2_norm)
            for g in groups:
                if g.size > 1:
                    block[:, g], _, _ = _rotate_within(block[:, g], P, 0.5)
            V[:, idx] = block
        for col, k in enumerate(idx):
            v = V[:, k]
            jj = float(v @ (J2 @ v))
            try:
                j = j_grid_round(jj, N)
            except ValueError as exc:
                raise ConvergenceError(f"cluster {cid}: {exc}") from None
            p = float(v @ (P @ v))
            res_j = np.linalg.norm(J2 @ v - j * (j + 1) * v)
            res_p = np.linalg.norm(P @ v - math.copysign(1.0, p) * v)
            if res_j > LABEL_RTOL * j2_norm or res_p > LABEL_RTOL:
                raise ConvergenceError(
                    f"cluster {cid}: simultaneous labels not reached "
                    f"(J^2 residual {res_j:.3g}, parity residual {res_p:.3g})",
                    last_delta=max(res_j / j2_norm, res_p),
                )
            j_labels[k] = j
            p_labels[k] = 1 if p > 0 else -1
    return LabeledEigensystem(N, E, V, j_labels, p_labels, clusters)


def solve(model: FullSpaceModel, cluster_rtol: float = CLUSTER_RTOL) -> LabeledEigensystem:
    return diagonalize_labeled(
        build_hamiltonian(model),
        total_spin_squared(model.N),
        parity_operator(model.N),
        model.N,
        cluster_rtol,
    )


def coherent_dipoles(sys: LabeledEigensystem, gamma: float) -> np.ndarray:
    """D[n, m] = gamma sum_h |<n| sum_i sigma_i^h |m>|^2."""
    D = np.zeros((sys.size, sys.size))
    for h in AXES:
        D += sys.matrix_elements(collective(sys.N, h)) ** 2
    return gamma * D


def incoherent_dipoles(sys: LabeledEigensystem, gamma: float) -> np.ndarray:
    """D[n, m] = gamma sum_i sum_h |<n| sigma_i^h |m>|^2."""
    D = np.zeros((sys.size, sys.size))
    for i in range(sys.N):
        for h in AXES:
            D += sys.matrix_elements(site_operator(sys.N, h, i)) ** 2
    return gamma * D


def j_multiplicities(N: int) -> dict[float, int]:
    """Number of spin-j multiplets among N spins 1/2."""
    out = {}
    for two_j in range(N % 2, N + 1, 2):
        k = (N - two_j) // 2
        out[two_j / 2] = math.comb(N, k) - (math.comb(N, k - 1) if k > 0 else 0)
    return out
