import math

import numpy as np
import pytest

from lmgtherm.errors import DomainError, ResourceError
from lmgtherm.fullspace import (
    FullSpaceModel,
    build_hamiltonian,
    coherent_dipoles,
    collective,
    diagonalize_labeled,
    incoherent_dipoles,
    j_grid_round,
    j_multiplicities,
    parity_operator,
    site_operator,
    solve,
    total_spin_squared,
)
from lmgtherm.rates import generator_from_spectrum, sector_dipoles
from lmgtherm.sector import SectorParams, energies
from lmgtherm.times import gibbs_vector


def _ket(N, spins):
    """Product state from a string like 'ud' (site 0 first)."""
    v = np.zeros(2**N)
    v[int("".join("0" if c == "u" else "1" for c in spins), 2)] = 1.0
    return v


class TestModel:
    def test_validation(self):
        with pytest.raises(ResourceError):
            FullSpaceModel(13)
        FullSpaceModel(13, n_cap=13)
        with pytest.raises(DomainError):
            FullSpaceModel(1)
        with pytest.raises(DomainError):
            FullSpaceModel(3, gamma_y=1.5)
        with pytest.raises(DomainError):
            FullSpaceModel(3, positions=np.zeros((2, 3)))

    def test_operators(self):
        N = 3
        up = _ket(N, "uuu")
        assert np.allclose(collective(N, "z") @ up, 3 * up)
        assert np.allclose(site_operator(N, "x", 0) @ up, _ket(N, "duu"))
        # stored as i sigma^y, real antisymmetric
        a = site_operator(N, "y", 2).toarray()
        assert np.array_equal(a, -a.T)
        J2 = total_spin_squared(N)
        assert (up @ (J2 @ up)) == pytest.approx(1.5 * 2.5)
        assert parity_operator(N).diagonal()[int("011", 2)] == 1.0


class TestHamiltonian:
    def test_two_spin_spectrum(self):
        H = build_hamiltonian(FullSpaceModel(2, 1.0, 0.0, 1.0))
        assert np.allclose(np.linalg.eigvalsh(H), [-1.0, -0.5, -0.5, 0.0], atol=1e-14)

    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_symmetries(self, N):
        rng = np.random.default_rng(N)
        m = FullSpaceModel(N, 1.0, float(rng.normal()), float(rng.uniform()))
        H = build_hamiltonian(m)
        J2 = total_spin_squared(N).toarray()
        P = parity_operator(N).toarray()
        assert np.allclose(H, H.T)
        scale = np.linalg.norm(H) * np.linalg.norm(J2)
        assert np.linalg.norm(H @ J2 - J2 @ H) <= 1e-12 * scale
        assert np.linalg.norm(H @ P - P @ H) <= 1e-12 * np.linalg.norm(H)

    @pytest.mark.parametrize("N, field", [(3, 0.4), (4, -0.7), (6, 1.3), (7, 0.25)])
    def test_matches_sector_energies(self, N, field):
        sys = solve(FullSpaceModel(N, 1.3, field, 1.0))
        for j in np.unique(sys.j_labels[sys.j_labels >= 1]):
            full = np.unique(np.round(sys.energies[sys.j_labels == j], 9))
            sec = np.unique(np.round(energies(SectorParams(N, int(2 * j), 1.3, field)), 9))
            assert np.allclose(full, sec, atol=1e-9)


class TestLabels:
    @pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
    def test_eigensystem_invariants(self, N):
        m = FullSpaceModel(N, 1.0, 0.37, 0.6)
        H = build_hamiltonian(m)
        sys = solve(m)
        V = sys.vectors
        assert np.allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-10)
        res = np.linalg.norm(H @ V - V * sys.energies, axis=0)
        assert np.all(res <= 1e-9 * np.linalg.norm(H, 2))
        assert set(np.unique(sys.parity_labels)) <= {-1, 1}

    @pytest.mark.parametrize("N", [2, 3, 4, 5, 6, 7])
    def test_multiplicities(self, N):
        sys = solve(FullSpaceModel(N, 1.0, 0.0, 1.0))
        mult = j_multiplicities(N)
        for j, count in mult.items():
            assert np.sum(sys.j_labels == j) == count * int(2 * j + 1)
        if N == 4:
            assert mult == {0.0: 2, 1.0: 3, 2.0: 1}

    def test_two_spin_degenerate_pair(self):
        sys = solve(FullSpaceModel(2, 1.0, 0.0, 1.0))
        pair = np.flatnonzero(np.isclose(sys.energies, -0.5))
        assert pair.size == 2
        assert np.all(sys.j_labels[pair] == 1.0)
        # |uu> and |dd> both have an even number of down spins
        assert np.all(sys.parity_labels[pair] == 1)
        assert sys.j_labels[np.isclose(sys.energies, 0.0)][0] == 0.0

    def test_j_grid_round(self):
        assert j_grid_round(2.0, 2) == 1.0
        assert j_grid_round(0.75 + 1e-9, 3) == 0.5
        with pytest.raises(ValueError):
            j_grid_round(1.2, 2)
        with pytest.raises(ValueError):
            j_grid_round(2.0, 3)  # j = 1 is not allowed for odd N


def _groups(sys, with_parity=True):
    """Index groups sharing (energy, j[, parity]); the labelled basis is only fixed up to rotations inside them."""
    groups = {}
    for k in range(sys.size):
        key = (round(float(sys.energies[k]), 8), sys.j_labels[k])
        if with_parity:
            key += (sys.parity_labels[k],)
        groups.setdefault(key, []).append(k)
    return [groups[k] for k in sorted(groups)]


def _block_sums(D, groups):
    return np.array([[D[np.ix_(a, b)].sum() for b in groups] for a in groups])


class TestDipoles:
    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_coherent_selection_rule(self, N):
        rng = np.random.default_rng(10 + N)
        for _ in range(3):
            sys = solve(FullSpaceModel(N, 1.0, float(rng.normal()), float(rng.uniform())))
            D = coherent_dipoles(sys, 0.5)
            cross = sys.j_labels[:, None] != sys.j_labels[None, :]
            assert np.max(D[cross], initial=0.0) < 1e-10 * D.max()
            assert np.allclose(D, D.T) and np.all(D >= 0)

    def test_coherent_connects_parities(self):
        sys = solve(FullSpaceModel(3, 1.0, 0.3, 1.0))
        D = coherent_dipoles(sys, 1.0)
        diff = sys.parity_labels[:, None] != sys.parity_labels[None, :]
        assert D[diff].max() > 0.1

    def test_triplet_matches_sector(self):
        sys = solve(FullSpaceModel(2, 1.0, 0.3, 1.0))
        trip = np.flatnonzero(sys.j_labels == 1.0)
        Jz = collective(2, "z") / 2
        mz = np.array([sys.vectors[:, k] @ (Jz @ sys.vectors[:, k]) for k in trip])
        order = trip[np.argsort(mz)]
        D = coherent_dipoles(sys, 0.5)[np.ix_(order, order)]
        np.fill_diagonal(D, 0.0)
        assert np.allclose(D, sector_dipoles(SectorParams(2, 2), 0.5), rtol=0, atol=1e-12)

    def test_incoherent_singlet_triplet(self):
        s = (_ket(2, "ud") - _ket(2, "du")) / math.sqrt(2)
        t = _ket(2, "uu")
        assert abs(t @ (site_operator(2, "x", 0) @ s)) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
        assert t @ (site_operator(2, "z", 0) @ s) == 0.0
        sys = solve(FullSpaceModel(2, 1.0, 0.3, 1.0))
        D = incoherent_dipoles(sys, 1.0)
        sing = np.flatnonzero(sys.j_labels == 0.0)
        trip = np.flatnonzero(sys.j_labels == 1.0)
        assert D[np.ix_(sing, trip)].max() > 0.1

    @pytest.mark.parametrize("N", [3, 4, 6])
    def test_rotation_invariance(self, N):
        m = FullSpaceModel(N, 1.0, 0.0, 1.0)  # Gamma = 0 keeps large degenerate clusters
        a = solve(m)
        b = solve(m, cluster_rtol=3e-7)
        groups = _groups(a, with_parity=False)
        rng = np.random.default_rng(N)
        V = a.vectors.copy()
        for g in groups:
            if len(g) > 1:
                Q, _ = np.linalg.qr(rng.normal(size=(len(g), len(g))))
                V[:, g] = V[:, g] @ Q
        rotated = type(a)(a.N, a.energies, V, a.j_labels, a.parity_labels, a.clusters)
        D0 = _block_sums(coherent_dipoles(a, 1.0), groups)
        assert np.allclose(D0, _block_sums(coherent_dipoles(b, 1.0), _groups(b, False)), atol=1e-9)
        assert np.allclose(D0, _block_sums(coherent_dipoles(rotated, 1.0), groups), atol=1e-9)

    @pytest.mark.parametrize("beta", [0.3, 1.0, 5.0])
    def test_full_space_gibbs_null(self, beta):
        sys = solve(FullSpaceModel(4, 1.0, 0.45, 0.8))
        A = generator_from_spectrum(sys.energies, coherent_dipoles(sys, 0.5), beta)
        p = gibbs_vector(sys.energies, beta)
        assert np.max(np.abs(A.matvec(p))) <= 1e-10 * max(A.norm(), 1.0)

    def test_labels_fail_loudly(self):
        # a J^2 that is not the model's own breaks the simultaneous labelling
        H = build_hamiltonian(FullSpaceModel(3, 1.0, 0.0, 1.0))
        bogus = total_spin_squared(3) + 0.3 * site_operator(3, "x", 0)
        with pytest.raises(Exception) as info:
            diagonalize_labeled(H, bogus, parity_operator(3), 3)
        assert "cluster" in str(info.value)
