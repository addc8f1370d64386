import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lmgtherm.errors import ConvergenceError, DomainError
from lmgtherm.rates import GeneratorMatrix, generator_from_spectrum, planck_weight, sector_generator
from lmgtherm.sector import SectorParams, critical_field, gap
from lmgtherm.times import (
    asymptotic_predictions,
    b_scale,
    decoherence_time,
    evolve_pauli,
    gibbs_vector,
    log_gibbs,
    mu2_and_tau_P,
    offdiagonal_decay,
    relative_entropy,
    tau_j_jm1,
    tau_Q,
    tau_surface,
    thermalization_time,
)

from .conftest import finite_betas, sectors
from .oracles import brute_tau_Q, dense_mu2, four_term_tau


def critical(N, two_j=None, J=1.0, ratio=1.0):
    s = SectorParams(N, N if two_j is None else two_j, J, 0.0)
    return s.with_field(ratio * critical_field(s))


def random_chain(rng, M, beta) -> GeneratorMatrix:
    """Tridiagonal detailed-balance generator with random levels and link strengths."""
    E = rng.uniform(-2.0, 2.0, M)
    link = rng.uniform(0.1, 2.0, M - 1)
    up = link * planck_weight(E[1:] - E[:-1], beta)
    down = link * planck_weight(E[:-1] - E[1:], beta)
    diag = np.zeros(M)
    diag[:-1] += up
    diag[1:] += down
    return GeneratorMatrix(diag=diag, lower=-up, upper=-down, energies=E, beta=beta)


class TestDecoherence:
    @given(sectors(n_max=30), finite_betas, st.data())
    def test_four_term_bracket(self, s, beta, data):
        A = sector_generator(s, beta)
        m = data.draw(st.integers(0, A.size - 1))
        n = data.draw(st.integers(0, A.size - 1).filter(lambda k: k != m))
        t = decoherence_time(A, m, n)
        assert t == decoherence_time(A, n, m)
        assert t == pytest.approx(four_term_tau(A.to_dense(), m, n), rel=1e-14)

    def test_same_state_rejected(self):
        with pytest.raises(DomainError):
            decoherence_time(sector_generator(SectorParams(4, 4, 1, 0.3), 1.0), 1, 1)

    def test_surface_symmetric(self):
        T = tau_surface(sector_generator(SectorParams(20, 20, 1, 0.7), 1.0))
        assert np.all(np.isnan(np.diag(T)))
        off = ~np.eye(T.shape[0], dtype=bool)
        assert np.array_equal(T[off], T.T[off])

    def test_zero_temperature_closed_chain(self):
        # tau_{j,j-1} = 1/(2 gamma j Delta^3) with Delta = J/N at the critical field
        for N in (20, 50, 100, 500):
            s = critical(N)
            t = tau_j_jm1(s, math.inf, 0.5)
            assert t == pytest.approx(1.0 / (2 * 0.5 * (N / 2) * (1.0 / N) ** 3), rel=1e-12)
            assert b_scale(0.5) * t == pytest.approx(2 * N**2, rel=1e-12)

    def test_offdiagonal_decay(self):
        assert offdiagonal_decay(-0.5, 2.0, 0.0) == 0.5
        assert offdiagonal_decay(1.0, 2.0, 2.0) == pytest.approx(math.exp(-1))
        with pytest.raises(DomainError):
            offdiagonal_decay(1.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            offdiagonal_decay(1.0, 1.0, -1.0)


class TestTauQ:
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_exhaustive_search(self, seed):
        rng = np.random.default_rng(seed)
        M = int(rng.integers(2, 51))
        E = np.sort(rng.uniform(-3, 3, M))
        D = rng.uniform(0, 1, (M, M))
        D = D + D.T
        A = generator_from_spectrum(E, D, float(rng.uniform(0.1, 5)))
        value, (i, k) = tau_Q(A)
        ref, _ = brute_tau_Q(A.diag)
        assert value == pytest.approx(ref, rel=1e-15)
        assert value == pytest.approx(2 / (A.diag[i] + A.diag[k]), rel=1e-15)

    def test_paramagnetic_argmax_near_top(self):
        r = thermalization_time(SectorParams(100, 100, 1.0, 2.0), 1.0)
        assert set(r.argmax) == {50.0, 49.0}
        r = thermalization_time(SectorParams(100, 100, 1.0, -2.0), 1.0)
        assert set(r.argmax) == {-50.0, -49.0}

    def test_isolated_states(self):
        A = generator_from_spectrum([0.0, 1.0, 2.0], np.zeros((3, 3)), 1.0)
        assert tau_Q(A)[0] == math.inf


class TestMu2:
    @pytest.mark.parametrize("seed", range(25))
    def test_sturm_matches_dense(self, seed):
        rng = np.random.default_rng(100 + seed)
        M = int(rng.integers(2, 13))
        A = random_chain(rng, M, float(rng.uniform(0.2, 3.0)))
        got = mu2_and_tau_P(A).mu2
        assert got == pytest.approx(dense_mu2(A.to_dense()), rel=1e-9)

    @given(sectors(n_max=24), finite_betas)
    @settings(max_examples=40)
    def test_sector_matches_dense_symmetrised(self, s, beta):
        # near a level tie the two paths legitimately disagree on whether the link survives
        assume(gap(s).gap > 1e-9 * s.coupling)
        A = sector_generator(s, beta)
        tri = mu2_and_tau_P(A)
        dense = generator_from_spectrum(*_sorted_dense(s, beta))
        ref = mu2_and_tau_P(dense)
        assert tri.blocks == ref.blocks
        if ref.mu2 > 1e-6 * A.norm():
            assert tri.mu2 == pytest.approx(ref.mu2, rel=1e-8)

    def test_zero_temperature_is_smallest_nonzero_diagonal(self):
        A = sector_generator(critical(100), math.inf, 0.5)
        res = mu2_and_tau_P(A)
        d = A.diag
        assert res.mu2 == d[d > 0].min()
        # 2 gamma (2j) Delta^3 at the critical field
        assert res.mu2 == pytest.approx(1e-4, rel=1e-12)
        assert res.tau_P == pytest.approx(1e4, rel=1e-12)

    def test_zero_temperature_general_path(self):
        s = critical(20)
        A = sector_generator(s, math.inf)
        dense = generator_from_spectrum(*_sorted_dense(s, math.inf))
        assert mu2_and_tau_P(dense).mu2 == pytest.approx(mu2_and_tau_P(A).mu2, rel=1e-10)

    def test_blocks_at_degenerate_field(self):
        A = sector_generator(SectorParams(100, 100, 1.0, 0.51), 1.0)
        res = mu2_and_tau_P(A)
        assert res.blocks == 2 and res.warnings and res.mu2 > 0

    def test_single_state_rejected(self):
        A = generator_from_spectrum([0.0], np.zeros((1, 1)), 1.0)
        with pytest.raises(DomainError):
            mu2_and_tau_P(A)


def _sorted_dense(s, beta):
    from lmgtherm.rates import sector_dipoles
    from lmgtherm.sector import energies

    E = energies(s)
    order = np.argsort(E, kind="stable")
    D = sector_dipoles(s)[np.ix_(order, order)]
    return E[order], D, beta


class TestReport:
    def test_invariants(self):
        r = thermalization_time(SectorParams(30, 30, 1.0, 0.77), 2.0)
        assert r.tau == max(r.tau_P, r.tau_Q)
        T = r.tau_surface()
        assert r.tau_Q == pytest.approx(np.nanmax(T), rel=1e-15)
        assert r.tau_mn(3, -2) == r.tau_mn(-2, 3)

    def test_zero_temperature_ratio(self):
        for N in (100, 200, 500):
            r = thermalization_time(critical(N), math.inf)
            assert r.tau_Q / r.tau_P == pytest.approx(2.0, rel=1e-12)
            assert not r.warnings

    def test_zero_temperature_b_times(self):
        r = thermalization_time(critical(100), math.inf)
        assert r.tauQ_b == pytest.approx(2e4, rel=1e-12)
        assert r.tauP_b == pytest.approx(1e4, rel=1e-12)
        assert r.tau_b == r.tauQ_b

    def test_critical_linear_growth(self):
        taus = [thermalization_time(critical(N), 1.0).tau for N in (400, 800, 1600)]
        for a, b in zip(taus, taus[1:]):
            assert b / a == pytest.approx(2.0, rel=0.15)

    def test_fixed_j_paramagnetic_saturates(self):
        taus = [thermalization_time(SectorParams(N, 20, 1.0, 2.0), 1.0).tau_Q for N in (400, 800, 1600)]
        assert max(taus) / min(taus) < 1.1


class TestGibbs:
    def test_examples(self):
        assert np.allclose(gibbs_vector([0.0, 1.0, 5.0], 0.0), 1 / 3)
        assert np.array_equal(gibbs_vector([2.0, -1.0, 0.0], math.inf), [0, 1, 0])
        assert np.array_equal(gibbs_vector([-1.0, -1.0, 0.0], math.inf), [0.5, 0.5, 0])
        p = gibbs_vector([0.0, 1.0], 1.0)
        assert p == pytest.approx([0.73106, 0.26894], abs=1e-5)
        assert p[0] == pytest.approx(1 / (1 + math.exp(-1)), rel=1e-15)

    def test_extreme_beta(self):
        p = gibbs_vector([0.0, 1.0, 2.0], 1e6)
        assert p[0] == 1.0 and np.all(np.isfinite(log_gibbs([0.0, 1.0], 1e300)))

    def test_relative_entropy(self):
        q = gibbs_vector([0.0, 1.0, 3.0], 1.0)
        assert relative_entropy(q, np.log(q)) == pytest.approx(0.0, abs=1e-15)
        assert relative_entropy([1.0, 0.0, 0.0], np.log(q)) > 0


class TestEvolution:
    def test_gibbs_stays_put(self):
        A = sector_generator(SectorParams(20, 20, 1.0, 0.63), 1.0)
        p0 = gibbs_vector(A.energies, 1.0)
        traj = evolve_pauli(A, p0, np.linspace(0, 100, 11))
        assert np.max(np.abs(traj.populations - p0)) < 1e-10

    @pytest.mark.parametrize("method", ["auto", "runge-kutta"])
    def test_relaxes_to_gibbs(self, method):
        s = SectorParams(16, 16, 1.0, 0.45)
        A = sector_generator(s, 1.0)
        tau = thermalization_time(s, 1.0).tau
        p0 = np.zeros(A.size)
        p0[int(np.argmax(A.energies))] = 1.0
        traj = evolve_pauli(A, p0, [0.0, 50 * tau], method=method)
        assert np.abs(traj.populations[-1] - gibbs_vector(A.energies, 1.0)).sum() < 1e-6

    @pytest.mark.parametrize("seed", range(8))
    def test_spectral_matches_integrator(self, seed):
        rng = np.random.default_rng(seed)
        N = int(rng.integers(2, 20))
        s = SectorParams(N, N, 1.0, float(rng.uniform(-0.5, 0.5)))  # keeps the Gibbs spread well conditioned
        A = sector_generator(s, 1.0)
        p0 = rng.dirichlet(np.ones(A.size))
        t = np.linspace(0, 5 * thermalization_time(s, 1.0).tau, 30)
        a = evolve_pauli(A, p0, t, method="spectral")
        b = evolve_pauli(A, p0, t, method="runge-kutta", tol=1e-12)
        assert a.method == "spectral" and b.method == "runge-kutta"
        assert np.max(np.abs(a.populations - b.populations)) < 1e-8

    @given(sectors(n_max=20), finite_betas, st.integers(0, 2**31))
    @settings(max_examples=25)
    def test_h_theorem_and_invariants(self, s, beta, seed):
        A = sector_generator(s, beta)
        p0 = np.random.default_rng(seed).dirichlet(np.ones(A.size))
        # nearly degenerate sectors have tau_P up to ~1e200; no double-precision path resolves that
        t_end = min(3 * thermalization_time(s, beta).tau_P, 1e8 / max(A.norm(), 1e-300))
        t = np.linspace(0, t_end, 20)
        traj = evolve_pauli(A, p0, t)
        P = traj.populations
        assert np.all(np.abs(P.sum(axis=1) - 1) < 1e-12) and np.all(P >= -1e-14)
        lq = log_gibbs(A.energies, beta)
        H = [relative_entropy(p, lq) for p in P]
        assert all(b <= a + 1e-10 for a, b in zip(H, H[1:]))

    def test_zero_temperature_uses_integrator(self):
        A = sector_generator(critical(10), math.inf)
        p0 = np.full(A.size, 1 / A.size)
        traj = evolve_pauli(A, p0, [0, 1e3, 1e5])
        assert traj.method == "runge-kutta"
        assert traj.populations[-1][-1] > 0.99
        with pytest.raises(DomainError):
            evolve_pauli(A, p0, [0, 1], method="spectral")

    def test_unresolvable_span_reported(self):
        A = sector_generator(SectorParams(3, 3, 1.0, 4e-101), 1.0)
        p0 = np.array([0.4, 0.3, 0.2, 0.1])
        with pytest.raises(ConvergenceError):
            evolve_pauli(A, p0, [0.0, 1e200])

    def test_input_validation(self):
        A = sector_generator(SectorParams(4, 4, 1, 0.2), 1.0)
        with pytest.raises(DomainError):
            evolve_pauli(A, [0.5, 0.5, 0.5, 0, 0], [0, 1])
        with pytest.raises(DomainError):
            evolve_pauli(A, [1, 0, 0, 0, 0], [1, 0])
        with pytest.raises(DomainError):
            evolve_pauli(A, [1, 0, 0], [0, 1])


class TestAsymptotics:
    def test_paramagnetic_order_of_magnitude(self):
        s = critical(200, ratio=2.0)
        pred = asymptotic_predictions(s, 1.0)
        assert pred.branch == "paramagnetic"
        got = thermalization_time(s, 1.0).tau_Q
        assert 0.1 < got / pred.tau_Q < 10

    def test_critical_tag(self):
        assert asymptotic_predictions(critical(200), 1.0).branch == "critical"
        assert asymptotic_predictions(critical(200, ratio=0.4), 1.0).branch == "inner"
        assert asymptotic_predictions(SectorParams(10, 10, 1, 0.0), 1.0).tau_Q == math.inf
