import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpam import core
from tpam.capacity import EnsembleSpec, gen_patterns


def loop_outer(patterns, n):
    W = np.zeros((n, n), dtype=complex)
    for p in patterns:
        for i in range(n):
            for j in range(n):
                if i != j:
                    W[i, j] += p[i] * np.conj(p[j])
    return W


def sparse_patterns(N, M, p_hot, seed):
    return gen_patterns(EnsembleSpec(N, M, p_hot, seed))


class HopfieldOracle:
    """Real-valued bipolar Hopfield network, written independently of the phasor code."""

    def __init__(self, patterns):
        X = np.asarray(patterns, dtype=float)
        self.W = X.T @ X
        np.fill_diagonal(self.W, 0.0)

    def parallel(self, s):
        h = self.W @ s
        assert np.all(h != 0)
        return np.where(h > 0, 1.0, -1.0)

    def sweep(self, s):
        s = s.copy()
        for i in range(s.size):
            h = self.W[i] @ s
            assert h != 0
            s[i] = 1.0 if h > 0 else -1.0
        return s


class TestLearning:
    def test_three_unit_dense_pattern(self):
        phi = np.array([2, 4, 0]) * np.pi / 3
        v = np.exp(1j * phi)
        W = core.learn_conjugate_outer([v])
        expected = np.exp(1j * (phi[:, None] - phi[None, :]))
        np.fill_diagonal(expected, 0)
        np.testing.assert_allclose(W, expected, atol=1e-15)

    def test_no_patterns_gives_zero_matrix(self):
        W = core.learn_conjugate_outer([], n=5)
        np.testing.assert_array_equal(W, np.zeros((5, 5)))

    def test_matches_loop_oracle(self):
        P = sparse_patterns(8, 2, 0.5, 3)
        np.testing.assert_allclose(core.learn_conjugate_outer(P), loop_outer(P, 8), atol=1e-14)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(core.DimensionError):
            core.learn_conjugate_outer([np.ones(3), np.ones(4)])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 30), st.integers(1, 10), st.integers(0, 10**6))
    def test_hermitian_zero_diagonal(self, N, M, seed):
        P = sparse_patterns(N, M, 1.0, seed)
        W = core.learn_conjugate_outer(P)
        np.testing.assert_array_equal(W, W.conj().T)
        np.testing.assert_array_equal(np.diag(W), 0)


class TestDendriticSum:
    def test_zero_state(self):
        W = core.learn_conjugate_outer(sparse_patterns(10, 3, 1.0, 0))
        np.testing.assert_array_equal(core.dendritic_sum(W, np.zeros(10)), 0)

    def test_stored_dense_pattern(self):
        v = sparse_patterns(12, 1, 1.0, 1)[0]
        W = core.learn_conjugate_outer([v])
        np.testing.assert_allclose(core.dendritic_sum(W, v), 11 * v, atol=1e-12)

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(2)
        W = core.learn_conjugate_outer(sparse_patterns(16, 4, 0.5, 2))
        z = np.exp(1j * rng.uniform(0, 2 * np.pi, 16)) * (rng.random(16) < 0.5)
        naive = np.array([sum(W[i, j] * z[j] for j in range(16)) for i in range(16)])
        np.testing.assert_allclose(core.dendritic_sum(W, z), naive, atol=1e-12)


class TestTransfer:
    def test_constant_threshold(self):
        u = np.array([2 * np.exp(1j * np.pi / 4), 0.1])
        out = core.transfer(u, core.ThresholdPolicy.constant(1.0))
        np.testing.assert_allclose(out, [np.exp(1j * np.pi / 4), 0], atol=1e-15)

    def test_csign_two_bins_is_sign(self):
        out = core.transfer(np.array([3.0, -0.5]), core.ThresholdPolicy.constant(0.0), core.TransferKind.csign(2))
        np.testing.assert_array_equal(out, [1, -1])

    def test_dynamic_with_silent_previous_state(self):
        u = np.array([0.3 - 0.4j, 0.0, -2.0])
        out = core.transfer(u, core.ThresholdPolicy.dynamic(0.9), prev=np.zeros(3))
        np.testing.assert_allclose(out, [0.6 - 0.8j, 0, -1], atol=1e-15)

    def test_exact_threshold_is_silent(self):
        out = core.transfer(np.array([1.0 + 0j]), core.ThresholdPolicy.constant(1.0))
        assert out[0] == 0

    def test_ternary(self):
        out = core.transfer(np.array([2.0, -3.0, 0.5, 1j * 5]), core.ThresholdPolicy.constant(1.0),
                            core.TransferKind.ternary())
        np.testing.assert_array_equal(out, [1, -1, 0, 0])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=1, max_size=20),
           st.floats(0, 5))
    def test_outputs_are_zero_or_unit(self, u, Theta):
        out = core.transfer(np.array(u), core.ThresholdPolicy.constant(Theta))
        mag = np.abs(out)
        assert np.all((mag == 0) | np.isclose(mag, 1, atol=1e-12))

    def test_csign_bins_land_on_lattice(self):
        rng = np.random.default_rng(0)
        u = rng.normal(size=200) + 1j * rng.normal(size=200)
        out = core.transfer(u, core.ThresholdPolicy.constant(0.0), core.TransferKind.csign(6))
        k = np.angle(out) / (2 * np.pi / 6)
        np.testing.assert_allclose(k, np.round(k), atol=1e-9)


class TestStep:
    def test_low_load_fixed_point(self):
        P = sparse_patterns(50, 1, 0.1, 4)
        W = core.learn_conjugate_outer(P)
        out = core.step(W, P[0], core.ThresholdPolicy.dynamic(0.9))
        # margins: |u_i| = K - 1 = 4 on the support, 0 elsewhere, threshold 0.9 * 5 = 4.5
        u = np.abs(W @ P[0])
        np.testing.assert_allclose(u[P[0] != 0], 4)
        assert core.same_state(out, P[0]) is False
        out_c = core.step(W, P[0], core.ThresholdPolicy.dynamic(0.7))
        assert core.same_state(out_c, P[0])

    def test_quiescent_state(self):
        W = core.learn_conjugate_outer(sparse_patterns(20, 3, 0.2, 0))
        for sched in core.SCHEDULES:
            out = core.step(W, np.zeros(20), core.ThresholdPolicy.dynamic(0.5), schedule=sched,
                            rng=np.random.default_rng(0))
            np.testing.assert_array_equal(out, 0)

    def test_partial_cue_overlap_dominates(self):
        P = sparse_patterns(400, 100, 0.1, 0)
        W = core.learn_conjugate_outer(P)
        cue = P[0].copy()
        cue[np.flatnonzero(cue)[:20]] = 0
        z = cue
        for _ in range(5):
            z = core.step(W, z, core.ThresholdPolicy.dynamic(0.5))
        ov = core.overlaps(z, P)
        assert ov.argmax() == 0 and ov[0] > 0.9

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0, 2 * np.pi))
    def test_global_phase_equivariance(self, seed, alpha):
        P = sparse_patterns(30, 4, 0.3, seed)
        W = core.learn_conjugate_outer(P)
        rng = np.random.default_rng(seed)
        z = np.exp(1j * rng.uniform(0, 2 * np.pi, 30)) * (rng.random(30) < 0.4)
        pol = core.ThresholdPolicy.dynamic(0.3)
        rot = np.exp(1j * alpha)
        np.testing.assert_allclose(core.step(W, rot * z, pol), rot * core.step(W, z, pol), atol=1e-12)

    def test_unknown_schedule(self):
        with pytest.raises(ValueError):
            core.step(np.zeros((2, 2)), np.zeros(2), core.ThresholdPolicy(), schedule="async")


class TestRecall:
    def test_clean_cue_converges_quickly(self):
        P = sparse_patterns(200, 1, 0.1, 0)
        W = core.learn_conjugate_outer(P)
        tr = core.recall(W, P[0], core.ThresholdPolicy.dynamic(0.7))
        assert tr.converged and tr.iterations <= 2
        assert core.same_state(tr.final, P[0])

    def test_clean_cue_low_load(self):
        # crosstalk shifts the attractor phases slightly away from the stored ones
        P = sparse_patterns(200, 5, 0.1, 0)
        W = core.learn_conjugate_outer(P)
        tr = core.recall(W, P[2], core.ThresholdPolicy.dynamic(0.7))
        assert tr.converged and tr.iterations <= 5
        assert core.similarity(tr.final, P[2]) > 0.999

    def test_overloaded_network_fails(self):
        P = sparse_patterns(40, 400, 0.1, 0)
        W = core.learn_conjugate_outer(P)
        rng = np.random.default_rng(1)
        sims = []
        for mu in range(10):
            cue = P[mu] * np.exp(1j * rng.normal(0, 0.1, 40))
            sims.append(core.similarity(core.recall(W, cue, core.ThresholdPolicy.dynamic(0.5)).final, P[mu]))
        assert np.mean(sims) < 0.7

    def test_max_iters_bound(self):
        P = sparse_patterns(100, 30, 0.1, 0)
        W = core.learn_conjugate_outer(P)
        tr = core.recall(W, P.sum(axis=0), core.ThresholdPolicy.dynamic(0.2), max_iters=3)
        assert tr.iterations <= 3 and len(tr.states) == tr.iterations + 1

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6))
    def test_converged_state_is_fixed(self, seed):
        P = sparse_patterns(60, 8, 0.2, seed)
        W = core.learn_conjugate_outer(P)
        pol = core.ThresholdPolicy.dynamic(0.6)
        tr = core.recall(W, P[0] * np.exp(0.2j * np.random.default_rng(seed).normal(size=60)), pol)
        if tr.converged:
            assert core.same_state(core.step(W, tr.final, pol), tr.final)

    @pytest.mark.parametrize("theta", [0.1, 0.5, 0.9])
    def test_single_pattern_stable(self, theta):
        P = sparse_patterns(80, 1, 0.25, 7)
        W = core.learn_conjugate_outer(P)
        tr = core.recall(W, P[0], core.ThresholdPolicy.dynamic(theta * 19 / 20))
        assert tr.converged and core.same_state(tr.final, P[0])


class TestEnergy:
    def test_zero_state(self):
        W = core.learn_conjugate_outer(sparse_patterns(10, 2, 0.5, 0))
        assert core.energy(W, np.zeros(10), core.ThresholdPolicy.dynamic(0.5)) == 0
        assert core.energy(W, np.zeros(10), core.ThresholdPolicy.constant(2.0)) == 0

    def test_dense_stored_pattern(self):
        N = 15
        v = sparse_patterns(N, 1, 1.0, 0)[0]
        W = core.learn_conjugate_outer([v])
        assert core.energy(W, v, core.ThresholdPolicy.constant(0.0)) == pytest.approx(-0.5 * N * (N - 1))

    def test_matches_explicit_sum(self):
        rng = np.random.default_rng(3)
        W = core.learn_conjugate_outer(sparse_patterns(12, 3, 0.5, 3))
        z = np.exp(1j * rng.uniform(0, 2 * np.pi, 12)) * (rng.random(12) < 0.5)
        quad = sum(np.conj(z[i]) * W[i, j] * z[j] for i in range(12) for j in range(12)).real
        E = core.energy(W, z, core.ThresholdPolicy.constant(1.5))
        assert E == pytest.approx(-0.5 * quad + 1.5 * np.abs(z).sum(), abs=1e-12)

    def test_non_hermitian_rejected(self):
        W = np.array([[0, 1], [2, 0]], dtype=complex)
        with pytest.raises(core.SymmetryError):
            core.energy(W, np.ones(2), core.ThresholdPolicy.constant(0))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(5, 120), st.integers(1, 40), st.floats(0.05, 1.0), st.floats(0.0, 1.0), st.integers(0, 10**6))
    def test_sequential_descent(self, N, M, p_hot, theta, seed):
        K = max(1, int(round(p_hot * N)))
        P = gen_patterns(EnsembleSpec(N, M, K / N, seed))
        W = core.learn_conjugate_outer(P)
        pol = core.ThresholdPolicy.constant(theta * K)
        rng = np.random.default_rng(seed)
        cue = np.exp(1j * rng.uniform(0, 2 * np.pi, N)) * (rng.random(N) < p_hot)
        tr = core.recall(W, cue, pol, schedule="sequential_random", max_iters=30, rng=rng)
        assert np.all(np.diff(tr.energies) <= 1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 10**6))
    def test_quadratic_form_real(self, N, seed):
        rng = np.random.default_rng(seed)
        W = core.learn_conjugate_outer(sparse_patterns(N, 3, 1.0, seed))
        z = rng.uniform(0, 1, N) * np.exp(1j * rng.uniform(0, 2 * np.pi, N))
        q = np.vdot(z, W @ z)
        assert abs(q.imag) < 1e-9


class TestSimilarity:
    def test_identity(self):
        t = sparse_patterns(20, 1, 0.3, 0)[0]
        assert core.similarity(t, t) == pytest.approx(1.0)

    @pytest.mark.parametrize("alpha", [0.3, 2.0, -1.1])
    def test_global_phase(self, alpha):
        t = sparse_patterns(20, 1, 0.3, 1)[0]
        assert core.similarity(np.exp(1j * alpha) * t, t) == pytest.approx(1.0)

    def test_disjoint_support(self):
        a = np.array([1, 1j, 0, 0])
        b = np.array([0, 0, 1, -1])
        assert core.similarity(a, b) == 0.0

    def test_zero_vector(self):
        assert core.similarity(np.zeros(3), np.ones(3)) == 0.0


class TestHopfieldDegeneracy:
    @pytest.mark.parametrize("seed", range(10))
    def test_update_for_update(self, seed):
        rng = np.random.default_rng(seed)
        N, M = 64, 5
        X = rng.choice([-1.0, 1.0], size=(M, N))
        oracle = HopfieldOracle(X)
        W = core.learn_conjugate_outer(X.astype(complex))
        pol, kind = core.ThresholdPolicy.constant(0.0), core.TransferKind.csign(2)
        s = X[0] * np.where(rng.random(N) < 0.2, -1, 1)
        z = s.astype(complex)
        for _ in range(5):
            s, z = oracle.parallel(s), core.step(W, z, pol, kind)
            np.testing.assert_array_equal(z, s)
        for _ in range(3):
            s, z = oracle.sweep(s), core.step(W, z, pol, kind, schedule="sequential_fixed")
            np.testing.assert_array_equal(z, s)
