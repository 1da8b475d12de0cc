"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed in the
terminal summary (and immediately with ``-s``).
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import GRID, mp_cond_entropy, mp_info_total, mp_phase_info
from tpam import capacity as cap
from tpam import core
from tpam import indexing as ix
from tpam import sequence as sq
from tpam import spiking as sp


def verdict(n, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s / {budget:.0f}s) {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


@pytest.fixture
def clock():
    t0 = time.perf_counter()
    return lambda: time.perf_counter() - t0


def test_criterion_01_energy_descent(clock):
    rng = np.random.default_rng(2024)
    worst, steps = -np.inf, 0
    for _ in range(200):
        N = int(rng.integers(10, 201))
        M = int(rng.integers(1, 51))
        p = rng.uniform(0.05, 1.0)
        P = cap.gen_patterns(cap.EnsembleSpec(N, M, p, int(rng.integers(1 << 31))))
        W = core.learn_conjugate_outer(P)
        K = max(1, int(np.count_nonzero(P[0])))
        policy = core.ThresholdPolicy.constant(rng.uniform(0.0, 0.9) * K)
        cue = cap.perturb_cue(P[0], cap.CueNoise(0.2, 0.0, 0.3), rng)
        tr = core.recall(W, cue, policy, schedule="sequential_random", max_iters=30, rng=rng)
        dE = np.diff(tr.energies)
        worst = max(worst, dE.max(initial=-np.inf))
        steps += dE.size
    verdict(1, worst <= 1e-9, f"max energy increase {worst:.2e} over {steps} steps", clock(), 60)


def test_criterion_02_fixed_point_storage(clock):
    # a stored pattern counts when recall started on it settles with the same
    # support and similarity above 0.99
    N, theta = 400, 0.9
    rates = {}
    for M in (5, 10, 20):
        ok = tot = 0
        for seed in range(5):
            P = cap.gen_patterns(cap.EnsembleSpec(N, M, 0.1, seed))
            W = core.learn_conjugate_outer(P)
            for mu in range(M):
                tr = core.recall(W, P[mu], core.ThresholdPolicy.dynamic(theta), max_iters=50)
                same = np.array_equal(tr.final != 0, P[mu] != 0)
                ok += tr.converged and same and core.similarity(tr.final, P[mu]) > 0.99
                tot += 1
        rates[M] = ok / tot
    detail = "fixed-point rate " + ", ".join(f"M={M}: {r:.2f}" for M, r in rates.items())
    verdict(2, min(rates.values()) >= 0.95, detail, clock(), 60)


def test_criterion_03_recall_from_partial_and_superposed_cues(clock):
    N, M, seeds = 400, 100, range(10)
    partial = superposed = 0
    for seed in seeds:
        P = cap.gen_patterns(cap.EnsembleSpec(N, M, 0.1, seed))
        W = core.learn_conjugate_outer(P)
        policy = core.ThresholdPolicy.dynamic(0.5)
        rng = np.random.default_rng(seed)

        cue = cap.perturb_cue(P[0], cap.CueNoise(0.5, 0.0, 0.0), rng)
        tr = core.recall(W, cue, policy, max_iters=20)
        ov = core.overlaps(tr.final, P)
        partial += tr.converged and ov.argmax() == 0 and ov.max() > 0.9

        tr = core.recall(W, P[0] + P[1] + P[2], policy, schedule="sequential_random", max_iters=20, rng=rng)
        ov = core.overlaps(tr.final, P)
        single = np.sort(ov)[-2] < 0.5
        superposed += tr.converged and ov.argmax() < 3 and ov.max() > 0.9 and single
    n = len(seeds)
    ok = partial > n / 2 and superposed > n / 2
    verdict(3, ok, f"partial {partial}/{n}, superposition {superposed}/{n} seeds", clock(), 30)


def test_criterion_04_sparse_capacity_ordering(clock):
    N = 200
    Ms = {
        0.02: [100, 150, 200, 250, 300, 350, 400, 500, 600, 800],
        0.05: [60, 100, 130, 160, 200, 230, 260, 300, 350, 400],
        0.5: [4, 6, 8, 10, 11, 12, 13, 14, 16, 20],
    }
    grid = [cap.CapacityCell(N, M, p, "tpam", theta=th)
            for p, Mp in Ms.items() for th in (0.5, 0.6, 0.7, 0.8, 0.9, 0.95) for M in Mp]
    grid += [cap.CapacityCell(N, M, 1.0, "csign", bins=2) for M in (10, 15, 20, 25, 28, 30, 32, 35, 40, 50)]
    rep = cap.run_capacity_sweep(grid)
    best = {p: cap.optimal_bits(rep, kind="tpam", p_hot=p)[0] for p in Ms}
    hop = cap.optimal_bits(rep, kind="csign2")[0]
    ok = best[0.05] > best[0.5] > hop and best[0.02] < best[0.05]
    detail = ", ".join(f"p={p}: {b:.3f}" for p, b in best.items()) + f", hopfield: {hop:.3f} bits/synapse"
    verdict(4, ok, detail, clock(), 600)


def test_criterion_05_csign_and_ternary_ordering(clock):
    N = 200
    Ms = [2, 4, 6, 8, 10, 13, 16, 20, 25, 30, 35, 40, 50]
    Ls = (2, 4, 6, 8, 12)
    grid = [cap.CapacityCell(N, M, 1.0, "csign", bins=L) for L in Ls for M in Ms]
    Mt = [10, 15, 20, 25, 30, 35, 40, 50, 60, 80, 100, 130, 160, 200]
    ps = (0.5, 0.3, 0.1, 0.05)
    grid += [cap.CapacityCell(N, M, p, "ternary", theta=th)
             for p in ps for th in (0.5, 0.6, 0.7, 0.8, 0.9) for M in Mt]
    rep = cap.run_capacity_sweep(grid)
    crit = {L: cap.critical_load(cap.similarity_curve(rep, kind=f"csign{L}")) for L in Ls}
    tern = {p: cap.critical_load(cap.similarity_curve(rep, kind="ternary", p_hot=p)) for p in ps}
    hop = crit[2]
    drop_earlier = all(crit[a] > crit[b] for a, b in zip(Ls, Ls[1:]))
    moderate_below = tern[0.5] < hop and tern[0.3] < hop
    sparse_above = tern[0.1] > hop and tern[0.05] > hop
    detail = ("csign critical M " + ", ".join(f"L={L}: {c:.1f}" for L, c in crit.items())
              + "; ternary " + ", ".join(f"p={p}: {c:.1f}" for p, c in tern.items()))
    verdict(5, drop_earlier and moderate_below and sparse_above, detail, clock(), 600)


def test_criterion_06_hopfield_equivalence(clock):
    # odd M makes every local field an odd integer, so the oracle never ties
    N, mismatches, updates = 64, 0, 0
    for inst in range(50):
        rng = np.random.default_rng(inst)
        M = int(rng.choice([1, 3, 5, 7]))
        X = rng.choice([-1.0, 1.0], size=(M, N))
        J = X.T @ X
        np.fill_diagonal(J, 0.0)
        W = core.learn_conjugate_outer(X.astype(complex))
        pol, kind = core.ThresholdPolicy.constant(0.0), core.TransferKind.csign(2)
        s = X[0] * np.where(rng.random(N) < 0.25, -1.0, 1.0)
        z = s.astype(complex)
        for _ in range(10):
            s = np.where(J @ s > 0, 1.0, -1.0)
            z = core.step(W, z, pol, kind)
            mismatches += int(np.any(z != s))
            updates += 1
        for _ in range(5):
            for i in range(N):
                s[i] = 1.0 if J[i] @ s > 0 else -1.0
            z = core.step(W, z, pol, kind, schedule="sequential_fixed")
            mismatches += int(np.any(z != s))
            updates += 1
    verdict(6, mismatches == 0, f"{mismatches} mismatching states over {updates} updates", clock(), 10)


def test_criterion_07_information_formulas(clock):
    worst = 0.0
    for alpha, beta, p, kappa in GRID:
        stats = cap.RecallStats(alpha, beta, kappa, 1.0, 0.0)
        got = (cap.info_correct(alpha, beta, p), cap.info_phase(kappa),
               cap.info_total(stats, cap.EnsembleSpec(200, 17, p))[0])
        ref = (mp_cond_entropy(alpha, beta, p), mp_phase_info(kappa), mp_info_total(alpha, beta, p, kappa, 200, 17))
        for g, r in zip(got, map(float, ref)):
            worst = max(worst, abs(g - r) / abs(r) if r else abs(g))
    verdict(7, worst <= 1e-6, f"max relative error {worst:.2e} on {len(GRID)} grid points", clock(), 10)


def test_criterion_08_spiking_fixed_points(clock):
    cfg = sp.SpikingCapacityConfig(trials=8)
    cells = sp.run_spiking_capacity(cfg).cells()
    sims = [c["similarity_mean"] for c in cells]
    ideal = [c["ideal_mean"] for c in cells]
    first = sims[0] >= 0.9
    monotone = all(b <= a for a, b in zip(sims, sims[1:]))
    gap = max(abs(a - b) for a, b in zip(sims, ideal))
    detail = (f"M=50 similarity {sims[0]:.3f}; curve " + " ".join(f"{s:.3f}" for s in sims)
              + "; ideal " + " ".join(f"{s:.3f}" for s in ideal) + f"; max gap {gap:.3f}")
    verdict(8, first and monotone and gap <= 0.15, detail, clock(), 1800)


def test_criterion_09_lif_units(clock):
    T = 0.2
    dt = T / 1000
    worst_isi = 0.0
    for tau_ref in (0.0, 0.6 * T):
        p = sp.LifParams.with_tau(0.25 * T, tau_ref)
        for I in (1.2, 2.0, 5.0, 30.0):
            raster, _ = sp.simulate(sp.isolated_neurons(p, [I], T), None, 3.0, dt)
            isi = np.diff(raster.neuron_times(0))
            t_spike = p.tau_m * math.log((I - p.V_r) / (I - p.V_theta)) + tau_ref
            worst_isi = max(worst_isi, np.abs(isi - t_spike).max())
    p = sp.LifParams.with_tau(0.05)
    m, b = sp.lif_linearization(p)
    I = 100 * p.V_theta
    rel = abs(sp.lif_ifr(p, I) - (m * I + b)) / (m * I + b)
    ok = worst_isi <= 2 * dt and rel <= 0.05
    verdict(9, ok, f"max ISI error {worst_isi:.2e}s (bound {2 * dt:.1e}s), IFR asymptote error {rel:.3%}", clock(), 10)


def test_criterion_10_index_pipeline(clock):
    img = ix.default_image()
    full_wins = pinv_wins = 0
    checks_full = checks_pinv = 0
    summary = []
    for seed in range(6):
        P = ix.extract_patches(img, 12, 20, np.random.default_rng(seed))
        assert P.shape == (432, 20)
        bits = ix.mean_bits(ix.compare_models(P, 0.3, trials=2, seed=seed))
        for label, v in bits.items():
            if label not in ("tpam-pinv", "cue"):
                checks_full += 1
                full_wins += bits["tpam-pinv"] >= v
        for model in ix.MODELS:
            checks_pinv += 1
            pinv_wins += bits[f"{model}-pinv"] >= bits[f"{model}-random"]
        summary.append(f"{bits['tpam-pinv']:.2f}")
    ok = full_wins == checks_full and pinv_wins == checks_pinv
    detail = (f"full >= baseline {full_wins}/{checks_full}, pinv >= random {pinv_wins}/{checks_pinv}; "
              f"full-pipeline bits/pixel per seed {' '.join(summary)}")
    verdict(10, ok, detail, clock(), 300)


def test_criterion_11_sequence_bridge(clock):
    J = sq.learn_sequences([np.eye(3)])
    J_ok = np.array_equal(J, [[0, 1, -1], [-1, 0, 1], [1, -1, 0]])
    Wp, lam, v = sq.to_phasor_network(J)
    lam_err = abs(lam - 1j * math.sqrt(3))
    fp_err = np.abs(Wp @ v - v).max()
    worst_re = worst_herm = 0.0
    rng = np.random.default_rng(11)
    for _ in range(50):
        N, L = int(rng.integers(3, 21)), int(rng.integers(3, 7))
        Js = sq.learn_sequences([rng.choice([-1.0, 1.0], size=(L, N)) for _ in range(int(rng.integers(1, 4)))])
        if not np.any(Js):
            continue
        for pair in sq.skew_spectrum(Js):
            worst_re = max(worst_re, abs(pair.value.real))
            rq = np.vdot(pair.vector, Js @ pair.vector) / np.vdot(pair.vector, pair.vector)
            worst_re = max(worst_re, abs(rq.real))
        Wps, _, _ = sq.to_phasor_network(Js)
        worst_herm = max(worst_herm, np.abs(Wps - Wps.conj().T).max())
    ok = J_ok and lam_err <= 1e-10 and fp_err <= 1e-10 and worst_re < 1e-9 and worst_herm <= 1e-12
    detail = (f"J exact {J_ok}, |lambda - i*sqrt(3)| {lam_err:.1e}, |W'v - v| {fp_err:.1e}, "
              f"max |Re lambda| {worst_re:.1e}, max Hermitian error {worst_herm:.1e}")
    verdict(11, ok, detail, clock(), 10)
