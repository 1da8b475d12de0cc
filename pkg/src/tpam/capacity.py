"""Capacity experiments: random ensembles, cue noise, recall scoring and
the information measure in bits per synapse."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import core
from .rng import stream
from .special import i0e, i1e

KAPPA_CAP = 1e6
PHASE_INFO_CAP = math.log2(2 * math.pi * 1e3)
REPORT_FIELDS = (
    "N", "p_hot", "theta", "kind", "M", "trial",
    "similarity", "alpha", "beta", "kappa", "bits_per_synapse",
)


@dataclass(frozen=True)
class EnsembleSpec:
    """Random pattern ensemble.

    ``alphabet`` selects the values on the support: ``phasor`` draws uniform
    phases, ``discrete`` draws one of ``bins`` equidistant phases and
    ``ternary`` draws real signs.
    """

    N: int
    M: int
    p_hot: float = 0.1
    seed: int = 0
    alphabet: str = "phasor"
    bins: int = 0

    @property
    def K(self) -> int:
        return int(round(self.p_hot * self.N))

    def validate(self):
        if self.N < 1 or self.M < 0:
            raise ValueError(f"invalid sizes N={self.N}, M={self.M}")
        if not 0 < self.p_hot <= 1 or self.K < 1:
            raise ValueError(f"p_hot={self.p_hot} gives K={self.K} active units; need K >= 1")
        if self.alphabet not in ("phasor", "discrete", "ternary"):
            raise ValueError(f"unknown alphabet {self.alphabet!r}")
        if self.alphabet == "discrete" and self.bins < 2:
            raise ValueError("discrete alphabet needs bins >= 2")


@dataclass(frozen=True)
class CueNoise:
    drop_fraction: float = 0.05
    swap_fraction: float = 0.05
    phase_jitter_sd: float = 0.1

    def __post_init__(self):
        for name in ("drop_fraction", "swap_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.phase_jitter_sd < 0:
            raise ValueError("phase_jitter_sd must be nonnegative")


@dataclass
class RecallStats:
    alpha: float
    beta: float
    kappa: float
    similarity: float
    p_hat: float
    symbol_error: float = 0.0


def gen_patterns(spec: EnsembleSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """``M x N`` complex array, each row with exactly ``K`` active units."""
    spec.validate()
    rng = stream(spec.seed, "pattern") if rng is None else rng
    N, M, K = spec.N, spec.M, spec.K
    out = np.zeros((M, N), dtype=np.complex128)
    for m in range(M):
        support = rng.choice(N, size=K, replace=False)
        if spec.alphabet == "phasor":
            out[m, support] = np.exp(1j * rng.uniform(0, 2 * np.pi, K))
        elif spec.alphabet == "discrete":
            k = rng.integers(0, spec.bins, K)
            vals = np.exp(2j * np.pi * k / spec.bins)
            if spec.bins == 2:
                vals = np.where(k == 0, 1.0, -1.0).astype(np.complex128)
            out[m, support] = vals
        else:
            out[m, support] = rng.choice([-1.0, 1.0], K)
    return out


def perturb_cue(pattern: np.ndarray, noise: CueNoise, rng: np.random.Generator) -> np.ndarray:
    """Noisy copy of ``pattern``.

    ``round(drop * K)`` active units are silenced, ``round(swap * K)`` of the
    remaining active units move to random silent positions with a fresh
    phase, and every surviving phase is jittered by Gaussian noise.
    """
    z = np.array(pattern, dtype=np.complex128)
    active = np.flatnonzero(z)
    K = active.size
    n_drop = int(round(noise.drop_fraction * K))
    if n_drop:
        dropped = rng.choice(active, size=n_drop, replace=False)
        z[dropped] = 0
        active = np.setdiff1d(active, dropped)
    silent = np.flatnonzero(z == 0)
    if n_drop:
        silent = np.setdiff1d(silent, dropped)
    n_swap = min(int(round(noise.swap_fraction * K)), active.size, silent.size)
    if n_swap:
        src = rng.choice(active, size=n_swap, replace=False)
        dst = rng.choice(silent, size=n_swap, replace=False)
        z[src] = 0
        z[dst] = np.exp(1j * rng.uniform(0, 2 * np.pi, n_swap))
    if noise.phase_jitter_sd > 0:
        on = np.flatnonzero(z)
        phase = np.angle(z[on]) + rng.normal(0, noise.phase_jitter_sd, on.size)
        z[on] = np.abs(z[on]) * np.exp(1j * np.mod(phase, 2 * np.pi))
    return z


def vonmises_kappa(residuals: np.ndarray) -> float:
    """Maximum-likelihood concentration of phase residuals (radians).

    Starts from the Best-Fisher approximation to the inverse of
    ``A(k) = I1(k)/I0(k)`` and polishes it with Newton steps.
    """
    residuals = np.asarray(residuals, dtype=float)
    if residuals.size == 0:
        return 0.0
    R = float(abs(np.mean(np.exp(1j * residuals))))
    return kappa_from_resultant(R)


def kappa_from_resultant(R: float) -> float:
    if R >= 1 - 1e-15:
        return KAPPA_CAP
    if R <= 0:
        return 0.0
    if R < 0.53:
        k = 2 * R + R**3 + 5 * R**5 / 6
    elif R < 0.85:
        k = -0.4 + 1.39 * R + 0.43 / (1 - R)
    else:
        k = 1 / (R**3 - 4 * R**2 + 3 * R)
    for _ in range(5):
        if k <= 0 or k >= KAPPA_CAP:
            break
        A = i1e(k) / i0e(k)
        dA = 1 - A / k - A * A
        if dA <= 0:
            break
        k = k - (A - R) / dA
    return float(min(max(k, 0.0), KAPPA_CAP))


def score_recall(retrieved: np.ndarray, target: np.ndarray, bins: int = 0) -> RecallStats:
    """Support confusion rates and phase concentration of a recalled state.

    With ``bins`` set, the global alignment is restricted to multiples of
    ``2 pi / bins`` and ``symbol_error`` counts misplaced discrete phases.
    """
    retrieved = np.asarray(retrieved, dtype=np.complex128)
    target = np.asarray(target, dtype=np.complex128)
    if retrieved.shape != target.shape:
        raise core.DimensionError(f"shapes differ: {retrieved.shape} vs {target.shape}")
    on_r, on_t = retrieved != 0, target != 0
    K, N = int(on_t.sum()), target.size
    fp = int(np.sum(on_r & ~on_t))
    miss = int(np.sum(~on_r & on_t))
    alpha = fp / (N - K) if N > K else 0.0
    beta = miss / K if K else 0.0
    p_hot = K / N
    tp = on_r & on_t
    if tp.any():
        psi = np.angle(np.vdot(target[tp], retrieved[tp]))
        if bins:
            psi = 2 * np.pi / bins * np.round(psi * bins / (2 * np.pi))
        align = np.exp(-1j * psi)
        residual = np.angle(retrieved[tp] * align * np.conj(target[tp]))
        kappa = vonmises_kappa(residual)
        sym_err = float(np.mean(np.abs(residual) > 1e-6))
    else:
        kappa, sym_err = 0.0, 0.0
    return RecallStats(
        alpha=alpha,
        beta=beta,
        kappa=kappa,
        similarity=core.similarity(retrieved, target),
        p_hat=alpha * (1 - p_hot) + (1 - beta) * p_hot,
        symbol_error=sym_err,
    )


def binary_entropy(p: float) -> float:
    """Shannon entropy of a Bernoulli(p) variable in bits."""
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def info_correct(alpha: float, beta: float, p_hot: float) -> float:
    """Bits per unit needed to repair the support of a recalled pattern."""
    p_hat = alpha * (1 - p_hot) + (1 - beta) * p_hot
    total = 0.0
    if p_hat > 0:
        total += p_hat * binary_entropy(alpha * (1 - p_hot) / p_hat)
    if p_hat < 1:
        total += (1 - p_hat) * binary_entropy(beta * p_hot / (1 - p_hat))
    return total


def info_phase(kappa: float) -> float:
    """Information (bits) in a phase observed through von Mises noise.

    ``log(2 pi)`` minus the differential entropy of the noise, capped so
    perfect recall stays finite.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa == 0:
        return 0.0
    kappa = min(float(kappa), KAPPA_CAP)
    A = i1e(kappa) / i0e(kappa)
    # log(2pi) - [log(2pi I0) - k A] = k A - log I0, with log I0 = log i0e + k
    nats = kappa * (A - 1) - math.log(i0e(kappa))
    return float(min(max(nats, 0.0) / math.log(2), PHASE_INFO_CAP))


def info_discrete_phase(symbol_error: float, bins: int) -> float:
    """Bits per unit for an L-ary symmetric channel with the given error rate."""
    e = min(max(symbol_error, 0.0), 1.0)
    bits = math.log2(bins) - binary_entropy(e)
    if bins > 2 and e > 0:
        bits -= e * math.log2(bins - 1)
    return max(bits, 0.0)


def item_information(stats: RecallStats, N: int, p_hot: float, phase_bits: float) -> float:
    return N * (binary_entropy(p_hot) - info_correct(stats.alpha, stats.beta, p_hot)
                + p_hot * (1 - stats.beta) * phase_bits)


def info_total(stats: RecallStats, spec: EnsembleSpec, phase_bits: float | None = None):
    """Bits per synapse for ``spec.M`` items recalled with quality ``stats``.

    Returns ``(bits_per_synapse, clamped)``; a negative item information is
    clamped to zero and reported through the flag.
    """
    if spec.M == 0:
        return 0.0, False
    if phase_bits is None:
        phase_bits = info_phase(stats.kappa)
    item = item_information(stats, spec.N, spec.p_hot, phase_bits)
    clamped = item < 0
    return spec.M * max(item, 0.0) / spec.N**2, clamped


@dataclass(frozen=True)
class CapacityCell:
    """One point of a capacity sweep."""

    N: int
    M: int
    p_hot: float = 0.1
    kind: str = "tpam"
    bins: int = 0
    theta: float = 0.9
    threshold: str = "dynamic"
    trials: int = 25
    seed: int = 0
    noise: CueNoise = CueNoise()
    schedule: str = "parallel"
    max_iters: int = 500

    @property
    def label(self) -> str:
        return f"csign{self.bins}" if self.kind == "csign" else self.kind

    def ensemble(self) -> EnsembleSpec:
        if self.kind == "csign":
            return EnsembleSpec(self.N, self.M, 1.0, self.seed, "discrete", self.bins)
        if self.kind == "phasor_dense":
            return EnsembleSpec(self.N, self.M, 1.0, self.seed)
        if self.kind == "ternary":
            return EnsembleSpec(self.N, self.M, self.p_hot, self.seed, "ternary")
        return EnsembleSpec(self.N, self.M, self.p_hot, self.seed)

    def network(self):
        spec = self.ensemble()
        if self.kind in ("csign", "phasor_dense"):
            policy = core.ThresholdPolicy.constant(0.0)
        elif self.threshold == "constant":
            policy = core.ThresholdPolicy.constant(self.theta * spec.K)
        else:
            policy = core.ThresholdPolicy.dynamic(self.theta)
        if self.kind == "csign":
            kind = core.TransferKind.csign(self.bins)
        else:
            kind = core.TransferKind(self.kind)
        return policy, kind


@dataclass
class CapacityReport:
    """Per-trial rows plus a summary per grid cell.

    ``key`` names the columns that identify a cell, ``metrics`` maps row
    columns to the short names used in the summary (``<short>_mean`` and
    ``<short>_sd``), ``fields`` lists the CSV columns.
    """

    rows: list = field(default_factory=list)
    key: tuple = ("N", "p_hot", "theta", "kind", "M")
    metrics: dict = field(default_factory=lambda: {"similarity": "similarity", "bits_per_synapse": "bits"})
    fields: tuple = REPORT_FIELDS

    def cells(self):
        """Mean and standard deviation per grid cell, in first-seen order."""
        groups: dict = {}
        for r in self.rows:
            groups.setdefault(tuple(r[k] for k in self.key), []).append(r)
        out = []
        for k, rs in groups.items():
            c = dict(zip(self.key, k))
            c["trials"] = len(rs)
            for col, short in self.metrics.items():
                v = np.array([r[col] for r in rs], dtype=float)
                c[f"{short}_mean"] = float(v.mean())
                c[f"{short}_sd"] = float(v.std())
            out.append(c)
        return out

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            for line in header_comment.splitlines():
                buf.write(f"# {line}\n")
        w = csv.DictWriter(buf, fieldnames=self.fields, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: r[k] for k in self.fields})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"cells": self.cells()}, indent=2)


def run_trial(cell: CapacityCell, trial: int) -> dict:
    spec = cell.ensemble()
    key = (trial, spec.N, spec.M, int(round(spec.p_hot * 1e6)))
    patterns = gen_patterns(spec, stream(cell.seed, "pattern", *key))
    rng = stream(cell.seed, "trial", *key)
    noise_rng = stream(cell.seed, "noise", *key)
    W = core.learn_conjugate_outer(patterns, n=spec.N)
    policy, kind = cell.network()
    mu = int(rng.integers(spec.M)) if spec.M else 0
    target = patterns[mu] if spec.M else np.zeros(spec.N, complex)
    cue = perturb_cue(target, cell.noise, noise_rng)
    trace = core.recall(W, cue, policy, kind, cell.schedule, cell.max_iters, rng)
    bins = cell.bins if cell.kind == "csign" else 2 if cell.kind == "ternary" else 0
    stats = score_recall(trace.final, target, bins)
    if cell.kind == "csign":
        phase_bits = info_discrete_phase(stats.symbol_error, cell.bins)
    elif cell.kind == "ternary":
        phase_bits = info_discrete_phase(stats.symbol_error, 2)
    else:
        phase_bits = info_phase(stats.kappa)
    bits, _ = info_total(stats, spec, phase_bits)
    return {
        "N": spec.N, "p_hot": spec.p_hot, "theta": cell.theta, "kind": cell.label, "M": spec.M,
        "trial": trial, "similarity": stats.similarity, "alpha": stats.alpha, "beta": stats.beta,
        "kappa": stats.kappa, "bits_per_synapse": bits,
        "converged": trace.converged, "iterations": trace.iterations,
    }


def run_capacity_sweep(grid, workers: int = 1) -> CapacityReport:
    """Run every cell of ``grid`` for its number of trials.

    Each trial draws from streams keyed by (seed, trial, N, M, p_hot), so
    results do not depend on ``workers`` or on execution order.
    """
    jobs = [(cell, t) for cell in grid for t in range(cell.trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(lambda job: run_trial(*job), jobs))
    else:
        rows = [run_trial(c, t) for c, t in jobs]
    return CapacityReport(rows)


def optimal_bits(report: CapacityReport, floor: float = 0.9, **match) -> tuple[float, int, float]:
    """Best mean bits/synapse over M and theta, among matching cells whose
    mean similarity is at least ``floor``.

    Far beyond capacity a near-clean cue keeps some phase information while
    recall has failed, so an unrestricted maximum over M is meaningless; the
    floor restricts the search to the high-fidelity regime. Returns
    ``(bits, M, theta)``, or ``(0.0, 0, nan)`` if no cell qualifies.
    """
    best = (0.0, 0, float("nan"))
    for c in report.cells():
        if not all(c[k] == v for k, v in match.items()):
            continue
        if c["similarity_mean"] >= floor and c["bits_mean"] > best[0]:
            best = (c["bits_mean"], c["M"], c["theta"])
    return best


def similarity_curve(report: CapacityReport, **match) -> list[tuple[int, float]]:
    """``(M, mean similarity)`` pairs, taking the best theta at each M."""
    best: dict = {}
    for c in report.cells():
        if all(c[k] == v for k, v in match.items()):
            best[c["M"]] = max(best.get(c["M"], -1.0), c["similarity_mean"])
    return sorted(best.items())


def critical_load(curve: list[tuple[int, float]], level: float = 0.9) -> float:
    """First M (linearly interpolated) where mean similarity drops below ``level``."""
    prev = None
    for M, s in curve:
        if s < level:
            if prev is None:
                return float(M)
            M0, s0 = prev
            return M0 + (s0 - level) / (s0 - s) * (M - M0)
        prev = (M, s)
    return float("inf")


def cell_dict(cell: CapacityCell) -> dict:
    d = asdict(cell)
    d["noise"] = asdict(cell.noise)
    return d
