"""Threshold phasor associative memory: storage, recall dynamics and energy.

States are plain complex numpy vectors. Active components carry a unit
phasor, silent components are exactly zero. Weight matrices are complex,
Hermitian and have a zero diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PHASE_TOL = 1e-9
HERMITIAN_TOL = 1e-12
SCHEDULES = ("parallel", "sequential_random", "sequential_fixed")


class DimensionError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdPolicy:
    """Constant threshold ``Theta`` or activity-proportional ``theta * sum|z|``."""

    kind: str = "dynamic"
    value: float = 0.9

    def __post_init__(self):
        if self.kind not in ("constant", "dynamic"):
            raise ValueError(f"unknown threshold kind {self.kind!r}")
        if self.kind == "constant" and self.value < 0:
            raise ValueError("constant threshold must be nonnegative")

    @classmethod
    def constant(cls, Theta: float) -> "ThresholdPolicy":
        return cls("constant", float(Theta))

    @classmethod
    def dynamic(cls, theta: float = 0.9) -> "ThresholdPolicy":
        return cls("dynamic", float(theta))

    def level(self, z: np.ndarray) -> float:
        if self.kind == "constant":
            return self.value
        return self.value * float(np.sum(np.abs(z)))


@dataclass(frozen=True)
class TransferKind:
    """Output nonlinearity.

    ``tpam`` keeps the phase of supra-threshold sums, ``phasor_dense`` never
    silences a unit, ``csign`` additionally snaps the phase to one of ``bins``
    equidistant values and ``ternary`` maps the real part to {-1, 0, +1}.
    """

    name: str = "tpam"
    bins: int = 0

    def __post_init__(self):
        if self.name not in ("tpam", "phasor_dense", "csign", "ternary"):
            raise ValueError(f"unknown transfer kind {self.name!r}")
        if self.name == "csign" and self.bins < 2:
            raise ValueError("csign needs at least 2 phase bins")

    @classmethod
    def tpam(cls) -> "TransferKind":
        return cls("tpam")

    @classmethod
    def phasor_dense(cls) -> "TransferKind":
        return cls("phasor_dense")

    @classmethod
    def csign(cls, bins: int) -> "TransferKind":
        return cls("csign", int(bins))

    @classmethod
    def ternary(cls) -> "TransferKind":
        return cls("ternary")

    def __str__(self):
        return f"csign{self.bins}" if self.name == "csign" else self.name


@dataclass
class RecallTrace:
    states: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def as_state(z, n: int | None = None) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim != 1:
        raise DimensionError(f"state must be a vector, got shape {z.shape}")
    if n is not None and z.shape[0] != n:
        raise DimensionError(f"state has length {z.shape[0]}, expected {n}")
    return z


def check_hermitian(W: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"weights must be square, got shape {W.shape}")
    scale = max(1.0, float(np.max(np.abs(W), initial=0.0)))
    err = float(np.max(np.abs(W - W.conj().T), initial=0.0))
    if err > tol * scale:
        raise SymmetryError(f"weight matrix is not Hermitian (max deviation {err:.3g})")


def learn_conjugate_outer(patterns: Sequence[np.ndarray] | np.ndarray, n: int | None = None) -> np.ndarray:
    """Conjugate outer-product rule ``W = S S^H`` with the diagonal zeroed.

    ``patterns`` is a sequence of M state vectors (or an M x N array). With
    no patterns, ``n`` fixes the size of the all-zero result.
    """
    pats = [np.asarray(p, dtype=np.complex128) for p in patterns]
    if not pats:
        if n is None:
            raise DimensionError("need n when no patterns are given")
        return np.zeros((n, n), dtype=np.complex128)
    lengths = {p.shape for p in pats}
    if len(lengths) != 1 or pats[0].ndim != 1:
        raise DimensionError(f"patterns have mismatched shapes {sorted(lengths)}")
    if n is not None and pats[0].shape[0] != n:
        raise DimensionError(f"patterns have length {pats[0].shape[0]}, expected {n}")
    S = np.stack(pats, axis=1)
    W = S @ S.conj().T
    np.fill_diagonal(W, 0.0)
    # Symmetrize away rounding so W == W^H holds exactly.
    return 0.5 * (W + W.conj().T)


def dendritic_sum(W: np.ndarray, z: np.ndarray) -> np.ndarray:
    z = as_state(z)
    if W.shape[1] != z.shape[0]:
        raise DimensionError(f"weights {W.shape} do not match state of length {z.shape[0]}")
    return W @ z


def _snap_phase(u: np.ndarray, bins: int) -> np.ndarray:
    step = 2 * np.pi / bins
    k = np.round(np.angle(u) / step)
    out = np.exp(1j * step * k)
    if bins == 2:
        # exact +-1 so the binary case carries no rounding noise
        out = np.where(np.cos(step * k) > 0, 1.0 + 0j, -1.0 + 0j)
    return out


def transfer(
    u: np.ndarray,
    policy: ThresholdPolicy,
    kind: TransferKind = TransferKind(),
    prev: np.ndarray | None = None,
) -> np.ndarray:
    """Apply the neural transfer function to dendritic sums ``u``.

    The dynamic threshold is computed from ``prev`` (the state that produced
    ``u``). Comparison is strict: a unit exactly at threshold goes silent,
    as does any unit with ``u == 0``.
    """
    u = np.asarray(u, dtype=np.complex128)
    if policy.kind == "dynamic":
        if prev is None:
            raise ValueError("dynamic threshold needs the previous state")
        Theta = policy.level(prev)
    else:
        Theta = policy.value
    mag = np.abs(u)
    out = np.zeros_like(u)
    if kind.name == "ternary":
        re = u.real
        on = np.abs(re) > Theta
        out[on] = np.sign(re[on])
        return out
    on = mag > 0 if kind.name == "phasor_dense" else mag > Theta
    on &= mag > 0
    if kind.name == "csign":
        out[on] = _snap_phase(u[on], kind.bins)
    else:
        # angle() rather than u / |u|: the quotient overflows for subnormal sums
        out[on] = np.exp(1j * np.angle(u[on]))
    return out


def step(
    W: np.ndarray,
    z: np.ndarray,
    policy: ThresholdPolicy,
    kind: TransferKind = TransferKind(),
    schedule: str = "parallel",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """One network update: a synchronous step or one sequential sweep."""
    z = as_state(z, W.shape[0])
    if schedule == "parallel":
        return transfer(W @ z, policy, kind, prev=z)
    if schedule == "sequential_random":
        rng = np.random.default_rng() if rng is None else rng
        order = rng.permutation(z.shape[0])
    elif schedule == "sequential_fixed":
        order = np.arange(z.shape[0])
    else:
        raise ValueError(f"unknown schedule {schedule!r}; choose from {SCHEDULES}")
    z = z.copy()
    for i in order:
        u_i = W[i] @ z
        z[i] = transfer(np.array([u_i]), policy, kind, prev=z)[0]
    return z


def same_state(a: np.ndarray, b: np.ndarray, tol: float = PHASE_TOL) -> bool:
    """Identical supports and phases within ``tol`` on the support."""
    sa, sb = a != 0, b != 0
    if not np.array_equal(sa, sb):
        return False
    if not sa.any():
        return True
    if not np.allclose(np.abs(a[sa]), np.abs(b[sb]), rtol=0, atol=tol):
        return False
    dphi = np.angle(a[sa] * np.conj(b[sa]))
    return bool(np.max(np.abs(dphi)) <= tol)


def recall(
    W: np.ndarray,
    cue: np.ndarray,
    policy: ThresholdPolicy,
    kind: TransferKind = TransferKind(),
    schedule: str = "parallel",
    max_iters: int = 500,
    rng: np.random.Generator | None = None,
) -> RecallTrace:
    """Iterate :func:`step` from ``cue`` until the state repeats.

    A parallel 2-cycle stops the loop with ``converged=False``.
    """
    z = as_state(cue, W.shape[0])
    trace = RecallTrace(states=[z], energies=[energy(W, z, policy)])
    for it in range(1, max_iters + 1):
        new = step(W, trace.states[-1], policy, kind, schedule, rng)
        trace.states.append(new)
        trace.energies.append(energy(W, new, policy, check=False))
        trace.iterations = it
        if same_state(new, trace.states[-2]):
            trace.converged = True
            break
        if it >= 2 and same_state(new, trace.states[-3]):
            break
    return trace


def energy(W: np.ndarray, z: np.ndarray, policy: ThresholdPolicy, check: bool = True) -> float:
    """Lyapunov energy of state ``z``.

    Constant threshold: ``-1/2 z^H W z + Theta * sum|z_i|``.
    Dynamic threshold: ``-1/2 z^H W z + theta * sum|z_i|^2``.
    States outside the unit disk sit behind an infinite barrier.
    """
    if check:
        check_hermitian(W)
    z = as_state(z, W.shape[0])
    mag = np.abs(z)
    if np.any(mag > 1 + 1e-12):
        return float("inf")
    q = np.vdot(z, W @ z)
    if abs(q.imag) >= 1e-9 * max(1.0, abs(q.real)):
        raise SymmetryError(f"quadratic form has imaginary residue {q.imag:.3g}")
    if policy.kind == "constant":
        return float(-0.5 * q.real + policy.value * mag.sum())
    return float(-0.5 * q.real + policy.value * np.sum(mag**2))


def similarity(z: np.ndarray, target: np.ndarray) -> float:
    """Global-phase-aligned cosine similarity ``|<z, t>| / (|z| |t|)``."""
    z = np.asarray(z, dtype=np.complex128)
    t = np.asarray(target, dtype=np.complex128)
    if z.shape != t.shape:
        raise DimensionError(f"shapes differ: {z.shape} vs {t.shape}")
    nz, nt = np.linalg.norm(z), np.linalg.norm(t)
    if nz == 0 or nt == 0:
        return 0.0
    return float(min(1.0, abs(np.vdot(t, z)) / (nz * nt)))


def overlaps(z: np.ndarray, patterns: np.ndarray) -> np.ndarray:
    """Similarity of ``z`` to each row of ``patterns``."""
    return np.array([similarity(z, p) for p in patterns])
