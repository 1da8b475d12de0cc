"""Sequence memories with skew-symmetric weights and their Hermitian
phasor-network counterparts.

A closed sequence of real patterns is stored with a Hebbian term for the
forward transition and an anti-Hebbian term for the backward one, which
gives a skew-symmetric matrix ``J``. Its eigenvalues are purely imaginary,
so dividing ``J`` by one of them yields a Hermitian matrix that has the
matching eigenvector as a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core
from .svd import jacobi_svd

ZERO_TOL = 1e-10


class SequenceError(ValueError):
    pass


def learn_sequences(seqs, N: int | None = None) -> np.ndarray:
    """``J = sum_mu sum_s xi^{mu,s} (xi^{mu,s+1} - xi^{mu,s-1})^T``, indices mod L.

    ``seqs`` is a list of sequences, each an ``L x N`` array (or list of
    vectors). All sequences must share L >= 3 and N.
    """
    seqs = [np.asarray(s, dtype=float) for s in seqs]
    if not seqs:
        if N is None:
            raise core.DimensionError("need N when no sequences are given")
        return np.zeros((N, N))
    shapes = {s.shape for s in seqs}
    if len(shapes) != 1 or seqs[0].ndim != 2:
        raise core.DimensionError(f"sequences have mismatched shapes {sorted(shapes)}")
    L, n = seqs[0].shape
    if N is not None and n != N:
        raise core.DimensionError(f"patterns have length {n}, expected {N}")
    if L < 3:
        raise SequenceError(f"sequence length L={L} unsupported: forward and backward terms cancel for L < 3")
    J = np.zeros((n, n))
    for X in seqs:
        fwd = np.roll(X, -1, axis=0)  # row s holds xi^{s+1}
        bwd = np.roll(X, 1, axis=0)  # row s holds xi^{s-1}
        J += X.T @ (fwd - bwd)
    return J


def check_skew(J: np.ndarray, tol: float = 1e-12) -> None:
    J = np.asarray(J)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise core.DimensionError(f"need a square matrix, got {J.shape}")
    err = float(np.max(np.abs(J + J.T), initial=0.0))
    if err > tol * max(1.0, float(np.max(np.abs(J), initial=0.0))):
        raise core.SymmetryError(f"matrix is not skew-symmetric (max deviation {err:.3g})")


def _canonical(v: np.ndarray) -> np.ndarray:
    # rotate so the last largest-magnitude component is real positive, scale to max |v_i| = 1
    mag = np.abs(v)
    k = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-9))[-1])
    return v * (np.conj(v[k]) / mag[k]) / mag.max()


@dataclass(frozen=True)
class Eigenpair:
    value: complex
    vector: np.ndarray


def skew_spectrum(J: np.ndarray) -> list[Eigenpair]:
    """Eigenpairs ``(i sigma, v)`` with ``sigma > 0`` of a real skew matrix.

    The singular values of ``J`` come in equal pairs (the eigenvalues of the
    symmetric ``J^T J`` are ``sigma^2``). For a right singular vector ``x``,
    ``y = J x / sigma`` completes the invariant plane and ``v = x - i y``
    satisfies ``J v = i sigma v``; the conjugate pair is ``(-i sigma, conj v)``.
    Pairs are returned by decreasing ``sigma``; zero modes are omitted.
    """
    J = np.asarray(J, dtype=float)
    check_skew(J)
    _, s, V = jacobi_svd(J)
    out = []
    k = 0
    while k < s.size and s[k] > ZERO_TOL * max(1.0, s[0]):
        x = V[:, k]
        y = J @ x / s[k]
        out.append(Eigenpair(1j * s[k], _canonical(x - 1j * y)))
        k += 2
    return out


def select_eigenpair(J: np.ndarray, selector="largest") -> Eigenpair:
    """Pick an eigenpair: ``largest`` or ``smallest`` |lambda|, an index into
    :func:`skew_spectrum`, or a callable taking the spectrum."""
    spec = skew_spectrum(J)
    if not spec:
        raise SequenceError("matrix has only zero eigenvalues")
    if callable(selector):
        return selector(spec)
    if selector == "largest":
        return spec[0]
    if selector == "smallest":
        return spec[-1]
    return spec[int(selector)]


def to_phasor_network(J: np.ndarray, eigen_selector="largest", lam: complex | None = None):
    """Hermitian ``W' = J / lambda`` for an imaginary eigenvalue of skew ``J``.

    Returns ``(W', lambda, v)`` with ``W' v = v``. Passing ``lam`` bypasses
    the eigen-solver (``v`` is then ``None``).
    """
    J = np.asarray(J, dtype=float)
    check_skew(J)
    v = None
    if lam is None:
        pair = select_eigenpair(J, eigen_selector)
        lam, v = pair.value, pair.vector
    lam = complex(lam)
    if abs(lam) < ZERO_TOL:
        raise SequenceError(f"eigenvalue {lam} is too close to zero")
    if abs(lam.real) > 1e-9 * abs(lam):
        raise SequenceError(f"eigenvalue {lam} is not purely imaginary")
    lam = 1j * lam.imag
    Wp = J / lam
    # J real and lambda imaginary: W' is purely imaginary and Hermitian
    return 0.5 * (Wp + Wp.conj().T), lam, v


def phasor_iterate(W: np.ndarray, z: np.ndarray, steps: int = 50) -> np.ndarray:
    """Threshold-free phasor dynamics ``z <- u / |u|`` (components with ``u = 0`` go silent)."""
    policy, kind = core.ThresholdPolicy.constant(0.0), core.TransferKind.phasor_dense()
    for _ in range(steps):
        z = core.step(W, z, policy, kind)
    return z


@dataclass
class Contrast:
    W: np.ndarray
    W_prime: np.ndarray
    lam: complex
    residual_W: float
    residual_W_prime: float
    max_entry_difference: float
    w_prime_imaginary: bool

    @property
    def differ(self) -> bool:
        return self.max_entry_difference > 1e-9


def conjugate_vs_sequence_contrast(v: np.ndarray, J: np.ndarray | None = None) -> Contrast:
    """Compare the conjugate outer-product network storing ``v`` with the
    network obtained from sequence learning.

    ``v`` is an equidistant phasor pattern; without ``J`` the matching
    sequence is the cycle of cardinal basis vectors ordered by phase.
    """
    v = np.asarray(v, dtype=np.complex128)
    n = v.size
    if J is None:
        order = np.argsort(np.mod(np.angle(v), 2 * np.pi), kind="stable")
        J = learn_sequences([np.eye(n)[order]])
    W = core.learn_conjugate_outer([v])
    lam = complex(np.vdot(v, J @ v) / np.vdot(v, v))
    Wp, lam, _ = to_phasor_network(J, lam=lam)
    return Contrast(
        W=W,
        W_prime=Wp,
        lam=lam,
        residual_W=float(np.max(np.abs(W @ v - (n - 1) * v))),
        residual_W_prime=float(np.max(np.abs(Wp @ v - v))),
        max_entry_difference=float(np.max(np.abs(W - Wp))),
        w_prime_imaginary=bool(np.max(np.abs(Wp.real)) < 1e-12),
    )
