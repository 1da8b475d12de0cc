"""One-sided Jacobi SVD and the Moore-Penrose pseudo-inverse built on it."""

from __future__ import annotations

import numpy as np


class RankError(ValueError):
    pass


def jacobi_svd(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """Thin SVD ``A = U diag(s) V^T`` of a real matrix by one-sided Jacobi.

    Pairs of columns are rotated until all are mutually orthogonal; the
    column norms are then the singular values. Returns ``(U, s, V)`` with
    ``s`` sorted in decreasing order.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("need a matrix")
    if A.shape[0] < A.shape[1]:
        V, s, U = jacobi_svd(A.T, tol, max_sweeps)
        return U, s, V
    U = A.copy()
    n = U.shape[1]
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                a = U[:, p] @ U[:, p]
                b = U[:, q] @ U[:, q]
                c = U[:, p] @ U[:, q]
                if abs(c) <= tol * np.sqrt(a * b) or c == 0.0:
                    continue
                zeta = (b - a) / (2.0 * c)
                if not np.isfinite(zeta) or abs(zeta) > 1e150:
                    continue  # rotation angle below machine precision
                rotated = True
                t = np.sign(zeta) / (abs(zeta) + np.hypot(1.0, zeta)) if zeta != 0 else 1.0
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                up, uq = U[:, p].copy(), U[:, q]
                U[:, p] = cs * up - sn * uq
                U[:, q] = sn * up + cs * uq
                vp, vq = V[:, p].copy(), V[:, q]
                V[:, p] = cs * vp - sn * vq
                V[:, q] = sn * vp + cs * vq
        if not rotated:
            break
    s = np.linalg.norm(U, axis=0)
    order = np.argsort(-s, kind="stable")
    s, U, V = s[order], U[:, order], V[:, order]
    nz = s > 0
    U[:, nz] /= s[nz]
    return U, s, V


def pseudo_inverse(P: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """``P^+ = V diag(1/s) U^T`` for a matrix of full rank ``min(D, M)``.

    Raises :class:`RankError` naming the first singular value that falls
    below ``rtol * s_max``.
    """
    U, s, V = jacobi_svd(P)
    if s.size == 0 or s[0] == 0:
        raise RankError("matrix is zero; singular value 0 is deficient")
    small = np.flatnonzero(s < rtol * s[0])
    if small.size:
        k = int(small[0])
        raise RankError(f"rank deficient: singular value {k} is {s[k]:.3g} (< {rtol:g} * {s[0]:.3g})")
    return (V / s) @ U.T
