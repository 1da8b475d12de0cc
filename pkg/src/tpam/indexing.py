"""Indexing architecture for correlated data.

Data vectors (columns of a real ``D x M`` matrix ``P``) are mapped to index
patterns by a feedforward stage, cleaned up by a TPAM that stores the index
patterns, and mapped back to data space by a heteroassociative readout.
Hebbian and SDM-style memories with sparse binary index codes serve as
baselines. Pattern separation uses the pseudo-inverse of ``P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .svd import pseudo_inverse

INFO_CAP = 16.0
MODELS = ("tpam", "hebbian", "sdm")
INDEXING = ("pinv", "random")


@dataclass(frozen=True)
class IndexConfig:
    """Settings of one memory model.

    ``indexing`` is ``pinv`` (pattern separation, ``S P^+``) or ``random``.
    ``hidden`` applies to the SDM: ``binary`` keeps the K largest hidden
    values as ones, ``gated`` keeps their values and zeroes the rest.
    """

    model: str = "tpam"
    indexing: str = "pinv"
    N: int = 500
    p_hot: float = 0.1
    theta: float = 0.5
    orthogonal: bool = False
    cleanup: bool = True
    hidden: str = "binary"
    max_iters: int = 100

    @property
    def K(self) -> int:
        return max(1, int(round(self.p_hot * self.N)))

    @property
    def label(self) -> str:
        return f"{self.model}-{self.indexing}"

    def validate(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.indexing not in INDEXING:
            raise ValueError(f"unknown indexing {self.indexing!r}; choose from {INDEXING}")
        if self.hidden not in ("binary", "gated"):
            raise ValueError(f"unknown hidden mode {self.hidden!r}")


@dataclass
class Memory:
    """A built memory: encoder ``W_I`` (N x D), decoder ``W_H`` (D x N) and,
    for TPAM, the index codebook ``S`` (N x M) with recurrent weights ``W``."""

    config: IndexConfig
    W_I: np.ndarray
    W_H: np.ndarray
    S: np.ndarray
    W: np.ndarray | None = None


@dataclass
class Retrieval:
    estimate: np.ndarray
    rho: float
    bits: float
    converged: bool = True
    index_similarity: float = float("nan")
    extra: dict = field(default_factory=dict)


def default_image() -> np.ndarray:
    """Bundled 128 x 128 RGB test image (a crop of a public-domain photograph)."""
    from importlib.resources import files

    from .formats import read_ppm

    return read_ppm(files("tpam") / "data" / "astronaut_crop.ppm")


def normalize_patches(P: np.ndarray) -> np.ndarray:
    """Zero mean and unit variance per column."""
    P = np.asarray(P, dtype=float)
    P = P - P.mean(axis=0, keepdims=True)
    sd = P.std(axis=0, keepdims=True)
    return P / np.where(sd > 0, sd, 1.0)


def extract_patches(img: np.ndarray, size: int = 12, M: int = 20, rng: np.random.Generator | None = None,
                    normalize: bool = True, min_std: float = 2.0, max_draws: int = 10000) -> np.ndarray:
    """``M`` random ``size x size x C`` patches flattened into a ``D x M`` matrix.

    Patches whose pixel standard deviation is at most ``min_std`` (flat
    regions, which cannot be normalized) are skipped.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        img = img[:, :, None]
    H, W_, _ = img.shape
    if H < size or W_ < size:
        raise ValueError("image smaller than one patch")
    cols = []
    for _ in range(max_draws):
        y, x = rng.integers(0, H - size + 1), rng.integers(0, W_ - size + 1)
        patch = img[y:y + size, x:x + size].ravel()
        if patch.std() > min_std:
            cols.append(patch)
            if len(cols) == M:
                break
    else:
        raise ValueError(f"found only {len(cols)} textured patches in {max_draws} draws")
    P = np.stack(cols, axis=1)
    return normalize_patches(P) if normalize else P


def patches_to_image(P: np.ndarray, size: int = 12, channels: int = 3, cols: int = 5, pad: int = 1) -> np.ndarray:
    """Tile columns of ``P`` into one 8-bit RGB mosaic (each patch rescaled)."""
    M = P.shape[1]
    rows = math.ceil(M / cols)
    out = np.full((rows * (size + pad) + pad, cols * (size + pad) + pad, 3), 255, dtype=np.uint8)
    for m in range(M):
        p = P[:, m].reshape(size, size, channels)
        lo, hi = p.min(), p.max()
        p = (p - lo) / (hi - lo) if hi > lo else np.zeros_like(p)
        if channels == 1:
            p = np.repeat(p, 3, axis=2)
        r, c = divmod(m, cols)
        y, x = pad + r * (size + pad), pad + c * (size + pad)
        out[y:y + size, x:x + size] = np.rint(255 * p).astype(np.uint8)
    return out


def gram_schmidt(S: np.ndarray) -> np.ndarray:
    """Orthogonalize the columns of ``S`` (modified Gram-Schmidt), keeping each
    column's original norm."""
    S = np.asarray(S, dtype=np.complex128)
    Q = S.copy()
    norms = np.linalg.norm(S, axis=0)
    for k in range(Q.shape[1]):
        for j in range(k):
            Q[:, k] -= np.vdot(Q[:, j], Q[:, k]) * Q[:, j]
        nk = np.linalg.norm(Q[:, k])
        if nk == 0:
            raise ValueError(f"codebook column {k} is linearly dependent")
        Q[:, k] /= nk
    return Q * norms


def phasor_codebook(N: int, M: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """N x M sparse phasor index patterns, K active per column."""
    S = np.zeros((N, M), dtype=np.complex128)
    for m in range(M):
        idx = rng.choice(N, K, replace=False)
        S[idx, m] = np.exp(2j * np.pi * rng.random(K))
    return S


def binary_codebook(N: int, M: int, K: int, rng: np.random.Generator) -> np.ndarray:
    S = np.zeros((N, M))
    for m in range(M):
        S[rng.choice(N, K, replace=False), m] = 1.0
    return S


def sdm_topk(v: np.ndarray, K: int) -> np.ndarray:
    """Binary vector with ones at the K largest entries; ties go to the
    lowest index."""
    v = np.asarray(v, dtype=float)
    if not 0 <= K <= v.size:
        raise ValueError(f"K={K} out of range for length {v.size}")
    out = np.zeros(v.size)
    out[np.argsort(-v, kind="stable")[:K]] = 1.0
    return out


def kwta_gate(v: np.ndarray, K: int) -> np.ndarray:
    """Keep the K largest entries of ``v`` and zero the rest."""
    return np.asarray(v, dtype=float) * sdm_topk(v, K)


def phasor_kwta(h: np.ndarray, K: int) -> np.ndarray:
    """Unit phasors on the K components of largest magnitude (lowest index on ties)."""
    h = np.asarray(h, dtype=np.complex128)
    z = np.zeros_like(h)
    idx = np.argsort(-np.abs(h), kind="stable")[:K]
    idx = idx[np.abs(h[idx]) > 0]
    z[idx] = h[idx] / np.abs(h[idx])
    return z


def build_index_stage(P: np.ndarray, S: np.ndarray, mode: str = "pinv", P_pinv: np.ndarray | None = None) -> np.ndarray:
    """Encoder ``S P^+`` (pattern separation) or ``S P^T`` (Hebbian)."""
    P = np.asarray(P, dtype=float)
    if S.shape[1] != P.shape[1]:
        raise core.DimensionError(f"codebook has {S.shape[1]} columns, data has {P.shape[1]}")
    if mode == "pinv":
        return S @ (pseudo_inverse(P) if P_pinv is None else P_pinv)
    if mode == "random":
        return S @ P.T
    raise ValueError(f"unknown indexing mode {mode!r}")


def decode(W_H: np.ndarray, z: np.ndarray, K: int) -> np.ndarray:
    """Real readout ``Re(W_H z / K)``."""
    return np.real(W_H @ z) / K


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def info_per_pixel(rho: float, cap: float = INFO_CAP) -> float:
    """``-1/2 log2(1 - rho^2)`` bits, capped."""
    r2 = rho * rho
    if r2 >= 1.0:
        return cap
    return float(min(cap, -0.5 * math.log2(1.0 - r2)))


def build_memory(P: np.ndarray, config: IndexConfig, rng: np.random.Generator,
                 P_pinv: np.ndarray | None = None) -> Memory:
    """Learn encoder and decoder for data ``P`` under ``config``."""
    config.validate()
    P = np.asarray(P, dtype=float)
    D, M = P.shape
    N, K = config.N, config.K
    if config.model == "tpam":
        S = phasor_codebook(N, M, K, rng)
        if config.orthogonal:
            S = gram_schmidt(S)
        W_I = build_index_stage(P, S, config.indexing, P_pinv)
        W = core.learn_conjugate_outer(S.T)
        return Memory(config, W_I, P @ S.conj().T, S, W)
    S = binary_codebook(N, M, K, rng)
    if config.indexing == "pinv":
        W_I = build_index_stage(P, S, "pinv", P_pinv)
    else:
        # random sparse binary addresses, as in Kanerva's memory
        W_I = (rng.random((N, D)) < config.p_hot).astype(float)
    H = W_I @ P
    if config.model == "sdm":
        H = np.stack([_sdm_hidden(H[:, m], K, config.hidden) for m in range(M)], axis=1)
    return Memory(config, W_I, P @ H.T, S)


def _sdm_hidden(v: np.ndarray, K: int, mode: str) -> np.ndarray:
    return sdm_topk(v, K) if mode == "binary" else kwta_gate(v, K)


def retrieve(memory: Memory, cue: np.ndarray, target: np.ndarray, rng: np.random.Generator | None = None) -> Retrieval:
    """Run one cue through the memory and score it against ``target``."""
    cfg = memory.config
    h = memory.W_I @ np.asarray(cue, dtype=float)
    converged, sim = True, float("nan")
    if cfg.model == "tpam":
        K = cfg.K
        if cfg.cleanup:
            z = phasor_kwta(h, K)
            trace = core.recall(memory.W, z, core.ThresholdPolicy.dynamic(cfg.theta), max_iters=cfg.max_iters, rng=rng)
            z, converged = trace.final, trace.converged
        else:
            z = h
        est = decode(memory.W_H, z, K)
        overlaps = core.overlaps(z, memory.S.T)
        sim = float(overlaps.max()) if overlaps.size else 0.0
    elif cfg.model == "sdm":
        est = memory.W_H @ _sdm_hidden(h, cfg.K, cfg.hidden)
    else:
        est = memory.W_H @ h
    rho = pearson(est, target)
    return Retrieval(est, rho, info_per_pixel(rho), converged, sim)


def retrieve_pipeline(P: np.ndarray, cue: np.ndarray, config: IndexConfig = IndexConfig(),
                      target_index: int | None = None, seed: int = 0):
    """Build the memory for ``P`` and retrieve ``cue``.

    Returns ``(estimate, diagnostics)`` where diagnostics hold the Pearson
    correlation ``rho`` with the target column, ``bits`` per pixel and the
    TPAM convergence flag.
    """
    P = np.asarray(P, dtype=float)
    cue = np.asarray(cue, dtype=float)
    if target_index is None:
        target_index = int(np.argmax(P.T @ cue))
    mem = build_memory(P, config, np.random.default_rng(seed))
    r = retrieve(mem, cue, P[:, target_index])
    return r.estimate, {"rho": r.rho, "bits": r.bits, "converged": r.converged,
                        "index_similarity": r.index_similarity, "target": target_index}


def default_models(N: int = 500, p_hot: float = 0.1, theta: float = 0.5) -> list[IndexConfig]:
    """The three memories, each with pattern separation and with random indexing."""
    return [IndexConfig(m, ix, N, p_hot, theta) for m in MODELS for ix in INDEXING]


def compare_models(P: np.ndarray, noise_sd: float = 0.3, models: list[IndexConfig] | None = None,
                   trials: int = 5, seed: int = 0) -> list[dict]:
    """Retrieve every stored column from a noisy cue under each model.

    All models see the same noisy cues. Rows hold ``mu, trial, noise, model,
    rho, bits_per_pixel`` plus the information carried by the cue itself.
    """
    from .rng import stream

    P = np.asarray(P, dtype=float)
    models = default_models() if models is None else models
    P_pinv = pseudo_inverse(P)
    rows = []
    for t in range(trials):
        noise = stream(seed, "cue", t).normal(0.0, noise_sd, P.shape)
        cues = P + noise
        for cfg in models:
            mem = build_memory(P, cfg, stream(seed, "codebook", t, MODELS.index(cfg.model)), P_pinv)
            for mu in range(P.shape[1]):
                r = retrieve(mem, cues[:, mu], P[:, mu])
                rows.append({"mu": mu, "trial": t, "noise": noise_sd, "model": cfg.label,
                             "rho": r.rho, "bits_per_pixel": r.bits, "converged": r.converged})
        for mu in range(P.shape[1]):
            rho = pearson(cues[:, mu], P[:, mu])
            rows.append({"mu": mu, "trial": t, "noise": noise_sd, "model": "cue",
                         "rho": rho, "bits_per_pixel": info_per_pixel(rho), "converged": True})
    return rows


def mean_bits(rows: list[dict]) -> dict:
    out: dict = {}
    for r in rows:
        out.setdefault(r["model"], []).append(r["bits_per_pixel"])
    return {k: float(np.mean(v)) for k, v in out.items()}
