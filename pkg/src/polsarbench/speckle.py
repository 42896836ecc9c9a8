"""Multilook complex-Wishart speckle generation (Lee's method).

A noisy n-look sample of a true coherency matrix T is the average of n outer
products k k^H, where k = L z, L L^H = T is a Cholesky-type factor and z is a
3-vector of circular complex Gaussians with unit variance (real and imaginary
parts each N(0, 1/2)). Streams are counter-based (Philox) and keyed by
(seed, stream_id), so parallel trial evaluation cannot change the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CoherencyMatrix


@dataclass(frozen=True)
class SpeckleConfig:
    """Look count plus the (seed, stream_id) key of the RNG substream."""

    n_looks: int = 49
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if self.n_looks < 1:
            raise ValueError(f"n_looks must be >= 1, got {self.n_looks}")
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative integers")


def substream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent deterministic generator keyed by (seed, stream_id)."""
    ss = np.random.SeedSequence([int(seed), int(stream_id)])
    return np.random.Generator(np.random.Philox(ss))


def stream_for(cfg: SpeckleConfig) -> np.random.Generator:
    """The generator a SpeckleConfig describes."""
    return substream(cfg.seed, cfg.stream_id)


def cholesky_hermitian(t: CoherencyMatrix) -> np.ndarray:
    """Lower-triangular complex L with L L^H = T (within 1e-12 * span).

    Positive-definite inputs use the plain LAPACK factorization. Semi-definite
    inputs fall back to a diagonal 1e-12*span regularization, then to an
    eigenvalue-clamped reconstruction. Fails only when T has an eigenvalue
    below -1e-9 * span.
    """
    a = t.to_array()
    span = t.span
    if span == 0.0 and not a.any():
        return np.zeros((3, 3), dtype=complex)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    lam = np.linalg.eigvalsh(a)
    if lam.min() < -1e-9 * abs(span):
        raise ValueError(
            f"matrix is not PSD within tolerance: min eigenvalue {lam.min():.3e}"
        )
    jitter = 1e-12 * abs(span) if span else 1e-300
    try:
        return np.linalg.cholesky(a + jitter * np.eye(3))
    except np.linalg.LinAlgError:
        lam, v = np.linalg.eigh(a)
        rebuilt = (v * np.clip(lam, 0.0, None)) @ v.conj().T
        return np.linalg.cholesky(rebuilt + jitter * np.eye(3))


def multilook_sample(
    l_factor: np.ndarray, cfg: SpeckleConfig, rng: np.random.Generator
) -> CoherencyMatrix:
    """One n-look sample: (1/n) sum_i (L z_i)(L z_i)^H.

    E[sample] = L L^H; a single look is rank 1. The draw order (all real parts,
    then all imaginary parts) is part of the determinism contract.
    """
    n = cfg.n_looks
    z = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    z *= np.sqrt(0.5)  # unit-variance circular complex convention
    k = z @ l_factor.T  # row i is (L z_i)^T
    sample = (k.T @ k.conj()) / n
    return CoherencyMatrix.from_array(sample)


def batch_samples(
    t: CoherencyMatrix, n_trials: int, cfg: SpeckleConfig
) -> list[CoherencyMatrix]:
    """n_trials independent multilook samples of T.

    Trial i draws from the substream keyed by (cfg.seed, cfg.stream_id + i),
    which makes the sequence reproducible and independent of evaluation order
    or parallelism.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    l_factor = cholesky_hermitian(t)
    out = []
    for i in range(n_trials):
        rng = substream(cfg.seed, cfg.stream_id + i)
        out.append(multilook_sample(l_factor, cfg, rng))
    return out
