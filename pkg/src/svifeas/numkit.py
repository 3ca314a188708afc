"""Deterministic numeric substrate: seeded streams, boxes, spectral estimates.

Vectors are plain 1-D float64 numpy arrays throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RealVec = np.ndarray


class DimensionMismatchError(ValueError):
    pass


def as_vec(x) -> RealVec:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


@dataclass
class SeededStream:
    """Reproducible random stream derived from (master_seed, stream_id).

    Distinct stream ids give statistically independent streams off one master
    seed (SeedSequence keying). Recreating a stream replays the same draws.
    """

    master_seed: int
    stream_id: tuple = ()
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        key = [int(self.master_seed)] + [_label_to_int(t) for t in self.stream_id]
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))

    def substream(self, label) -> "SeededStream":
        return SeededStream(self.master_seed, self.stream_id + (label,))

    def uniform(self, lo, hi, size=None):
        return self._gen.uniform(lo, hi, size=size)

    def normal(self, scale, size=None):
        return self._gen.normal(0.0, scale, size=size)

    def integers(self, n, size=None):
        return self._gen.integers(0, n, size=size)


def _label_to_int(label) -> int:
    if isinstance(label, int):
        return label
    # stable text hash; python's hash() is salted per process
    acc = 0
    for ch in str(label).encode():
        acc = (acc * 131 + ch) % (2**63)
    return acc


@dataclass(frozen=True)
class BoxSet:
    """Axis-aligned box [lo, hi], the base set the solvers project onto."""

    lo: RealVec
    hi: RealVec

    def __post_init__(self):
        lo, hi = as_vec(self.lo), as_vec(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape:
            raise DimensionMismatchError("lo and hi must have equal length")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi componentwise")

    @property
    def dim(self) -> int:
        return self.lo.size

    def diameter_sq(self) -> float:
        return float(np.sum((self.hi - self.lo) ** 2))

    def circumradius(self, start: int = 0, stop: int | None = None) -> float:
        """Max norm over the box restricted to coordinates [start, stop)."""
        lo = self.lo[start:stop]
        hi = self.hi[start:stop]
        return float(np.sqrt(np.sum(np.maximum(np.abs(lo), np.abs(hi)) ** 2)))

    def contains(self, x: RealVec, tol: float = 1e-9) -> bool:
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


def project_box(x: RealVec, box: BoxSet) -> RealVec:
    if x.shape[0] != box.dim:
        raise DimensionMismatchError(
            f"vector has dim {x.shape[0]}, box has dim {box.dim}"
        )
    return np.clip(x, box.lo, box.hi)


def sample_uniform_box(box: BoxSet, rng: SeededStream) -> RealVec:
    return rng.uniform(box.lo, box.hi, size=box.dim)


def gaussian_vector(dim: int, stddev: float, rng: SeededStream) -> RealVec:
    if stddev < 0:
        raise ValueError(f"stddev must be >= 0, got {stddev}")
    if stddev == 0:
        return np.zeros(dim)
    return rng.normal(stddev, size=dim)


def spectral_norm_power(matrix, iters: int = 200, rng: SeededStream | None = None) -> float:
    """Largest singular value via power iteration on M^T M.

    Fixed iteration budget, random unit start (deterministic start if no
    stream is supplied).
    """
    m = np.asarray(matrix, dtype=np.float64)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if not np.any(m):
        return 0.0
    n = m.shape[1]
    if rng is None:
        v = np.ones(n)
    else:
        v = rng.normal(1.0, size=n)
        if not np.any(v):
            v = np.ones(n)
    v = v / np.linalg.norm(v)
    for _ in range(iters):
        w = m.T @ (m @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(m @ v))


def random_sym_with_spectrum(eigs, rng: SeededStream):
    """Q diag(eigs) Q^T with Q orthogonal from the QR of a random matrix."""
    lam = np.asarray(eigs, dtype=np.float64)
    if lam.size == 0:
        raise ValueError("eigs must be nonempty")
    if not np.all(np.isfinite(lam)):
        raise ValueError("eigs must be finite")
    n = lam.size
    q, _ = np.linalg.qr(rng.normal(1.0, size=(n, n)))
    out = q @ np.diag(lam) @ q.T
    return 0.5 * (out + out.T)
