"""Truncated eigenbasis spaces and diagonal operator calculus.

A vector of ``H_n`` is stored by its coordinates in the eigenbasis of ``A``,
as a float array whose last axis has length ``n``. Leading axes are treated
as batch axes (ensembles of paths), so every operator here is vectorised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpectralSpace:
    """``H_n = span{e_1, ..., e_n}`` for a self-adjoint negative ``A``.

    ``eigenvalues`` are the ``lambda_i`` of ``-A`` (positive, non-decreasing)
    and ``alpha`` is the decay bound ``||e^{tA}|| <= e^{-alpha t}``.
    """

    eigenvalues: np.ndarray
    alpha: float
    kind: str = "generic"

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).reshape(-1)
        if lam.size == 0:
            raise ValueError("a spectral space needs at least one mode")
        if not np.all(lam > 0):
            raise ValueError("eigenvalues must be strictly positive")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be non-decreasing")
        alpha = float(self.alpha)
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        if alpha > lam[0] * (1 + 1e-15):
            raise ValueError(f"alpha={alpha} exceeds lambda_1={lam[0]}")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_n(self) -> float:
        return float(self.eigenvalues[-1])

    def truncate(self, n: int) -> "SpectralSpace":
        """The subspace spanned by the first ``n`` modes."""
        if not 1 <= n <= self.n:
            raise ValueError(f"cannot truncate a {self.n}-mode space to {n} modes")
        return SpectralSpace(self.eigenvalues[:n], self.alpha, self.kind)

    def zeros(self, *batch: int) -> np.ndarray:
        return np.zeros(batch + (self.n,))

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.n:
            raise ValueError(f"expected coordinates of length {self.n}, got shape {x.shape}")
        return x


def laplacian_space(n: int) -> SpectralSpace:
    """Dirichlet Laplacian on ``(0, pi)``: ``lambda_k = k^2``, ``alpha = 1``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    k = np.arange(1, n + 1, dtype=float)
    return SpectralSpace(k * k, 1.0, kind="laplacian")


def norm(x) -> np.ndarray:
    """H-norm via Parseval; reduces the last axis."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sum(x * x, axis=-1))


def semigroup_factors(space: SpectralSpace, t: float) -> np.ndarray:
    """Per-mode factors ``exp(-lambda_i t)`` of ``e^{tA}``."""
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    return np.exp(-space.eigenvalues * t)


def semigroup_apply(space: SpectralSpace, t: float, x) -> np.ndarray:
    return semigroup_factors(space, t) * space.check(x)


def fractional_power_apply(space: SpectralSpace, theta: float, x) -> np.ndarray:
    """Apply ``(-A)^theta`` (any real ``theta``)."""
    return space.eigenvalues ** theta * space.check(x)


def generator_apply(space: SpectralSpace, x) -> np.ndarray:
    """Apply ``A`` itself, i.e. ``-lambda_i`` per mode."""
    return -space.eigenvalues * space.check(x)


def fractional_power_norm(space: SpectralSpace, theta: float) -> float:
    """Operator norm of ``(-A)^theta`` on ``H``; for ``theta <= 0`` it is ``lambda_1^theta``."""
    lam = space.eigenvalues
    return float(lam[0] ** theta if theta <= 0 else lam[-1] ** theta)


def project(space_big: SpectralSpace, space_small: SpectralSpace, x) -> np.ndarray:
    """Orthogonal projection ``pi_n`` from a larger truncation onto a smaller one."""
    if space_small.n > space_big.n:
        raise ValueError("target space is larger than the source space")
    if not np.array_equal(space_big.eigenvalues[: space_small.n], space_small.eigenvalues):
        raise ValueError("spaces do not share an eigenvalue prefix")
    return space_big.check(x)[..., : space_small.n].copy()


def embed(x, n: int) -> np.ndarray:
    """Zero-pad coordinates to ``n`` modes (the inclusion ``H_m -> H_n``)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    if m > n:
        raise ValueError(f"cannot embed {m} modes into {n}")
    out = np.zeros(x.shape[:-1] + (n,))
    out[..., :m] = x
    return out


def eigenfunction(k: int, xi) -> np.ndarray:
    """Physical-space Laplacian eigenfunction ``sqrt(2/pi) sin(k xi)`` on ``[0, pi]``."""
    return math.sqrt(2.0 / math.pi) * np.sin(k * np.asarray(xi, dtype=float))


def synthesize(coords, xi) -> np.ndarray:
    """Evaluate ``sum_k coords_k e_k(xi)`` for the Laplacian basis (plotting helper)."""
    coords = np.asarray(coords, dtype=float)
    xi = np.asarray(xi, dtype=float)
    k = np.arange(1, coords.shape[-1] + 1)
    basis = math.sqrt(2.0 / math.pi) * np.sin(np.multiply.outer(k, xi))
    return coords @ basis
