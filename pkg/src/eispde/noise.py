"""Counter-based cylindrical Wiener increments in spectral coordinates.

Every base increment is a pure function of ``(seed, path, mode, base_index)``:
the Philox key is ``(seed, base_index)`` and the counter addresses
``(path // 4, mode)``, so a value never depends on how many paths, modes or
steps were requested alongside it. Coarse increments are exact sums of base
increments, which couples runs across stepsizes and truncation dimensions.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

SEED_ENV = "EISPDE_SEED"
_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * math.pi


def resolve_seed(seed=None, default: int = 0) -> int:
    """Explicit seed, else the ``EISPDE_SEED`` environment variable, else ``default``."""
    if seed is None:
        env = os.environ.get(SEED_ENV)
        seed = int(env, 0) if env else default
    return int(seed) & _MASK64


def steps_per(dt: float, base_dt: float) -> int:
    """Number of base intervals in ``dt``; rejects misaligned stepsizes."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    m = dt / base_dt
    mi = int(round(m))
    if mi < 1 or abs(m - mi) > 1e-9 * max(1.0, m):
        raise ValueError(f"dt={dt} is not an integer multiple of base_dt={base_dt}")
    return mi


def _standard_normals(seed: int, base_index: int, mode: int, p0: int, count: int) -> np.ndarray:
    """Standard normals for paths ``p0 .. p0+count-1`` of one (mode, base interval).

    One Philox block (four words) holds two uniform pairs; each pair yields the
    cosine and sine Box-Muller normals of two consecutive paths.
    """
    b0 = p0 // 4
    nblocks = (p0 + count - 1) // 4 - b0 + 1
    bitgen = np.random.Philox(
        key=np.array([seed, base_index], dtype=np.uint64),
        counter=np.array([b0, mode, 0, 0], dtype=np.uint64),
    )
    raw = bitgen.random_raw(4 * nblocks).reshape(-1, 2)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)
    r = np.sqrt(-2.0 * np.log(u[:, 0]))
    ang = _TWO_PI * u[:, 1]
    z = np.empty((raw.shape[0], 2))
    np.multiply(r, np.cos(ang), out=z[:, 0])
    np.multiply(r, np.sin(ang), out=z[:, 1])
    off = p0 - 4 * b0
    return z.reshape(-1)[off: off + count]


@dataclass(frozen=True)
class NoiseStream:
    """Reproducible driving noise for ``max_modes`` Brownian coordinates.

    ``path_id`` is the default path for the single-path queries; ensemble
    queries take an explicit contiguous block of path ids.
    """

    seed: int
    base_dt: float
    max_modes: int
    path_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        if not self.base_dt > 0:
            raise ValueError("base_dt must be positive")
        if self.max_modes < 1:
            raise ValueError("max_modes must be positive")

    def for_path(self, path_id: int) -> "NoiseStream":
        return NoiseStream(self.seed, self.base_dt, self.max_modes, path_id)

    def _check_modes(self, n: int):
        if not 1 <= n <= self.max_modes:
            raise ValueError(f"mode count {n} outside 1..{self.max_modes}")

    def ensemble_increments(self, p0: int, count: int, n: int, grid_index: int,
                            dt: float) -> np.ndarray:
        """Increments over ``[grid_index*dt, (grid_index+1)*dt)``, shape ``(count, n)``."""
        self._check_modes(n)
        if grid_index < 0 or p0 < 0 or count < 1:
            raise ValueError("grid_index and path ids must be nonnegative, count positive")
        m = steps_per(dt, self.base_dt)
        out = np.zeros((count, n))
        for mode in range(n):
            acc = out[:, mode]
            for j in range(grid_index * m, (grid_index + 1) * m):
                acc += _standard_normals(self.seed, j, mode, p0, count)
        out *= math.sqrt(self.base_dt)
        return out

    def increment(self, mode: int, grid_index: int, dt: float) -> float:
        """Scalar increment of coordinate ``mode`` (1-based) for ``self.path_id``."""
        if not 1 <= mode <= self.max_modes:
            raise ValueError(f"mode {mode} outside 1..{self.max_modes}")
        m = steps_per(dt, self.base_dt)
        if grid_index < 0:
            raise ValueError("grid_index must be nonnegative")
        total = 0.0
        for j in range(grid_index * m, (grid_index + 1) * m):
            total += float(_standard_normals(self.seed, j, mode - 1, self.path_id, 1)[0])
        return total * math.sqrt(self.base_dt)

    def coupled_vector_increment(self, n: int, grid_index: int, dt: float) -> np.ndarray:
        """Projected increment ``pi_n dW`` on the modes ``1..n`` for ``self.path_id``."""
        return self.ensemble_increments(self.path_id, 1, n, grid_index, dt)[0]
