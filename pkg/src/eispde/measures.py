"""Empirical measures and the bounded-Lipschitz distance.

``d_L(P, Q) = sup |int f dP - int f dQ|`` over ``f`` with ``|f| <= 1`` and
Lipschitz constant ``<= 1``. In one dimension the supremum over empirical
measures is a chain-structured linear program, solved exactly by a backward
dynamic programme over concave piecewise-linear value functions followed by
a forward recovery of the optimal ``f``. In ``n`` dimensions the sliced
maximum over random directions is a lower bound on ``d_L``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniformly weighted atoms in spectral coordinates, shape ``(M, n)``."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] == 0:
            raise ValueError("an empirical measure needs a non-empty (M, n) array of atoms")
        object.__setattr__(self, "atoms", a)

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dimension(self) -> int:
        return self.atoms.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def halves(self):
        h = self.size // 2
        return EmpiricalMeasure(self.atoms[:h]), EmpiricalMeasure(self.atoms[h:2 * h])


def second_moment(m: EmpiricalMeasure) -> float:
    """Mean squared H-norm of the atoms."""
    return float(np.mean(np.sum(m.atoms ** 2, axis=1)))


def second_moment_stderr(m: EmpiricalMeasure) -> float:
    sq = np.sum(m.atoms ** 2, axis=1)
    return float(np.std(sq, ddof=1) / np.sqrt(sq.size)) if sq.size > 1 else 0.0


def _pooled(samples_a, samples_b):
    a = np.asarray(samples_a, dtype=float).reshape(-1)
    b = np.asarray(samples_b, dtype=float).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise ValueError("both sample lists must be non-empty")
    u, inv = np.unique(np.concatenate([a, b]), return_inverse=True)
    w = np.bincount(inv[: a.size], minlength=u.size) / a.size \
        - np.bincount(inv[a.size:], minlength=u.size) / b.size
    return u, w


def _chain_bl(u: np.ndarray, w: np.ndarray) -> float:
    """max sum w_i f_i  s.t. |f_i| <= 1, |f_{i+1} - f_i| <= u_{i+1} - u_i."""
    N = u.size
    if N == 1:
        return abs(float(w[0])) if abs(w[0]) > 0 else 0.0
    gaps = np.diff(u).tolist()
    wl = w.tolist()
    # Breakpoints of the derivative: position (stored + offset) and slope drop.
    left, right = deque(), deque()
    off_l = off_r = 0.0
    m = 0.0  # slope between the last left and first right breakpoint
    lo = [0.0] * N
    hi = [0.0] * N
    for i in range(N - 1, -1, -1):
        if i < N - 1:
            d = gaps[i]
            off_l -= d
            off_r += d
            if m > 0:
                left.append([1.0 - d - off_l, m])
            elif m < 0:
                right.appendleft([-1.0 + d - off_r, -m])
            m = 0.0
            while left and left[0][0] + off_l <= -1.0:
                left.popleft()
            while right and right[-1][0] + off_r >= 1.0:
                right.pop()
        m += wl[i]
        while m > 0 and right:
            pos, drop = right[0]
            if drop <= m:
                right.popleft()
                left.append([pos + off_r - off_l, drop])
                m -= drop
            else:
                left.append([pos + off_r - off_l, m])
                right[0][1] = drop - m
                m = 0.0
        while m < 0 and left:
            pos, drop = left[-1]
            if drop <= -m:
                left.pop()
                right.appendleft([pos + off_l - off_r, drop])
                m += drop
            else:
                right.appendleft([pos + off_l - off_r, -m])
                left[-1][1] = drop + m
                m = 0.0
        if m > 0:
            lo[i] = hi[i] = 1.0
        elif m < 0:
            lo[i] = hi[i] = -1.0
        else:
            lo[i] = left[-1][0] + off_l if left else -1.0
            hi[i] = right[0][0] + off_r if right else 1.0
    f = min(max(0.0, lo[0]), hi[0])
    total = wl[0] * f
    for i in range(1, N):
        d = gaps[i - 1]
        g = min(max(f, lo[i]), hi[i])
        f = min(max(g, f - d), f + d)
        total += wl[i] * f
    return total


def dL_distance_1d(samples_a, samples_b) -> float:
    """Exact bounded-Lipschitz distance between two 1-D empirical measures."""
    u, w = _pooled(samples_a, samples_b)
    return min(max(_chain_bl(u, w), 0.0), 2.0)


def dL_distance_1d_lp(samples_a, samples_b) -> float:
    """Same quantity via a general-purpose LP solver (cross-check route)."""
    u, w = _pooled(samples_a, samples_b)
    N = u.size
    if N == 1:
        return 0.0
    d = np.diff(u)
    rows = np.arange(N - 1)
    A = np.zeros((2 * (N - 1), N))
    A[rows, rows + 1] = 1.0
    A[rows, rows] = -1.0
    A[N - 1 + rows, rows + 1] = -1.0
    A[N - 1 + rows, rows] = 1.0
    res = linprog(-w, A_ub=A, b_ub=np.concatenate([d, d]), bounds=[(-1, 1)] * N,
                  method="highs", options={"primal_feasibility_tolerance": 1e-10,
                                           "dual_feasibility_tolerance": 1e-10})
    if not res.success:
        raise RuntimeError(f"LP cross-check failed: {res.message}")
    return float(-res.fun)


def random_directions(n: int, directions: int, rng_seed: int = 0) -> np.ndarray:
    """Unit directions; the first ``k`` rows do not depend on ``directions``."""
    if directions < 1:
        raise ValueError("need at least one direction")
    if n == 1:
        return np.ones((directions, 1))
    rng = np.random.default_rng(rng_seed)
    v = rng.standard_normal((directions, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sliced_profile(a: EmpiricalMeasure, b: EmpiricalMeasure, directions: int = 32,
                   rng_seed: int = 0) -> np.ndarray:
    """Exact 1-D distance of the projections, one value per direction."""
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    U = random_directions(a.dimension, directions, rng_seed)
    pa = a.atoms @ U.T
    pb = b.atoms @ U.T
    return np.array([dL_distance_1d(pa[:, j], pb[:, j]) for j in range(U.shape[0])])


def dL_distance_sliced(a: EmpiricalMeasure, b: EmpiricalMeasure, directions: int = 32,
                       rng_seed: int = 0) -> float:
    """Lower bound on ``d_L(a, b)``: max over random directions of the 1-D distance."""
    return float(np.max(sliced_profile(a, b, directions, rng_seed)))


def stationarity_gap(endpoints_k, endpoints_kj, directions: int = 32, rng_seed: int = 0) -> float:
    """Sliced distance between the ensemble laws at two horizons of one run."""
    return dL_distance_sliced(EmpiricalMeasure(endpoints_k), EmpiricalMeasure(endpoints_kj),
                              directions, rng_seed)
