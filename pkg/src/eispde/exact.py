"""Closed-form Gaussian laws for the linear additive model.

With ``b(x) = -c x``, ``sigma1 = 0`` and diagonal ``sigma0 = g``, every mode is
an independent scalar problem. The EI recursion is
``y_{k+1} = e^{-lam dt} ((1 - c dt) y_k + g dW_k)`` and the exact Galerkin
solution is the Ornstein-Uhlenbeck process with rate ``lam + c``.
"""
from __future__ import annotations

import math

import numpy as np


def recursion_factor(lam, c: float, dt: float) -> np.ndarray:
    """``r = e^{-lam dt} (1 - c dt)``."""
    return np.exp(-np.asarray(lam, dtype=float) * dt) * (1.0 - c * dt)


def ei_mean(lam, c: float, dt: float, k: int, x0) -> np.ndarray:
    return recursion_factor(lam, c, dt) ** k * np.asarray(x0, dtype=float)


def ei_variance(lam, c: float, g, dt: float, k: int) -> np.ndarray:
    """``g^2 e^{-2 lam dt} dt (1 - r^{2k}) / (1 - r^2)``."""
    lam = np.asarray(lam, dtype=float)
    r2 = recursion_factor(lam, c, dt) ** 2
    return np.asarray(g, dtype=float) ** 2 * np.exp(-2 * lam * dt) * dt * (1 - r2 ** k) / (1 - r2)


def ei_stationary_variance(lam, c: float, g, dt: float) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    r2 = recursion_factor(lam, c, dt) ** 2
    return np.asarray(g, dtype=float) ** 2 * np.exp(-2 * lam * dt) * dt / (1 - r2)


def ou_stationary_variance(lam, c: float, g) -> np.ndarray:
    """Variance ``g^2 / (2 (lam + c))`` of the continuous-time stationary law."""
    return np.asarray(g, dtype=float) ** 2 / (2 * (np.asarray(lam, dtype=float) + c))


def ei_second_moment(lam, c: float, g, dt: float, k: int, x0) -> float:
    """``E ||Y(k dt)||^2`` summed over modes."""
    return float(np.sum(ei_mean(lam, c, dt, k, x0) ** 2 + ei_variance(lam, c, g, dt, k)))


def _geom(z, k):
    """``sum_{m<k} z^m``; ``k=None`` means the infinite series."""
    z = np.asarray(z, dtype=float)
    return 1.0 / (1.0 - z) if k is None else (1.0 - z ** k) / (1.0 - z)


def strong_error_modes(lam, c: float, g, dt: float, k=None, x0=None) -> np.ndarray:
    """Per-mode ``E|X(k dt) - Y(k dt)|^2`` with both driven by one Brownian path.

    ``X`` is the exact Galerkin (OU) solution, ``Y`` the EI scheme; ``k=None``
    gives the ``k -> infinity`` limit of the stochastic part, which is also its
    supremum over gridpoints since the partial sums increase with ``k``.
    """
    lam = np.asarray(lam, dtype=float)
    g = np.asarray(g, dtype=float)
    mu = lam + c
    a = np.exp(-mu * dt)
    q = np.exp(-lam * dt)
    r = q * (1.0 - c * dt)
    i1 = -np.expm1(-mu * dt) / mu
    i2 = -np.expm1(-2 * mu * dt) / (2 * mu)
    # interval m steps before the end: integral of (e^{-mu(m dt + v)} - q r^m)^2 dv on [0, dt]
    stoch = g * g * (i2 * _geom(a * a, k) - 2 * q * i1 * _geom(a * r, k) + q * q * dt * _geom(r * r, k))
    if x0 is None or k is None:
        return stoch
    det = (r ** k - a ** k) * np.asarray(x0, dtype=float)
    return stoch + det * det


def laplacian_tail_variance(n: int, c: float, g: float = 1.0, terms: int = 2_000_000) -> float:
    """``sum_{k > n} g^2 / (2 (k^2 + c))``: stationary mass outside ``H_n``."""
    k = np.arange(n + terms, n, -1, dtype=float)
    partial = float(np.sum(1.0 / (k * k + c)))
    x = n + terms + 0.5
    rc = math.sqrt(c) if c > 0 else None
    tail = (math.pi / 2 - math.atan(x / rc)) / rc if rc else 1.0 / x
    return 0.5 * g * g * (partial + tail)
