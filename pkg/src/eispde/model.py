"""SPDE coefficients, assumption constants and the stepsize gate.

The shipped coefficient kinds are all mode-diagonal so that every norm in the
assumptions is exactly computable:

* drift ``linear_diagonal``: ``b(x) = -c x + f e_1``;
* drift ``nemytskii_lipschitz``: ``b_i(x) = -c x_i + a tanh(x_i) + f [i == 1]``;
* ``sigma1`` kinds ``zero``, ``linear`` (gains ``s x_i``) and ``sin``
  (gains ``s sin x_i``), each acting diagonally on the noise increment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .spectral_space import SpectralSpace, fractional_power_norm, norm


class ModelError(ValueError):
    """A model definition that cannot satisfy the standing assumptions."""


# -- series constants --------------------------------------------------------

def _power_sum(p: float, tail_tol: float) -> float:
    """``sum_{k>=1} k^p`` for ``p < -1`` to within ``tail_tol``.

    The tail beyond the partial sum is bracketed between the trapezoid lower
    bound and the midpoint upper bound of ``int x^p``; the midpoint of the
    bracket is returned once its half-width drops below ``tail_tol``.
    """
    if not p < -1:
        raise ValueError(f"sum of k^{p} diverges")
    if not tail_tol > 0:
        raise ValueError("tail_tol must be positive")
    q = -(p + 1.0)

    def bracket(N):
        upper = (N + 0.5) ** (-q) / q
        lower = (N + 1.0) ** (-q) / q + 0.5 * (N + 1.0) ** p
        return lower, upper

    N = 1024
    while True:
        lower, upper = bracket(N)
        if 0.5 * (upper - lower) < tail_tol or N > 2 ** 26:
            break
        N *= 2
    k = np.arange(N, 0, -1, dtype=float)
    return float(np.sum(k ** p)) + 0.5 * (lower + upper)


def delta1_series(theta1: float, tail_tol: float = 1e-10) -> float:
    """``1/2 sum_k (k^2)^(2 theta1 - 1)``: the noise-regularity constant for the Dirichlet
    Laplacian with identity ``sigma0``. Requires ``0 < theta1 < 1/4``."""
    if not 0 < theta1 < 0.25:
        raise ValueError(f"theta1={theta1} outside (0, 1/4); the series diverges")
    return 0.5 * _power_sum(2.0 * (2.0 * theta1 - 1.0), tail_tol)


def delta2_series(delta: float, tail_tol: float = 1e-10) -> float:
    """``2^(delta-1) sum_k k^(-2(1-delta))``, valid with ``theta2 = delta``."""
    if not 0 < delta < 0.5:
        raise ValueError(f"delta={delta} outside (0, 1/2); the series diverges")
    return 2.0 ** (delta - 1.0) * _power_sum(-2.0 * (1.0 - delta), tail_tol)


# -- coefficients ------------------------------------------------------------

@dataclass(frozen=True)
class DriftSpec:
    kind: str
    params: dict
    L1: float
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    # sup of the one-sided derivative, i.e. <x-y, b(x)-b(y)> <= one_sided ||x-y||^2
    one_sided: Optional[float] = None

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))


def linear_drift(c: float, f: float = 0.0) -> DriftSpec:
    def b(x):
        out = -c * x
        if f:
            out[..., 0] += f
        return out

    return DriftSpec("linear_diagonal", {"c": c, "f": f}, abs(c), b, one_sided=-c)


def nemytskii_drift(c: float, a: float, f: float = 0.0) -> DriftSpec:
    # derivative of -c t + a tanh t ranges over [min(-c, a-c), max(-c, a-c)]
    lo, hi = min(-c, a - c), max(-c, a - c)

    def b(x):
        out = -c * x + a * np.tanh(x)
        if f:
            out[..., 0] += f
        return out

    return DriftSpec("nemytskii_lipschitz", {"c": c, "a": a, "f": f},
                     max(abs(lo), abs(hi)), b, one_sided=hi)


def custom_drift(fn, L1: float, one_sided: Optional[float] = None) -> DriftSpec:
    return DriftSpec("custom", {}, float(L1), fn, one_sided=one_sided)


@dataclass(frozen=True)
class DiffusionSpec:
    """``sigma(x) = sigma0 + sigma1(x)``; both act diagonally on ``dW``.

    ``sigma0`` holds per-mode gains, ``sigma1`` maps states ``(..., n)`` to
    per-mode gains ``(..., n)``. ``L2`` is the Hilbert-Schmidt Lipschitz
    constant of ``sigma1``; ``sigma1_one_sided`` bounds
    ``||sigma1(x)-sigma1(y)||_HS^2 / ||x-y||^2`` from above (``L2^2`` if unknown).
    """

    sigma0: np.ndarray
    sigma1: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    L2: float
    theta1: float
    delta1: float
    theta2: float
    delta2: float
    sigma1_kind: str = "zero"
    sigma1_scale: float = 0.0

    @property
    def additive(self) -> bool:
        return self.sigma1_kind == "zero"


def sigma1_factory(kind: str, scale: float = 0.0):
    """Diagonal ``sigma1`` gains and their Lipschitz constant for a named kind."""
    if kind == "zero":
        return (lambda x: np.zeros_like(x)), 0.0
    if kind == "linear":
        return (lambda x: scale * x), abs(scale)
    if kind == "sin":
        return (lambda x: scale * np.sin(x)), abs(scale)
    raise ModelError(f"unknown sigma1 kind {kind!r}")


@dataclass(frozen=True)
class ModelSpec:
    space: SpectralSpace
    drift: DriftSpec
    diffusion: DiffusionSpec
    gamma: float
    mu: float = float("nan")

    def __post_init__(self):
        g0 = np.asarray(self.diffusion.sigma0, dtype=float)
        if g0.shape != (self.space.n,):
            raise ModelError(f"sigma0 needs {self.space.n} gains, got shape {g0.shape}")
        mu = origin_mu(self.drift, self.diffusion, self.space.n)
        if not math.isnan(self.mu) and abs(mu - self.mu) > 1e-12 * max(1.0, mu):
            raise ModelError(f"declared mu={self.mu} disagrees with computed {mu}")
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return self.space.n

    def b(self, x) -> np.ndarray:
        return self.drift(x)

    def sigma1(self, x) -> np.ndarray:
        return self.diffusion.sigma1(np.asarray(x, dtype=float))

    def noise_gains(self, x) -> np.ndarray:
        """Per-mode gain of ``sigma(x)`` multiplying the increment ``dW``."""
        return self.diffusion.sigma0 + self.sigma1(x)

    def truncate(self, n: int) -> "ModelSpec":
        """The same coefficients on the first ``n`` modes."""
        d = self.diffusion
        diff = DiffusionSpec(d.sigma0[:n].copy(), d.sigma1, d.L2, d.theta1, d.delta1,
                             d.theta2, d.delta2, d.sigma1_kind, d.sigma1_scale)
        return ModelSpec(self.space.truncate(n), self.drift, diff, self.gamma)


def origin_mu(drift: DriftSpec, diffusion: DiffusionSpec, n: int) -> float:
    """``||b(0)||^2 + ||sigma1(0)||_HS^2``."""
    z = np.zeros(n)
    return float(np.sum(drift(z) ** 2) + np.sum(diffusion.sigma1(z) ** 2))


def noise_constants(space: SpectralSpace, sigma0, theta1: float, theta2: float):
    """Default ``(delta1, delta2)`` for a diagonal ``sigma0``.

    On the Laplacian with a constant gain ``g`` these are ``g^2`` times the
    infinite series; on other spectra the sums run over the stored modes only.
    """
    g = np.asarray(sigma0, dtype=float)
    lam = space.eigenvalues
    if space.kind == "laplacian" and np.all(g == g[0]):
        return g[0] ** 2 * delta1_series(theta1), g[0] ** 2 * delta2_series(theta2)
    d1 = 0.5 * float(np.sum(g * g * lam ** (2 * theta1 - 1)))
    d2 = 2.0 ** (theta2 - 1) * float(np.sum(g * g * lam ** (theta2 - 1)))
    return d1, d2


def make_model(space: SpectralSpace, drift: DriftSpec, *, sigma0=1.0,
               sigma1_kind: str = "zero", sigma1_scale: float = 0.0,
               theta1: float = 0.2, theta2: float = 0.4,
               delta1: Optional[float] = None, delta2: Optional[float] = None,
               L2: Optional[float] = None, gamma: Optional[float] = None) -> ModelSpec:
    """Assemble a model, deriving every constant the kinds know analytically."""
    g0 = np.broadcast_to(np.asarray(sigma0, dtype=float), (space.n,)).copy()
    if not 0 < theta1 < 1 or not 0 < theta2 < 1:
        raise ModelError("theta1 and theta2 must lie in (0, 1)")
    canonical = space.kind == "laplacian" and np.all(g0 == g0[0]) and g0[0] != 0
    if canonical:
        if not theta1 < 0.25:
            raise ModelError(f"theta1={theta1} must be < 1/4 for the Laplacian with constant sigma0")
        if not theta2 < 0.5:
            raise ModelError(f"theta2={theta2} must be < 1/2 for the Laplacian with constant sigma0")
    d1, d2 = noise_constants(space, g0, theta1, theta2)
    if delta1 is None:
        delta1 = d1
    elif canonical and delta1 < d1 * (1 - 1e-12):
        raise ModelError(f"declared delta1={delta1} is below the series value {d1}")
    if delta2 is None:
        delta2 = d2
    elif canonical and delta2 < d2 * (1 - 1e-12):
        raise ModelError(f"declared delta2={delta2} is below the series value {d2}")
    s1, L2_kind = sigma1_factory(sigma1_kind, sigma1_scale)
    if L2 is None:
        L2 = L2_kind
    if gamma is None:
        if drift.one_sided is None:
            raise ModelError("gamma must be declared for a custom drift")
        gamma = -2.0 * drift.one_sided - L2_kind ** 2
    diff = DiffusionSpec(g0, s1, float(L2), float(theta1), float(delta1),
                         float(theta2), float(delta2), sigma1_kind, float(sigma1_scale))
    return ModelSpec(space, drift, diff, float(gamma))


# -- derived constants -------------------------------------------------------

@dataclass(frozen=True)
class ConstantsReport:
    alpha: float
    gamma: float
    L1: float
    L2: float
    mu: float
    lambda_1: float
    lambda_n: float
    theta1: float
    theta2: float
    delta1: float
    delta2: float
    Lbar: float
    beta1: float
    rho1: float
    rho2: float
    tau: float
    stepsize_bound_p1: float
    stepsize_bound_p2: float
    violations: tuple = ()

    @property
    def gap(self) -> float:
        """``2 alpha + gamma``, the dissipation margin."""
        return 2 * self.alpha + self.gamma

    @property
    def stationary_theory(self) -> bool:
        return self.gap > 0

    @property
    def stepsize_bound(self) -> float:
        return min(self.stepsize_bound_p1, self.stepsize_bound_p2, 1.0)

    def admissible_p1(self, dt: float) -> bool:
        return self.stationary_theory and dt < min(1.0, self.stepsize_bound_p1)

    def admissible_p2(self, dt: float) -> bool:
        return self.stationary_theory and dt < min(1.0, self.stepsize_bound_p2)

    def admissible(self, dt: float) -> bool:
        return self.stationary_theory and dt < self.stepsize_bound

    @property
    def uniform_error_theory(self) -> bool:
        """``tau < 1``, needed for the uniform-in-time strong error bound."""
        return 0 < self.tau < 1

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["violations"] = list(self.violations)
        out["two_alpha_plus_gamma"] = self.gap
        out["stepsize_bound"] = self.stepsize_bound
        return out


def compute_constants(model: ModelSpec) -> ConstantsReport:
    space, dr, df = model.space, model.drift, model.diffusion
    alpha, gamma = space.alpha, model.gamma
    L1, L2, mu = dr.L1, df.L2, model.mu
    lam_n = space.lambda_n
    Lbar = 2.0 * max(L1 ** 2 + L2 ** 2, mu)
    inv_norm_sq = fractional_power_norm(space, -df.theta1) ** 2
    beta1 = 3.0 * max(lam_n ** 2 + 2 * Lbar, 2 * Lbar * (1 + inv_norm_sq * df.delta1))
    w = abs(14 * alpha - gamma)
    rho1 = 2 + (w ** 2 / 64 + 2 * Lbar + w / 8) * beta1 + 2 * (1 + beta1 + lam_n ** 2 * Lbar)
    lam2 = lam_n ** 2
    rho2 = 6 * (lam2 + Lbar) * (abs(2 * alpha - gamma) + 1) + 3 + 7 * Lbar + lam2 * Lbar + 6 * lam2
    tau = L1 / alpha + L2 / math.sqrt(2 * alpha)
    gap = 2 * alpha + gamma
    violations = []
    if gap > 0:
        b1 = min(1.0, gap ** 2 / (4 * rho1 ** 2))
        b2 = min(1.0, gap ** 2 / (4 * rho2 ** 2))
    else:
        violations.append(f"2*alpha+gamma={gap:.6g} <= 0: no stationary distribution guarantee")
        b1 = b2 = 0.0
    if not tau < 1:
        violations.append(f"tau={tau:.6g} >= 1: uniform-in-time strong error bound unavailable")
    return ConstantsReport(alpha, gamma, L1, L2, mu, space.lambda_1, lam_n, df.theta1, df.theta2,
                           df.delta1, df.delta2, Lbar, beta1, rho1, rho2, tau, b1, b2,
                           tuple(violations))


# -- randomized assumption checks --------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    check: str
    samples: int
    observed: dict
    declared: dict
    passed: bool

    def to_dict(self) -> dict:
        return {"check": self.check, "samples": self.samples, "observed": self.observed,
                "declared": self.declared, "passed": self.passed}


def _sample_pairs(n: int, samples: int, radius: float, rng):
    """Pairs in the ball: half far apart, half at small separation."""
    def ball(m):
        v = rng.standard_normal((m, n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * radius * rng.random((m, 1)) ** (1.0 / n)

    x = ball(samples)
    y = ball(samples)
    near = np.arange(samples) % 2 == 1
    eps = rng.standard_normal((samples, n)) * 1e-3 * radius
    y[near] = x[near] + eps[near]
    same = np.all(x == y, axis=1)
    y[same] += 1e-3 * radius
    return x, y


def validate_h3(model: ModelSpec, samples: int = 2000, radius: float = 2.0,
                rng_seed: int = 0) -> ValidationReport:
    """Falsification test of the declared Lipschitz constants on random pairs."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    x, y = _sample_pairs(model.n, samples, radius, rng)
    dxy = norm(x - y)
    rb = float(np.max(norm(model.b(x) - model.b(y)) / dxy))
    rs = float(np.max(norm(model.sigma1(x) - model.sigma1(y)) / dxy))
    L1, L2 = model.drift.L1, model.diffusion.L2
    ok = rb <= L1 * (1 + 1e-9) + 1e-15 and rs <= L2 * (1 + 1e-9) + 1e-15
    return ValidationReport("H3", samples, {"drift_ratio": rb, "sigma1_ratio": rs},
                            {"L1": L1, "L2": L2}, bool(ok))


def validate_h4(model: ModelSpec, samples: int = 2000, radius: float = 2.0,
                rng_seed: int = 0) -> ValidationReport:
    """Largest sampled value of ``(2<x-y, b(x)-b(y)> + ||s1(x)-s1(y)||^2)/||x-y||^2``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    x, y = _sample_pairs(model.n, samples, radius, rng)
    d = x - y
    num = 2 * np.sum(d * (model.b(x) - model.b(y)), axis=-1) \
        + np.sum((model.sigma1(x) - model.sigma1(y)) ** 2, axis=-1)
    q = float(np.max(num / np.sum(d * d, axis=-1)))
    ok = q <= -model.gamma + 1e-9
    return ValidationReport("H4", samples, {"max_quotient": q}, {"gamma": model.gamma}, bool(ok))


def linear_growth_excess(model: ModelSpec, x) -> float:
    """``max(||b||^2 + ||s1||^2 - Lbar (1 + ||x||^2))`` over the given points."""
    Lbar = compute_constants(model).Lbar
    x = np.atleast_2d(np.asarray(x, dtype=float))
    lhs = np.sum(model.b(x) ** 2, axis=-1) + np.sum(model.sigma1(x) ** 2, axis=-1)
    return float(np.max(lhs - Lbar * (1 + np.sum(x * x, axis=-1))))
