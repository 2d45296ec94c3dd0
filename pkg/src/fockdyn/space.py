"""Generalized Fock spaces F^p_(alpha, m) and their norms.

Norms of monomials are always handled as logarithms: ``||z^n||`` leaves the
double range near n ~ 150 for m = 1, so every product or ratio of monomial
norms in this package is composed in the log domain.

Three independent routes to the norm of a polynomial are provided:

* :func:`norm_parseval` -- exact for p = 2 (monomials are orthogonal under a
  radial weight),
* :func:`norm_quadrature` -- adaptive radial quadrature of the integral means,
  any finite p,
* :func:`norm_sup` -- a grid estimate of the growth-type norm for p = inf.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaincc, gammaln

from .quadrature import QuadratureError, adaptive_gauss

__all__ = [
    "SpaceParams",
    "TaylorSeries",
    "QuadratureConfig",
    "SupNormEstimate",
    "QuadratureError",
    "monomial_norm_log",
    "monomial_norm_log_array",
    "monomial_norm_sup_log",
    "monomial_norm_asymptotic_log",
    "integral_mean",
    "norm_quadrature",
    "norm_quadrature_log",
    "norm_parseval",
    "norm_parseval_log",
    "norm_sup",
    "sup_norm_estimate",
    "norm_log",
    "tail_radius",
]

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SpaceParams:
    """The triple (p, alpha, m); ``p`` may be ``math.inf``."""

    p: float
    alpha: float
    m: float

    def __post_init__(self):
        for name in ("p", "alpha", "m"):
            v = getattr(self, name)
            if not isinstance(v, numbers.Real) or math.isnan(v):
                raise ValueError(f"{name} must be a real number, got {v!r}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1 (or inf), got {self.p}")
        if not (0 < self.alpha < math.inf):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if not (0 < self.m < math.inf):
            raise ValueError(f"m must be positive and finite, got {self.m}")

    @property
    def is_sup(self) -> bool:
        return math.isinf(self.p)

    @property
    def m_is_integer(self) -> bool:
        return float(self.m).is_integer()

    def label(self) -> str:
        p = "inf" if self.is_sup else f"{self.p:g}"
        return f"p={p},alpha={self.alpha:g},m={self.m:g}"


def _is_zero(c) -> bool:
    return c == 0


@dataclass(frozen=True)
class TaylorSeries:
    """Truncated entire function ``sum_k a_k z^k``.

    Coefficients are kept as given (int, Fraction, float or complex) so that
    coefficient-space operators stay exact on exact inputs. Trailing zeros are
    trimmed; the zero series is stored as ``(0,)``.
    """

    coeffs: tuple = field(default=(0,))

    def __post_init__(self):
        c = tuple(self.coeffs)
        end = len(c)
        while end > 1 and _is_zero(c[end - 1]):
            end -= 1
        object.__setattr__(self, "coeffs", c[:end] if end else (0,))

    @classmethod
    def monomial(cls, n: int, coefficient=1) -> "TaylorSeries":
        return cls((0,) * n + (coefficient,))

    @classmethod
    def zero(cls) -> "TaylorSeries":
        return cls((0,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and _is_zero(self.coeffs[0])

    def __getitem__(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def __len__(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: "TaylorSeries") -> "TaylorSeries":
        n = max(len(self), len(other))
        return TaylorSeries(tuple(self[k] + other[k] for k in range(n)))

    def __sub__(self, other: "TaylorSeries") -> "TaylorSeries":
        return self + (-other)

    def __neg__(self) -> "TaylorSeries":
        return TaylorSeries(tuple(-c for c in self.coeffs))

    def __mul__(self, scalar) -> "TaylorSeries":
        if isinstance(scalar, TaylorSeries):
            return NotImplemented
        return TaylorSeries(tuple(scalar * c for c in self.coeffs))

    __rmul__ = __mul__

    def to_array(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs], dtype=complex)

    def __call__(self, z):
        # Horner
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c in reversed(self.coeffs):
            out = out * z + complex(c)
        return out

    def monomial_support(self) -> list[int]:
        return [k for k, c in enumerate(self.coeffs) if not _is_zero(c)]


@dataclass(frozen=True)
class QuadratureConfig:
    theta_points: int = 128
    radial_rel_tol: float = 1e-11
    tail_eps: float = 1e-15
    max_subdivisions: int = 4000

    def __post_init__(self):
        if self.theta_points < 1:
            raise ValueError("theta_points must be positive")
        if not self.radial_rel_tol > 0 or not self.tail_eps > 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")


def _require_finite_p(space: SpaceParams, what: str) -> None:
    if space.is_sup:
        raise ValueError(f"{what} needs finite p; use the sup-norm route for p=inf")


# ---------------------------------------------------------------- monomials


def monomial_norm_log(space: SpaceParams, n: int) -> float:
    """log ||z^n|| from ``||z^n||^p = 2 pi Gamma((pn+2)/m) / (m (p alpha)^((pn+2)/m))``."""
    _require_finite_p(space, "monomial_norm_log")
    if n < 0:
        raise ValueError("n must be nonnegative")
    p, a, m = space.p, space.alpha, space.m
    x = (p * n + 2.0) / m
    return (LOG_2PI + math.lgamma(x) - math.log(m) - x * math.log(p * a)) / p


def monomial_norm_log_array(space: SpaceParams, ns) -> np.ndarray:
    """Vectorized :func:`monomial_norm_log` (finite p) or :func:`monomial_norm_sup_log`."""
    ns = np.asarray(ns, dtype=float)
    if space.is_sup:
        out = np.zeros_like(ns)
        pos = ns > 0
        out[pos] = ns[pos] / space.m * (np.log(ns[pos] / (space.m * space.alpha)) - 1.0)
        return out
    p, a, m = space.p, space.alpha, space.m
    x = (p * ns + 2.0) / m
    return (LOG_2PI + gammaln(x) - math.log(m) - x * math.log(p * a)) / p


def monomial_norm_sup_log(space: SpaceParams, n: int) -> float:
    """log of ``sup_r r^n exp(-alpha r^m)``; exact."""
    if not space.is_sup:
        raise ValueError("monomial_norm_sup_log needs p=inf")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 0.0
    m, a = space.m, space.alpha
    return n / m * (math.log(n / (m * a)) - 1.0)


def monomial_norm_asymptotic_log(space: SpaceParams, n: int) -> float:
    """Leading-order growth ``(n/m + 2/(mp) - 1/(2p)) log(n/(m e alpha))``.

    Only meaningful as a ratio diagnostic against :func:`monomial_norm_log`.
    """
    _require_finite_p(space, "monomial_norm_asymptotic_log")
    if n < 1:
        raise ValueError("n must be >= 1")
    p, a, m = space.p, space.alpha, space.m
    return (n / m + 2.0 / (m * p) - 1.0 / (2.0 * p)) * math.log(n / (m * math.e * a))


# ------------------------------------------------------ circle evaluations


def _coeff_logs(coeffs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(coeffs))


def _phases(coeffs: np.ndarray) -> np.ndarray:
    mag = np.abs(coeffs)
    return np.where(mag > 0, coeffs / np.where(mag > 0, mag, 1.0), 0.0)


def _shifted_exp(exps: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    # exps already carries log|a_k|; -inf entries (zero coefficients) map to 0
    with np.errstate(invalid="ignore"):
        return np.exp(np.where(np.isfinite(exps), exps - log_scale[:, None], -np.inf))


def _scaled_circle_values(coeffs: np.ndarray, log_r: np.ndarray, theta_points: int):
    """Values of f on circles, scaled to avoid overflow.

    Returns ``(log_scale, g)`` with ``f(r_i e^{i theta_j}) = exp(log_scale[i]) * g[i, j]``
    on the uniform grid ``theta_j = 2 pi j / theta_points``.
    """
    k = np.arange(coeffs.size, dtype=float)
    la = _coeff_logs(coeffs)
    with np.errstate(invalid="ignore"):
        kl = np.where(k[None, :] == 0, 0.0, k[None, :] * log_r[:, None])
    exps = la[None, :] + kl
    log_scale = exps.max(axis=1)
    c = _phases(coeffs)[None, :] * _shifted_exp(exps, log_scale)
    g = theta_points * np.fft.ifft(c, n=theta_points, axis=1)
    return log_scale, g


def _log_power_mean(coeffs: np.ndarray, log_r: np.ndarray, p: float, theta_points: int) -> np.ndarray:
    """log M_p^p(f, r) for each radius."""
    out = np.empty(log_r.size)
    chunk = 1024
    for s in range(0, log_r.size, chunk):
        ls, g = _scaled_circle_values(coeffs, log_r[s : s + chunk], theta_points)
        mean = np.mean(np.abs(g) ** p, axis=1)
        with np.errstate(divide="ignore"):
            out[s : s + chunk] = p * ls + np.log(mean)
    return out


def _check_theta(cfg: QuadratureConfig, degree: int) -> None:
    if cfg.theta_points < 2 * degree + 2:
        raise ValueError(
            f"theta_points={cfg.theta_points} too small for degree {degree} "
            f"(need >= {2 * degree + 2})"
        )


def integral_mean(f: TaylorSeries, r: float, p: float, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """M_p(f, r) by the periodic trapezoid rule; exact for p = 2."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if not (1 <= p < math.inf):
        raise ValueError("p must lie in [1, inf)")
    _check_theta(cfg, f.degree)
    if f.is_zero:
        return 0.0
    if r == 0:
        return abs(complex(f.coeffs[0]))
    lm = _log_power_mean(f.to_array(), np.array([math.log(r)]), p, cfg.theta_points)[0]
    return math.exp(lm / p)


# ---------------------------------------------------------------- radii


def _tail_fraction(space: SpaceParams, degree: int, R: float) -> float:
    s = (space.p * degree + 2.0) / space.m
    return float(gammaincc(s, space.p * space.alpha * R**space.m))


def _sup_log_profile(space: SpaceParams, degree: int, R: float) -> float:
    # log of r^d e^{-alpha r^m} relative to its maximum
    return degree * math.log(R) - space.alpha * R**space.m - monomial_norm_sup_log(space, degree)


def tail_radius(space: SpaceParams, degree: int, eps: float) -> float:
    """Radius beyond which the top monomial carries less than ``eps`` of its mass.

    For finite p the mass is that of ``r^(p d + 1) e^(-p alpha r^m)``; for p = inf
    it is the profile ``r^d e^(-alpha r^m)`` relative to its peak value.
    The search starts at the profile peak, inflates by 25 % steps until the
    tail test passes and then bisects back to the smallest passing radius.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if not eps > 0:
        raise ValueError("eps must be positive")
    p, a, m = space.p, space.alpha, space.m
    if space.is_sup:
        r0 = (max(degree, 1) / (m * a)) ** (1.0 / m)
        log_eps = math.log(eps)

        def passes(R):
            return _sup_log_profile(space, degree, R) < log_eps

    else:
        r0 = ((p * degree + 1.0) / (p * a * m)) ** (1.0 / m)

        def passes(R):
            return _tail_fraction(space, degree, R) < eps

    hi = r0
    while not passes(hi):
        hi *= 1.25
    lo = hi / 1.25 if hi > r0 else 0.0
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------- norms


def norm_quadrature_log(space: SpaceParams, f: TaylorSeries, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """log ||f|| by adaptive radial quadrature of ``2 pi M_p^p(f,r) r e^{-p alpha r^m}``."""
    _require_finite_p(space, "norm_quadrature")
    _check_theta(cfg, f.degree)
    if f.is_zero:
        return -math.inf
    p, a, m = space.p, space.alpha, space.m
    coeffs = f.to_array()
    # |f|^p is bounded by (N+1)^(p-1) sum |a_k|^p r^(kp), hence the deflated eps
    eps = cfg.tail_eps / (f.degree + 1) ** p
    R = tail_radius(space, f.degree, eps)

    def log_integrand(r: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            lr = np.log(r)
        return LOG_2PI + _log_power_mean(coeffs, lr, p, cfg.theta_points) + lr - p * a * r**m

    probe = np.linspace(0.0, R, 513)[1:]
    shift = float(np.max(log_integrand(probe)))

    def integrand(r: np.ndarray) -> np.ndarray:
        return np.exp(log_integrand(r) - shift)

    value, _, _ = adaptive_gauss(integrand, 0.0, R, cfg.radial_rel_tol, cfg.max_subdivisions)
    if not value > 0:
        raise QuadratureError("radial integral vanished")
    return (shift + math.log(value)) / p


def norm_quadrature(space: SpaceParams, f: TaylorSeries, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    return math.exp(norm_quadrature_log(space, f, cfg))


def norm_parseval_log(space: SpaceParams, f: TaylorSeries) -> float:
    if space.p != 2:
        raise ValueError("norm_parseval needs p=2")
    if f.is_zero:
        return -math.inf
    c = f.to_array()
    ks = np.arange(c.size)
    terms = 2.0 * (_coeff_logs(c) + monomial_norm_log_array(space, ks))
    top = terms.max()
    return 0.5 * (top + math.log(np.sum(np.exp(terms - top))))


def norm_parseval(space: SpaceParams, f: TaylorSeries) -> float:
    """Exact F^2 norm ``sqrt(sum |a_k|^2 ||z^k||^2)``."""
    return math.exp(norm_parseval_log(space, f))


@dataclass(frozen=True)
class SupNormEstimate:
    """Grid maximum of ``e^{-alpha r^m} |f(r e^{i theta})|``; never exceeds the true norm."""

    log_value: float
    radius: float
    theta: float
    radial_points: int
    theta_points: int
    max_radius: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def _log_weighted_direct(coeffs, space, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # (len(r), len(theta)) array of log(e^{-alpha r^m} |f|)
    with np.errstate(divide="ignore"):
        lr = np.log(r)
    k = np.arange(coeffs.size, dtype=float)
    la = _coeff_logs(coeffs)
    with np.errstate(invalid="ignore"):
        kl = np.where(k[None, :] == 0, 0.0, k[None, :] * lr[:, None])
    exps = la[None, :] + kl
    ls = exps.max(axis=1)
    c = _phases(coeffs)[None, :] * _shifted_exp(exps, ls)
    vals = c @ np.exp(1j * np.outer(k, theta))
    with np.errstate(divide="ignore"):
        return ls[:, None] + np.log(np.abs(vals)) - space.alpha * r[:, None] ** space.m


def sup_norm_estimate(
    space: SpaceParams,
    f: TaylorSeries,
    radial_points: int = 3000,
    theta_points: int | None = None,
    zoom_steps: int = 4,
) -> SupNormEstimate:
    """Maximize the weighted modulus over a geometric radial grid and a uniform
    angular grid, then zoom around the best node. All candidates are actual
    function values, so the estimate is biased low."""
    if not space.is_sup:
        raise ValueError("norm_sup needs p=inf")
    if f.is_zero:
        return SupNormEstimate(-math.inf, 0.0, 0.0, 0, 0, 0.0)
    coeffs = f.to_array()
    R = tail_radius(space, f.degree, 1e-18)
    if theta_points is None:
        theta_points = max(256, 1 << math.ceil(math.log2(4 * (f.degree + 1))))
    radii = np.concatenate([[0.0], np.geomspace(R * 1e-8, R, radial_points)])
    with np.errstate(divide="ignore"):
        lr = np.log(radii)
    best = (-math.inf, 0, 0)
    chunk = 512
    for s in range(0, radii.size, chunk):
        ls, g = _scaled_circle_values(coeffs, lr[s : s + chunk], theta_points)
        with np.errstate(divide="ignore"):
            vals = ls[:, None] + np.log(np.abs(g)) - space.alpha * radii[s : s + chunk, None] ** space.m
        i, j = np.unravel_index(np.nanargmax(vals), vals.shape)
        if vals[i, j] > best[0]:
            best = (float(vals[i, j]), s + i, j)
    log_best, i, j = best
    r_best = radii[i]
    t_best = 2 * math.pi * j / theta_points
    r_lo, r_hi = radii[max(i - 1, 0)], radii[min(i + 1, radii.size - 1)]
    dt = 2 * math.pi / theta_points
    for _ in range(zoom_steps):
        rs = np.linspace(r_lo, r_hi, 33)
        ts = t_best + np.linspace(-dt, dt, 33)
        vals = _log_weighted_direct(coeffs, space, rs, ts)
        a, b = np.unravel_index(np.nanargmax(vals), vals.shape)
        if vals[a, b] > log_best:
            log_best, r_best, t_best = float(vals[a, b]), rs[a], ts[b]
        hr = (r_hi - r_lo) / 32
        r_lo, r_hi = max(r_best - 2 * hr, 0.0), r_best + 2 * hr
        dt = dt / 8
    return SupNormEstimate(log_best, float(r_best), float(t_best % (2 * math.pi)), radial_points + 1, theta_points, R)


def norm_sup(space: SpaceParams, f: TaylorSeries, radial_points: int = 3000, theta_points: int | None = None) -> float:
    """Lower-biased estimate of ``||f||_(inf, alpha, m)``; see :func:`sup_norm_estimate`."""
    return sup_norm_estimate(space, f, radial_points, theta_points).value


def norm_log(space: SpaceParams, f: TaylorSeries, cfg: QuadratureConfig | None = None) -> float:
    """log ||f|| by the best available route.

    Monomials use the closed form for every p. Otherwise p = 2 uses Parseval,
    other finite p use quadrature and p = inf uses the grid estimate.
    """
    support = f.monomial_support()
    if not support:
        return -math.inf
    if len(support) == 1:
        k = support[0]
        c = f.coeffs[k]
        lc = _log_abs_exact(c)
        if space.is_sup:
            return lc + monomial_norm_sup_log(space, k)
        return lc + monomial_norm_log(space, k)
    if space.is_sup:
        return sup_norm_estimate(space, f).log_value
    if space.p == 2:
        return norm_parseval_log(space, f)
    if cfg is None:
        cfg = QuadratureConfig(theta_points=max(128, 1 << math.ceil(math.log2(2 * f.degree + 2))))
    return norm_quadrature_log(space, f, cfg)


def _log_abs_exact(c) -> float:
    """log|c| without overflow for big rationals."""
    if isinstance(c, Fraction):
        return math.log(abs(c.numerator)) - math.log(c.denominator)
    if isinstance(c, numbers.Integral):
        return math.log(abs(c))
    return math.log(abs(complex(c)))
