"""Coefficient-space operators D, J, H, V_g and K_lambda.

On monomials D, J, H and V_g are finite sums of weighted shifts
``z^k -> w_k z^(k+s)``. Their action on polynomials is therefore exact, and
with integer or ``Fraction`` coefficients it is exact in rational arithmetic.
Floating point only enters when norms are taken.

For p = 2 the monomials are orthogonal, so in the orthonormal basis
``e_k = z^k / ||z^k||`` a single-term operator is again a weighted shift and
its operator norm is the supremum of its matrix entries.
"""

from __future__ import annotations

import cmath
import logging
import math
import numbers
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .space import (
    SpaceParams,
    TaylorSeries,
    _log_abs_exact,
    monomial_norm_log_array,
    norm_log,
)

logger = logging.getLogger(__name__)

__all__ = [
    "SymbolPolynomial",
    "ShiftTerm",
    "CoeffOperator",
    "OperatorSpec",
    "ConvergenceError",
    "ShiftNorm",
    "MonomialImage",
    "make_differentiation",
    "make_integration",
    "make_hardy",
    "make_volterra",
    "apply",
    "iterate_apply",
    "hardy_iterate_closed",
    "volterra_monomial_iterate_closed",
    "k_lambda_apply",
    "shift_norm_exact_p2",
    "section_matrix",
    "power_sections",
    "largest_singular_value",
    "operator_norm_p2",
    "operator_norm_lower",
    "operator_norm_lower_log",
]

KINDS = ("derivative", "integration", "hardy", "volterra")


class ConvergenceError(RuntimeError):
    pass


class SymbolPolynomial(TaylorSeries):
    """Symbol ``g(z) = a_l z^l + ... + a_0`` of a Volterra-type operator."""

    @property
    def leading(self):
        return self.coeffs[-1]

    def is_monomial_plus_constant(self) -> bool:
        """True for symbols of the form ``a z^l + b``."""
        return all(c == 0 for c in self.coeffs[1:-1])


@dataclass(frozen=True)
class ShiftTerm:
    """``z^k -> w_k z^(k + shift)``.

    ``kind`` fixes the weight rule: derivative ``w_k = k``; integration and
    hardy ``w_k = 1/(k+1)``; volterra ``w_k = j a / (k + j)`` for the symbol
    term ``a z^j``.
    """

    kind: str
    shift: int
    j: int = 0
    a: object = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weight rule {self.kind!r}")

    def weight(self, k: int):
        if self.kind == "derivative":
            return k
        if self.kind in ("integration", "hardy"):
            return Fraction(1, k + 1)
        return Fraction(self.j, k + self.j) * self.a

    def log_weight_product(self, k: np.ndarray, n: int) -> np.ndarray:
        """``sum_{i<n} log|w_(k + i s)|`` along the orbit of ``z^k`` (``-inf`` when it dies)."""
        k = np.asarray(k, dtype=float)
        if self.kind == "derivative":
            out = np.full(k.shape, -np.inf)
            live = k >= n
            out[live] = gammaln(k[live] + 1) - gammaln(k[live] - n + 1)
            return out
        if self.kind == "integration":
            return gammaln(k + 1) - gammaln(k + n + 1)
        if self.kind == "hardy":
            return -n * np.log(k + 1)
        x = k / self.j
        return n * _log_abs_exact(self.a) + gammaln(x + 1) - gammaln(x + n + 1)

    def phase(self, n: int) -> float:
        if self.kind != "volterra":
            return 0.0
        return n * cmath.phase(complex(self.a))

    def weight_asymptotics(self) -> tuple[float, float]:
        """``(beta, log C)`` with ``|w_k| ~ C k^beta`` as k grows."""
        if self.kind == "derivative":
            return 1.0, 0.0
        if self.kind in ("integration", "hardy"):
            return -1.0, 0.0
        return -1.0, _log_abs_exact(self.a) + math.log(self.j)


@dataclass(frozen=True)
class CoeffOperator:
    terms: tuple[ShiftTerm, ...]
    name: str

    @property
    def max_shift(self) -> int:
        return max((t.shift for t in self.terms), default=0)

    @property
    def min_shift(self) -> int:
        return min((t.shift for t in self.terms), default=0)

    @property
    def is_single_term(self) -> bool:
        return len(self.terms) == 1


def make_differentiation() -> CoeffOperator:
    return CoeffOperator((ShiftTerm("derivative", -1),), "D")


def make_integration() -> CoeffOperator:
    return CoeffOperator((ShiftTerm("integration", 1),), "J")


def make_hardy() -> CoeffOperator:
    return CoeffOperator((ShiftTerm("hardy", 0),), "H")


def make_volterra(g: SymbolPolynomial | TaylorSeries | Iterable) -> CoeffOperator:
    """V_g f = int_0^z g' f. The constant term of g is dropped."""
    if not isinstance(g, TaylorSeries):
        g = SymbolPolynomial(tuple(g))
    terms = tuple(ShiftTerm("volterra", j, j, g[j]) for j in range(1, g.degree + 1) if g[j] != 0)
    if not terms:
        warnings.warn("constant symbol: V_g is the zero operator", stacklevel=2)
    coeffs = ",".join(str(c) for c in g.coeffs)
    return CoeffOperator(terms, f"V[{coeffs}]")


def apply(op: CoeffOperator, f: TaylorSeries) -> TaylorSeries:
    out = [0] * (f.degree + max(op.max_shift, 0) + 1)
    for term in op.terms:
        for k, c in enumerate(f.coeffs):
            if c == 0 or k + term.shift < 0:
                continue
            w = term.weight(k)
            if w != 0:
                out[k + term.shift] += w * c
    return TaylorSeries(tuple(out))


def iterate_apply(op: CoeffOperator, n: int, f: TaylorSeries) -> TaylorSeries:
    if n < 0:
        raise ValueError("n must be nonnegative")
    for _ in range(n):
        f = apply(op, f)
    return f


def hardy_iterate_closed(n: int, f: TaylorSeries) -> TaylorSeries:
    """H^n f = sum a_k z^k / (k+1)^n."""
    return TaylorSeries(tuple(c * Fraction(1, (k + 1) ** n) for k, c in enumerate(f.coeffs)))


class MonomialImage(NamedTuple):
    log_abs: float
    phase: float
    degree: int

    @property
    def coefficient(self) -> complex:
        return cmath.rect(math.exp(self.log_abs), self.phase)


def volterra_monomial_iterate_closed(a_l, l: int, n: int, k: int) -> MonomialImage:
    """V_{a z^l}^n (z^k) = a^n l^n z^(ln+k) / prod_{j=1..n} (jl + k), in log-magnitude form."""
    if l < 1 or n < 0 or k < 0:
        raise ValueError("need l >= 1, n >= 0, k >= 0")
    log_abs = n * (_log_abs_exact(a_l) + math.log(l)) - math.fsum(math.log(j * l + k) for j in range(1, n + 1))
    return MonomialImage(log_abs, n * cmath.phase(complex(a_l)), l * n + k)


# ------------------------------------------------------------------ K_lambda


def _as_positive_int(m) -> int:
    if isinstance(m, numbers.Integral):
        mi = int(m)
    elif isinstance(m, numbers.Real) and float(m).is_integer():
        mi = int(m)
    else:
        raise ValueError(f"K_lambda needs a positive integer m, got {m!r}")
    if mi < 1:
        raise ValueError(f"K_lambda needs a positive integer m, got {m!r}")
    return mi


def _exp_series(c, step: int, N: int) -> list:
    """Coefficients of exp(c z^step) up to degree N."""
    out = [0] * (N + 1)
    term = Fraction(1)
    j = 0
    while j * step <= N:
        out[j * step] = term
        j += 1
        term = term * c / j
    return out


def _series_product(a: list, b: list, N: int) -> list:
    out = [0] * (N + 1)
    for i, x in enumerate(a):
        if x == 0 or i > N:
            continue
        for j, y in enumerate(b[: N - i + 1]):
            if y != 0:
                out[i + j] += x * y
    return out


def k_lambda_apply(a, lam, m, f: TaylorSeries, N: int, method: str = "beta") -> TaylorSeries:
    """Taylor coefficients of ``K_lambda f = a m e^(lam z^m) int_0^z e^(-lam w^m) w^(m-1) f(w) dw``
    up to degree ``N``.

    Every coefficient of degree d only involves input terms of degree <= d,
    so all returned coefficients are exact truncations of the entire function.

    ``method="beta"`` expands ``a m z^m int_0^1 e^(lam z^m (1-t^m)) t^(m-1) f(tz) dt``
    termwise: ``b_k z^k`` contributes ``a b_k lam^j prod_{i=0..j} m/(k + m(i+1))``
    at degree ``k + m(j+1)``. All terms are positive multiples of ``lam^j``,
    so there is no cancellation. ``method="series"`` multiplies truncated
    series, integrates, and multiplies again.
    """
    m = _as_positive_int(m)
    if N < f.degree + m:
        raise ValueError(f"truncation degree N={N} < deg f + m = {f.degree + m}")
    if method == "series":
        e_minus = _exp_series(-lam, m, N)
        inner = _series_product(f.coeffs, [0] * (m - 1) + e_minus, N - 1)
        integrated = [0] + [c * Fraction(1, i + 1) for i, c in enumerate(inner)]
        integrated = [a * m * c for c in integrated]
        return TaylorSeries(tuple(_series_product(integrated, _exp_series(lam, m, N), N)))
    if method != "beta":
        raise ValueError(f"unknown method {method!r}")
    out = [0] * (N + 1)
    for k, b in enumerate(f.coeffs):
        if b == 0:
            continue
        coef = Fraction(m, k + m) * a * b
        d = k + m
        j = 0
        while d <= N:
            out[d] += coef
            if lam == 0:
                break
            j += 1
            d += m
            coef = coef * lam * Fraction(m, d)
    return TaylorSeries(tuple(out))


# ------------------------------------------------------------- p = 2 norms


class ShiftNorm(NamedTuple):
    log_value: float
    certified: bool
    argmax: int | None  # None when the supremum is the k -> inf limit
    k_cap: int


def _entry_logs(space: SpaceParams, term: ShiftTerm, n: int, K: int) -> np.ndarray:
    k = np.arange(K + 1)
    target = k + n * term.shift
    out = np.full(k.shape, -np.inf)
    live = target >= 0
    L_src = monomial_norm_log_array(space, k[live])
    L_dst = monomial_norm_log_array(space, target[live])
    out[live] = term.log_weight_product(k[live], n) + L_dst - L_src
    return out


def _entry_limit(space: SpaceParams, term: ShiftTerm, n: int) -> float:
    """lim_{k->inf} of the log entries; monomial norm ratios behave like (k/(m alpha))^(ns/m)."""
    if n == 0:
        return 0.0
    beta, logc = term.weight_asymptotics()
    s, m = term.shift, space.m
    expo = beta + s / m
    if abs(expo) > 1e-12:
        return math.inf if expo > 0 else -math.inf
    return n * (logc - (s / m) * math.log(m * space.alpha))


def _certify(vals: np.ndarray, limit: float) -> tuple[float, bool, int | None]:
    K = vals.size - 1
    kstar = int(np.argmax(vals))
    sup = float(vals[kstar])
    tail = vals[K // 2 :]
    if math.isinf(limit) and limit > 0:
        return sup, False, kstar
    if limit > sup:
        rising = bool(np.all(np.diff(tail[np.isfinite(tail)]) >= -1e-13))
        return limit, rising, None
    inside = kstar <= K // 2 and (K // 2 == 0 or float(tail.max()) < sup or kstar == K // 2)
    return sup, inside, kstar


def shift_norm_exact_p2(
    space: SpaceParams,
    op: CoeffOperator,
    n: int = 1,
    K: int | None = None,
    cap: int = 1 << 20,
) -> ShiftNorm:
    """log ||T^n|| on F^2 for a single-term operator T.

    The entries of T^n in the orthonormal monomial basis are
    ``prod_i w_(k+is) * ||z^(k+ns)|| / ||z^k||``. With ``K`` given, the sup is
    taken over ``k <= K`` only and is certified only when no larger entry
    exists beyond ``K``. With ``K=None`` the cap is doubled until the
    result is unchanged over two consecutive doublings; the closed-form
    ``k -> inf`` limit of the entries is included in the sup, which settles
    sequences that increase towards their limit (D on m = 1).
    """
    if space.p != 2:
        raise ValueError("shift_norm_exact_p2 needs p=2")
    if not op.is_single_term:
        raise ValueError("shift_norm_exact_p2 needs a single-term operator")
    term = op.terms[0]
    limit = _entry_limit(space, term, n)
    if K is not None:
        vals = _entry_logs(space, term, n, K)
        kstar = int(np.argmax(vals))
        _, cert, _ = _certify(vals, limit)
        return ShiftNorm(float(vals[kstar]), cert and float(vals[kstar]) >= limit, kstar, K)
    K = max(64, 4 * n * abs(term.shift) + 16)
    history: list[float] = []
    while True:
        val, cert, kstar = _certify(_entry_logs(space, term, n, K), limit)
        history.append(val)
        stable = len(history) >= 3 and abs(history[-1] - history[-3]) <= 1e-12 * max(1.0, abs(val))
        if cert and stable:
            return ShiftNorm(val, True, kstar, K)
        if K >= cap:
            logger.info("shift norm not certified at cap K=%d (%s, n=%d)", K, op.name, n)
            return ShiftNorm(val, False, kstar, K)
        K *= 2


def section_matrix(space: SpaceParams, op: CoeffOperator, cols: int, rows: int | None = None) -> np.ndarray:
    """Matrix of ``op`` in the orthonormal basis, restricted to the first ``cols`` basis vectors.

    Rows default to ``cols + max(max_shift, 0)``, which holds the image of every
    column exactly; smaller ``rows`` truncate the codomain.
    """
    if space.p != 2:
        raise ValueError("section_matrix needs p=2")
    if rows is None:
        rows = cols + max(op.max_shift, 0)
    A = np.zeros((rows, cols), dtype=complex)
    L = monomial_norm_log_array(space, np.arange(max(rows, cols) + max(op.max_shift, 0) + 1))
    for term in op.terms:
        for k in range(cols):
            r = k + term.shift
            if r < 0 or r >= rows:
                continue
            w = complex(term.weight(k))
            if w != 0:
                A[r, k] += w * math.exp(L[r] - L[k])
    return A


def power_sections(space: SpaceParams, op: CoeffOperator, nmax: int, cols: int):
    """Yield ``(n, X_n)`` for n = 1..nmax where X_n is T^n on the first ``cols``
    basis vectors, with enough rows that no image is truncated."""
    size = cols + nmax * max(op.max_shift, 0)
    M = section_matrix(space, op, size, size)
    X = np.eye(size, cols, dtype=complex)
    for n in range(1, nmax + 1):
        X = M @ X
        yield n, X


def largest_singular_value(A: np.ndarray, tol: float = 1e-10, max_iter: int = 20000) -> float:
    """Power iteration on ``A^H A``, started at the heaviest column."""
    if A.size == 0:
        return 0.0
    col_norms = np.linalg.norm(A, axis=0)
    if not np.any(col_norms):
        return 0.0
    x = np.full(A.shape[1], 1e-3 / math.sqrt(A.shape[1]), dtype=complex)
    x[int(np.argmax(col_norms))] += 1.0
    x /= np.linalg.norm(x)
    sigma_old = np.linalg.norm(A @ x)
    for _ in range(max_iter):
        y = A.conj().T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        sigma = np.linalg.norm(A @ x)
        if abs(sigma - sigma_old) <= tol * sigma:
            return float(sigma)
        sigma_old = sigma
    raise ConvergenceError(f"power iteration did not reach rel. tol {tol} in {max_iter} steps")


def operator_norm_p2(space: SpaceParams, op: CoeffOperator, K: int = 200, tol: float = 1e-10) -> float:
    """Largest singular value of the K-column finite section (a lower bound for multi-term operators)."""
    return largest_singular_value(section_matrix(space, op, K), tol)


def _default_testset(op: CoeffOperator, n: int, k_max: int) -> list[TaylorSeries]:
    lo = max(0, -op.min_shift * n)
    return [TaylorSeries.monomial(k) for k in range(lo, lo + k_max + 1)]


def operator_norm_lower_log(
    space: SpaceParams,
    op: CoeffOperator,
    testset: Iterable[TaylorSeries] | None = None,
    n: int = 1,
    k_max: int = 60,
) -> float:
    """max over the test set of log(||T^n f|| / ||f||); a lower bound on log ||T^n||.

    The default test set is ``k_max + 1`` consecutive monomials starting at
    the lowest degree that survives ``n`` backward shifts.
    """
    if testset is None:
        testset = _default_testset(op, n, k_max)
    best = -math.inf
    for f in testset:
        lf = norm_log(space, f)
        if lf == -math.inf:
            continue
        best = max(best, norm_log(space, iterate_apply(op, n, f)) - lf)
    return best


def operator_norm_lower(space, op, testset=None, n: int = 1, k_max: int = 60) -> float:
    return math.exp(operator_norm_lower_log(space, op, testset, n, k_max))


# ----------------------------------------------------------- operator specs


@dataclass(frozen=True)
class OperatorSpec:
    """Parsed operator description: ``D``, ``J``, ``H``, ``V:a0,a1,...`` or ``K:a,lambda,m``."""

    kind: str
    params: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "OperatorSpec":
        text = text.strip()
        head, _, rest = text.partition(":")
        head = head.strip().upper()
        if head in ("D", "J", "H"):
            if rest.strip():
                raise ValueError(f"operator {head} takes no parameters")
            return cls(head)
        values = tuple(_parse_number(v) for v in rest.split(",") if v.strip())
        if head == "V":
            if not values:
                raise ValueError("V needs symbol coefficients, e.g. V:0,0.3")
            return cls("V", values)
        if head == "K":
            if len(values) != 3:
                raise ValueError("K needs a,lambda,m")
            _as_positive_int(values[2].real if isinstance(values[2], complex) else values[2])
            return cls("K", values)
        raise ValueError(f"unknown operator {text!r}")

    def label(self) -> str:
        if not self.params:
            return self.kind
        return f"{self.kind}:" + ",".join(_fmt_number(v) for v in self.params)

    def symbol(self) -> SymbolPolynomial:
        if self.kind == "V":
            return SymbolPolynomial(self.params)
        if self.kind == "J":
            return SymbolPolynomial((0, 1))
        if self.kind == "K" and self.params[1] == 0:
            a, _, m = self.params
            return SymbolPolynomial((0,) * int(m) + (a,))
        raise ValueError(f"{self.label()} has no polynomial symbol")

    def build(self) -> CoeffOperator:
        if self.kind == "D":
            return make_differentiation()
        if self.kind == "J":
            return make_integration()
        if self.kind == "H":
            return make_hardy()
        if self.kind == "V" or (self.kind == "K" and self.params[1] == 0):
            return make_volterra(self.symbol())
        raise ValueError("K_lambda with lambda != 0 is not a finite weighted shift")


def _parse_number(s: str):
    s = s.strip().replace(" ", "")
    try:
        return Fraction(s) if "/" in s else int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return complex(s.replace("i", "j"))


def _fmt_number(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:g}{v.imag:+g}j"
    if isinstance(v, Fraction):
        return str(v)
    return f"{v:g}" if isinstance(v, float) else str(v)
