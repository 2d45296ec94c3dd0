"""Iterate-norm sequences and the probes built on them.

Every probe returns a report dataclass with its raw sequence, the fitted
quantities and a verdict. Sequences are kept in log form throughout, because
iterate norms over- or underflow doubles long before the ranges used here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .operators import (
    CoeffOperator,
    operator_norm_lower_log,
    power_sections,
    shift_norm_exact_p2,
)
from .space import SpaceParams, monomial_norm_log

__all__ = [
    "ProbeVerdict",
    "OrbitVerdict",
    "NormRow",
    "OrbitReport",
    "SpectralReport",
    "ErgodicReport",
    "RittReport",
    "HypercyclicityReport",
    "iterate_norm_sequence",
    "gelfand_estimate",
    "cesaro_report",
    "ritt_sequence",
    "d_hypercyclicity_sequence",
    "default_columns",
]

SLOPE_THRESHOLD = 0.05
NOISE_BAND = 1e-9


class ProbeVerdict(str, enum.Enum):
    TRUE = "true"
    FALSE = "false"
    INCONCLUSIVE = "inconclusive"


class OrbitVerdict(str, enum.Enum):
    GROWING = "growing"
    DECAYING = "decaying"
    BOUNDED_SO_FAR = "bounded-so-far"


class NormRow(tuple):
    """``(n, value, certified)``."""

    __slots__ = ()

    def __new__(cls, n: int, value: float, certified: bool):
        return super().__new__(cls, (int(n), float(value), bool(certified)))

    n = property(lambda self: self[0])
    value = property(lambda self: self[1])
    certified = property(lambda self: self[2])


def _rows(series: str, rows) -> list[tuple[str, int, float, bool]]:
    return [(series, r[0], r[1], r[2]) for r in rows]


def _loglog_slope(ns, ys) -> float:
    """Least-squares slope of ``ys`` against ``log n``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.asarray(ys, dtype=float)
    if x.size < 2 or not np.all(np.isfinite(y)):
        return math.nan
    return float(np.polyfit(x, y, 1)[0])


def _tail(seq, fraction: float = 0.25):
    start = min(len(seq) - 1, int(math.floor(len(seq) * (1 - fraction))))
    return seq[max(start, 0) :]


# --------------------------------------------------------------- orbit norms


@dataclass
class OrbitReport:
    operator: str
    space: str
    method: str
    norms: list[NormRow]
    sup_log_norm: float
    tail_slope: float
    verdict: OrbitVerdict

    @property
    def all_certified(self) -> bool:
        return all(r.certified for r in self.norms)

    def power_bounded(self) -> ProbeVerdict:
        # a growing lower bound is already evidence against power-boundedness
        if self.verdict is OrbitVerdict.GROWING:
            return ProbeVerdict.FALSE
        if self.all_certified and self.method != "test-vector":
            return ProbeVerdict.TRUE
        return ProbeVerdict.INCONCLUSIVE

    def to_rows(self):
        return _rows("log_norm", self.norms)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "space": self.space,
            "method": self.method,
            "sup_log_norm": self.sup_log_norm,
            "tail_slope": self.tail_slope,
            "verdict": self.verdict.value,
            "power_bounded": self.power_bounded().value,
            "all_certified": self.all_certified,
        }


def default_columns(op: CoeffOperator, nmax: int) -> int:
    """Column count for the matrix route; backward shifts need room for the orbit to survive."""
    if op.min_shift < 0:
        return 2 * nmax * abs(op.min_shift) + 64
    return 128


def _orbit_verdict(ns, logs) -> tuple[float, OrbitVerdict]:
    tn, ty = _tail(ns), _tail(logs)
    if not np.all(np.isfinite(ty)):
        if np.all(np.isneginf(ty)):
            return -math.inf, OrbitVerdict.DECAYING
        return math.nan, OrbitVerdict.BOUNDED_SO_FAR
    slope = _loglog_slope(tn, ty)
    diffs = np.diff(ty)
    if slope > SLOPE_THRESHOLD and np.all(diffs > 0):
        return slope, OrbitVerdict.GROWING
    if slope < -SLOPE_THRESHOLD and np.all(diffs < 0):
        return slope, OrbitVerdict.DECAYING
    return slope, OrbitVerdict.BOUNDED_SO_FAR


def _matrix_log_norms(space, op, nmax, cols) -> list[NormRow]:
    half = cols // 2
    rows = []
    for n, X in power_sections(space, op, nmax, cols):
        full = np.linalg.norm(X, 2)
        part = np.linalg.norm(X[:, :half], 2)
        value = math.log(full) if full > 0 else -math.inf
        certified = full == 0 or abs(full - part) <= 1e-6 * full
        rows.append(NormRow(n, value, certified))
    return rows


def iterate_norm_sequence(
    space: SpaceParams,
    op: CoeffOperator,
    nmax: int,
    method: str = "auto",
    cols: int | None = None,
    k_max: int = 40,
) -> OrbitReport:
    """log ||T^n|| for n = 1..nmax.

    ``exact-shift`` (single-term operators on p = 2) is certified;
    ``matrix`` (p = 2) uses exact finite sections of each power, certified
    when the first half of the columns already attains the norm;
    ``test-vector`` gives lower bounds from monomials and is never certified.
    """
    if nmax < 1:
        raise ValueError("nmax must be at least 1")
    if method == "auto":
        if space.p == 2 and op.is_single_term:
            method = "exact-shift"
        elif space.p == 2:
            method = "matrix"
        else:
            method = "test-vector"
    if method == "exact-shift":
        if space.p != 2 or not op.is_single_term:
            raise ValueError("exact-shift needs p=2 and a single-term operator")
        rows = []
        for n in range(1, nmax + 1):
            r = shift_norm_exact_p2(space, op, n)
            rows.append(NormRow(n, r.log_value, r.certified))
    elif method == "matrix":
        rows = _matrix_log_norms(space, op, nmax, cols or default_columns(op, nmax))
    elif method == "test-vector":
        rows = [NormRow(n, operator_norm_lower_log(space, op, n=n, k_max=k_max), False) for n in range(1, nmax + 1)]
    else:
        raise ValueError(f"unknown method {method!r}")
    ns = [r.n for r in rows]
    logs = [r.value for r in rows]
    slope, verdict = _orbit_verdict(ns, logs)
    return OrbitReport(op.name, space.label(), method, rows, max(logs), slope, verdict)


# ---------------------------------------------------------- spectral radius


@dataclass
class SpectralReport:
    operator: str
    space: str
    gelfand: list[NormRow]  # (n, log ||T^n|| / n, certified)
    extrapolated_radius: float | None
    quasi_nilpotent: bool
    refused: bool
    fit: dict = field(default_factory=dict)

    @property
    def last_root(self) -> float:
        return math.exp(self.gelfand[-1].value)

    def to_rows(self):
        return _rows("log_root", self.gelfand)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "space": self.space,
            "extrapolated_radius": self.extrapolated_radius,
            "last_root": self.last_root,
            "quasi_nilpotent": self.quasi_nilpotent,
            "refused": self.refused,
            "fit": self.fit,
        }


def _richardson(ns: list[int], ys: list[float]) -> tuple[float, float, float]:
    """Solve ``y = A + B log(n)/n + C/n`` through three points."""
    M = np.array([[1.0, math.log(n) / n, 1.0 / n] for n in ns])
    A, B, C = np.linalg.solve(M, np.asarray(ys, dtype=float))
    return float(A), float(B), float(C)


def gelfand_estimate(
    space: SpaceParams,
    op: CoeffOperator,
    nmax: int,
    threshold: float = 1e-3,
    orbit: OrbitReport | None = None,
) -> SpectralReport:
    """Estimate lim ||T^n||^(1/n).

    The limit is extrapolated from ``n = nmax/4, nmax/2, nmax``. A tail of
    ``log ||T^n|| / n`` that keeps falling at least like ``-0.1 log n`` is
    read as quasi-nilpotent (radius 0). A tail that is not monotone beyond
    the noise band is not extrapolated.
    """
    if nmax < 8:
        raise ValueError("nmax must be at least 8 for the three-point fit")
    if orbit is None:
        orbit = iterate_norm_sequence(space, op, nmax)
    rows = [NormRow(r.n, r.value / r.n, r.certified) for r in orbit.norms]
    ys = np.array([r.value for r in rows])
    name, label = op.name, space.label()
    if np.all(np.isneginf(ys[len(ys) // 2 :])):
        return SpectralReport(name, label, rows, 0.0, True, False, {"nilpotent": True})
    tail_n = [r.n for r in rows[len(rows) // 2 :]]
    tail_y = ys[len(rows) // 2 :]
    diffs = np.diff(tail_y)
    increasing = np.all(diffs >= -NOISE_BAND)
    decreasing = np.all(diffs <= NOISE_BAND)
    if not (increasing or decreasing):
        return SpectralReport(name, label, rows, None, False, True, {"reason": "non-monotone tail"})
    slope = _loglog_slope(tail_n, tail_y)
    picks = [max(1, nmax // 4), max(2, nmax // 2), nmax]
    A, B, C = _richardson(picks, [ys[n - 1] for n in picks])
    fit = {"A": A, "B": B, "C": C, "tail_slope": slope, "points": picks}
    if np.all(diffs < 0) and slope <= -0.1:
        return SpectralReport(name, label, rows, 0.0, True, False, fit)
    radius = math.exp(A)
    return SpectralReport(name, label, rows, radius, bool(decreasing and radius < threshold), False, fit)


# ------------------------------------------------------------------ Cesaro


@dataclass
class ErgodicReport:
    operator: str
    space: str
    cesaro_norms: list[NormRow]  # ||A_n - P||
    average_norms: list[NormRow]  # ||A_n||
    limit: np.ndarray
    limit_description: str
    idempotence_residual: float
    rate: float
    verdict: ProbeVerdict
    columns: int

    def to_rows(self):
        return _rows("cesaro_residual", self.cesaro_norms) + _rows("cesaro_norm", self.average_norms)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "space": self.space,
            "limit": self.limit_description,
            "idempotence_residual": self.idempotence_residual,
            "rate": self.rate,
            "verdict": self.verdict.value,
            "columns": self.columns,
        }


def _describe_projection(P: np.ndarray) -> str:
    if not np.any(np.abs(P) > 1e-8):
        return "zero"
    if np.allclose(P, np.diag(np.diag(P)), atol=1e-8):
        support = [int(k) for k in np.nonzero(np.abs(np.diag(P)) > 1e-8)[0]]
        return "diagonal projection onto coefficients " + ",".join(map(str, support))
    return f"rank {int(round(np.trace(P).real))} projection"


def _cesaro_run(space, op, nmax, cols):
    sums = None
    averages = []
    for n, X in power_sections(space, op, nmax, cols):
        sums = X.copy() if sums is None else sums + X
        averages.append(sums / n)
    tail = averages[-max(1, nmax // 4) :]
    P = sum(tail) / len(tail)
    P = P[:cols, :cols]
    residual = np.linalg.norm(P @ P - P, 2)
    for _ in range(30):
        if residual <= 1e-13:
            break
        P = P @ P
        residual = np.linalg.norm(P @ P - P, 2)
    padded = np.zeros_like(averages[0])
    padded[:cols, :cols] = P
    dist = [np.linalg.norm(A - padded, 2) for A in averages]
    norms = [np.linalg.norm(A, 2) for A in averages]
    return P, residual, dist, norms


def _ume_verdict(ns, dist, norms, residual, final_tol) -> tuple[float, ProbeVerdict]:
    half = len(ns) // 2
    growth = _loglog_slope(ns[half:], np.log(np.maximum(norms[half:], 1e-300)))
    logd = np.log(np.maximum(dist[half:], 1e-300))
    rate = -_loglog_slope(ns[half:], logd)
    if growth > SLOPE_THRESHOLD:
        return rate, ProbeVerdict.FALSE
    if residual <= 1e-6 and (dist[-1] <= 1e-12 or (rate >= 0.5 and dist[-1] <= final_tol)):
        return rate, ProbeVerdict.TRUE
    return rate, ProbeVerdict.INCONCLUSIVE


def cesaro_report(
    space: SpaceParams,
    op: CoeffOperator,
    nmax: int,
    cols: int | None = None,
    final_tol: float = 0.1,
) -> ErgodicReport:
    """Cesaro means ``A_n = (1/n) sum_{k<=n} T^k`` on exact finite sections (p = 2).

    The limit candidate is the average of ``A_n`` over the last quarter of the
    range, squared until it is idempotent. The verdict is recomputed with half
    the columns; a verdict that changes is reported inconclusive.
    """
    if space.p != 2:
        raise ValueError("operator-level Cesaro norms need p=2")
    cols = cols or default_columns(op, nmax)
    ns = list(range(1, nmax + 1))
    P, residual, dist, norms = _cesaro_run(space, op, nmax, cols)
    rate, verdict = _ume_verdict(ns, dist, norms, residual, final_tol)
    P2, residual2, dist2, norms2 = _cesaro_run(space, op, nmax, cols // 2)
    _, verdict2 = _ume_verdict(ns, dist2, norms2, residual2, final_tol)
    if verdict2 is not verdict:
        verdict = ProbeVerdict.INCONCLUSIVE
    cert = [abs(a - b) <= 1e-6 * max(a, 1e-300) for a, b in zip(dist, dist2)]
    return ErgodicReport(
        op.name,
        space.label(),
        [NormRow(n, d, c) for n, d, c in zip(ns, dist, cert)],
        [NormRow(n, v, c) for n, v, c in zip(ns, norms, cert)],
        P,
        _describe_projection(P),
        float(residual),
        rate,
        verdict,
        cols,
    )


# -------------------------------------------------------------------- Ritt


@dataclass
class RittReport:
    operator: str
    space: str
    quantities: list[NormRow]  # n * ||T^(n+1) - T^n||
    upper_bounds: list[NormRow]  # n * (||T^(n+1)|| + ||T^n||), single-term operators only
    sup_estimate: float
    cap: float
    verdict: ProbeVerdict

    def to_rows(self):
        return _rows("ritt", self.quantities) + _rows("ritt_upper", self.upper_bounds)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "space": self.space,
            "sup_estimate": self.sup_estimate,
            "cap": self.cap,
            "verdict": self.verdict.value,
        }


def _diagonal_ritt(op: CoeffOperator, nmax: int, K: int) -> list[NormRow]:
    term = op.terms[0]
    w = np.array([abs(complex(term.weight(k))) for k in range(K + 1)])
    dw = np.array([abs(complex(term.weight(k)) - 1) for k in range(K + 1)])
    logw = np.log(np.where(w > 0, w, 1.0))
    rows = []
    for n in range(1, nmax + 1):
        vals = np.where(w > 0, np.exp(n * logw) * dw, 0.0)
        k = int(np.argmax(vals))
        rows.append(NormRow(n, n * float(vals[k]), k <= K // 2))
    return rows


def _ritt_shape(values: np.ndarray, cap: float) -> bool:
    if values.size == 0 or not np.all(np.isfinite(values)) or values.max() > cap:
        return False
    tail = _tail(values)
    return bool(np.all(np.diff(tail) <= 1e-12 * max(1.0, float(tail.max()))))


def ritt_sequence(
    space: SpaceParams,
    op: CoeffOperator,
    nmax: int,
    cap: float = 100.0,
    cols: int | None = None,
) -> RittReport:
    """``n ||T^(n+1) - T^n||`` for n = 1..nmax on p = 2.

    Diagonal operators use the closed form ``n sup_k |w_k|^n |w_k - 1|``;
    everything else goes through exact finite sections, which bound the
    quantity from below. Single-term operators also get the certified upper
    bound ``n (||T^(n+1)|| + ||T^n||)``.

    The verdict is true when the sequence stays below ``cap`` and does not
    increase over the last quarter of the range, and false when a certified
    lower bound breaks either condition.
    """
    if space.p != 2:
        raise ValueError("ritt_sequence needs p=2")
    if op.is_single_term and op.terms[0].shift == 0:
        rows = _diagonal_ritt(op, nmax, cols or 4096)
    else:
        cols = cols or default_columns(op, nmax + 1)
        half = cols // 2
        powers = [X for _, X in power_sections(space, op, nmax + 1, cols)]
        rows = []
        for n in range(1, nmax + 1):
            diff = powers[n] - powers[n - 1]
            full = n * np.linalg.norm(diff, 2)
            part = n * np.linalg.norm(diff[:, :half], 2)
            rows.append(NormRow(n, full, full == 0 or abs(full - part) <= 1e-6 * full))
    upper: list[NormRow] = []
    if op.is_single_term:
        logs = [shift_norm_exact_p2(space, op, n) for n in range(1, nmax + 2)]
        for n in range(1, nmax + 1):
            a, b = logs[n], logs[n - 1]
            value = n * (math.exp(a.log_value) + math.exp(b.log_value))
            upper.append(NormRow(n, value, a.certified and b.certified))
    values = np.array([r.value for r in rows])
    certified = all(r.certified for r in rows)
    if upper and all(r.certified for r in upper) and _ritt_shape(np.array([r.value for r in upper]), cap):
        verdict = ProbeVerdict.TRUE
    elif _ritt_shape(values, cap):
        verdict = ProbeVerdict.TRUE if certified else ProbeVerdict.INCONCLUSIVE
    else:
        verdict = ProbeVerdict.FALSE
    return RittReport(op.name, space.label(), rows, upper, float(values.max()), cap, verdict)


# ------------------------------------------------------- hypercyclicity of D


@dataclass
class HypercyclicityReport:
    space: str
    values: list[NormRow]  # log(||z^n|| / n!)
    tail_slope: float
    trend: str  # "to_zero", "to_infinity" or "boundary"

    def to_rows(self):
        return _rows("log_norm_over_factorial", self.values)

    def to_dict(self) -> dict:
        return {"space": self.space, "tail_slope": self.tail_slope, "trend": self.trend}


def d_hypercyclicity_sequence(space: SpaceParams, nmax: int, band: float = 1e-3) -> HypercyclicityReport:
    """``log ||z^n|| - log n!`` for n = 1..nmax (m = 1, finite p).

    The trend is the least-squares slope against ``log n`` over the last half
    of the range: below ``-band`` the ratio tends to 0, above ``band`` it
    tends to infinity, in between it stays bounded.
    """
    if space.m != 1:
        raise ValueError("the hypercyclicity sequence is defined for m=1")
    if space.is_sup:
        raise ValueError("the hypercyclicity sequence needs finite p")
    ns = list(range(1, nmax + 1))
    vals = [monomial_norm_log(space, n) - math.lgamma(n + 1) for n in ns]
    half = len(ns) // 2
    slope = _loglog_slope(ns[half:], vals[half:])
    if slope < -band:
        trend = "to_zero"
    elif slope > band:
        trend = "to_infinity"
    else:
        trend = "boundary"
    return HypercyclicityReport(space.label(), [NormRow(n, v, True) for n, v in zip(ns, vals)], slope, trend)
