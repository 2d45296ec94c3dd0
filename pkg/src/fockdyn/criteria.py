"""Closed-form verdicts for D, J, H, V_g and K_lambda, and their numerical cross-check.

A verdict is four-valued. ``necessary-only`` marks fields where only a
necessary condition is known to hold, and ``not-covered`` marks fields for
which no rule is encoded. Each classification lists the rules that produced
it as plain statements.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields

from .dynamics import (
    ProbeVerdict,
    cesaro_report,
    d_hypercyclicity_sequence,
    gelfand_estimate,
    iterate_norm_sequence,
    ritt_sequence,
)
from .operators import OperatorSpec, SymbolPolynomial, k_lambda_apply
from .space import SpaceParams, sup_norm_estimate

__all__ = [
    "Verdict",
    "Classification",
    "classify_differentiation",
    "classify_integration",
    "classify_volterra",
    "classify_hardy",
    "classify_k_lambda",
    "classify",
    "volterra_spectrum_radius",
    "k_lambda_norm_bound",
    "k_lambda_sup_ratio",
    "ProbeSettings",
    "CheckRow",
    "CrossCheckReport",
    "cross_check",
]


class Verdict(str, enum.Enum):
    TRUE = "true"
    FALSE = "false"
    NECESSARY_ONLY = "necessary-only"
    NOT_COVERED = "not-covered"

    @classmethod
    def of(cls, flag: bool) -> "Verdict":
        return cls.TRUE if flag else cls.FALSE

    @property
    def decided(self) -> bool:
        return self in (Verdict.TRUE, Verdict.FALSE)


_NC = Verdict.NOT_COVERED
DYNAMICAL_FIELDS = ("hypercyclic", "supercyclic", "cyclic", "power_bounded", "uniformly_mean_ergodic", "ritt")


@dataclass
class Classification:
    operator: str
    space: str
    bounded: Verdict = _NC
    compact: Verdict = _NC
    hypercyclic: Verdict = _NC
    supercyclic: Verdict = _NC
    cyclic: Verdict = _NC
    power_bounded: Verdict = _NC
    uniformly_mean_ergodic: Verdict = _NC
    ritt: Verdict = _NC
    citations: list[str] = field(default_factory=list)
    facts: dict = field(default_factory=dict)

    def verdicts(self) -> dict[str, Verdict]:
        return {f.name: getattr(self, f.name) for f in fields(self) if isinstance(getattr(self, f.name), Verdict)}

    def check_implications(self) -> list[str]:
        """Violated implications; empty for a consistent record."""
        bad = []
        T, F = Verdict.TRUE, Verdict.FALSE
        if self.hypercyclic is T and self.supercyclic is not T:
            bad.append("hypercyclic without supercyclic")
        if self.supercyclic is T and self.cyclic is not T:
            bad.append("supercyclic without cyclic")
        if self.compact is T and self.hypercyclic not in (F, _NC):
            bad.append("compact but hypercyclic")
        if self.compact is T and self.hypercyclic is _NC and self.bounded is T:
            bad.append("compact with hypercyclicity undecided")
        if self.bounded is F:
            for name in DYNAMICAL_FIELDS:
                if getattr(self, name) is not _NC:
                    bad.append(f"unbounded operator with {name} decided")
        if self.ritt is T and self.power_bounded is F:
            bad.append("Ritt without power bounded")
        return bad

    def to_dict(self) -> dict:
        out = {"operator": self.operator, "space": self.space}
        out.update({k: v.value for k, v in self.verdicts().items()})
        out["citations"] = list(self.citations)
        out["facts"] = dict(self.facts)
        return out


def _unbounded(c: Classification) -> Classification:
    c.bounded = Verdict.FALSE
    c.compact = Verdict.FALSE
    for name in DYNAMICAL_FIELDS:
        setattr(c, name, _NC)
    return c


# ------------------------------------------------------------ differentiation


def classify_differentiation(space: SpaceParams) -> Classification:
    c = Classification("D", space.label())
    if space.is_sup:
        c.citations.append("D on the sup-norm space: no rule encoded")
        return c
    p, a, m = space.p, space.alpha, space.m
    c.citations.append("D bounded iff m <= 1")
    if m > 1:
        return _unbounded(c)
    c.bounded = Verdict.TRUE
    c.compact = Verdict.of(m < 1)
    c.citations.append("D compact iff m < 1")
    hyper = m == 1 and (a > 1 or (a == 1 and p > 3))
    c.hypercyclic = Verdict.of(hyper)
    c.citations.append("D hypercyclic iff m = 1 and (alpha > 1 or (alpha = 1 and p > 3)); boundary p = 3 is not hypercyclic")
    c.supercyclic = Verdict.TRUE
    c.cyclic = Verdict.TRUE
    c.citations.append("bounded D is supercyclic, hence cyclic")
    if m < 1 or a < 1:
        c.power_bounded = c.uniformly_mean_ergodic = c.ritt = Verdict.TRUE
        c.citations.append("D power bounded and uniformly mean ergodic when m < 1 or (m = 1 and alpha < 1)")
        c.citations.append("D Ritt iff power bounded and uniformly mean ergodic")
    elif hyper:
        c.power_bounded = c.uniformly_mean_ergodic = c.ritt = Verdict.FALSE
        c.citations.append("hypercyclic operators are neither power bounded nor uniformly mean ergodic")
    else:
        # m = 1, alpha = 1, p <= 3: only the conjunction fails
        c.ritt = Verdict.FALSE
        c.citations.append("m = 1, alpha >= 1: D is not both power bounded and uniformly mean ergodic, hence not Ritt")
        c.citations.append("m = 1, alpha = 1, p <= 3: power boundedness and mean ergodicity separately undecided")
    return c


# ----------------------------------------------------------------- Volterra


def _symbol(g) -> SymbolPolynomial:
    g = g if isinstance(g, SymbolPolynomial) else SymbolPolynomial(tuple(g.coeffs if hasattr(g, "coeffs") else g))
    if g.degree < 1:
        raise ValueError("constant or zero symbol: V_g is the zero operator")
    return g


def classify_volterra(space: SpaceParams, g, name: str | None = None) -> Classification:
    g = _symbol(g)
    l, a_l = g.degree, abs(complex(g.leading))
    alpha, m = space.alpha, space.m
    c = Classification(name or "V[" + ",".join(str(x) for x in g.coeffs) + "]", space.label())
    c.citations.append("V_g bounded iff deg g <= m")
    if l > m:
        return _unbounded(c)
    c.bounded = Verdict.TRUE
    c.compact = Verdict.of(l < m or not space.m_is_integer)
    c.citations.append("V_g compact iff deg g < m or m is not an integer")
    c.supercyclic = c.hypercyclic = Verdict.FALSE
    c.citations.append("V_g f vanishes at 0, so V_g is not supercyclic and not hypercyclic")
    if space.is_sup:
        c.citations.append("cyclicity on the sup-norm space: no rule encoded")
    elif g.is_monomial_plus_constant():
        c.cyclic = Verdict.of(l == 1)
        c.citations.append("g = a z^l + b: V_g cyclic iff l = 1")
    else:
        c.citations.append("cyclicity for general symbols with l > 1: no rule encoded")

    if l < m:
        c.power_bounded = c.uniformly_mean_ergodic = Verdict.TRUE
        c.facts["quasi_nilpotent"] = True
        c.citations.append("deg g < m: V_g compact, quasi-nilpotent, power bounded, uniformly mean ergodic")
        return c

    c.facts["spectral_radius"] = a_l / alpha
    c.facts["ume_scope"] = "leading monomial part"
    if space.is_sup:
        c.power_bounded = Verdict.of(a_l <= alpha)
        c.citations.append("deg g = m, sup norm: V_g power bounded iff |a_l| <= alpha")
        if a_l <= alpha:
            c.uniformly_mean_ergodic = Verdict.of(a_l < alpha)
            c.citations.append("deg g = m, sup norm, |a_l| <= alpha: leading part uniformly mean ergodic iff |a_l| < alpha")
        else:
            c.citations.append("deg g = m, sup norm, |a_l| > alpha: mean ergodicity undecided")
        return c
    if a_l > alpha:
        c.power_bounded = Verdict.FALSE
        c.citations.append("deg g = m, finite p: power bounded requires |a_l| <= alpha")
    else:
        c.power_bounded = Verdict.NECESSARY_ONLY
        c.citations.append("deg g = m, finite p: |a_l| <= alpha is necessary for power boundedness")
    if a_l < alpha:
        c.uniformly_mean_ergodic = Verdict.NECESSARY_ONLY
        c.citations.append("deg g = m, finite p: |a_l| < alpha is necessary for the leading part to be power bounded and uniformly mean ergodic")
    return c


def classify_integration(space: SpaceParams) -> Classification:
    return classify_volterra(space, SymbolPolynomial((0, 1)), name="J")


# ------------------------------------------------------------------- Hardy


def classify_hardy(space: SpaceParams) -> Classification:
    c = Classification("H", space.label())
    if space.is_sup:
        c.citations.append("H on the sup-norm space: no rule encoded")
        return c
    c.bounded = Verdict.TRUE
    c.facts["norm"] = 1.0
    c.power_bounded = c.uniformly_mean_ergodic = c.ritt = Verdict.TRUE
    c.supercyclic = c.hypercyclic = Verdict.FALSE
    c.citations += [
        "H has norm 1 for 1 <= p < inf",
        "H power bounded and uniformly mean ergodic for 1 <= p < inf",
        "H is not supercyclic",
        "H satisfies the Ritt resolvent condition",
    ]
    return c


# ---------------------------------------------------------------- K_lambda


def classify_k_lambda(space: SpaceParams, a, lam, m: int) -> Classification:
    m = int(m)
    if complex(lam) == 0:
        return classify_volterra(space, SymbolPolynomial((0,) * m + (a,)), name=f"K[{a},0,{m}]")
    c = Classification(f"K[{a},{lam},{m}]", space.label())
    if space.is_sup and abs(complex(lam)) < space.alpha and space.m == m:
        c.bounded = Verdict.TRUE
        c.facts["norm_bound"] = k_lambda_norm_bound(a, lam, space.alpha)
        c.citations.append("|lambda| < alpha, sup norm: K_lambda bounded with norm <= |a| / (alpha - |lambda|)")
    else:
        c.citations.append("K_lambda outside the sup-norm case |lambda| < alpha: no rule encoded")
    return c


def classify(space: SpaceParams, spec: OperatorSpec) -> Classification:
    if spec.kind == "D":
        return classify_differentiation(space)
    if spec.kind == "J":
        return classify_integration(space)
    if spec.kind == "H":
        return classify_hardy(space)
    if spec.kind == "V":
        return classify_volterra(space, spec.symbol(), name=spec.label())
    if spec.kind == "K":
        a, lam, m = spec.params
        return classify_k_lambda(space, a, lam, m)
    raise ValueError(f"cannot classify {spec.label()}")


def volterra_spectrum_radius(space: SpaceParams, g) -> float:
    """|a_l| / alpha for a symbol whose degree equals m."""
    g = _symbol(g)
    if not space.m_is_integer or g.degree != int(space.m):
        raise ValueError("spectral radius formula needs deg g = m")
    return abs(complex(g.leading)) / space.alpha


def k_lambda_norm_bound(a, lam, alpha: float) -> float:
    if abs(complex(lam)) >= alpha:
        raise ValueError("norm bound needs |lambda| < alpha")
    return abs(complex(a)) / (alpha - abs(complex(lam)))


# -------------------------------------------------------------- cross check


@dataclass(frozen=True)
class ProbeSettings:
    nmax: int = 60
    cesaro_nmax: int = 100
    gelfand_nmax: int = 100
    radius_rel_tol: float = 0.05
    cols: int | None = None


@dataclass(frozen=True)
class CheckRow:
    field: str
    classifier: str
    probe: str
    status: str  # AGREE, DISAGREE or INCONCLUSIVE
    evidence: str


@dataclass
class CrossCheckReport:
    operator: str
    space: str
    rows: list[CheckRow]
    reports: dict = field(default_factory=dict)

    @property
    def disagreements(self) -> int:
        return sum(r.status == "DISAGREE" for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "space": self.space,
            "rows": [r.__dict__ for r in self.rows],
        }


def _compare(name: str, verdict: Verdict, probe: ProbeVerdict, evidence: str) -> CheckRow:
    if probe is ProbeVerdict.INCONCLUSIVE or not verdict.decided:
        status = "INCONCLUSIVE"
    else:
        status = "AGREE" if probe.value == verdict.value else "DISAGREE"
    return CheckRow(name, verdict.value, probe.value, status, evidence)


def cross_check(space: SpaceParams, spec: OperatorSpec, settings: ProbeSettings = ProbeSettings()) -> CrossCheckReport:
    """Run the probes relevant to ``spec`` and compare them with its classification.

    Only classifier fields that are true or false can AGREE or DISAGREE;
    necessary-only fields are probed and reported INCONCLUSIVE. A probe never
    overrides the classifier; disagreements are returned as rows.
    """
    cls = classify(space, spec)
    report = CrossCheckReport(cls.operator, cls.space, [])
    if spec.kind == "K" and spec.params[1] != 0:
        return report
    if cls.bounded is not Verdict.TRUE:
        return report
    op = spec.build()
    rows = report.rows

    if cls.power_bounded is not Verdict.NOT_COVERED:
        orbit = iterate_norm_sequence(space, op, settings.nmax, cols=settings.cols)
        report.reports["orbit"] = orbit
        rows.append(
            _compare(
                "power_bounded",
                cls.power_bounded,
                orbit.power_bounded(),
                f"{orbit.method}: {orbit.verdict.value}, tail slope {orbit.tail_slope:.4g}",
            )
        )
    if space.p == 2 and cls.uniformly_mean_ergodic is not Verdict.NOT_COVERED:
        ces = cesaro_report(space, op, settings.cesaro_nmax, cols=settings.cols)
        report.reports["cesaro"] = ces
        rows.append(
            _compare(
                "uniformly_mean_ergodic",
                cls.uniformly_mean_ergodic,
                ces.verdict,
                f"limit {ces.limit_description}, rate {ces.rate:.4g}",
            )
        )
    if space.p == 2 and cls.ritt.decided:
        ritt = ritt_sequence(space, op, settings.nmax, cols=settings.cols)
        report.reports["ritt"] = ritt
        rows.append(_compare("ritt", cls.ritt, ritt.verdict, f"sup {ritt.sup_estimate:.4g}"))
    if spec.kind == "D" and space.m == 1 and not space.is_sup and cls.hypercyclic.decided:
        hyp = d_hypercyclicity_sequence(space, max(settings.nmax, 400))
        report.reports["hypercyclicity"] = hyp
        probe = ProbeVerdict.TRUE if hyp.trend == "to_zero" else ProbeVerdict.FALSE
        rows.append(_compare("hypercyclic", cls.hypercyclic, probe, f"trend {hyp.trend}, slope {hyp.tail_slope:.4g}"))
    if space.p == 2 and op.is_single_term and ("spectral_radius" in cls.facts or cls.facts.get("quasi_nilpotent")):
        spec_report = gelfand_estimate(space, op, settings.gelfand_nmax)
        report.reports["gelfand"] = spec_report
        r = spec_report.extrapolated_radius
        if "spectral_radius" in cls.facts:
            expected = cls.facts["spectral_radius"]
            if r is None:
                status = "INCONCLUSIVE"
            else:
                status = "AGREE" if abs(r - expected) <= settings.radius_rel_tol * expected else "DISAGREE"
            rows.append(CheckRow("spectral_radius", f"{expected:.6g}", "none" if r is None else f"{r:.6g}", status, "three-point fit"))
        else:
            status = "AGREE" if spec_report.quasi_nilpotent else "INCONCLUSIVE"
            rows.append(CheckRow("quasi_nilpotent", "true", str(spec_report.quasi_nilpotent).lower(), status, "tail of log-roots"))
    return report


def k_lambda_sup_ratio(space: SpaceParams, a, lam, f, N: int | None = None, tail_terms: int = 120) -> float:
    """Grid estimate of ``||K_lambda f|| / ||f||`` on the sup-norm space.

    ``K_lambda f`` is truncated at degree ``deg f + m * tail_terms``; the
    discarded terms decay like ``(|lambda| / alpha)^j``.
    """
    if not space.is_sup or not space.m_is_integer:
        raise ValueError("the K_lambda ratio needs p=inf and integer m")
    m = int(space.m)
    N = N or f.degree + m * tail_terms
    image = k_lambda_apply(a, lam, m, f, N)
    return math.exp(sup_norm_estimate(space, image).log_value - sup_norm_estimate(space, f).log_value)
