import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockdyn.operators import (
    ConvergenceError,
    OperatorSpec,
    ShiftTerm,
    SymbolPolynomial,
    apply,
    hardy_iterate_closed,
    iterate_apply,
    k_lambda_apply,
    largest_singular_value,
    make_differentiation,
    make_hardy,
    make_integration,
    make_volterra,
    operator_norm_lower,
    operator_norm_lower_log,
    operator_norm_p2,
    section_matrix,
    shift_norm_exact_p2,
    volterra_monomial_iterate_closed,
)
from fockdyn.space import SpaceParams, TaylorSeries, monomial_norm_log

T = TaylorSeries
F = Fraction
D, J, H = make_differentiation(), make_integration(), make_hardy()

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=20)
polys = st.lists(fractions, min_size=1, max_size=12).map(lambda c: T(tuple(c)))


def loop_log_weight_product(term: ShiftTerm, k: int, n: int) -> float:
    """Independent oracle: multiply the weights along the orbit one by one."""
    total = 0.0
    for i in range(n):
        w = term.weight(k + i * term.shift)
        if w == 0:
            return -math.inf
        total += math.log(abs(complex(w)))
    return total


class TestConstructors:
    def test_differentiation(self):
        assert apply(D, T.monomial(3)).coeffs == (0, 0, 3)
        assert apply(D, T((1,))).is_zero
        assert apply(D, T((1, 2, 1))).coeffs == (2, 2)

    def test_integration(self):
        assert apply(J, T((1,))).coeffs == (0, 1)
        assert apply(J, T.monomial(3)).coeffs == (0, 0, 0, 0, F(1, 4))

    def test_hardy(self):
        assert apply(H, T((1,))).coeffs == (1,)
        assert apply(H, T((1, 2, 3))).coeffs == (1, 1, 1)
        assert iterate_apply(H, 2, T((1, 2, 3))).coeffs == (1, F(1, 2), F(1, 3))

    def test_volterra(self):
        assert make_volterra(SymbolPolynomial((0, 1))).terms == J.terms[:0] + (ShiftTerm("volterra", 1, 1, 1),)
        assert apply(make_volterra(SymbolPolynomial((5, 1))), T((1, 2))) == apply(J, T((1, 2)))
        assert apply(make_volterra(SymbolPolynomial((0, 0, 1))), T((0, 1))).coeffs == (0, 0, 0, F(2, 3))
        assert apply(make_volterra(SymbolPolynomial((0, 2, 0, 1))), T((1,))).coeffs == (0, 2, 0, 1)

    def test_constant_symbol_warns(self):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            op = make_volterra(SymbolPolynomial((3,)))
        assert op.terms == () and any("constant symbol" in str(x.message) for x in w)
        assert apply(op, T((1, 2))).is_zero

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ShiftTerm("bogus", 0)

    def test_leading(self):
        assert SymbolPolynomial((1, 0, 3, 0)).leading == 3


class TestIterates:
    def test_volterra_examples(self):
        assert iterate_apply(make_volterra(SymbolPolynomial((0, 2))), 3, T((1,))).coeffs == (0, 0, 0, F(4, 3))
        assert iterate_apply(make_volterra(SymbolPolynomial((0, 0, 1))), 2, T((0, 1))).coeffs == (0,) * 5 + (F(4, 15),)

    def test_hardy_example(self):
        assert iterate_apply(H, 5, T((1, 1))).coeffs == (1, F(1, 32))

    def test_hardy_closed_examples(self):
        assert hardy_iterate_closed(2, T((1, 2, 3))).coeffs == (1, F(1, 2), F(1, 3))
        assert hardy_iterate_closed(10, T((0, 1))).coeffs == (0, F(1, 1024))

    @settings(max_examples=40, deadline=None)
    @given(polys, st.integers(0, 30))
    def test_hardy_closed_matches(self, f, n):
        assert hardy_iterate_closed(n, f) == iterate_apply(H, n, f)

    def test_volterra_closed_examples(self):
        r = volterra_monomial_iterate_closed(1, 1, 4, 0)
        assert r.degree == 4 and r.coefficient == pytest.approx(1 / 24)
        r = volterra_monomial_iterate_closed(1, 2, 2, 1)
        assert r.degree == 5 and r.coefficient == pytest.approx(4 / 15)
        r = volterra_monomial_iterate_closed(3, 1, 2, 2)
        assert r.degree == 4 and r.coefficient == pytest.approx(0.75)

    def test_volterra_closed_phase(self):
        r = volterra_monomial_iterate_closed(1j, 1, 3, 0)
        assert r.coefficient == pytest.approx((1j) ** 3 / 6)

    def test_negative_n(self):
        with pytest.raises(ValueError):
            iterate_apply(D, -1, T((1,)))

    @settings(max_examples=40, deadline=None)
    @given(polys)
    def test_dj_identity(self, f):
        assert apply(D, apply(J, f)) == f

    @settings(max_examples=40, deadline=None)
    @given(polys)
    def test_jd_drops_constant(self, f):
        assert apply(J, apply(D, f)) == f - T((f[0],))

    @settings(max_examples=40, deadline=None)
    @given(polys, polys, fractions, st.sampled_from(["D", "J", "H", "V:1,2,-1/3", "V:0,0,0,5"]))
    def test_linearity(self, f, g, c, name):
        op = OperatorSpec.parse(name).build()
        assert apply(op, f * c + g) == apply(op, f) * c + apply(op, g)

    @settings(max_examples=30, deadline=None)
    @given(polys, st.integers(0, 6), st.sampled_from(["D", "J", "H", "V:0,1,1"]))
    def test_degree_growth(self, f, n, name):
        op = OperatorSpec.parse(name).build()
        assert iterate_apply(op, n, f).degree <= f.degree + n * max(op.max_shift, 0)


class TestKLambda:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_lambda_zero_is_volterra(self, m):
        f = T((F(1), F(-2, 3), 0, F(5)))
        a = F(7, 2)
        V = make_volterra(SymbolPolynomial((0,) * m + (a,)))
        assert k_lambda_apply(a, 0, m, f, 40) == apply(V, f)

    def test_constant_input(self):
        # K 1 = (a/lam)(e^{lam z^m} - 1)
        a, lam, m, N = F(3), F(1, 2), 2, 20
        got = k_lambda_apply(a, lam, m, T((1,)), N)
        for j in range(1, N // m + 1):
            assert got[j * m] == a * lam ** (j - 1) / math.factorial(j)

    def test_exp_example(self):
        assert k_lambda_apply(1, 1, 1, T((1,)), 3).coeffs == (0, 1, F(1, 2), F(1, 6))

    @settings(max_examples=25, deadline=None)
    @given(polys, st.sampled_from([1, 2, 3]), fractions, fractions)
    def test_routes_agree(self, f, m, a, lam):
        N = f.degree + 6 * m
        assert k_lambda_apply(a, lam, m, f, N) == k_lambda_apply(a, lam, m, f, N, method="series")

    def test_rejects_bad_m(self):
        with pytest.raises(ValueError):
            k_lambda_apply(1, 1, 1.5, T((1,)), 10)
        with pytest.raises(ValueError):
            k_lambda_apply(1, 1, 0, T((1,)), 10)

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            k_lambda_apply(1, 1, 2, T((0, 0, 1)), 3)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            k_lambda_apply(1, 1, 1, T((1,)), 3, method="other")


class TestWeightProducts:
    @pytest.mark.parametrize(
        "term",
        [D.terms[0], J.terms[0], H.terms[0], ShiftTerm("volterra", 2, 2, F(-3, 2)), ShiftTerm("volterra", 3, 3, 0.7)],
    )
    def test_against_loop(self, term):
        ks = np.arange(0, 40)
        for n in (1, 3, 10):
            got = term.log_weight_product(ks, n)
            want = [loop_log_weight_product(term, int(k), n) for k in ks]
            assert np.allclose(got, want, rtol=1e-12, atol=1e-11, equal_nan=False)


class TestShiftNorm:
    def test_hardy_is_one(self):
        for s in (SpaceParams(2, 1, 1), SpaceParams(2, 0.5, 2), SpaceParams(2, 3, 0.7)):
            for n in (1, 7, 40):
                r = shift_norm_exact_p2(s, H, n)
                assert r.log_value == 0.0 and r.certified and r.argmax == 0

    def test_integration_example(self):
        r = shift_norm_exact_p2(SpaceParams(2, 1, 1), J)
        assert r.log_value == pytest.approx(math.log(math.sqrt(6) / 2), rel=1e-14)
        assert r.argmax == 0 and r.certified

    def test_differentiation_limit(self):
        r = shift_norm_exact_p2(SpaceParams(2, 0.8, 1), D)
        assert r.certified and r.argmax is None
        assert r.log_value == pytest.approx(math.log(0.8), rel=1e-14)

    def test_volterra_closed_form(self):
        # ||V_{az}^n|| on F^2_(1,1) = |a|^n sqrt((2n+1)!) / (2^n n!)
        for a in (0.3, 1.5):
            op = make_volterra(SymbolPolynomial((0, a)))
            for n in (1, 5, 60):
                exact = n * math.log(a) + 0.5 * math.lgamma(2 * n + 2) - n * math.log(2) - math.lgamma(n + 1)
                assert shift_norm_exact_p2(SpaceParams(2, 1, 1), op, n).log_value == pytest.approx(exact, rel=1e-12)

    def test_entries_against_norm_ratio(self):
        s = SpaceParams(2, 1.3, 2)
        op = make_volterra(SymbolPolynomial((0, 0, F(1, 2))))
        n = 3
        want = max(
            math.log(abs(complex(iterate_apply(op, n, T.monomial(k))[k + 2 * n])))
            + monomial_norm_log(s, k + 2 * n)
            - monomial_norm_log(s, k)
            for k in range(0, 400)
        )
        got = shift_norm_exact_p2(s, op, n)
        assert got.log_value >= want - 1e-12

    def test_fixed_cap(self):
        r = shift_norm_exact_p2(SpaceParams(2, 1, 1), J, 1, K=10)
        assert r.k_cap == 10 and r.certified

    def test_fixed_cap_below_limit_is_flagged(self):
        op = make_volterra(SymbolPolynomial((0, 0, 3)))
        r = shift_norm_exact_p2(SpaceParams(2, 2, 2), op, 1, K=100)
        assert not r.certified and r.log_value < math.log(1.5)
        assert shift_norm_exact_p2(SpaceParams(2, 2, 2), op, 1).log_value == pytest.approx(math.log(1.5), rel=1e-14)

    def test_unbounded_uncertified(self):
        r = shift_norm_exact_p2(SpaceParams(2, 1, 2), D, 1, cap=1 << 10)
        assert not r.certified

    def test_preconditions(self):
        with pytest.raises(ValueError):
            shift_norm_exact_p2(SpaceParams(3, 1, 1), J)
        with pytest.raises(ValueError):
            shift_norm_exact_p2(SpaceParams(2, 1, 2), make_volterra(SymbolPolynomial((0, 1, 1))))


class TestMatrixNorms:
    def test_power_iteration_matches_svd(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            A = rng.normal(size=(30, 20)) + 1j * rng.normal(size=(30, 20))
            assert largest_singular_value(A, tol=1e-13) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-8)

    def test_nonconvergence(self):
        A = np.diag([1.0, 0.999999, 0.5])
        with pytest.raises(ConvergenceError):
            largest_singular_value(A, tol=1e-15, max_iter=5)

    def test_zero(self):
        assert largest_singular_value(np.zeros((3, 3))) == 0.0

    def test_hardy(self):
        assert operator_norm_p2(SpaceParams(2, 1, 1), H, K=200) == pytest.approx(1.0, rel=1e-8)

    def test_integration(self):
        assert operator_norm_p2(SpaceParams(2, 1, 1), J, K=200) == pytest.approx(math.sqrt(6) / 2, rel=1e-8)

    @pytest.mark.parametrize(
        "space,op",
        [
            (SpaceParams(2, 1, 1), J),
            (SpaceParams(2, 0.5, 2), J),
            (SpaceParams(2, 1, 1), make_volterra(SymbolPolynomial((0, 0.4)))),
            (SpaceParams(2, 2, 2), make_volterra(SymbolPolynomial((0, 0, 3)))),
            (SpaceParams(2, 1, 1), H),
            (SpaceParams(2, 1, 0.5), D),
        ],
    )
    def test_single_term_agreement(self, space, op):
        K = 200
        exact = math.exp(shift_norm_exact_p2(space, op, 1, K=K - 1).log_value)
        assert operator_norm_p2(space, op, K=K) == pytest.approx(exact, rel=1e-8)

    def test_multi_term_lower_bounds(self):
        s = SpaceParams(2, 1, 2)
        op = make_volterra(SymbolPolynomial((0, 1, 1)))
        full = operator_norm_p2(s, op, K=150)
        for single in (make_volterra(SymbolPolynomial((0, 1))), make_volterra(SymbolPolynomial((0, 0, 1)))):
            assert full >= operator_norm_p2(s, single, K=150) * 0.5
        assert full >= operator_norm_lower(s, op, k_max=60) * (1 - 1e-9)
        A = section_matrix(s, op, 150)
        assert full == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-8)


class TestLowerBounds:
    def test_hardy_constant(self):
        assert operator_norm_lower(SpaceParams(3, 1, 1), H, [T((1,))]) == pytest.approx(1.0)

    def test_differentiation_growth(self):
        s = SpaceParams(2, 1.2, 1)
        vals = [operator_norm_lower_log(s, D, [T.monomial(n)], n=n) for n in (10, 50, 100, 200)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        for n, v in zip((10, 50, 100, 200), vals):
            assert v == pytest.approx(math.lgamma(n + 1) + monomial_norm_log(s, 0) - monomial_norm_log(s, n), rel=1e-12)

    def test_volterra_approaches_limit(self):
        s = SpaceParams(3, 1, 2)
        op = make_volterra(SymbolPolynomial((0, 0, F(1, 2))))
        n = 3
        target = n * math.log(0.5)
        vals = [operator_norm_lower_log(s, op, [T.monomial(k)], n=n) for k in (10, 100, 1000)]
        gaps = [abs(v - target) for v in vals]
        assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.01

    def test_default_testset_for_backward_shift(self):
        assert operator_norm_lower_log(SpaceParams(2, 1, 1), D, n=80, k_max=5) > -math.inf


class TestOperatorSpec:
    @pytest.mark.parametrize("text,label", [("D", "D"), ("j", "J"), ("H", "H"), ("V:0,0.3", "V:0,0.3"), ("K:1,1/2,2", "K:1,1/2,2")])
    def test_parse_roundtrip(self, text, label):
        assert OperatorSpec.parse(text).label() == label

    @pytest.mark.parametrize("text", ["X", "D:1", "V:", "K:1,2", "K:1,0.5,1.5"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            OperatorSpec.parse(text)

    def test_complex_coefficient(self):
        spec = OperatorSpec.parse("V:0,0.5i")
        assert spec.symbol().leading == 0.5j

    def test_build(self):
        assert OperatorSpec.parse("V:0,1").build().terms == make_volterra(SymbolPolynomial((0, 1))).terms
        assert OperatorSpec.parse("K:2,0,1").build().terms == make_volterra(SymbolPolynomial((0, 2))).terms
        with pytest.raises(ValueError):
            OperatorSpec.parse("K:2,1,1").build()
