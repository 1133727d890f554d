import math

import numpy as np
import pytest

import oracles
from lowlying.elliptic import (
    EllipticSurface, TABLE1_ROWS, bias_statistics, c0_c1, c0_c1_brute, closed_form_A2,
    closed_form_for, expansion_terms, fiber_traces, fiber_traces_brute, first_moment,
    frobenius_trace, michel_ratio, moment, moment_series, predicted_bias, rosen_silverman,
    singular_fiber, singular_mask,
)
from lowlying.errors import ContractViolation
from lowlying.numth import IntPolynomial as P
from lowlying.testfn import fejer_pair, zero_pair

X3_TX = EllipticSurface.tnx(1)
CLOSED_FORM_FAMILIES = [
    EllipticSurface.tconst(1, 1, 1, 1, 1),
    EllipticSurface.tconst(2, 3, 1, 5, 7),
    EllipticSurface.tlin(1, 1, 1, 0),
    EllipticSurface.tlin(3, 2, 5, 1),
    EllipticSurface.tnx(1), EllipticSurface.tnx(2), EllipticSurface.tnx(3), EllipticSurface.tnx(4),
    EllipticSurface.tn(1), EllipticSurface.tn(2), EllipticSurface.tn(3), EllipticSurface.tn(6),
    EllipticSurface.wash(1), EllipticSurface.wash(2), EllipticSurface.wash(4), EllipticSurface.wash(-3),
]


def as_function(s: EllipticSurface):
    return lambda x, t: sum(c(t) * x ** k for k, c in enumerate(s.coefficients))


def test_trace_examples():
    assert frobenius_trace(X3_TX, 1, 5) == oracles.TRACE[("x3+Tx", 1, 5)]
    assert singular_fiber(X3_TX, 0, 5)
    assert frobenius_trace(X3_TX, 0, 5) == 0
    assert all(frobenius_trace(X3_TX, t, 7) == 0 for t in range(7))


def test_trace_rejects_small_primes():
    for p in (2, 3, 9):
        with pytest.raises(ContractViolation):
            frobenius_trace(X3_TX, 1, p)


@pytest.mark.parametrize("surface", CLOSED_FORM_FAMILIES + [
    EllipticSurface.weierstrass((0, 1), (1,)),
    EllipticSurface.weierstrass((0, 1), (0, 1)),
    EllipticSurface(P.of(1, 1), P.of(0, 0, 1), P.of(2), P.of(1, 0, 3)),
], ids=lambda s: s.label)
def test_traces_match_point_counts(surface):
    f = as_function(surface)
    for p in (5, 7, 11, 13):
        fast = fiber_traces(surface, p)
        assert list(fast) == list(fiber_traces_brute(surface, p))
        for t in range(p):
            assert fast[t] == oracles.brute_trace(f, t, p)
            assert fast[t] == p - oracles.brute_point_count(f, t, p)


def test_hasse_and_singular_mask():
    for s in CLOSED_FORM_FAMILIES:
        for p in oracles.primes_td(5, 200):
            a = fiber_traces(s, p)
            bad = singular_mask(s, p)
            assert np.all(np.abs(a[~bad]) <= math.isqrt(4 * p))
    s = EllipticSurface.tconst(1, 0, 0, 0, 1)  # x^3 + T, singular only at t = 0
    assert list(np.flatnonzero(singular_mask(s, 7))) == [0]


def test_moment_examples():
    tlin = EllipticSurface.tlin(1, 1, 1, 0)
    assert moment(tlin, 5, 1) == (0, 0)
    assert moment(tlin, 5, 2)[0] == oracles.TLIN_M2_P5
    assert moment(EllipticSurface.tn(1), 5, 2)[0] == oracles.X3T_M2_P5
    total, A = moment(EllipticSurface.tconst(1, 1, 1, 1, 1), 7, 2)
    assert A.denominator * total == A.numerator * 7


def test_moments_against_oracle():
    for s in CLOSED_FORM_FAMILIES[:6]:
        f = as_function(s)
        for p in (5, 7, 11, 13, 17):
            assert moment(s, p, 2)[0] == oracles.brute_second_moment_sum(f, p)
            assert moment(s, p, 1)[0] == sum(oracles.brute_trace(f, t, p) for t in range(p))
            assert moment(s, p, 3)[0] == sum(oracles.brute_trace(f, t, p) ** 3 for t in range(p))


def test_first_moment_shortcut_agrees():
    for s in CLOSED_FORM_FAMILIES + [EllipticSurface.weierstrass((0, 1), (0, -1))]:
        for p in oracles.primes_td(5, 300):
            assert first_moment(s, p) == int(fiber_traces(s, p).sum())


@pytest.mark.parametrize("case,expected", sorted(oracles.CLOSED_FORM.items()))
def test_closed_form_examples(case, expected):
    kind, params, p = case
    assert closed_form_A2(kind, params, p) == expected


def test_closed_form_tn2_p7():
    assert closed_form_A2("tn", (2,), 7) == oracles.CLOSED_FORM_TN2_P7
    assert moment(EllipticSurface.tn(2), 7, 2)[0] == oracles.CLOSED_FORM_TN2_P7


@pytest.mark.parametrize("surface", CLOSED_FORM_FAMILIES, ids=lambda s: s.label)
def test_closed_forms_match_exact_moments(surface):
    checked = 0
    for p in oracles.primes_td(5, 199):
        cf = closed_form_for(surface, p)
        if cf is None:
            continue
        assert cf == moment(surface, p, 2)[0]
        checked += 1
    assert checked > 30


def test_closed_form_not_applicable():
    assert closed_form_A2("tconst", (1, 1, 1, 1, 5), 5) is None  # p | e
    assert closed_form_A2("tconst", (1, 3, 3, 1, 1), 5) is None  # b^2 - 3ac = 0
    assert closed_form_A2("wash", (7,), 7) is None
    assert closed_form_A2("tlin", (1, 1, 1, 0), 3) is None
    assert closed_form_for(EllipticSurface.weierstrass((0, 1), (1,)), 11) is None
    with pytest.raises(ContractViolation):
        closed_form_A2("nope", (), 7)


def test_c0_c1_against_definitions():
    for (a, c, d, e, g, *_rest) in TABLE1_ROWS[:6] + ((4, 1, 4, 0, 4),):
        for p in (7, 11, 13):
            got = c0_c1(a, c, d, e, g, p)
            if got is None:
                continue
            assert got == oracles.brute_c0_c1(a, c, g, p)
            assert c0_c1_brute(a, c, g, p) == got


def test_c0_c1_not_applicable():
    assert c0_c1(4, 1, 4, 0, 7, 7) is None
    assert c0_c1(4, 1, 7, 0, 4, 7) is None


def test_c0_c1_second_moment_identity():
    for (a, c, d, e, g, *_rest) in TABLE1_ROWS:
        s = EllipticSurface.c0c1_shape(a, c, d, e, g)
        for p in oracles.primes_td(5, 499):
            cc = c0_c1(a, c, d, e, g, p)
            if cc is None:
                continue
            c0, c1 = cc
            assert moment(s, p, 2)[0] == p * p + p * c1 - p * c0


def test_bias_statistics_small():
    tlin = EllipticSurface.tlin(1, 1, 1, 0)
    rep = bias_statistics(tlin, [5])
    assert rep.stat1 == (oracles.TLIN_M2_P5 - 25) / 5
    assert rep.stat32 == (oracles.TLIN_M2_P5 - 25) / 5 ** 1.5
    assert rep.p_lo_rank == rep.p_hi_rank == 3
    assert rep.sign == -1
    with pytest.raises(ContractViolation):
        bias_statistics(tlin, [])


def test_bias_statistics_recomputable_from_series():
    s = EllipticSurface.tconst(1, 1, 1, 1, 1)
    ps = oracles.primes_td(5, 400)
    rep = bias_statistics(s, ps)
    devs = [(r.M2 - r.p ** 2) / r.p for r in rep.series.records]
    assert rep.stat1 == pytest.approx(math.fsum(devs) / len(devs), rel=1e-15)
    assert rep.count == len(ps)


def test_predicted_bias_table():
    assert predicted_bias(EllipticSurface.tnx(2)) == pytest.approx(-4 / 3)
    assert predicted_bias(EllipticSurface.tnx(1)) == -1
    assert predicted_bias(EllipticSurface.tn(3)) == pytest.approx(-4 / 3)
    assert predicted_bias(EllipticSurface.wash(4)) == -2


def test_rosen_silverman_single_term():
    s = EllipticSurface.tlin(1, 1, 1, 0)
    m1 = moment(s, 5, 1)[0]
    assert rosen_silverman(s, 5) == pytest.approx(-m1 * math.log(5) / 5 / 5)
    assert math.isfinite(rosen_silverman(EllipticSurface.wash(4), 5))
    with pytest.raises(ContractViolation):
        rosen_silverman(s, 4)


def test_michel_ratio():
    s = EllipticSurface.tconst(1, 1, 1, 1, 1)
    assert michel_ratio(s, oracles.primes_td(5, 499)) <= 3
    m2 = moment(s, 11, 2)[0]
    assert michel_ratio(s, [11]) == pytest.approx(abs(m2 - 121) / 11 ** 1.5)


def test_parallel_series_is_identical():
    s = EllipticSurface.weierstrass((0, 1), (0, 1))
    ps = oracles.primes_td(5, 600)
    assert moment_series(s, ps, 1).records == moment_series(s, ps, 2).records


def test_expansion_zero_pair():
    terms = expansion_terms(X3_TX, 5, 10, zero_pair(), 1e4, 47)
    assert all(v == 0 for v in terms.as_dict().values())


def test_expansion_identities():
    terms = expansion_terms(X3_TX, 5, 10, fejer_pair(1.0), 1e4, 47)
    assert abs(terms.S_A - terms.S_Atilde) < 1e-10
    assert abs(terms.total - terms.direct) <= terms.tail_budget
    assert abs(terms.total - terms.direct - terms.replacement) < 1e-12


def test_surface_validation():
    with pytest.raises(ContractViolation):
        EllipticSurface(P(), P(), P.of(1), P.of(1))
    with pytest.raises(ContractViolation):
        EllipticSurface(P.of(1), P(), P.of(0, 1), P(), "tnx", (2,))
    assert EllipticSurface.wash(4).declared_rank == 1
    assert EllipticSurface.wash(2).declared_rank == 0
