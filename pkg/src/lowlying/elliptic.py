"""One-parameter elliptic surfaces y^2 = f(x, T) and their Frobenius-trace moments.

a_t(p) = -sum_x (f(x, t)/p) is computed for every t mod p at once.  When
the T-dependence of f is affine in one polynomial u(T), so that
f = g(x) + u(T) h(x), the per-value sums

    b(s) = -sum_x (g(x) + s h(x) / p)

form a cyclic correlation of the Legendre table with a weight vector and
come out of one FFT of length p.  Other surfaces fall back to an O(p^2) scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Sequence

import numpy as np

from lowlying.errors import ContractViolation
from lowlying.numth import (
    IntPolynomial,
    PrimeTable,
    cubic_root_count,
    legendre_symbol,
    legendre_table,
    powmod_array,
    primes_between,
    require_odd_prime,
)
from lowlying.parallel import ordered_map
from lowlying.testfn import TestFunctionPair

KINDS = ("tconst", "tlin", "tnx", "tn", "wash", "c0c1", "weierstrass")

P = IntPolynomial


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticSurface:
    """y^2 = a3(T) x^3 + a2(T) x^2 + a1(T) x + a0(T)."""

    a3: IntPolynomial
    a2: IntPolynomial
    a1: IntPolynomial
    a0: IntPolynomial
    kind: str | None = None
    params: tuple[int, ...] = ()
    declared_rank: int | None = None

    def __post_init__(self):
        if self.a3.is_zero():
            raise ContractViolation("leading coefficient a3(T) is identically zero")
        if self.kind is not None:
            if self.kind not in KINDS:
                raise ContractViolation(f"unknown family kind {self.kind!r}")
            expected = _BUILDERS[self.kind](*self.params)
            if expected != (self.a3, self.a2, self.a1, self.a0):
                raise ContractViolation(
                    f"coefficients do not match kind {self.kind} with params {self.params}")

    @property
    def coefficients(self) -> tuple[IntPolynomial, ...]:
        """(a0, a1, a2, a3)."""
        return (self.a0, self.a1, self.a2, self.a3)

    @property
    def label(self) -> str:
        if self.kind:
            return f"{self.kind}({','.join(map(str, self.params))})"
        return "y^2 = " + " + ".join(
            f"({c})x^{k}" for k, c in reversed(list(enumerate(self.coefficients))) if not c.is_zero())

    @classmethod
    def tconst(cls, a: int, b: int, c: int, d: int, e: int) -> "EllipticSurface":
        """y^2 = a x^3 + b x^2 + c x + d + e T."""
        return cls(*_build_tconst(a, b, c, d, e), "tconst", (a, b, c, d, e), 0)

    @classmethod
    def tlin(cls, a: int, b: int, c: int, d: int) -> "EllipticSurface":
        """y^2 = a x^3 + b x^2 + (c T + d) x."""
        return cls(*_build_tlin(a, b, c, d), "tlin", (a, b, c, d), 0)

    @classmethod
    def tnx(cls, n: int) -> "EllipticSurface":
        """y^2 = x^3 + T^n x."""
        return cls(*_build_tnx(n), "tnx", (n,), 0)

    @classmethod
    def tn(cls, n: int) -> "EllipticSurface":
        """y^2 = x^3 + T^n."""
        return cls(*_build_tn(n), "tn", (n,), 0)

    @classmethod
    def wash(cls, m: int) -> "EllipticSurface":
        """y^2 = x^3 + T x^2 + (m T - 3 m^2) x - m^3."""
        rank = 1 if m > 0 and math.isqrt(m) ** 2 == m else 0
        return cls(*_build_wash(m), "wash", (m,), rank)

    @classmethod
    def c0c1_shape(cls, a: int, c: int, d: int, e: int, g: int) -> "EllipticSurface":
        """y^2 = a x^3 + c x^2 + (d T + e) x + g."""
        return cls(*_build_c0c1(a, c, d, e, g), "c0c1", (a, c, d, e, g))

    @classmethod
    def weierstrass(cls, A: Sequence[int], B: Sequence[int]) -> "EllipticSurface":
        """y^2 = x^3 + A(T) x + B(T); A and B given constant term first."""
        return cls(*_build_weierstrass(A, B))

    def at(self, t: int) -> tuple[int, int, int, int]:
        """Integer coefficients (a0, a1, a2, a3) of the fibre at T = t."""
        return tuple(c(t) for c in self.coefficients)


def _build_tconst(a, b, c, d, e):
    return P.of(a), P.of(b), P.of(c), P.of(d, e)


def _build_tlin(a, b, c, d):
    return P.of(a), P.of(b), P.of(d, c), P()


def _build_tnx(n):
    if n < 1:
        raise ContractViolation("n must be positive")
    return P.of(1), P(), P.monomial(1, n), P()


def _build_tn(n):
    if n < 1:
        raise ContractViolation("n must be positive")
    return P.of(1), P(), P(), P.monomial(1, n)


def _build_wash(m):
    if m == 0:
        raise ContractViolation("m must be nonzero")
    return P.of(1), P.of(0, 1), P.of(-3 * m * m, m), P.of(-m ** 3)


def _build_c0c1(a, c, d, e, g):
    return P.of(a), P.of(c), P.of(e, d), P.of(g)


def _build_weierstrass(A, B):
    return P.of(1), P(), P(tuple(A)), P(tuple(B))


_BUILDERS = {
    "tconst": _build_tconst,
    "tlin": _build_tlin,
    "tnx": _build_tnx,
    "tn": _build_tn,
    "wash": _build_wash,
    "c0c1": _build_c0c1,
    "weierstrass": _build_weierstrass,
}


# ---------------------------------------------------------------------------
# affine structure f = g(x) + u(T) h(x)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineSplit:
    u: IntPolynomial
    g: tuple[int, ...]  # x-coefficients, constant first
    h: tuple[int, ...]


def affine_split(surface: EllipticSurface) -> AffineSplit | None:
    """Write each a_i(T) = g_i + h_i u(T) for a common primitive u, if possible."""
    u = None
    for c in surface.coefficients:
        rest = c + P.of(-c.coefficient(0))
        if rest.is_zero():
            continue
        content = math.gcd(*rest.coefficients)
        lead = rest.coefficients[-1]
        prim = rest.scale(1) if content == 1 else P(tuple(a // content for a in rest.coefficients))
        if lead < 0:
            prim = prim.scale(-1)
        if u is None:
            u = prim
        elif prim != u:
            return None
    if u is None:
        u = P.of(0, 1)
    g, h = [], []
    for c in surface.coefficients:
        rest = c + P.of(-c.coefficient(0))
        g.append(c.coefficient(0))
        if rest.is_zero():
            h.append(0)
        else:
            k = u.degree
            h.append(rest.coefficient(k) // u.coefficient(k))
    return AffineSplit(u, tuple(g), tuple(h))


def _eval_x(coeffs: Sequence[int], x: np.ndarray, p: int) -> np.ndarray:
    acc = np.zeros_like(x)
    for c in reversed(coeffs):
        acc = (acc * x + c % p) % p
    return acc


def _value_sums(split: AffineSplit, p: int, chi: np.ndarray) -> np.ndarray:
    """b[s] = -sum_x chi(g(x) + s h(x)) for s in [0, p)."""
    x = np.arange(p, dtype=np.int64)
    gx = _eval_x(split.g, x, p)
    hx = _eval_x(split.h, x, p)
    zero = hx == 0
    const = int(chi[gx[zero]].sum())
    hv, gv = hx[~zero], gx[~zero]
    r = gv * powmod_array(hv, p - 2, p) % p
    w = np.bincount(r, weights=chi[hv], minlength=p)
    corr = np.fft.irfft(np.conj(np.fft.rfft(w)) * np.fft.rfft(chi.astype(float)), n=p)
    return -(const + np.rint(corr).astype(np.int64))


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

def _check_prime(p: int) -> None:
    require_odd_prime(p)
    if p < 5:
        raise ContractViolation(f"elliptic scans need p >= 5, got {p}")


def _coeff_values(surface: EllipticSurface, t: np.ndarray, p: int) -> list[np.ndarray]:
    return [c.eval_mod(t, p) for c in surface.coefficients]


def singular_mask(surface: EllipticSurface, p: int, t: np.ndarray | None = None) -> np.ndarray:
    """True where a3(t) = 0 or the cubic's discriminant vanishes mod p."""
    if t is None:
        t = np.arange(p, dtype=np.int64)
    d, c, b, a = _coeff_values(surface, t, p)

    def mul(*xs):
        out = np.ones_like(xs[0])
        for v in xs:
            out = out * (v % p) % p
        return out

    disc = (mul(np.full_like(a, 18), a, b, c, d) - mul(np.full_like(a, 4), b, b, b, d)
            + mul(b, b, c, c) - mul(np.full_like(a, 4), a, c, c, c)
            - mul(np.full_like(a, 27), a, a, d, d)) % p
    return (a == 0) | (disc == 0)


def singular_fiber(surface: EllipticSurface, t: int, p: int) -> bool:
    return bool(singular_mask(surface, p, np.array([t % p], dtype=np.int64))[0])


def frobenius_trace(surface: EllipticSurface, t: int, p: int) -> int:
    """a_t(p) = -sum_x (f(x, t)/p), singular fibres included."""
    _check_prime(p)
    chi = legendre_table(p)
    x = np.arange(p, dtype=np.int64)
    vals = [int(c(t)) % p for c in surface.coefficients]
    return -int(chi[_eval_x(vals, x, p)].sum())


def fiber_traces_brute(surface: EllipticSurface, p: int) -> np.ndarray:
    """a_t(p) for all t mod p by the O(p^2) double scan."""
    _check_prime(p)
    chi = legendre_table(p)
    x = np.arange(p, dtype=np.int64)
    t = np.arange(p, dtype=np.int64)
    coeffs = _coeff_values(surface, t, p)
    out = np.empty(p, dtype=np.int64)
    block = max(1, (1 << 22) // p)
    for lo in range(0, p, block):
        cs = [c[lo:lo + block, None] for c in coeffs]
        acc = np.zeros((len(cs[0]), p), dtype=np.int64)
        for c in reversed(cs):
            acc = (acc * x[None, :] + c) % p
        out[lo:lo + block] = -chi[acc].sum(axis=1)
    return out


def fiber_traces(surface: EllipticSurface, p: int) -> np.ndarray:
    """a_t(p) for t = 0..p-1."""
    _check_prime(p)
    split = affine_split(surface)
    if split is None:
        return fiber_traces_brute(surface, p)
    b = _value_sums(split, p, legendre_table(p))
    return b[split.u.eval_mod(np.arange(p, dtype=np.int64), p)]


def _power_sum(values: np.ndarray, r: int) -> int:
    if r <= 2:
        return int((values.astype(np.int64) ** r).sum())
    vals, counts = np.unique(values, return_counts=True)
    return sum(int(c) * int(v) ** r for v, c in zip(vals, counts))


def first_moment(surface: EllipticSurface, p: int) -> int:
    """sum_t a_t(p); O(p) when u(T) = +-T, else from the full trace vector."""
    _check_prime(p)
    split = affine_split(surface)
    if split is not None and split.u.coefficients in ((0, 1), (0, -1)):
        # sum_s chi(g + s h) over s vanishes unless h(x) = 0
        x = np.arange(p, dtype=np.int64)
        roots = np.flatnonzero(_eval_x(split.h, x, p) == 0)
        g = IntPolynomial(split.g)
        return -p * sum(legendre_symbol(g(int(r)), p) for r in roots)
    return int(fiber_traces(surface, p).sum())


def moment(surface: EllipticSurface, p: int, r: int) -> tuple[int, Fraction]:
    """(sum_t a_t(p)^r, that sum divided by p)."""
    if r < 1:
        raise ContractViolation("r must be at least 1")
    total = first_moment(surface, p) if r == 1 else _power_sum(fiber_traces(surface, p), r)
    return total, Fraction(total, p)


# ---------------------------------------------------------------------------
# moment series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentRecord:
    p: int
    M1: int
    M2: int
    singular_count: int

    @property
    def A1(self) -> Fraction:
        return Fraction(self.M1, self.p)

    @property
    def A2(self) -> Fraction:
        return Fraction(self.M2, self.p)

    def csv_row(self) -> dict:
        return {"p": self.p, "M1": self.M1, "M2": self.M2,
                "A1_num": self.A1.numerator, "A1_den": self.A1.denominator,
                "A2_num": self.A2.numerator, "A2_den": self.A2.denominator,
                "singular_count": self.singular_count}


MOMENT_COLUMNS = ("p", "M1", "M2", "A1_num", "A1_den", "A2_num", "A2_den", "singular_count")


@dataclass(frozen=True)
class MomentSeries:
    surface: EllipticSurface
    records: tuple[MomentRecord, ...]

    @property
    def primes(self) -> list[int]:
        return [r.p for r in self.records]


def moment_record(surface: EllipticSurface, p: int) -> MomentRecord:
    traces = fiber_traces(surface, p)
    bad = singular_mask(surface, p)
    good = traces[~bad]
    if np.any(good * good > 4 * p):
        raise ArithmeticError(f"Hasse bound violated at p={p} for {surface.label}")
    return MomentRecord(p, int(traces.sum()), _power_sum(traces, 2), int(bad.sum()))


def moment_series(surface: EllipticSurface, primes: Sequence[int],
                  workers: int | None = None) -> MomentSeries:
    ps = [int(p) for p in primes]
    for p in ps:
        _check_prime(p)
    records = ordered_map(partial(moment_record, surface), ps, workers)
    return MomentSeries(surface, tuple(records))


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _leg(a: int, p: int) -> int:
    return legendre_symbol(a, p)


def _cubic_char_sum(coeffs: Sequence[int], p: int) -> int:
    x = np.arange(p, dtype=np.int64)
    return int(legendre_table(p)[_eval_x(coeffs, x, p)].sum())


def closed_form_A2(kind: str, params: Sequence[int], p: int) -> int | None:
    """Closed form for sum_t a_t(p)^2, or None where the form does not apply."""
    require_odd_prime(p)
    if p <= 3:
        return None
    params = tuple(params)
    if kind == "tconst":
        a, b, c, d, e = params
        D = b * b - 3 * a * c
        if a % p == 0 or e % p == 0 or D % p == 0:
            return None
        return p * p - p * (1 + _leg(D, p) + _leg(-3, p))
    if kind == "tlin":
        a, b, c, d = params
        if a % p == 0 or b % p == 0 or c % p == 0:
            return None
        return p * p - p * (2 + _leg(-1, p))
    if kind == "tnx":
        (n,) = params
        if n % 2 == 0:
            return (p - 1) * _cubic_char_sum((0, 1, 0, 1), p) ** 2
        return (p * p - p) * (1 + _leg(-1, p))
    if kind == "tn":
        (n,) = params
        if n % 3 == 0:
            return (p - 1) * _cubic_char_sum((1, 0, 0, 1), p) ** 2
        return (p * p - p) * (1 + _leg(-3, p))
    if kind == "wash":
        (m,) = params
        if m % p == 0:
            return None
        return p * p - p * (2 + 2 * _leg(-3, p)) - 1
    raise ContractViolation(f"no closed form for kind {kind!r}")


def closed_form_for(surface: EllipticSurface, p: int) -> int | None:
    if surface.kind is None or surface.kind in ("c0c1", "weierstrass"):
        return None
    return closed_form_A2(surface.kind, surface.params, p)


# predicted average of the coefficient of p in sum_t a_t^2 - p^2
PREDICTED_BIAS = {
    "tconst": -1.0,
    "tlin": -1.0,
    "tnx_even": -4.0 / 3.0,
    "tnx_odd": -1.0,
    "tn_zero": -4.0 / 3.0,
    "tn_nonzero": -1.0,
    "wash": -2.0,
}


def predicted_bias(surface: EllipticSurface) -> float | None:
    k, prm = surface.kind, surface.params
    if k == "tnx":
        return PREDICTED_BIAS["tnx_even" if prm[0] % 2 == 0 else "tnx_odd"]
    if k == "tn":
        return PREDICTED_BIAS["tn_zero" if prm[0] % 3 == 0 else "tn_nonzero"]
    return PREDICTED_BIAS.get(k)


# ---------------------------------------------------------------------------
# c0 / c1 for y^2 = a x^3 + c x^2 + (d T + e) x + g
# ---------------------------------------------------------------------------

def c0_c1_brute(a: int, c: int, g: int, p: int) -> tuple[int, int]:
    """Direct O(p^2) count over all (x, y)."""
    chi = legendre_table(p)
    x = np.arange(p, dtype=np.int64)
    c0 = cubic_root_count(P.of(-g, 0, c, 2 * a), p)
    X, Y = np.meshgrid(x, x, indexing="ij")
    lhs = (a * X % p * (Y * Y % p) + (a * X % p * X + c * X) % p * Y - g) % p
    c1 = int(chi[(X * Y % p)[lhs == 0]].sum())
    return c0, c1


def _c1_fast(a: int, c: int, g: int, p: int, chi: np.ndarray) -> int:
    # substituting v = 1/u turns the solution count into one Legendre sum
    v = np.arange(1, p, dtype=np.int64)
    w = (g * v - c) % p
    return int(chi[(v * (w * w % p) - 4 * a * a) % p].sum())


def c0_c1(a: int, c: int, d: int, e: int, g: int, p: int,
          chi: np.ndarray | None = None) -> tuple[int, int] | None:
    """(c0(p), c1(p)), or None when p divides d or g."""
    _check_prime(p)
    if d % p == 0 or g % p == 0:
        return None
    if a % p == 0:
        return c0_c1_brute(a, c, g, p)
    chi = legendre_table(p) if chi is None else chi
    x = np.arange(p, dtype=np.int64)
    c0 = int(np.count_nonzero(_eval_x((-g, 0, c, 2 * a), x, p) == 0))
    return c0, _c1_fast(a, c, g, p, chi)


TABLE1_ROWS = (
    # (a, c, d, e, g, printed mean c1/sqrt(p), printed mean c0)
    (4, -7, 4, 0, 4, 0.0068, 0.974),
    (4, 5, 4, -2, 1, -0.0176, 1.005),
    (4, 5, 4, 2, 1, -0.0174, 1.005),
    (4, 1, 4, 2, 1, 0.0399, 0.993),
    (4, 1, 4, 0, 4, 0.0068, 0.985),
    (4, 1, 4, 6, 9, -0.0113, 1.988),
    (4, 4, 4, 0, 1, 0.0072, 0.974),
    (4, 5, 4, 4, 4, 0.0035, 1.012),
    (4, 4, 4, 0, 9, 0.0256, 1.005),
    (4, 5, 4, 0, 4, 0.0043, 1.005),
    (4, 5, 4, 6, 9, -0.0143, 1.037),
)
TABLE1_RANKS = (6001, 7000)


@dataclass(frozen=True)
class Table1Row:
    params: tuple[int, int, int, int, int]
    mean_c1: float  # mean of c1(p)/sqrt(p)
    mean_c0: float
    printed_c1: float | None
    printed_c0: float | None
    count: int


def _table1_prime(rows, p):
    chi = legendre_table(p)
    return [c0_c1(a, c, d, e, g, p, chi) for (a, c, d, e, g) in rows]


def table1_averages(rows=TABLE1_ROWS, ranks: tuple[int, int] = TABLE1_RANKS,
                    workers: int | None = None) -> list[Table1Row]:
    """Mean c1(p)/sqrt(p) and mean c0(p) over primes of rank ranks[0]..ranks[1]."""
    params = [tuple(r[:5]) for r in rows]
    ps = [int(p) for p in PrimeTable.first(ranks[1]).by_rank(*ranks)]
    per_prime = ordered_map(partial(_table1_prime, params), ps, workers)
    out = []
    for i, row in enumerate(rows):
        c0s, c1s = [], []
        for p, vals in zip(ps, per_prime):
            if vals[i] is None:
                continue
            c0s.append(vals[i][0])
            c1s.append(vals[i][1] / math.sqrt(p))
        out.append(Table1Row(params[i], math.fsum(c1s) / len(c1s), math.fsum(c0s) / len(c0s),
                             row[5] if len(row) > 5 else None,
                             row[6] if len(row) > 6 else None, len(c0s)))
    return out


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiasReport:
    label: str
    p_lo: int
    p_hi: int
    p_lo_rank: int
    p_hi_rank: int
    stat32: float
    stat1: float
    count: int
    series: MomentSeries = field(repr=False, compare=False, default=None)

    @property
    def sign(self) -> int:
        return (self.stat1 > 0) - (self.stat1 < 0)

    def csv_row(self) -> dict:
        return {"p_lo_rank": self.p_lo_rank, "p_hi_rank": self.p_hi_rank,
                "stat32": self.stat32, "stat1": self.stat1, "sign": self.sign}


BIAS_COLUMNS = ("p_lo_rank", "p_hi_rank", "stat32", "stat1", "sign")


def _prime_rank(p: int) -> int:
    return len(primes_between(2, p))


def bias_statistics(surface: EllipticSurface, primes: Sequence[int],
                    workers: int | None = None) -> BiasReport:
    """E_p[(M2 - p^2)/p^(3/2)] and E_p[(M2 - p^2)/p] with M2 = sum_t a_t(p)^2."""
    ps = sorted(int(p) for p in primes)
    if not ps:
        raise ContractViolation("empty prime range")
    series = moment_series(surface, ps, workers)
    dev = [(r.M2 - r.p * r.p, r.p) for r in series.records]
    stat32 = math.fsum(x / p ** 1.5 for x, p in dev) / len(dev)
    stat1 = math.fsum(x / p for x, p in dev) / len(dev)
    return BiasReport(surface.label, ps[0], ps[-1], _prime_rank(ps[0]), _prime_rank(ps[-1]),
                      stat32, stat1, len(ps), series)


def rosen_silverman(surface: EllipticSurface, X: float, workers: int | None = None) -> float:
    """-(1/X) sum_{5 <= p <= X} (sum_t a_t(p)) log p / p.

    The unnormalised first moment is used and the sign is flipped, so the
    value tends to the rank of the surface over Q(T).
    """
    if X < 5:
        raise ContractViolation("X must be at least 5")
    ps = [int(p) for p in primes_between(5, int(X))]
    m1 = ordered_map(partial(first_moment, surface), ps, workers)
    return -math.fsum(s * math.log(p) / p for s, p in zip(m1, ps)) / X


def michel_ratio(surface: EllipticSurface, primes: Sequence[int],
                 workers: int | None = None) -> float:
    """max_p |sum_t a_t^2 - p^2| / p^(3/2)."""
    series = moment_series(surface, primes, workers)
    return max(abs(r.M2 - r.p * r.p) / r.p ** 1.5 for r in series.records)


# ---------------------------------------------------------------------------
# expansion of the prime side in moments of lambda = a_t/sqrt(p)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionTerms:
    S_Aprime: float
    S_0: float
    S_1: float
    S_2: float
    S_A: float
    S_Atilde: float
    direct: float
    tail_budget: float
    replacement: float  # exact effect of phi_hat(m L) -> phi_hat(0) for m >= 3

    @property
    def total(self) -> float:
        return self.S_Aprime + self.S_0 + self.S_1 + self.S_2 + self.S_A

    def as_dict(self) -> dict:
        return {"S_Aprime": self.S_Aprime, "S_0": self.S_0, "S_1": self.S_1,
                "S_2": self.S_2, "S_A": self.S_A, "S_Atilde": self.S_Atilde,
                "total": self.total, "direct": self.direct, "tail_budget": self.tail_budget,
                "replacement": self.replacement}


def _fiber_lambdas(surface: EllipticSurface, ts: np.ndarray, p: int):
    a = fiber_traces(surface, p)[ts % p]
    bad = singular_mask(surface, p, ts % p)
    return a.astype(float) / math.sqrt(p), bad, a


def expansion_terms(surface: EllipticSurface, t_lo: int, t_hi: int,
                    pair: TestFunctionPair, R: float, prime_bound: int,
                    max_power: int = 2000) -> ExpansionTerms:
    """Each term of the moment expansion, and the direct Satake-side sum.

    Members are t in [t_lo, t_hi] with unit weights; a fibre counts as bad
    at p when a3(t) or the discriminant vanishes mod p.  Bad fibres enter
    through lambda^m, good ones through 2 cos(m theta) with lambda = 2 cos theta.
    """
    if t_hi < t_lo:
        raise ContractViolation("empty t range")
    ts = np.arange(t_lo, t_hi + 1, dtype=np.int64)
    W = len(ts)
    logR = math.log(R)
    hat = lambda u: float(pair.phi_hat(np.array([u]))[0])
    h0 = hat(0.0)
    lip = max(h0 / pair.sigma, 1e-300)  # Lipschitz constant of the built-in pair
    parts = {k: [] for k in ("Ap", "0", "1", "2", "A", "At", "direct", "budget", "repl")}
    for p in (int(q) for q in primes_between(5, prime_bound)):
        lam, bad, a = _fiber_lambdas(surface, ts, p)
        if np.any((a * a)[~bad] > 4 * p):
            raise ArithmeticError(f"Hasse bound violated at p={p}")
        good = lam[~bad]
        L1 = math.log(p) / logR
        mmax = int(math.floor(pair.sigma / L1)) + 1
        # A' part: bad fibres, every m with phi_hat(m L1) != 0
        sp = 0.0
        for m in range(1, mmax + 1):
            Am = float(np.sum(lam[bad] ** m)) / W
            sp += Am / p ** (m / 2) * L1 * hat(m * L1)
        parts["Ap"].append(-2 * sp)
        A0 = len(good) / W
        A1 = float(good.sum()) / W
        A2 = float((good ** 2).sum()) / W
        parts["0"].append(-2 * h0 * 2 * A0 * L1 / (p * (p + 1)) + 2 * 2 * A0 * L1 / p * hat(2 * L1))
        parts["1"].append(-2 * A1 / math.sqrt(p) * L1 * hat(L1)
                          + 2 * h0 * A1 * (3 * p + 1) / (math.sqrt(p) * (p + 1) ** 2) * L1)
        parts["2"].append(-2 * A2 * L1 / p * hat(2 * L1)
                          + 2 * h0 * A2 * (4 * p * p + 3 * p + 1) / (p * (p + 1) ** 3) * L1)
        # S_A: sum over r >= 3 of A_r p^(r/2) (p-1)/(p+1)^(r+1), truncated once negligible
        ratio = good * math.sqrt(p) / (p + 1)
        powr = ratio ** 3
        sa = []
        for r in range(3, max_power):
            term = float(powr.sum()) / W
            sa.append(term)
            if np.max(np.abs(powr), initial=0.0) < 1e-18:
                break
            powr = powr * ratio
        parts["A"].append(-2 * h0 * math.fsum(sa) * (p - 1) / (p + 1) * L1)
        At = float(np.sum(good ** 3 / (p + 1 - good * math.sqrt(p)))) / W
        parts["At"].append(-2 * h0 * At * p ** 1.5 * (p - 1) / (p + 1) ** 3 * L1)
        # direct sum with phi_hat evaluated at every m
        theta = np.arccos(np.clip(good / 2, -1.0, 1.0))
        direct = []
        for m in range(1, mmax + 1):
            w = hat(m * L1)
            if w == 0.0:
                continue
            s_good = float(np.sum(2 * np.cos(m * theta)))
            s_bad = float(np.sum(lam[bad] ** m))
            direct.append((s_good + s_bad) / W / p ** (m / 2) * w)
        # the expansion replaced phi_hat(m L1) by phi_hat(0) in every good m >= 3 term
        missing = []
        for m in range(3, max_power):
            c = float(np.sum(2 * np.cos(m * theta))) / W / p ** (m / 2)
            missing.append(c * (hat(m * L1) - h0))
            if p ** (-m / 2) < 1e-20:
                break
        parts["direct"].append(-2 * L1 * math.fsum(direct))
        parts["repl"].append(2 * L1 * math.fsum(missing))
        budget = 0.0
        for m in range(3, max_power):
            budget += 2 * A0 * 2 * p ** (-m / 2) * L1 * min(2 * h0, lip * m * L1)
            if p ** (-m / 2) < 1e-20:
                break
        parts["budget"].append(budget)
    f = math.fsum
    return ExpansionTerms(f(parts["Ap"]), f(parts["0"]), f(parts["1"]), f(parts["2"]),
                          f(parts["A"]), f(parts["At"]), f(parts["direct"]), f(parts["budget"]),
                          f(parts["repl"]))
