"""Families given by Satake power sums, their symmetry constants and convolutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np

from lowlying.dirichlet import dlog_table, primitive_root
from lowlying.elliptic import EllipticSurface, fiber_traces, singular_mask
from lowlying.errors import ContractViolation
from lowlying.numth import (
    FactoredModulus,
    PrimeTable,
    jacobi_symbol,
    primes_between,
    primes_upto,
    squarefree_enumerate,
)
from lowlying.rmt import Classification, classify_symmetry
from lowlying.testfn import TestFunctionPair


class Backing(Protocol):
    degree: int
    name: str

    def power_sums(self, p: int, nu: int) -> tuple[np.ndarray, np.ndarray]:
        """(lambda(p^nu) per member, True where the member is unramified at p)."""


# ---------------------------------------------------------------------------
# backings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirichletBacking:
    """All primitive characters mod an odd square-free m."""

    modulus: FactoredModulus
    degree: int = 1

    @property
    def name(self) -> str:
        return f"primitive characters mod {self.modulus.m}"

    @property
    def size(self) -> int:
        return self.modulus.M2

    def _exponents(self) -> np.ndarray:
        return _exponent_matrix(self.modulus.factors)

    def power_sums(self, p, nu):
        fm = self.modulus
        if fm.m % p == 0:
            return np.zeros(fm.M2, dtype=complex), np.zeros(fm.M2, dtype=bool)
        phase = np.zeros(fm.M2)
        for col, q in enumerate(fm.factors):
            a = int(dlog_table(q, primitive_root(q))[p % q])
            phase += (self._exponents()[:, col] * a * nu % (q - 1)) / (q - 1)
        return np.exp(2j * np.pi * phase), np.ones(fm.M2, dtype=bool)


@lru_cache(maxsize=64)
def _exponent_matrix(factors: tuple[int, ...]) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(1, q - 1) for q in factors], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


@dataclass(frozen=True)
class QuadraticBacking:
    """chi_d(p) = (p/d) for odd square-free d."""

    ds: tuple[int, ...]
    degree: int = 1

    @classmethod
    def squarefree_range(cls, lo: int, hi: int) -> "QuadraticBacking":
        return cls(tuple(fm.m for fm in squarefree_enumerate(lo, hi)))

    @property
    def name(self) -> str:
        return f"quadratic characters, {len(self.ds)} moduli"

    def power_sums(self, p, nu):
        vals = np.array([jacobi_symbol(p, d) for d in self.ds], dtype=float)
        return vals ** nu, vals != 0


@dataclass(frozen=True)
class EllipticBacking:
    """Fibres of a surface: listed t values, or every t mod p when ts is None.

    lambda(p) = a_t(p)/sqrt(p); higher power sums follow from
    s_nu = lambda s_(nu-1) - s_(nu-2).  Singular fibres and p < 5 are ramified.
    """

    surface: EllipticSurface
    ts: tuple[int, ...] | None = None
    degree: int = 2

    @property
    def name(self) -> str:
        span = "t mod p" if self.ts is None else f"{len(self.ts)} values of t"
        return f"{self.surface.label}, {span}"

    def traces(self, p: int) -> tuple[np.ndarray, np.ndarray]:
        n = p if self.ts is None else len(self.ts)
        if p < 5:
            return np.zeros(n, dtype=np.int64), np.zeros(n, dtype=bool)
        t = np.arange(p, dtype=np.int64) if self.ts is None else np.array(self.ts, dtype=np.int64) % p
        a = fiber_traces(self.surface, p)[t]
        return a, ~singular_mask(self.surface, p, t)

    def power_sums(self, p, nu):
        a, ok = self.traces(p)
        lam = a / math.sqrt(p)
        return _chebyshev_power_sum(lam, nu), ok

    def lambda_sq_exact(self, p: int) -> list[Fraction]:
        """lambda(p^2) = a^2/p - 2 as exact rationals (good fibres only)."""
        a, ok = self.traces(p)
        return [Fraction(int(x) ** 2, p) - 2 for x in a[ok]]


def _chebyshev_power_sum(lam: np.ndarray, nu: int) -> np.ndarray:
    prev, cur = np.full_like(lam, 2.0), lam.copy()
    if nu == 0:
        return prev
    for _ in range(nu - 1):
        prev, cur = cur, lam * cur - prev
    return cur


@dataclass(frozen=True)
class ExplicitBacking:
    """Members given by fixed lists of Satake parameters, the same at every p."""

    parameters: tuple[tuple[complex, ...], ...]

    @property
    def degree(self) -> int:
        return max(len(a) for a in self.parameters)

    @property
    def name(self) -> str:
        return f"explicit list of {len(self.parameters)} members"

    def power_sums(self, p, nu):
        vals = np.array([sum(complex(a) ** nu for a in alphas) for alphas in self.parameters])
        return vals, np.ones(len(vals), dtype=bool)


def trivial_backing() -> ExplicitBacking:
    return ExplicitBacking(((1.0,),))


@dataclass(frozen=True)
class ConvolutionBacking:
    """Pairs (f, g) with lambda_{f x g}(p^nu) = lambda_f(p^nu) lambda_g(p^nu)."""

    left: Backing
    right: Backing

    @property
    def degree(self) -> int:
        return self.left.degree * self.right.degree

    @property
    def name(self) -> str:
        return f"({self.left.name}) x ({self.right.name})"

    def power_sums(self, p, nu):
        lf, of = self.left.power_sums(p, nu)
        lg, og = self.right.power_sums(p, nu)
        return np.outer(lf, lg).ravel(), np.outer(of, og).ravel()


@dataclass(frozen=True)
class SatakeFamilySpec:
    backing: Backing
    R: float = 1e4

    @property
    def degree(self) -> int:
        return self.backing.degree

    @property
    def name(self) -> str:
        return self.backing.name

    def power_sums(self, p: int, nu: int):
        return self.backing.power_sums(p, nu)


def convolve(F: SatakeFamilySpec, G: SatakeFamilySpec) -> SatakeFamilySpec:
    """Rankin-Selberg family; the contragredient pole case is not detected."""
    return SatakeFamilySpec(ConvolutionBacking(F.backing, G.backing), max(F.R, G.R))


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryEstimate:
    c_hat: float
    primes: tuple[int, ...]
    per_prime: tuple[float, ...]
    skipped: tuple[int, ...]  # ramified members skipped at each listed prime
    classification: Classification = field(compare=False)
    dropped_primes: tuple[int, ...] = ()  # primes where every member was ramified

    def running(self) -> list[float]:
        out, acc = [], []
        for v in self.per_prime:
            acc.append(v)
            out.append(math.fsum(acc) / len(acc))
        return out


SYMMETRY_COLUMNS = ("p", "avg_lambda_p2", "running_c_hat", "skipped")


def symmetry_constant(family: SatakeFamilySpec, primes: Sequence[int]) -> SymmetryEstimate:
    """Mean over primes of the average of Re lambda(p^2) over unramified members."""
    ps, avgs, skips, dropped = [], [], [], []
    for p in (int(q) for q in primes):
        vals, ok = family.power_sums(p, 2)
        if not ok.any():
            dropped.append(p)
            continue
        ps.append(p)
        skips.append(int((~ok).sum()))
        avgs.append(math.fsum(np.real(vals[ok])) / int(ok.sum()))
    if not avgs:
        raise ContractViolation("no unramified members at any prime in the range")
    c = math.fsum(avgs) / len(avgs)
    return SymmetryEstimate(c, tuple(ps), tuple(avgs), tuple(skips), classify_symmetry(c),
                            tuple(dropped))


@dataclass(frozen=True)
class TailEstimate:
    value: float
    majorant: float
    logR: float


def snu_tail(family: SatakeFamilySpec, pair: TestFunctionPair, R: float | None = None,
             delta: float = 0.0) -> TailEstimate:
    """The nu >= 3 part of the prime side, and a majorant for it.

    The majorant assumes |alpha_i(p)| <= p^delta and bounds |phi_hat| by phi_hat(0).
    """
    if delta >= 1 / 6:
        raise ContractViolation("the tail bound needs delta < 1/6")
    R = family.R if R is None else R
    logR = math.log(R)
    h0 = float(np.max(np.abs(pair.phi_hat(np.linspace(-pair.sigma, pair.sigma, 2001)))))
    terms, bound = [], []
    nu = 3
    while True:
        cutoff = math.exp(pair.sigma * logR / nu)
        if cutoff < 2:
            break
        for p in (int(q) for q in primes_upto(cutoff)):
            if p >= cutoff:
                continue
            w = float(pair.phi_hat(np.array([nu * math.log(p) / logR]))[0])
            base = math.log(p) / (p ** (nu / 2) * logR)
            bound.append(2 * family.degree * h0 * p ** (nu * delta) * base)
            if w == 0.0:
                continue
            vals, ok = family.power_sums(p, nu)
            if ok.any():
                avg = float(np.real(vals[ok]).sum()) / int(ok.sum())
                terms.append(-2 * w * base * avg)
        nu += 1
    return TailEstimate(math.fsum(terms), math.fsum(bound), logR)


def degree_one_majorant(sigma: float, R: float) -> float:
    """sum over nu >= 3 and p < R^(sigma/nu) of 2 log p / (p^(nu/2) log R)."""
    logR = math.log(R)
    total, nu = [], 3
    while math.exp(sigma * logR / nu) >= 2:
        ps = primes_upto(math.exp(sigma * logR / nu))
        ps = ps[ps < math.exp(sigma * logR / nu)].astype(float)
        total.extend(2 * np.log(ps) / (ps ** (nu / 2) * logR))
        nu += 1
    return math.fsum(total)


@lru_cache(maxsize=8)
def prime_sum_constants(X: float = 1e7) -> tuple[float, float]:
    """(2 sum_{p<=X} log p/p^2, 4 sum_{p<=X} (log p)^2/p^2)."""
    if X < 1e3:
        raise ContractViolation("X must be at least 1000")
    ps = primes_between(2, int(X)).astype(float)
    lp = np.log(ps)
    return 2 * math.fsum(lp / ps ** 2), 4 * math.fsum(lp * lp / ps ** 2)


def rank_upper_bound(r: int, sigma: float, logR: float, m_E: float,
                     constants: tuple[float, float] | None = None) -> float:
    """1/sigma + r + 1/2 + (C1/sigma - C2/(sigma^2 log R)) m_E / log R.

    C1, C2 default to prime_sum_constants(1e7).
    """
    if sigma <= 0 or logR <= 0 or m_E < 0:
        raise ContractViolation("need sigma > 0, log R > 0 and m_E >= 0")
    c1, c2 = prime_sum_constants() if constants is None else constants
    return 1 / sigma + r + 0.5 + (c1 / sigma - c2 / (sigma * sigma * logR)) * m_E / logR


def prime_range(lo: int, hi: int, by: str = "value") -> np.ndarray:
    """Primes with value in [lo, hi], or of rank lo..hi when by='rank'."""
    if by == "rank":
        return PrimeTable.first(hi).by_rank(lo, hi)
    if by == "value":
        return primes_between(lo, hi)
    raise ContractViolation(f"prime range must be by 'value' or 'rank', got {by!r}")
