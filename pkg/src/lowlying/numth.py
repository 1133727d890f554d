"""Exact integer substrate: primes, quadratic symbols, square-free moduli.

Everything here works in exact integers.  Vectorised helpers return numpy
``int64`` arrays; they assume the modulus is below 2**31 so that a product
of two reduced residues never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from lowlying.errors import ContractViolation

_SEGMENT = 1 << 20
# deterministic for n < 3.4e14
_MR_BASES = (2, 3, 5, 7, 11, 13, 17)


# ---------------------------------------------------------------------------
# primes
# ---------------------------------------------------------------------------

def _small_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for q in range(3, math.isqrt(n) + 1, 2):
        if flags[q]:
            flags[q * q::2 * q] = False
    return np.flatnonzero(flags).astype(np.int64)


def primes_between(lo: int, hi: int) -> np.ndarray:
    """All primes p with lo <= p <= hi, by a segmented sieve."""
    lo = max(int(lo), 2)
    hi = int(hi)
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    base = _small_sieve(math.isqrt(hi))
    chunks = []
    start = lo
    while start <= hi:
        stop = min(start + _SEGMENT, hi + 1)
        flags = np.ones(stop - start, dtype=bool)
        for q in base:
            q = int(q)
            if q * q >= stop:
                break
            first = max(q * q, -(-start // q) * q)
            flags[first - start::q] = False
        if start < 2:
            flags[: 2 - start] = False
        chunks.append(np.flatnonzero(flags).astype(np.int64) + start)
        start = stop
    return np.concatenate(chunks)


@dataclass(frozen=True)
class PrimeTable:
    """Ascending primes up to ``limit`` with 1-based rank access."""

    limit: int
    primes: np.ndarray = field(repr=False)

    @classmethod
    def upto(cls, limit: int) -> "PrimeTable":
        return cls(int(limit), primes_between(2, limit))

    @classmethod
    def first(cls, count: int) -> "PrimeTable":
        """A table holding at least the first ``count`` primes."""
        if count < 6:
            bound = 13
        else:
            lg = math.log(count)
            bound = int(count * (lg + math.log(lg))) + 3
        return cls.upto(bound)

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self) -> Iterator[int]:
        return (int(q) for q in self.primes)

    def nth(self, k: int) -> int:
        """The k-th prime, k >= 1."""
        if not 1 <= k <= len(self.primes):
            raise IndexError(f"rank {k} outside table of {len(self.primes)} primes")
        return int(self.primes[k - 1])

    def by_rank(self, first: int, last: int) -> np.ndarray:
        """Primes of rank first..last inclusive."""
        if first < 1 or last > len(self.primes) or first > last:
            raise IndexError(f"rank window [{first}, {last}] not available")
        return self.primes[first - 1:last]

    def count_upto(self, x: float) -> int:
        return int(np.searchsorted(self.primes, math.floor(x), side="right"))


_TABLE: list[PrimeTable] = [PrimeTable.upto(1 << 16)]


def primes_upto(x: float) -> np.ndarray:
    """Primes p <= x, served from a shared table that grows on demand."""
    n = int(math.floor(x))
    table = _TABLE[0]
    if n > table.limit:
        table = PrimeTable.upto(max(n, 2 * table.limit))
        _TABLE[0] = table
    return table.primes[: table.count_upto(n)]


def primes_below(x: float) -> np.ndarray:
    """Primes p < x."""
    ps = primes_upto(x)
    if len(ps) and ps[-1] >= x:
        return ps[:-1]
    return ps


def primes_by_rank(first: int, last: int) -> np.ndarray:
    return PrimeTable.first(last).by_rank(first, last)


def is_prime(n: int) -> bool:
    """Miller-Rabin with bases that are deterministic below 3.4e14."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def require_odd_prime(p: int) -> None:
    if p % 2 == 0 or not is_prime(p):
        raise ContractViolation(f"{p} is not an odd prime")


# ---------------------------------------------------------------------------
# quadratic symbols
# ---------------------------------------------------------------------------

def jacobi_symbol(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive n, by quadratic reciprocity."""
    if n <= 0 or n % 2 == 0:
        raise ContractViolation(f"Jacobi symbol needs an odd positive modulus, got {n}")
    a %= n
    sign = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a %= n
    return sign if n == 1 else 0


def legendre_symbol(a: int, p: int) -> int:
    """Legendre symbol (a/p); p must be an odd prime."""
    require_odd_prime(p)
    return jacobi_symbol(a, p)


def legendre_euler(a: int, p: int) -> int:
    """Euler's criterion a^((p-1)/2) mod p, kept as an independent check."""
    require_odd_prime(p)
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def legendre_table(p: int) -> np.ndarray:
    """Array ``chi`` with chi[a] = (a/p) for 0 <= a < p."""
    chi = np.full(p, -1, dtype=np.int64)
    x = np.arange(1, (p + 1) // 2, dtype=np.int64)
    chi[x * x % p] = 1
    chi[0] = 0
    return chi


# ---------------------------------------------------------------------------
# arithmetic functions
# ---------------------------------------------------------------------------

def factorize(n: int) -> dict[int, int]:
    """Trial division; intended for n up to about 1e8."""
    if n < 1:
        raise ContractViolation(f"cannot factor {n}")
    out: dict[int, int] = {}
    while n % 2 == 0:
        out[2] = out.get(2, 0) + 1
        n //= 2
    q = 3
    while q * q <= n:
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
        q += 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def euler_phi(n: int) -> int:
    result = n
    for q in factorize(n):
        result -= result // q
    return result


def mobius(n: int) -> int:
    fac = factorize(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def divisors(n: int) -> list[int]:
    ds = [1]
    for q, e in factorize(n).items():
        ds = [d * q**k for d in ds for k in range(e + 1)]
    return sorted(ds)


def primes_in_class_count(x: float, m: int, a: int) -> int:
    """pi(x; m, a), the number of primes p <= x with p = a mod m."""
    if m < 1 or math.gcd(a, m) != 1:
        raise ContractViolation(f"gcd({a}, {m}) must be 1")
    ps = primes_upto(x)
    return int(np.count_nonzero(ps % m == a % m))


def brun_titchmarsh_bound(x: float, m: int) -> float:
    """2x / (phi(m) log(x/m)), valid for x > 2m."""
    if x <= 2 * m:
        raise ContractViolation("the bound needs x > 2m")
    return 2.0 * x / (euler_phi(m) * math.log(x / m))


# ---------------------------------------------------------------------------
# square-free moduli
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactoredModulus:
    """An odd square-free modulus with its prime factors m_1 < ... < m_r."""

    m: int
    factors: tuple[int, ...]

    def __post_init__(self):
        if not self.factors or math.prod(self.factors) != self.m:
            raise ContractViolation(f"factors {self.factors} do not multiply to {self.m}")
        if list(self.factors) != sorted(set(self.factors)):
            raise ContractViolation(f"factors of {self.m} must be distinct and ascending")
        for q in self.factors:
            if q < 3 or not is_prime(q):
                raise ContractViolation(f"{self.m} is not odd square-free ({q})")

    @classmethod
    def of(cls, m: int) -> "FactoredModulus":
        fac = factorize(m)
        if any(e > 1 for e in fac.values()):
            raise ContractViolation(f"{m} is not square-free")
        return cls(m, tuple(sorted(fac)))

    @property
    def r(self) -> int:
        return len(self.factors)

    @property
    def tau(self) -> int:
        return 2 ** self.r

    @property
    def M1(self) -> int:
        """phi(m)."""
        return math.prod(q - 1 for q in self.factors)

    @property
    def M2(self) -> int:
        """Number of primitive characters mod m."""
        return math.prod(q - 2 for q in self.factors)


def _spf_table(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for q in _small_sieve(n):
        q = int(q)
        block = spf[q::q]
        block[block == 0] = q
    return spf


def squarefree_enumerate(lo: int, hi: int) -> list[FactoredModulus]:
    """All odd square-free m in [lo, hi] with their factorisations."""
    if not 3 <= lo <= hi:
        raise ContractViolation(f"need 3 <= lo <= hi, got [{lo}, {hi}]")
    spf = _spf_table(hi)
    out = []
    for m in range(lo | 1, hi + 1, 2):
        n, facs = m, []
        while n > 1:
            q = int(spf[n])
            n //= q
            if n % q == 0:
                break
            facs.append(q)
        else:
            out.append(FactoredModulus(m, tuple(facs)))
    return out


# ---------------------------------------------------------------------------
# integer polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntPolynomial:
    """Polynomial with integer coefficients, constant term first."""

    coefficients: tuple[int, ...] = ()

    def __post_init__(self):
        cs = [int(c) for c in self.coefficients]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coefficients", tuple(cs))

    @classmethod
    def of(cls, *coefficients: int) -> "IntPolynomial":
        return cls(tuple(coefficients))

    @classmethod
    def monomial(cls, c: int, n: int) -> "IntPolynomial":
        return cls((0,) * n + (c,))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return not self.coefficients

    def coefficient(self, k: int) -> int:
        return self.coefficients[k] if 0 <= k < len(self.coefficients) else 0

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def eval_mod(self, x, p: int):
        """Evaluate at an integer or int64 array modulo p."""
        x = np.asarray(x, dtype=np.int64) % p
        acc = np.zeros_like(x)
        for c in reversed(self.coefficients):
            acc = (acc * x + c % p) % p
        return acc

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        n = max(len(self.coefficients), len(other.coefficients))
        return IntPolynomial(tuple(self.coefficient(k) + other.coefficient(k) for k in range(n)))

    def scale(self, c: int) -> "IntPolynomial":
        return IntPolynomial(tuple(c * a for a in self.coefficients))

    def __str__(self) -> str:
        if not self.coefficients:
            return "0"
        terms = []
        for k, c in enumerate(self.coefficients):
            if c:
                terms.append(f"{c}" if k == 0 else f"{c}*T^{k}" if k > 1 else f"{c}*T")
        return " + ".join(terms)


def cubic_root_count(poly: IntPolynomial | Sequence[int], p: int) -> int:
    """Number of x in [0, p) with poly(x) = 0 mod p, for degree <= 3.

    A polynomial that vanishes identically mod p has p roots.
    """
    if not isinstance(poly, IntPolynomial):
        poly = IntPolynomial(tuple(poly))
    if poly.degree > 3:
        raise ContractViolation(f"degree {poly.degree} exceeds 3")
    require_odd_prime(p)
    x = np.arange(p, dtype=np.int64)
    return int(np.count_nonzero(poly.eval_mod(x, p) == 0))


def powmod_array(base: np.ndarray, e: int, p: int) -> np.ndarray:
    """Elementwise base**e mod p."""
    result = np.ones_like(base)
    b = base % p
    while e:
        if e & 1:
            result = result * b % p
        b = b * b % p
        e >>= 1
    return result
