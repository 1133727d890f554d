"""Dirichlet characters over odd square-free moduli and their family sums."""

from __future__ import annotations

import cmath
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np

from lowlying.errors import ContractViolation
from lowlying.numth import (
    FactoredModulus,
    divisors,
    euler_phi,
    factorize,
    is_prime,
    mobius,
    primes_below,
)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# primitive roots and discrete logs
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def primitive_roots(q: int, count: int = 2) -> tuple[int, ...]:
    """The ``count`` smallest primitive roots of the prime q."""
    if not is_prime(q):
        raise ContractViolation(f"{q} is not prime")
    if q == 2:
        return (1,)
    order_factors = list(factorize(q - 1))
    found = []
    for g in range(2, q):
        if all(pow(g, (q - 1) // f, q) != 1 for f in order_factors):
            found.append(g)
            if len(found) == count:
                break
    return tuple(found)


def primitive_root(q: int, index: int = 0) -> int:
    """Smallest primitive root of q (index 1 gives the second smallest).

    Falls back to the largest available root when q has too few.
    """
    roots = primitive_roots(q, index + 1)
    return roots[min(index, len(roots) - 1)]


@lru_cache(maxsize=256)
def dlog_table(q: int, g: int) -> np.ndarray:
    """Array L with g**L[k] = k mod q for 1 <= k < q; L[0] = -1."""
    table = np.full(q, -1, dtype=np.int64)
    x = 1
    for a in range(q - 1):
        table[x] = a
        x = x * g % q
    return table


# ---------------------------------------------------------------------------
# characters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirichletCharacter:
    """Character mod m, one exponent per prime factor against a fixed root.

    Exponent 0 on a factor makes that component trivial; such characters
    are not primitive and exist only for orthogonality checks.
    """

    modulus: FactoredModulus
    generators: tuple[int, ...]
    exponents: tuple[int, ...]

    def __post_init__(self):
        r = self.modulus.r
        if len(self.generators) != r or len(self.exponents) != r:
            raise ContractViolation("one generator and one exponent per prime factor")
        for q, e in zip(self.modulus.factors, self.exponents):
            if not 0 <= e <= q - 2:
                raise ContractViolation(f"exponent {e} out of range for factor {q}")

    @property
    def m(self) -> int:
        return self.modulus.m

    @property
    def is_primitive(self) -> bool:
        return all(e > 0 for e in self.exponents)

    def phase(self, k: int) -> Fraction | None:
        """Exact angle of chi(k) as a fraction of a full turn; None if chi(k) = 0."""
        if math.gcd(k, self.m) != 1:
            return None
        total = Fraction(0)
        for q, g, e in zip(self.modulus.factors, self.generators, self.exponents):
            a = int(dlog_table(q, g)[k % q])
            total += Fraction(e * a % (q - 1), q - 1)
        return total % 1

    def __call__(self, k: int) -> complex:
        ph = self.phase(k)
        if ph is None:
            return 0j
        return _unit(ph)

    def conjugate(self) -> "DirichletCharacter":
        exps = tuple((-e) % (q - 1) for q, e in zip(self.modulus.factors, self.exponents))
        return DirichletCharacter(self.modulus, self.generators, exps)


def _unit(ph: Fraction) -> complex:
    # exact on the axes so that real characters stay real
    quarter = ph * 4
    if quarter.denominator == 1:
        return (1, 1j, -1, -1j)[int(quarter) % 4]
    return cmath.exp(2j * math.pi * float(ph))


def char_value(chi: DirichletCharacter, k: int) -> complex:
    if k < 0:
        raise ContractViolation("k must be nonnegative")
    return chi(k)


def _generators(modulus: FactoredModulus, root_index: int) -> tuple[int, ...]:
    return tuple(primitive_root(q, root_index) for q in modulus.factors)


@dataclass(frozen=True)
class PrimitiveFamily:
    """All primitive characters mod m, lexicographic in the exponents."""

    modulus: FactoredModulus
    root_index: int = 0

    @property
    def size(self) -> int:
        return self.modulus.M2

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[DirichletCharacter]:
        gens = _generators(self.modulus, self.root_index)
        ranges = [range(1, q - 1) for q in self.modulus.factors]
        for exps in itertools.product(*ranges):
            yield DirichletCharacter(self.modulus, gens, exps)

    def exponent_matrix(self) -> np.ndarray:
        """Rows of exponents, shape (M2, r)."""
        ranges = [np.arange(1, q - 1) for q in self.modulus.factors]
        grid = np.meshgrid(*ranges, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1).astype(np.int64)


def all_characters(modulus: FactoredModulus) -> Iterator[DirichletCharacter]:
    """Every character mod m (phi(m) of them), primitive or not."""
    gens = _generators(modulus, 0)
    for exps in itertools.product(*[range(q - 1) for q in modulus.factors]):
        yield DirichletCharacter(modulus, gens, exps)


def gauss_sum(chi: DirichletCharacter) -> complex:
    """c(m, chi) = sum_k chi(k) e(k/m)."""
    if not chi.is_primitive:
        raise ContractViolation("Gauss sum requested for a non-primitive character")
    m = chi.m
    k = np.arange(m, dtype=np.int64)
    angle = np.zeros(m, dtype=float)
    alive = np.gcd(k, m) == 1
    for q, g, e in zip(chi.modulus.factors, chi.generators, chi.exponents):
        a = dlog_table(q, g)[k % q]
        angle += (e * a % (q - 1)) / (q - 1)
    vals = np.where(alive, np.exp(2j * np.pi * (angle + k / m)), 0)
    return complex(vals.sum())


# ---------------------------------------------------------------------------
# family character sums
# ---------------------------------------------------------------------------

def family_sum_chi(m: FactoredModulus, p: int, nu: int) -> int:
    """Sum over primitive chi mod m of chi(p)^nu + conj(chi)(p)^nu, exactly.

    Returns 0 when p divides m.
    """
    if nu not in (1, 2):
        raise ContractViolation(f"nu must be 1 or 2, got {nu}")
    if m.m % p == 0:
        log.debug("p=%d divides m=%d; contribution set to 0", p, m.m)
        return 0
    prod = 1
    for q in m.factors:
        r = p % q
        hit = r == 1 or (nu == 2 and r == q - 1)
        prod *= (q - 2) if hit else -1
    return 2 * prod


def family_sum_vector(m: FactoredModulus, primes: np.ndarray, nu: int) -> np.ndarray:
    """family_sum_chi over an array of primes."""
    if nu not in (1, 2):
        raise ContractViolation(f"nu must be 1 or 2, got {nu}")
    out = np.full(len(primes), 2, dtype=np.int64)
    for q in m.factors:
        r = primes % q
        hit = (r == 1) | ((r == q - 1) if nu == 2 else False)
        out *= np.where(hit, q - 2, -1)
    out[m.m % primes == 0] = 0
    return out


def brute_force_family_sum(m: FactoredModulus, p: int, nu: int, root_index: int = 0) -> int:
    """family_sum_chi by explicit enumeration of every primitive character."""
    if m.m % p == 0:
        return 0
    total = 0j
    for chi in PrimitiveFamily(m, root_index):
        v = chi(p) ** nu
        total += v + v.conjugate()
    return _as_int(total)


def brute_force_primitive_sum(m: FactoredModulus, p: int, root_index: int = 0) -> int:
    """Sum of chi(p) over primitive chi mod m, by enumeration."""
    return _as_int(sum((chi(p) for chi in PrimitiveFamily(m, root_index)), 0j))


def _as_int(z: complex) -> int:
    n = round(z.real)
    if abs(z.real - n) > 1e-6 or abs(z.imag) > 1e-6:
        raise ArithmeticError(f"character sum {z} is not an integer")
    return n


def primitive_sum_divisor_identity(m: int, p: int) -> int:
    """Sum over d | gcd(p-1, m) of phi(d) mu(m/d)."""
    if m < 3:
        raise ContractViolation(f"modulus must be at least 3, got {m}")
    if m % p == 0:
        raise ContractViolation(f"p={p} divides m={m}")
    return sum(euler_phi(d) * mobius(m // d) for d in divisors(math.gcd(p - 1, m)))


# ---------------------------------------------------------------------------
# second moment of the family of nontrivial characters mod q
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SecondMoment:
    q: int
    X: float
    torsion: int | None
    total: int
    prime_count: int

    @property
    def ratio(self) -> float:
        return self.total / self.prime_count if self.prime_count else 0.0


def dirichlet_second_moment(q: int, X: float, torsion: int | None = None) -> SecondMoment:
    """Sum over p < X and nontrivial chi mod q of chi(p)^2.

    With ``torsion`` = l only the l-1 nontrivial characters of order l enter.
    """
    if not is_prime(q) or q < 3:
        raise ContractViolation(f"q={q} must be an odd prime")
    if torsion is not None:
        l = torsion
        if not is_prime(l) or l == q or (q - 1) % l:
            raise ContractViolation(f"torsion l={l} needs l prime, l != q, q = 1 mod l")
    ps = primes_below(X)
    a = dlog_table(q, primitive_root(q))[ps % q]
    unram = ps != q
    if torsion is None:
        # sum_{j=1}^{q-2} e(2ja/(q-1)) = (q-1)[(q-1) | 2a] - 1
        per = np.where((2 * a) % (q - 1) == 0, q - 2, -1)
    else:
        l = torsion
        per = np.where((2 * a) % l == 0, l - 1, -1)
    total = int(per[unram].sum())
    return SecondMoment(q, X, torsion, total, len(ps))


def brute_force_second_moment(q: int, X: float, torsion: int | None = None) -> int:
    """dirichlet_second_moment by explicit character enumeration."""
    fm = FactoredModulus.of(q)
    g = primitive_root(q)
    if torsion is None:
        exps = range(1, q - 1)
    else:
        exps = [j * (q - 1) // torsion for j in range(1, torsion)]
    chars = [DirichletCharacter(fm, (g,), (e,)) for e in exps]
    total = 0j
    for p in primes_below(X):
        for chi in chars:
            total += chi(int(p)) ** 2
    return _as_int(total)
