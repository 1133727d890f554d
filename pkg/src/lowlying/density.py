"""Prime side of the family-averaged explicit formula for Dirichlet families.

For primitive characters mod m with scale L = log(m/pi):

    S1 = (1/M2) sum_p (log p / L) phi_hat(log p / L) F1(p) p^(-1/2)
    S2 = (1/M2) sum_p (log p / L) phi_hat(2 log p / L) F2(p) p^(-1)

where F_nu(p) is the exact family sum of chi(p)^nu + conj(chi)(p)^nu.  The
1-level prime side is phi_hat(0) - S1 - S2; Gamma-factor and cube-and-higher
prime-power terms are not computed and are reported as an uncertainty.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from lowlying.dirichlet import PrimitiveFamily, family_sum_vector
from lowlying.errors import ContractViolation, ResourceLimitError
from lowlying.numth import FactoredModulus, primes_below, squarefree_enumerate
from lowlying.testfn import TestFunctionPair

# uncertainty = UNCERTAINTY_C * (phi_hat(0) + phi(0)) / log(m/pi)
UNCERTAINTY_C = 2.0
# largest 2N accepted by squarefree_family_density without an override
SQFREE_GUARD = 100_000

Normalization = Literal["conductor", "fixed"]


@dataclass(frozen=True)
class DensityReport:
    label: str
    sigma: float
    s1: float
    s2: float
    main_term: float
    family_size: int
    normalization: str
    uncertainty: float
    r: int | None = None
    conductor_factor: float = 1.0
    by_r: dict = field(default_factory=dict)

    @property
    def one_level(self) -> float:
        return self.main_term - self.s1 - self.s2

    def csv_row(self) -> dict:
        return {
            "m": self.label,
            "r": "" if self.r is None else self.r,
            "sigma": self.sigma,
            "s1": self.s1,
            "s2": self.s2,
            "one_level": self.one_level,
            "family_size": self.family_size,
            "normalization": self.normalization,
        }


CSV_COLUMNS = ("m", "r", "sigma", "s1", "s2", "one_level", "family_size", "normalization")


def _scale(m: int) -> float:
    return math.log(m / math.pi)


def _unnormalized_sum(m: FactoredModulus, pair: TestFunctionPair, L: float, nu: int) -> float:
    """sum_p (log p/L) phi_hat(nu log p/L) F_nu(p) p^(-nu/2), before 1/M2."""
    if L <= 0:
        return 0.0
    ps = primes_below(math.exp(pair.sigma * L / nu))
    if len(ps) == 0:
        return 0.0
    x = np.log(ps.astype(float)) / L
    weights = family_sum_vector(m, ps, nu)
    terms = x * pair.phi_hat(nu * x) * weights * ps.astype(float) ** (-nu / 2)
    return math.fsum(terms)


def s1_sum(m: FactoredModulus, pair: TestFunctionPair, scale: float | None = None) -> float:
    L = _scale(m.m) if scale is None else scale
    return _unnormalized_sum(m, pair, L, 1) / m.M2


def s2_sum(m: FactoredModulus, pair: TestFunctionPair, scale: float | None = None) -> float:
    L = _scale(m.m) if scale is None else scale
    return _unnormalized_sum(m, pair, L, 2) / m.M2


def _brute(m: FactoredModulus, pair: TestFunctionPair, nu: int) -> float:
    L = _scale(m.m)
    if L <= 0:
        return 0.0
    ps = primes_below(math.exp(pair.sigma * L / nu))
    ps = ps[m.m % ps != 0]
    if len(ps) == 0:
        return 0.0
    x = np.log(ps.astype(float)) / L
    base = x * pair.phi_hat(nu * x) * ps.astype(float) ** (-nu / 2)
    per_char = []
    for chi in PrimitiveFamily(m):
        vals = np.array([chi(int(p)) ** nu for p in ps])
        per_char.append(math.fsum(base * 2 * vals.real))
    return math.fsum(per_char) / m.M2


def s1_sum_brute(m: FactoredModulus, pair: TestFunctionPair) -> float:
    """S1 by summing over each primitive character separately."""
    return _brute(m, pair, 1)


def s2_sum_brute(m: FactoredModulus, pair: TestFunctionPair) -> float:
    return _brute(m, pair, 2)


def one_level_prime_side(m: FactoredModulus, pair: TestFunctionPair) -> DensityReport:
    L = _scale(m.m)
    unc = UNCERTAINTY_C * (pair.integral_phi + pair.phi0) / L if L > 0 else math.inf
    return DensityReport(
        label=str(m.m), sigma=pair.sigma, s1=s1_sum(m, pair), s2=s2_sum(m, pair),
        main_term=pair.integral_phi, family_size=m.M2, normalization="conductor",
        uncertainty=unc, r=m.r,
    )


def conductor_factor(moduli: list[FactoredModulus], N: int) -> float:
    """(1/|family|) sum_m log(m/pi)/log(N/pi), unweighted over moduli."""
    LN = _scale(N)
    return math.fsum(_scale(fm.m) / LN for fm in moduli) / len(moduli)


def squarefree_family_density(N: int, pair: TestFunctionPair,
                              normalization: Normalization = "conductor",
                              override_guard: bool = False) -> DensityReport:
    """Primitive characters to odd square-free moduli in [N, 2N].

    Per-modulus sums are weighted by M2(m).  With ``fixed`` normalization
    every modulus uses log(N/pi) and the main term carries log(m/pi)/log(N/pi).
    """
    if N < 3:
        raise ContractViolation(f"N must be at least 3, got {N}")
    if 2 * N > SQFREE_GUARD and not override_guard:
        raise ResourceLimitError(
            f"2N={2 * N} exceeds the desk-scale bound {SQFREE_GUARD}; pass the override flag")
    if normalization not in ("conductor", "fixed"):
        raise ContractViolation(f"unknown normalization {normalization!r}")
    moduli = squarefree_enumerate(N, 2 * N)
    LN = _scale(N)
    acc = defaultdict(lambda: [[], [], [], 0])  # r -> s1 parts, s2 parts, main parts, size
    for fm in moduli:
        L = _scale(fm.m) if normalization == "conductor" else LN
        main = pair.integral_phi if normalization == "conductor" else pair.integral_phi * _scale(fm.m) / LN
        slot = acc[fm.r]
        slot[0].append(_unnormalized_sum(fm, pair, L, 1))
        slot[1].append(_unnormalized_sum(fm, pair, L, 2))
        slot[2].append(fm.M2 * main)
        slot[3] += fm.M2

    def fold(parts):
        s1, s2, mains, size = parts
        return math.fsum(s1) / size, math.fsum(s2) / size, math.fsum(mains) / size, size

    by_r = {}
    for r in sorted(acc):
        s1, s2, main, size = fold(acc[r])
        by_r[r] = DensityReport(f"[{N},{2 * N}]", pair.sigma, s1, s2, main, size,
                                normalization, UNCERTAINTY_C * (pair.integral_phi + pair.phi0) / LN, r=r)
    total = fold([sum((acc[r][i] for r in sorted(acc)), []) for i in range(3)]
                 + [sum(acc[r][3] for r in acc)])
    s1, s2, main, size = total
    return DensityReport(
        label=f"[{N},{2 * N}]", sigma=pair.sigma, s1=s1, s2=s2, main_term=main,
        family_size=size, normalization=normalization,
        uncertainty=UNCERTAINTY_C * (pair.integral_phi + pair.phi0) / LN,
        conductor_factor=conductor_factor(moduli, N), by_r=by_r,
    )


def per_modulus_reports(N: int, pair: TestFunctionPair) -> list[DensityReport]:
    """one_level_prime_side for every modulus of the square-free family."""
    return [one_level_prime_side(fm, pair) for fm in squarefree_enumerate(N, 2 * N)]
