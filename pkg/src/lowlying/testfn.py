"""Even test functions with compactly supported Fourier transforms.

Fourier convention: phi_hat(u) = integral of phi(x) exp(-2 pi i x u) dx.
All callables accept floats or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.special import sici

from lowlying.errors import ContractViolation

RealFn = Callable[[np.ndarray], np.ndarray]

_TAYLOR_CUT = 1e-4


def gauss_legendre(f: RealFn, a: float, b: float, panels: int, order: int = 8) -> float:
    """Composite Gauss-Legendre rule with equal panels on [a, b]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return math.fsum(w * f(x))


@dataclass(frozen=True)
class TestFunctionPair:
    """phi and phi_hat with phi_hat vanishing outside [-sigma, sigma].

    ``tail_mass(T)`` gives the integral of phi over |x| > T when known in
    closed form; quadrature on [-T, T] plus this tail is exact to rounding.
    """

    __test__ = False  # not a pytest class

    name: str
    sigma: float
    phi: RealFn
    phi_hat: RealFn
    integral_phi: float
    tail_mass: Callable[[float], float] | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ContractViolation(f"sigma must be positive, got {self.sigma}")

    @property
    def phi0(self) -> float:
        return float(self.phi(np.zeros(1))[0])

    def hat_integral(self, lo: float, hi: float) -> float:
        """Integral of phi_hat over [lo, hi] (clipped to the support)."""
        lo, hi = max(lo, -self.sigma), min(hi, self.sigma)
        if hi <= lo:
            return 0.0
        # split at 0 so a kink there lands on a panel edge
        parts = [(lo, min(hi, 0.0)), (max(lo, 0.0), hi)]
        return math.fsum(gauss_legendre(self.phi_hat, a, b, 64) for a, b in parts if b > a)

    def fourier_check(self, u: float, cutoff: float = 1e3) -> float:
        """Quadrature of the Fourier integral of phi at u over |x| <= cutoff."""
        panels = int(cutoff * max(4.0, 8.0 * max(self.sigma, abs(u))))
        g = lambda x: self.phi(x) * np.cos(2 * np.pi * x * u)
        return 2.0 * gauss_legendre(g, 0.0, cutoff, panels)

    def self_test(self, tol: float = 1e-4) -> float:
        """Max Fourier-consistency error at u in {0, s/4, s/2, 3s/4}.

        Raises ContractViolation if it exceeds ``tol`` or the declared
        integral disagrees with phi_hat(0).
        """
        if abs(self.integral_phi - float(self.phi_hat(np.zeros(1))[0])) > 1e-12:
            raise ContractViolation(f"{self.name}: integral_phi != phi_hat(0)")
        s = self.sigma
        err = max(abs(self.fourier_check(u) - float(self.phi_hat(np.array([u]))[0]))
                  for u in (0.0, s / 4, s / 2, 3 * s / 4))
        if err > tol:
            raise ContractViolation(f"{self.name}: Fourier self-test error {err:.3g} > {tol}")
        return err


def _sinc(t: np.ndarray) -> np.ndarray:
    """sin(t)/t with a Taylor branch near 0."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < _TAYLOR_CUT
    safe = np.where(small, 1.0, t)
    t2 = t * t
    return np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(safe) / safe)


def fejer_pair(sigma: float) -> TestFunctionPair:
    """phi(x) = sin^2(pi sigma x)/(2 pi x)^2 with phi_hat(u) = (sigma - |u|)/4."""
    if not sigma > 0:
        raise ContractViolation(f"sigma must be positive, got {sigma}")
    s = float(sigma)

    def phi(x):
        x = np.asarray(x, dtype=float)
        return (s * s / 4.0) * _sinc(np.pi * s * x) ** 2

    def phi_hat(u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) < s, (s - np.abs(u)) / 4.0, 0.0)

    def tail(T: float) -> float:
        a = 2 * np.pi * s
        si, _ = sici(a * T)
        cos_int = math.cos(a * T) / T - a * (math.pi / 2 - si)
        return (1.0 / T - cos_int) / (4 * math.pi ** 2)

    return TestFunctionPair(f"fejer(sigma={s:g})", s, phi, phi_hat, s / 4.0, tail)


def zero_pair(sigma: float = 1.0) -> TestFunctionPair:
    """The identically zero pair."""
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return TestFunctionPair("zero", float(sigma), zero, zero, 0.0, lambda T: 0.0)


def pair_eval(pair: TestFunctionPair, side: Literal["phi", "phi_hat"], x: float) -> float:
    if side == "phi":
        return float(pair.phi(np.array([x]))[0])
    if side == "phi_hat":
        return float(pair.phi_hat(np.array([x]))[0])
    raise ContractViolation(f"side must be 'phi' or 'phi_hat', got {side!r}")
