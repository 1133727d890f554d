"""Katz-Sarnak 1-level density kernels and symmetry classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from lowlying.testfn import TestFunctionPair, gauss_legendre


class SymmetryType(enum.Enum):
    UNITARY = "U"
    SYMPLECTIC = "USp"
    ORTHOGONAL = "O"
    SO_EVEN = "SO(even)"
    SO_ODD = "SO(odd)"

    @classmethod
    def parse(cls, text: str) -> "SymmetryType":
        key = text.strip().lower().replace("(", "").replace(")", "").replace("_", "")
        aliases = {
            "u": cls.UNITARY, "unitary": cls.UNITARY,
            "usp": cls.SYMPLECTIC, "symplectic": cls.SYMPLECTIC,
            "o": cls.ORTHOGONAL, "orthogonal": cls.ORTHOGONAL,
            "soeven": cls.SO_EVEN, "so+": cls.SO_EVEN,
            "soodd": cls.SO_ODD, "so-": cls.SO_ODD,
        }
        if key not in aliases:
            raise ValueError(f"unknown symmetry type {text!r}")
        return aliases[key]


def _kernel(y):
    """K(y) = sin(pi y)/(pi y)."""
    return np.sinc(np.asarray(y, dtype=float))


# (epsilon in K(0) + eps K(2x), delta mass at x = 0) per group
_X_SIDE = {
    SymmetryType.UNITARY: (0.0, 0.0),
    SymmetryType.SYMPLECTIC: (-1.0, 0.0),
    SymmetryType.SO_EVEN: (1.0, 0.0),
    SymmetryType.SO_ODD: (-1.0, 1.0),
    SymmetryType.ORTHOGONAL: (0.0, 0.5),
}


@dataclass(frozen=True)
class DensityValue:
    smooth: float | np.ndarray
    delta_mass: float


def w1_smooth(group: SymmetryType, x) -> np.ndarray:
    eps, _ = _X_SIDE[group]
    return 1.0 + eps * _kernel(2 * np.asarray(x, dtype=float))


def w1_density(group: SymmetryType, x) -> DensityValue:
    """Smooth part of W_1 at x plus the mass of the delta at the origin."""
    return DensityValue(w1_smooth(group, x), _X_SIDE[group][1])


@dataclass(frozen=True)
class HatDensity:
    """delta_mass * delta(u) + constant + indicator_coef * I_[-1,1](u)."""

    delta_mass: float
    constant: float
    indicator_coef: float

    def smooth(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.constant + self.indicator_coef * (np.abs(u) <= 1.0)


_HAT = {
    SymmetryType.UNITARY: HatDensity(1.0, 0.0, 0.0),
    SymmetryType.SYMPLECTIC: HatDensity(1.0, 0.0, -0.5),
    SymmetryType.SO_EVEN: HatDensity(1.0, 0.0, 0.5),
    SymmetryType.SO_ODD: HatDensity(1.0, 1.0, -0.5),
    SymmetryType.ORTHOGONAL: HatDensity(1.0, 0.5, 0.0),
}


def w1_hat(group: SymmetryType) -> HatDensity:
    return _HAT[group]


def predicted_average(group: SymmetryType, pair: TestFunctionPair) -> float:
    """Integral of phi(x) W_1(x) dx, computed on the Fourier side.

    delta(u) pairs with phi_hat(0), the constant with phi(0), and the
    indicator with the integral of phi_hat over [-1, 1].
    """
    h = _HAT[group]
    return (h.delta_mass * pair.integral_phi
            + h.constant * pair.phi0
            + h.indicator_coef * pair.hat_integral(-1.0, 1.0))


def predicted_average_quadrature(group: SymmetryType, pair: TestFunctionPair,
                                 T: float = 1e4, panels_per_unit: int = 20) -> float:
    """Same pairing by quadrature in x over [-T, T] plus the analytic tail.

    Beyond T the kernel term is O(T^-2) and is dropped; the constant part
    of W_1 is 1 for every group, so the tail is ``pair.tail_mass(T)``.
    """
    f = lambda x: pair.phi(x) * w1_smooth(group, x)
    body = 2.0 * gauss_legendre(f, 0.0, T, int(T * panels_per_unit))
    tail = pair.tail_mass(T) if pair.tail_mass is not None else 0.0
    return body + tail + _X_SIDE[group][1] * pair.phi0


@dataclass(frozen=True)
class Classification:
    group: SymmetryType
    margin: float
    out_of_model: bool
    orthogonal_flavor_known: bool


def classify_symmetry(c: float) -> Classification:
    """Nearest of 0 (U), 1 (USp), -1 (O); margin is the distance to it.

    The orthogonal flavour is never resolved here: SO(even), SO(odd) and O
    share one symmetry constant.
    """
    anchors = ((0.0, SymmetryType.UNITARY), (1.0, SymmetryType.SYMPLECTIC),
               (-1.0, SymmetryType.ORTHOGONAL))
    value, group = min(anchors, key=lambda a: abs(c - a[0]))
    return Classification(group, abs(c - value), abs(c) > 1.5,
                          group is not SymmetryType.ORTHOGONAL)


def hat_difference(a: SymmetryType, b: SymmetryType, pair: TestFunctionPair) -> float:
    """predicted_average(a) - predicted_average(b) from the table rows alone."""
    ha, hb = _HAT[a], _HAT[b]
    return ((ha.delta_mass - hb.delta_mass) * pair.integral_phi
            + (ha.constant - hb.constant) * pair.phi0
            + (ha.indicator_coef - hb.indicator_coef) * pair.hat_integral(-1.0, 1.0))


__all__ = [
    "SymmetryType", "HatDensity", "DensityValue", "Classification",
    "w1_density", "w1_smooth", "w1_hat", "predicted_average",
    "predicted_average_quadrature", "classify_symmetry", "hat_difference",
]

