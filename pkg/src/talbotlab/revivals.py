"""Rational-time quantization of the free flow.

At t = 2*pi*p/q the free evolution is a finite combination of q translates
of the datum, weighted by quadratic Gauss sums.  The underlying identity

    (1/q) * sum_m G(p, m, q) e^{-2*pi*i*k*m/q} = e^{-2*pi*i*p*k^2/q}

holds exactly for every residue k, so :func:`rational_time_evolve` agrees
with the free multiplier to rounding; the test suite enforces this rather
than assuming it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import SpectralField, TWO_PI
from .evolution import free_evolve

__all__ = [
    "RationalTime",
    "gauss_sum",
    "rational_time_evolve",
    "revival_error",
    "translate_budget",
]


@dataclass(frozen=True)
class RationalTime:
    """Reduced rational multiple of the revival period: t = 2*pi*p/q."""

    p: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be positive, got {self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"p/q = {self.p}/{self.q} not in lowest terms")

    @classmethod
    def reduced(cls, p: int, q: int) -> "RationalTime":
        if q == 0:
            raise ValueError("q must be nonzero")
        if q < 0:
            p, q = -p, -q
        g = math.gcd(p, q)
        # gcd(0, q) = q, so p=0 reduces to 0/1
        return cls(p // g, q // g)

    @classmethod
    def from_pi_multiple(cls, a: int, b: int) -> "RationalTime":
        """t = pi * a / b, re-expressed over the 2*pi period."""
        return cls.reduced(a, 2 * b)

    @property
    def value(self) -> float:
        return TWO_PI * self.p / self.q


def gauss_sum(p: int, q: int, m: int) -> complex:
    """Quadratic exponential sum G(p, m, q) = sum_{l=0}^{q-1}
    e^{-2*pi*i*(p l^2 + m l)/q}, signed to match e^{-i k^2 t}."""
    if q < 1:
        raise ValueError(f"q must be positive, got {q}")
    if math.gcd(p, q) != 1:
        raise ValueError(f"gauss_sum needs gcd(p, q) = 1, got p={p}, q={q}")
    l = np.arange(q)
    return complex(np.sum(np.exp(-2j * np.pi * ((p * l * l + m * l) % q) / q)))


def _gauss_coefficients(p: int, q: int) -> np.ndarray:
    return np.array([gauss_sum(p, q, m) for m in range(q)])


def rational_time_evolve(f: SpectralField, rt: RationalTime, phase_sign: int = -1) -> SpectralField:
    """(1/q) sum_m G(p, m, q) f(x - 2*pi*m/q), assembled in coefficient space.

    phase_sign=+1 flips the multiplier to e^{+i k^2 t}; the same translate
    expansion applies with p negated.
    """
    if phase_sign not in (-1, 1):
        raise ValueError(f"phase_sign must be -1 or +1, got {phase_sign}")
    p = rt.p if phase_sign == -1 else -rt.p
    G = _gauss_coefficients(p, rt.q)
    k = f.wavenumbers
    # translate by 2*pi*m/q modulates mode k by e^{-2*pi*i*k*m/q}
    mult = (G @ np.exp(-2j * np.pi * np.outer(np.arange(rt.q), k % rt.q) / rt.q)) / rt.q
    return SpectralField(f.N, f.coeffs * mult)


def revival_error(f: SpectralField, t: float, rt: RationalTime, phase_sign: int = -1) -> float:
    """L^2 distance between the free flow at t and the quantized profile at
    rt, relative to the datum's norm."""
    a = free_evolve(f, t, phase_sign=phase_sign)
    b = rational_time_evolve(f, rt, phase_sign=phase_sign)
    denom = f.l2_norm()
    if denom == 0.0:
        return 0.0
    return float(np.sqrt(np.sum(np.abs(a.coeffs - b.coeffs) ** 2)) / denom)


def translate_budget(rt: RationalTime) -> float:
    """sum_m |G(p, m, q)| / q: the total-variation amplification factor of
    the translate expansion (each translate contributes its |coefficient|
    times TV of the datum)."""
    return float(np.sum(np.abs(_gauss_coefficients(rt.p, rt.q)))) / rt.q
