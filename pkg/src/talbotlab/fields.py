"""Spectral and grid representations of periodic functions on [0, 2*pi).

A :class:`SpectralField` stores the truncated Fourier series

    f(x) = sum_{|k| <= N} c(k) e^{ikx},

with ``coeffs[i]`` holding ``c(i - N)`` (wavenumbers -N..N, no Hermitian
compression, complex-valued fields allowed).  A :class:`GridField` stores
samples on the uniform grid ``x_m = 2*pi*m/M`` with M a power of two.

L^2 norms here and everywhere downstream are taken with respect to the
normalized measure dx/(2*pi), so the coefficient-side norm is a plain
l^2 sum.  Total variation and sup norms are unaffected by this choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndersampledGridError

__all__ = [
    "TWO_PI",
    "SpectralField",
    "GridField",
    "synthesize",
    "analyze",
    "multiply",
    "lp_project",
    "lp_block_index",
    "lp_block_range",
    "lp_max_level",
    "resize",
    "cesaro",
]

TWO_PI = 2.0 * np.pi


def _is_pow2(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass
class SpectralField:
    """Fourier coefficients c(-N)..c(N) of a function on the torus."""

    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"truncation must be nonnegative, got N={self.N}")
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (2 * self.N + 1,):
            raise ValueError(
                f"need 2N+1={2 * self.N + 1} coefficients, got shape {self.coeffs.shape}"
            )

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def coeff(self, k: int) -> complex:
        """Coefficient c(k); zero outside the truncation."""
        if abs(k) > self.N:
            return 0.0 + 0.0j
        return complex(self.coeffs[k + self.N])

    def l2_norm(self) -> float:
        """L^2 norm w.r.t. dx/(2*pi), i.e. sqrt(sum |c(k)|^2)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """True if c(-k) == conj(c(k)) up to tol, i.e. the field is real-valued."""
        return bool(np.max(np.abs(self.coeffs[::-1] - np.conj(self.coeffs))) <= tol)

    def copy(self) -> "SpectralField":
        return SpectralField(self.N, self.coeffs.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if not isinstance(other, SpectralField):
            return NotImplemented
        n = max(self.N, other.N)
        return SpectralField(
            n, _padded(self.coeffs, self.N, n) + _padded(other.coeffs, other.N, n)
        )

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if not isinstance(other, SpectralField):
            return NotImplemented
        n = max(self.N, other.N)
        return SpectralField(
            n, _padded(self.coeffs, self.N, n) - _padded(other.coeffs, other.N, n)
        )

    def __mul__(self, scalar) -> "SpectralField":
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return SpectralField(self.N, self.coeffs * complex(scalar))

    __rmul__ = __mul__


@dataclass
class GridField:
    """Samples on the uniform grid x_m = 2*pi*m/M, M a power of two."""

    M: int
    values: np.ndarray

    def __post_init__(self):
        if not _is_pow2(self.M):
            raise ValueError(f"grid size must be a power of two, got M={self.M}")
        self.values = np.ascontiguousarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.M,):
            raise ValueError(f"need M={self.M} samples, got shape {self.values.shape}")

    @property
    def x(self) -> np.ndarray:
        return TWO_PI * np.arange(self.M) / self.M

    def l2_norm(self) -> float:
        """Grid L^2 norm w.r.t. dx/(2*pi): sqrt(mean |values|^2)."""
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))

    def copy(self) -> "GridField":
        return GridField(self.M, self.values.copy())


def _padded(coeffs: np.ndarray, n_old: int, n_new: int) -> np.ndarray:
    if n_new == n_old:
        return coeffs
    out = np.zeros(2 * n_new + 1, dtype=np.complex128)
    out[n_new - n_old : n_new + n_old + 1] = coeffs
    return out


def resize(f: SpectralField, N: int) -> SpectralField:
    """Pad with zeros or truncate to a new wavenumber cutoff N."""
    if N == f.N:
        return f.copy()
    if N > f.N:
        return SpectralField(N, _padded(f.coeffs, f.N, N))
    return SpectralField(N, f.coeffs[f.N - N : f.N + N + 1].copy())


def _synth_raw(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    """values[j] = sum_k c(k) e^{2*pi*i*k*j/m}, assuming m >= 2n+1."""
    buf = np.zeros(m, dtype=np.complex128)
    buf[np.arange(-n, n + 1) % m] = coeffs
    return np.fft.ifft(buf) * m


def _analyze_raw(values: np.ndarray, n: int, m: int) -> np.ndarray:
    spec = np.fft.fft(values) / m
    return spec[np.arange(-n, n + 1) % m]


def synthesize(f: SpectralField, M: int) -> GridField:
    """Evaluate the series on the uniform M-point grid.

    Parameters
    ----------
    f : SpectralField
    M : int
        Grid size; must be a power of two with M >= 4N (at least 2x
        oversampling relative to the 2N+1 stored modes).

    Raises
    ------
    UndersampledGridError
        If M is too small to oversample the truncation.
    """
    if not _is_pow2(M):
        raise ValueError(f"grid size must be a power of two, got M={M}")
    if M < max(4 * f.N, 1):
        raise UndersampledGridError(
            f"M={M} undersamples truncation N={f.N}; need M >= 4N"
        )
    return GridField(M, _synth_raw(f.coeffs, f.N, M))


def analyze(g: GridField, N: int) -> SpectralField:
    """Recover coefficients c(-N)..c(N) from grid samples.

    Exact (a left inverse of :func:`synthesize`) whenever the samples come
    from a series with truncation <= (M-1)/2.  Requires 2N+1 <= M.
    """
    if 2 * N + 1 > g.M:
        raise UndersampledGridError(
            f"cannot resolve 2N+1={2 * N + 1} modes from M={g.M} samples"
        )
    return SpectralField(N, _analyze_raw(g.values, N, g.M))


def multiply(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product, dealiased, truncated to max(f.N, g.N).

    The product is formed on a grid with at least 2*(f.N + g.N) + 1 points,
    so every retained coefficient equals the exact convolution sum
    sum_l f_hat(k-l) g_hat(l); modes beyond the output truncation are
    dropped, never wrapped around.
    """
    n_full = f.N + g.N
    m = 1
    while m < 2 * n_full + 2:
        m *= 2
    fv = _synth_raw(f.coeffs, f.N, m)
    gv = _synth_raw(g.coeffs, g.N, m)
    full = _analyze_raw(fv * gv, n_full, m)
    n_out = max(f.N, g.N)
    return SpectralField(n_out, full[n_full - n_out : n_full + n_out + 1])


def lp_block_index(k: int) -> int:
    """Dyadic block owning wavenumber k: block 0 is |k| <= 1, block j>=1 is
    2^{j-1} < |k| <= 2^j."""
    a = abs(int(k))
    if a <= 1:
        return 0
    return (a - 1).bit_length()


def lp_block_range(j: int) -> tuple[int, int]:
    """Half-open |k| range (lo, hi] of block j, with block 0 as [0, 1]."""
    if j < 0:
        raise ValueError("block index must be nonnegative")
    if j == 0:
        return (-1, 1)
    return (2 ** (j - 1), 2**j)


def lp_max_level(N: int) -> int:
    """Largest block index holding any |k| <= N."""
    return lp_block_index(N)


def lp_project(f: SpectralField, j: int) -> SpectralField:
    """Sharp dyadic frequency projection onto block j.

    The blocks partition the lattice: summing lp_project(f, j) over
    j = 0..lp_max_level(N) reproduces f exactly.
    """
    lo, hi = lp_block_range(j)
    k = np.abs(f.wavenumbers)
    mask = (k > lo) & (k <= hi)
    out = np.where(mask, f.coeffs, 0.0 + 0.0j)
    return SpectralField(f.N, out)


def cesaro(f: SpectralField) -> SpectralField:
    """Fejer-weighted field: coefficients scaled by 1 - |k|/(N+1).

    The corresponding partial sums are variation-diminishing, which makes
    them the right synthesis for comparing grid total variation against
    the exact jump sum of a discontinuous function.
    """
    w = 1.0 - np.abs(f.wavenumbers) / (f.N + 1.0)
    return SpectralField(f.N, f.coeffs * w)
