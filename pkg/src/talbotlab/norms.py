"""Norms and regularity diagnostics.

Sobolev and Besov norms, total variation, a dyadic-block estimator for the
supremal Sobolev exponent of a coefficient tail, and the truncated lattice
sums that control convolution kernels.

Conventions: ``<k> = (1 + k^2)^(1/2)`` throughout, and all L^p grid norms
use the normalized measure dx/(2*pi) (see :mod:`talbotlab.fields`), so the
Besov(2,2) and Sobolev scales agree without stray 2*pi factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .errors import EstimatorUndefinedError
from .fields import GridField, SpectralField, lp_max_level, lp_project, resize, synthesize

__all__ = [
    "sobolev_norm",
    "besov_norm",
    "lp_norm",
    "total_variation",
    "regularity_exponent",
    "RegularityEstimate",
    "phi_beta",
    "convolution_bound_check",
    "ConvolutionBoundReport",
    "NormReport",
]


def _bracket(k: np.ndarray | float) -> np.ndarray | float:
    return np.sqrt(1.0 + np.asarray(k, dtype=float) ** 2)


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm: (sum <k>^{2s} |c(k)|^2)^{1/2} over the truncation."""
    w = (1.0 + f.wavenumbers.astype(float) ** 2) ** s
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def lp_norm(g: GridField, p: float) -> float:
    """Grid L^p norm w.r.t. dx/(2*pi); p = math.inf gives the sup norm."""
    a = np.abs(g.values)
    if math.isinf(p):
        return float(np.max(a)) if a.size else 0.0
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(np.mean(a**p) ** (1.0 / p))


def _block_lp(f: SpectralField, j: int, p: float) -> float:
    # Block j has content up to |k| = 2^j; truncate before synthesis so the
    # oversampled grid stays at 8 * 2^j points regardless of f.N.
    blk = lp_project(f, j)
    n_blk = min(2**j, f.N) if j > 0 else min(1, f.N)
    blk = resize(blk, max(n_blk, 1))
    m = max(8 * 2**j, 8)
    return lp_norm(synthesize(blk, m), p)


def besov_norm(f: SpectralField, s: float, p: float = 2.0, q: float = 2.0) -> float:
    """Besov norm with sharp dyadic blocks: ell^q over j of 2^{js} ||P_j f||_{L^p}.

    p and q live in [1, inf]; pass math.inf for the sup cases.  Block L^p
    norms are computed on a grid of 8 * 2^j points, which oversamples block
    j by at least a factor of four.
    """
    if p < 1 or q < 1:
        raise ValueError(f"need 1 <= p, q <= inf, got p={p}, q={q}")
    terms = []
    for j in range(lp_max_level(f.N) + 1):
        terms.append(2.0 ** (j * s) * _block_lp(f, j, p))
    t = np.asarray(terms)
    if math.isinf(q):
        return float(np.max(t)) if t.size else 0.0
    return float(np.sum(t**q) ** (1.0 / q))


def total_variation(obj) -> float:
    """Total variation over one period.

    Accepts a :class:`GridField` (sum of |successive differences| with the
    periodic wrap) or a piecewise-constant function spec (exact sum of
    |jump sizes|; the wrap-around jump is one of the listed jumps since
    jump sizes sum to zero on the torus).
    """
    if isinstance(obj, GridField):
        v = obj.values
        return float(np.sum(np.abs(np.diff(np.concatenate([v, v[:1]])))))
    kind = getattr(obj, "kind", None)
    if kind == "piecewise_constant":
        return float(np.sum(np.abs(np.asarray(obj.params["jumps"], dtype=float))))
    raise TypeError(f"cannot take total variation of {type(obj).__name__}")


@dataclass
class RegularityEstimate:
    """Fitted supremal Sobolev exponent of a coefficient tail.

    ``sigma0`` is math.inf for fields whose fit window carries no mass
    (trigonometric polynomials).  ``levels``/``masses`` record the dyadic
    blocks that entered the fit.
    """

    sigma0: float
    stderr: float
    fit_lo: int
    fit_hi: int
    levels: list = field(default_factory=list)
    masses: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        s = "inf" if math.isinf(self.sigma0) else self.sigma0
        return {
            "sigma0": s,
            "stderr": self.stderr,
            "fit_lo": self.fit_lo,
            "fit_hi": self.fit_hi,
            "levels": list(self.levels),
            "masses": [float(m) for m in self.masses],
        }


def _block_masses(f: SpectralField, levels: int) -> np.ndarray:
    a = np.abs(f.wavenumbers)
    p2 = np.abs(f.coeffs) ** 2
    out = np.empty(levels + 1)
    for j in range(levels + 1):
        if j == 0:
            mask = a <= 1
            card = 3
        else:
            mask = (a > 2 ** (j - 1)) & (a <= 2**j)
            card = 2**j
        out[j] = np.sum(p2[mask]) / card
    return out


def regularity_exponent(f: SpectralField) -> RegularityEstimate:
    """Estimate sigma0 = sup{s : sum <k>^{2s}|c(k)|^2 < inf} from block masses.

    Per-mode mass m_j (block l^2 mass over block cardinality) of a tail
    |c(k)| ~ |k|^{-(sigma0 + 1/2)} scales like 2^{-j(2*sigma0 + 1)}; the
    fitted log-log slope is mapped back by sigma0 = -slope/2 - 1/2.  The
    fit uses the middle third of dyadic levels: low blocks carry shape,
    the top block sits against the truncation.
    """
    if f.N < 64:
        raise EstimatorUndefinedError(f"truncation N={f.N} too small, need N >= 64")
    J = int(math.floor(math.log2(f.N)))
    masses = _block_masses(f, J)
    lo = max(2, J // 3)
    hi = max(lo + 2, (2 * J) // 3)
    window = [(j, masses[j]) for j in range(lo, hi + 1)]
    nonzero = [(j, m) for j, m in window if m > 0.0]
    if not nonzero:
        # finite spectral support: every H^s sum is finite
        return RegularityEstimate(math.inf, 0.0, lo, hi, [j for j, _ in window], [0.0] * len(window))
    if len(nonzero) < 3:
        raise EstimatorUndefinedError(
            f"only {len(nonzero)} nonzero blocks in fit window [{lo}, {hi}]"
        )
    x = np.array([j * math.log(2.0) for j, _ in nonzero])
    y = np.log(np.array([m for _, m in nonzero]))
    fit = linregress(x, y)
    return RegularityEstimate(
        sigma0=float(-fit.slope / 2.0 - 0.5),
        stderr=float(fit.stderr / 2.0),
        fit_lo=lo,
        fit_hi=hi,
        levels=[j for j, _ in nonzero],
        masses=[float(m) for _, m in nonzero],
    )


def phi_beta(k: int, beta: float) -> float:
    """Truncated lattice sum sum_{|n| <= |k|} <n>^{-beta}.

    Three asymptotic regimes in |k|: bounded for beta > 1, logarithmic at
    beta = 1, and ~ <k>^{1-beta} for beta < 1.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    n = np.arange(-abs(int(k)), abs(int(k)) + 1, dtype=float)
    return float(np.sum((1.0 + n**2) ** (-beta / 2.0)))


@dataclass
class ConvolutionBoundReport:
    lhs: float
    bound: float
    ratio: float
    cutoff: int


def convolution_bound_check(
    k1: int, k2: int, beta: float, gamma: float, L: int | None = None
) -> ConvolutionBoundReport:
    """Truncated sum sum_{|n|<=L} <n-k1>^{-beta} <n-k2>^{-gamma} against
    the bound phi_beta(k1-k2) / <k1-k2>^gamma.

    Requires beta >= gamma >= 0 and beta + gamma > 1 (summability).  The
    default cutoff 16*max(|k1|,|k2|,1) leaves the tail below 1e-6 whenever
    beta + gamma > 1.1.
    """
    if not (beta >= gamma >= 0.0):
        raise ValueError(f"need beta >= gamma >= 0, got beta={beta}, gamma={gamma}")
    if beta + gamma <= 1.0:
        raise ValueError(f"need beta + gamma > 1, got {beta + gamma}")
    if L is None:
        L = 16 * max(abs(k1), abs(k2), 1)
    n = np.arange(-L, L + 1, dtype=float)
    lhs = float(
        np.sum(
            (1.0 + (n - k1) ** 2) ** (-beta / 2.0)
            * (1.0 + (n - k2) ** 2) ** (-gamma / 2.0)
        )
    )
    d = k1 - k2
    bound = phi_beta(d, beta) / float(_bracket(d)) ** gamma
    return ConvolutionBoundReport(lhs=lhs, bound=bound, ratio=lhs / bound, cutoff=int(L))


@dataclass
class NormReport:
    """Bundle of norm diagnostics for one field, JSON-serializable.

    ``besov`` keys are (s, p, q) tuples; they flatten to "s:p:q" strings in
    JSON with math.inf rendered as "inf" (schema in docs/formats.md).
    """

    sobolev: dict = field(default_factory=dict)
    besov: dict = field(default_factory=dict)
    total_variation: float | None = None
    tail: RegularityEstimate | None = None

    def to_json_dict(self) -> dict:
        def num(x):
            return "inf" if isinstance(x, float) and math.isinf(x) else x

        return {
            "sobolev": {str(s): v for s, v in sorted(self.sobolev.items())},
            "besov": {
                f"{num(s)}:{num(p)}:{num(q)}": v
                for (s, p, q), v in sorted(self.besov.items(), key=lambda kv: str(kv[0]))
            },
            "total_variation": self.total_variation,
            "tail": self.tail.to_json_dict() if self.tail is not None else None,
        }


def norm_report(
    f: SpectralField,
    sobolev_exponents=(0.0, 0.5, 1.0),
    besov_triples=((0.5, 2.0, 2.0),),
    grid_M: int | None = None,
    with_tail: bool = True,
) -> NormReport:
    """Convenience builder used by the experiment runners."""
    rep = NormReport()
    for s in sobolev_exponents:
        rep.sobolev[float(s)] = sobolev_norm(f, s)
    for s, p, q in besov_triples:
        rep.besov[(float(s), float(p), float(q))] = besov_norm(f, s, p, q)
    if grid_M is not None:
        rep.total_variation = total_variation(synthesize(f, grid_M))
    if with_tail:
        try:
            rep.tail = regularity_exponent(f)
        except EstimatorUndefinedError:
            rep.tail = None
    return rep
