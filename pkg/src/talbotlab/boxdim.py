"""Upper Minkowski (box-counting) dimension of graphs of sampled functions.

Counting is by oscillation: over each width-eps window the graph needs
ceil(osc/eps) + 1 boxes of side eps, summed across the 2*pi/eps windows.
Windows share their right endpoint with the next window's left endpoint
(the wrap closes the last one); dropping the shared sample breaks the
count-doubling monotonicity that the dimension fit relies on.

Scales are locked to the dyadic grid eps = 2*pi/2^j so counts are exactly
reproducible across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.stats import linregress

from .errors import InsufficientScalesError
from .fields import GridField, TWO_PI

__all__ = [
    "box_count",
    "minkowski_dimension",
    "DimensionEstimate",
    "default_irrational_times",
    "near_rational",
    "NAMED_IRRATIONAL_TIMES",
]


def _real_values(g: GridField) -> np.ndarray:
    v = g.values
    scale = max(1.0, float(np.max(np.abs(v.real))) if v.size else 1.0)
    if np.max(np.abs(v.imag)) > 1e-9 * scale:
        raise ValueError("box counting needs a real-valued grid field")
    return v.real


def _level_of(eps: float, M: int) -> int:
    j = round(math.log2(TWO_PI / eps))
    if j < 0 or abs(eps - TWO_PI / 2**j) > 1e-12 * eps:
        raise ValueError(f"eps={eps} is not 2*pi/2^j for integer j")
    if 2**j > M // 4:
        raise ValueError(f"eps level j={j} too fine for M={M}; need 2^j <= M/4")
    return j


def box_count(g: GridField, eps: float) -> int:
    """Number of side-eps boxes covering the graph of g, eps = 2*pi/2^j."""
    v = _real_values(g)
    j = _level_of(eps, g.M)
    m = g.M // 2**j
    ext = np.concatenate([v, v[:1]])
    win = sliding_window_view(ext, m + 1)[::m]
    osc = win.max(axis=1) - win.min(axis=1)
    return int(np.sum(np.ceil(osc / eps))) + 2**j


@dataclass
class DimensionEstimate:
    slope: float
    stderr: float
    scales: list          # (eps, count) pairs, coarse to fine
    fit_range: tuple      # (j_min, j_max)
    r_squared: float

    @property
    def upper(self) -> float:
        """Conservative upper-dimension read-out: slope plus one stderr."""
        return self.slope + self.stderr

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "upper": self.upper,
            "r_squared": self.r_squared,
            "fit_range": list(self.fit_range),
            "scales": [[e, c] for e, c in self.scales],
        }

    def scale_rows(self):
        """CSV-ready rows (level, eps, count), column order documented in
        docs/formats.md."""
        for eps, count in self.scales:
            yield (round(math.log2(TWO_PI / eps)), eps, count)


def minkowski_dimension(
    g: GridField, j_min: int | None = None, j_max: int | None = None
) -> DimensionEstimate:
    """Least-squares slope of log(count) against log(1/eps) over dyadic
    levels j_min..j_max.

    Defaults leave six octaves of headroom below the sampling scale and
    fit six levels: j_max = log2(M) - 6, j_min = j_max - 5.  Counts within
    a few octaves of the grid spacing see the sampled trace flatten
    (truncation smoothness), and the coarsest levels carry boundary
    effects, so both ends are excluded.
    """
    lg = int(math.log2(g.M))
    if j_max is None:
        j_max = lg - 6
    if j_min is None:
        j_min = j_max - 5
    if j_min < 0 or j_max <= j_min:
        raise ValueError(f"bad fit range [{j_min}, {j_max}]")
    if j_max > lg - 2:
        raise ValueError(f"j_max={j_max} beyond resolution; need j_max <= log2(M) - 2")
    if j_max - j_min < 4:
        raise InsufficientScalesError(
            f"fit range [{j_min}, {j_max}] spans {j_max - j_min + 1} scales, need >= 5"
        )
    scales = []
    xs, ys = [], []
    for j in range(j_min, j_max + 1):
        eps = TWO_PI / 2**j
        c = box_count(g, eps)
        scales.append((eps, c))
        xs.append(math.log(1.0 / eps))
        ys.append(math.log(c))
    fit = linregress(np.asarray(xs), np.asarray(ys))
    return DimensionEstimate(
        slope=float(fit.slope),
        stderr=float(fit.stderr),
        scales=scales,
        fit_range=(j_min, j_max),
        r_squared=float(fit.rvalue**2),
    )


def near_rational(t: float, q_max: int = 64, tol: float = 1e-4) -> bool:
    """True when t sits within tol of pi * p/q for some q <= q_max."""
    for q in range(1, q_max + 1):
        p = round(t * q / math.pi)
        if abs(t - math.pi * p / q) < tol:
            return True
    return False


NAMED_IRRATIONAL_TIMES = {
    "sqrt2": math.sqrt(2.0),
    "golden": (1.0 + math.sqrt(5.0)) / 2.0,
    "sqrt3_half": math.sqrt(3.0) / 2.0,
    "euler": math.e,
}


def default_irrational_times(count: int = 8, seed: int = 0) -> list:
    """The four named irrational times plus seeded uniform draws in
    (0, 2*pi), all kept clear of pi-rational approximants with q <= 64.

    Near-rational times contaminate dimension estimates at finite
    resolution: the quantized profile at the nearby rational leaks into
    the counting scales.
    """
    times = [t for t in NAMED_IRRATIONAL_TIMES.values() if not near_rational(t)]
    rng = np.random.default_rng(seed)
    while len(times) < count:
        t = float(rng.uniform(0.0, TWO_PI))
        if not near_rational(t):
            times.append(t)
    return times[:count]
