"""End-to-end acceptance gate.

Each test covers one numbered claim at its stated tolerance and wall-time
budget and prints a single CRITERION line on success; pytest -v gives the
per-criterion pass/fail roll-up.
"""

import math
import statistics
import time
from contextlib import contextmanager

import numpy as np
import pytest

from talbotlab.boxdim import minkowski_dimension
from talbotlab.catalog import (
    cosine_potential,
    realize,
    step_function,
    trig_poly,
    weierstrass,
    zero_potential,
)
from talbotlab.config import parse_config_dict
from talbotlab.evolution import (
    build_hamiltonian,
    eigen_evolve,
    free_evolve,
    global_growth_check,
    picard_solve,
)
from talbotlab.experiments import run
from talbotlab.fields import GridField, SpectralField, synthesize
from talbotlab.norms import convolution_bound_check, phi_beta, regularity_exponent
from talbotlab.revivals import RationalTime, revival_error

pytestmark = pytest.mark.acceptance


@contextmanager
def budget(n, seconds):
    t0 = time.perf_counter()
    detail = {}
    yield detail
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"criterion {n} blew its {seconds}s budget: {elapsed:.1f}s"
    extra = "; ".join(f"{k}={v}" for k, v in detail.items())
    print(f"CRITERION {n} PASS ({elapsed:.1f}s < {seconds}s) {extra}")


def test_criterion_01_unitarity():
    with budget(1, 10) as detail:
        f = realize(step_function(), 256)
        worst = 0.0
        for spec in (zero_potential(), cosine_potential(), weierstrass(0.5)):
            sys = build_hamiltonian(realize(spec, 256), 256)
            for t in (0.1, 1.0, 10.0, 100.0):
                u = eigen_evolve(sys, f, t).field
                worst = max(worst, abs(u.l2_norm() / f.l2_norm() - 1.0))
        assert worst <= 1e-10
        detail["max |ratio-1|"] = f"{worst:.2e}"


def test_criterion_02_solver_cross_validation():
    with budget(2, 30) as detail:
        N = 64
        f = realize(step_function(), N)
        worst = 0.0
        for spec in (
            cosine_potential(),
            trig_poly([(0, 0.4, 0.0), (1, 0.3, 0.2), (-1, 0.3, -0.2),
                       (3, 0.2, 0.25), (-3, 0.2, -0.25)]),
        ):
            V = realize(spec, N)
            assert np.sum(np.abs(V.coeffs)) <= 2.0
            sys = build_hamiltonian(V, N)
            for t in (0.25, 1.0):
                diff = eigen_evolve(sys, f, t).field - picard_solve(f, V, t).field
                worst = max(worst, diff.l2_norm())
        assert worst <= 1e-6
        detail["max L2 gap"] = f"{worst:.2e}"


def test_criterion_03_talbot_quantization():
    with budget(3, 30) as detail:
        f = realize(step_function(), 1024)
        worst, pairs = 0.0, 0
        for q in range(1, 21):
            for p in range(1, q + 1):
                if math.gcd(p, q) != 1:
                    continue
                rt = RationalTime.reduced(p, q)
                worst = max(worst, revival_error(f, rt.value, rt))
                pairs += 1
        assert pairs == 128
        assert worst <= 1e-10
        detail["pairs"] = pairs
        detail["max error"] = f"{worst:.2e}"


@pytest.mark.slow
def test_criterion_04_dimension_reproduction():
    with budget(4, 600) as detail:
        times = {
            "named": ["sqrt2", "golden", "sqrt3_half", "euler"],
            "random": 4,
        }
        for label, potential in (
            ("zero", {"name": "zero"}),
            ("cos", {"name": "cos"}),
            ("weier09", {"kind": "weierstrass", "params": {"alpha": 0.9}}),
        ):
            cfg = parse_config_dict({
                "experiment": "dimension",
                "seed": 0,
                "times": times,
                "potential": potential,
                "resolution": {"N": 2**16, "M": 2**18},
            })
            res = run(cfg)
            meds = {r["component"]: r["median"] for r in res.tables["aggregate"]}
            for comp in ("re", "im", "abs2"):
                assert 1.35 <= meds[comp] <= 1.65, (label, comp, meds[comp])
            detail[label] = "/".join(f"{meds[c]:.3f}" for c in ("re", "im", "abs2"))


def test_criterion_05_dichotomy():
    with budget(5, 300) as detail:
        cfg = parse_config_dict({
            "experiment": "dichotomy",
            "times": ["pi", "sqrt2"],
            "resolution": {"N": 1024, "M": 4096},
            "options": {"resolutions": [4096, 16384, 65536]},
        })
        rows = run(cfg).tables["jumps"]
        j_pi = [r["J"] for r in rows if r["time_label"] == "pi"]
        j_irr = [r["J"] for r in rows if r["time_label"] == "sqrt2"]
        assert len(j_pi) == len(j_irr) == 3
        center = statistics.median(j_pi)
        assert all(abs(j / center - 1.0) <= 0.20 for j in j_pi)
        drops = [a / b for a, b in zip(j_irr, j_irr[1:])]
        assert all(d >= 2.0 for d in drops)
        detail["J(pi)"] = "/".join(f"{j:.3f}" for j in j_pi)
        detail["J(sqrt2) drops"] = "/".join(f"{d:.2f}x" for d in drops)


def test_criterion_06_smoothing_gain():
    with budget(6, 120) as detail:
        for label, potential, floor in (
            ("cos", {"name": "cos"}, 0.35),
            ("weier03", {"kind": "weierstrass", "params": {"alpha": 0.3}}, 0.2),
        ):
            cfg = parse_config_dict({
                "experiment": "smoothing",
                "times": [1.0],
                "potential": potential,
                "resolution": {"N": 1024, "M": 4096},
            })
            row = run(cfg).tables["gains"][0]
            assert abs(row["sigma0_data"] - 0.5) <= 0.05
            assert row["gain"] >= floor
            detail[label] = f"gain={row['gain']:.3f}"
            detail["sigma0(step)"] = f"{row['sigma0_data']:.3f}"


def test_criterion_07_kernel_region():
    with budget(7, 300) as detail:
        cfg = parse_config_dict({"experiment": "kernel_scan"})
        res = run(cfg)
        check = next(c for c in res.checks if c.name == "region_agreement")
        assert check.passed is True
        scan = res.tables["scan"]
        non_boundary = [r for r in scan if not r["boundary"]]
        agree = sum(
            1 for r in non_boundary
            if (r["classification"] == "bounded") == r["valid"]
        )
        assert len(scan) == 28
        assert len(non_boundary) == 21
        assert agree >= 0.9 * len(non_boundary)
        detail["agreement"] = f"{agree}/{len(non_boundary)}"


def test_criterion_08_phi_beta_asymptotics():
    with budget(8, 60) as detail:
        brackets = {0.5: (3.3, 4.1), 1.0: (2.0, 2.6), 2.0: (3.0, 3.2)}
        for beta, (lo, hi) in brackets.items():
            for j in range(4, 17):
                k = 2**j
                if beta < 1.0:
                    branch = (1.0 + k * k) ** ((1.0 - beta) / 2.0)
                elif beta == 1.0:
                    branch = math.log(math.sqrt(1.0 + k * k))
                else:
                    branch = 1.0
                ratio = phi_beta(k, beta) / branch
                assert lo <= ratio <= hi, (beta, k, ratio)
        sweep = [
            convolution_bound_check(2**j, 0, 1.2, 0.9, L=10**5).ratio
            for j in range(4, 11)
        ]
        assert max(sweep) <= 10.0
        detail["max conv ratio"] = f"{max(sweep):.2f}"


def test_criterion_09_global_growth():
    with budget(9, 60) as detail:
        N = 256
        f = realize(step_function(), N)
        V = realize(cosine_potential(), N)
        rep = global_growth_check(f, V, [0.5 * i for i in range(1, 41)], s=0.5)
        assert rep.log_slope <= 1.0
        assert rep.l2_max_dev <= 1e-10
        detail["H^1/2 slope"] = f"{rep.log_slope:.4f}"
        detail["max ratio"] = f"{max(rep.ratios):.3f}"


def test_criterion_10_estimator_calibration():
    with budget(10, 120) as detail:
        dims = []
        for alpha in (0.3, 0.5, 0.7):
            f = realize(weierstrass(alpha), 2**16)
            g = synthesize(f, 2**18)
            est = minkowski_dimension(GridField(g.M, g.values.real))
            assert abs(est.slope - (2.0 - alpha)) <= 0.1, (alpha, est.slope)
            dims.append(est.slope)
        detail["weierstrass dims"] = "/".join(f"{d:.3f}" for d in dims)
        sigmas = []
        for p in (0.75, 1.0, 1.25, 1.5):
            k = np.arange(-4096, 4097)
            c = np.zeros(k.size, dtype=complex)
            c[k != 0] = np.abs(k[k != 0]).astype(float) ** (-p)
            est = regularity_exponent(SpectralField(4096, c))
            assert abs(est.sigma0 - (p - 0.5)) <= 0.05, (p, est.sigma0)
            sigmas.append(est.sigma0)
        detail["planted sigma0"] = "/".join(f"{s:.3f}" for s in sigmas)
