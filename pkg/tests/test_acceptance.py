"""Acceptance criteria 1-10, one test each.

Every test prints a single ``[ACCEPT n] PASS|FAIL`` line (visible without
``-s``) and then asserts the same condition.
"""

import itertools
import math
import time

import numpy as np
import pytest

from xsrisk import bounds as bd
from xsrisk import cli, config
from xsrisk import discrete as dm
from xsrisk import divergences as dv
from xsrisk import gaussian as gm
from xsrisk import oracles as orc

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    t0 = time.perf_counter()

    def emit(n, ok, detail, limit=None):
        took = time.perf_counter() - t0
        in_time = limit is None or took < limit
        budget = f" ({took:.1f}s" + (f" of {limit:g}s" if limit else "") + ")"
        with capsys.disabled():
            print(f"\n[ACCEPT {n}] {'PASS' if ok and in_time else 'FAIL'}: {detail}{budget}")
        assert ok, detail
        assert in_time, f"criterion {n} took {took:.1f}s, limit {limit}s"

    return emit


def random_chain(rng):
    qy, qx, qz = (int(v) for v in rng.integers(2, 5, size=3))
    return dm.MarkovChainSpec(rng.dirichlet(np.ones(qy)), rng.dirichlet(np.ones(qx), qy), rng.dirichlet(np.ones(qz), qx))


def enumerated_excess(p, w1, w2):
    # 0-1 loss: L*(Y|V) = 1 - sum_v max_y P(y, v), by plain loops
    qy, qx, qz = len(p), len(w1[0]), len(w2[0])
    pyx = [[p[y] * w1[y][x] for x in range(qx)] for y in range(qy)]
    pyz = [[math.fsum(pyx[y][x] * w2[x][z] for x in range(qx)) for z in range(qz)] for y in range(qy)]
    risk_x = 1 - math.fsum(max(pyx[y][x] for y in range(qy)) for x in range(qx))
    risk_z = 1 - math.fsum(max(pyz[y][z] for y in range(qy)) for z in range(qz))
    return risk_z - risk_x


def gaussian_profile(name):
    spec, loss = config.build_gaussian(config.preset(name)["gaussian"])
    e = gm.expected_sigma2(loss, gm.chain_covariance(spec)[0, 0])
    return spec, loss, bd.SubGaussProfile.expected(e)


def test_c1_limit_recovery(verdict):
    rng = np.random.default_rng(2024)
    worst_r = worst_j = 0.0
    for _ in range(100):
        spec = random_chain(rng)
        mi = bd.sweep(spec, {"renyi"}, [0.5]).references["mi"]
        r = bd.sweep(spec, {"renyi"}, [0.9999]).curves["renyi"][0]
        j = bd.sweep(spec, {"js"}, [1e-4]).curves["js"][0]
        worst_r = max(worst_r, abs(r - mi) / (1 + mi))
        worst_j = max(worst_j, abs(j - mi) / (1 + mi))
    verdict(1, worst_r < 1e-3 and worst_j < 1e-2,
            f"100 chains, renyi(0.9999) rel gap {worst_r:.2e} < 1e-3, js(1e-4) rel gap {worst_j:.2e} < 1e-2", 30)


def test_c2_sibson_identity(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(200):
        qu, qv = (int(v) for v in rng.integers(2, 6, size=2))
        j = rng.dirichlet(np.ones(qu * qv)).reshape(qu, qv)
        for a in orc.ALPHAS:
            worst = max(worst, orc.sibson_identity_residual(j, a))
    verdict(2, worst < 1e-10, f"200 joints up to 5x5, 9 alphas, max residual {worst:.2e} < 1e-10", 10)


def test_c3_sibson_bruteforce(verdict):
    rng = np.random.default_rng(3)
    worst_v = worst_q = 0.0
    n = 0
    for q, a in itertools.product((2, 3), orc.ALPHAS):
        for _ in range(3):
            j = rng.dirichlet(np.ones(q * q)).reshape(q, q)
            v, arg = orc.sibson_bruteforce(j, a)
            worst_v = max(worst_v, abs(v - dv.sibson_mi(j, a)))
            worst_q = max(worst_q, float(np.max(np.abs(arg - dv.sibson_minimizer(j, a)))))
            n += 1
    verdict(3, worst_v < 1e-5 and worst_q < 1e-3,
            f"{n} 2x2/3x3 joints, value gap {worst_v:.2e} < 1e-5, argmin gap {worst_q:.2e} < 1e-3", 60)


def test_c4_decoupling(verdict):
    reps = orc.decoupling_suite(seed=4, count=1000)
    violations = sum(r.details["violations"] for r in reps)
    worst = max(r.max_abs for r in reps)
    verdict(4, violations == 0,
            f"1000 instances x 9 alphas, {violations} violations, worst lhs - rhs {worst:.2e}", 60)


def test_c5_bound_validity_q2(verdict):
    p, w1, w2 = [0.3, 0.7], dm.qsc_matrix(2, 0.15).tolist(), dm.qsc_matrix(2, 0.05).tolist()
    excess = enumerated_excess(p, w1, w2)
    curve = bd.sweep(dm.MarkovChainSpec(p, w1, w2), {"renyi", "js", "sibson", "lautum"})
    lowest = min(float(np.min(v)) for v in curve.curves.values())
    lowest = min(lowest, curve.references["mi"], curve.references["lautum"])
    ok = abs(excess - 0.035) < 1e-12 and lowest >= excess
    verdict(5, ok, f"excess {excess:.15f} (0.035 +/- 1e-12), smallest bound {lowest:.6f} >= excess", 5)


def test_c6_figure1_shape(verdict):
    widths = {}
    for name in config.DISCRETE_PRESETS:
        spec = config.build_discrete(config.preset(name)["discrete"])
        curve = bd.sweep(spec, {"renyi", "js", "sibson"})
        widths[name] = int(bd.below_interval(curve.alphas, curve.curves["js"], curve.references["mi"]).size)
    small = all(widths[k] > 0 for k in ("q2", "q3", "q5"))
    large = [widths[k] for k in ("q10", "q100", "q200")]
    ok = small and large == sorted(large)
    verdict(6, ok, "js-below-mi interval widths (grid points) " + ", ".join(f"{k}={v}" for k, v in widths.items()),
            300)


def test_c7_gaussian_crossover(verdict):
    msgs, ok = [], True
    for name, lo_band, hi_band in (("example2", (0.05, 0.25), (0.5, 0.95)), ("example3", (0.1, 0.6), None)):
        spec, _, prof = gaussian_profile(name)
        curve = bd.sweep(spec, {"js"}, profile=prof)
        a, js, mi = curve.alphas, curve.curves["js"], curve.references["mi"]
        band = (a >= lo_band[0] - 1e-12) & (a <= lo_band[1] + 1e-12)
        ok &= bool(np.all(js[band] < mi))
        if hi_band:
            band = (a >= hi_band[0] - 1e-12) & (a <= hi_band[1] + 1e-12)
            ok &= bool(np.all(js[band] > mi))
        below = bd.below_interval(a, js, mi)
        msgs.append(f"{name} js<mi on [{below[0]:g}, {below[-1]:g}]")
        if name == "example2":
            target = math.sqrt(2 * 0.898942 * 0.14384)
            ok &= abs(mi - target) < 1e-3
            msgs.append(f"mi {mi:.6f} vs {target:.6f}")
    verdict(7, ok, "; ".join(msgs), 120)


def test_c8_gaussian_js_mc(verdict):
    reps = [orc.js_quadrature_vs_mc(gm.EXAMPLE2, a, n=10_000_000, seed=11, quad_order=64) for a in (0.1, 0.5, 0.9)]
    detail = ", ".join(f"{r.name.split('/')[1]}: {r.discrepancy:.2f}" for r in reps)
    verdict(8, all(r.passed for r in reps), f"1e7 samples, |quad - mc| in standard errors: {detail}", 180)


def test_c9_mc_excess_validity(verdict):
    msgs, ok = [], True
    for name, seed in (("example2", 2025), ("example3", 2026)):
        spec, loss, prof = gaussian_profile(name)
        est = gm.mc_excess_risk_clamped(spec, loss, 1_000_000, seed)
        curve = bd.sweep(spec, {"renyi", "js"}, profile=prof)
        lowest = min(float(np.min(v)) for v in curve.curves.values())
        tol = 3 * est.stderr
        ok &= est.excess >= -tol and est.excess <= lowest + tol
        msgs.append(f"{name} excess {est.excess:.5f} (se {est.stderr:.1e}) <= min bound {lowest:.5f}")
    verdict(9, ok, "; ".join(msgs), 300)


def test_c10_determinism(verdict, tmp_path):
    mismatched = []
    for name in config.PRESETS:
        blobs = []
        for k in range(2):
            out = tmp_path / f"{name}-{k}"
            command = "qsc" if name in config.DISCRETE_PRESETS else "gaussian"
            assert cli.main([command, "--preset", name, "--format", "csv,json", "--out", str(out)]) == 0
            blobs.append(((out / f"{name}.csv").read_bytes(), (out / f"{name}.json").read_bytes()))
        if blobs[0] != blobs[1]:
            mismatched.append(name)
    verdict(10, not mismatched, f"{len(config.PRESETS)} presets rerun, byte-identical CSV/JSON; mismatches: "
            f"{mismatched or 'none'}")
