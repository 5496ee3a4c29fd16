"""Acceptance gate: criteria 1-12.  Each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest
from scipy import stats as sps

from cogarch import (CogarchParams, JumpDist, LevyDriver, build_model, conditions, moments,
                     numlin, simulate, stats)
from cogarch.model import mean_corrected
from cogarch.numlin import mat_exp

from conftest import EX7_BETA, random_stable_model

SEED = 20240601


@pytest.fixture
def report(capsys):
    def _report(n, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if passed else 'FAIL'}: {detail}")
        assert passed, detail
    return _report


@pytest.fixture(scope="module")
def long_path(ex7):
    """One stationary EX7 path of horizon 1e6 on a unit grid."""
    m, d = ex7
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    p = simulate.simulate_path(m, d, 1e6, init="stationary", rng=rng,
                               positivity=conditions.check_positivity(m))
    g = simulate.sample_grid(p, m, 1.0)
    return p, g, time.perf_counter() - t0


def test_c01_spectrum(ex7, report):
    t0 = time.perf_counter()
    z = numlin.companion_eigs(EX7_BETA)
    dt = time.perf_counter() - t0
    expected = np.array([-0.4 - np.pi * 1j, -0.4, -0.4 + np.pi * 1j])
    err = np.max(np.abs(z - expected))
    report(1, err <= 1e-8, f"spectrum of B max error {err:.2e} (tol 1e-8), {dt * 1e3:.2f} ms")


def test_c02_norm_constant(ex7, report):
    k = ex7[0].kappa[2]
    report(2, abs(k - 0.21493) <= 5e-5, f"||S^-1 e a' S||_2 = {k:.6f} (target 0.21493 +- 5e-5)")


def test_c03_mean_corrected_spectrum(ex7, report):
    m, d = ex7
    spec = mean_corrected(m, d.mu).spec
    targets = [complex(-0.47481, -3.14426), complex(-0.25038, 0), complex(-0.47481, 3.14426)]
    errs = [min(max(abs(z.real - t.real), abs(z.imag - t.imag)) for z in spec) for t in targets]
    report(3, max(errs) <= 5e-5,
           f"spectrum of Bt = {np.round(spec, 5).tolist()}, max component error {max(errs):.1e}")


def test_c04_condition_suite(ex7, report):
    m, d = ex7
    t0 = time.perf_counter()
    st = conditions.check_stationarity(m, d).entry(2)
    c1 = conditions.check_moment(m, d, 1)
    c2 = conditions.check_moment(m, d, 2)
    pos = conditions.check_positivity(m)
    dt = time.perf_counter() - t0
    margin = c1.entry(2).margin
    ok = (st.satisfied and c1.satisfied and c2.satisfied
          and abs(margin - (0.4 - 0.21493468809 * 1.48)) < 1e-9 and margin > 0
          and pos.status == conditions.PROVEN_NONNEGATIVE and pos.rule == "5.2(b)(ii)")
    report(4, ok, f"(3.2) r=2 margin {st.margin:.6f}; (4.2) margin {margin:.6f}; "
                  f"(4.3) {c2.satisfied}; positivity {pos.status} via {pos.rule}; "
                  f"{dt * 1e3:.1f} ms")


def test_c05_moment_consistency(ex7, long_path, report):
    m, d = ex7
    p, g, elapsed = long_path
    EV, varV = moments.stationary_v_moments(m, d)
    mV, seV = stats.mean_with_se(g.V)
    vV, sevV = stats.variance_with_se(g.V)
    zm, zv = (mV - EV) / seV, (vV - varV) / sevV
    ok = abs(zm) <= 3 and abs(zv) <= 4
    report(5, ok, f"{p.n_events} jumps, {elapsed:.1f} s; mean V {mV:.5f} vs {EV:.5f} "
                  f"(z={zm:+.2f}, tol 3); var V {vV:.5f} vs {varV:.5f} (z={zv:+.2f}, tol 4)")


def test_c06_volatility_acf(ex7, long_path, report):
    m, d = ex7
    _, g, _ = long_path
    est = stats.sample_acf(g.V, 40)
    cmp = stats.compare_acvf(est, moments.acf_V(m, d, np.arange(1, 41, dtype=float)))
    report(6, cmp.passed(0.9), f"{cmp.fraction_within:.1%} of lags 1..40 inside the "
                               f"+-{est.band:.5f} band (need 90%), max |z| {np.abs(cmp.z).max():.2f}")


def test_c07_increments(ex7, long_path, report):
    m, d = ex7
    _, g, _ = long_path
    inc = np.diff(g.G)
    white = stats.compare_acvf(stats.sample_acf(inc, 40), np.zeros(40))
    sq = stats.sample_acf(inc ** 2, 40)
    slope, _ = stats.envelope_slope(sq.acf, np.arange(3, 21))
    target = mean_corrected(m, d.mu).lam
    positive_decaying = bool(np.all(sq.acf[1:11] > 0) and sq.acf[1] > sq.acf[10])
    slope_ok = abs(slope - target) <= 0.3 * abs(target)
    ok = white.passed(0.9) and positive_decaying and slope_ok
    report(7, ok, f"increments {white.fraction_within:.1%} of lags in white-noise band; "
                  f"squared-increment ACF positive/decaying={positive_decaying}; "
                  f"envelope slope {slope:.4f} vs {target:.5f} (+-30%)")


def test_c08_cogarch11_equivalence(report):
    rng = np.random.default_rng(SEED + 8)
    t0 = time.perf_counter()
    worst = 0.0
    count = 0
    while count < 500:
        a0, a1, b1 = rng.uniform(0.05, 2), rng.uniform(0.05, 1.5), rng.uniform(0.1, 3)
        m = build_model(CogarchParams(a0, (a1,), (b1,)))
        d = LevyDriver(rng.uniform(0.2, 3), JumpDist.normal(rng.uniform(0.05, 1.5)))
        if not conditions.check_stationarity(m, d).satisfied:
            continue
        y0 = np.array([rng.uniform(0, 3)])
        js = simulate.sample_jumps(d, 100.0, rng)
        p = simulate.simulate_from_jumps(m, d, js, y0, 100.0)
        g = simulate.sample_grid(p, m, 0.25)
        ref_ev = simulate.cogarch11_reference(*simulate.cogarch11_map(a0, a1, b1), js.times,
                                              js.sizes, a0 + a1 * y0[0], js.times)
        ref_gr = simulate.cogarch11_reference(*simulate.cogarch11_map(a0, a1, b1), js.times,
                                              js.sizes, a0 + a1 * y0[0], g.t)
        vmax = max(p.v_pre.max(initial=0), g.V.max())
        disc = max(np.abs(p.v_pre - ref_ev).max(initial=0), np.abs(g.V - ref_gr).max())
        worst = max(worst, disc / (1 + vmax))
        count += 1
    dt = time.perf_counter() - t0
    report(8, worst <= 1e-10, f"500 models, max discrepancy/(1+max V) = {worst:.2e} "
                              f"(tol 1e-10), {dt:.1f} s")


def test_c09_linear_algebra(ex7, report):
    m, d = ex7
    rng = np.random.default_rng(SEED + 9)
    pairs = [(m, d)]
    while len(pairs) < 101:
        q = int(rng.integers(1, 6))
        mm = random_stable_model(rng, q, p=int(rng.integers(1, q + 1)))
        dd = LevyDriver(rng.uniform(0.5, 3), JumpDist.normal(rng.uniform(0.01, 0.5)))
        if conditions.check_moment(mm, dd, 2).satisfied:
            pairs.append((mm, dd))
    worst_lyap = worst_cov = worst_acvf = 0.0
    skipped = 0
    for mm, dd in pairs:
        mc = mean_corrected(mm, dd.mu)
        U = np.outer(mm.e, mm.e)
        L = numlin.lyapunov_gram(mc.Bt, U)
        worst_lyap = max(worst_lyap, np.abs(mc.Bt @ L + L @ mc.Bt.T + U).max())
        Ck, Cg = moments.cov_state_routes(mm, dd)
        worst_cov = max(worst_cov, np.abs(Ck - Cg).max() / np.abs(Cg).max())
        if not mc.distinct:
            skipped += 1
            continue
        h = np.linspace(0, 20, 41)
        var = moments.stationary_v_moments(mm, dd)[1]
        diff = moments.acvf_V(mm, dd, h, check=False) - moments.acvf_V_spectral(mm, dd, h)
        worst_acvf = max(worst_acvf, np.abs(diff).max() / var)
    ok = worst_lyap <= 1e-10 and worst_cov <= 1e-8 and worst_acvf <= 1e-8
    report(9, ok, f"Lyapunov residual {worst_lyap:.1e}; cov routes rel {worst_cov:.1e}; "
                  f"acvf routes rel {worst_acvf:.1e} (EX7 + 100 models, {skipped} repeated)")


def test_c10_propagator_mean(ex7, report):
    m, d = ex7
    Bt = mean_corrected(m, d.mu).Bt
    rng = np.random.default_rng(SEED + 10)
    t0 = time.perf_counter()
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        J = simulate.sample_propagators(m, d, t, 100_000, rng)
        se = J.std(0, ddof=1) / np.sqrt(len(J))
        dev = np.abs(J.mean(0) - mat_exp(Bt, t))
        z = np.where(se > 0, dev / np.where(se > 0, se, 1), np.where(dev < 1e-12, 0, np.inf))
        worst = max(worst, z.max())
    dt = time.perf_counter() - t0
    report(10, worst <= 4, f"max entrywise |z| = {worst:.2f} over t in {{0.5, 1, 2}} "
                           f"(tol 4), {dt:.1f} s")


def test_c11_stationary_sampler(ex7, report):
    m, d = ex7
    rng = np.random.default_rng(SEED + 11)
    t0 = time.perf_counter()
    n = 100_000
    Y = simulate.stationary_init(m, d, rng, size=n)
    ey, C = moments.mean_state(m, d), moments.cov_state(m, d)
    zm = np.abs(Y.mean(0) - ey) / (Y.std(0, ddof=1) / np.sqrt(n))
    Yc = Y - Y.mean(0)
    prods = Yc[:, :, None] * Yc[:, None, :]
    Chat = prods.mean(0)
    se = prods.std(0, ddof=1) / np.sqrt(n)
    zc = np.abs(Chat - C) / se
    # fixed point: map an independent batch and compare with the first
    Y2 = simulate.stationary_init(m, d, rng, size=n)
    T = rng.exponential(1.0 / d.rate, n)
    Z = d.jump.sample(rng, n) ** 2
    mapped = simulate.fixed_point_map(Y2, T, Z, m)
    ks = sps.ks_2samp(Y @ m.a, mapped @ m.a)
    dt = time.perf_counter() - t0
    ok = zm.max() <= 3 and zc.max() <= 4 and ks.pvalue > 0.01
    report(11, ok, f"mean max |z| {zm.max():.2f} (tol 3); cov max |z| {zc.max():.2f} (tol 4); "
                   f"KS p = {ks.pvalue:.3f} (need > 0.01); {dt:.1f} s")


def test_c12_positivity_floor(ex7, long_path, report):
    m, _ = ex7
    p, g, _ = long_path
    vmin = min(p.v_pre.min(), g.V.min())
    report(12, vmin >= m.alpha0 - 1e-10, f"min V = {vmin:.10f} (floor alpha0 - 1e-10)")
