"""Acceptance suite: nine numbered end-to-end checks of the toolkit.

Each test prints one "[criterion N] PASS/FAIL" line (visible even under
pytest's capture) so a full run reads as a checklist.  Stated runtime
budgets are asserted alongside the numerical requirements.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from decaylab import (
    RateSet,
    Scenario,
    Species,
    Verdict,
    classify,
    conservation_residual,
    derive_rates,
    detect,
    entangled_rate,
    evaluate_curve,
    histogram,
    lifetime_report,
    lifetime_species,
    n_entangled,
    n_single,
    photons_emitted,
    reconstruct,
    relative_modification,
    simulate,
    species_survival_fraction,
)

RS11 = RateSet(1.0, 1.0)


def _report(capsys, number: int, ok: bool, name: str, detail: str) -> None:
    line = f"[criterion {number}] {'PASS' if ok else 'FAIL'} - {name} ({detail})"
    with capsys.disabled():
        print(line)
    assert ok, line


@pytest.fixture(scope="module")
def ode_sets():
    """19 random preparations plus one tuned so gamma_t == gamma_or exactly."""
    rng = np.random.default_rng(303)
    sets = []
    for _ in range(19):
        gor, gpa = rng.uniform(0.8, 2.5, 2)
        wor = complex(*rng.uniform(-0.28, 0.28, 2))
        wpa = complex(*rng.uniform(-0.28, 0.28, 2))
        sets.append(RateSet(gor, gpa, w_or=wor, w_pa=wpa))
    sets.append(
        RateSet(2.0, 1.0, w_or=math.sqrt(0.5) - 1.0, w_pa=math.sqrt(0.75) - 1.0)
    )
    return sets


@pytest.fixture(scope="module")
def big_run():
    """The million-pair reference run shared by criteria 4 and 5."""
    sc = Scenario(n0=1_000_000, rates=RS11, seed=0)
    stream, curve = simulate(sc)
    return sc, stream, curve


def test_criterion_1_state_lifetime(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    ok = True
    for gor, gpa in rng.uniform(0.1, 10.0, size=(1000, 2)):
        er = derive_rates(RateSet(gor, gpa))
        tau = 1.0 / er.gamma_t
        if tau != 1.0 / (gor + gpa) or not tau < min(1.0 / gor, 1.0 / gpa):
            ok = False
    for gor, gpa in rng.uniform(0.1, 10.0, size=(5, 2)):
        if lifetime_report(RateSet(gor, gpa)).tau_tilde_state != 1.0 / (gor + gpa):
            ok = False
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 1.0
    _report(
        capsys,
        1,
        ok,
        "unmodified entangled lifetime is 1/(gamma_or+gamma_pa), below both free lifetimes",
        f"1000 rate pairs, exact arithmetic, {elapsed:.2f} s",
    )


def test_criterion_2_modified_rates(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    ws = []
    while len(ws) < 1000:
        re, im = rng.uniform(-0.5, 0.5, 2)
        if re * re + im * im <= 0.25:
            ws.append(complex(re, im))
    gs = rng.uniform(0.1, 10.0, 1000)
    worst = 0.0
    for g, w in zip(gs, ws):
        ref_rate = g * abs(1 + w) ** 2
        ref_mod = abs(w) ** 2 + 2 * w.real
        worst = max(
            worst,
            abs(entangled_rate(g, w) - ref_rate) / ref_rate,
            abs(relative_modification(w) - ref_mod) / abs(ref_mod),
        )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    _report(
        capsys,
        2,
        ok,
        "modified rate gamma |1+W|^2 and relative modification |W|^2 + 2 Re W",
        f"1000 draws with |W| <= 0.5, max rel err {worst:.2e}, {elapsed:.2f} s",
    )


def test_criterion_3_closed_forms_match_rk4(capsys, ode_sets):
    start = time.perf_counter()
    ers = [derive_rates(rs) for rs in ode_sets]
    # the tuned set must actually sit on the degenerate branch
    deg_gap = min(
        abs(ers[-1].gamma_t - ode_sets[-1].gamma_or),
        abs(ers[-1].gamma_t - ode_sets[-1].gamma_pa),
    )
    assert deg_gap < 1e-8 * ers[-1].gamma_t

    n0, h, n_sets = 1000.0, 1e-5, len(ode_sets)
    M = np.zeros((n_sets, 5, 5))
    for i, (rs, er) in enumerate(zip(ode_sets, ers)):
        gt, gto, gtp = er.gamma_t, er.gamma_t_or, er.gamma_t_pa
        go, gp = rs.gamma_or, rs.gamma_pa
        M[i] = [
            [-gt, 0.0, 0.0, 0.0, 0.0],
            [gtp, -go, 0.0, 0.0, 0.0],
            [gto, 0.0, -gp, 0.0, 0.0],
            [gto, go, 0.0, 0.0, 0.0],
            [gtp, 0.0, gp, 0.0, 0.0],
        ]
    # one classical RK4 step of the linear system is the degree-4 Taylor map
    A = h * M
    P = np.eye(5) + A
    term = A.copy()
    for k in (2.0, 3.0, 4.0):
        term = term @ A / k
        P = P + term

    X = np.zeros((n_sets, 5))
    X[:, 0] = n0
    states = [X.copy()]
    for _ in range(50):
        for _ in range(8000):
            X = np.einsum("sij,sj->si", P, X)
        states.append(X.copy())
    times = np.arange(51) * 8000 * h

    worst = 0.0
    for i, (rs, er) in enumerate(zip(ode_sets, ers)):
        closed = np.stack(
            [
                n_entangled(times, n0, er),
                n_single(times, Species.OR, n0, rs, er),
                n_single(times, Species.PA, n0, rs, er),
                photons_emitted(times, Species.OR, n0, rs, er),
                photons_emitted(times, Species.PA, n0, rs, er),
            ],
            axis=1,
        )
        ode = np.stack([s[i] for s in states], axis=0)
        rel = np.abs(ode - closed) / np.maximum(np.abs(closed), 1e-300)
        rel[(closed == 0.0) & (ode == 0.0)] = 0.0
        worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 30.0
    _report(
        capsys,
        3,
        ok,
        "closed forms track RK4 at step 1e-5 on all five observables",
        f"20 sets incl. exact degeneracy, max rel err {worst:.2e}, {elapsed:.1f} s",
    )


def test_criterion_4_conservation(capsys, ode_sets, big_run):
    worst_analytic = 0.0
    for rs in ode_sets:
        sc = Scenario(n0=1000, rates=rs, t_max=4.0, grid_points=801)
        worst_analytic = max(worst_analytic, conservation_residual(evaluate_curve(sc)))
    sc, _, curve = big_run
    mc_residual = conservation_residual(curve)
    ok = (
        worst_analytic <= 1e-9 * 1000
        and mc_residual == 0.0
        and curve.n.dtype == np.int64
    )
    _report(
        capsys,
        4,
        ok,
        "atom conservation: analytic within 1e-9 n0, Monte Carlo exact in integers",
        f"analytic max {worst_analytic:.2e}, MC residual {mc_residual:g}",
    )


def test_criterion_5_monte_carlo_matches_analytic(capsys, big_run):
    start = time.perf_counter()
    sc, _, curve = big_run
    expect = evaluate_curve(sc)
    fractions = []
    for name in ("n", "n_pa"):
        mean = getattr(expect, name)
        p = mean / sc.n0
        sigma = np.sqrt(sc.n0 * p * (1.0 - p))
        diff = np.abs(getattr(curve, name) - mean)
        inside = np.where(sigma > 0.0, diff <= 4.0 * sigma, diff == 0.0)
        fractions.append(float(np.mean(inside)))
    elapsed = time.perf_counter() - start
    ok = min(fractions) >= 0.99 and elapsed < 60.0
    _report(
        capsys,
        5,
        ok,
        "million-pair run stays within 4 binomial sigma on >= 99% of the grid",
        f"inside fractions n {fractions[0]:.3f}, n_pa {fractions[1]:.3f}, {elapsed:.1f} s",
    )


def _scan_lifetime(h, rates, er, step=1e-6, chunk=2_000_000):
    """Brute-force 1/e crossing on a uniform grid, linearly interpolated."""
    target = math.exp(-1.0)
    prev_tau, prev_s = 0.0, 1.0
    k0 = 1
    while True:
        taus = (k0 + np.arange(chunk)) * step
        s = species_survival_fraction(taus, h, rates, er)
        below = s < target
        if below.any():
            i = int(np.argmax(below))
            tau_hi, s_hi = taus[i], s[i]
            tau_lo, s_lo = (prev_tau, prev_s) if i == 0 else (taus[i - 1], s[i - 1])
            return tau_lo + (s_lo - target) / (s_lo - s_hi) * (tau_hi - tau_lo)
        prev_tau, prev_s = taus[-1], s[-1]
        k0 += chunk


def test_criterion_6_species_lifetimes(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(606)
    pairs = rng.uniform(0.1, 10.0, size=(100, 2))
    worst_free = 0.0
    min_shift = math.inf
    worst_scan = 0.0
    for gor, gpa in pairs:
        rs = RateSet(gor, gpa)
        er = derive_rates(rs)
        worst_free = max(
            worst_free,
            abs(lifetime_species(Species.OR, rs, er) - 1.0 / gor),
            abs(lifetime_species(Species.PA, rs, er) - 1.0 / gpa),
        )
        mod = RateSet(gor, gpa, w_or=0.2, w_pa=0.2)
        mod_er = derive_rates(mod)
        for h in Species:
            tau = lifetime_species(h, mod, mod_er)
            min_shift = min(min_shift, abs(tau - 1.0 / mod.gamma(h)))
            worst_scan = max(worst_scan, abs(tau - _scan_lifetime(h, mod, mod_er)))
    elapsed = time.perf_counter() - start
    ok = worst_free <= 1e-9 and min_shift > 1e-3 and worst_scan <= 1e-5
    _report(
        capsys,
        6,
        ok,
        "species lifetimes: free at W=0, shifted and scan-verified at W=0.2",
        f"free dev {worst_free:.1e}, min shift {min_shift:.1e}, "
        f"scan gap {worst_scan:.1e}, {elapsed:.1f} s",
    )


def test_criterion_7_reconstruction_identity(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(707)
    ok = True
    for seed in range(20):
        gor, gpa = rng.uniform(0.3, 3.0, 2)
        wor = complex(*rng.uniform(-0.25, 0.25, 2))
        wpa = complex(*rng.uniform(-0.25, 0.25, 2))
        sc = Scenario(
            n0=20_000, rates=RateSet(gor, gpa, w_or=wor, w_pa=wpa), seed=seed
        )
        stream, direct = simulate(sc)
        rebuilt = reconstruct(classify(stream, sc.grid(), sc.n0))
        for name in ("n", "n_or", "n_pa", "N_or", "N_pa"):
            if not np.array_equal(getattr(rebuilt, name), getattr(direct, name)):
                ok = False
        if seed < 5:
            coarse = np.array([0.0, 0.31, 1.7, 4.2, 9.9])
            a = reconstruct(classify(stream, coarse, sc.n0))
            b = histogram(stream, coarse, sc.n0)
            for name in ("n", "n_or", "n_pa", "N_or", "N_pa"):
                if not np.array_equal(getattr(a, name), getattr(b, name)):
                    ok = False
    elapsed = time.perf_counter() - start
    _report(
        capsys,
        7,
        ok,
        "classify + reconstruct equals the direct histogram, integer for integer",
        f"20 seeded runs, {elapsed:.1f} s",
    )


def test_criterion_8_detection(capsys):
    start = time.perf_counter()
    n0 = 1_000_000
    hits_ent = 0
    for seed in range(100):
        stream, _ = simulate(Scenario(n0=n0, rates=RS11, seed=1000 + seed))
        if detect(stream, n0, RS11).verdict is Verdict.ENTANGLED:
            hits_ent += 1
    hits_prod = 0
    for seed in range(100):
        species = Species.OR if seed % 2 == 0 else Species.PA
        stream, _ = simulate(
            Scenario(
                n0=n0,
                rates=RS11,
                mode="product",
                product_species=species,
                seed=2000 + seed,
            )
        )
        if detect(stream, n0, RS11).verdict is Verdict.PRODUCT:
            hits_prod += 1
    elapsed = time.perf_counter() - start
    ok = hits_ent >= 95 and hits_prod >= 95 and elapsed < 600.0
    _report(
        capsys,
        8,
        ok,
        "photon-stream detection at n0 = 1e6",
        f"entangled {hits_ent}/100, product {hits_prod}/100, {elapsed:.0f} s",
    )


def test_criterion_9_parallel_reproducibility(capsys, tmp_path):
    start = time.perf_counter()
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "n0 = 100000\n"
        "gamma_or = 1.0\n"
        "gamma_pa = 1.0\n"
        "seed = 7\n"
        "parallel = true\n"
        "grid_points = 128\n"
        "emit = montecarlo\n"
    )
    payloads = []
    for label, threads in (("a", "1"), ("b", "1"), ("c", "8")):
        out = tmp_path / label
        env = os.environ.copy()
        env["DECAYLAB_THREADS"] = threads
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "decaylab",
                "--config",
                str(cfg),
                "--out",
                str(out),
                "--quiet",
            ],
            env=env,
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        payloads.append((out / "events.csv").read_bytes())
    elapsed = time.perf_counter() - start
    ok = payloads[0] == payloads[1] == payloads[2] and len(payloads[0]) > 0
    _report(
        capsys,
        9,
        ok,
        "events.csv byte-identical across reruns and 1 vs 8 threads",
        f"{len(payloads[0])} bytes, {elapsed:.1f} s",
    )
