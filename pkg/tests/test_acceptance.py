"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary, then asserts, so a failure also fails the run.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from sasphotons import physics, report, synthetic
from sasphotons.coincidence import extract_correlated_rate, histogram
from sasphotons.fitting import fit_power_law, fit_step_constants
from sasphotons.montecarlo import AS, S, ChannelProbabilities, EventStream, simulate
from sasphotons.spatial import SpatialProfile, aperture_curve, fit_profile, ratio_curve

LASER = physics.LaserConfig(wavelength=633, pulse_width=200e-15, rep_rate=76e6, power=40e-3)
DK1 = 26 / 1332


def test_01_photons_per_pulse(acceptance):
    n = physics.photons_per_pulse(LASER)
    ok = abs(n - 1.68e9) / 1.68e9 < 5e-3 and abs(n - 1.8e9) / 1.8e9 < 0.10
    acceptance(1, "photons per pulse", ok, f"{n:.4g} (vs 1.8e9: {100 * (n / 1.8e9 - 1):+.1f}%)")
    assert ok


def test_02_interaction_energy_chain(acceptance):
    delta = physics.interaction_amplitude_from_rate(20.0, DK1, LASER)
    v0 = delta / 1.8e9
    ok = (abs(delta - 1.21e-5) / 1.21e-5 < 5e-3 and delta >= 10e-6
          and abs(v0 - 6.7e-15) / 6.7e-15 < 5e-3 and 0.5 <= v0 / 10e-15 <= 2)
    acceptance(2, "interaction-energy chain", ok, f"Delta = {delta:.4g} eV, V0 = {v0:.3g} eV")
    assert ok


def test_03_rate_round_trip(acceptance):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        laser = LASER.with_power(rng.uniform(1e-4, 0.2))
        rate = 10 ** rng.uniform(-3, 6)
        dk = rng.uniform(1e-3, 1.0)
        delta = physics.interaction_amplitude_from_rate(rate, dk, laser)
        back = physics.pair_rate(laser, delta / physics.photons_per_pulse(laser), dk)
        worst = max(worst, abs(back - rate) / rate)
    ok = worst <= 1e-12
    acceptance(3, "rate/amplitude round trip", ok, f"max relative error {worst:.2e} over 1000 inputs")
    assert ok


@pytest.mark.slow
def test_04_null_coincidences(acceptance):
    probs = ChannelProbabilities(1e-3, 1e-3, 0.0)
    t0 = time.perf_counter()
    good = 0
    for seed in range(100):
        r = extract_correlated_rate(histogram(simulate(probs, 10 ** 7, seed)))
        good += abs(r.g2_zero - 1) <= 5 * r.g2_uncertainty and abs(r.corr_rate) < 5 * r.uncertainty
    elapsed = time.perf_counter() - t0
    ok = good >= 99
    acceptance(4, "null coincidence test", ok, f"{good}/100 seeds consistent, {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_05_injection_recovery(acceptance):
    rows = []
    ok = True
    for i, pp in enumerate((1e-6, 1e-5, 1e-4)):
        stream = simulate(ChannelProbabilities(1e-3, 1e-3, pp), 10 ** 7, seed=100 + i, rep_rate=76e6)
        r = extract_correlated_rate(histogram(stream))
        injected = pp * 76e6
        z = (r.corr_rate - injected) / r.uncertainty
        ok &= abs(z) < 5
        rows.append(f"p_pair={pp:g}: {r.corr_rate:.4g} vs {injected:.4g} ({z:+.2f} sigma)")
    acceptance(5, "injection recovery", ok, "; ".join(rows))
    assert ok


def brute_force_counts(stream: EventStream, D: int) -> np.ndarray:
    """All-pairs delay histogram by explicit outer difference."""
    s = stream.channel_pulses(S)
    a = stream.channel_pulses(AS)
    counts = np.zeros(2 * D + 1, dtype=np.int64)
    for start in range(0, s.size, 512):
        d = np.subtract.outer(a, s[start:start + 512]).ravel()
        d = d[np.abs(d) <= D]
        counts += np.bincount(d + D, minlength=2 * D + 1)
    return counts


def test_06_correlator_oracle(acceptance):
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    mismatches = 0
    total_records = 0
    for _ in range(100):
        n_records = int(rng.integers(0, 10_001))
        n_pulses = int(rng.integers(max(n_records, 1), 20 * n_records + 2))
        keys = np.sort(rng.choice(2 * n_pulses, size=n_records, replace=False))
        stream = EventStream(keys // 2, keys % 2, n_pulses, 76e6)
        D = int(rng.integers(1, 60))
        chunk = int(rng.integers(1, 5000))
        total_records += n_records
        if not np.array_equal(histogram(stream, D, chunk_records=chunk).counts, brute_force_counts(stream, D)):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0
    acceptance(6, "correlator oracle", ok, f"{100 - mismatches}/100 streams exact ({total_records} records, {elapsed:.1f} s)")
    assert ok


def test_07_spectral_constants(acceptance):
    mat = physics.diamond()
    exact = fit_step_constants(synthetic.spectral_series(noisy=False), mat)
    noisy = fit_step_constants(synthetic.spectral_series(rel_noise=0.05, seed=1), mat)
    truths = {"C1": 5.75e-22, "C2": 3.35e-21}
    digits = {k: abs(exact.value(k) / v - 1) for k, v in truths.items()}
    within = {k: abs(noisy.value(k) - v) / noisy.stderr(k) for k, v in truths.items()}
    ok = all(e < 5e-7 for e in digits.values()) and all(z < 2 for z in within.values())
    detail = ", ".join(f"{k} = {noisy.value(k):.4g} ({within[k]:.2f} SE; noiseless rel err {digits[k]:.1e})"
                       for k in truths)
    acceptance(7, "spectral-constant recovery", ok, detail)
    assert ok


def test_08_power_law(acceptance):
    fit = fit_power_law(synthetic.power_scan(powers_mw=(5, 10, 15, 20, 25, 30, 35, 40), seed=2))
    b = fit.value("exponent")
    ok = abs(b - 2.0) <= 0.1
    acceptance(8, "power-law exponent", ok, f"b = {b:.4f} +/- {fit.stderr('exponent'):.4f}")
    assert ok


def test_09_aperture_fits(acceptance):
    radii = np.linspace(0.25, 10.0, 20)
    truth = SpatialProfile(((0.3, 1.0), (0.7, 4.0)))
    profile, fit = fit_profile(aperture_curve(truth, radii, "aS"), 2)
    worst = max(abs(g / w - 1) for got, want in zip(profile.components, truth.components)
                for g, w in zip(got, want))
    rng = np.random.default_rng(9)
    r = np.linspace(0.1, 20, 60)
    monotone = 0
    for _ in range(100):
        narrow = rng.uniform(0.3, 2.0)
        wide = narrow * rng.uniform(1.5, 6.0)
        w = rng.uniform(0.05, 0.95)
        points, _ = ratio_curve(aperture_curve(SpatialProfile.single(wide), r, "S"),
                                aperture_curve(SpatialProfile(((w, narrow), (1 - w, wide))), r, "aS"))
        monotone += bool(np.all(np.diff(points[:, 1]) >= -1e-12))
    ok = fit.converged and worst < 0.02 and monotone == 100
    acceptance(9, "aperture fits", ok, f"worst parameter error {100 * worst:.2e}%, ratio monotone in {monotone}/100")
    assert ok


_THROUGHPUT = """
import json, resource, time
from sasphotons.coincidence import extract_correlated_rate, histogram
from sasphotons.montecarlo import ChannelProbabilities, simulate
t0 = time.perf_counter()
stream = simulate(ChannelProbabilities(1e-4, 1e-4, 1e-6), 10 ** 8, seed=10)
res = extract_correlated_rate(histogram(stream))
print(json.dumps({"seconds": time.perf_counter() - t0, "events": len(stream),
                  "maxrss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss}))
"""


@pytest.mark.slow
def test_10_throughput(acceptance):
    out = subprocess.run([sys.executable, "-c", _THROUGHPUT], capture_output=True, text=True, check=True)
    stats = json.loads(out.stdout)
    mem_mb = stats["maxrss_kb"] / 1024
    ok = stats["seconds"] < 120 and mem_mb < 1024
    acceptance(10, "throughput 1e8 pulses", ok,
               f"{stats['seconds']:.1f} s, peak RSS {mem_mb:.0f} MB, {stats['events']} events")
    assert ok


def test_11_report_numbers(acceptance):
    values = {q.name: q.value for q in report.headline_numbers(
        20.0, LASER, physics.CollectionConfig(), physics.diamond(), enhancement=report.TBG_ENHANCEMENT)}
    ppp = values["pairs_per_incident_photon"]
    tbg = values["projected_interaction_amplitude"]
    ok = 1e-16 <= ppp <= 1e-15 and 0.1e-3 <= tbg <= 1e-3
    acceptance(11, "report numbers", ok, f"pairs per photon {ppp:.3g}, TBG Delta {tbg * 1e3:.3f} meV")
    assert ok
