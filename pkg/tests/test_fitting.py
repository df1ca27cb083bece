import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasphotons import physics, synthetic
from sasphotons.fitting import (
    FitError,
    SpectralRateSeries,
    fit_cross_section_scaling,
    fit_power_law,
    fit_step_constants,
    normalize_to_max,
    raman_peak_area,
)


def lorentzian(x, center, hwhm, area):
    return area * hwhm / (math.pi * ((x - center) ** 2 + hwhm ** 2))


def test_peak_area_trivial():
    zero = physics.Spectrum([0, 100], [0, 0])
    assert raman_peak_area(zero, (10, 90)) == 0
    x = np.arange(0, 101.0)
    rect = physics.Spectrum(x, np.where((x >= 20) & (x <= 30), 1.0, 0.0))
    assert raman_peak_area(rect, (15, 35), baseline="none") == pytest.approx(11.0)
    sharp = physics.Spectrum([0, 20, 20.0001, 30, 30.0001, 50], [0, 0, 1, 1, 0, 0])
    assert raman_peak_area(sharp, (0, 50)) == pytest.approx(10.0, rel=1e-4)


def test_peak_area_lorentzian():
    x = np.linspace(0, 400, 40001)
    sp = physics.Spectrum(x, lorentzian(x, 200, 3.0, 100.0))
    # finite window of +-30 half-widths holds (2/pi) atan(30) of the area
    oracle = 100 * 2 / math.pi * math.atan(30)
    assert raman_peak_area(sp, (110, 290), baseline="none") == pytest.approx(oracle, rel=1e-5)
    assert oracle == pytest.approx(97.88, abs=0.01)


def test_peak_area_linear_baseline():
    x = np.linspace(0, 400, 40001)
    sp = physics.Spectrum(x, lorentzian(x, 200, 3.0, 100.0) + 5 + 0.01 * x)
    edge = lorentzian(110, 200, 3.0, 100.0)
    oracle = 100 * 2 / math.pi * math.atan(30) - edge * 180
    assert raman_peak_area(sp, (110, 290)) == pytest.approx(oracle, rel=1e-5)


def test_peak_area_errors():
    sp = physics.Spectrum([0, 100], [1, 1])
    with pytest.raises(ValueError):
        raman_peak_area(sp, (50, 200))
    with pytest.raises(ValueError):
        raman_peak_area(sp, (10, 20), baseline="cubic")


def test_diamond_spectrum_first_order_area():
    area = raman_peak_area(physics.diamond_spectrum(), (1332 - 60, 1332 + 60))
    # 35e3 counts/s Lorentzian at HWHM 13, less the baseline through its wings
    peak = 35e3 * 13 * 2 * math.atan(60 / 13)
    wing = 35e3 / (1 + (60 / 13) ** 2)
    assert area == pytest.approx(peak - wing * 120, rel=0.01)


def test_step_constants_noiseless():
    series = synthetic.spectral_series(noisy=False)
    fit = fit_step_constants(series, physics.diamond())
    assert fit.value("C1") == pytest.approx(physics.DIAMOND_C1, rel=1e-6)
    assert fit.value("C2") == pytest.approx(physics.DIAMOND_C2, rel=1e-6)
    assert fit.unidentifiable == ()
    assert fit.residual_norm < 1e-6


def test_step_constants_noisy_within_two_se():
    fit = fit_step_constants(synthetic.spectral_series(seed=1), physics.diamond())
    for name, truth in (("C1", physics.DIAMOND_C1), ("C2", physics.DIAMOND_C2)):
        assert abs(fit.value(name) - truth) < 2 * fit.stderr(name)


def test_step_constants_error_coverage():
    # stderr is calibrated: about 95% of seeds land within 2 SE
    hits = 0
    for seed in range(200):
        fit = fit_step_constants(synthetic.spectral_series(seed=seed), physics.diamond())
        hits += abs(fit.value("C1") - physics.DIAMOND_C1) < 2 * fit.stderr("C1")
    assert 0.90 <= hits / 200 <= 0.99


def test_mirrored_duplicates_do_not_shrink_errors():
    one = fit_step_constants(synthetic.spectral_series(seed=4, mirrored=False), physics.diamond())
    two = fit_step_constants(synthetic.spectral_series(seed=4, mirrored=True), physics.diamond())
    assert two.stderr("C1") == pytest.approx(one.stderr("C1"), rel=1e-12)
    assert two.n_points == one.n_points


def test_step_constants_all_zero():
    base = synthetic.spectral_series(noisy=False)
    zero = SpectralRateSeries(base.shifts, np.zeros_like(base.rates), base.uncertainties, base.laser, base.collection)
    fit = fit_step_constants(zero, physics.diamond())
    assert fit.value("C1") == 0 and fit.value("C2") == 0


def test_step_constants_single_band():
    series = synthetic.spectral_series(shifts=np.arange(200.0, 1300.0, 100.0), noisy=False)
    fit = fit_step_constants(series, physics.diamond())
    assert fit.value("C1") == pytest.approx(physics.DIAMOND_C1, rel=1e-9)
    assert math.isnan(fit.value("C2"))
    assert fit.unidentifiable == ("C2",)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0))
def test_step_constants_equivariant(s):
    base = synthetic.spectral_series(seed=5)
    scaled = SpectralRateSeries(base.shifts, base.rates * s * s, base.uncertainties * s * s,
                                base.laser, base.collection)
    a = fit_step_constants(base, physics.diamond())
    b = fit_step_constants(scaled, physics.diamond())
    for name in ("C1", "C2"):
        assert b.value(name) == pytest.approx(a.value(name) * s, rel=1e-10)


def test_series_validation():
    laser, coll = physics.LaserConfig(), physics.CollectionConfig()
    with pytest.raises(ValueError):
        SpectralRateSeries([1, 2], [1, 2], [1, 0], laser, coll)
    with pytest.raises(ValueError):
        SpectralRateSeries([1, 2], [1], [1, 1], laser, coll)


def test_power_law_exact():
    p = np.linspace(5e-3, 40e-3, 8)
    quad = fit_power_law([(x, 3e4 * x * x, 0.1) for x in p])
    assert quad.value("exponent") == pytest.approx(2.0, abs=1e-9)
    assert quad.value("amplitude") == pytest.approx(3e4, rel=1e-9)
    lin = fit_power_law([(x, 7 * x, 1.0) for x in p])
    assert lin.value("exponent") == pytest.approx(1.0, abs=1e-9)


def test_power_law_poisson():
    fit = fit_power_law(synthetic.power_scan())
    assert abs(fit.value("exponent") - 2.0) <= 0.1


def test_power_law_scale_invariance():
    data = synthetic.power_scan(seed=11)
    a = fit_power_law(data)
    b = fit_power_law([(10 * p, r, e) for p, r, e in data])
    assert b.value("exponent") == pytest.approx(a.value("exponent"), rel=1e-10)
    assert b.value("amplitude") == pytest.approx(a.value("amplitude") / 10 ** a.value("exponent"), rel=1e-9)


def test_power_law_drops_nonpositive_and_errors():
    fit = fit_power_law([(1, 1, 0.1), (2, 4, 0.1), (3, 9, 0.1), (4, 0, 0.1)])
    assert fit.n_points == 3 and fit.extra["dropped"] == 1
    with pytest.raises(FitError):
        fit_power_law([(1, 1, 0.1), (2, 4, 0.1), (3, -1, 0.1)])
    with pytest.raises(FitError):
        fit_power_law([(0, 1, 0.1), (2, 4, 0.1), (3, 9, 0.1)])


def test_power_law_equal_weights_match_unweighted():
    data = synthetic.power_scan(seed=6)
    equal = [(p, r, 0.5 * r) for p, r, _ in data]
    fit = fit_power_law(equal)
    slope, intercept = np.polyfit(np.log([p for p, _, _ in data]), np.log([r for _, r, _ in data]), 1)
    assert fit.value("exponent") == pytest.approx(slope, rel=1e-10)
    assert math.log(fit.value("amplitude")) == pytest.approx(intercept, rel=1e-10)


def test_cross_section_exact_and_single():
    fit = fit_cross_section_scaling([(0.1, 0.4, 1), (0.5, 2.0, 1), (1.0, 4.0, 1)])
    assert fit.value("slope") == pytest.approx(4.0, rel=1e-14)
    assert fit.residual_norm == pytest.approx(0, abs=1e-12)
    assert fit_cross_section_scaling([(1, 1, 1)]).value("slope") == 1.0
    with pytest.raises(FitError):
        fit_cross_section_scaling([(0, 1, 1), (0, 2, 1)])


def test_cross_section_equal_weights_match_unweighted():
    x = np.array([0.1, 0.3, 0.6, 1.0])
    y = np.array([0.5, 1.1, 2.6, 3.9])
    fit = fit_cross_section_scaling(np.column_stack((x, y, np.full(4, 0.3))))
    assert fit.value("slope") == pytest.approx(np.dot(x, y) / np.dot(x, x), rel=1e-14)


def test_cross_section_synthetic():
    fit = fit_cross_section_scaling(synthetic.xsection_scan())
    assert abs(fit.value("slope") - 4.0) < 3 * fit.stderr("slope")


def test_normalize_to_max():
    assert normalize_to_max([1.0, 4.0, 2.0]).tolist() == [0.25, 1.0, 0.5]
    with pytest.raises(ValueError):
        normalize_to_max([0, 0])
