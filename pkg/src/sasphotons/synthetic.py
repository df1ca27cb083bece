"""Synthetic datasets shaped like typical laboratory measurements.

Used by the test-suite and to regenerate the CSV files bundled in
``sasphotons/data`` (``python -m sasphotons.synthetic``).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import physics
from .fitting import SpectralRateSeries
from .spatial import SpatialProfile, transmitted_fraction

DATA_DIR = Path(__file__).parent / "data"

# |shift| grid of the rate-vs-shift scan, cm^-1
SCAN_SHIFTS = np.arange(200.0, 3001.0, 100.0)

# widths (mm) of the iris datasets
LASER_SIGMA = 1.0
RAMAN_SIGMA = 4.0
IRIS_RADII = np.round(np.linspace(0.25, 8.0, 32), 4)


def model_rates(shifts, laser, collection, material) -> np.ndarray:
    """Correlated rate at each shift from the material's bands (0 outside them)."""
    out = np.zeros(len(shifts))
    for i, s in enumerate(shifts):
        band = material.band_for(s)
        if band is not None and band.v0 > 0:
            out[i] = physics.pair_rate(laser, band.v0, physics.delta_k(collection, band))
    return out


def spectral_series(material=None, laser=None, collection=None, shifts=SCAN_SHIFTS,
                    rel_noise=0.05, noise_floor=0.1, seed=1, noisy=True, mirrored=True) -> SpectralRateSeries:
    """Rate-vs-shift scan with Gaussian noise of ``rel_noise`` x rate (floored).

    With ``mirrored`` every datum also appears at the negative shift, as the
    scan is plotted on both the Stokes and anti-Stokes sides.
    """
    material = material or physics.diamond()
    laser = laser or physics.LaserConfig()
    collection = collection or physics.CollectionConfig()
    truth = model_rates(shifts, laser, collection, material)
    sigma = np.maximum(rel_noise * truth, noise_floor)
    rates = truth.copy()
    if noisy:
        rng = np.random.default_rng(seed)
        rates = truth + sigma * rng.standard_normal(truth.size)
    shifts = np.asarray(shifts, dtype=float)
    if mirrored:
        shifts = np.concatenate((shifts, -shifts))
        rates = np.concatenate((rates, rates))
        sigma = np.concatenate((sigma, sigma))
    return SpectralRateSeries(shifts, rates, sigma, laser, collection)


def power_scan(powers_mw=(5, 10, 15, 20, 25, 30, 35, 40), shift=900.0, material=None, laser=None,
               collection=None, seed=2, noisy=True) -> list[tuple[float, float, float]]:
    """(power W, rate, uncertainty) with Poisson counting over the accumulation time."""
    material = material or physics.diamond()
    laser = laser or physics.LaserConfig()
    collection = collection or physics.CollectionConfig()
    band = material.band_for(shift)
    dk = physics.delta_k(collection, band)
    T = collection.accumulation_time
    rng = np.random.default_rng(seed)
    out = []
    for p in powers_mw:
        rate = physics.pair_rate(laser.with_power(p * 1e-3), band.v0, dk)
        n = rng.poisson(rate * T) if noisy else rate * T
        out.append((p * 1e-3, n / T, max(np.sqrt(n), 1.0) / T))
    return out


def xsection_scan(relative_areas=(0.35, 0.5, 0.62, 0.8, 1.0), rate_at_unity=4.0, accumulation_time=600.0,
                  seed=3, noisy=True) -> list[tuple[float, float, float]]:
    """(A_Raman^2 normalised to the largest, rate, uncertainty) for a set of liquids."""
    rng = np.random.default_rng(seed)
    out = []
    for a in relative_areas:
        rate = rate_at_unity * a * a
        n = rng.poisson(rate * accumulation_time) if noisy else rate * accumulation_time
        out.append((a * a, n / accumulation_time, max(np.sqrt(n), 1.0) / accumulation_time))
    return out


def iris_profiles(correlated_fraction=0.2) -> dict[str, SpatialProfile]:
    wide = SpatialProfile.single(RAMAN_SIGMA)
    return {
        "laser": SpatialProfile.single(LASER_SIGMA),
        "S": wide,
        "aS": SpatialProfile(((correlated_fraction, LASER_SIGMA), (1 - correlated_fraction, RAMAN_SIGMA))),
        "SaS_corr": SpatialProfile.single(LASER_SIGMA),
        "SaS_accidental": wide,
    }


def iris_curve(channel: str, radii=IRIS_RADII) -> np.ndarray:
    return transmitted_fraction(iris_profiles()[channel], radii)


def write_bundled(directory=DATA_DIR) -> None:
    from . import io

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    io.write_spectrum(physics.diamond_spectrum(), directory / "diamond_spectrum.csv")
    s = spectral_series()
    io.write_table(directory / "spectral_scan.csv", io.SPECTRAL_COLUMNS,
                   zip(s.shifts, s.rates, s.uncertainties))
    io.write_table(directory / "iris_aS.csv", io.APERTURE_COLUMNS, zip(IRIS_RADII, iris_curve("aS")))
    io.write_table(directory / "iris_laser.csv", io.APERTURE_COLUMNS, zip(IRIS_RADII, iris_curve("laser")))
    io.write_table(directory / "power_scan.csv", io.POWER_COLUMNS, power_scan())
    io.write_table(directory / "xsection_scan.csv", io.XSECTION_COLUMNS, xsection_scan())


if __name__ == "__main__":
    write_bundled()
