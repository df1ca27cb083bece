"""Pump-laser bookkeeping, the step pairing potential and the closed-form
pair-rate formulas.

The correlated pair rate in one spectral band is

    rate = delta_k * (n_L * V0 * T_L / hbar)**2 * R_L

where n_L is the mean number of pump photons per pulse, V0 the magnitude of
the attractive coupling in that band, T_L the pulse width, R_L the pulse
repetition rate and delta_k the fraction of the band collected by the
monochromator.  Everything here is a pure function of immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import EV_TO_J, HBAR_EV_S, HC_EV_CM, KB_EV_K, NM_TO_CM, shift_to_energy


class ConfigError(ValueError):
    """A configuration value violates its documented invariants."""


@dataclass(frozen=True)
class LaserConfig:
    """Pulsed pump laser.

    Attributes
    ----------
    wavelength : float
        Vacuum wavelength in nm.
    pulse_width : float
        Pulse duration T_L in s.
    rep_rate : float
        Pulse repetition rate R_L in Hz.
    power : float
        Average power P_L in W.  Zero is allowed (laser off).
    """

    wavelength: float = 633.0
    pulse_width: float = 200e-15
    rep_rate: float = 76e6
    power: float = 40e-3

    def __post_init__(self):
        for name in ("wavelength", "pulse_width", "rep_rate"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"laser {name} must be positive, got {getattr(self, name)!r}")
        if not self.power >= 0:
            raise ConfigError(f"laser power must be non-negative, got {self.power!r}")
        if self.pulse_width * self.rep_rate >= 1:
            raise ConfigError("pulse_width * rep_rate must be below 1")

    @property
    def photon_energy(self) -> float:
        """Pump photon energy in eV."""
        return HC_EV_CM / (self.wavelength * NM_TO_CM)

    def with_power(self, power: float) -> "LaserConfig":
        return LaserConfig(self.wavelength, self.pulse_width, self.rep_rate, power)


@dataclass(frozen=True)
class PotentialBand:
    """Shift interval [shift_lo, shift_hi) in cm^-1 with attractive coupling -v0 (eV)."""

    shift_lo: float
    shift_hi: float
    v0: float

    def __post_init__(self):
        if not (0 <= self.shift_lo < self.shift_hi):
            raise ConfigError(f"band edges must satisfy 0 <= lo < hi, got {self.shift_lo}, {self.shift_hi}")
        if not self.v0 >= 0:
            raise ConfigError(f"band v0 is a magnitude and must be >= 0, got {self.v0}")

    def contains(self, shift: float) -> bool:
        return self.shift_lo <= abs(shift) < self.shift_hi


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Stokes Raman spectrum sampled on a strictly increasing shift grid.

    Intensities are detected rates (counts/s) with the spectrometer centred
    on each shift, so integrating over a window gives counts cm^-1 / s.
    """

    shifts: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        shifts = np.asarray(self.shifts, dtype=float)
        intensities = np.asarray(self.intensities, dtype=float)
        if shifts.ndim != 1 or shifts.shape != intensities.shape:
            raise ConfigError("spectrum shifts and intensities must be 1-D and of equal length")
        if shifts.size < 2:
            raise ConfigError("spectrum needs at least two samples")
        if np.any(np.diff(shifts) <= 0):
            raise ConfigError("spectrum shifts must be strictly increasing")
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "intensities", intensities)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.shifts[0]), float(self.shifts[-1])

    def window(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        """Samples inside [lo, hi], with linearly interpolated end points."""
        d_lo, d_hi = self.domain
        if not (lo < hi):
            raise ValueError(f"empty window [{lo}, {hi}]")
        if lo < d_lo or hi > d_hi:
            raise ValueError(f"window [{lo}, {hi}] outside spectrum domain [{d_lo}, {d_hi}]")
        inner = (self.shifts > lo) & (self.shifts < hi)
        x = np.concatenate(([lo], self.shifts[inner], [hi]))
        y = np.interp(x, self.shifts, self.intensities)
        return x, y

    def integrate(self, lo: float, hi: float) -> float:
        x, y = self.window(lo, hi)
        return float(np.trapezoid(y, x))


@dataclass(frozen=True, eq=False)
class MaterialModel:
    """Raman-active medium: its spectrum, temperature and pairing bands.

    ``stokes_area_1st``/``stokes_area_2nd`` are the Stokes peak areas that,
    multiplied by the coupling constants, give the band magnitudes V0.
    """

    name: str
    spectrum: Spectrum
    temperature: float = 295.0
    bands: tuple[PotentialBand, ...] = ()
    stokes_area_1st: float = 0.0
    stokes_area_2nd: float = 0.0
    coupling_c1: float = 0.0
    coupling_c2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple(self.bands))
        if not self.temperature > 0:
            raise ConfigError("temperature must be positive")
        if self.stokes_area_1st < 0 or self.stokes_area_2nd < 0:
            raise ConfigError("Stokes areas must be non-negative")
        for a, b in zip(self.bands, self.bands[1:]):
            if b.shift_lo < a.shift_hi:
                raise ConfigError("potential bands must be ordered and non-overlapping")

    def band_for(self, shift: float) -> PotentialBand | None:
        for band in self.bands:
            if band.contains(shift):
                return band
        return None


@dataclass(frozen=True)
class CollectionConfig:
    """Detection side: monochromator, APD efficiencies, dark counts, integration time."""

    mono_resolution: float = 26.0
    stokes_center: float = 900.0
    detection_efficiency_s: float = 1.0
    detection_efficiency_as: float = 1.0
    accumulation_time: float = 600.0
    dark_rate_s: float = 0.0
    dark_rate_as: float = 0.0

    def __post_init__(self):
        if not self.mono_resolution > 0:
            raise ConfigError("mono_resolution must be positive")
        for name in ("detection_efficiency_s", "detection_efficiency_as"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if not self.accumulation_time > 0:
            raise ConfigError("accumulation_time must be positive")
        if self.dark_rate_s < 0 or self.dark_rate_as < 0:
            raise ConfigError("dark count rates must be non-negative")

    @property
    def stokes_window(self) -> tuple[float, float]:
        half = 0.5 * self.mono_resolution
        return self.stokes_center - half, self.stokes_center + half


def photons_per_pulse(laser: LaserConfig) -> float:
    """Mean pump photon number per pulse, P_L / (E_photon R_L)."""
    return laser.power / (laser.photon_energy * EV_TO_J * laser.rep_rate)


def step_potential(shift: float, material: MaterialModel) -> float:
    """Signed pairing potential (eV) at a Raman shift: -v0 inside a band, else 0."""
    band = material.band_for(shift)
    return -band.v0 if band is not None else 0.0


def v0_from_raman_area(area: float, coupling_c: float) -> float:
    if area < 0 or coupling_c < 0:
        raise ValueError("area and coupling constant must be non-negative")
    return area * coupling_c


def delta_k(collection: CollectionConfig, band: PotentialBand) -> float:
    """Collected fraction of a band: resolution over the full range of nonzero potential.

    The range runs from zero shift to the band's upper cutoff, so a second
    band [1332, 2500) has a total range of 2500 cm^-1.
    """
    if collection.mono_resolution <= 0:
        raise ValueError("monochromator resolution must be positive")
    return min(1.0, collection.mono_resolution / band.shift_hi)


def pair_rate(laser: LaserConfig, v0: float, delta_k: float) -> float:
    """Detected correlated pair rate (counts/s) for one band."""
    if v0 < 0:
        raise ValueError("v0 must be non-negative")
    if not 0 < delta_k <= 1:
        raise ValueError("delta_k must lie in (0, 1]")
    amplitude = photons_per_pulse(laser) * v0
    return delta_k * (amplitude * laser.pulse_width / HBAR_EV_S) ** 2 * laser.rep_rate


def interaction_amplitude_from_rate(rate: float, delta_k: float, laser: LaserConfig) -> float:
    """Invert the pair-rate formula for the interaction amplitude n_L * V0 (eV)."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    denom = delta_k * laser.rep_rate
    if denom == 0:
        raise ValueError("delta_k * rep_rate is zero")
    return HBAR_EV_S / laser.pulse_width * math.sqrt(rate / denom)


def transition_probability(amplitude: float, dt: float) -> float:
    """Per-pulse transition probability |amplitude|^2 dt^2 / hbar^2."""
    return (amplitude * dt / HBAR_EV_S) ** 2


def project_enhancement(delta: float, enhancement_factor: float) -> float:
    """Scale an interaction amplitude by a pair-rate enhancement (rate goes as amplitude squared)."""
    if enhancement_factor < 0:
        raise ValueError("enhancement factor must be non-negative")
    return delta * math.sqrt(enhancement_factor)


def bose_occupation(phonon_energy: float, temperature: float) -> float:
    if temperature <= 0 or phonon_energy <= 0:
        raise ValueError("phonon energy and temperature must be positive")
    x = phonon_energy / (KB_EV_K * temperature)
    # expm1 keeps precision for small x; large x underflows cleanly to 0
    return 1.0 / math.expm1(x) if x < 700 else 0.0


def thermal_antistokes_ratio(shift: float, temperature: float) -> float:
    """I_aS / I_S for spontaneous scattering off phonons of energy |shift|: n / (n + 1)."""
    n = bose_occupation(shift_to_energy(abs(shift)), temperature)
    return n / (n + 1.0)


# Defaults for the built-in diamond medium.  The Stokes areas are chosen so
# that the first band gives ~20 pairs/s and the second ~5 pairs/s at 40 mW,
# 26 cm^-1 resolution and unit efficiencies.
DIAMOND_PHONON_CM1 = 1332.0
DIAMOND_SECOND_ORDER_CM1 = 2500.0
DIAMOND_C1 = 5.75e-22
DIAMOND_C2 = 3.35e-21
DIAMOND_AREA_1ST = 1.2530e7
DIAMOND_AREA_2ND = 1.4733e6


def diamond_spectrum(step: float = 2.0, stop: float = 3400.0) -> Spectrum:
    """Synthetic diamond Stokes spectrum as seen through a 26 cm^-1 monochromator.

    A first-order line at 1332 cm^-1 peaking at 35 kcounts/s, a broad
    second-order band near 2470 cm^-1 and a weak flat background.
    """
    x = np.arange(0.0, stop + step / 2, step)
    hwhm = 13.0
    first = 35e3 / (1 + ((x - DIAMOND_PHONON_CM1) / hwhm) ** 2)
    second = 600.0 * np.exp(-0.5 * ((x - 2470.0) / 60.0) ** 2)
    background = 40.0
    return Spectrum(x, first + second + background)


def make_material(name, spectrum, *, temperature=295.0, cutoffs=(), areas=(), couplings=()) -> MaterialModel:
    """Build a material whose band magnitudes follow V0 = C * A_S.

    ``cutoffs`` are consecutive upper band edges starting from zero shift.
    """
    cutoffs, areas, couplings = tuple(cutoffs), tuple(areas), tuple(couplings)
    if not (len(cutoffs) == len(areas) == len(couplings)) or len(cutoffs) > 2:
        raise ConfigError("need one area and coupling per cutoff, at most two bands")
    bands = []
    lo = 0.0
    for hi, area, c in zip(cutoffs, areas, couplings):
        bands.append(PotentialBand(lo, hi, v0_from_raman_area(area, c)))
        lo = hi
    padded_a = areas + (0.0,) * (2 - len(areas))
    padded_c = couplings + (0.0,) * (2 - len(couplings))
    return MaterialModel(
        name=name,
        spectrum=spectrum,
        temperature=temperature,
        bands=tuple(bands),
        stokes_area_1st=padded_a[0],
        stokes_area_2nd=padded_a[1],
        coupling_c1=padded_c[0],
        coupling_c2=padded_c[1],
    )


def diamond() -> MaterialModel:
    return make_material(
        "diamond",
        diamond_spectrum(),
        cutoffs=(DIAMOND_PHONON_CM1, DIAMOND_SECOND_ORDER_CM1),
        areas=(DIAMOND_AREA_1ST, DIAMOND_AREA_2ND),
        couplings=(DIAMOND_C1, DIAMOND_C2),
    )


def decane() -> MaterialModel:
    """Liquid with a single C-H stretch band ending at 2900 cm^-1."""
    x = np.arange(0.0, 3400.0 + 1.0, 2.0)
    y = 20.0 + 8e3 / (1 + ((x - 2900.0) / 15.0) ** 2)
    area = DIAMOND_AREA_1ST / 4
    return make_material("decane", Spectrum(x, y), cutoffs=(2900.0,), areas=(area,), couplings=(DIAMOND_C1,))


MATERIALS = {"diamond": diamond, "decane": decane}
