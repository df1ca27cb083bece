"""Raman peak areas and the rate fits: step-potential constants, power-law
exponent and cross-section proportionality.

All three rate fits are weighted least squares with weights 1/sigma^2 and
have closed-form solutions, so noiseless data is recovered to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import physics
from .constants import HBAR_EV_S


class FitError(ValueError):
    """Input data cannot support the requested fit."""


@dataclass
class FitResult:
    parameters: dict[str, tuple[float, float]]
    residual_norm: float
    n_points: int
    converged: bool = True
    unidentifiable: tuple[str, ...] = ()
    message: str = ""
    chi2: float = math.nan
    extra: dict = field(default_factory=dict)

    def value(self, name: str) -> float:
        return self.parameters[name][0]

    def stderr(self, name: str) -> float:
        return self.parameters[name][1]

    def as_dict(self) -> dict:
        return {
            "parameters": {k: {"value": v, "stderr": e} for k, (v, e) in self.parameters.items()},
            "residual_norm": self.residual_norm,
            "chi2": self.chi2,
            "n_points": self.n_points,
            "converged": self.converged,
            "unidentifiable": list(self.unidentifiable),
            "message": self.message,
        }


def raman_peak_area(spectrum: physics.Spectrum, window: tuple[float, float], baseline: str = "linear") -> float:
    """Trapezoidal peak area over ``window``.

    With ``baseline="linear"`` the straight line joining the intensities at
    the window edges is subtracted first; negative residuals are clipped to 0.
    """
    x, y = spectrum.window(*window)
    if baseline == "linear":
        y = y - np.interp(x, [x[0], x[-1]], [y[0], y[-1]])
    elif baseline != "none":
        raise ValueError(f"unknown baseline {baseline!r}")
    return float(np.trapezoid(np.clip(y, 0.0, None), x))


@dataclass(frozen=True)
class SpectralRateSeries:
    """Correlated rates versus Raman shift (both signs allowed)."""

    shifts: np.ndarray
    rates: np.ndarray
    uncertainties: np.ndarray
    laser: physics.LaserConfig
    collection: physics.CollectionConfig

    def __post_init__(self):
        for name in ("shifts", "rates", "uncertainties"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.shifts.shape == self.rates.shape == self.uncertainties.shape):
            raise ValueError("shifts, rates and uncertainties must have equal length")
        if np.any(self.uncertainties <= 0):
            raise ValueError("uncertainties must be positive")


def step_rate_prefactor(laser: physics.LaserConfig, collection: physics.CollectionConfig,
                        band: physics.PotentialBand, area: float) -> float:
    """K such that the band's pair rate is K * C**2 when V0 = C * area."""
    n = physics.photons_per_pulse(laser)
    dk = physics.delta_k(collection, band)
    return dk * (n * area * laser.pulse_width / HBAR_EV_S) ** 2 * laser.rep_rate


def _collapse_mirrored(series: SpectralRateSeries):
    table = np.column_stack((np.abs(series.shifts), series.rates, series.uncertainties))
    neg = series.shifts < 0
    pos_rows = {tuple(r) for r in table[~neg]}
    keep = ~neg | np.array([tuple(r) not in pos_rows for r in table], dtype=bool)
    return series.shifts[keep], series.rates[keep], series.uncertainties[keep]


def fit_step_constants(series: SpectralRateSeries, material: physics.MaterialModel) -> FitResult:
    """Fit the coupling constants C1, C2 of the two pairing bands.

    Within a band the model rate is K * C**2 (constant in shift).  The
    weighted least-squares estimate of u = C**2 is sum(w y K) / sum(w K^2),
    negative estimates are clipped to zero and C = sqrt(u).  Points outside
    every band carry no information about either constant.  A datum plotted
    at both +shift and -shift (same rate and uncertainty) is counted once.
    """
    shifts, rates, sigmas = _collapse_mirrored(series)
    areas = (material.stokes_area_1st, material.stokes_area_2nd)
    names = ("C1", "C2")
    params: dict[str, tuple[float, float]] = {}
    missing = []
    model = np.zeros_like(rates)
    w = 1.0 / sigmas ** 2
    in_any = np.zeros(shifts.shape, dtype=bool)

    for i, name in enumerate(names):
        band = material.bands[i] if i < len(material.bands) else None
        if band is None:
            missing.append(name)
            params[name] = (math.nan, math.nan)
            continue
        mask = np.array([band.contains(x) for x in shifts], dtype=bool)
        in_any |= mask
        K = step_rate_prefactor(series.laser, series.collection, band, areas[i])
        if not mask.any() or K == 0:
            missing.append(name)
            params[name] = (math.nan, math.nan)
            continue
        sw = float(np.sum(w[mask]))
        u = K * float(np.sum(w[mask] * rates[mask])) / (K * K * sw)
        se_u = 1.0 / (K * math.sqrt(sw))
        u = max(u, 0.0)
        c = math.sqrt(u)
        # delta method away from zero; at zero the natural scale is sqrt(se_u)
        se_c = se_u / (2 * c) if c > 0 else math.sqrt(se_u)
        params[name] = (c, se_c)
        model[mask] = K * u

    resid = (rates - model) / sigmas
    resid = resid[in_any]
    chi2 = float(np.sum(resid ** 2))
    return FitResult(
        parameters=params,
        residual_norm=math.sqrt(chi2),
        chi2=chi2,
        n_points=int(in_any.sum()),
        converged=True,
        unidentifiable=tuple(missing),
        message="" if not missing else "no data in band(s): " + ", ".join(missing),
    )


def _weighted_linear(X: np.ndarray, y: np.ndarray, sigma: np.ndarray):
    w = 1.0 / sigma
    A = X * w[:, None]
    b = y * w
    beta, *_ = np.linalg.lstsq(A, b, rcond=None)
    cov = np.linalg.inv(A.T @ A)
    resid = b - A @ beta
    return beta, cov, resid


def fit_power_law(points: Sequence[tuple[float, float, float]]) -> FitResult:
    """Fit rate = amplitude * power**exponent by weighted regression in log space.

    Log-space uncertainties are sigma/rate.  Points with nonpositive rate are
    dropped.
    """
    data = np.asarray(points, dtype=float).reshape(-1, 3)
    power, rate, sigma = data.T
    if np.any(power <= 0):
        raise FitError("powers must be positive")
    keep = rate > 0
    if keep.sum() < 3:
        raise FitError("power-law fit needs at least 3 points with positive rate")
    power, rate, sigma = power[keep], rate[keep], sigma[keep]
    if np.any(sigma <= 0):
        raise FitError("uncertainties must be positive")
    X = np.column_stack((np.ones_like(power), np.log(power)))
    beta, cov, resid = _weighted_linear(X, np.log(rate), sigma / rate)
    log_a, b = beta
    a = math.exp(log_a)
    se_b = math.sqrt(cov[1, 1])
    chi2 = float(resid @ resid)
    return FitResult(
        parameters={"amplitude": (a, a * math.sqrt(cov[0, 0])), "exponent": (float(b), se_b)},
        residual_norm=math.sqrt(chi2),
        chi2=chi2,
        n_points=int(power.size),
        extra={"dropped": int((~keep).sum())},
    )


def fit_cross_section_scaling(points: Sequence[tuple[float, float, float]]) -> FitResult:
    """Weighted zero-intercept line rate = slope * A_Raman^2."""
    data = np.asarray(points, dtype=float).reshape(-1, 3)
    if data.shape[0] < 1:
        raise FitError("need at least one point")
    x, y, sigma = data.T
    if np.all(x == 0):
        raise FitError("all abscissae are zero")
    if np.any(sigma <= 0):
        raise FitError("uncertainties must be positive")
    w = 1.0 / sigma ** 2
    sxx = float(np.sum(w * x * x))
    slope = float(np.sum(w * x * y)) / sxx
    resid = (y - slope * x) / sigma
    chi2 = float(resid @ resid)
    dof = x.size - 1
    return FitResult(
        parameters={"slope": (slope, 1.0 / math.sqrt(sxx))},
        residual_norm=math.sqrt(chi2),
        chi2=chi2,
        n_points=int(x.size),
        extra={"reduced_chi2": chi2 / dof if dof > 0 else math.nan},
    )


def normalize_to_max(values) -> np.ndarray:
    """Scale values so the largest magnitude is 1 (relative cross-sections)."""
    v = np.asarray(values, dtype=float)
    peak = np.max(np.abs(v))
    if peak == 0:
        raise ValueError("cannot normalise all-zero values")
    return v / peak
