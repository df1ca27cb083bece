"""Iris-aperture model: Gaussian angular profiles and their encircled power.

A profile is a mixture of circular Gaussians; the fraction of its power that
passes an iris of radius r is sum_i w_i (1 - exp(-r^2 / (2 sigma_i^2))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .fitting import FitError, FitResult

CHANNELS = ("laser", "S", "aS", "SaS_corr", "SaS_accidental")

N_STARTS = 5
XTOL = 1e-10
MAX_NFEV = 10_000


@dataclass(frozen=True)
class SpatialProfile:
    """Gaussian mixture given as ((weight, sigma_mm), ...)."""

    components: tuple[tuple[float, float], ...]

    def __post_init__(self):
        comps = tuple((float(w), float(s)) for w, s in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("profile needs at least one component")
        if any(w < 0 for w, _ in comps) or any(not s > 0 for _, s in comps):
            raise ValueError("weights must be >= 0 and sigmas > 0")
        if not math.isclose(sum(w for w, _ in comps), 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError("weights must sum to 1")

    @classmethod
    def single(cls, sigma: float) -> "SpatialProfile":
        return cls(((1.0, sigma),))

    @property
    def sigmas(self) -> tuple[float, ...]:
        return tuple(s for _, s in self.components)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.components)


@dataclass(frozen=True, eq=False)
class ApertureCurve:
    radii: np.ndarray
    intensities: np.ndarray
    channel: str = "laser"

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        y = np.asarray(self.intensities, dtype=float)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "intensities", y)
        if r.shape != y.shape or r.ndim != 1:
            raise ValueError("radii and intensities must be 1-D and of equal length")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if np.any(y < 0) or np.any(y > 1):
            raise ValueError("normalised intensities must lie in [0, 1]")
        if np.any(np.diff(y) < 0):
            raise ValueError("transmitted intensity must be nondecreasing in radius")


def transmitted_fraction(profile: SpatialProfile, radius):
    r = np.asarray(radius, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    out = sum(w * -np.expm1(-r * r / (2 * s * s)) for w, s in profile.components)
    return float(out) if out.ndim == 0 else out


def aperture_curve(profile: SpatialProfile, radii, channel: str = "laser") -> ApertureCurve:
    radii = np.asarray(radii, dtype=float)
    return ApertureCurve(radii, transmitted_fraction(profile, radii), channel)


def _starts(r: np.ndarray, n_components: int, fixed_sigma: float | None) -> list[np.ndarray]:
    """Five deterministic initial points in (weight, log sigma) coordinates."""
    scale = float(r[-1])
    factors = (0.1, 0.25, 0.5, 1.0, 2.5)
    if n_components == 1:
        return [np.array([math.log(f * scale)]) for f in factors]
    pairs = ((0.05, 0.5), (0.1, 1.0), (0.2, 2.0), (0.3, 0.6), (0.5, 3.0))
    weights = (0.5, 0.3, 0.5, 0.7, 0.4)
    starts = []
    for w, (a, b) in zip(weights, pairs):
        if fixed_sigma is None:
            starts.append(np.array([w, math.log(a * scale), math.log(b * scale)]))
        else:
            starts.append(np.array([w, math.log(max(b * scale, 1.5 * fixed_sigma))]))
    return starts


def _unpack(x: np.ndarray, n_components: int, fixed_sigma: float | None) -> SpatialProfile:
    if n_components == 1:
        return SpatialProfile.single(math.exp(x[0]))
    w = float(np.clip(x[0], 0.0, 1.0))
    if fixed_sigma is None:
        s1, s2 = math.exp(x[1]), math.exp(x[2])
    else:
        s1, s2 = fixed_sigma, math.exp(x[1])
    return SpatialProfile(((w, s1), (1.0 - w, s2)))


def fit_profile(curve: ApertureCurve, n_components: int = 1, fixed_sigma: float | None = None
                ) -> tuple[SpatialProfile, FitResult]:
    """Least-squares Gaussian-mixture fit of an aperture curve.

    ``fixed_sigma`` pins the width of the first (narrow) component, e.g. to
    the laser width when fitting correlated pairs.  Returns the best profile
    and a FitResult; ``converged`` is False when the curve carries no radial
    information or the optimiser fails, and the profile is then the best
    parameters seen, not a usable estimate.
    """
    if n_components not in (1, 2):
        raise ValueError("n_components must be 1 or 2")
    r, y = curve.radii, curve.intensities
    if n_components == 1 and fixed_sigma is not None:
        profile = SpatialProfile.single(fixed_sigma)
        resid = transmitted_fraction(profile, r) - y
        norm = float(np.linalg.norm(resid))
        return profile, FitResult({"sigma": (fixed_sigma, 0.0)}, norm, int(r.size), chi2=norm ** 2,
                                  message="sigma fixed")

    n_free = 1 if n_components == 1 else (3 if fixed_sigma is None else 2)
    if r.size < 3 * n_free:
        raise FitError(f"need at least {3 * n_free} points for {n_free} free parameters")

    def residuals(x):
        return transmitted_fraction(_unpack(x, n_components, fixed_sigma), r) - y

    lo_s, hi_s = math.log(1e-4 * r[-1]), math.log(1e4 * r[-1])
    if n_components == 1:
        bounds = ([lo_s], [hi_s])
    else:
        bounds = ([0.0] + [lo_s] * (n_free - 1), [1.0] + [hi_s] * (n_free - 1))

    best = None
    for x0 in _starts(r, n_components, fixed_sigma):
        x0 = np.clip(x0, bounds[0], bounds[1])
        sol = least_squares(residuals, x0, bounds=bounds, method="trf", xtol=XTOL, ftol=1e-15,
                            gtol=1e-15, max_nfev=MAX_NFEV, x_scale="jac")
        if best is None or sol.cost < best.cost:
            best = sol

    profile = _unpack(best.x, n_components, fixed_sigma)
    norm = float(np.linalg.norm(best.fun))
    n = int(r.size)
    converged = bool(best.success)
    message = best.message

    if np.ptp(y) < 1e-12:
        converged, message = False, "aperture curve is constant; no radial information"
    elif np.any(best.x[0 if n_components == 1 else 1:] <= lo_s + 1e-6):
        converged, message = False, "width ran to its lower bound"

    errors = _standard_errors(best, n)
    # report components narrow first
    if n_components == 2 and fixed_sigma is None and profile.sigmas[0] > profile.sigmas[1]:
        profile = SpatialProfile(tuple(reversed(profile.components)))
        errors = errors[[0, 2, 1]]
    params = _named_params(profile, errors, n_components, fixed_sigma)
    result = FitResult(params, norm, n, converged=converged, message=message, chi2=norm ** 2,
                       extra={"nfev": int(best.nfev)})
    return profile, result


def _standard_errors(sol, n: int) -> np.ndarray:
    J = sol.jac
    p = J.shape[1]
    dof = max(n - p, 1)
    s2 = 2 * sol.cost / dof
    try:
        cov = np.linalg.pinv(J.T @ J) * s2
    except np.linalg.LinAlgError:
        return np.full(p, math.nan)
    return np.sqrt(np.clip(np.diag(cov), 0, None))


def _named_params(profile, errors, n_components, fixed_sigma):
    if n_components == 1:
        s = profile.sigmas[0]
        return {"sigma": (s, s * errors[0])}
    (w1, s1), (w2, s2) = profile.components
    params = {"weight_1": (w1, errors[0]), "weight_2": (w2, errors[0])}
    if fixed_sigma is None:
        params["sigma_1"] = (s1, s1 * errors[1])
        params["sigma_2"] = (s2, s2 * errors[2])
    else:
        params["sigma_1"] = (s1, 0.0)
        params["sigma_2"] = (s2, s2 * errors[1])
    return params


def ratio_curve(s_curve: ApertureCurve, as_curve: ApertureCurve) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise I_S / I_aS.

    Returns ``(points, omitted)`` where ``points`` has rows (radius, ratio)
    and ``omitted`` lists radii dropped because the aS intensity is zero.
    """
    if s_curve.radii.shape != as_curve.radii.shape or not np.allclose(s_curve.radii, as_curve.radii):
        raise ValueError("S and aS curves must share the same radius grid")
    ok = as_curve.intensities > 0
    ratio = s_curve.intensities[ok] / as_curve.intensities[ok]
    return np.column_stack((s_curve.radii[ok], ratio)), s_curve.radii[~ok]
