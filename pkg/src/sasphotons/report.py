"""Headline numbers derived from a measured correlated pair rate."""

from __future__ import annotations

from dataclasses import dataclass

from . import physics

TBG_ENHANCEMENT = 390.0


@dataclass(frozen=True)
class Quantity:
    name: str
    value: float
    unit: str


def headline_numbers(rate: float, laser: physics.LaserConfig, collection: physics.CollectionConfig,
                     material: physics.MaterialModel, shift: float | None = None,
                     enhancement: float | None = None) -> list[Quantity]:
    """Interaction amplitude, coupling and pair yield for a pair rate at ``shift``.

    ``shift`` defaults to the collection's Stokes centre; its band fixes the
    spectral collection fraction.  Without a band the full-range fraction
    cannot be formed and a ValueError is raised.
    """
    shift = collection.stokes_center if shift is None else shift
    band = material.band_for(shift)
    if band is None:
        raise ValueError(f"shift {shift} cm^-1 lies outside every pairing band of {material.name}")
    dk = physics.delta_k(collection, band)
    n_photons = physics.photons_per_pulse(laser)
    amplitude = physics.interaction_amplitude_from_rate(rate, dk, laser)
    v0 = amplitude / n_photons if n_photons > 0 else 0.0
    incident = n_photons * laser.rep_rate
    out = [
        Quantity("corr_rate", rate, "counts/s"),
        Quantity("shift", shift, "cm^-1"),
        Quantity("delta_k", dk, "1"),
        Quantity("photons_per_pulse", n_photons, "1"),
        Quantity("interaction_amplitude", amplitude, "eV"),
        Quantity("v0", v0, "eV"),
        Quantity("transition_probability_per_pulse", physics.transition_probability(amplitude, laser.pulse_width), "1"),
        Quantity("pairs_per_incident_photon", rate / incident if incident > 0 else 0.0, "1"),
    ]
    if enhancement is not None:
        out.append(Quantity("projected_interaction_amplitude",
                            physics.project_enhancement(amplitude, enhancement), "eV"))
        out.append(Quantity("enhancement_factor", enhancement, "1"))
    return out


def format_text(quantities: list[Quantity]) -> str:
    width = max(len(q.name) for q in quantities)
    return "\n".join(f"{q.name:<{width}}  {q.value:.6g} {q.unit}" for q in quantities) + "\n"
