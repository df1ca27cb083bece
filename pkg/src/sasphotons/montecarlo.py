"""Pulse-by-pulse Monte Carlo generation of Stokes / anti-Stokes detections.

Each pulse independently produces at most one detection per channel.  A
correlated pair (probability ``p_pair``) lights both channels; otherwise
the Stokes and anti-Stokes detectors fire independently with ``p_s`` and
``p_as``.

Random stream layout
--------------------
Pulses are split into blocks of ``BLOCK_PULSES`` (2**20).  Block ``b`` of a
run with seed ``s`` draws from Philox4x64-10 with key ``s`` (as the 128-bit
key ``[s, 0]``) and initial counter words ``[0, 0, b, 0]``.  Exactly one raw
64-bit word ``r`` is consumed per pulse, in pulse order.  The outcome of a
pulse is decided by comparing ``r`` against fixed thresholds on [0, 2**64):

    [0, t1)   pair            (both channels)
    [t1, t2)  two singles     (both channels)
    [t2, t3)  Stokes only
    [t3, t4)  anti-Stokes only
    [t4, ..)  nothing

with interval widths p_pair, q p_s p_as, q p_s (1 - p_as), q (1 - p_s) p_as
and q = 1 - p_pair.  The layout does not depend on the number of worker
threads, so output is a pure function of (probabilities, n_pulses, seed).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import physics

logger = logging.getLogger(__name__)

BLOCK_PULSES = 1 << 20
_TWO64 = 1 << 64

S, AS = 0, 1
CHANNEL_NAMES = ("S", "aS")


class ProbabilityError(ValueError):
    """Per-pulse probabilities are unphysical (outside [0, 1])."""


@dataclass(frozen=True)
class ChannelProbabilities:
    p_s: float = 0.0
    p_as: float = 0.0
    p_pair: float = 0.0

    def __post_init__(self):
        for name in ("p_s", "p_as", "p_pair"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ProbabilityError(f"{name} = {v!r} outside [0, 1]")
        if self.p_s + self.p_pair > 1 or self.p_as + self.p_pair > 1:
            raise ProbabilityError("per-channel detection probability exceeds 1")

    def expected_counts(self, n_pulses: int) -> dict[str, float]:
        """Expected S, aS and same-pulse coincidence counts over ``n_pulses``."""
        q = 1.0 - self.p_pair
        s = self.p_pair + q * self.p_s
        a = self.p_pair + q * self.p_as
        both = self.p_pair + q * self.p_s * self.p_as
        return {"S": s * n_pulses, "aS": a * n_pulses, "coincidences": both * n_pulses}


@dataclass(frozen=True, eq=False)
class EventStream:
    """Detection records sorted by (pulse index, channel); channel 0 = S, 1 = aS."""

    pulses: np.ndarray
    channels: np.ndarray
    n_pulses: int
    rep_rate: float
    seed: int | None = None

    def __post_init__(self):
        pulses = np.ascontiguousarray(self.pulses, dtype=np.int64)
        channels = np.ascontiguousarray(self.channels, dtype=np.uint8)
        object.__setattr__(self, "pulses", pulses)
        object.__setattr__(self, "channels", channels)
        if pulses.shape != channels.shape or pulses.ndim != 1:
            raise ValueError("pulses and channels must be 1-D arrays of equal length")
        if self.n_pulses < 0 or not self.rep_rate > 0:
            raise ValueError("n_pulses must be >= 0 and rep_rate > 0")
        if pulses.size:
            if pulses[0] < 0 or pulses[-1] >= self.n_pulses:
                raise ValueError("pulse index outside [0, n_pulses)")
            if np.any(channels > 1):
                raise ValueError("channel codes must be 0 (S) or 1 (aS)")
            if np.any(np.diff(_keys(pulses, channels)) <= 0):
                raise ValueError("records must be strictly sorted by (pulse, channel)")

    def __len__(self):
        return int(self.pulses.size)

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.n_pulses == other.n_pulses
            and self.rep_rate == other.rep_rate
            and np.array_equal(self.pulses, other.pulses)
            and np.array_equal(self.channels, other.channels)
        )

    @property
    def records(self) -> list[tuple[int, str]]:
        return [(int(p), CHANNEL_NAMES[c]) for p, c in zip(self.pulses, self.channels)]

    def channel_pulses(self, channel: int) -> np.ndarray:
        return self.pulses[self.channels == channel]

    @property
    def accumulation_time(self) -> float:
        return self.n_pulses / self.rep_rate

    @classmethod
    def empty(cls, n_pulses: int, rep_rate: float, seed: int | None = None) -> "EventStream":
        return cls(np.empty(0, np.int64), np.empty(0, np.uint8), n_pulses, rep_rate, seed)

    @classmethod
    def from_records(cls, records, n_pulses, rep_rate, seed=None) -> "EventStream":
        """Build from (pulse, channel) pairs in any order; channel may be 0/1 or 'S'/'aS'."""
        pulses = np.array([int(p) for p, _ in records], dtype=np.int64)
        channels = np.array([_channel_code(c) for _, c in records], dtype=np.uint8)
        order = np.argsort(_keys(pulses, channels), kind="stable")
        return cls(pulses[order], channels[order], n_pulses, rep_rate, seed)


def _channel_code(c) -> int:
    if c in (0, 1):
        return int(c)
    try:
        return CHANNEL_NAMES.index(c)
    except ValueError:
        raise ValueError(f"unknown channel {c!r}") from None


def _keys(pulses, channels):
    return pulses.astype(np.int64) * 2 + channels


def _thresholds(p: ChannelProbabilities) -> tuple[int, int, int, int]:
    q = 1.0 - p.p_pair
    widths = (p.p_pair, q * p.p_s * p.p_as, q * p.p_s * (1 - p.p_as), q * (1 - p.p_s) * p.p_as)
    edges, acc = [], 0.0
    for w in widths:
        acc += w
        edges.append(min(_TWO64, int(acc * _TWO64)))
    return tuple(edges)


def _below(r: np.ndarray, t: int) -> np.ndarray:
    if t <= 0:
        return np.zeros(r.shape, dtype=bool)
    if t >= _TWO64:
        return np.ones(r.shape, dtype=bool)
    return r < np.uint64(t)


def block_generator(seed: int, block: int) -> np.random.Philox:
    """Counter-based bit generator for one block of pulses (see module docstring)."""
    if not 0 <= seed < _TWO64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    key = np.array([seed, 0], dtype=np.uint64)
    counter = np.array([0, 0, block, 0], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter)


def _simulate_block(thresholds, seed, block, start, stop):
    t1, t2, t3, t4 = thresholds
    r = block_generator(seed, block).random_raw(stop - start)
    both = _below(r, t2)
    s_mask = _below(r, t3)
    as_mask = both | (~s_mask & _below(r, t4))
    s_idx = np.flatnonzero(s_mask)
    as_idx = np.flatnonzero(as_mask)
    pulses = np.concatenate((s_idx, as_idx)) + start
    channels = np.concatenate((np.zeros(s_idx.size, np.uint8), np.ones(as_idx.size, np.uint8)))
    order = np.argsort(_keys(pulses, channels), kind="stable")
    return pulses[order], channels[order]


def iter_blocks(probabilities: ChannelProbabilities, n_pulses: int, seed: int, workers: int = 1
                ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (pulses, channels) per block, in pulse order."""
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    thresholds = _thresholds(probabilities)
    n_blocks = -(-n_pulses // BLOCK_PULSES)
    spans = [(b, b * BLOCK_PULSES, min(n_pulses, (b + 1) * BLOCK_PULSES)) for b in range(n_blocks)]
    if workers <= 1:
        for b, lo, hi in spans:
            yield _simulate_block(thresholds, seed, b, lo, hi)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # bounded look-ahead keeps memory proportional to the worker count
        window = 2 * workers
        pending = []
        for span in spans:
            pending.append(pool.submit(_simulate_block, thresholds, seed, *span))
            if len(pending) >= window:
                yield pending.pop(0).result()
        for fut in pending:
            yield fut.result()


def simulate(probabilities: ChannelProbabilities, n_pulses: int, seed: int,
             rep_rate: float = 76e6, workers: int = 1) -> EventStream:
    """Simulate ``n_pulses`` laser pulses and return the detection stream."""
    parts = list(iter_blocks(probabilities, n_pulses, seed, workers))
    pulses = np.concatenate([p for p, _ in parts])
    channels = np.concatenate([c for _, c in parts])
    logger.debug("simulated %d pulses, %d records", n_pulses, pulses.size)
    return EventStream(pulses, channels, n_pulses, rep_rate, seed)


def merge_streams(a: EventStream, b: EventStream) -> EventStream:
    """Sorted union of two streams over the same pulse train; duplicate records collapse."""
    if a.n_pulses != b.n_pulses or a.rep_rate != b.rep_rate:
        raise ValueError("cannot merge streams with different n_pulses or rep_rate")
    keys = np.union1d(_keys(a.pulses, a.channels), _keys(b.pulses, b.channels))
    seed = a.seed if a.seed == b.seed else None
    return EventStream(keys // 2, (keys % 2).astype(np.uint8), a.n_pulses, a.rep_rate, seed)


def derive_probabilities(laser: physics.LaserConfig, material: physics.MaterialModel,
                         collection: physics.CollectionConfig,
                         stokes_window: tuple[float, float] | None = None) -> ChannelProbabilities:
    """Per-pulse detection probabilities for a Stokes window and its mirrored aS window.

    The spontaneous Stokes rate is the spectrum integrated over the window
    divided by the monochromator resolution (the spectrum is itself a rate
    measured through that resolution).  The anti-Stokes rate is the Stokes
    rate times the thermal ratio n/(n+1) at the window centre.  Dark counts
    add a constant rate to each channel.  The pair rate follows the band
    containing the window centre.
    """
    lo, hi = stokes_window if stokes_window is not None else collection.stokes_window
    centre = 0.5 * (lo + hi)
    raman_rate = material.spectrum.integrate(lo, hi) / collection.mono_resolution
    thermal = physics.thermal_antistokes_ratio(centre, material.temperature) if centre != 0 else 0.0

    band = material.band_for(centre)
    if band is not None and band.v0 > 0:
        rate = physics.pair_rate(laser, band.v0, physics.delta_k(collection, band))
    else:
        rate = 0.0

    eta_s, eta_as = collection.detection_efficiency_s, collection.detection_efficiency_as
    p_pair = rate * eta_s * eta_as / laser.rep_rate
    p_s = (raman_rate * eta_s + collection.dark_rate_s) / laser.rep_rate
    p_as = (raman_rate * thermal * eta_as + collection.dark_rate_as) / laser.rep_rate
    for name, v in (("p_s", p_s), ("p_as", p_as), ("p_pair", p_pair)):
        if v > 1:
            raise ProbabilityError(f"{name} = {v:.3g} exceeds 1; configuration is unphysical")
    return ChannelProbabilities(p_s=max(p_s, 0.0), p_as=max(p_as, 0.0), p_pair=p_pair)
