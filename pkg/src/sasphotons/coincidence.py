"""Delay histograms, g2 and the accidental-subtracted correlated pair rate.

The histogram counts, for each pulse delay d in [-D, D], the number of
(Stokes at pulse i, anti-Stokes at pulse i + d) record pairs.  Streams are
consumed in pulse-ordered chunks; only records within D pulses of the most
recent pulse are carried between chunks, so memory does not grow with the
stream length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .montecarlo import AS, S, EventStream

DEFAULT_MAX_DELAY = 50

# cap on pair candidates materialised at once inside _count_pairs
_PAIR_BUDGET = 1 << 22


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    max_delay: int
    counts: np.ndarray
    n_pulses: int
    accumulation_time: float
    n_s: int = 0
    n_as: int = 0

    @property
    def delays(self) -> np.ndarray:
        return np.arange(-self.max_delay, self.max_delay + 1)

    def at(self, delay: int) -> int:
        return int(self.counts[delay + self.max_delay])

    @property
    def zero_delay(self) -> int:
        return self.at(0)

    @property
    def side_counts(self) -> np.ndarray:
        """Counts at every delay d != 0."""
        return np.delete(self.counts, self.max_delay)


@dataclass(frozen=True)
class CorrelatedRateResult:
    rate_zero: float
    baseline: float
    corr_rate: float
    uncertainty: float
    g2_zero: float
    g2_uncertainty: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def _count_pairs(s: np.ndarray, a: np.ndarray, max_delay: int, out: np.ndarray) -> None:
    """Add delay counts of all (s, a) pairs with |a - s| <= max_delay to ``out``."""
    if s.size == 0 or a.size == 0:
        return
    width = 2 * max_delay + 1
    step = max(1, _PAIR_BUDGET // width)
    for i in range(0, s.size, step):
        sp = s[i:i + step]
        lo = np.searchsorted(a, sp - max_delay, side="left")
        hi = np.searchsorted(a, sp + max_delay, side="right")
        n = hi - lo
        total = int(n.sum())
        if total == 0:
            continue
        first = np.repeat(lo - (np.cumsum(n) - n), n)
        partner = a[first + np.arange(total)]
        delays = partner - np.repeat(sp, n)
        out += np.bincount(delays + max_delay, minlength=width)


class HistogramAccumulator:
    """Incremental delay histogram over a stream fed in pulse order.

    >>> acc = HistogramAccumulator(max_delay=2)
    >>> acc.update(np.array([7, 7]), np.array([0, 1]))
    >>> acc.counts.tolist()
    [0, 0, 1, 0, 0]
    """

    def __init__(self, max_delay: int = DEFAULT_MAX_DELAY):
        if max_delay < 1:
            raise ValueError("max_delay must be >= 1")
        self.max_delay = int(max_delay)
        self.counts = np.zeros(2 * self.max_delay + 1, dtype=np.int64)
        self.n_s = 0
        self.n_as = 0
        self._carry_s = np.empty(0, np.int64)
        self._carry_a = np.empty(0, np.int64)
        self._last = -1

    def update(self, pulses: np.ndarray, channels: np.ndarray) -> None:
        pulses = np.asarray(pulses, dtype=np.int64)
        channels = np.asarray(channels)
        if pulses.size == 0:
            return
        if pulses[0] < self._last:
            raise ValueError("chunks must arrive in pulse order")
        new_s = pulses[channels == S]
        new_a = pulses[channels == AS]
        self.n_s += new_s.size
        self.n_as += new_a.size

        all_a = np.concatenate((self._carry_a, new_a))
        _count_pairs(new_s, all_a, self.max_delay, self.counts)
        _count_pairs(self._carry_s, new_a, self.max_delay, self.counts)

        self._last = int(pulses[-1])
        keep_from = self._last - self.max_delay
        all_s = np.concatenate((self._carry_s, new_s))
        self._carry_s = all_s[all_s >= keep_from]
        self._carry_a = all_a[all_a >= keep_from]

    def result(self, n_pulses: int, rep_rate: float) -> CoincidenceHistogram:
        if n_pulses <= self._last:
            raise ValueError(f"n_pulses={n_pulses} but stream contains pulse {self._last}")
        return CoincidenceHistogram(
            max_delay=self.max_delay,
            counts=self.counts.copy(),
            n_pulses=int(n_pulses),
            accumulation_time=n_pulses / rep_rate,
            n_s=self.n_s,
            n_as=self.n_as,
        )


def histogram(stream: EventStream, max_delay: int = DEFAULT_MAX_DELAY,
              chunk_records: int = 1 << 20) -> CoincidenceHistogram:
    acc = HistogramAccumulator(max_delay)
    for i in range(0, len(stream), chunk_records):
        acc.update(stream.pulses[i:i + chunk_records], stream.channels[i:i + chunk_records])
    return acc.result(stream.n_pulses, stream.rep_rate)


def histogram_from_chunks(chunks: Iterable[tuple[np.ndarray, np.ndarray]], n_pulses: int,
                          rep_rate: float, max_delay: int = DEFAULT_MAX_DELAY) -> CoincidenceHistogram:
    acc = HistogramAccumulator(max_delay)
    for pulses, channels in chunks:
        acc.update(pulses, channels)
    return acc.result(n_pulses, rep_rate)


def extract_correlated_rate(h: CoincidenceHistogram) -> CorrelatedRateResult:
    """Zero-delay rate minus the mean rate over all other delays.

    The uncertainty is the sum (not quadrature) of the Poisson errors of the
    zero-delay count and of the mean side count, converted to a rate.
    """
    T = h.accumulation_time
    if not T > 0:
        raise ValueError("accumulation time must be positive")
    side = h.side_counts
    if side.size == 0:
        raise ValueError("histogram has no nonzero-delay bins")
    c0 = float(h.zero_delay)
    m = float(side.mean())
    if m == 0 and c0 > 0:
        raise ValueError("all nonzero-delay bins are empty; baseline is undefined")

    if m > 0:
        g2 = c0 / m
        g2_err = math.sqrt(c0 + g2 * g2 * m / side.size) / m
    else:
        g2 = g2_err = math.nan
    rate_zero = c0 / T
    baseline = m / T
    return CorrelatedRateResult(
        rate_zero=rate_zero,
        baseline=baseline,
        corr_rate=rate_zero - baseline,
        uncertainty=(math.sqrt(c0) + math.sqrt(m)) / T,
        g2_zero=g2,
        g2_uncertainty=g2_err,
    )


def g2_curve(h: CoincidenceHistogram) -> np.ndarray:
    """Rows of (delay, counts[d] / mean side count)."""
    m = float(h.side_counts.mean())
    if m <= 0:
        raise ValueError("baseline is zero; g2 undefined")
    return np.column_stack((h.delays, h.counts / m))
