"""Observation ingestion: CSV records -> staircase empirical cdf.

The CSV format is one ``value,frequency`` record per line.  Lines starting
with ``#`` and blank lines are skipped, and an optional ``value,frequency``
header row may lead the records.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import IO, Iterable, Union

__all__ = [
    "EmptyInputError",
    "ObservationParseError",
    "ObservationSet",
    "StaircaseEcdf",
    "SummaryStats",
    "observations_from_pairs",
    "parse_observations",
    "read_observations",
    "summary_stats",
    "to_staircase",
]

HEADER = ("value", "frequency")


class ObservationParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class ObservationSet:
    """Distinct observed values with their counts, sorted by value."""

    entries: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if not self.entries:
            raise EmptyInputError("observation set has no entries")
        prev = -math.inf
        for value, freq in self.entries:
            if not math.isfinite(value):
                raise ValueError(f"non-finite value {value!r}")
            if freq < 1:
                raise ValueError(f"frequency must be >= 1, got {freq}")
            if value <= prev:
                raise ValueError("values must be strictly increasing")
            prev = value

    @property
    def population(self) -> int:
        return sum(f for _, f in self.entries)

    @property
    def values(self) -> list[float]:
        return [v for v, _ in self.entries]

    @property
    def frequencies(self) -> list[int]:
        return [f for _, f in self.entries]

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class StaircaseEcdf:
    quantiles: tuple[float, ...]
    cdf: tuple[float, ...]

    def __post_init__(self):
        if len(self.quantiles) != len(self.cdf):
            raise ValueError("quantiles and cdf differ in length")
        if not self.quantiles:
            raise ValueError("staircase needs at least one point")
        for a, b in zip(self.quantiles, self.quantiles[1:]):
            if not a < b:
                raise ValueError("quantiles must be strictly increasing")
        for a, b in zip(self.cdf, self.cdf[1:]):
            if b < a:
                raise ValueError("cdf must be non-decreasing")
        if self.cdf[0] <= 0 or self.cdf[-1] > 1 + 1e-9:
            raise ValueError("cdf values must lie in (0, 1]")

    def __len__(self):
        return len(self.quantiles)

    def corners(self) -> list[tuple[float, float]]:
        """Upper corners (x_i, F_i) followed by lower corners (x_{i+1}, F_i)."""
        q, c = self.quantiles, self.cdf
        upper = list(zip(q, c))
        lower = [(q[i + 1], c[i]) for i in range(len(q) - 1)]
        return upper + lower


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    stddev: float


def observations_from_pairs(pairs: Iterable[tuple[float, int]]) -> ObservationSet:
    """Sort pairs by value, merging duplicate values by summing counts."""
    merged: dict[float, int] = {}
    for value, freq in pairs:
        merged[value] = merged.get(value, 0) + freq
    return ObservationSet(tuple(sorted(merged.items())))


def parse_observations(source: Union[bytes, str, IO]) -> ObservationSet:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    pairs = []
    seen_record = False
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        fields = [f.strip() for f in row]
        if not fields or all(not f for f in fields) or fields[0].startswith("#"):
            continue
        if not seen_record and [f.lower() for f in fields] == list(HEADER):
            seen_record = True
            continue
        seen_record = True
        if len(fields) != 2:
            raise ObservationParseError(lineno, f"expected 2 fields, got {len(fields)}")
        try:
            value = float(fields[0])
            freq_f = float(fields[1])
        except ValueError:
            raise ObservationParseError(lineno, f"non-numeric field in {row!r}") from None
        if not math.isfinite(value):
            raise ObservationParseError(lineno, f"non-finite value {fields[0]!r}")
        if not freq_f.is_integer() or freq_f <= 0:
            raise ObservationParseError(lineno, f"frequency must be a positive integer, got {fields[1]!r}")
        pairs.append((value, int(freq_f)))
    if not pairs:
        raise EmptyInputError("no observation records found")
    return observations_from_pairs(pairs)


def read_observations(path) -> ObservationSet:
    with open(path, "rb") as fh:
        return parse_observations(fh)


def to_staircase(obs: ObservationSet) -> StaircaseEcdf:
    m = obs.population
    running = 0
    cdf = []
    for freq in obs.frequencies:
        running += freq
        cdf.append(running / m)
    # running == m exactly, so the last entry is 1.0 without rounding drift
    return StaircaseEcdf(tuple(obs.values), tuple(cdf))


def summary_stats(obs: ObservationSet) -> SummaryStats:
    """Frequency-weighted mean and the spread of the distinct values about it.

    The standard deviation is the population form taken over the ``n``
    distinct quantiles, not over all ``m`` observations.
    """
    m = obs.population
    mean = sum(v * f for v, f in obs.entries) / m
    n = len(obs)
    var = sum((v - mean) ** 2 for v in obs.values) / n
    return SummaryStats(mean, math.sqrt(var))
