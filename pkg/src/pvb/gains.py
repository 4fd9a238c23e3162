"""Dual-gain ingestion and the epsilon-shifted geometric mean.

Raw strong-branching observations arrive as (downgain, upgain) pairs per
candidate. Everything downstream consumes them collapsed to one number

    g = sqrt((down + eps) * (up + eps)) - eps

which tends to the plain geometric mean as eps -> 0 and stays informative
when one side is zero. A collapsed gain below ZERO_TOL is classified as an
exact zero everywhere (mass-point bookkeeping, depth formulas): the shift
arithmetic cannot be trusted past that resolution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

DEFAULT_EPSILON = 1e-6
ZERO_TOL = 1e-9

GAIN_FILE_HEADER = ("node_id", "variable_id", "downgain", "upgain")


class GainFileError(ValueError):
    """Malformed gain file; the message names the offending line."""


def is_zero_gain(value: float) -> bool:
    """Classification used for the zero mass point p0."""
    return value < ZERO_TOL


@dataclass(frozen=True)
class GainPair:
    """One candidate's (downgain, upgain) observation, objective units."""

    down: float
    up: float

    def __post_init__(self) -> None:
        for side, v in (("down", self.down), ("up", self.up)):
            if not math.isfinite(v):
                raise ValueError(f"non-finite {side}gain: {v!r}")
            if v < 0:
                raise ValueError(f"negative {side}gain: {v!r}")


@dataclass(frozen=True)
class GeomGain:
    """Epsilon-shifted geometric mean of a GainPair."""

    value: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"invalid geometric-mean gain: {self.value!r}")

    @property
    def is_zero(self) -> bool:
        return is_zero_gain(self.value)


def shifted_geomean(pair: GainPair, epsilon: float = DEFAULT_EPSILON) -> GeomGain:
    """Collapse a gain pair to g = sqrt((down+eps)(up+eps)) - eps.

    Symmetric in (down, up), monotone in each argument, and exact for
    down == up (sqrt of a perfect square rounds back to its root).
    """
    if not (epsilon > 0):
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    value = math.sqrt((pair.down + epsilon) * (pair.up + epsilon)) - epsilon
    # Guard the subtraction against a last-ulp dip below zero.
    return GeomGain(max(value, 0.0))


@dataclass(frozen=True)
class GainSeries:
    """All candidate evaluations collected at one node of one instance."""

    node_id: str
    entries: tuple[tuple[str, GainPair], ...]
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        seen = set()
        for var_id, _ in self.entries:
            if var_id in seen:
                raise ValueError(
                    f"duplicate variable_id {var_id!r} in series {self.node_id!r}"
                )
            seen.add(var_id)

    @cached_property
    def geomeans(self) -> tuple[GeomGain, ...]:
        return tuple(shifted_geomean(p, self.epsilon) for _, p in self.entries)

    @property
    def zero_count(self) -> int:
        return sum(1 for g in self.geomeans if g.is_zero)

    def __len__(self) -> int:
        return len(self.entries)


def load_gain_series(path: str, epsilon: float = DEFAULT_EPSILON) -> list[GainSeries]:
    """Read a gain-file CSV into one GainSeries per distinct node_id.

    Entry order within a series follows file order. Errors carry the
    1-based line number of the offending row.
    """
    by_node: dict[str, list[tuple[str, GainPair]]] = {}
    seen_keys: set[tuple[str, str]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if tuple(cell.strip() for cell in header) != GAIN_FILE_HEADER:
            raise GainFileError(
                f"{path}:1: expected header {','.join(GAIN_FILE_HEADER)!r}, "
                f"got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise GainFileError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            node_id, var_id = row[0].strip(), row[1].strip()
            try:
                down, up = float(row[2]), float(row[3])
            except ValueError:
                raise GainFileError(f"{path}:{lineno}: unparseable gain value") from None
            key = (node_id, var_id)
            if key in seen_keys:
                raise GainFileError(f"{path}:{lineno}: duplicate entry {key!r}")
            seen_keys.add(key)
            try:
                pair = GainPair(down, up)
            except ValueError as exc:
                raise GainFileError(f"{path}:{lineno}: {exc}") from None
            by_node.setdefault(node_id, []).append((var_id, pair))
    return [
        GainSeries(node_id, tuple(entries), epsilon)
        for node_id, entries in by_node.items()
    ]


def save_gain_series(path: str, series: list[GainSeries]) -> None:
    """Write series back to the CSV schema with 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(GAIN_FILE_HEADER)
        for s in series:
            for var_id, pair in s.entries:
                writer.writerow([s.node_id, var_id, f"{pair.down:.17g}", f"{pair.up:.17g}"])
