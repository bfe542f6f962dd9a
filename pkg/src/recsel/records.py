"""Record-value extraction from finite observation sequences.

Records use strict inequality: an observation equal to the running extreme
is not a record, so behavior is deterministic after rounding even though
ties have probability zero under continuous models.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import families
from .errors import DataError, UsageError


class Direction(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class RecordSet:
    """Record values with their 1-based record times."""

    values: np.ndarray
    times: np.ndarray
    direction: Direction
    source_length: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        times = np.asarray(self.times, dtype=np.int64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", times)
        if values.shape != times.shape or values.ndim != 1 or values.size == 0:
            raise DataError("values and times must be matching nonempty 1-d arrays")
        if times[0] != 1 or np.any(np.diff(times) <= 0):
            raise DataError("record times must start at 1 and increase strictly")
        diffs = np.diff(values)
        if self.direction == Direction.UPPER and np.any(diffs <= 0):
            raise DataError("upper record values must increase strictly")
        if self.direction == Direction.LOWER and np.any(diffs >= 0):
            raise DataError("lower record values must decrease strictly")
        if times[-1] > self.source_length:
            raise DataError("record time exceeds source length")

    def __len__(self) -> int:
        return int(self.values.size)


def _as_sequence(seq) -> np.ndarray:
    arr = np.asarray(seq, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise UsageError("need a nonempty 1-d sequence of observations")
    if not np.all(np.isfinite(arr)):
        raise DataError("sequence contains non-finite values")
    return arr


def extract_records(seq, direction: Direction | str = Direction.UPPER) -> RecordSet:
    """Scan a sequence for records.  The first element is always a record;
    later elements are records when they strictly exceed (upper) or fall
    below (lower) every earlier observation."""
    direction = Direction(direction)
    arr = _as_sequence(seq)
    if direction == Direction.UPPER:
        running = np.maximum.accumulate(arr)
        is_rec = np.empty(arr.size, dtype=bool)
        is_rec[0] = True
        is_rec[1:] = arr[1:] > running[:-1]
    else:
        running = np.minimum.accumulate(arr)
        is_rec = np.empty(arr.size, dtype=bool)
        is_rec[0] = True
        is_rec[1:] = arr[1:] < running[:-1]
    times = np.flatnonzero(is_rec) + 1
    return RecordSet(arr[times - 1], times, direction, arr.size)


def transformed_records(seq, family: families.FamilySpec) -> RecordSet:
    """Upper records of the transformed sequence S(x_i) for a gamma-type
    family.  Transforming first keeps this correct for non-monotone S
    (the zero-mean normal member)."""
    if family.kind != families.Kind.GAMMA_TYPE:
        raise UsageError("transformed_records applies to gamma-type families only")
    arr = _as_sequence(seq)
    return extract_records(families.s_transform(family, arr), Direction.UPPER)


def canonical_records(seq, family: families.FamilySpec) -> RecordSet:
    """Records of the canonical (Gamma- or exponential-scale) statistic, the
    scale on which the selection estimators operate.

    Gamma-type: upper records of S(x).  Hazard family: H applied to the upper
    records of x.  Reversed-hazard family: -R applied to the lower records of
    x, which are the upper records of the exponential statistic -log G(X).
    """
    if family.kind == families.Kind.GAMMA_TYPE:
        return transformed_records(seq, family)
    direction = Direction(families.estimation_record_direction(family))
    raw = extract_records(seq, direction)
    values = families.canonical_transform(family, raw.values)
    return RecordSet(values, raw.times, Direction.UPPER, raw.source_length)


class RecordAccumulator:
    """Incremental record scanner; accepts one observation or one block at a
    time so callers never materialize full sequences."""

    def __init__(self, direction: Direction | str = Direction.UPPER):
        self.direction = Direction(direction)
        self._values: list[float] = []
        self._times: list[int] = []
        self._count = 0
        self._extreme = -np.inf if self.direction == Direction.UPPER else np.inf

    def push(self, x: float) -> bool:
        """Feed one observation; True when it set a new record."""
        x = float(x)
        if not np.isfinite(x):
            raise DataError("sequence contains non-finite values")
        self._count += 1
        better = x > self._extreme if self.direction == Direction.UPPER else x < self._extreme
        if better:
            self._extreme = x
            self._values.append(x)
            self._times.append(self._count)
        return better

    def extend(self, block) -> int:
        """Feed a block of observations; returns how many records it added."""
        block = np.asarray(block, dtype=float)
        if block.size == 0:
            return 0
        if not np.all(np.isfinite(block)):
            raise DataError("sequence contains non-finite values")
        prev = np.empty_like(block)
        prev[0] = self._extreme
        if self.direction == Direction.UPPER:
            prev[1:] = np.maximum(np.maximum.accumulate(block)[:-1], self._extreme)
            is_rec = block > prev
        else:
            prev[1:] = np.minimum(np.minimum.accumulate(block)[:-1], self._extreme)
            is_rec = block < prev
        idx = np.flatnonzero(is_rec)
        for i in idx:
            self._values.append(float(block[i]))
            self._times.append(self._count + int(i) + 1)
        self._count += block.size
        if idx.size:
            # the last record is by construction the block's new extreme
            self._extreme = float(block[idx[-1]])
        return int(idx.size)

    @property
    def record_count(self) -> int:
        return len(self._values)

    def result(self) -> RecordSet:
        if not self._values:
            raise UsageError("no observations seen yet")
        return RecordSet(np.array(self._values), np.array(self._times), self.direction, self._count)
