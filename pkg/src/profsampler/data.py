"""Right-censored survival records: validation, ordering and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

CSV_HEADER = ("time", "event", "z")


class DataError(ValueError):
    """Raised for malformed or invalid survival data."""


class Observation(NamedTuple):
    """One subject: follow-up time ``min(T, C)``, event flag and covariate."""

    time: float
    event: bool
    covariate: float


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of right-censored observations.

    The three columns are held as read-only numpy arrays. Construct through
    :meth:`from_arrays` (or :func:`load_csv`) so the invariants are checked.
    """

    time: np.ndarray
    event: np.ndarray
    z: np.ndarray
    sorted: bool = False

    @classmethod
    def from_arrays(cls, time, event, z, sorted=None) -> "Dataset":
        time = np.array(time, dtype=np.float64).ravel()
        z = np.array(z, dtype=np.float64).ravel()
        ev = np.asarray(event).ravel()
        if not (time.size == ev.size == z.size):
            raise DataError("time, event and z must have the same length")
        if time.size == 0:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(time)):
            raise DataError("time must be finite")
        if np.any(time < 0):
            raise DataError("negative time")
        if not np.all(np.isfinite(z)):
            raise DataError("covariate must be finite")
        if ev.dtype != np.bool_:
            if not np.all((ev == 0) | (ev == 1)):
                raise DataError("event flag must be 0 or 1")
            ev = ev.astype(bool)
        else:
            ev = ev.copy()
        if sorted is None:
            sorted = _is_time_sorted(time, ev)
        for arr in (time, ev, z):
            arr.setflags(write=False)
        return cls(time, ev, z, bool(sorted))

    @classmethod
    def from_observations(cls, observations) -> "Dataset":
        obs = list(observations)
        if not obs:
            raise DataError("dataset is empty")
        t, e, z = zip(*obs)
        return cls.from_arrays(t, np.array(e, dtype=bool), z)

    def __len__(self) -> int:
        return self.time.size

    def __iter__(self) -> Iterator[Observation]:
        return (Observation(float(t), bool(e), float(z))
                for t, e, z in zip(self.time, self.event, self.z))

    @property
    def n(self) -> int:
        return self.time.size

    @property
    def observations(self) -> list[Observation]:
        return list(self)

    def with_covariate(self, z) -> "Dataset":
        return Dataset.from_arrays(self.time, self.event, z, sorted=self.sorted)

    def with_times(self, time) -> "Dataset":
        return Dataset.from_arrays(time, self.event, self.z)


def _is_time_sorted(time: np.ndarray, event: np.ndarray) -> bool:
    if time.size < 2:
        return True
    dt = np.diff(time)
    if np.any(dt < 0):
        return False
    # within a tie an event must not follow a censoring
    tied = dt == 0
    return not np.any(tied & ~event[:-1] & event[1:])


def sort_by_time(d: Dataset) -> Dataset:
    """Return ``d`` ordered by ascending time, events before censorings at ties.

    The ordering is stable, so rows that agree on (time, event) keep their
    input order. Sorting an already sorted dataset is a no-op.
    """
    if d.sorted:
        return d
    order = np.lexsort((~d.event, d.time))
    return Dataset.from_arrays(d.time[order], d.event[order], d.z[order], sorted=True)


def event_count(d: Dataset) -> int:
    """Number of uncensored observations (the effective sample size)."""
    return int(np.count_nonzero(d.event))


def load_csv(path) -> Dataset:
    """Read a ``time,event,z`` CSV file.

    Raises
    ------
    DataError
        On a wrong header or any malformed row; the message carries the
        1-based line number.
    OSError
        When the file cannot be read.
    """
    path = Path(path)
    times, events, zs = [], [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(f"expected header 'time,event,z' at line 1 of {path}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"expected 3 fields at line {line}, got {len(row)}")
            try:
                t, e, z = (float(c) for c in row)
            except ValueError:
                raise DataError(f"malformed number at line {line}") from None
            if not math.isfinite(t):
                raise DataError(f"non-finite time at line {line}")
            if t < 0:
                raise DataError(f"negative time at line {line}")
            if e not in (0.0, 1.0):
                raise DataError(f"event flag must be 0 or 1 at line {line}")
            if not math.isfinite(z):
                raise DataError(f"non-finite covariate at line {line}")
            times.append(t)
            events.append(e == 1.0)
            zs.append(z)
    if not times:
        raise DataError(f"no observations in {path}")
    return Dataset.from_arrays(times, np.array(events, dtype=bool), zs)


def save_csv(d: Dataset, path) -> None:
    """Write ``d`` as CSV; floats use 17 significant digits so reloading is exact."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for t, e, z in zip(d.time, d.event, d.z):
            fh.write(f"{t:.17g},{int(e)},{z:.17g}\n")
