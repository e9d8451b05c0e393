"""Uniformly sampled traces, the square-wave message and CSV persistence."""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np


@dataclass(frozen=True)
class Trace:
    """Real-valued time series sampled every ``dt`` seconds from ``t0``.

    Samples are copied into a read-only float64 array on construction and
    must all be finite.
    """

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt!r}")
        if not math.isfinite(self.t0):
            raise ValueError("t0 must be finite")
        arr = np.array(self.samples, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise ValueError("a trace needs at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("trace samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def duration(self) -> float:
        return len(self) * self.dt

    def index_at(self, t: float) -> int:
        """Nearest sample index for absolute time ``t`` (not clipped)."""
        return int(round((t - self.t0) / self.dt))

    def with_samples(self, samples) -> "Trace":
        return Trace(samples, self.dt, self.t0)


@dataclass(frozen=True)
class MessageSpec:
    """Square-wave message: ``high_level`` for the first ``duty`` of each period."""

    frequency: float = 6222.0
    low_level: float = 0.0
    high_level: float = 5.0
    duty: float = 0.5
    phase: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("message frequency must be positive")
        if not self.low_level < self.high_level:
            raise ValueError("low_level must be below high_level")
        if not 0 < self.duty < 1:
            raise ValueError("duty must lie in (0, 1)")
        if not 0 <= self.phase < 1:
            raise ValueError("phase must lie in [0, 1)")

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def bit_period(self) -> float:
        # one bit per half-period: the high half and the low half
        return 0.5 / self.frequency

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.low_level + self.high_level)

    def bits_at(self, t) -> np.ndarray:
        frac = np.mod(np.asarray(t, dtype=np.float64) * self.frequency + self.phase, 1.0)
        return (frac < self.duty).astype(np.uint8)

    def mid_bit_times(self, start: float, stop: float) -> np.ndarray:
        """Centres of every high and low segment falling in ``[start, stop]``."""
        f = self.frequency
        first = math.floor(start * f + self.phase) - 1
        last = math.ceil(stop * f + self.phase) + 1
        cycles = np.arange(first, last + 1, dtype=np.float64)
        hi = (cycles + 0.5 * self.duty - self.phase) / f
        lo = (cycles + 0.5 * (1.0 + self.duty) - self.phase) / f
        t = np.sort(np.concatenate([hi, lo]))
        return t[(t >= start) & (t <= stop)]


def generate_message(spec: MessageSpec, dt: float, n: int, t0: float = 0.0) -> Trace:
    """Sample the square-wave message on ``n`` points spaced ``dt`` apart."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt >= 0.5 / spec.frequency:
        raise ValueError(
            f"dt={dt:g} s undersamples a {spec.frequency:g} Hz message "
            f"(need dt < {0.5 / spec.frequency:g} s)"
        )
    t = t0 + np.arange(n) * dt
    bits = spec.bits_at(t)
    return Trace(np.where(bits == 1, spec.high_level, spec.low_level), dt, t0)


def _atomic_write_text(path: Path, writer) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace_csv(traces: Mapping[str, Trace], path) -> None:
    """Write traces sharing ``dt``, ``t0`` and length as ``t,<name>,...`` columns.

    Values are printed with 17 significant digits so a round trip is exact.
    """
    if not traces:
        raise ValueError("nothing to write")
    names = list(traces)
    first = traces[names[0]]
    for name in names[1:]:
        tr = traces[name]
        if len(tr) != len(first):
            raise ValueError(f"trace {name!r} has {len(tr)} samples, expected {len(first)}")
        if tr.dt != first.dt or tr.t0 != first.t0:
            raise ValueError(f"trace {name!r} is on a different time grid")
    for name in names:
        if "," in name or name == "t":
            raise ValueError(f"invalid column name {name!r}")
    cols = np.column_stack([first.times] + [traces[n].samples for n in names])

    def _write(fh):
        fh.write(",".join(["t", *names]) + "\n")
        for row in cols:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    _atomic_write_text(Path(path), _write)


def read_trace_csv(path, dt: float | None = None) -> dict[str, Trace]:
    """Inverse of :func:`write_trace_csv`.

    ``dt`` is recovered from the time column; it must be passed explicitly
    for single-row files.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0] != "t":
        raise ValueError(f"{path}: header must start with 't' and name at least one column")
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: no data rows")
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{i}: expected {len(header)} fields, got {len(row)}")
        try:
            data[i - 2] = [float(v) for v in row]
        except ValueError as exc:
            raise ValueError(f"{path}:{i}: {exc}") from None
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite value in data")
    t = data[:, 0]
    if dt is None:
        if len(t) < 2:
            raise ValueError(f"{path}: cannot infer dt from a single row")
        dt = (t[-1] - t[0]) / (len(t) - 1)
    return {name: Trace(data[:, j + 1], dt, t[0]) for j, name in enumerate(header[1:])}
