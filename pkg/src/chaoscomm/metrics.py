"""Synchronization and decode-quality measures."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy import signal as sps

from .signals import MessageSpec, Trace

ANTISYNC_THRESHOLD = -0.9
GLITCH_WIDTH_FRACTION = 0.1
MIN_BITS = 10


@dataclass(frozen=True)
class SyncReport:
    ber: float
    ber_polarity_agnostic: float
    sync_rms: float
    correlation: float
    antisync: bool
    alignment_lag: float
    glitches: int
    n_bits: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


class BitErrors(NamedTuple):
    ber: float
    ber_polarity_agnostic: float
    n_bits: int
    n_errors: int


def _check_same_grid(a: Trace, b: Trace):
    if len(a) != len(b) or not math.isclose(a.dt, b.dt, rel_tol=1e-9) or a.t0 != b.t0:
        raise ValueError("traces must share dt, t0 and length")


def _settle_index(tr: Trace, settle: float) -> int:
    if settle < 0:
        raise ValueError("settle must be non-negative")
    k = int(math.ceil(settle / tr.dt - 1e-9))
    if k >= len(tr):
        raise ValueError("settling window covers the whole trace")
    return k


def align_lag(reference: Trace, signal: Trace, max_lag: float, settle: float = 0.0) -> float:
    """Delay of ``signal`` against ``reference`` maximising normalised cross-correlation.

    Lags are searched on the sample grid in ``[-max_lag, max_lag]``; the
    correlation window is fixed so every lag is scored on the same
    reference samples. Ties go to the smallest ``|lag|``.
    """
    _check_same_grid(reference, signal)
    dt = reference.dt
    L = int(math.floor(max_lag / dt + 1e-9))
    n = len(reference)
    s = max(L, _settle_index(reference, settle))
    e = n - L
    if e - s < 2:
        raise ValueError("traces too short for the requested lag window")
    a = reference.samples[s:e]
    a = a - a.mean()
    na = float(np.sqrt(np.dot(a, a)))
    if na == 0.0:
        raise ValueError("reference is constant over the alignment window")
    b = signal.samples[s - L : e + L]
    num = sps.correlate(b, a, mode="valid", method="auto")  # index j <-> lag j - L
    w = e - s
    c1 = np.concatenate([[0.0], np.cumsum(b)])
    c2 = np.concatenate([[0.0], np.cumsum(b * b)])
    sums = c1[w:] - c1[:-w]
    sq = c2[w:] - c2[:-w]
    var = np.maximum(sq - sums * sums / w, 0.0)
    nb = np.sqrt(var)
    if np.all(nb <= 1e-12 * max(1.0, float(np.max(np.abs(b))))):
        raise ValueError("signal is constant over the alignment window")
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(nb > 0, num / (na * nb), -np.inf)
    lags = np.arange(-L, L + 1)
    order = np.lexsort((lags, np.abs(lags), -np.round(score, 12)))
    return float(lags[order[0]] * dt)


def _bits(samples: np.ndarray, threshold: float) -> np.ndarray:
    return (samples > threshold).astype(np.int8)


def bit_error_rate(
    message: Trace,
    decoded: Trace,
    spec: MessageSpec,
    lag: float = 0.0,
    settle: float = 0.0,
    threshold: float = 2.5,
) -> BitErrors:
    """Compare message and decoded output at mid-bit instants after ``settle``.

    The decoded trace is read ``lag`` seconds later than the message. Also
    returns the rate against the complemented output (polarity-agnostic).
    """
    _check_same_grid(message, decoded)
    t_start = message.t0 + settle
    t_stop = message.t0 + (len(message) - 1) * message.dt - max(lag, 0.0)
    t = spec.mid_bit_times(t_start, t_stop)
    ref_idx = np.rint((t - message.t0) / message.dt).astype(np.int64)
    dec_idx = np.rint((t + lag - decoded.t0) / decoded.dt).astype(np.int64)
    ok = (ref_idx >= 0) & (dec_idx >= 0) & (ref_idx < len(message)) & (dec_idx < len(decoded))
    ref_idx, dec_idx = ref_idx[ok], dec_idx[ok]
    if ref_idx.size < MIN_BITS:
        raise ValueError(f"only {ref_idx.size} bits after settling; need at least {MIN_BITS}")
    m = _bits(message.samples[ref_idx], spec.midpoint)
    d = _bits(decoded.samples[dec_idx], threshold)
    errors = int(np.count_nonzero(m != d))
    n = int(m.size)
    # count-based so a decode and its complement give bit-identical values
    return BitErrors(errors / n, min(errors, n - errors) / n, n, errors)


class WrongRuns(NamedTuple):
    """Maximal wrong-valued runs of the aligned output, in samples."""

    lengths: np.ndarray
    at_edge: np.ndarray  # run starts or ends exactly on a message transition


def wrong_runs(
    decoded: Trace,
    message: Trace,
    spec: MessageSpec,
    lag: float = 0.0,
    settle: float = 0.0,
    threshold: float = 2.5,
) -> WrongRuns:
    """Find every maximal run where the lag-aligned output disagrees with the message."""
    _check_same_grid(message, decoded)
    shift = int(round(lag / decoded.dt))
    s = _settle_index(message, settle)
    n = len(message)
    lo = max(s, -shift)
    hi = min(n, n - shift)
    if (hi - lo) * decoded.dt < MIN_BITS * spec.bit_period:
        raise ValueError(f"fewer than {MIN_BITS} bits after settling")
    m = _bits(message.samples[lo:hi], spec.midpoint)
    d = _bits(decoded.samples[lo + shift : hi + shift], threshold)
    wrong = np.concatenate([[0], (m != d).astype(np.int8), [0]])
    edges = np.diff(wrong)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    # message transition between samples j-1 and j, for j in 1..len-1
    flips = np.zeros(m.size + 1, dtype=bool)
    flips[1:-1] = m[1:] != m[:-1]
    at_edge = flips[starts] | flips[ends]
    return WrongRuns(ends - starts, at_edge)


def count_glitches(
    decoded: Trace,
    message: Trace,
    spec: MessageSpec,
    lag: float = 0.0,
    settle: float = 0.0,
    threshold: float = 2.5,
    width_fraction: float = GLITCH_WIDTH_FRACTION,
) -> int:
    """Number of short wrong-valued spikes inside bits.

    A glitch is a run shorter than ``width_fraction`` of a bit period that
    does not touch a message transition; runs on a transition are edge
    timing jitter of the aligned output, longer runs are bit errors.
    """
    runs = wrong_runs(decoded, message, spec, lag, settle, threshold)
    max_len = width_fraction * spec.bit_period / decoded.dt
    return int(np.count_nonzero((runs.lengths < max_len) & ~runs.at_edge))


def _post_settle_pair(tx: Trace, rx: Trace, settle: float):
    _check_same_grid(tx, rx)
    k = _settle_index(tx, settle)
    return tx.samples[k:], rx.samples[k:]


def sync_error_rms(tx: Trace, rx: Trace, settle: float = 0.0) -> float:
    a, b = _post_settle_pair(tx, rx, settle)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def correlation(tx: Trace, rx: Trace, settle: float = 0.0) -> float:
    """Pearson correlation of the post-settle samples."""
    a, b = _post_settle_pair(tx, rx, settle)
    a = a - a.mean()
    b = b - b.mean()
    na, nb = float(np.sqrt(a @ a)), float(np.sqrt(b @ b))
    scale_a = max(1.0, float(np.max(np.abs(tx.samples))))
    scale_b = max(1.0, float(np.max(np.abs(rx.samples))))
    if na <= 1e-12 * scale_a * math.sqrt(a.size) or nb <= 1e-12 * scale_b * math.sqrt(b.size):
        raise ValueError("correlation undefined for a constant trace")
    return float(np.clip((a @ b) / (na * nb), -1.0, 1.0))


def is_antisync(corr: float, threshold: float = ANTISYNC_THRESHOLD) -> bool:
    return corr <= threshold
