import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chaoscomm.metrics import (
    align_lag,
    bit_error_rate,
    correlation,
    count_glitches,
    is_antisync,
    sync_error_rms,
    wrong_runs,
)
from chaoscomm.signals import MessageSpec, Trace, generate_message

SPEC = MessageSpec()
DT = 1e-7
N = 200_000  # 20 ms, about 248 bits


@pytest.fixture(scope="module")
def msg():
    return generate_message(SPEC, DT, N)


def _mid_bit_indices(n_bits_skip=0):
    t = SPEC.mid_bit_times(0.0, (N - 1) * DT)
    return np.rint(t / DT).astype(int)[n_bits_skip:]


def test_ber_identity_and_inversion(msg):
    assert bit_error_rate(msg, msg, SPEC).ber == 0.0
    inv = msg.with_samples(5.0 - msg.samples)
    be = bit_error_rate(msg, inv, SPEC)
    assert be.ber == 1.0 and be.ber_polarity_agnostic == 0.0


def test_ber_counts_injected_flips(msg):
    t = SPEC.mid_bit_times(0.0, (N - 1) * DT)
    t = t[:124]
    m = generate_message(SPEC, DT, int(round(t[-1] / DT)) + 50)
    rng = np.random.default_rng(1)
    chosen = rng.choice(124, size=7, replace=False)
    d = m.samples.copy()
    bit = SPEC.bit_period
    for k in chosen:
        lo = int(round((t[k] - bit / 2) / DT)) + 1
        hi = int(round((t[k] + bit / 2) / DT))
        d[lo:hi] = 5.0 - d[lo:hi]
    be = bit_error_rate(m, m.with_samples(d), SPEC)
    assert be.n_bits == 124
    assert be.n_errors == 7
    assert be.ber == pytest.approx(7 / 124)


def test_ber_needs_enough_bits(msg):
    short = generate_message(SPEC, DT, 5000)
    with pytest.raises(ValueError, match="bits"):
        bit_error_rate(short, short, SPEC)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 30), st.integers(0, 2**32 - 1))
def test_ber_shift_invariance(shift, seed):
    m = generate_message(SPEC, DT, N)
    rng = np.random.default_rng(seed)
    noisy = m.samples + rng.normal(0, 2.0, N)
    d = m.with_samples(noisy)
    base = bit_error_rate(m, d, SPEC).ber
    # delay both traces by the same amount
    m2 = m.with_samples(np.concatenate([np.zeros(shift), m.samples[: N - shift]]))
    d2 = m.with_samples(np.concatenate([np.zeros(shift), noisy[: N - shift]]))
    spec2 = MessageSpec(phase=(-shift * DT * SPEC.frequency) % 1.0)
    assert bit_error_rate(m2, d2, spec2, settle=shift * DT).ber == pytest.approx(base, abs=2 / 248)
    inv = d.with_samples(5.0 - noisy)
    assert bit_error_rate(m, inv, SPEC).ber_polarity_agnostic == bit_error_rate(m, d, SPEC).ber_polarity_agnostic


def test_align_lag_constructed_shift():
    rng = np.random.default_rng(0)
    x = Trace(rng.normal(size=5000), 1e-6)
    assert align_lag(x, x, 20e-6) == 0.0
    delayed = x.with_samples(np.concatenate([np.zeros(3), x.samples[:-3]]))
    assert align_lag(x, delayed, 20e-6) == pytest.approx(3e-6)


def test_align_lag_matches_exhaustive_scan(msg):
    # oracle: brute-force Pearson correlation at every lag
    from chaoscomm.codec import filter_trace, get_filter, threshold_decode_trace

    vm = threshold_decode_trace(filter_trace(msg, get_filter("2")))
    L = 40
    a = msg.samples[L:N - L]
    scores = [np.corrcoef(a, vm.samples[L + k:N - L + k])[0, 1] for k in range(-L, L + 1)]
    best = int(np.argmax(np.round(scores, 12))) - L
    lag = align_lag(msg, vm, L * DT)
    assert lag == pytest.approx(best * DT)
    assert 0 < lag < SPEC.bit_period


def test_glitch_count_constructed(msg):
    assert count_glitches(msg, msg, SPEC) == 0
    idx = _mid_bit_indices()[10]
    d = msg.samples.copy()
    d[idx:idx + 2] = 5.0 - d[idx:idx + 2]
    assert count_glitches(msg.with_samples(d), msg, SPEC) == 1


def test_edge_jitter_is_not_a_glitch(msg):
    d = msg.samples.copy()
    edges = np.flatnonzero(np.diff(msg.samples) != 0) + 1
    for e in edges[5:15]:
        d[e] = d[e - 1]  # output switches one sample late
    assert count_glitches(msg.with_samples(d), msg, SPEC) == 0
    runs = wrong_runs(msg.with_samples(d), msg, SPEC)
    assert runs.lengths.size == 10 and runs.at_edge.all()


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 240), st.integers(1, 700)), min_size=0, max_size=12, unique_by=lambda x: x[0]))
def test_wrong_runs_partition(spikes):
    """Every wrong run is exactly one of: edge jitter, glitch, or long error."""
    m = generate_message(SPEC, DT, N)
    d = m.samples.copy()
    mids = _mid_bit_indices()
    for bit, width in spikes:
        if bit >= mids.size:
            continue
        i = mids[bit]
        d[i:i + width] = 5.0 - d[i:i + width]
    dec = m.with_samples(d)
    runs = wrong_runs(dec, m, SPEC)
    short = runs.lengths < 0.1 * SPEC.bit_period / DT
    glitches = count_glitches(dec, m, SPEC)
    jitter = int(np.count_nonzero(short & runs.at_edge))
    long_runs = int(np.count_nonzero(~short))
    assert glitches + jitter + long_runs == runs.lengths.size
    assert int(np.count_nonzero(m.samples != d)) == int(runs.lengths.sum())


def test_sync_metrics():
    t = np.arange(10_000) * 1e-6
    x = Trace(np.sin(2 * np.pi * 1e3 * t), 1e-6)
    assert sync_error_rms(x, x) == 0.0
    assert correlation(x, x) == pytest.approx(1.0)
    neg = x.with_samples(-x.samples)
    assert correlation(x, neg) == pytest.approx(-1.0)
    assert is_antisync(correlation(x, neg))
    assert not is_antisync(correlation(x, x))


@given(st.floats(-10, 10).filter(lambda a: abs(a) > 1e-3), st.floats(-5, 5))
def test_correlation_scale_offset_invariance(a, b):
    t = np.arange(2000) * 1e-5
    x = Trace(np.sin(2 * np.pi * 37 * t) + 0.3 * np.cos(2 * np.pi * 91 * t), 1e-5)
    y = x.with_samples(a * x.samples + b)
    assert correlation(x, y) == pytest.approx(np.sign(a), abs=1e-9)


def test_correlation_constant_trace_rejected():
    x = Trace(np.ones(100), 1.0)
    with pytest.raises(ValueError):
        correlation(x, x)
