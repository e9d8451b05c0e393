import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chaoscomm.oscillators import free_run
from chaoscomm.signals import MessageSpec, Trace, generate_message, read_trace_csv, write_trace_csv


def test_message_starts_high():
    m = generate_message(MessageSpec(), 1e-7, 5)
    assert list(m.samples) == [5, 5, 5, 5, 5]


def test_message_quarter_period_sampling():
    m = generate_message(MessageSpec(frequency=1.0), 0.25, 4)
    assert list(m.samples) == [5, 5, 0, 0]


@given(st.integers(min_value=8, max_value=4000))
def test_half_duty_balance(n_per_period):
    f = 1000.0
    dt = 1.0 / (f * n_per_period)
    m = generate_message(MessageSpec(frequency=f), dt, n_per_period)
    assert abs(int(np.count_nonzero(m.samples == 5)) - n_per_period / 2) <= 1


def test_message_rejects_undersampling():
    with pytest.raises(ValueError, match="undersamples"):
        generate_message(MessageSpec(), 1e-4, 10)


def test_mid_bit_times_are_segment_centres():
    spec = MessageSpec(frequency=100.0)
    t = spec.mid_bit_times(0.0, 0.02)
    assert np.allclose(t, [0.0025, 0.0075, 0.0125, 0.0175])
    assert np.all(spec.bits_at(t) == [1, 0, 1, 0])


def test_trace_validation():
    with pytest.raises(ValueError):
        Trace([0.0, math.nan], 1.0)
    with pytest.raises(ValueError):
        Trace([0.0], 0.0)
    tr = Trace([1, 2, 3], 0.5)
    with pytest.raises(ValueError):
        tr.samples[0] = 9.0


def test_csv_identity_layout(tmp_path):
    p = tmp_path / "t.csv"
    write_trace_csv({"x": Trace([0.0, 1.0, 2.0], 1.0)}, p)
    assert p.read_bytes() == b"t,x\n0,0\n1,1\n2,2\n"


def test_csv_round_trip_chaotic(tmp_path):
    tr = free_run("chua", n=100_000 - 1, initial=(0.01, 0.0, 0.0))["VC1"]
    p = tmp_path / "c.csv"
    write_trace_csv({"VC1": tr}, p)
    back = read_trace_csv(p)["VC1"]
    assert len(back) == len(tr)
    assert np.max(np.abs(back.samples - tr.samples)) < 1e-12 * np.max(np.abs(tr.samples))
    assert math.isclose(back.dt, tr.dt, rel_tol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=50))
def test_csv_round_trip_exact(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("rt") / "v.csv"
    write_trace_csv({"v": Trace(values, 1e-3)}, p)
    assert np.array_equal(read_trace_csv(p)["v"].samples, np.asarray(values))


def test_csv_rejects_nan_token(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,x\n0,1\n1,nan\n")
    with pytest.raises(ValueError, match="non-finite"):
        read_trace_csv(p)


def test_csv_rejects_ragged_rows(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,x\n0,1\n1\n")
    with pytest.raises(ValueError, match="expected 2 fields"):
        read_trace_csv(p)


def test_csv_rejects_mismatched_traces(tmp_path):
    with pytest.raises(ValueError):
        write_trace_csv({"a": Trace([1, 2], 1.0), "b": Trace([1, 2, 3], 1.0)}, tmp_path / "x.csv")
    with pytest.raises(ValueError):
        write_trace_csv({"a": Trace([1, 2], 1.0), "b": Trace([1, 2], 2.0)}, tmp_path / "x.csv")
