"""End-to-end transmitter, channel and receiver for circuits A, B, Ca and Cb.

Each run is staged: the transmitter is integrated first (it never sees the
receiver), its channel signals get noise for the whole record at once, then
the receiver is integrated against the received signals and decoded.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _kernels as K
from .channel import NoiseSpec, Placement, Stream, add_noise, derive_seed, rng_for
from .codec import (
    CodecParams,
    FilterId,
    FilterSpec,
    FILTERS,
    filter_trace,
    get_filter,
    keystream_bits,
    threshold_decode_trace,
)
from .metrics import (
    SyncReport,
    align_lag,
    bit_error_rate,
    correlation,
    count_glitches,
    is_antisync,
    sync_error_rms,
)
from .oscillators import (
    CURRENT_SCALE,
    DEFAULT_GUARD,
    ChuaParams,
    CircuitAParams,
    LorenzLikeParams,
    SimulationDiverged,
    System,
    random_initial_state,
)
from .signals import MessageSpec, Trace, generate_message

MAX_STEPS = 100_000_000
MIN_SETTLE = 2e-3
SETTLE_FRACTION = 0.1


class Circuit(enum.Enum):
    A = "a"
    B = "b"
    CA = "ca"
    CB = "cb"

    @classmethod
    def parse(cls, value) -> "Circuit":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            valid = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown circuit {value!r}; valid circuits: {valid}") from None

    @property
    def system(self) -> System:
        return {Circuit.A: System.CIRCUIT_A, Circuit.B: System.CHUA}.get(self, System.LORENZ_LIKE)


# per-circuit defaults: comparator reference, filter, step, noise placement
DEFAULT_VO = {Circuit.A: 2.0, Circuit.B: 2.0, Circuit.CA: 2.0, Circuit.CB: -0.02}
DEFAULT_FILTER = {
    Circuit.A: FilterId.FILTER2,
    Circuit.B: FilterId.FILTER1,
    Circuit.CA: FilterId.FILTER3,
    Circuit.CB: FilterId.FILTER3,
}
DEFAULT_DT = {Circuit.A: 1e-7, Circuit.B: 1e-7, Circuit.CA: 1e-8, Circuit.CB: 1e-8}
DEFAULT_PLACEMENT = {
    Circuit.A: Placement.SHARED,
    Circuit.B: Placement.BOTH,
    Circuit.CA: Placement.BOTH,
    Circuit.CB: Placement.BOTH,
}

# names of the comparator input and the transmitted sync variable
COMPARATOR_VAR = {Circuit.A: "V2", Circuit.B: "VC1", Circuit.CA: "V3", Circuit.CB: "V1"}
SYNC_VAR = {Circuit.A: "vout", Circuit.B: "VC2", Circuit.CA: "V1", Circuit.CB: "V3"}


@dataclass(frozen=True)
class LinkConfig:
    """One link scenario. ``None`` fields take the circuit's defaults in :meth:`resolved`."""

    circuit: Circuit = Circuit.A
    message: MessageSpec = field(default_factory=MessageSpec)
    codec: CodecParams | None = None
    filter: FilterSpec | None = None
    noise: NoiseSpec | None = None
    dt: float | None = None
    duration: float = 0.02
    tx_initial: tuple | None = None
    rx_initial: tuple | None = None
    seed: int = 0
    params: CircuitAParams | ChuaParams | LorenzLikeParams | None = None
    settle: float | None = None
    guard: float = DEFAULT_GUARD

    def __post_init__(self):
        object.__setattr__(self, "circuit", Circuit.parse(self.circuit))
        if self.filter is not None:
            object.__setattr__(self, "filter", get_filter(self.filter))
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def resolved(self) -> "LinkConfig":
        """Copy with every default made explicit (what manifests record)."""
        c = self.circuit
        dt = self.dt if self.dt is not None else DEFAULT_DT[c]
        noise = self.noise or NoiseSpec(0.0, DEFAULT_PLACEMENT[c], self.seed)
        if self.params is None:
            params = {Circuit.A: CircuitAParams, Circuit.B: ChuaParams}.get(c, LorenzLikeParams)()
        else:
            params = self.params
        rng = rng_for(self.seed, Stream.INITIAL)
        tx0 = self.tx_initial
        rx0 = self.rx_initial
        if tx0 is None or rx0 is None:
            draw_tx = random_initial_state(c.system, rng)
            draw_rx = random_initial_state(c.system, rng)
            tx0 = tuple(float(v) for v in draw_tx) if tx0 is None else tx0
            rx0 = tuple(float(v) for v in draw_rx) if rx0 is None else rx0
        settle = self.settle
        if settle is None:
            settle = max(SETTLE_FRACTION * self.duration, MIN_SETTLE)
        return dataclasses.replace(
            self,
            codec=self.codec or CodecParams(Vo=DEFAULT_VO[c]),
            filter=self.filter or FILTERS[DEFAULT_FILTER[c]],
            noise=noise,
            dt=float(dt),
            params=params,
            tx_initial=tuple(float(v) for v in tx0),
            rx_initial=tuple(float(v) for v in rx0),
            settle=float(settle),
        )

    @property
    def n_samples(self) -> int:
        dt = self.dt if self.dt is not None else DEFAULT_DT[self.circuit]
        return int(round(self.duration / dt))


@dataclass(frozen=True)
class LinkResult:
    """Traces of one run, grouped by role, plus the summary report."""

    config: LinkConfig
    tx_states: dict
    rx_states: dict
    channel_signals: dict
    codec_signals: dict
    decoded_vm: Trace
    report: SyncReport

    @property
    def sync_error(self) -> Trace:
        name = COMPARATOR_VAR[self.config.circuit]
        tx, rx = self.tx_states[name], self.rx_states[name]
        return tx.with_samples(tx.samples - rx.samples)

    def all_traces(self) -> dict:
        out = {}
        for prefix, group in (("tx_", self.tx_states), ("rx_", self.rx_states)):
            for name, tr in group.items():
                out[prefix + name] = tr
        out.update(self.channel_signals)
        out.update(self.codec_signals)
        out["VM"] = self.decoded_vm
        return out


def _check_steps(cfg: LinkConfig) -> int:
    n = cfg.n_samples
    if n < 2:
        raise ValueError("duration shorter than two steps")
    if n > MAX_STEPS:
        raise ValueError(f"duration/dt = {n} exceeds the {MAX_STEPS} step limit")
    return n


def _raise_if_failed(fail: int, dt: float, guard: float, where: str):
    if fail >= 0:
        raise SimulationDiverged(fail * dt, guard, where)


def _receiver_decode(cfg: LinkConfig, msg: Trace, received_info: Trace, rx_cmp: np.ndarray):
    """Receiver second stage: keystream, unmasking XOR, RC filter, threshold."""
    codec = cfg.codec
    h_rx = keystream_bits(rx_cmp, codec.Vo)
    f_rx = (received_info.samples > codec.decode_threshold).astype(np.uint8)
    m_rx = f_rx ^ h_rx
    vout2 = msg.with_samples(codec.mask_amplitude * m_rx)
    vc = filter_trace(vout2, cfg.filter)
    vm = threshold_decode_trace(vc, codec)
    signals = {
        "HS_rx": msg.with_samples(5.0 * h_rx),
        "F_rx": msg.with_samples(5.0 * f_rx),
        "vout2": vout2,
        "VC": vc,
    }
    return signals, vm


def _report(cfg: LinkConfig, msg: Trace, vm: Trace, tx_cmp: Trace, rx_cmp: Trace) -> SyncReport:
    spec = cfg.message
    settle = cfg.settle
    try:
        lag = align_lag(msg, vm, 0.5 * spec.bit_period, settle)
    except ValueError:
        lag = 0.0
    be = bit_error_rate(msg, vm, spec, lag, settle, cfg.codec.decode_threshold)
    glitches = count_glitches(vm, msg, spec, lag, settle, cfg.codec.decode_threshold)
    rms = sync_error_rms(tx_cmp, rx_cmp, settle)
    try:
        corr = correlation(tx_cmp, rx_cmp, settle)
    except ValueError:
        corr = math.nan
    return SyncReport(
        ber=be.ber,
        ber_polarity_agnostic=be.ber_polarity_agnostic,
        sync_rms=rms,
        correlation=corr,
        antisync=bool(is_antisync(corr)) if math.isfinite(corr) else False,
        alignment_lag=lag,
        glitches=glitches,
        n_bits=be.n_bits,
    )


def run_link_a(cfg: LinkConfig) -> LinkResult:
    """Circuit A: the masked output both drives the transmitter and synchronizes the receiver."""
    cfg = cfg.resolved()
    if cfg.circuit is not Circuit.A:
        raise ValueError("run_link_a needs circuit A")
    if cfg.noise.placement is not Placement.SHARED:
        raise ValueError("circuit A has a single shared channel; use placement 'shared'")
    n = _check_steps(cfg)
    dt, p, codec = cfg.dt, cfg.params, cfg.codec
    msg = generate_message(cfg.message, dt, n)
    m_bits = (msg.samples > cfg.message.midpoint).astype(np.uint8)
    inv_rc, leak, gain = 1.0 / p.rc, p.leak, p.drive_gain

    states, key, vout, fail = K.circuit_a_transmit(
        cfg.tx_initial[0], cfg.tx_initial[1], m_bits, dt, codec.Vo, codec.mask_amplitude,
        inv_rc, leak, gain, cfg.guard,
    )
    _raise_if_failed(fail, dt, cfg.guard, "circuit A transmitter")
    vout_tr = msg.with_samples(vout)
    received = add_noise(vout_tr, cfg.noise, Stream.SHARED)

    rx, fail = K.circuit_a_receive(
        cfg.rx_initial[0], cfg.rx_initial[1], np.ascontiguousarray(received.samples), dt,
        inv_rc, leak, gain, cfg.guard,
    )
    _raise_if_failed(fail, dt, cfg.guard, "circuit A receiver")

    tx_states = {"V1": msg.with_samples(states[:, 0]), "V2": msg.with_samples(states[:, 1])}
    rx_states = {"V1": msg.with_samples(rx[:, 0]), "V2": msg.with_samples(rx[:, 1])}
    channel = {"vout": vout_tr, "vout_rx": received}
    codec_signals, vm = _receiver_decode(cfg, msg, received, rx[:, 1])
    codec_signals = {
        "M": msg,
        "HS": msg.with_samples(5.0 * key),
        "F": msg.with_samples(5.0 * (m_bits ^ key)),
        **codec_signals,
    }
    report = _report(cfg, msg, vm, tx_states["V2"], rx_states["V2"])
    return LinkResult(cfg, tx_states, rx_states, channel, codec_signals, vm, report)


def _noisy_pair(cfg: LinkConfig, sync: Trace, info: Trace):
    placement = cfg.noise.placement
    if placement is Placement.SHARED:
        raise ValueError("placement 'shared' is only valid for circuit A")
    sync_rx = add_noise(sync, cfg.noise, Stream.SYNC) if placement.noisy_sync else sync
    info_rx = add_noise(info, cfg.noise, Stream.INFO) if placement.noisy_info else info
    return sync_rx, info_rx


def _masked_info(cfg: LinkConfig, msg: Trace, cmp: np.ndarray):
    m_bits = (msg.samples > cfg.message.midpoint).astype(np.uint8)
    key = keystream_bits(cmp, cfg.codec.Vo)
    f = m_bits ^ key
    info = msg.with_samples(cfg.codec.mask_amplitude * f)
    return key, f, info


def run_link_chua(cfg: LinkConfig) -> LinkResult:
    """Circuit B: VC1 feeds the comparator, VC2 is sent as the sync signal."""
    cfg = cfg.resolved()
    if cfg.circuit is not Circuit.B:
        raise ValueError("run_link_chua needs circuit B")
    n = _check_steps(cfg)
    dt, p = cfg.dt, cfg.params
    msg = generate_message(cfg.message, dt, n)
    diode = p.diode_args()
    il_guard = cfg.guard * CURRENT_SCALE

    x0 = cfg.tx_initial
    out, fail = K.chua_free(x0[0], x0[1], x0[2], n - 1, dt, p.G, p.C1, p.C2, p.L, *diode, cfg.guard, il_guard)
    _raise_if_failed(fail, dt, cfg.guard, "circuit B transmitter")
    tx_states = {name: msg.with_samples(out[:, j]) for j, name in enumerate(("VC1", "VC2", "iL"))}
    key, f, info = _masked_info(cfg, msg, out[:, 0])
    sync = tx_states["VC2"]
    sync_rx, info_rx = _noisy_pair(cfg, sync, info)

    r0 = cfg.rx_initial
    rx, fail = K.chua_receive(
        r0[0], r0[2], np.ascontiguousarray(sync_rx.samples), dt, p.G, p.C1, p.L, *diode, cfg.guard, il_guard
    )
    _raise_if_failed(fail, dt, cfg.guard, "circuit B receiver")
    rx_states = {"VC1": msg.with_samples(rx[:, 0]), "VC2": sync_rx, "iL": msg.with_samples(rx[:, 1])}
    channel = {"sync": sync, "sync_rx": sync_rx, "vout": info, "vout_rx": info_rx}
    codec_signals, vm = _receiver_decode(cfg, msg, info_rx, rx[:, 0])
    codec_signals = {"M": msg, "HS": msg.with_samples(5.0 * key), "F": msg.with_samples(5.0 * f), **codec_signals}
    report = _report(cfg, msg, vm, tx_states["VC1"], rx_states["VC1"])
    return LinkResult(cfg, tx_states, rx_states, channel, codec_signals, vm, report)


def run_link_lorenz(cfg: LinkConfig) -> LinkResult:
    """Circuits Ca (V1 sent, V3 compared) and Cb (V3 sent, V1 compared)."""
    cfg = cfg.resolved()
    if cfg.circuit not in (Circuit.CA, Circuit.CB):
        raise ValueError("run_link_lorenz needs circuit ca or cb")
    n = _check_steps(cfg)
    dt, p = cfg.dt, cfg.params
    a1, b1, c3, d3, e2, f2 = p.coefficients()
    msg = generate_message(cfg.message, dt, n)
    x0 = cfg.tx_initial
    out, fail = K.lorenz_free(x0[0], x0[1], x0[2], n - 1, dt, a1, b1, c3, d3, e2, f2, cfg.guard)
    _raise_if_failed(fail, dt, cfg.guard, f"circuit {cfg.circuit.value} transmitter")
    tx_states = {name: msg.with_samples(out[:, j]) for j, name in enumerate(("V1", "V2", "V3"))}
    cmp_name = COMPARATOR_VAR[cfg.circuit]
    sync_name = SYNC_VAR[cfg.circuit]
    key, f, info = _masked_info(cfg, msg, tx_states[cmp_name].samples)
    sync = tx_states[sync_name]
    sync_rx, info_rx = _noisy_pair(cfg, sync, info)
    drive = np.ascontiguousarray(sync_rx.samples)
    r0 = cfg.rx_initial

    if cfg.circuit is Circuit.CA:
        rx, fail = K.lorenz_receive_v1(r0[1], r0[2], drive, dt, c3, d3, e2, f2, cfg.guard)
        rx_states = {"V1": sync_rx, "V2": msg.with_samples(rx[:, 0]), "V3": msg.with_samples(rx[:, 1])}
    else:
        rx, fail = K.lorenz_receive_v3(r0[0], r0[1], drive, dt, a1, b1, e2, f2, cfg.guard)
        rx_states = {"V1": msg.with_samples(rx[:, 0]), "V2": msg.with_samples(rx[:, 1]), "V3": sync_rx}
    _raise_if_failed(fail, dt, cfg.guard, f"circuit {cfg.circuit.value} receiver")

    channel = {"sync": sync, "sync_rx": sync_rx, "vout": info, "vout_rx": info_rx}
    codec_signals, vm = _receiver_decode(cfg, msg, info_rx, rx_states[cmp_name].samples)
    codec_signals = {"M": msg, "HS": msg.with_samples(5.0 * key), "F": msg.with_samples(5.0 * f), **codec_signals}
    report = _report(cfg, msg, vm, tx_states[cmp_name], rx_states[cmp_name])
    return LinkResult(cfg, tx_states, rx_states, channel, codec_signals, vm, report)


def run_link(cfg: LinkConfig) -> LinkResult:
    c = Circuit.parse(cfg.circuit)
    if c is Circuit.A:
        return run_link_a(cfg)
    if c is Circuit.B:
        return run_link_chua(cfg)
    return run_link_lorenz(cfg)


# ------------------------------------------------------------------ sweeps

SWEEP_COLUMNS = (
    "circuit", "placement", "amplitude_pct", "repeat", "ber", "ber_polarity_agnostic",
    "sync_rms", "corr", "antisync", "glitches", "error",
)


def repeat_config(base: LinkConfig, amplitude: float, repeat: int) -> LinkConfig:
    """Config of one sweep cell; repeat ``k`` uses a seed derived from ``base.seed``."""
    seed = derive_seed(base.seed, repeat)
    placement = base.noise.placement if base.noise is not None else DEFAULT_PLACEMENT[base.circuit]
    return dataclasses.replace(base, seed=seed, noise=NoiseSpec(float(amplitude), placement, seed))


def _sweep_cell(args) -> dict:
    base, amplitude, repeat = args
    cfg = repeat_config(base, amplitude, repeat)
    row = {
        "circuit": cfg.circuit.value,
        "placement": cfg.noise.placement.value,
        "amplitude_pct": float(amplitude),
        "repeat": int(repeat),
    }
    try:
        rep = run_link(cfg).report
    except (SimulationDiverged, ValueError) as exc:
        row.update(ber=math.nan, ber_polarity_agnostic=math.nan, sync_rms=math.nan, corr=math.nan,
                   antisync=False, glitches=-1, error=str(exc))
        return row
    row.update(
        ber=rep.ber,
        ber_polarity_agnostic=rep.ber_polarity_agnostic,
        sync_rms=rep.sync_rms,
        corr=rep.correlation,
        antisync=rep.antisync,
        glitches=rep.glitches,
        error="",
    )
    return row


def worker_count() -> int:
    cap = os.environ.get("CHAOSCOMM_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = max(1, min(n, int(cap)))
    return n


def sweep_noise(base: LinkConfig, amplitudes: Iterable[float], repeats: int = 1, workers: int | None = None) -> list[dict]:
    """Run every (amplitude, repeat) cell; rows come back in that order.

    Failures are recorded in the row's ``error`` field instead of raising.
    """
    amplitudes = [float(a) for a in amplitudes]
    if not amplitudes:
        raise ValueError("need at least one noise amplitude")
    if any(a < 0 for a in amplitudes):
        raise ValueError("noise amplitudes must be non-negative")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    cells = [(base, a, r) for a in amplitudes for r in range(repeats)]
    workers = workers or worker_count()
    if workers == 1:
        return [_sweep_cell(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, cells))


def summarize_sweep(rows: list[dict]) -> list[dict]:
    """Aggregate sweep rows per (circuit, placement, amplitude)."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["circuit"], row["placement"], row["amplitude_pct"]), []).append(row)
    out = []
    for (circuit, placement, amp), rs in groups.items():
        good = [r for r in rs if not r["error"]]
        ber = np.array([r["ber"] for r in good], dtype=float)
        pa = np.array([r["ber_polarity_agnostic"] for r in good], dtype=float)
        sync = np.array([r["sync_rms"] for r in good], dtype=float)
        anti = np.array([r["antisync"] for r in good], dtype=bool)
        out.append({
            "circuit": circuit,
            "placement": placement,
            "amplitude_pct": amp,
            "runs": len(rs),
            "failed": len(rs) - len(good),
            "ber_mean": float(ber.mean()) if ber.size else math.nan,
            "ber_std": float(ber.std()) if ber.size else math.nan,
            "ber_pa_mean": float(pa.mean()) if pa.size else math.nan,
            "sync_rms_mean": float(sync.mean()) if sync.size else math.nan,
            "antisync_fraction": float(anti.mean()) if anti.size else math.nan,
        })
    return out
