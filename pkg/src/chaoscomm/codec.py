"""Comparator keystream, XOR masking, receiver RC filter and threshold decode."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .signals import Trace

LOGIC_HIGH = 5.0


@dataclass(frozen=True)
class CodecParams:
    """Second-stage settings shared by transmitter and receiver.

    ``kappa`` is the output pot ratio; the mask amplitude is ``kappa * 5 V``.
    """

    Vo: float = 2.0
    kappa: float = 1.0
    mask_high: float = LOGIC_HIGH
    decode_threshold: float = 2.5
    Vsat: float = 7.5

    def __post_init__(self):
        if not 0 < self.kappa <= 1:
            raise ValueError(f"kappa must lie in (0, 1], got {self.kappa!r}")
        for name in ("Vo", "mask_high", "decode_threshold", "Vsat"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def mask_amplitude(self) -> float:
        return self.kappa * self.mask_high


@dataclass(frozen=True)
class LevelShiftParams:
    """Nominal parts of the +/-Vsat -> {0, 5 V} shifter.

    Documentation only: the shifter is modelled as an ideal instantaneous map.
    """

    RD: float = 1e3
    zener_clamp: float = 5.0
    R1_ratio: float = 0.5


class FilterId(enum.Enum):
    FILTER1 = "1"
    FILTER2 = "2"
    FILTER3 = "3"
    NONE = "none"


@dataclass(frozen=True)
class FilterSpec:
    id: FilterId
    Re: float = math.nan
    Ce: float = math.nan

    def __post_init__(self):
        if self.id is not FilterId.NONE and not (self.Re > 0 and self.Ce > 0):
            raise ValueError("filter needs positive Re and Ce")

    @property
    def is_none(self) -> bool:
        return self.id is FilterId.NONE

    @property
    def tau(self) -> float:
        return self.Re * self.Ce

    @property
    def cutoff_hz(self) -> float:
        return 1.0 / (2.0 * math.pi * self.tau)

    def gain(self, frequency: float) -> float:
        """Steady-state sinusoidal amplitude ratio ``1/sqrt(1 + (w Re Ce)^2)``."""
        if self.is_none:
            return 1.0
        w = 2.0 * math.pi * frequency
        return 1.0 / math.sqrt(1.0 + (w * self.tau) ** 2)


FILTERS = {
    FilterId.FILTER1: FilterSpec(FilterId.FILTER1, 40.0, 7e-9),
    FilterId.FILTER2: FilterSpec(FilterId.FILTER2, 1e3, 2.5e-9),
    FilterId.FILTER3: FilterSpec(FilterId.FILTER3, 1e3, 7e-9),
    FilterId.NONE: FilterSpec(FilterId.NONE),
}


def get_filter(key) -> FilterSpec:
    """Look up a filter by id, ``"1"``/``"2"``/``"3"``/``"none"`` or number."""
    if isinstance(key, FilterSpec):
        return key
    if isinstance(key, FilterId):
        return FILTERS[key]
    text = str(key).strip().lower()
    if text in ("0", "", "off"):
        text = "none"
    try:
        return FILTERS[FilterId(text)]
    except ValueError:
        raise ValueError(f"unknown filter {key!r}; choose 1, 2, 3 or none") from None


def comparator_bit(v: float, Vo: float) -> int:
    """Keystream bit: 0 when ``v`` is above the reference, 1 otherwise (ties -> 1)."""
    return 0 if v > Vo else 1


def xor_mask(m: int, h: int, p: CodecParams) -> float:
    if m not in (0, 1) or h not in (0, 1):
        raise ValueError("bits must be 0 or 1")
    return p.mask_amplitude * (m ^ h)


def bit_from_voltage(v: float, threshold: float = 2.5) -> int:
    return 1 if v > threshold else 0


def lowpass_step(state: float, vin: float, dt: float, f: FilterSpec) -> float:
    """Advance the RC filter by ``dt`` with ``vin`` held constant (exact update)."""
    if f.is_none:
        raise ValueError("lowpass_step needs a real filter")
    if not 0 < dt < f.tau:
        raise ValueError(f"dt={dt:g} s must be below the filter time constant {f.tau:g} s")
    return vin + (state - vin) * math.exp(-dt / f.tau)


def filter_trace(vin: Trace, f: FilterSpec, v0: float = 0.0) -> Trace:
    """Run a whole trace through the filter; ``None`` passes it through unchanged."""
    if f.is_none:
        return vin
    if not vin.dt < f.tau:
        raise ValueError(f"dt={vin.dt:g} s must be below the filter time constant {f.tau:g} s")
    out = K.lowpass_run(np.ascontiguousarray(vin.samples), float(v0), math.exp(-vin.dt / f.tau))
    return vin.with_samples(out)


def threshold_decode(vc: float, p: CodecParams | None = None) -> float:
    """Receiver output level: 0 V up to the threshold, 5 V above it."""
    thr = 2.5 if p is None else p.decode_threshold
    return LOGIC_HIGH if vc > thr else 0.0


def threshold_decode_trace(vc: Trace, p: CodecParams | None = None) -> Trace:
    thr = 2.5 if p is None else p.decode_threshold
    return vc.with_samples(np.where(vc.samples > thr, LOGIC_HIGH, 0.0))


def keystream_bits(samples: np.ndarray, Vo: float) -> np.ndarray:
    return np.where(np.asarray(samples) > Vo, 0, 1).astype(np.uint8)


def keystream_trace(chaotic_component: Trace, Vo: float) -> Trace:
    """Comparator plus level shift, samplewise: 5 V where the bit is 1, else 0 V."""
    bits = keystream_bits(chaotic_component.samples, Vo)
    return chaotic_component.with_samples(bits * LOGIC_HIGH)
