"""Additive Gaussian channel noise.

The noise standard deviation is ``A/100`` times the mean absolute amplitude
of the clean channel signal. One noise value is drawn per simulation step
and held for that step.

Random streams come from numpy's PCG64 seeded through a ``SeedSequence``
whose spawn key is the channel role, so the sync and info channels draw
independent, platform-stable sequences from a single user seed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .signals import Trace


class Placement(enum.Enum):
    SYNC_ONLY = "sync"
    INFO_ONLY = "info"
    BOTH = "both"
    SHARED = "shared"  # circuit A: one channel carries sync and information

    @property
    def noisy_sync(self) -> bool:
        return self in (Placement.SYNC_ONLY, Placement.BOTH, Placement.SHARED)

    @property
    def noisy_info(self) -> bool:
        return self in (Placement.INFO_ONLY, Placement.BOTH, Placement.SHARED)


class Stream(enum.IntEnum):
    SHARED = 0
    SYNC = 1
    INFO = 2
    INITIAL = 3


@dataclass(frozen=True)
class NoiseSpec:
    amplitude_percent: float = 0.0
    placement: Placement = Placement.BOTH
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.amplitude_percent <= 100.0:
            raise ValueError(f"noise amplitude must lie in [0, 100] %, got {self.amplitude_percent!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "placement", Placement(self.placement))
        object.__setattr__(self, "seed", int(self.seed))


def rng_for(seed: int, stream: int) -> np.random.Generator:
    """Generator for sub-stream ``stream`` of ``seed`` (PCG64)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, index: int) -> int:
    """Deterministic 64-bit child seed, used for sweep repeats."""
    ss = np.random.SeedSequence(entropy=[int(seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def noise_sigma(clean: Trace, amplitude_percent: float) -> float:
    if amplitude_percent == 0:
        return 0.0
    mean_amp = float(np.mean(np.abs(clean.samples)))
    if mean_amp == 0.0:
        raise ValueError("noise amplitude is relative to the mean signal amplitude, which is zero")
    return amplitude_percent / 100.0 * mean_amp


def add_noise(clean: Trace, spec: NoiseSpec, stream: int = Stream.SHARED) -> Trace:
    """Return ``clean`` plus white Gaussian noise scaled per ``spec``."""
    sigma = noise_sigma(clean, spec.amplitude_percent)
    if sigma == 0.0:
        return clean
    noise = rng_for(spec.seed, stream).standard_normal(len(clean)) * sigma
    return clean.with_samples(clean.samples + noise)
