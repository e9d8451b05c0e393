"""Chaotic-masking link simulator: three transmitter/receiver pairs under channel noise."""

from ._jit import BACKEND
from .channel import NoiseSpec, Placement, add_noise
from .codec import CodecParams, FilterId, FilterSpec, FILTERS, get_filter
from .link import Circuit, LinkConfig, LinkResult, run_link, sweep_noise
from .metrics import SyncReport
from .oscillators import (
    ChuaParams,
    CircuitAParams,
    LorenzLikeParams,
    SimulationDiverged,
    System,
    free_run,
)
from .signals import MessageSpec, Trace, generate_message, read_trace_csv, write_trace_csv

__version__ = "0.1.0"
