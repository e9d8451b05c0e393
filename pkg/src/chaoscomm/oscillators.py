"""The three chaotic oscillators and a fixed-step RK4 integrator.

Parameter classes carry the component values of the three circuits and
expose the derived coefficients the vector fields use. The scalar ``*_rhs``
functions are the readable reference forms; bulk integration goes through
the compiled loops in :mod:`chaoscomm._kernels`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from .signals import Trace

DEFAULT_GUARD = 100.0
# inductor current lives on the mA scale; its guard is scaled like its ICs
CURRENT_SCALE = 1e-3


class SimulationDiverged(RuntimeError):
    """A state component left the blow-up guard (or became non-finite)."""

    def __init__(self, time: float, guard: float, where: str = "simulation"):
        self.time = time
        self.guard = guard
        super().__init__(f"{where} diverged at t={time:.9g} s (|state| > {guard:g})")


class System(enum.Enum):
    CIRCUIT_A = "a"
    CHUA = "chua"
    LORENZ_LIKE = "lorenz"


def _check_positive(obj, names):
    for name in names:
        v = getattr(obj, name)
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{type(obj).__name__}.{name} must be positive, got {v!r}")


def _check_finite(values, what="state"):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite {what}: {tuple(values)!r}")


# ------------------------------------------------------------- circuit A

@dataclass(frozen=True)
class CircuitAParams:
    R: float = 10e3
    Rs: float = 510e3
    Rf: float = 18e3
    C: float = 1e-9
    Vsat: float = 7.5
    R1: float = 10e3  # level-divider pot, not part of the dynamics

    def __post_init__(self):
        _check_positive(self, ("R", "Rs", "Rf", "C", "Vsat", "R1"))

    @property
    def rc(self) -> float:
        return self.R * self.C

    @property
    def leak(self) -> float:
        return self.R / self.Rs

    @property
    def drive_gain(self) -> float:
        return self.R / self.Rf


class CircuitAState(NamedTuple):
    V1: float
    V2: float


def circuit_a_rhs(s: CircuitAState, vout_drive: float, p: CircuitAParams) -> CircuitAState:
    """Time derivative of the two-integrator oscillator under drive ``vout_drive``."""
    _check_finite((*s, vout_drive))
    v1, v2 = s
    v = -p.drive_gain * vout_drive - v2
    dv2 = (-v1 - p.leak * v2) / p.rc
    dv1 = (-v - p.leak * v1) / p.rc
    return CircuitAState(dv1, dv2)


# ------------------------------------------------------------- Chua-like

@dataclass(frozen=True)
class ChuaParams:
    """Chua-like oscillator with an op-amp negative-resistance diode.

    ``Rc_effective = (1 - pot_fraction) * pot_ohms``. With ``saturation``
    enabled the diode gets its outer segment of slope ``1/RA + 1/RB`` beyond
    ``E2 = Esat * Rg1 / (RA + Rg1)``, where the first op-amp clips.
    """

    C1: float = 10e-9
    C2: float = 100e-9
    L: float = 18e-3
    RB: float = 22e3
    Rg1: float = 2.2e3
    Rg2: float = 3.3e3
    RA: float = 220.0
    Esat: float = 7.5
    pot_fraction: float = 0.5
    pot_ohms: float = 2e3
    saturation: bool = True

    def __post_init__(self):
        _check_positive(self, ("C1", "C2", "L", "RB", "Rg1", "Rg2", "RA", "Esat", "pot_ohms"))
        if not 0.0 <= self.pot_fraction < 1.0:
            raise ValueError(f"pot_fraction must lie in [0, 1), got {self.pot_fraction!r}")

    @property
    def Rc_effective(self) -> float:
        return (1.0 - self.pot_fraction) * self.pot_ohms

    @property
    def G(self) -> float:
        return 1.0 / self.Rc_effective

    @property
    def m0(self) -> float:
        return 1.0 / self.RB - 1.0 / self.Rg1

    @property
    def m1(self) -> float:
        return -(1.0 / self.Rg1 + 1.0 / self.Rg2)

    @property
    def Bp(self) -> float:
        return self.Rg2 / (self.RB + self.Rg2) * self.Esat

    @property
    def m2(self) -> float:
        return 1.0 / self.RA + 1.0 / self.RB if self.saturation else self.m0

    @property
    def E2(self) -> float:
        return self.Esat * self.Rg1 / (self.RA + self.Rg1) if self.saturation else math.inf

    def diode_args(self) -> tuple[float, float, float, float, float]:
        e2 = self.E2 if self.saturation else 1e300
        return self.m0, self.m1, self.Bp, self.m2, e2


class ChuaState(NamedTuple):
    VC1: float
    VC2: float
    iL: float


def chua_nonlinearity(v: float, p: ChuaParams) -> float:
    """Current drawn by the negative-resistance diode at voltage ``v``."""
    _check_finite((v,), "voltage")
    return float(K.chua_g(float(v), *p.diode_args()))


def chua_rhs(s: ChuaState, p: ChuaParams) -> ChuaState:
    _check_finite(s)
    vc1, vc2, il = s
    G = p.G
    dvc1 = (G * (vc2 - vc1) - chua_nonlinearity(vc1, p)) / p.C1
    dvc2 = (G * (vc1 - vc2) + il) / p.C2
    dil = -vc2 / p.L
    return ChuaState(dvc1, dvc2, dil)


# ------------------------------------------------------------ Lorenz-like

@dataclass(frozen=True)
class LorenzLikeParams:
    """Lorenz-like analog computer.

    Coefficients (s^-1, or V^-1 s^-1 for the products)::

        dV1/dt = -a1*V1 - b1*V3
        dV2/dt = -e2*V2 + f2*V1*V3
        dV3/dt = -c3*V1 - d3*V1*V2

    By default the V3 input of the first summer carries the same
    ``R50/R`` gain as V1, and the V1*V2 product enters through ``R/R200``;
    ``literal_coefficients=True`` drops those resistor ratios (the
    ``1/(Rx*C*R)`` and ``1/(Rx*C*R200)`` forms), which leaves a
    non-chaotic slow drift.
    """

    R: float = 10e3
    R50: float = 50e3
    Rx: float = 1e3
    R200: float = 200e3
    R30: float = 30e3
    R3: float = 3e3
    R6: float = 6e3
    C: float = 100e-9
    Ry: float = 2e3  # carried for completeness, not part of the dynamics
    R100M: float = 100e6  # idem
    literal_coefficients: bool = False

    def __post_init__(self):
        _check_positive(self, ("R", "R50", "Rx", "R200", "R30", "R3", "R6", "C", "Ry", "R100M"))

    @property
    def base_rate(self) -> float:
        return 1.0 / (self.Rx * self.C)

    @property
    def multiplier_gain(self) -> float:
        return 1.0 + self.R30 / self.Rx

    @property
    def a1(self) -> float:
        return self.R50 / (self.Rx * self.C * self.R)

    @property
    def b1(self) -> float:
        if self.literal_coefficients:
            return 1.0 / (self.Rx * self.C * self.R)
        return self.R50 / (self.Rx * self.C * self.R)

    @property
    def c3(self) -> float:
        return self.R200 / (self.Rx * self.C * self.R)

    @property
    def d3(self) -> float:
        scale = 1.0 if self.literal_coefficients else self.R
        return scale / (self.Rx * self.C * self.R200) * self.multiplier_gain

    @property
    def e2(self) -> float:
        return self.R6 / (self.Rx * self.C * self.R3)

    @property
    def f2(self) -> float:
        return self.base_rate * self.multiplier_gain

    def coefficients(self) -> tuple[float, float, float, float, float, float]:
        return self.a1, self.b1, self.c3, self.d3, self.e2, self.f2


class LorenzLikeState(NamedTuple):
    V1: float
    V2: float
    V3: float


def lorenz_like_rhs(s: LorenzLikeState, p: LorenzLikeParams) -> LorenzLikeState:
    _check_finite(s)
    v1, v2, v3 = s
    a1, b1, c3, d3, e2, f2 = p.coefficients()
    return LorenzLikeState(
        -a1 * v1 - b1 * v3,
        -e2 * v2 + f2 * v1 * v3,
        -c3 * v1 - d3 * v1 * v2,
    )


# ------------------------------------------------------------ integration

def rk4_step(
    rhs: Callable[..., Sequence[float]],
    state,
    dt: float,
    *inputs,
    guard: float | None = DEFAULT_GUARD,
    t: float = 0.0,
) -> np.ndarray:
    """One classical RK4 step of ``rhs(state, *inputs)``.

    ``inputs`` are held fixed across the four stages. Raises
    :class:`SimulationDiverged` if the result leaves ``guard``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(state, dtype=np.float64)
    k1 = np.asarray(rhs(x, *inputs), dtype=np.float64)
    k2 = np.asarray(rhs(x + 0.5 * dt * k1, *inputs), dtype=np.float64)
    k3 = np.asarray(rhs(x + 0.5 * dt * k2, *inputs), dtype=np.float64)
    k4 = np.asarray(rhs(x + dt * k3, *inputs), dtype=np.float64)
    out = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)) or (guard is not None and np.any(np.abs(out) > guard)):
        raise SimulationDiverged(t + dt, guard if guard is not None else math.inf, "rk4_step")
    return out


COMPONENTS = {
    System.CIRCUIT_A: ("V1", "V2"),
    System.CHUA: ("VC1", "VC2", "iL"),
    System.LORENZ_LIKE: ("V1", "V2", "V3"),
}

DEFAULT_PARAMS = {
    System.CIRCUIT_A: CircuitAParams,
    System.CHUA: ChuaParams,
    System.LORENZ_LIKE: LorenzLikeParams,
}

# seeded initial conditions are drawn from [-IC_HALF_WIDTH, IC_HALF_WIDTH] times these
IC_HALF_WIDTH = 0.1
IC_SCALE = {
    System.CIRCUIT_A: (1.0, 1.0),
    System.CHUA: (1.0, 1.0, CURRENT_SCALE),
    System.LORENZ_LIKE: (1.0, 1.0, 1.0),
}


def random_initial_state(system: System, rng: np.random.Generator) -> np.ndarray:
    """Uniform perturbation around the origin; never exactly the origin."""
    scale = np.asarray(IC_SCALE[system])
    while True:
        x = rng.uniform(-IC_HALF_WIDTH, IC_HALF_WIDTH, size=scale.size) * scale
        if np.any(x != 0.0):
            return x


def free_run(
    system: System | str,
    params=None,
    initial=None,
    dt: float = 1e-7,
    n: int = 1000,
    *,
    vout: float = 0.0,
    guard: float = DEFAULT_GUARD,
    max_duration: float = 1.0,
) -> dict[str, Trace]:
    """Integrate an uncoupled oscillator for ``n`` steps (``n + 1`` samples).

    Circuit A is non-autonomous; its drive is held at the constant ``vout``.
    """
    system = System(system)
    if params is None:
        params = DEFAULT_PARAMS[system]()
    names = COMPONENTS[system]
    if initial is None:
        initial = np.full(len(names), 0.01)
    x0 = [float(v) for v in initial]
    if len(x0) != len(names):
        raise ValueError(f"{system.name} needs {len(names)} initial values")
    _check_finite(x0, "initial state")
    if not dt > 0 or n < 1:
        raise ValueError("need dt > 0 and n >= 1")
    if n * dt > max_duration:
        raise ValueError(f"run of {n * dt:g} s exceeds max_duration={max_duration:g} s")

    if system is System.CIRCUIT_A:
        p = params
        out, fail = K.circuit_a_free(
            x0[0], x0[1], float(vout), int(n), float(dt), 1.0 / p.rc, p.leak, p.drive_gain, guard
        )
    elif system is System.CHUA:
        p = params
        out, fail = K.chua_free(
            x0[0], x0[1], x0[2], int(n), float(dt), p.G, p.C1, p.C2, p.L,
            *p.diode_args(), guard, guard * CURRENT_SCALE,
        )
    else:
        out, fail = K.lorenz_free(x0[0], x0[1], x0[2], int(n), float(dt), *params.coefficients(), guard)
    if fail >= 0:
        raise SimulationDiverged(fail * dt, guard, f"{system.name} free run")
    return {name: Trace(out[:, j], dt) for j, name in enumerate(names)}


class AttractorScreen(NamedTuple):
    bounded: bool
    fixed_point: bool
    distinct_peaks: int

    @property
    def periodic(self) -> bool:
        return not self.fixed_point and self.distinct_peaks <= MAX_PERIODIC_PEAKS

    @property
    def chaotic(self) -> bool:
        return self.bounded and not self.fixed_point and not self.periodic


MAX_PERIODIC_PEAKS = 8


def screen_attractor(trace: Trace, tail: float = 0.5, bound: float = DEFAULT_GUARD, rel_tol: float = 1e-3) -> AttractorScreen:
    """Coarse classification of the long-time behaviour of one state variable.

    Only the last ``tail`` of the record is examined. The local maxima are
    clustered with tolerance ``rel_tol`` times the peak-to-peak range: a
    periodic orbit repeats a handful of peak heights, a chaotic one keeps
    producing new ones.
    """
    x = trace.samples[int(len(trace) * (1.0 - tail)):]
    if x.size < 3:
        raise ValueError("trace too short to screen")
    span = float(x.max() - x.min())
    bounded = bool(np.max(np.abs(x)) < bound)
    scale = max(1.0, float(np.max(np.abs(x))))
    if span <= 1e-6 * scale:
        return AttractorScreen(bounded, True, 0)
    half = x.size // 2
    late, early = np.ptp(x[half:]), np.ptp(x[:half])
    if late < 0.5 * early:
        # amplitude still shrinking: spiralling into an equilibrium
        return AttractorScreen(bounded, True, 0)
    peaks = np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:])) + 1
    if peaks.size < 2:
        # still creeping toward an equilibrium or a very slow orbit
        return AttractorScreen(bounded, peaks.size == 0, int(peaks.size))
    heights = np.sort(x[peaks])
    distinct = 1 + int(np.count_nonzero(np.diff(heights) > rel_tol * span))
    return AttractorScreen(bounded, False, distinct)
