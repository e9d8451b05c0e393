"""Time the integration kernels under numba and under the pure-Python fallback.

Each backend runs in its own interpreter because the choice is made once,
at import time, from ``CHAOSCOMM_NUMBA``::

    python3 benchmarks/bench_kernels.py --steps 200000
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def run_cases(steps: int, reps: int) -> dict:
    from chaoscomm import _kernels as K
    from chaoscomm._jit import BACKEND
    from chaoscomm.codec import FILTERS, FilterId
    from chaoscomm.oscillators import ChuaParams, CircuitAParams, LorenzLikeParams

    a = CircuitAParams()
    c = ChuaParams()
    lz = LorenzLikeParams().coefficients()
    msg = (np.arange(steps) // 800 % 2).astype(np.uint8)
    drive = np.sin(np.arange(steps) * 1e-3)
    decay = K.decay_factor(1e-7, FILTERS[FilterId.FILTER2].tau)
    cases = {
        "circuit_a_transmit": lambda: K.circuit_a_transmit(
            0.01, 0.02, msg, 1e-7, 2.0, 5.0, 1 / a.rc, a.leak, a.drive_gain, 100.0),
        "chua_free": lambda: K.chua_free(
            0.01, 0.01, 1e-5, steps, 1e-7, c.G, c.C1, c.C2, c.L, *c.diode_args(), 100.0, 0.1),
        "lorenz_free": lambda: K.lorenz_free(0.1, -5.0, 0.1, steps, 1e-8, *lz, 100.0),
        "lowpass_run": lambda: K.lowpass_run(drive, 0.0, decay),
    }
    out = {"backend": BACKEND}
    for name, fn in cases.items():
        fn()  # compile or warm caches
        best = min(_timed(fn) for _ in range(reps))
        out[name] = best
    return out


def _timed(fn) -> float:
    t = time.perf_counter()
    fn()
    return time.perf_counter() - t


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        print(json.dumps(run_cases(args.steps, args.reps)))
        return 0

    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, CHAOSCOMM_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, __file__, "--child", "--steps", str(args.steps), "--reps", str(args.reps)],
            env=env, capture_output=True, text=True, check=True,
        )
        res = json.loads(proc.stdout.strip().splitlines()[-1])
        results[res.pop("backend")] = res

    fast, slow = results["numba"], results["python"]
    print(f"steps={args.steps}")
    print(f"{'kernel':<20} {'numba_s':>10} {'python_s':>10} {'speedup':>9}")
    for name in fast:
        print(f"{name:<20} {fast[name]:>10.4f} {slow[name]:>10.4f} {slow[name] / fast[name]:>8.0f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
