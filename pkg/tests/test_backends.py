"""The numba kernels and their pure-Python fallback must agree."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from chaoscomm import _kernels as K
from chaoscomm._jit import USE_NUMBA
from chaoscomm.codec import FILTERS, FilterId
from chaoscomm.oscillators import ChuaParams, CircuitAParams, LorenzLikeParams

needs_numba = pytest.mark.skipif(not USE_NUMBA, reason="numba backend disabled")

A = CircuitAParams()
C = ChuaParams()
LZ = LorenzLikeParams().coefficients()
N = 3000
MSG = (np.arange(N) // 400 % 2).astype(np.uint8)
DRIVE = np.sin(np.arange(N) * 2e-3) * 2.0

CASES = {
    "circuit_a_free": (K.circuit_a_free, (0.1, -0.1, 2.5, N, 1e-7, 1 / A.rc, A.leak, A.drive_gain, 100.0)),
    "circuit_a_transmit": (K.circuit_a_transmit, (0.1, -0.1, MSG, 1e-7, 2.0, 5.0, 1 / A.rc, A.leak, A.drive_gain, 100.0)),
    "circuit_a_receive": (K.circuit_a_receive, (0.0, 0.0, DRIVE, 1e-7, 1 / A.rc, A.leak, A.drive_gain, 100.0)),
    "chua_free": (K.chua_free, (0.5, 0.0, 1e-4, N, 1e-7, C.G, C.C1, C.C2, C.L, *C.diode_args(), 100.0, 0.1)),
    "chua_receive": (K.chua_receive, (0.0, 0.0, DRIVE, 1e-7, C.G, C.C1, C.L, *C.diode_args(), 100.0, 0.1)),
    "lorenz_free": (K.lorenz_free, (0.1, -5.0, 0.1, N, 1e-8, *LZ, 100.0)),
    "lorenz_receive_v1": (K.lorenz_receive_v1, (-5.0, 0.1, DRIVE * 0.5, 1e-8, LZ[2], LZ[3], LZ[4], LZ[5], 100.0)),
    "lorenz_receive_v3": (K.lorenz_receive_v3, (0.1, -5.0, DRIVE, 1e-8, LZ[0], LZ[1], LZ[4], LZ[5], 100.0)),
    "lowpass_run": (K.lowpass_run, (DRIVE, 0.0, K.decay_factor(1e-7, FILTERS[FilterId.FILTER2].tau))),
}


def _flatten(out):
    if isinstance(out, tuple):
        return [np.asarray(x, dtype=float) for x in out]
    return [np.asarray(out, dtype=float)]


@needs_numba
@pytest.mark.parametrize("name", sorted(CASES))
def test_py_func_matches_compiled(name):
    fn, args = CASES[name]
    fast = _flatten(fn(*args))
    slow = _flatten(fn.py_func(*args))
    for a, b in zip(fast, slow):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_env_flag_selects_python_backend():
    code = (
        "import json, numpy as np; from chaoscomm import _jit, _kernels as K;"
        "out, fail = K.lorenz_free(0.1, -5.0, 0.1, 2000, 1e-8, *__import__('chaoscomm.oscillators',"
        " fromlist=['x']).LorenzLikeParams().coefficients(), 100.0);"
        "print(json.dumps({'backend': _jit.BACKEND, 'last': out[-1].tolist(), 'fail': int(fail)}))"
    )
    env = dict(os.environ, CHAOSCOMM_NUMBA="0")
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    got = json.loads(proc.stdout)
    assert got["backend"] == "python"
    out, fail = K.lorenz_free(0.1, -5.0, 0.1, 2000, 1e-8, *LZ, 100.0)
    assert got["fail"] == fail
    np.testing.assert_allclose(got["last"], out[-1], rtol=1e-12)
