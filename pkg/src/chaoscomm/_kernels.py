"""Inner integration loops.

Every function here is scalar code in the numba-compatible subset and is
compiled by :func:`chaoscomm._jit.jit` unless ``CHAOSCOMM_NUMBA=0``.
Loops return ``(outputs..., fail)`` where ``fail`` is ``-1`` on success or
the index of the first sample that breached the blow-up guard.

Exogenous inputs are sampled once per step and held across the four RK4
stages (zero-order hold).
"""

import math

import numpy as np

from ._jit import jit


@jit
def chua_g(v, m0, m1, bp, m2, e2):
    g = m0 * v + 0.5 * (m1 - m0) * (abs(v + bp) - abs(v - bp))
    if m2 != m0:
        g += 0.5 * (m2 - m0) * (2.0 * v - abs(v + e2) + abs(v - e2))
    return g


@jit
def circuit_a_deriv(v1, v2, vout, inv_rc, leak, gain):
    # V = -gain*vout - v2 enters the first integrator with a minus sign
    d1 = (gain * vout + v2 - leak * v1) * inv_rc
    d2 = (-v1 - leak * v2) * inv_rc
    return d1, d2


@jit
def chua_deriv(x, y, il, G, c1, c2, ind, m0, m1, bp, m2, e2):
    dx = (G * (y - x) - chua_g(x, m0, m1, bp, m2, e2)) / c1
    dy = (G * (x - y) + il) / c2
    di = -y / ind
    return dx, dy, di


@jit
def lorenz_deriv(v1, v2, v3, a1, b1, c3, d3, e2, f2):
    d1 = -a1 * v1 - b1 * v3
    d2 = -e2 * v2 + f2 * v1 * v3
    d3_ = -c3 * v1 - d3 * v1 * v2
    return d1, d2, d3_


@jit
def _breached(x, guard):
    return not (abs(x) <= guard)


# ---------------------------------------------------------------- free runs

@jit
def circuit_a_free(v1, v2, vout, n, dt, inv_rc, leak, gain, guard):
    out = np.empty((n + 1, 2))
    out[0, 0] = v1
    out[0, 1] = v2
    h = 0.5 * dt
    for k in range(n):
        a1, a2 = circuit_a_deriv(v1, v2, vout, inv_rc, leak, gain)
        b1, b2 = circuit_a_deriv(v1 + h * a1, v2 + h * a2, vout, inv_rc, leak, gain)
        c1, c2 = circuit_a_deriv(v1 + h * b1, v2 + h * b2, vout, inv_rc, leak, gain)
        d1, d2 = circuit_a_deriv(v1 + dt * c1, v2 + dt * c2, vout, inv_rc, leak, gain)
        v1 += dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        v2 += dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        out[k + 1, 0] = v1
        out[k + 1, 1] = v2
        if _breached(v1, guard) or _breached(v2, guard):
            return out, k + 1
    return out, -1


@jit
def chua_free(x, y, il, n, dt, G, c1, c2, ind, m0, m1, bp, m2, e2, guard, il_guard):
    out = np.empty((n + 1, 3))
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = il
    h = 0.5 * dt
    for k in range(n):
        a1, a2, a3 = chua_deriv(x, y, il, G, c1, c2, ind, m0, m1, bp, m2, e2)
        b1, b2, b3 = chua_deriv(x + h * a1, y + h * a2, il + h * a3, G, c1, c2, ind, m0, m1, bp, m2, e2)
        q1, q2, q3 = chua_deriv(x + h * b1, y + h * b2, il + h * b3, G, c1, c2, ind, m0, m1, bp, m2, e2)
        d1, d2, d3 = chua_deriv(x + dt * q1, y + dt * q2, il + dt * q3, G, c1, c2, ind, m0, m1, bp, m2, e2)
        x += dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * q1 + d1)
        y += dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * q2 + d2)
        il += dt / 6.0 * (a3 + 2.0 * b3 + 2.0 * q3 + d3)
        out[k + 1, 0] = x
        out[k + 1, 1] = y
        out[k + 1, 2] = il
        if _breached(x, guard) or _breached(y, guard) or _breached(il, il_guard):
            return out, k + 1
    return out, -1


@jit
def lorenz_free(v1, v2, v3, n, dt, a1, b1, c3, d3, e2, f2, guard):
    out = np.empty((n + 1, 3))
    out[0, 0] = v1
    out[0, 1] = v2
    out[0, 2] = v3
    h = 0.5 * dt
    for k in range(n):
        k11, k12, k13 = lorenz_deriv(v1, v2, v3, a1, b1, c3, d3, e2, f2)
        k21, k22, k23 = lorenz_deriv(v1 + h * k11, v2 + h * k12, v3 + h * k13, a1, b1, c3, d3, e2, f2)
        k31, k32, k33 = lorenz_deriv(v1 + h * k21, v2 + h * k22, v3 + h * k23, a1, b1, c3, d3, e2, f2)
        k41, k42, k43 = lorenz_deriv(v1 + dt * k31, v2 + dt * k32, v3 + dt * k33, a1, b1, c3, d3, e2, f2)
        v1 += dt / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        v2 += dt / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        v3 += dt / 6.0 * (k13 + 2.0 * k23 + 2.0 * k33 + k43)
        out[k + 1, 0] = v1
        out[k + 1, 1] = v2
        out[k + 1, 2] = v3
        if _breached(v1, guard) or _breached(v2, guard) or _breached(v3, guard):
            return out, k + 1
    return out, -1


# ------------------------------------------------------------ link stages

@jit
def circuit_a_transmit(v1, v2, message, dt, vo, ustar, inv_rc, leak, gain, guard):
    """Transmitter of the non-autonomous link; the masked output is its own drive."""
    n = message.shape[0]
    states = np.empty((n, 2))
    key = np.empty(n, dtype=np.uint8)
    vout = np.empty(n)
    h = 0.5 * dt
    for k in range(n):
        states[k, 0] = v1
        states[k, 1] = v2
        hk = 0 if v2 > vo else 1
        key[k] = hk
        u = ustar * (message[k] ^ hk)
        vout[k] = u
        if k == n - 1:
            break
        a1, a2 = circuit_a_deriv(v1, v2, u, inv_rc, leak, gain)
        b1, b2 = circuit_a_deriv(v1 + h * a1, v2 + h * a2, u, inv_rc, leak, gain)
        c1, c2 = circuit_a_deriv(v1 + h * b1, v2 + h * b2, u, inv_rc, leak, gain)
        d1, d2 = circuit_a_deriv(v1 + dt * c1, v2 + dt * c2, u, inv_rc, leak, gain)
        v1 += dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        v2 += dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        if _breached(v1, guard) or _breached(v2, guard):
            return states, key, vout, k + 1
    return states, key, vout, -1


@jit
def circuit_a_receive(v1, v2, received, dt, inv_rc, leak, gain, guard):
    n = received.shape[0]
    states = np.empty((n, 2))
    h = 0.5 * dt
    for k in range(n):
        states[k, 0] = v1
        states[k, 1] = v2
        if k == n - 1:
            break
        u = received[k]
        a1, a2 = circuit_a_deriv(v1, v2, u, inv_rc, leak, gain)
        b1, b2 = circuit_a_deriv(v1 + h * a1, v2 + h * a2, u, inv_rc, leak, gain)
        c1, c2 = circuit_a_deriv(v1 + h * b1, v2 + h * b2, u, inv_rc, leak, gain)
        d1, d2 = circuit_a_deriv(v1 + dt * c1, v2 + dt * c2, u, inv_rc, leak, gain)
        v1 += dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        v2 += dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        if _breached(v1, guard) or _breached(v2, guard):
            return states, k + 1
    return states, -1


@jit
def chua_receive(x, il, vc2, dt, G, c1, ind, m0, m1, bp, m2, e2, guard, il_guard):
    """Response subsystem (VC1, iL) with the received VC2 substituted."""
    n = vc2.shape[0]
    states = np.empty((n, 2))
    h = 0.5 * dt
    for k in range(n):
        states[k, 0] = x
        states[k, 1] = il
        if k == n - 1:
            break
        y = vc2[k]
        a1 = (G * (y - x) - chua_g(x, m0, m1, bp, m2, e2)) / c1
        b1 = (G * (y - (x + h * a1)) - chua_g(x + h * a1, m0, m1, bp, m2, e2)) / c1
        q1 = (G * (y - (x + h * b1)) - chua_g(x + h * b1, m0, m1, bp, m2, e2)) / c1
        d1 = (G * (y - (x + dt * q1)) - chua_g(x + dt * q1, m0, m1, bp, m2, e2)) / c1
        x += dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * q1 + d1)
        # the inductor current sees only the held input, so RK4 reduces to dt * rate
        il += dt * (-y / ind)
        if _breached(x, guard) or _breached(il, il_guard):
            return states, k + 1
    return states, -1


@jit
def lorenz_receive_v1(v2, v3, v1_in, dt, c3, d3, e2, f2, guard):
    """Response subsystem (V2, V3) driven by the received V1."""
    n = v1_in.shape[0]
    states = np.empty((n, 2))
    h = 0.5 * dt
    for k in range(n):
        states[k, 0] = v2
        states[k, 1] = v3
        if k == n - 1:
            break
        u = v1_in[k]
        a2 = -e2 * v2 + f2 * u * v3
        a3 = -c3 * u - d3 * u * v2
        b2 = -e2 * (v2 + h * a2) + f2 * u * (v3 + h * a3)
        b3 = -c3 * u - d3 * u * (v2 + h * a2)
        q2 = -e2 * (v2 + h * b2) + f2 * u * (v3 + h * b3)
        q3 = -c3 * u - d3 * u * (v2 + h * b2)
        r2 = -e2 * (v2 + dt * q2) + f2 * u * (v3 + dt * q3)
        r3 = -c3 * u - d3 * u * (v2 + dt * q2)
        v2 += dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * q2 + r2)
        v3 += dt / 6.0 * (a3 + 2.0 * b3 + 2.0 * q3 + r3)
        if _breached(v2, guard) or _breached(v3, guard):
            return states, k + 1
    return states, -1


@jit
def lorenz_receive_v3(v1, v2, v3_in, dt, a1, b1, e2, f2, guard):
    """Response subsystem (V1, V2) driven by the received V3."""
    n = v3_in.shape[0]
    states = np.empty((n, 2))
    h = 0.5 * dt
    for k in range(n):
        states[k, 0] = v1
        states[k, 1] = v2
        if k == n - 1:
            break
        u = v3_in[k]
        a1_ = -a1 * v1 - b1 * u
        a2 = -e2 * v2 + f2 * v1 * u
        b1_ = -a1 * (v1 + h * a1_) - b1 * u
        b2 = -e2 * (v2 + h * a2) + f2 * (v1 + h * a1_) * u
        q1 = -a1 * (v1 + h * b1_) - b1 * u
        q2 = -e2 * (v2 + h * b2) + f2 * (v1 + h * b1_) * u
        r1 = -a1 * (v1 + dt * q1) - b1 * u
        r2 = -e2 * (v2 + dt * q2) + f2 * (v1 + dt * q1) * u
        v1 += dt / 6.0 * (a1_ + 2.0 * b1_ + 2.0 * q1 + r1)
        v2 += dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * q2 + r2)
        if _breached(v1, guard) or _breached(v2, guard):
            return states, k + 1
    return states, -1


@jit
def lowpass_run(vin, v0, decay):
    """Exact first-order RC response to a sample-and-hold input.

    ``out[k]`` is the capacitor voltage at sample ``k``; the input held over
    ``[k, k+1)`` is ``vin[k]``.
    """
    n = vin.shape[0]
    out = np.empty(n)
    v = v0
    for k in range(n):
        out[k] = v
        v = vin[k] + (v - vin[k]) * decay
    return out


def decay_factor(dt, tau):
    return math.exp(-dt / tau)
