"""Four-channel PID autopilot: Mach, angle of attack, bank and sideslip.

Errors are formed as ``desired - measured`` in degrees for the angle channels
and in Mach units for the speed channel.  Each channel output is multiplied by
a per-channel sign that maps "increase the tracked quantity" onto the
actuator's deflection convention, then clipped to the actuator bounds.

``pid_step`` keeps the textbook-with-a-twist form ``kp e + ki I - kd de/dt``;
``derivative_sign`` flips the last term.  The bank defaults to -1, i.e. the
derivative adds damping, because the literal form destabilises the pitch and
sideslip loops of the shipped airframe.

Controller memory lives in a small float array (integral, previous error,
primed flag per channel) so the compiled combat loop can thread it without
Python objects.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .airframe import ControlSurfaces, default_aircraft, isa, wrap_angle

CHANNELS = ("mach", "alpha", "roll", "sideslip")
MACH_TARGET = 0.9


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    windup: float = math.inf  # bound on |ki * integral|

    def __post_init__(self):
        vals = (self.kp, self.ki, self.kd)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("PID gains must be finite")
        if not any(vals):
            raise ValueError("at least one PID gain must be nonzero")
        if not self.windup > 0:
            raise ValueError("windup bound must be positive")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    primed: bool = False


DEFAULT_GAINS = (
    PidGains(10.0, 0.0, 0.0),
    PidGains(8.0, 8.0, 4.0),
    PidGains(0.07, 0.0, 0.0),
    PidGains(12.0, 0.0, 4.0),
)
# throttle raises Mach; trailing-edge-down elevator and right-wing-down-positive
# aileron both act against the tracked angle; positive rudder raises sideslip
DEFAULT_SIGNS = (1.0, -1.0, -1.0, 1.0)


@njit(cache=True)
def pid_kernel(mem, k, kp, ki, kd, windup, e, dt, dsign):
    """Advance channel ``k`` of ``mem`` (shape 4x3) and return the raw output."""
    integral = mem[k, 0]
    if ki != 0.0:
        integral += e * dt
        bound = windup / abs(ki)
        integral = min(max(integral, -bound), bound)
    rate = (e - mem[k, 1]) / dt if mem[k, 2] > 0.0 else 0.0
    mem[k, 0] = integral
    mem[k, 1] = e
    mem[k, 2] = 1.0
    return kp * e + ki * integral - dsign * kd * rate


@njit(cache=True)
def control_kernel(x, alpha_d, phi_d, mem, gains, signs, lower, upper, dt, mach_target, dsign):
    """Actuator commands for setpoints in degrees; updates ``mem`` in place.

    ``gains`` is a 4x4 array of (kp, ki, kd, windup) rows in channel order.
    """
    u, v, w = x[3], x[4], x[5]
    vt = math.sqrt(u * u + v * v + w * w)
    mach = vt / isa(-x[2])[1]
    alpha = math.degrees(math.atan2(w, u))
    beta = math.degrees(math.asin(min(max(v / vt, -1.0), 1.0))) if vt > 0.0 else 0.0
    errors = (
        mach_target - mach,
        alpha_d - alpha,
        math.degrees(wrap_angle(math.radians(phi_d) - x[6])),
        -beta,
    )
    cmd = np.empty(4)
    for k in range(4):
        raw = pid_kernel(mem, k, gains[k, 0], gains[k, 1], gains[k, 2], gains[k, 3],
                         errors[k], dt, dsign)
        cmd[k] = min(max(signs[k] * raw, lower[k]), upper[k])
    return cmd


def pid_step(gains, state, value, desired, dt, derivative_sign=1.0):
    """One discrete PID update: ``kp e + ki integral - kd de/dt`` with ``e = desired - value``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    mem = np.zeros((1, 3))
    mem[0] = (state.integral, state.prev_error, 1.0 if state.primed else 0.0)
    out = pid_kernel(mem, 0, gains.kp, gains.ki, gains.kd, gains.windup,
                     float(desired) - float(value), float(dt), derivative_sign)
    return out, PidState(float(mem[0, 0]), float(mem[0, 1]), True)


@dataclass
class ControllerBank:
    """Gains, memory, output signs and clip bounds of the four channels."""

    gains: tuple = DEFAULT_GAINS
    signs: tuple = DEFAULT_SIGNS
    lower: np.ndarray = None
    upper: np.ndarray = None
    mach_target: float = MACH_TARGET
    derivative_sign: float = -1.0
    windup_fraction: float = 0.5
    memory: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))

    def __post_init__(self):
        if self.lower is None or self.upper is None:
            ac = default_aircraft()
            self.lower = ac.lower.copy() if self.lower is None else self.lower
            self.upper = ac.upper.copy() if self.upper is None else self.upper
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if len(self.gains) != 4 or len(self.signs) != 4:
            raise ValueError("controller bank needs exactly four channels")

    @classmethod
    def for_aircraft(cls, config, **kw):
        return cls(lower=config.lower.copy(), upper=config.upper.copy(), **kw)

    def gain_matrix(self):
        g = np.empty((4, 4))
        for k, gk in enumerate(self.gains):
            bound = min(gk.windup, self.windup_fraction * (self.upper[k] - self.lower[k]))
            g[k] = (gk.kp, gk.ki, gk.kd, bound)
        return g

    def states(self):
        return tuple(PidState(float(i), float(p), bool(f)) for i, p, f in self.memory)

    def integral_bounds(self):
        g = self.gain_matrix()
        return np.where(g[:, 1] != 0, g[:, 3] / np.where(g[:, 1] != 0, np.abs(g[:, 1]), 1), 0.0)


def reset(bank):
    """Zero every channel's integral and derivative memory (in place)."""
    bank.memory[:] = 0.0
    return bank


def control_law(state, airdata, setpoints, bank, dt):
    """Actuator commands tracking ``setpoints`` (degrees); advances ``bank`` memory.

    ``airdata`` is accepted for interface symmetry; the kernel recomputes the
    same quantities from ``state`` so both paths stay identical.
    """
    cmd = control_kernel(state.as_array(), float(setpoints.alpha_d), float(setpoints.phi_d),
                         bank.memory, bank.gain_matrix(), np.asarray(bank.signs, dtype=float),
                         bank.lower, bank.upper, float(dt), float(bank.mach_target), float(bank.derivative_sign))
    return ControlSurfaces.from_array(cmd)
