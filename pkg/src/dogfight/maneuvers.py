"""Basic fighter maneuver library.

Every maneuver reduces to a pair of setpoints for the autopilot: desired angle
of attack and desired bank, both in degrees.  Target-relative maneuvers go
through the same guidance chain:

    aim point -> desired path angles -> trajectory-frame loads (n2, n3)
      -> bank and normal load -> angle of attack

Path-angle errors enter the load law in degrees, which is the unit the
default gain of 0.02 is scaled for (a one-degree error asks for roughly
``0.02 V / g`` extra g).

The compiled ``setpoints_kernel`` is what the combat loop calls; the public
functions wrap the same kernels for direct use and testing.
"""

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from numba import njit

from .airframe import G, _rotation, wrap_angle
from .errors import CoincidentPositionError, SingularityError, ZeroLoadError


class ManeuverId(IntEnum):
    PositionTracking = 0
    AttitudeTracking = 1
    StraightFlight = 2
    Climb = 3
    Somersault = 4
    SplitS = 5
    HighYoYo = 6
    LowYoYo = 7


N_MANEUVERS = len(ManeuverId)


class SplitSPhase(IntEnum):
    Reverse = 0
    Pull = 1
    Recover = 2


@dataclass(frozen=True)
class Setpoints:
    alpha_d: float  # deg
    phi_d: float  # deg


@dataclass(frozen=True)
class GuidanceParams:
    k_zeta: float = 0.02  # per degree of path-yaw error
    k_chi: float = 0.02  # per degree of path-pitch error
    k_alpha: float = 4.0  # deg of angle of attack per g
    alpha_min: float = -4.0
    alpha_max: float = 20.0
    alpha_full: float = 30.0
    load_min: float = -1.0
    load_max: float = 7.5
    k_h: float = 0.1
    climb_chi: float = 20.0  # deg
    inverted_tol: float = 10.0  # deg, split-S roll-over completion

    def as_array(self):
        return np.array([self.k_zeta, self.k_chi, self.k_alpha, self.alpha_min, self.alpha_max,
                         self.alpha_full, self.load_min, self.load_max, self.k_h,
                         self.climb_chi, self.inverted_tol])


DEFAULT_GUIDANCE = GuidanceParams()
_GP = DEFAULT_GUIDANCE.as_array()

# context array layout: active maneuver, split-S phase, held alpha (deg), previous theta (rad)
CTX_ACTIVE, CTX_PHASE, CTX_ALPHA_HOLD, CTX_PREV_THETA = 0, 1, 2, 3
CTX_SIZE = 4


@dataclass
class ManeuverContext:
    """Per-aircraft memory carried across substeps while a maneuver stays selected."""

    active: int = -1
    splits_phase: SplitSPhase = SplitSPhase.Reverse
    alpha_hold: float = 0.0
    prev_theta: float = 0.0

    def as_array(self):
        return np.array([self.active, int(self.splits_phase), self.alpha_hold, self.prev_theta],
                        dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(int(a[0]), SplitSPhase(int(a[1])), float(a[2]), float(a[3]))


@dataclass
class Simple3DofState:
    pos: np.ndarray
    V: float
    chi: float
    zeta: float

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float)


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _aim_angles(own_pos, target_pos, dz_offset):
    """Path pitch and yaw toward ``target_pos`` raised by ``dz_offset`` metres."""
    dx = target_pos[0] - own_pos[0]
    dy = target_pos[1] - own_pos[1]
    dz = target_pos[2] - own_pos[2]
    horiz = math.sqrt(dx * dx + dy * dy)
    return math.atan2(-dz + dz_offset, horiz), math.atan2(dy, dx)


@njit(cache=True)
def _loads(v, chi, e_chi_deg, e_zeta_deg, gp):
    n2 = v / G * gp[0] * e_zeta_deg * math.cos(chi)
    n3 = v / G * gp[1] * e_chi_deg + math.cos(chi)
    return n2, n3


@njit(cache=True)
def _alpha_from_load(n, gp):
    return min(max(gp[2] * n, gp[3]), gp[4])


@njit(cache=True)
def _bank_load(n2, n3, gp):
    phi = math.atan2(n2, n3)
    n = n2 * math.sin(phi) + n3 * math.cos(phi)
    return phi, min(max(n, gp[6]), gp[7])


@njit(cache=True)
def _path_angles(x):
    rot = _rotation(x[6], x[7], x[8])
    ve = rot @ x[3:6]
    return math.atan2(-ve[2], math.sqrt(ve[0] ** 2 + ve[1] ** 2)), math.atan2(ve[1], ve[0])


@njit(cache=True)
def _track(v, chi, e_chi, e_zeta, gp):
    """Setpoints (deg) from path-angle errors (rad) through the load chain."""
    n2, n3 = _loads(v, chi, math.degrees(wrap_angle(e_chi)), math.degrees(wrap_angle(e_zeta)), gp)
    if n2 == 0.0 and n3 == 0.0:
        return _alpha_from_load(0.0, gp), 0.0
    phi, n = _bank_load(n2, n3, gp)
    return _alpha_from_load(n, gp), math.degrees(wrap_angle(phi))


@njit(cache=True)
def _level_hold(v, chi, chi_d, gp):
    """Wings-level path-pitch hold (straight flight and climb)."""
    n2, n3 = _loads(v, chi, math.degrees(wrap_angle(chi_d - chi)), 0.0, gp)
    n = min(max(n3, gp[6]), gp[7])
    return _alpha_from_load(n, gp), 0.0


@njit(cache=True)
def _upright_or_inverted(phi):
    return 0.0 if abs(phi) <= 0.5 * math.pi else -180.0


@njit(cache=True)
def setpoints_kernel(mid, own, opp, ctx, gp):
    """Setpoints ``(alpha_d, phi_d)`` in degrees for maneuver ``mid``; updates ``ctx``.

    ``own`` and ``opp`` are 16-element airframe state vectors.
    """
    theta = own[7]
    if ctx[0] != mid:
        ctx[0] = mid
        ctx[1] = 0.0
        ctx[2] = math.degrees(math.atan2(own[5], own[3]))
        ctx[3] = theta
    v = math.sqrt(own[3] ** 2 + own[4] ** 2 + own[5] ** 2)
    chi, zeta = _path_angles(own)
    prev_theta = ctx[3]
    ctx[3] = theta

    if mid == 0 or mid == 1 or mid == 6 or mid == 7:
        offset = 0.0
        if mid >= 6:
            dh = gp[8] * v * v / G
            offset = dh if mid == 6 else -dh
        chi_d, zeta_d = _aim_angles(own[0:3], opp[0:3], offset)
        if mid == 1:
            return _track(v, chi, chi_d - theta, zeta_d - own[8], gp)
        return _track(v, chi, chi_d - chi, zeta_d - zeta, gp)
    if mid == 2:
        return _level_hold(v, chi, 0.0, gp)
    if mid == 3:
        return _level_hold(v, chi, math.radians(gp[9]), gp)
    if mid == 4:
        return gp[5], _upright_or_inverted(own[6])
    # split-S
    if ctx[1] == 0.0 and abs(math.degrees(wrap_angle(own[6] - math.pi))) < gp[10]:
        ctx[1] = 1.0
    elif ctx[1] == 1.0 and prev_theta < 0.0 <= theta:
        ctx[1] = 2.0
    if ctx[1] == 0.0:
        return min(max(ctx[2], gp[3]), gp[5]), -180.0
    if ctx[1] == 1.0:
        return gp[5], _upright_or_inverted(own[6])
    return _level_hold(v, chi, 0.0, gp)


# ---------------------------------------------------------------- public API

def desired_path_angles(own_pos, target_pos, offset=0.0):
    """Path pitch and path yaw (rad) of the line of sight to ``target_pos``.

    ``offset`` raises the aim point by that many metres (yo-yo aim points).
    """
    own_pos = np.asarray(own_pos, dtype=float)
    target_pos = np.asarray(target_pos, dtype=float)
    if np.linalg.norm(target_pos - own_pos) < 1.0:
        raise CoincidentPositionError("aim point coincides with own position")
    return _aim_angles(own_pos, target_pos, float(offset))


def loads_from_angle_errors(V, chi, e_chi, e_zeta, params=DEFAULT_GUIDANCE):
    """Trajectory-frame loads ``(n2, n3)`` in g.

    ``chi`` is the current path pitch in radians; the errors are in degrees.
    """
    return _loads(float(V), float(chi), float(e_chi), float(e_zeta), params.as_array())


def bank_and_load(n2, n3, params=DEFAULT_GUIDANCE):
    """Bank angle (rad) that tilts lift onto the load vector, and its clipped magnitude."""
    if n2 == 0 and n3 == 0:
        raise ZeroLoadError("bank undefined for a zero load vector")
    return _bank_load(float(n2), float(n3), params.as_array())


def alpha_from_load(n_n, params=DEFAULT_GUIDANCE):
    """Desired angle of attack in degrees for a normal load in g."""
    return _alpha_from_load(float(n_n), params.as_array())


def yo_yo_offset(V, params=DEFAULT_GUIDANCE):
    """Vertical aim-point offset (m) proportional to specific kinetic energy."""
    return params.k_h * float(V) ** 2 / G


def path_angles(state):
    """Path pitch and path yaw (rad) of the earth-frame velocity."""
    return _path_angles(state.as_array())


def maneuver_setpoints(mid, own, opp, ctx=None, params=DEFAULT_GUIDANCE):
    """Setpoints for maneuver ``mid`` flown by ``own`` against ``opp``.

    Returns the setpoints and the updated context; the input context is not
    modified.  A fresh context is used when ``ctx`` is None.
    """
    mid = ManeuverId(mid)
    if mid in (ManeuverId.PositionTracking, ManeuverId.AttitudeTracking,
               ManeuverId.HighYoYo, ManeuverId.LowYoYo):
        if np.linalg.norm(opp.pos - own.pos) < 1.0:
            raise CoincidentPositionError("opponent coincides with own position")
    c = (ctx or ManeuverContext()).as_array()
    a, p = setpoints_kernel(int(mid), own.as_array(), opp.as_array(), c, params.as_array())
    return Setpoints(float(a), float(p)), ManeuverContext.from_array(c)


def simple_3dof_step(state, n_l, n_n, phi, dt):
    """Forward-Euler step of the point-mass model driven by loads (g) and bank (rad)."""
    if abs(math.cos(state.chi)) < 1e-6:
        raise SingularityError("point-mass model singular at vertical flight path")
    v, chi, zeta = state.V, state.chi, state.zeta
    vdot = G * (n_l - math.sin(chi))
    chidot = G / v * (n_n * math.cos(phi) - math.cos(chi))
    zetadot = G * n_n * math.sin(phi) / (v * math.cos(chi))
    vel = v * np.array([math.cos(chi) * math.cos(zeta), math.cos(chi) * math.sin(zeta),
                        -math.sin(chi)])
    return Simple3DofState(state.pos + dt * vel, v + dt * vdot, chi + dt * chidot,
                           float(wrap_angle(zeta + dt * zetadot)))


def simple_3dof_rates(state, n_l, n_n, phi):
    """(Vdot, chidot, zetadot) of the point-mass model."""
    v, chi = state.V, state.chi
    return (G * (n_l - math.sin(chi)), G / v * (n_n * math.cos(phi) - math.cos(chi)),
            G * n_n * math.sin(phi) / (v * math.cos(chi)))
