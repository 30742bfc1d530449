"""Relative geometry, engagement zone, damage and episode termination.

Angles are reported in degrees.  ``heading`` means the body x-axis (the nose),
so ATA measures how far the line of sight sits off the nose and AA how far it
sits off the opponent's nose.
"""

import math
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np
from numba import njit

from .errors import CoincidentPositionError

ZONE_MIN = 100.0
ZONE_MAX = 1000.0
ZONE_ATA = 1.0
DAMAGE_RATE = 1.0  # blood per second
MIN_ALTITUDE = 10.0
PROXIMITY = 10.0
MAX_DECISION_STEPS = 300
BLOOD_EPS = 1e-9


class Outcome(IntEnum):
    Ongoing = 0
    BlueWin = 1
    RedWin = 2
    Tie = 3


class CrashReason(IntEnum):
    none = 0
    ground = 1
    proximity = 2
    non_finite = 3


@dataclass(frozen=True)
class RelativeGeometry:
    los: np.ndarray
    d: float
    hca: float
    ata: float
    aa: float

    def swapped(self):
        """Geometry seen from the opponent.

        Each side's antenna train angle is the supplement of the other's
        aspect angle, since the line of sight reverses.
        """
        return RelativeGeometry(-self.los, self.d, self.hca, 180.0 - self.aa, 180.0 - self.ata)


@dataclass(frozen=True)
class CombatStatus:
    blood: float = 1.0
    crashed: bool = False
    crash_reason: CrashReason = CrashReason.none

    @property
    def failed(self):
        return self.crashed or self.blood <= 0.0


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def heading_kernel(phi, theta, psi):
    ct = math.cos(theta)
    return ct * math.cos(psi), ct * math.sin(psi), -math.sin(theta)


@njit(cache=True)
def _acos_deg(c):
    return math.degrees(math.acos(min(max(c, -1.0), 1.0)))


@njit(cache=True)
def geometry_kernel(own, opp):
    """(d, hca, ata, aa) in metres and degrees between two state vectors."""
    lx = opp[0] - own[0]
    ly = opp[1] - own[1]
    lz = opp[2] - own[2]
    d = math.sqrt(lx * lx + ly * ly + lz * lz)
    hx, hy, hz = heading_kernel(own[6], own[7], own[8])
    ox, oy, oz = heading_kernel(opp[6], opp[7], opp[8])
    hca = _acos_deg(hx * ox + hy * oy + hz * oz)
    if d > 0.0:
        ata = _acos_deg((lx * hx + ly * hy + lz * hz) / d)
        aa = _acos_deg((lx * ox + ly * oy + lz * oz) / d)
    else:
        ata = 0.0
        aa = 0.0
    return d, hca, ata, aa


@njit(cache=True)
def zone_kernel(d, ata):
    return ZONE_MIN <= d <= ZONE_MAX and ata <= ZONE_ATA


@njit(cache=True)
def damage_kernel(blood, hit, dt):
    if not hit:
        return blood
    b = blood - DAMAGE_RATE * dt
    return 0.0 if b <= BLOOD_EPS else b


@njit(cache=True)
def crash_kernel(x, d):
    """Crash reason code for one aircraft (0 when flying)."""
    for v in x:
        if not math.isfinite(v):
            return 3
    if not math.isfinite(d):
        return 3
    if d < PROXIMITY:
        return 2
    if -x[2] < MIN_ALTITUDE:
        return 1
    return 0


@njit(cache=True)
def outcome_kernel(blue_failed, red_failed, steps_done, max_steps):
    if blue_failed and red_failed:
        return 3
    if red_failed:
        return 1
    if blue_failed:
        return 2
    if steps_done >= max_steps:
        return 3
    return 0


# ---------------------------------------------------------------- public API

def heading_vector(euler):
    """Unit vector along the body x-axis in the earth frame."""
    return np.array(heading_kernel(float(euler[0]), float(euler[1]), float(euler[2])))


def relative_geometry(own, opp):
    los = opp.pos - own.pos
    d, hca, ata, aa = geometry_kernel(own.as_array(), opp.as_array())
    if d <= 0.0:
        raise CoincidentPositionError("aircraft positions coincide")
    return RelativeGeometry(los, d, hca, ata, aa)


def in_engagement_zone(geom):
    """True when the opponent sits 100-1000 m away within 1 degree of the nose."""
    return bool(zone_kernel(geom.d, geom.ata))


def zone_flags(geom):
    """(blue is hit, red is hit) for a blue-perspective geometry."""
    red_in_blue_zone = in_engagement_zone(geom)
    blue_in_red_zone = in_engagement_zone(geom.swapped())
    return blue_in_red_zone, red_in_blue_zone


def apply_damage(statuses, flags, dt):
    """Drain blood from every aircraft whose flag says it is inside the other's zone."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return tuple(replace(s, blood=damage_kernel(s.blood, bool(f), float(dt)))
                 for s, f in zip(statuses, flags))


def mark_crashes(states, statuses, d):
    """Return statuses with ground, proximity and non-finite crashes recorded."""
    out = []
    for st, s in zip(states, statuses):
        code = crash_kernel(st.as_array(), float(d))
        if code and not s.crashed:
            s = replace(s, crashed=True, crash_reason=CrashReason(code))
        out.append(s)
    return tuple(out)


def check_termination(states, statuses, geom, decision_step, max_steps=MAX_DECISION_STEPS):
    """Outcome after a substep; ``decision_step`` counts completed decision periods."""
    d = geom.d if geom is not None else math.inf
    statuses = mark_crashes(states, statuses, d)
    blue, red = statuses
    return Outcome(outcome_kernel(blue.failed, red.failed, int(decision_step), int(max_steps)))
