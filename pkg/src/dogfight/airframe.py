"""Six-degree-of-freedom fixed-wing airframe.

Earth frame: x north, y along the second horizontal axis, z down (altitude is
``-pos[2]``).  Body frame: x nose, y right wing, z belly.  Angles are radians,
control surfaces degrees, throttle dimensionless.

The compiled kernels (``_``-prefixed, numba) carry all the arithmetic; the public
functions wrap them with dataclasses and error checks.  The translational
equation is

    vdot = (f_thrust - f_aero) / m + R_eb g - omega x v

where ``f_aero`` is the resistive aerodynamic force (axial, side, normal
components along body axes) and the rotational one is Euler's equation.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.optimize import least_squares

from .errors import (NoConvergenceError, NonFiniteStateError, SingularityError,
                     TableError, ZeroVelocityError)
from .tables import (AXIAL, AXIAL_Q, NORMAL, NORMAL_BETA_SCALE, NORMAL_ELEVATOR, NORMAL_Q, PITCH,
                     PITCH_Q, ROLL, ROLL_AILERON, ROLL_P, ROLL_R, ROLL_RUDDER, SIDE_AILERON,
                     SIDE_BETA, SIDE_P, SIDE_R, SIDE_RUDDER, THRUST_IDLE, THRUST_MAX, THRUST_MIL,
                     YAW, YAW_AILERON, YAW_P, YAW_R, YAW_RUDDER, load_tables, lookup1, lookup2,
                     pack_tables, table_dir)

G = 9.80665
R_AIR = 287.05287
GAMMA_AIR = 1.4
STATE_SIZE = 16

# parameter-vector layout used by the kernels
P_MASS, P_S, P_B, P_CBAR = 0, 1, 2, 3
P_J = 4
P_JINV = 13
P_LO = 22
P_HI = 26
P_RATE = 30
P_CG = 34
N_PARAMS = 35


# ---------------------------------------------------------------- data types

@dataclass
class ControlSurfaces:
    throttle: float = 0.0
    elevator: float = 0.0
    aileron: float = 0.0
    rudder: float = 0.0

    def as_array(self):
        return np.array([self.throttle, self.elevator, self.aileron, self.rudder], dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


@dataclass
class BodyState:
    pos: np.ndarray
    vel_body: np.ndarray
    euler: np.ndarray
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    surfaces: ControlSurfaces = field(default_factory=ControlSurfaces)

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float)
        self.vel_body = np.asarray(self.vel_body, dtype=float)
        self.euler = np.asarray(self.euler, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)

    @property
    def altitude(self):
        return -float(self.pos[2])

    def as_array(self):
        return np.concatenate([self.pos, self.vel_body, self.euler, self.omega,
                               self.surfaces.as_array()])

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:9].copy(), x[9:12].copy(),
                   ControlSurfaces.from_array(x[12:16]))

    def copy(self):
        return BodyState.from_array(self.as_array())


@dataclass(frozen=True)
class AirData:
    V: float
    alpha: float
    beta: float
    mach: float
    qbar: float


@dataclass
class AircraftConfig:
    """Mass properties, reference geometry and actuator limits.

    Channel order for the limit arrays is (throttle, elevator, aileron, rudder);
    throttle is dimensionless, surfaces in degrees and degrees per second.
    """

    mass: float
    inertia: np.ndarray
    wing_area: float
    span: float
    chord: float
    lower: np.ndarray
    upper: np.ndarray
    rate: np.ndarray
    cg_offset: float = 0.0  # (reference cg - cg) as a fraction of the chord

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.rate = np.asarray(self.rate, dtype=float)
        if self.mass <= 0 or min(self.wing_area, self.span, self.chord) <= 0:
            raise ValueError("mass and reference geometry must be positive")
        if not np.allclose(self.inertia, self.inertia.T):
            raise ValueError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0):
            raise ValueError("inertia must be positive definite")
        if np.any(self.lower >= self.upper) or np.any(self.rate <= 0):
            raise ValueError("actuator bounds must satisfy lower < upper and rate > 0")

    def params(self):
        p = np.empty(N_PARAMS)
        p[P_MASS], p[P_S], p[P_B], p[P_CBAR] = self.mass, self.wing_area, self.span, self.chord
        p[P_J:P_J + 9] = self.inertia.ravel()
        p[P_JINV:P_JINV + 9] = np.linalg.inv(self.inertia).ravel()
        p[P_LO:P_LO + 4] = self.lower
        p[P_HI:P_HI + 4] = self.upper
        p[P_RATE:P_RATE + 4] = self.rate
        p[P_CG] = self.cg_offset
        return p

    @classmethod
    def from_file(cls, path):
        vals = {}
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    k, _, v = line.partition("=")
                    vals[k.strip()] = float(v)
        try:
            jxz = vals["jxz"]
            inertia = [[vals["jxx"], 0.0, -jxz], [0.0, vals["jyy"], 0.0], [-jxz, 0.0, vals["jzz"]]]
            chans = ("throttle", "elevator", "aileron", "rudder")
            return cls(
                mass=vals["mass"], inertia=inertia, wing_area=vals["wing_area"],
                span=vals["span"], chord=vals["chord"],
                lower=[vals[f"{c}_min"] for c in chans],
                upper=[vals[f"{c}_max"] for c in chans],
                rate=[vals[f"{c}_rate"] for c in chans],
                cg_offset=vals.get("cg_reference", 0.0) - vals.get("cg", vals.get("cg_reference", 0.0)),
            )
        except KeyError as exc:
            raise TableError(f"{path}: missing aircraft key {exc}") from None


@lru_cache(maxsize=None)
def default_tables(name="f16"):
    return load_tables(name)


@lru_cache(maxsize=None)
def default_packed(name="f16"):
    return pack_tables(default_tables(name))


def packed(tables):
    return default_packed() if tables is None else pack_tables(tables)


@lru_cache(maxsize=None)
def default_aircraft(name="f16"):
    return AircraftConfig.from_file(table_dir(name) / "aircraft.cfg")


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def wrap_angle(a):
    """Wrap to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@njit(cache=True)
def isa(alt):
    """Density (kg/m^3) and speed of sound (m/s); troposphere plus isothermal layer."""
    h = min(max(alt, -1000.0), 20000.0)
    if h <= 11000.0:
        t = 288.15 - 0.0065 * h
        p = 101325.0 * (t / 288.15) ** (G / (R_AIR * 0.0065))
    else:
        t = 216.65
        p = 22632.06 * math.exp(-G / (R_AIR * t) * (h - 11000.0))
    return p / (R_AIR * t), math.sqrt(GAMMA_AIR * R_AIR * t)


@njit(cache=True)
def _rotation(phi, theta, psi):
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    r = np.empty((3, 3))
    r[0, 0] = ct * cp
    r[0, 1] = sf * st * cp - cf * sp
    r[0, 2] = cf * st * cp + sf * sp
    r[1, 0] = ct * sp
    r[1, 1] = sf * st * sp + cf * cp
    r[1, 2] = cf * st * sp - sf * cp
    r[2, 0] = -st
    r[2, 1] = sf * ct
    r[2, 2] = cf * ct
    return r


@njit(cache=True)
def _thrust(throttle, alt, mach, pk):
    if throttle <= 0.77:
        power = 64.94 * throttle
    else:
        power = 217.38 * throttle - 117.38
    mil = lookup2(pk, THRUST_MIL, alt, mach)
    if power < 50.0:
        lo = lookup2(pk, THRUST_IDLE, alt, mach)
        f = lo + (mil - lo) * power * 0.02
    else:
        hi = lookup2(pk, THRUST_MAX, alt, mach)
        f = mil + (hi - mil) * (power - 50.0) * 0.02
    return max(f, 0.0)


@njit(cache=True)
def _coefficients(alpha_deg, beta_deg, el, ail, rdr, p, q, r, v, span, chord, cg, pk):
    """Resistive force and moment coefficients plus a grid-clamp flag.

    ``cg`` shifts the pitching moment for a centre of gravity ahead of the
    table's reference point (fraction of the chord).
    """
    a, b = alpha_deg, beta_deg
    dail = ail / 20.0
    drdr = rdr / 30.0
    if v > 1e-6:
        cq = chord * q / (2.0 * v)
        bp = span * p / (2.0 * v)
        br = span * r / (2.0 * v)
    else:
        cq = bp = br = 0.0
    sc = pk.scalars
    axial = lookup2(pk, AXIAL, a, el) + cq * lookup1(pk, AXIAL_Q, a)
    side = (sc[SIDE_BETA] * b + sc[SIDE_AILERON] * dail + sc[SIDE_RUDDER] * drdr
            + br * lookup1(pk, SIDE_R, a) + bp * lookup1(pk, SIDE_P, a))
    normal = (lookup1(pk, NORMAL, a) * (1.0 - (b / sc[NORMAL_BETA_SCALE]) ** 2)
              + sc[NORMAL_ELEVATOR] * el / 25.0 + cq * lookup1(pk, NORMAL_Q, a))
    roll = (lookup2(pk, ROLL, a, b) + lookup2(pk, ROLL_AILERON, a, b) * dail
            + lookup2(pk, ROLL_RUDDER, a, b) * drdr
            + br * lookup1(pk, ROLL_R, a) + bp * lookup1(pk, ROLL_P, a))
    pitch = lookup2(pk, PITCH, a, el) + cq * lookup1(pk, PITCH_Q, a) - cg * normal
    yaw = (lookup2(pk, YAW, a, b) + lookup2(pk, YAW_AILERON, a, b) * dail
           + lookup2(pk, YAW_RUDDER, a, b) * drdr
           + br * lookup1(pk, YAW_R, a) + bp * lookup1(pk, YAW_P, a))
    ga = pk.grids[AXIAL, 0]
    gb = pk.grids[ROLL, 1]
    clamped = (a < ga[0] or a > ga[pk.sizes[AXIAL, 0] - 1]
               or b < gb[0] or b > gb[pk.sizes[ROLL, 1] - 1])
    return axial, side, normal, roll, pitch, yaw, clamped


@njit(cache=True)
def _air_data(u, v, w, alt):
    vt = math.sqrt(u * u + v * v + w * w)
    rho, a = isa(alt)
    if vt > 0.0:
        alpha = math.atan2(w, u)
        beta = math.asin(min(max(v / vt, -1.0), 1.0))
    else:
        alpha = 0.0
        beta = 0.0
    return vt, alpha, beta, vt / a, 0.5 * rho * vt * vt


@njit(cache=True)
def _body_loads(alt, u, v, w, p, q, r, surf, params, pk):
    """Net non-gravitational body force and moment, plus the clamp flag."""
    vt, alpha, beta, mach, qbar = _air_data(u, v, w, alt)
    ax, sd, nm, cl, cm, cn, clamped = _coefficients(
        math.degrees(alpha), math.degrees(beta), surf[1], surf[2], surf[3],
        p, q, r, vt, params[P_B], params[P_CBAR], params[P_CG], pk)
    qs = qbar * params[P_S]
    ft = _thrust(surf[0], alt, mach, pk)
    return (ft - qs * ax, -qs * sd, -qs * nm,
            qs * params[P_B] * cl, qs * params[P_CBAR] * cm, qs * params[P_B] * cn, clamped)


@njit(cache=True)
def _rigid_body(fx, fy, fz, l, m, n, g1, g2, g3, u, v, w, p, q, r, params, out, k):
    """Write vdot and omegadot into out[k:k+3], out[k+3:k+6]; g is gravity in body axes."""
    mass = params[P_MASS]
    out[k] = fx / mass + g1 - (q * w - r * v)
    out[k + 1] = fy / mass + g2 - (r * u - p * w)
    out[k + 2] = fz / mass + g3 - (p * v - q * u)
    j = params[P_J:P_J + 9]
    hx = j[0] * p + j[1] * q + j[2] * r
    hy = j[3] * p + j[4] * q + j[5] * r
    hz = j[6] * p + j[7] * q + j[8] * r
    tx = l - (q * hz - r * hy)
    ty = m - (r * hx - p * hz)
    tz = n - (p * hy - q * hx)
    ji = params[P_JINV:P_JINV + 9]
    out[k + 3] = ji[0] * tx + ji[1] * ty + ji[2] * tz
    out[k + 4] = ji[3] * tx + ji[4] * ty + ji[5] * tz
    out[k + 5] = ji[6] * tx + ji[7] * ty + ji[8] * tz


@njit(cache=True)
def _deriv_euler(x, params, pk, out):
    """Rates of (pos, vel_body, euler, omega) for a 16-vector state."""
    u, v, w = x[3], x[4], x[5]
    phi, theta, psi = x[6], x[7], x[8]
    p, q, r = x[9], x[10], x[11]
    rot = _rotation(phi, theta, psi)
    for i in range(3):
        out[i] = rot[i, 0] * u + rot[i, 1] * v + rot[i, 2] * w
    fx, fy, fz, l, m, n, clamped = _body_loads(-x[2], u, v, w, p, q, r, x[12:16], params, pk)
    _rigid_body(fx, fy, fz, l, m, n, G * rot[2, 0], G * rot[2, 1], G * rot[2, 2],
                u, v, w, p, q, r, params, out, 3)
    # omega rates land in out[6:9]; move them after the Euler rates
    out[9], out[10], out[11] = out[6], out[7], out[8]
    ct = math.cos(theta)
    sf, cf = math.sin(phi), math.cos(phi)
    qr = q * sf + r * cf
    out[6] = p + qr * math.tan(theta)
    out[7] = q * cf - r * sf
    out[8] = qr / ct
    return clamped


@njit(cache=True)
def _quat_from_euler(phi, theta, psi):
    cf, sf = math.cos(phi / 2), math.sin(phi / 2)
    ct, st = math.cos(theta / 2), math.sin(theta / 2)
    cp, sp = math.cos(psi / 2), math.sin(psi / 2)
    return (cf * ct * cp + sf * st * sp, sf * ct * cp - cf * st * sp,
            cf * st * cp + sf * ct * sp, cf * ct * sp - sf * st * cp)


@njit(cache=True)
def _euler_from_quat(qw, qx, qy, qz):
    phi = math.atan2(2.0 * (qw * qx + qy * qz), 1.0 - 2.0 * (qx * qx + qy * qy))
    s = 2.0 * (qw * qy - qz * qx)
    lim = 1.0 - 1e-12
    s = min(max(s, -lim), lim)
    theta = math.asin(s)
    psi = math.atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))
    return wrap_angle(phi), theta, wrap_angle(psi)


@njit(cache=True)
def _deriv_quat(y, surf, params, pk, out):
    """Rates of (pos, vel_body, quaternion, omega) for a 13-vector."""
    u, v, w = y[3], y[4], y[5]
    qw, qx, qy, qz = y[6], y[7], y[8], y[9]
    p, q, r = y[10], y[11], y[12]
    r00 = 1 - 2 * (qy * qy + qz * qz)
    r01 = 2 * (qx * qy - qw * qz)
    r02 = 2 * (qx * qz + qw * qy)
    r10 = 2 * (qx * qy + qw * qz)
    r11 = 1 - 2 * (qx * qx + qz * qz)
    r12 = 2 * (qy * qz - qw * qx)
    r20 = 2 * (qx * qz - qw * qy)
    r21 = 2 * (qy * qz + qw * qx)
    r22 = 1 - 2 * (qx * qx + qy * qy)
    out[0] = r00 * u + r01 * v + r02 * w
    out[1] = r10 * u + r11 * v + r12 * w
    out[2] = r20 * u + r21 * v + r22 * w
    fx, fy, fz, l, m, n, clamped = _body_loads(-y[2], u, v, w, p, q, r, surf, params, pk)
    _rigid_body(fx, fy, fz, l, m, n, G * r20, G * r21, G * r22, u, v, w, p, q, r, params, out, 3)
    out[10], out[11], out[12] = out[6], out[7], out[8]
    out[6] = -0.5 * (qx * p + qy * q + qz * r)
    out[7] = 0.5 * (qw * p + qy * r - qz * q)
    out[8] = 0.5 * (qw * q + qz * p - qx * r)
    out[9] = 0.5 * (qw * r + qx * q - qy * p)
    return clamped


@njit(cache=True)
def actuate(current, command, dt, params):
    """Advance actuators toward ``command`` under rate and amplitude limits."""
    out = np.empty(4)
    for k in range(4):
        lim = params[P_RATE + k] * dt
        d = min(max(command[k] - current[k], -lim), lim)
        out[k] = min(max(current[k] + d, params[P_LO + k]), params[P_HI + k])
    return out


@njit(cache=True)
def step_kernel(x, command, dt, params, pk):
    """One fixed RK4 step; returns (new state, grid-clamp flag).

    Attitude is propagated as a unit quaternion so loops pass through the
    vertical; the Euler angles are recovered at the end of the step.
    """
    if dt == 0.0:
        return x.copy(), False
    surf = actuate(x[12:16], command, dt, params)
    y = np.empty(13)
    y[0:6] = x[0:6]
    qw, qx, qy, qz = _quat_from_euler(x[6], x[7], x[8])
    y[6], y[7], y[8], y[9] = qw, qx, qy, qz
    y[10:13] = x[9:12]
    k1 = np.empty(13)
    k2 = np.empty(13)
    k3 = np.empty(13)
    k4 = np.empty(13)
    c1 = _deriv_quat(y, surf, params, pk, k1)
    c2 = _deriv_quat(y + 0.5 * dt * k1, surf, params, pk, k2)
    c3 = _deriv_quat(y + 0.5 * dt * k2, surf, params, pk, k3)
    c4 = _deriv_quat(y + dt * k3, surf, params, pk, k4)
    y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    nq = math.sqrt(y[6] ** 2 + y[7] ** 2 + y[8] ** 2 + y[9] ** 2)
    out = np.empty(STATE_SIZE)
    out[0:6] = y[0:6]
    if nq > 0.0 and math.isfinite(nq):
        phi, theta, psi = _euler_from_quat(y[6] / nq, y[7] / nq, y[8] / nq, y[9] / nq)
    else:
        phi = theta = psi = math.nan
    out[6], out[7], out[8] = phi, theta, psi
    out[9:12] = y[10:13]
    out[12:16] = surf
    return out, (c1 or c2 or c3 or c4)


@njit(cache=True)
def all_finite(x):
    for v in x:
        if not math.isfinite(v):
            return False
    return True


# ---------------------------------------------------------------- public API

def rotation_body_to_earth(euler):
    """Z-Y-X rotation taking body-frame vectors to the earth frame."""
    return _rotation(float(euler[0]), float(euler[1]), float(euler[2]))


def euler_rates(euler, omega):
    phi, theta = float(euler[0]), float(euler[1])
    if abs(math.cos(theta)) < 1e-6:
        raise SingularityError(f"Euler kinematics singular at theta={theta:.6f} rad")
    p, q, r = (float(w) for w in omega)
    qr = q * math.sin(phi) + r * math.cos(phi)
    return np.array([p + qr * math.tan(theta), q * math.cos(phi) - r * math.sin(phi),
                     qr / math.cos(theta)])


def air_data(vel_body, altitude):
    u, v, w = (float(c) for c in vel_body)
    if u == 0.0 and v == 0.0 and w == 0.0:
        raise ZeroVelocityError("air data undefined at zero velocity")
    return AirData(*_air_data(u, v, w, float(altitude)))


def speed_of_sound(altitude):
    return isa(float(altitude))[1]


def density(altitude):
    return isa(float(altitude))[0]


def aero_forces_moments(airdata, surfaces, omega, config=None, tables=None, diagnostics=None):
    """Resistive aerodynamic force ``f_aero`` and moment, both in body axes.

    ``f_aero`` is subtracted in the translational equation, so its x component
    is the drag-like axial force.  When the flow angles fall outside the table
    hull the lookup clamps and a message is appended to ``diagnostics``.
    """
    config = config or default_aircraft()
    tables = packed(tables)
    p, q, r = (float(w) for w in omega)
    ax, sd, nm, cl, cm, cn, clamped = _coefficients(
        math.degrees(airdata.alpha), math.degrees(airdata.beta), surfaces.elevator,
        surfaces.aileron, surfaces.rudder, p, q, r, airdata.V, config.span, config.chord,
        config.cg_offset, tables)
    if clamped and diagnostics is not None:
        diagnostics.append(
            f"aero table clamped at alpha={math.degrees(airdata.alpha):.2f} deg, "
            f"beta={math.degrees(airdata.beta):.2f} deg")
    qs = airdata.qbar * config.wing_area
    force = np.array([qs * ax, qs * sd, qs * nm])
    torque = np.array([qs * config.span * cl, qs * config.chord * cm, qs * config.span * cn])
    return force, torque


def thrust(throttle, altitude, mach, tables=None):
    """Engine thrust along body x in newtons."""
    return _thrust(float(throttle), float(altitude), float(mach), packed(tables))


def derivatives(state, config=None, tables=None):
    """Rates of (pos, vel_body, euler, omega) as a 12-vector."""
    config = config or default_aircraft()
    tables = packed(tables)
    if abs(math.cos(state.euler[1])) < 1e-6:
        raise SingularityError(f"Euler kinematics singular at theta={state.euler[1]:.6f} rad")
    out = np.empty(12)
    _deriv_euler(state.as_array(), config.params(), tables, out)
    return out


def step(state, commanded, dt, config=None, tables=None, diagnostics=None):
    """Advance actuators then integrate one RK4 step of length ``dt``."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    config = config or default_aircraft()
    tables = packed(tables)
    x, clamped = step_kernel(state.as_array(), commanded.as_array(), float(dt),
                             config.params(), tables)
    if not all_finite(x):
        raise NonFiniteStateError("integration produced a non-finite state")
    if clamped and diagnostics is not None:
        diagnostics.append("aero table clamped during step")
    return BodyState.from_array(x)


def level_state(altitude, mach, heading=0.0, pos_xy=(0.0, 0.0), alpha=0.0,
                surfaces=None):
    """Wings-level state at the given Mach with pitch equal to ``alpha``."""
    v = mach * speed_of_sound(altitude)
    return BodyState(
        pos=[pos_xy[0], pos_xy[1], -altitude],
        vel_body=[v * math.cos(alpha), 0.0, v * math.sin(alpha)],
        euler=[0.0, alpha, wrap_angle(heading)],
        omega=[0.0, 0.0, 0.0],
        surfaces=surfaces or ControlSurfaces(),
    )


def trim_search(altitude, mach, config=None, tables=None, heading=0.0, tol=1e-3):
    """Wings-level, constant-altitude trim at (altitude, Mach).

    Solves for angle of attack, elevator and throttle with the lateral controls
    at zero; raises NoConvergenceError when the residual (all rates except the
    position rate) stays above ``tol``.
    """
    config = config or default_aircraft()
    tables = packed(tables)
    params = config.params()
    lo, hi = config.lower, config.upper

    def build(z):
        a, el, thr = (float(v) for v in z)
        return level_state(altitude, mach, heading, alpha=a,
                           surfaces=ControlSurfaces(thr, el, 0.0, 0.0))

    def residual(z):
        out = np.empty(12)
        _deriv_euler(build(z).as_array(), params, tables, out)
        return out[3:]

    bounds = ([math.radians(-10.0), lo[1], lo[0]], [math.radians(45.0), hi[1], hi[0]])
    best = None
    for guess in ([0.05, -2.0, 0.3], [0.15, -5.0, 0.8], [0.0, 0.0, 0.1]):
        sol = least_squares(residual, guess, bounds=bounds, xtol=1e-14, ftol=1e-14, gtol=1e-14)
        res = float(np.linalg.norm(residual(sol.x)))
        if best is None or res < best[0]:
            best = (res, sol.x)
        if res < tol:
            break
    res, z = best
    if res >= tol:
        raise NoConvergenceError(f"no trim at altitude={altitude} m, mach={mach}", res)
    state = build(z)
    return state, state.surfaces
