"""One-on-one dogfight environment.

Blue is the learning agent, red flies the decision tree.  Each call to
:meth:`DogfightEnv.step` is one decision period: both sides pick a maneuver
from the state at the start of the period, then ``substeps`` physics steps of
maneuver guidance, autopilot, airframe integration, damage and termination
checks run in a compiled loop that stops early once the episode ends.

Observations are 12 scaled numbers from blue's point of view:

    altitude-axis position, speed, roll, pitch, path pitch,
    yaw and path yaw relative to the line of sight, HCA, ATA, AA,
    distance, opponent speed

Angles are scaled by 180 deg, speeds by 400 m/s, lengths by 10 km.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .airframe import (BodyState, ControlSurfaces, default_aircraft, default_tables, isa,
                       speed_of_sound, step_kernel, wrap_angle)
from .tables import pack_tables
from .dt_policy import DEFAULT_PARAMS, DtOptions, DtParams, decide_scalars
from .engagement import (MAX_DECISION_STEPS, CrashReason, Outcome, crash_kernel, damage_kernel,
                         geometry_kernel, outcome_kernel, zone_kernel)
from .errors import EpisodeDoneError
from .lowlevel import ControllerBank, control_kernel
from .maneuvers import (CTX_SIZE, DEFAULT_GUIDANCE, N_MANEUVERS, ManeuverId, _aim_angles,
                        _path_angles, setpoints_kernel)

OBS_SIZE = 12
TRAJECTORY_COLUMNS = ("t", "side", "p1", "p2", "p3", "phi", "theta", "psi", "V", "Ma",
                      "alpha", "beta", "blood", "maneuver_id", "d", "ATA", "AA", "HCA")
_LOG_WIDTH = len(TRAJECTORY_COLUMNS) - 1  # side is the middle index of the log array


@dataclass
class EpisodeConfig:
    xy_range: tuple = (-3000.0, 3000.0)  # m, both horizontal axes
    altitude_range: tuple = (3000.0, 8000.0)  # m
    mach_range: tuple = (0.3, 0.9)
    yaw_range: tuple = (-180.0, 180.0)  # deg
    min_separation: float = 100.0  # m, resample closer draws
    max_steps: int = MAX_DECISION_STEPS
    substeps: int = 100
    dt: float = 0.01
    red_options: DtOptions = field(default_factory=DtOptions)
    red_params: DtParams = DEFAULT_PARAMS
    seed: int = 0
    altitude_scale: float = 10000.0
    speed_scale: float = 400.0
    angle_scale: float = 180.0
    distance_scale: float = 10000.0
    fail_weight: float = 20.0
    damage_weight: float = 1.0
    angle_weight: float = 1.0 / 180.0

    def __post_init__(self):
        if abs(self.substeps * self.dt - 1.0) > 1e-9:
            raise ValueError("substeps * dt must equal the 1 s decision period")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    @property
    def scales(self):
        return np.array([self.altitude_scale, self.speed_scale, self.angle_scale,
                         self.distance_scale])


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    outcome: Outcome
    info: dict


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def observe_kernel(xb, xr, scales):
    obs = np.empty(OBS_SIZE)
    d, hca, ata, aa = geometry_kernel(xb, xr)
    chi, zeta = _path_angles(xb)
    if d > 0.0:
        zeta_d = _aim_angles(xb[0:3], xr[0:3], 0.0)[1]
    else:
        zeta_d = zeta
    vb = math.sqrt(xb[3] ** 2 + xb[4] ** 2 + xb[5] ** 2)
    vr = math.sqrt(xr[3] ** 2 + xr[4] ** 2 + xr[5] ** 2)
    a = scales[2]
    obs[0] = xb[2] / scales[0]
    obs[1] = vb / scales[1]
    obs[2] = math.degrees(xb[6]) / a
    obs[3] = math.degrees(xb[7]) / a
    obs[4] = math.degrees(chi) / a
    obs[5] = math.degrees(wrap_angle(xb[8] - zeta_d)) / a
    obs[6] = math.degrees(wrap_angle(zeta - zeta_d)) / a
    obs[7] = hca / a
    obs[8] = ata / a
    obs[9] = aa / a
    obs[10] = d / scales[3]
    obs[11] = vr / scales[1]
    return obs


@njit(cache=True)
def _log_row(log, k, side, t, x, blood, mid, d, ata, aa, hca):
    row = log[k, side]
    vt = math.sqrt(x[3] ** 2 + x[4] ** 2 + x[5] ** 2)
    row[0] = t
    row[1] = x[0]
    row[2] = x[1]
    row[3] = x[2]
    row[4] = math.degrees(x[6])
    row[5] = math.degrees(x[7])
    row[6] = math.degrees(x[8])
    row[7] = vt
    row[8] = vt / isa(-x[2])[1]
    row[9] = math.degrees(math.atan2(x[5], x[3]))
    row[10] = math.degrees(math.asin(min(max(x[4] / vt, -1.0), 1.0))) if vt > 0.0 else 0.0
    row[11] = blood
    row[12] = mid
    row[13] = d
    row[14] = ata
    row[15] = aa
    row[16] = hca


@njit(cache=True)
def period_kernel(xb, xr, act_b, act_r, ctx_b, ctx_r, mem_b, mem_r, blood, params, tab,
                  gains, signs, lower, upper, gp, dt, n_sub, mach_target, dsign,
                  steps_done, max_steps, log):
    """Run one decision period; returns (outcome, substeps, crash_b, crash_r, xb, xr).

    ``blood`` (blue, red), the contexts and the controller memories are
    updated in place.  ``log`` has shape (n_sub, 2, 17) to record every
    substep, or (0, 2, 17) to skip recording.
    """
    record = log.shape[0] > 0
    for k in range(n_sub):
        ab, pb = setpoints_kernel(act_b, xb, xr, ctx_b, gp)
        ar, pr = setpoints_kernel(act_r, xr, xb, ctx_r, gp)
        cb = control_kernel(xb, ab, pb, mem_b, gains, signs, lower, upper, dt, mach_target, dsign)
        cr = control_kernel(xr, ar, pr, mem_r, gains, signs, lower, upper, dt, mach_target, dsign)
        xb = step_kernel(xb, cb, dt, params, tab)[0]
        xr = step_kernel(xr, cr, dt, params, tab)[0]
        d, hca, ata, aa = geometry_kernel(xb, xr)
        # red's ATA is the supplement of blue's AA
        blood[0] = damage_kernel(blood[0], zone_kernel(d, 180.0 - aa), dt)
        blood[1] = damage_kernel(blood[1], zone_kernel(d, ata), dt)
        crash_b = crash_kernel(xb, d)
        crash_r = crash_kernel(xr, d)
        if record:
            t = (steps_done * n_sub + k + 1) * dt
            _log_row(log, k, 0, t, xb, blood[0], act_b, d, ata, aa, hca)
            _log_row(log, k, 1, t, xr, blood[1], act_r, d, 180.0 - aa, 180.0 - ata, hca)
        last = 1 if k == n_sub - 1 else 0
        out = outcome_kernel(crash_b != 0 or blood[0] <= 0.0, crash_r != 0 or blood[1] <= 0.0,
                             steps_done + last, max_steps)
        if out != 0:
            return out, k + 1, crash_b, crash_r, xb, xr
    return 0, n_sub, 0, 0, xb, xr


# ---------------------------------------------------------------- helpers

def observe(blue, red, config=None):
    """Blue's observation of the pair of states."""
    scales = (config or EpisodeConfig()).scales
    return observe_kernel(blue.as_array(), red.as_array(), scales)


def reward(prev_bloods, new_bloods, geom, outcome, config=None):
    """Fail bonus, damage exchange over the period and end-of-period angle term.

    ``geom`` needs ``ata`` and ``aa`` attributes in degrees.
    """
    config = config or EpisodeConfig()
    r_fail = {Outcome.BlueWin: 1.0, Outcome.RedWin: -1.0}.get(Outcome(outcome), 0.0)
    r_damage = (prev_bloods[1] - new_bloods[1]) - (prev_bloods[0] - new_bloods[0])
    r_angle = 180.0 - geom.ata - geom.aa
    return (config.fail_weight * r_fail + config.damage_weight * r_damage
            + config.angle_weight * r_angle)


def random_state(rng, config):
    alt = rng.uniform(*config.altitude_range)
    mach = rng.uniform(*config.mach_range)
    x, y = rng.uniform(*config.xy_range, size=2)
    yaw = math.radians(rng.uniform(*config.yaw_range))
    v = mach * speed_of_sound(alt)
    return BodyState([x, y, -alt], [v, 0.0, 0.0], [0.0, 0.0, wrap_angle(yaw)], [0.0, 0.0, 0.0],
                     ControlSurfaces(0.5, 0.0, 0.0, 0.0))


def sample_initial_states(config, rng):
    """Independent random draws for blue and red, resampled while too close."""
    while True:
        blue = random_state(rng, config)
        red = random_state(rng, config)
        if np.linalg.norm(blue.pos - red.pos) >= config.min_separation:
            return blue, red


def case_study_states(scenario):
    """Scripted head-on starts: ``case1`` at Mach 0.9, ``case2`` at Mach 0.8."""
    machs = {"case1": 0.9, "case2": 0.8}
    if scenario not in machs:
        raise ValueError(f"unknown scenario {scenario!r}; expected random, case1 or case2")
    v = machs[scenario] * speed_of_sound(5000.0)
    red = BodyState([0.0, -2000.0, -5000.0], [v, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0],
                    ControlSurfaces(0.5, 0.0, 0.0, 0.0))
    blue = BodyState([0.0, 2000.0, -5000.0], [v, 0.0, 0.0], [0.0, 0.0, -math.pi], [0.0, 0.0, 0.0],
                     ControlSurfaces(0.5, 0.0, 0.0, 0.0))
    return blue, red


# ---------------------------------------------------------------- environment

class DogfightEnv:
    """Gym-style environment: ``reset() -> obs``, ``step(action) -> StepResult``."""

    n_actions = N_MANEUVERS
    obs_size = OBS_SIZE

    def __init__(self, config=None, aircraft=None, tables=None, bank=None, guidance=None,
                 record=False):
        self.config = config or EpisodeConfig()
        self.aircraft = aircraft or default_aircraft()
        self.tables = tables or default_tables()
        self.bank = bank or ControllerBank.for_aircraft(self.aircraft)
        self.guidance = guidance or DEFAULT_GUIDANCE
        self.record = record
        self.rng = np.random.default_rng(self.config.seed)
        self._params = self.aircraft.params()
        self._pk = pack_tables(self.tables)
        self._gains = self.bank.gain_matrix()
        self._signs = np.asarray(self.bank.signs, dtype=float)
        self._gp = self.guidance.as_array()
        self._empty_log = np.zeros((0, 2, _LOG_WIDTH))
        self.done = True

    # -- state access
    @property
    def blue(self):
        return BodyState.from_array(self._xb)

    @property
    def red(self):
        return BodyState.from_array(self._xr)

    @property
    def bloods(self):
        return float(self._blood[0]), float(self._blood[1])

    def reset(self, seed=None, initial=None):
        """Start an episode; ``initial`` is an optional (blue, red) state pair."""
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        blue, red = initial if initial is not None else sample_initial_states(self.config, self.rng)
        self._xb = blue.as_array()
        self._xr = red.as_array()
        self._blood = np.ones(2)
        self._ctx = [np.full(CTX_SIZE, -1.0), np.full(CTX_SIZE, -1.0)]
        self._mem = [np.zeros((4, 3)), np.zeros((4, 3))]
        self.steps = 0
        self.done = False
        self.outcome = Outcome.Ongoing
        self.crash = (CrashReason.none, CrashReason.none)
        self.trajectory = []
        return self.observe()

    def observe(self):
        return observe_kernel(self._xb, self._xr, self.config.scales)

    def dt_decision(self, side="red", options=None, params=None):
        """Decision-tree maneuver for ``side`` from the current states."""
        own, opp = (self._xr, self._xb) if side == "red" else (self._xb, self._xr)
        d, hca, ata, aa = geometry_kernel(own, opp)
        v = float(np.linalg.norm(own[3:6]))
        vo = float(np.linalg.norm(opp[3:6]))
        alt = -own[2]
        return decide_scalars(alt, v / isa(alt)[1], v, own[2], opp[2], vo, d, ata, aa,
                              options or self.config.red_options,
                              params or self.config.red_params)

    def red_decision(self):
        return self.dt_decision("red")

    def step(self, action, red_action=None):
        """Advance one decision period with blue flying maneuver ``action``.

        ``red_action`` overrides the decision tree (scripted duels and tests).
        """
        if self.done:
            raise EpisodeDoneError("episode finished; call reset()")
        action = ManeuverId(int(action))
        red_action = ManeuverId(int(red_action)) if red_action is not None else self.red_decision()
        cfg = self.config
        prev = self.bloods
        log = np.zeros((cfg.substeps, 2, _LOG_WIDTH)) if self.record else self._empty_log
        out, n, cb, cr, xb, xr = period_kernel(
            self._xb, self._xr, int(action), int(red_action), self._ctx[0], self._ctx[1],
            self._mem[0], self._mem[1], self._blood, self._params, self._pk, self._gains,
            self._signs, self.bank.lower, self.bank.upper, self._gp, cfg.dt, cfg.substeps,
            self.bank.mach_target, self.bank.derivative_sign, self.steps, cfg.max_steps, log)
        self._xb, self._xr = xb, xr
        self.steps += 1
        self.outcome = Outcome(out)
        self.done = self.outcome != Outcome.Ongoing
        self.crash = (CrashReason(cb), CrashReason(cr))
        if self.record:
            self._append_log(log[:n])
        d, hca, ata, aa = geometry_kernel(xb, xr)
        r = reward(prev, self.bloods, _Angles(ata, aa), self.outcome, cfg)
        obs = self.observe()
        info = {"bloods": self.bloods, "blue_action": int(action), "red_action": int(red_action),
                "substeps": int(n), "step": self.steps, "crash": tuple(c.name for c in self.crash),
                "d": d, "ata": ata, "aa": aa, "hca": hca}
        return StepResult(obs, float(r), self.done, self.outcome, info)

    # -- logging
    def _append_log(self, log):
        for k in range(log.shape[0]):
            for side, name in ((0, "blue"), (1, "red")):
                row = log[k, side]
                self.trajectory.append([row[0], name, *row[1:12], int(row[12]), *row[13:]])

    def write_trajectory(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_COLUMNS)
            for row in self.trajectory:
                w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in row])

    def summary(self, seed=None):
        result = {Outcome.BlueWin: "win", Outcome.RedWin: "loss", Outcome.Tie: "tie"}
        return {
            "outcome": result.get(self.outcome, "ongoing"),
            "steps": self.steps,
            "blue_blood": self.bloods[0],
            "red_blood": self.bloods[1],
            "blue_crash": self.crash[0].name,
            "red_crash": self.crash[1].name,
            "red_strategy": self.config.red_options.index,
            "seed": seed,
        }

    def write_summary(self, path, seed=None):
        with open(path, "w") as fh:
            json.dump(self.summary(seed), fh, indent=2)


@dataclass(frozen=True)
class _Angles:
    ata: float
    aa: float


def config_dict(config):
    d = asdict(config)
    d["red_options"] = asdict(config.red_options)
    d["red_params"] = asdict(config.red_params)
    return d
