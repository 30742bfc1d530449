"""Flat ``key = value`` run configuration.

One file configures a whole run: airframe data, autopilot gains, opponent
thresholds, episode ranges and learner settings.  Lines starting with ``#``
are comments; unknown keys are rejected so typos fail loudly.  Command-line
flags override file values, and the resolved configuration is written next
to every run's outputs.
"""

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .airframe import AircraftConfig, default_aircraft, default_tables
from .dt_policy import DtOptions, DtParams
from .env import EpisodeConfig
from .lowlevel import ControllerBank, PidGains
from .maneuvers import GuidanceParams
from .tables import load_tables, table_dir


def _floats(text):
    return tuple(float(t) for t in str(text).replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    # data
    tables: str = "f16"  # packaged set name or directory of table files
    aircraft: str = "f16"  # packaged set name or path to an aircraft .cfg
    # run
    seed: int = 0
    out: str = "runs/latest"
    steps: int = 500_000
    episodes: int = 400
    strategy: int = 8  # training opponent
    # learner
    gamma: float = 0.95
    epsilon: float = 0.95
    lr: float = 1e-4
    batch: int = 512
    buffer: int = 100_000
    target_sync: int = 512
    hidden: tuple = (512, 256)
    checkpoint_every: int = 10_000
    # episode
    max_steps: int = 300
    altitude_min: float = 3000.0
    altitude_max: float = 8000.0
    mach_min: float = 0.3
    mach_max: float = 0.9
    xy_half_width: float = 3000.0
    # autopilot: kp, ki, kd per channel
    gain_mach: tuple = (10.0, 0.0, 0.0)
    gain_alpha: tuple = (8.0, 8.0, 4.0)
    gain_roll: tuple = (0.07, 0.0, 0.0)
    gain_sideslip: tuple = (12.0, 0.0, 4.0)
    derivative_sign: float = -1.0
    mach_target: float = 0.9
    # guidance
    k_path: float = 0.02
    k_alpha: float = 4.0
    k_h: float = 0.1
    # opponent
    h_protect: float = 1000.0
    ma_protect: float = 0.3
    d_close: float = 3000.0
    ata_aim: float = 30.0
    ata_escape: float = 120.0
    aa_escape: float = 120.0
    aa_yoyo_min: float = 30.0
    aa_yoyo_max: float = 60.0

    @classmethod
    def from_file(cls, path, **overrides):
        values = {}
        with open(path) as fh:
            for n, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, val = line.partition("=")
                if not sep:
                    raise ValueError(f"{path}:{n}: expected 'key = value'")
                values[key.strip()] = val.strip()
        return cls.from_mapping({**values, **overrides})

    @classmethod
    def from_mapping(cls, values):
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, val in values.items():
            if val is None:
                continue
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            default = known[key].default
            if isinstance(default, tuple):
                kw[key] = tuple(int(v) for v in _floats(val)) if key == "hidden" else _floats(val)
            elif isinstance(default, bool):
                kw[key] = str(val).lower() in ("1", "true", "yes")
            else:
                kw[key] = type(default)(val)
        return cls(**kw)

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def dump(self, path):
        lines = ["# resolved run configuration"]
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        Path(path).write_text("\n".join(lines) + "\n")

    # -- builders
    def load_aircraft(self):
        if self.aircraft == "f16":
            return default_aircraft()
        p = Path(self.aircraft)
        return AircraftConfig.from_file(p if p.is_file() else table_dir(self.aircraft) / "aircraft.cfg")

    def load_tables(self):
        return default_tables() if self.tables == "f16" else load_tables(self.tables)

    def controller_bank(self, aircraft=None):
        aircraft = aircraft or self.load_aircraft()
        gains = tuple(PidGains(*g) for g in (self.gain_mach, self.gain_alpha, self.gain_roll,
                                             self.gain_sideslip))
        return ControllerBank.for_aircraft(aircraft, gains=gains, mach_target=self.mach_target,
                                           derivative_sign=self.derivative_sign)

    def guidance(self):
        return GuidanceParams(k_zeta=self.k_path, k_chi=self.k_path, k_alpha=self.k_alpha,
                              k_h=self.k_h)

    def dt_params(self):
        return DtParams(self.h_protect, self.ma_protect, self.d_close, self.ata_aim,
                        self.ata_escape, self.aa_escape, self.aa_yoyo_min, self.aa_yoyo_max)

    def episode_config(self, strategy=None):
        return EpisodeConfig(
            xy_range=(-self.xy_half_width, self.xy_half_width),
            altitude_range=(self.altitude_min, self.altitude_max),
            mach_range=(self.mach_min, self.mach_max),
            max_steps=self.max_steps,
            red_options=DtOptions.strategy(strategy or self.strategy),
            red_params=self.dt_params(),
            seed=self.seed,
        )

    def env_kwargs(self):
        aircraft = self.load_aircraft()
        return {"aircraft": aircraft, "tables": self.load_tables(),
                "bank": self.controller_bank(aircraft), "guidance": self.guidance()}

    def train_config(self):
        from .ddqn import TrainConfig
        return TrainConfig(gamma=self.gamma, epsilon=self.epsilon, target_sync=self.target_sync,
                           lr=self.lr, batch=self.batch, buffer=self.buffer, steps=self.steps,
                           hidden=self.hidden, checkpoint_every=self.checkpoint_every,
                           seed=self.seed)
