"""Rule-based opponent: a fixed-priority decision tree over the maneuver library.

Rules are tried in order (self-protection, escape, yo-yo, close-range aim,
default pursuit) and the first that matches picks the maneuver.  Each of the
first three groups can be switched off, giving eight strategies.
"""

from dataclasses import dataclass

from .airframe import air_data
from .engagement import relative_geometry
from .maneuvers import ManeuverId


@dataclass(frozen=True)
class DtOptions:
    sp: bool = True  # self-protection
    es: bool = True  # escape
    yy: bool = True  # yo-yo

    @classmethod
    def strategy(cls, index):
        """Options for strategy ``index`` in 1..8."""
        try:
            return STRATEGIES[int(index)]
        except KeyError:
            raise ValueError(f"strategy must be in 1..8, got {index}") from None

    @property
    def index(self):
        for k, v in STRATEGIES.items():
            if v == self:
                return k


STRATEGIES = {
    1: DtOptions(False, False, False),
    2: DtOptions(True, False, False),
    3: DtOptions(False, True, False),
    4: DtOptions(False, False, True),
    5: DtOptions(False, True, True),
    6: DtOptions(True, False, True),
    7: DtOptions(True, True, False),
    8: DtOptions(True, True, True),
}


@dataclass(frozen=True)
class DtParams:
    h_protect: float = 1000.0  # m
    ma_protect: float = 0.3
    d_close: float = 3000.0  # m
    ata_aim: float = 30.0  # deg
    ata_escape: float = 120.0
    aa_escape: float = 120.0
    aa_yoyo_min: float = 30.0
    aa_yoyo_max: float = 60.0

    def __post_init__(self):
        if min(self.h_protect, self.ma_protect, self.d_close, self.ata_aim, self.ata_escape,
               self.aa_escape, self.aa_yoyo_min, self.aa_yoyo_max) <= 0:
            raise ValueError("decision-tree thresholds must be positive")
        if not self.aa_yoyo_min < self.aa_yoyo_max:
            raise ValueError("aa_yoyo_min must be below aa_yoyo_max")


DEFAULT_PARAMS = DtParams()


def decide_scalars(altitude, mach, speed, own_p3, opp_p3, opp_speed, d, ata, aa,
                   options, params=DEFAULT_PARAMS):
    """Decision on plain numbers; angles in degrees."""
    if options.sp and altitude < params.h_protect:
        return ManeuverId.Climb
    if options.sp and mach < params.ma_protect:
        return ManeuverId.StraightFlight
    if options.es and d < params.d_close and ata > params.ata_escape and aa > params.aa_escape:
        # down-positive z: smaller p3 means higher
        return ManeuverId.Somersault if own_p3 < opp_p3 else ManeuverId.SplitS
    if (options.yy and d > params.d_close and ata < params.ata_aim
            and params.aa_yoyo_min < aa < params.aa_yoyo_max):
        return ManeuverId.HighYoYo if speed > opp_speed else ManeuverId.LowYoYo
    if d < params.d_close and ata < params.ata_aim:
        return ManeuverId.AttitudeTracking
    return ManeuverId.PositionTracking


def decide(own, opp, geom=None, options=DtOptions(), params=DEFAULT_PARAMS):
    """Maneuver for ``own`` (a BodyState) against ``opp``."""
    geom = geom or relative_geometry(own, opp)
    ad = air_data(own.vel_body, own.altitude)
    opp_speed = float(sum(v * v for v in opp.vel_body) ** 0.5)
    return decide_scalars(own.altitude, ad.mach, ad.V, float(own.pos[2]), float(opp.pos[2]),
                          opp_speed, geom.d, geom.ata, geom.aa, options, params)
