import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dogfight.airframe import BodyState, speed_of_sound
from dogfight.dt_policy import DEFAULT_PARAMS, STRATEGIES, DtOptions, DtParams, decide, decide_scalars
from dogfight.maneuvers import ManeuverId as M

P = DEFAULT_PARAMS


def oracle(alt, mach, v, own_p3, opp_p3, v_opp, d, ata, aa, o):
    """Independent transcription of the priority list."""
    rules = [
        (o.sp and alt < 1000, M.Climb),
        (o.sp and mach < 0.3, M.StraightFlight),
        (o.es and d < 3000 and ata > 120 and aa > 120,
         M.Somersault if own_p3 < opp_p3 else M.SplitS),
        (o.yy and d > 3000 and ata < 30 and 30 < aa < 60,
         M.HighYoYo if v > v_opp else M.LowYoYo),
        (d < 3000 and ata < 30, M.AttitudeTracking),
        (True, M.PositionTracking),
    ]
    return next(m for cond, m in rules if cond)


def straddle(x, eps):
    return (x - eps, x, x + eps)


GRID = dict(
    alt=straddle(1000, 1),
    mach=straddle(0.3, 0.01),
    d=straddle(3000, 1),
    ata=(10, 29.9, 30, 30.1, 119.9, 120, 120.1),
    aa=(10, 29.9, 30, 30.1, 45, 59.9, 60, 60.1, 119.9, 120, 120.1),
    above=(True, False),
    faster=(True, False),
)


def test_strategy_table():
    assert len(STRATEGIES) == 8 and len(set(STRATEGIES.values())) == 8
    assert STRATEGIES[1] == DtOptions(False, False, False)
    assert STRATEGIES[8] == DtOptions(True, True, True)
    assert STRATEGIES[2].sp and not STRATEGIES[2].es and not STRATEGIES[2].yy
    for k, v in STRATEGIES.items():
        assert DtOptions.strategy(k) == v and v.index == k
    with pytest.raises(ValueError):
        DtOptions.strategy(9)


def test_params_validation():
    with pytest.raises(ValueError):
        DtParams(aa_yoyo_min=60, aa_yoyo_max=30)
    with pytest.raises(ValueError):
        DtParams(h_protect=-1)


def test_truth_table_all_strategies():
    n = 0
    for opts in STRATEGIES.values():
        for alt, mach, d, ata, aa, above, faster in itertools.product(*GRID.values()):
            own_p3, opp_p3 = (-alt, -alt + 100) if above else (-alt, -alt - 100)
            v, v_opp = (250.0, 200.0) if faster else (200.0, 250.0)
            args = (alt, mach, v, own_p3, opp_p3, v_opp, d, ata, aa)
            assert decide_scalars(*args, opts) == oracle(*args, opts), (args, opts)
            n += 1
    assert n == 8 * 3 * 3 * 3 * 7 * 11 * 2 * 2


def test_low_altitude_climbs():
    assert decide_scalars(900, 0.6, 200, -900, -5000, 200, 5000, 90, 90, DtOptions()) == M.Climb


def test_escape_from_above_somersaults():
    got = decide_scalars(5000, 0.6, 200, -5000, -4000, 200, 2000, 140, 130, DtOptions())
    assert got == M.Somersault
    got = decide_scalars(5000, 0.6, 200, -4000, -5000, 200, 2000, 140, 130, DtOptions())
    assert got == M.SplitS


def test_all_off_far_is_position_tracking():
    got = decide_scalars(5000, 0.6, 200, -5000, -5000, 200, 4000, 10, 90, STRATEGIES[1])
    assert got == M.PositionTracking


def test_yo_yo_speed_tie_goes_low():
    got = decide_scalars(5000, 0.6, 200, -5000, -5000, 200, 4000, 10, 45, DtOptions())
    assert got == M.LowYoYo


def test_height_check_precedes_speed_check():
    got = decide_scalars(500, 0.2, 60, -500, -5000, 200, 4000, 10, 45, DtOptions())
    assert got == M.Climb


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 12000), st.floats(0, 1.5), st.floats(0, 8000), st.floats(0, 180),
       st.floats(0, 180), st.booleans(), st.booleans())
def test_strategy_one_only_tracks(alt, mach, d, ata, aa, above, faster):
    got = decide_scalars(alt, mach, 200 if faster else 100, -alt, -alt + (1 if above else -1),
                         150, d, ata, aa, STRATEGIES[1])
    assert got in (M.PositionTracking, M.AttitudeTracking)


def test_decide_on_states_matches_scalars():
    v = 0.6 * speed_of_sound(5000)
    own = BodyState([0, 0, -5000], [v, 0, 0], [0, 0, 0])
    opp = BodyState([2000, 0, -5000], [v, 0, 0], [0, 0, 0])
    # opponent dead ahead within close range: attitude tracking
    assert decide(own, opp) == M.AttitudeTracking
    # reversed roles: chased from behind at equal altitude, split-S escape
    assert decide(opp, own) == M.SplitS
    assert decide(opp, own, options=STRATEGIES[2]) == M.PositionTracking


def test_decide_is_pure():
    own = BodyState([0, 0, -5000], [200, 0, 0], [0, 0, 0])
    opp = BodyState([4000, 1000, -6000], [220, 0, 0], [0, 0, 1.0])
    before = (own.as_array(), opp.as_array())
    picks = {decide(own, opp) for _ in range(5)}
    assert len(picks) == 1
    assert np.array_equal(own.as_array(), before[0]) and np.array_equal(opp.as_array(), before[1])
