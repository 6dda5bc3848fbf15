from dataclasses import replace

import numpy as np
import pytest

from hifdetect.scenario import load_scenario, run
from hifdetect.waveform import DEFAULT_LOAD_SHAPE


@pytest.mark.slow
@pytest.mark.parametrize("name", ["671", "675", "634"])
def test_no_false_alarms_on_randomized_healthy_days(name):
    base = load_scenario(name)
    alarms = []
    for day in range(100):
        rng = np.random.default_rng([day, 17])
        shape = np.asarray(DEFAULT_LOAD_SHAPE) * rng.uniform(0.8, 1.2, 24)
        s = replace(base, faults=(), load=replace(base.load, multipliers=tuple(shape.tolist())),
                    sim_seed=10_000 + day, pmu_seed=20_000 + day)
        r = run(s)
        alarms += [(day, t) for t in r.false_alarms]
    assert alarms == []
