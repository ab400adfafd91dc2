import numpy as np
import pytest

from dervalue.calendar import build_calendar, default_holidays
from dervalue.household import prepare_households
from dervalue.ingest import map_zip_to_node, wholesale_by_zip
from dervalue.synth import SynthConfig, synth_lmp, synth_nodes, synth_population
from dervalue.tariffs import build_rate_library


@pytest.fixture(scope="session")
def calendar():
    return build_calendar(holidays=default_holidays())


def make_world(calendar, n, seed=3):
    cfg = SynthConfig(n_households=n, seed=seed)
    pop = synth_population(cfg, calendar)
    nodes = synth_nodes(cfg)
    lmp = {k: np.maximum(v, 0) / 1000 for k, v in synth_lmp(cfg, calendar, nodes).items()}
    wholesale = wholesale_by_zip(lmp, map_zip_to_node(pop.zips, nodes))
    lib = build_rate_library(calendar, pop.traces, wholesale)
    return pop, prepare_households(pop.traces, pop.irradiance), lib


@pytest.fixture(scope="session")
def small_world(calendar):
    """Twelve synthetic households with their rate library."""
    return make_world(calendar, 12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
