import pytest

from pebble_dryer.params import PlantParameters, derive_constants
from pebble_dryer.steady import KnownVariables, build_operating_point


def table_kv(**over):
    base = dict(mdot_fuel=0.012, mdot_air=0.25, F_solids=2.5, X_in=0.15, X_out=0.05,
                T_air_in=298.0, T_dryer_in_ss=993.15, T_bed_ss=643.15, T_ambient=293.0)
    base.update(over)
    return KnownVariables(**base)


@pytest.fixture(scope="session")
def params():
    return PlantParameters()


@pytest.fixture(scope="session")
def consts(params):
    return derive_constants(params)


@pytest.fixture(scope="session")
def kv():
    return table_kv()


@pytest.fixture(scope="session")
def op(kv, consts):
    return build_operating_point(kv, consts)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
