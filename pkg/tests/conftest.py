import numpy as np
import pytest

from multiscat.multiscatter import Numerics, Scenario, ScenarioEngine
from multiscat.potentials import Scatterer, gaussian, square_well

DEG60_OUT = (np.sin(np.deg2rad(60.0)), 0.0, np.cos(np.deg2rad(60.0)))


@pytest.fixture(scope="session")
def wells_engine():
    """The standard experiment: two unit square wells, R = 5, k0 = 1."""
    scenario = Scenario(
        scatterers=(Scatterer((0.0, 0.0, 0.0), square_well(-1.0, 1.0)),
                    Scatterer((0.0, 0.0, 5.0), square_well(-1.0, 1.0))),
        k0=1.0,
        dir_in=(0.0, 0.0, 1.0),
        dir_out=DEG60_OUT,
        numerics=Numerics(lmax=8),
    )
    return ScenarioEngine(scenario)


@pytest.fixture(scope="session")
def overlap_engine():
    """Two strongly overlapping Gaussians at separation 1."""
    scenario = Scenario(
        scatterers=(Scatterer((0.0, 0.0, 0.0), gaussian(-1.0, 1.0)),
                    Scatterer((0.0, 0.0, 1.0), gaussian(-1.0, 1.0))),
        k0=1.0,
        dir_in=(0.0, 0.0, 1.0),
        dir_out=DEG60_OUT,
        numerics=Numerics(lmax=8),
    )
    return ScenarioEngine(scenario)
