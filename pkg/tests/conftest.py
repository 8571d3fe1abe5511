import pytest

from scrapsim.circuit import REFERENCE_PARAMS, solve_bound_states
from scrapsim.single_qubit import QubitModel3
from scrapsim.two_qubit import CoupledCircuitParams, solve_coupled_levels


@pytest.fixture(scope="session")
def params():
    return REFERENCE_PARAMS


@pytest.fixture(scope="session")
def levels(params):
    return solve_bound_states(params)


@pytest.fixture(scope="session")
def model(params, levels):
    return QubitModel3.from_levels(params, levels)


@pytest.fixture(scope="session")
def coupled(params):
    return CoupledCircuitParams.from_zeta(params, 0.0017)


@pytest.fixture(scope="session")
def coupled_levels(coupled):
    return solve_coupled_levels(coupled)
