import math

import pytest

from mspulse import OptimizationConfig, solve_gate_parameters, solve_shape, square_pulse

RABI_HZ = 1180.0
OMEGA_MS = 2 * math.pi * RABI_HZ
REFERENCE_LOOPS = (3, 5, 9, 12, 18)
REFERENCE_TAU_US = (1000.4, 1324.8, 1793.77, 2083.4, 2548.7)

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def gate3():
    """K=3 gate at the 1.18 kHz peak Rabi rate: (params, result)."""
    return solve_gate_parameters(3, OMEGA_MS)


@pytest.fixture(scope="session")
def pulse3(gate3):
    return gate3[1].pulse


@pytest.fixture(scope="session")
def square3(pulse3):
    return square_pulse(3, pulse3.tau)


@pytest.fixture(scope="session")
def reference_gates():
    return {k: solve_gate_parameters(k, OMEGA_MS) for k in REFERENCE_LOOPS}


@pytest.fixture(scope="session")
def shape3():
    return solve_shape(OptimizationConfig(loops=3))


@pytest.fixture
def report_criterion():
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
