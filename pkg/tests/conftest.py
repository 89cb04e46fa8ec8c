"""Shared, session-cached simulation scans.

The acceptance criteria and the trajectory property checks read the same
scans, so each is computed once per test session.
"""

import time
from types import SimpleNamespace
import warnings

import numpy as np
import pytest

from eit_localizer import environment, protocols, pulses

READOUT_OMEGAS = (1.0, 10.0, 18.0)
GATE_OMEGAS = (16.0, 128.0, 208.0)

# wide enough for a 5-sigma margin around the 18 gamma feature at 5 mK
CONVOLVE_GRID = protocols.ScanGrid(128e-9, n_initial=33)


@pytest.fixture(scope="session")
def readout_scans():
    sched = pulses.readout_schedule()
    out = {}
    t0 = time.perf_counter()
    for om in READOUT_OMEGAS:
        sw = pulses.StandingWave(om)
        grid = CONVOLVE_GRID if om == 18.0 else None
        out[om] = protocols.readout_scan(sw, sched, grid=grid)
    return SimpleNamespace(profiles=out, elapsed=time.perf_counter() - t0, schedule=sched)


@pytest.fixture(scope="session")
def phase_scans():
    sched = pulses.phase_gate_schedule()
    out = {}
    for om in GATE_OMEGAS:
        sw = pulses.StandingWave(om, 8.0)
        grid = protocols.ScanGrid(sw.wavelength / 4, n_initial=9)
        out[om] = protocols.phase_gate_scan(sw, sched, grid)
    return out


@pytest.fixture(scope="session")
def stark_mode_check():
    sched = pulses.phase_gate_schedule()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return protocols.compare_stark_modes(pulses.StandingWave(208.0, 8.0), sched, 0.0)


@pytest.fixture(scope="session")
def dipole_crosstalk():
    sched = pulses.readout_schedule()
    sw = pulses.StandingWave(18.0)
    r = np.array([0.0 + environment.constants.QUBIT_SPACING, 0.0, 0.0])
    rabi = environment.rabi_perturbation(environment.DipoleSource("pi"), r)
    peak = rabi / environment.constants.GAMMA_D2
    pert = environment.emission_envelope(sw, sched, peak)
    return rabi, pert, environment.crosstalk_delta(sw, sched, pert)


_CRITERIA = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def record(name, passed, detail):
        line = f"{name}: {'PASS' if passed else 'FAIL'} | {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
