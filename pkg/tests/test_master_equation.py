import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eit_localizer import _kernel, constants, darkstate, pulses
from eit_localizer import master_equation as me
from eit_localizer.errors import ContractViolation, StepSizeError, TraceDriftError
from eit_localizer.validation import kernel_residual, rabi_error


def _hold_table(op=0.0, oc=0.0, os_=0.0, t_end=1.0):
    """Constant drives from t=0 to t_end seconds (ramps outside the window)."""
    rows = []
    for ch, pk in enumerate((op, oc, os_)):
        if pk:
            rows.append([ch, -1e-9, 1e-9, t_end + 1e-9, 1e-9, pk])
    return np.array(rows, dtype=float).reshape(-1, 6)


def _dark_4level(op, oc):
    # bright ground combination (a + c)/sqrt(2) couples to e with sqrt(2) oc
    d3 = darkstate.dark_state(op, math.sqrt(2) * oc)
    v = np.zeros(4, dtype=complex)
    v[me.B] = d3[0]
    v[me.A] = v[me.C] = d3[1] / math.sqrt(2)
    return v


def test_ground_state_stationary():
    out = me.build_rhs(me.LevelScheme(), me.DriveSnapshot(), me.basis_projector(me.B))
    assert np.abs(out).max() == 0.0


def test_excited_state_decay():
    out = me.build_rhs(me.LevelScheme(), me.DriveSnapshot(), me.basis_projector(me.E))
    np.testing.assert_allclose(np.diag(out).real, [1 / 3, 1 / 3, 1 / 3, -1.0], atol=1e-15)


def test_dark_state_coherent_part_vanishes():
    scheme = me.LevelScheme(gamma_e=0.0)
    rho = me.pure_state(_dark_4level(0.2, 1.0))
    out = me.build_rhs(scheme, me.DriveSnapshot(0.2, 1.0), rho)
    assert np.linalg.norm(out) <= 1e-10


def test_non_hermitian_rejected():
    rho = me.basis_projector(me.B).astype(complex)
    rho[0, 1] = 0.1
    with pytest.raises(ContractViolation):
        me.build_rhs(me.LevelScheme(), me.DriveSnapshot(), rho)


def test_kernel_matches_dense_generator():
    assert kernel_residual(0) <= 1e-12
    assert kernel_residual(1) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 5), st.floats(0, 20), st.floats(0, 3), st.floats(-2, 2), st.floats(-2, 2),
       st.integers(0, 2**31 - 1))
def test_kernel_matches_dense_random(op, oc, os_, d1, d2, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    table = _hold_table(op, oc, os_, 10.0)
    for mode in ("effective", "explicit"):
        out = np.zeros((4, 4), dtype=complex)
        _kernel.rhs(rho, 0.3, out, table, 1.0, np.full(3, 1 / 3), 0.0, d1, d2,
                    me.STARK_MODES[mode], 40.0, 0.0, 1.0, np.zeros(0, complex),
                    np.zeros(0, complex), np.zeros(3), np.zeros(3, complex), np.zeros(4))
        ref = me.build_rhs(me.LevelScheme(), me.DriveSnapshot(op, oc, os_, d1, d2, 40.0, 0.3),
                           rho, mode)
        assert np.abs(out - ref).max() <= 1e-12 * max(1.0, oc)


def test_single_step_decay():
    scheme = me.LevelScheme()
    dt = 0.01

    def rhs(t, rho):
        return me.build_rhs(scheme, me.DriveSnapshot(), rho)

    rho = me.step_rk4(me.basis_projector(me.E), 0.0, dt, rhs)
    # RK4 reproduces exp(-dt) through the dt^4 term
    assert abs(rho[me.E, me.E].real - math.exp(-dt)) <= dt**5 / 100


def test_rabi_cycle():
    scheme = me.LevelScheme(gamma_e=0.0)
    om = 0.7
    period = 2 * math.pi / om
    dt = period / 1000

    def rhs(t, rho):
        return me.build_rhs(scheme, me.DriveSnapshot(omega_p=om), rho)

    rho = me.basis_projector(me.B)
    for i in range(1000):
        rho = me.step_rk4(rho, i * dt, dt, rhs, rates={"omega_p": om})
        t = (i + 1) * dt
        assert abs(rho[me.B, me.B].real - math.cos(om * t / 2) ** 2) <= 1e-8


def test_rk4_halving_ratio():
    ratio = rabi_error(0.2) / rabi_error(0.1)
    assert 16 * 0.8 <= ratio <= 16 * 1.2


def test_step_guard_names_rate():
    with pytest.raises(StepSizeError) as exc:
        me.check_step(0.05, {"gamma_e": 1.0, "omega_c": 18.0})
    assert exc.value.name == "omega_c"
    with pytest.raises(StepSizeError):
        me.step_rk4(me.basis_projector(me.B), 0.0, 0.2, lambda t, r: 0 * r, rates={"omega_p": 1.0})


def test_evolve_zero_span():
    prog = me.DriveProgram(_hold_table(0.2, 1.0))
    traj = me.evolve(me.basis_projector(me.B), prog, (0.0, 0.0))
    assert len(traj.states) == 1
    np.testing.assert_array_equal(traj.final, me.basis_projector(me.B))


def test_evolve_rejects_oversized_step():
    prog = me.DriveProgram(_hold_table(0.2, 18.0, t_end=1e-6))
    with pytest.raises(StepSizeError):
        me.evolve(me.basis_projector(me.B), prog, (0.0, 1e-6), dt=1e-8)


def test_trace_drift_aborts(monkeypatch):
    monkeypatch.setattr(me, "TRACE_ABORT", -1.0)
    prog = me.DriveProgram(_hold_table(0.2, 1.0, t_end=1e-7))
    with pytest.raises(TraceDriftError):
        me.evolve(me.basis_projector(me.B), prog, (0.0, 1e-7))


def test_readout_at_node_pumps_out_of_b():
    s = pulses.readout_schedule(repump=False).single()
    prog = me.DriveProgram.from_schedule(s, pulses.StandingWave(18.0), 0.0)
    traj = me.evolve(me.basis_projector(me.B), prog, (0.0, s.period), record_every=100)
    assert traj.final[me.B, me.B].real < 0.05
    assert traj.trace_error() <= 1e-9 and traj.min_eigenvalue() >= -1e-8


def test_readout_at_antinode_returns_to_b():
    s = pulses.readout_schedule(repump=False).single()
    prog = me.DriveProgram.from_schedule(s, pulses.StandingWave(18.0), 780e-9 / 4)
    traj = me.evolve(me.basis_projector(me.B), prog, (0.0, s.period), record_every=1000)
    assert traj.final[me.B, me.B].real > 0.999


def test_scattered_photons_constant_record():
    t = np.linspace(0, 2e-6, 101)
    traj = me.Trajectory(times=t, states=np.zeros((101, 4, 4)), aux_times=t,
                         aux=np.full(101, 0.1), admixture=np.zeros(101))
    expected = 0.1 * constants.seconds_to_reduced(2e-6)
    assert me.scattered_photons(traj) == pytest.approx(expected, rel=1e-12)
    traj.aux = np.zeros(101)
    assert me.scattered_photons(traj) == 0.0


def test_photon_bins_match_record():
    s = pulses.readout_schedule().single()
    prog = me.DriveProgram.from_schedule(s, pulses.StandingWave(10.0), 3e-9)
    traj = me.evolve(me.basis_projector(me.B), prog, (0.0, s.period), marks=[s.coupling.t_end])
    assert traj.photon_bins.sum() == pytest.approx(me.scattered_photons(traj), rel=1e-10)
    assert traj.photon_bins[1] > 0


def test_dark_state_stationary_with_decay():
    op, oc = 0.2, 1.0
    v = _dark_4level(op, oc)
    prog = me.DriveProgram(_hold_table(op, oc, t_end=constants.reduced_to_seconds(10.0)))
    traj = me.evolve(me.pure_state(v), prog, (0.0, constants.reduced_to_seconds(10.0)),
                     record_every=50)
    leak = [1 - np.vdot(v, r @ v).real for r in traj.states]
    assert max(leak) < 1e-6


def test_adiabatic_transfer_matches_three_level_dark_state():
    op, oc = 3.0, 5.0
    # non-adiabatic loss scales as 1/tau
    tau = constants.reduced_to_seconds(8000.0)
    table = np.array([[pulses.COUPLING, 0.0, tau, 4 * tau, tau, oc],
                      [pulses.PROBE, tau, tau, 2 * tau, tau, op]])
    prog = me.DriveProgram(table)
    traj = me.evolve(me.basis_projector(me.B), prog, (0.0, 3 * tau), record_every=10**9,
                     record_aux=False)
    expected = abs(_dark_4level(op, oc)[me.B]) ** 2
    assert traj.final[me.B, me.B].real == pytest.approx(expected, abs=1e-6)


def test_effective_stark_matches_explicit_short_gate():
    s = pulses.phase_gate_schedule(probe_duration=6e-6, coupling_duration=8e-6, stark_duration=4e-6,
                                   t_rise=1e-6, stark_peak=8.9, stark_delta=200.0)
    sw = pulses.StandingWave(20.0, 8.0)
    scheme = me.LevelScheme(reference_level=True)
    rho0 = np.zeros((5, 5), dtype=complex)
    rho0[1, 1] = rho0[4, 4] = rho0[1, 4] = rho0[4, 1] = 0.5
    phases = {}
    for mode in ("effective", "explicit"):
        prog = me.DriveProgram.from_schedule(s, sw, 0.0, stark_mode=mode)
        traj = me.evolve(rho0, prog, (0.0, s.period), scheme=scheme, record_every=10**9,
                         record_aux=False)
        phases[mode] = np.angle(traj.final[1, 4])
    assert phases["effective"] == pytest.approx(phases["explicit"], rel=0.02)
