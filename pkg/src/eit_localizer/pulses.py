"""Pulse envelopes, counter-intuitive schedules and the coupling standing wave.

Times are in seconds, lengths in metres and Rabi frequencies in units of
the D2 linewidth.  Coupling-laser envelopes are *relative* (peak 1): the
local coupling Rabi frequency is the envelope times the standing-wave
amplitude at the atom's position.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import constants
from .errors import ScheduleError

PROBE, COUPLING, STARK = 0, 1, 2

_EPS_T = 1e-15


@dataclass(frozen=True)
class PulseEnvelope:
    """sin^2 ramp up, flat hold, sin^2 ramp down.

    ``peak`` is the Rabi frequency reached during the hold.  The envelope is
    exactly zero outside ``[t_start, t_start + duration]``.
    """

    t_start: float
    t_rise: float
    t_hold: float
    t_fall: float
    peak: float = 1.0
    shape: str = "sin2"

    def __post_init__(self):
        if self.shape != "sin2":
            raise ValueError(f"unsupported envelope shape {self.shape!r}")
        if self.t_rise <= 0 or self.t_fall <= 0 or self.t_hold < 0:
            raise ValueError("ramps must be positive and the hold non-negative")
        if self.peak < 0:
            raise ValueError("peak must be non-negative")

    @property
    def duration(self):
        return self.t_rise + self.t_hold + self.t_fall

    @property
    def t_end(self):
        return self.t_start + self.duration

    @property
    def plateau(self):
        """``(start, end)`` of the flat top."""
        return self.t_start + self.t_rise, self.t_start + self.t_rise + self.t_hold

    def shifted(self, dt):
        return replace(self, t_start=self.t_start + dt)

    def __call__(self, t):
        return envelope_value(self, t)


def envelope_value(env, t):
    """Instantaneous Rabi amplitude of ``env`` at time ``t`` (scalar or array)."""
    u = np.asarray(t, dtype=float) - env.t_start
    r, h, f = env.t_rise, env.t_hold, env.t_fall
    out = np.zeros_like(u)
    up = (u > 0) & (u < r)
    flat = (u >= r) & (u <= r + h)
    down = (u > r + h) & (u < r + h + f)
    out[up] = np.sin(0.5 * np.pi * u[up] / r) ** 2
    out[flat] = 1.0
    out[down] = np.sin(0.5 * np.pi * (r + h + f - u[down]) / f) ** 2
    out *= env.peak
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class StandingWave:
    """Coupling field formed by a counter-propagating beam pair.

    The beam amplitudes are fixed by the extrema: ``E1 + E2 -> omega_max`` at
    the antinodes and ``|E1 - E2| -> omega_min`` at the nodes.
    """

    omega_max: float
    omega_min: float = 0.0
    wavelength: float = constants.WAVELENGTH_D2
    node_position: float = 0.0

    def __post_init__(self):
        if not 0 <= self.omega_min <= self.omega_max:
            raise ValueError("need 0 <= omega_min <= omega_max")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")

    @property
    def k(self):
        return 2 * math.pi / self.wavelength

    def rabi(self, x):
        return standing_wave_rabi(self, x)

    def with_min(self, omega_min):
        return replace(self, omega_min=omega_min)


def standing_wave_rabi(sw, x):
    """Local coupling Rabi frequency ``sqrt(Omin^2 + (Omax^2 - Omin^2) sin^2(k (x - x0)))``."""
    s = np.sin(sw.k * (np.asarray(x, dtype=float) - sw.node_position))
    val = np.sqrt(sw.omega_min**2 + (sw.omega_max**2 - sw.omega_min**2) * s * s)
    return val if val.ndim else float(val)


@dataclass(frozen=True)
class LatticeGeometry:
    wavelength_d2: float = constants.WAVELENGTH_D2

    @property
    def lambda_lattice(self):
        return 1.5 * self.wavelength_d2

    @property
    def qubit_spacing(self):
        return self.lambda_lattice / 2

    def qubit_positions(self, node_position=0.0, n_neighbors=1):
        k = np.arange(-n_neighbors, n_neighbors + 1)
        return node_position + k * self.qubit_spacing


@dataclass(frozen=True)
class PulseSchedule:
    """One pulse sequence, optionally repeated back to back.

    Parameters
    ----------
    probe, coupling : PulseEnvelope
        ``coupling`` is relative (peak 1) and is scaled by the balanced
        standing wave.
    stark : PulseEnvelope or None
        Far-detuned light shifting ``|a>`` and ``|c>``; ``peak`` is its Rabi
        frequency and ``stark_delta`` its detuning.
    repump : PulseEnvelope or None
        Coupling-only pulse with an imbalanced beam pair; during it the
        standing-wave minimum is ``repump_min_fraction * omega_max``.
    period : float
        Sequence length; defaults to the end of the last pulse.
    """

    probe: PulseEnvelope
    coupling: PulseEnvelope
    stark: PulseEnvelope = None
    stark_delta: float = 200.0
    repump: PulseEnvelope = None
    repump_min_fraction: float = 0.1
    repeat_count: int = 1
    period: float = None
    check_nesting: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.repeat_count < 1:
            raise ScheduleError("repeat_count must be >= 1")
        if self.period is None:
            ends = [p.t_end for p in self.pulses()]
            object.__setattr__(self, "period", max(ends))
        if self.check_nesting:
            self.validate()

    def pulses(self):
        return [p for p in (self.probe, self.coupling, self.stark, self.repump) if p is not None]

    def validate(self):
        c0, c1 = self.coupling.plateau
        if not (self.coupling.t_start < self.probe.t_start and self.coupling.t_end > self.probe.t_end):
            raise ScheduleError("coupling must switch on before and off after the probe")
        if self.probe.t_start < c0 - _EPS_T or self.probe.t_end > c1 + _EPS_T:
            raise ScheduleError("coupling must be at full strength while the probe is on")
        if self.stark is not None:
            p0, p1 = self.probe.plateau
            lo, hi = max(p0, c0), min(p1, c1)
            if self.stark.t_start < lo - _EPS_T or self.stark.t_end > hi + _EPS_T:
                raise ScheduleError("stark pulse must sit inside the joint probe/coupling plateau")
            if self.stark_delta == 0:
                raise ScheduleError("stark detuning must be nonzero")
        if self.repump is not None:
            if self.repump.t_start < self.coupling.t_end - _EPS_T:
                raise ScheduleError("repump must follow the EIT pulse")
            if not 0 < self.repump_min_fraction <= 1:
                raise ScheduleError("repump_min_fraction must be in (0, 1]")
        for p in self.pulses():
            if p.t_end > self.period + _EPS_T:
                raise ScheduleError("pulse extends past the sequence period")

    @property
    def total_duration(self):
        return self.repeat_count * self.period

    @property
    def measurement_time(self):
        """Probe-on time summed over all repetitions."""
        return self.repeat_count * self.probe.duration

    @property
    def bandwidth(self):
        """Probe bandwidth ``pi / duration`` in rad/s."""
        return math.pi / self.probe.duration

    def fractional_bandwidth(self, omega_c):
        """``delta_omega / Omega_C`` with ``omega_c`` in linewidth units."""
        return self.bandwidth / (omega_c * constants.GAMMA_D2)

    def with_repeats(self, n):
        return replace(self, repeat_count=n)

    def single(self):
        return replace(self, repeat_count=1)

    def pulse_table(self, sw, x):
        """Pulses of every repetition with the local peaks at position ``x``.

        Returns an ``(n, 6)`` array of rows
        ``(channel, t_start, t_rise, t_hold, t_fall, peak)`` in seconds and
        linewidth units.
        """
        oc = standing_wave_rabi(sw, x)
        seq = [(PROBE, self.probe, self.probe.peak), (COUPLING, self.coupling, oc * self.coupling.peak)]
        if self.stark is not None:
            seq.append((STARK, self.stark, self.stark.peak))
        if self.repump is not None:
            rep_sw = sw.with_min(max(sw.omega_min, self.repump_min_fraction * sw.omega_max))
            seq.append((COUPLING, self.repump, standing_wave_rabi(rep_sw, x) * self.repump.peak))
        rows = []
        for i in range(self.repeat_count):
            off = i * self.period
            rows.extend(
                (ch, env.t_start + off, env.t_rise, env.t_hold, env.t_fall, pk) for ch, env, pk in seq
            )
        return np.array(rows, dtype=float)

    def max_rabi(self, sw):
        """Largest Rabi frequency any pulse reaches anywhere."""
        vals = [self.probe.peak, sw.omega_max * self.coupling.peak]
        if self.stark is not None:
            vals.append(self.stark.peak)
        return max(vals)


def readout_schedule(
    probe_peak=0.2,
    probe_duration=6e-6,
    t_rise=1e-6,
    coupling_lead=1e-6,
    repump_duration=6e-6,
    repump_min_fraction=0.1,
    repeats=16,
    repump=True,
):
    """State-selective readout sequence.

    The coupling ramps up during the first ``coupling_lead``, stays at full
    strength for the whole probe pulse and ramps down afterwards.  A
    coupling-only repump pulse with an imbalanced beam pair follows.
    """
    if probe_duration <= 0 or repump_duration <= 0 or t_rise <= 0:
        raise ScheduleError("durations must be positive")
    if coupling_lead < t_rise:
        raise ScheduleError("coupling must reach full strength before the probe starts")
    if probe_duration < 2 * t_rise:
        raise ScheduleError("probe shorter than its ramps")
    probe = PulseEnvelope(coupling_lead, t_rise, probe_duration - 2 * t_rise, t_rise, probe_peak)
    c_total = probe_duration + 2 * coupling_lead
    coupling = PulseEnvelope(0.0, t_rise, c_total - 2 * t_rise, t_rise, 1.0)
    rep = None
    if repump:
        rep = PulseEnvelope(c_total, t_rise, repump_duration - 2 * t_rise, t_rise, 1.0)
    return PulseSchedule(
        probe=probe,
        coupling=coupling,
        repump=rep,
        repump_min_fraction=repump_min_fraction,
        repeat_count=repeats,
    )


def phase_gate_schedule(
    probe_peak=8.0,
    probe_duration=25e-6,
    coupling_duration=35e-6,
    stark_peak=1.6,
    stark_duration=15e-6,
    stark_delta=200.0,
    t_rise=5e-6,
):
    """Coupling, then probe, then Stark light, switched off in reverse order.

    All three pulses are centred on the same instant.  ``stark_duration=0``
    gives the same sequence without the Stark pulse.
    """
    if probe_duration >= coupling_duration:
        raise ScheduleError("probe must be nested inside the coupling pulse")
    if stark_duration < 0:
        raise ScheduleError("stark_duration must be non-negative")
    mid = coupling_duration / 2
    coupling = PulseEnvelope(0.0, t_rise, coupling_duration - 2 * t_rise, t_rise, 1.0)
    probe = PulseEnvelope(mid - probe_duration / 2, t_rise, probe_duration - 2 * t_rise, t_rise, probe_peak)
    stark = None
    if stark_duration > 0 and stark_peak > 0:
        sr = min(t_rise, stark_duration / 2)
        stark = PulseEnvelope(mid - stark_duration / 2, sr, stark_duration - 2 * sr, sr, stark_peak)
    return PulseSchedule(probe=probe, coupling=coupling, stark=stark, stark_delta=stark_delta)


def nominal_stark_phase(schedule):
    """Flat-top phase bound ``Omega_s^2 / (2 Delta) * T`` in radians."""
    if schedule.stark is None:
        return 0.0
    shift = schedule.stark.peak**2 / (2 * schedule.stark_delta)
    return shift * constants.GAMMA_D2 * schedule.stark.duration
