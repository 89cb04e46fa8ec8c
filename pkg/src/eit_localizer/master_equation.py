"""Rotating-frame optical Bloch equations for the four-level readout scheme.

Levels are ordered ``(a, b, c, e)`` with ``a = |F=1, m=-1>``,
``b = |F=1, m=0>``, ``c = |F=1, m=+1>`` and ``e = |F'=0, m'=0>``.  An optional
fifth level ``r`` is left uncoupled and serves as a phase reference.

Hamiltonian (units of the D2 linewidth, half-Rabi convention)::

    H = (D2 - D1)|b><b| - D1|e><e|
        - Oc/2 (|a><e| + |c><e|) - Op/2 |b><e| + h.c.

with ``D1`` the coupling and ``D2`` the probe detuning.  The excited state
decays at ``gamma_e`` into ``a``, ``b`` and ``c`` with the scheme's branching
ratios; ground states do not decay.

Stark light acts on ``a`` and ``c`` either as an explicit far-detuned
coupling to ``e`` (``"explicit"``) or through its adiabatically eliminated
form (``"effective"``): a shift ``-Os^2/(2 Delta)`` of the bright
combination ``(|a> + |c>)/sqrt(2)`` plus scattering out of it at
``gamma_e * (Os / (2 Delta))^2`` per unit amplitude.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernel, constants
from .errors import ContractViolation, StepSizeError, TraceDriftError

A, B, C, E, R = 0, 1, 2, 3, 4
LABELS = ("a", "b", "c", "e", "r")

STARK_MODES = {"off": _kernel.STARK_OFF, "explicit": _kernel.STARK_EXPLICIT,
               "effective": _kernel.STARK_EFFECTIVE}

# dt * rate ceilings: the hard guard and the default working point
STABILITY_LIMIT = 0.1
DEFAULT_DT_RATE = 0.05

TRACE_ABORT = 1e-6


@dataclass(frozen=True)
class LevelScheme:
    gamma_e: float = 1.0
    branching: tuple = (1 / 3, 1 / 3, 1 / 3)
    ground_dephasing: float = 0.0
    reference_level: bool = False

    def __post_init__(self):
        if self.gamma_e < 0 or self.ground_dephasing < 0 or min(self.branching) < 0:
            raise ValueError("rates and branching fractions must be non-negative")
        if len(self.branching) != 3 or abs(sum(self.branching) - 1) > 1e-12:
            raise ValueError("branching fractions into a, b, c must sum to 1")

    @property
    def dim(self):
        return 5 if self.reference_level else 4


@dataclass(frozen=True)
class DriveSnapshot:
    """Instantaneous drive amplitudes (linewidth units) at time ``t`` (reduced units)."""

    omega_p: float = 0.0
    omega_c: float = 0.0
    omega_stark: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    delta_stark: float = 200.0
    t: float = 0.0


def basis_projector(level, dim=4):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[level, level] = 1.0
    return rho


def pure_state(vec):
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def hamiltonian(scheme, drive, stark_mode="effective"):
    n = scheme.dim
    h = np.zeros((n, n), dtype=complex)
    h[B, B] = drive.delta2 - drive.delta1
    h[E, E] = -drive.delta1
    h[A, E] = h[C, E] = -drive.omega_c / 2
    h[B, E] = -drive.omega_p / 2
    if drive.omega_stark:
        if stark_mode == "explicit":
            w = -drive.omega_stark / 2 * np.exp(-1j * (drive.delta_stark - drive.delta1) * drive.t)
            h[A, E] += w
            h[C, E] += w
        elif stark_mode == "effective":
            s = drive.omega_stark**2 / (4 * drive.delta_stark)
            bright = np.zeros(n)
            bright[A] = bright[C] = 1.0
            h -= s * np.outer(bright, bright)
    h[E, :E] = h[:E, E].conj()
    return h


def jump_operators(scheme, drive, stark_mode="effective"):
    n = scheme.dim
    ops = []
    for g in (A, B, C):
        op = np.zeros((n, n), dtype=complex)
        op[g, E] = math.sqrt(scheme.gamma_e * scheme.branching[g])
        ops.append(op)
    if scheme.ground_dephasing:
        for g in (A, B, C):
            op = np.zeros((n, n), dtype=complex)
            op[g, g] = math.sqrt(scheme.ground_dephasing)
            ops.append(op)
    if stark_mode == "effective" and drive.omega_stark:
        amp = drive.omega_stark / (2 * drive.delta_stark)
        for g in (A, B, C):
            op = np.zeros((n, n), dtype=complex)
            op[g, A] = op[g, C] = amp * math.sqrt(scheme.gamma_e * scheme.branching[g])
            ops.append(op)
    return ops


def build_rhs(scheme, drive, rho, stark_mode="effective"):
    """Lindblad generator ``-i[H, rho] + sum_k D[L_k] rho`` built from dense operators.

    This is the reference form; the compiled integrator expands the same
    generator by hand.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (scheme.dim, scheme.dim):
        raise ContractViolation(f"rho must be {scheme.dim}x{scheme.dim}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ContractViolation("density matrix is not Hermitian")
    h = hamiltonian(scheme, drive, stark_mode)
    out = -1j * (h @ rho - rho @ h)
    for op in jump_operators(scheme, drive, stark_mode):
        opd = op.conj().T
        out += op @ rho @ opd - 0.5 * (opd @ op @ rho + rho @ opd @ op)
    return out


def check_step(dt, rates):
    """Raise :class:`StepSizeError` if ``dt * rate`` exceeds the guard for any named rate."""
    for name, rate in rates.items():
        if dt * abs(rate) > STABILITY_LIMIT:
            raise StepSizeError(dt, abs(rate), name)


def step_rk4(rho, t, dt, rhs, rates=None):
    """One classical RK4 step of ``d(rho)/dt = rhs(t, rho)`` followed by re-symmetrisation.

    ``rates`` is an optional ``{name: rate}`` mapping checked against the
    step-size guard.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if rates:
        check_step(dt, rates)
    k1 = rhs(t, rho)
    k2 = rhs(t + dt / 2, rho + dt / 2 * k1)
    k3 = rhs(t + dt / 2, rho + dt / 2 * k2)
    k4 = rhs(t + dt, rho + dt * k3)
    out = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return 0.5 * (out + out.conj().T)


@dataclass
class Perturbation:
    """Sampled time-dependent additions to the probe and coupling matrix elements.

    ``probe`` and ``coupling`` are complex coupling matrix elements (not
    half-Rabi amplitudes) in linewidth units, on a uniform grid starting at
    ``t0`` with spacing ``step`` (seconds).
    """

    t0: float
    step: float
    probe: np.ndarray
    coupling: np.ndarray


@dataclass
class DriveProgram:
    """Pulses as seen by one atom: local peaks, detunings and Stark handling.

    ``table`` rows are ``(channel, t_start, t_rise, t_hold, t_fall, peak)``
    in seconds / linewidth units, as produced by
    :meth:`eit_localizer.pulses.PulseSchedule.pulse_table`.
    """

    table: np.ndarray
    delta1: float = 0.0
    delta2: float = 0.0
    stark_mode: str = "effective"
    stark_delta: float = 200.0
    perturbation: Perturbation = None

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float).reshape(-1, 6)
        if self.stark_mode not in STARK_MODES:
            raise ValueError(f"unknown stark mode {self.stark_mode!r}")

    @classmethod
    def from_schedule(cls, schedule, sw, x, **kw):
        kw.setdefault("stark_delta", schedule.stark_delta)
        return cls(schedule.pulse_table(sw, x), **kw)

    @property
    def end(self):
        if not len(self.table):
            return 0.0
        return float(np.max(self.table[:, 1] + self.table[:, 2:5].sum(axis=1)))

    def rates(self, scheme):
        """Named rates (linewidth units) entering the step-size guard."""
        out = {"gamma_e": scheme.gamma_e}
        for ch, name in enumerate(("omega_p", "omega_c", "omega_stark")):
            sel = self.table[self.table[:, 0] == ch, 5]
            if len(sel):
                out[name] = float(sel.max())
        out["delta1"] = self.delta1
        out["delta2"] = self.delta2
        if self.stark_mode == "explicit" and "omega_stark" in out:
            out["delta_stark"] = self.stark_delta
        if self.perturbation is not None:
            out["perturbation"] = 2 * float(max(np.abs(self.perturbation.probe).max(initial=0),
                                                np.abs(self.perturbation.coupling).max(initial=0)))
        return out

    def max_rate(self, scheme):
        return max(abs(v) for v in self.rates(scheme).values())

    def default_dt(self, scheme, dt_rate=DEFAULT_DT_RATE):
        """Step (seconds) putting ``dt * max_rate`` at ``dt_rate``."""
        return dt_rate / self.max_rate(scheme) / constants.GAMMA_D2

    def snapshot(self, t):
        """Drive amplitudes at time ``t`` (seconds)."""
        from .pulses import PulseEnvelope

        vals = [0.0, 0.0, 0.0]
        for ch, t0, r, h, f, pk in self.table:
            vals[int(ch)] += float(PulseEnvelope(t0, r, h, f, pk)(t))
        return DriveSnapshot(vals[0], vals[1], vals[2], self.delta1, self.delta2,
                             self.stark_delta, constants.seconds_to_reduced(t))


@dataclass
class Trajectory:
    """Sampled evolution.

    ``times`` are seconds.  ``aux`` holds ``rho_ee`` at every integrator
    step (``aux_times``), and ``admixture`` the effective-Stark scattering
    rate (linewidth units) on the same grid.
    """

    times: np.ndarray
    states: np.ndarray
    aux_times: np.ndarray
    aux: np.ndarray
    admixture: np.ndarray
    photon_bins: np.ndarray = None
    admixture_bins: np.ndarray = None
    marks: np.ndarray = None
    steps: int = 0
    dt: float = 0.0
    max_asymmetry: float = 0.0
    max_trace_deviation: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]

    def populations(self):
        return np.real(np.einsum("tii->ti", self.states))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.states).min())

    def hermiticity_error(self):
        return float(np.max(np.abs(self.states - np.conj(np.swapaxes(self.states, 1, 2)))))

    def trace_error(self):
        return float(np.max(np.abs(np.trace(self.states, axis1=1, axis2=2) - 1)))


def _to_kernel(program, scheme):
    table = program.table.copy()
    table[:, 1:5] *= constants.GAMMA_D2
    pert = program.perturbation
    if pert is None:
        p_t0, p_step = 0.0, 1.0
        pp = pc = np.zeros(0, dtype=complex)
    else:
        p_t0 = constants.seconds_to_reduced(pert.t0)
        p_step = constants.seconds_to_reduced(pert.step)
        pp = np.ascontiguousarray(pert.probe, dtype=complex)
        pc = np.ascontiguousarray(pert.coupling, dtype=complex)
    return dict(
        table=table,
        gamma=float(scheme.gamma_e),
        branching=np.asarray(scheme.branching, dtype=float),
        dephasing=float(scheme.ground_dephasing),
        d1=float(program.delta1),
        d2=float(program.delta2),
        stark_mode=STARK_MODES[program.stark_mode],
        stark_delta=float(program.stark_delta),
        pert_t0=p_t0,
        pert_step=p_step,
        pert_p=pp,
        pert_c=pc,
    )


def evolve(rho0, program, t_span, dt=None, scheme=None, marks=(), record_every=1,
           record_aux=True, check_trace=True):
    """Integrate ``rho0`` under ``program`` over ``t_span = (t0, t1)`` seconds.

    The span is split into equal steps no longer than ``dt`` (default: the
    program's :meth:`DriveProgram.default_dt`).  Photon integrals are also
    accumulated per interval between consecutive ``marks``.

    Raises
    ------
    StepSizeError
        ``dt`` violates the stability guard for one of the program's rates.
    TraceDriftError
        ``|Tr rho - 1|`` exceeded 1e-6.
    """
    scheme = scheme or LevelScheme(reference_level=np.shape(rho0)[0] == 5)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (scheme.dim, scheme.dim):
        raise ContractViolation(f"rho0 must be {scheme.dim}x{scheme.dim}")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10:
        raise ContractViolation("rho0 is not Hermitian")
    t0, t1 = map(float, t_span)
    if t1 < t0:
        raise ValueError("t_span must be increasing")
    if dt is None:
        dt = program.default_dt(scheme)
    span = t1 - t0
    nsteps = int(math.ceil(span / dt - 1e-9)) if span > 0 else 0
    h = span / nsteps if nsteps else 0.0
    check_step(constants.seconds_to_reduced(dt), program.rates(scheme))

    kw = _to_kernel(program, scheme)
    marks_r = np.asarray([constants.seconds_to_reduced(m) for m in marks], dtype=float)
    out = _kernel.propagate(
        rho0, constants.seconds_to_reduced(t0), constants.seconds_to_reduced(t1), nsteps,
        kw["table"], kw["gamma"], kw["branching"], kw["dephasing"], kw["d1"], kw["d2"],
        kw["stark_mode"], kw["stark_delta"], kw["pert_t0"], kw["pert_step"], kw["pert_p"],
        kw["pert_c"], marks_r, max(1, int(record_every)),
        TRACE_ABORT if check_trace else np.inf, bool(record_aux),
    )
    rho, ph, adm, rec_t, rec_rho, aux_ree, aux_adm, asym, dev, status = out
    if not record_aux:
        aux_ree = aux_adm = np.zeros(0)
    traj = Trajectory(
        times=constants.reduced_to_seconds(rec_t),
        states=rec_rho,
        aux_times=t0 + h * np.arange(len(aux_ree)),
        aux=aux_ree,
        admixture=aux_adm,
        photon_bins=ph,
        admixture_bins=adm,
        marks=np.asarray(marks, dtype=float),
        steps=nsteps,
        dt=h,
        max_asymmetry=asym,
        max_trace_deviation=dev,
    )
    if status == _kernel.STATUS_TRACE:
        raise TraceDriftError(
            f"trace drifted by {dev:.3g} (> {TRACE_ABORT:g}) before t={traj.times[-1]:.6g}s; "
            f"dt={h:.3g}s, rates={program.rates(scheme)}"
        )
    return traj


def scattered_photons(traj, gamma_e=1.0):
    """Trapezoidal integral of ``gamma_e * rho_ee`` plus the Stark admixture record.

    ``gamma_e`` is in linewidth units and the trajectory times in seconds.
    """
    if len(traj.aux) < 2:
        return 0.0
    tau = constants.seconds_to_reduced(np.asarray(traj.aux_times, dtype=float))
    total = np.trapezoid(gamma_e * np.asarray(traj.aux), tau)
    if traj.admixture is not None and len(traj.admixture) == len(traj.aux):
        total += np.trapezoid(np.asarray(traj.admixture), tau)
    return float(total)
