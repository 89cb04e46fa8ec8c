"""Spatial scans of the state-selective readout and the dark-state phase gate.

Every scan evaluates an independent single-atom simulation per position.
Positions are in metres and measured from the coupling-field node.  The
standing wave is even about its node, so by default only ``x >= 0`` is
simulated and the profile is mirrored.

Scans take an optional ``map_fn`` with the signature of the builtin
:func:`map`; passing ``executor.map`` parallelises them.  The per-position
work functions are module level so they pickle.
"""

from dataclasses import dataclass, field, replace
from functools import partial
import math
import warnings

import numpy as np

from . import constants
from . import master_equation as me
from .errors import GridError

# states are stored roughly this many times per trajectory for the
# positivity check
_RECORDS_PER_TRAJECTORY = 200


@dataclass(frozen=True)
class DetectionModel:
    numerical_aperture: float = constants.NUMERICAL_APERTURE
    downstream_efficiency: float = constants.DOWNSTREAM_EFFICIENCY
    combined_efficiency: float = constants.COMBINED_EFFICIENCY

    def __post_init__(self):
        if not 0 < self.combined_efficiency <= 1:
            raise ValueError("combined_efficiency must lie in (0, 1]")

    def detected(self, photons):
        return np.asarray(photons, dtype=float) * self.combined_efficiency


@dataclass(frozen=True)
class QubitArrayContext:
    """Target atom at a coupling node with one neighbour on each side."""

    target: float = 0.0
    spacing: float = constants.QUBIT_SPACING
    initial_states: tuple = ("0", "0", "0")

    @property
    def neighbor_positions(self):
        return (self.target - self.spacing, self.target + self.spacing)


def profile_fwhm(positions, values):
    """Full width at half maximum around the global peak.

    The half-maximum crossings on either side of the peak are located by
    linear interpolation between the bracketing samples.

    Raises
    ------
    GridError
        The profile does not fall below half maximum on both sides.
    """
    x = np.asarray(positions, dtype=float)
    y = np.asarray(values, dtype=float)
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    if not half > 0:
        raise GridError("profile has no positive peak")
    right = np.nonzero(y[i:] < half)[0]
    left = np.nonzero(y[: i + 1][::-1] < half)[0]
    if not len(right) or not len(left):
        raise GridError("profile does not drop below half maximum inside the grid")
    j = i + right[0]
    xr = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    j = i - left[0]
    xl = x[j] + (half - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j])
    return float(xr - xl)


@dataclass
class ScanProfile:
    """Position-indexed protocol output.

    ``columns`` holds extra per-position arrays (breakdowns, diagnostics)
    and ``metadata`` the parameters that produced the scan.
    """

    positions: np.ndarray
    values: np.ndarray
    quantity: str = "photons"
    columns: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.positions.shape != self.values.shape or self.positions.ndim != 1:
            raise ValueError("positions and values must be 1-D and the same length")
        if np.any(np.diff(self.positions) <= 0):
            raise ValueError("positions must be strictly increasing")

    @property
    def fwhm(self):
        return profile_fwhm(self.positions, self.values)

    def value_at(self, x):
        return float(np.interp(x, self.positions, self.values))

    def with_values(self, values, quantity=None):
        return replace(self, values=np.asarray(values, dtype=float),
                       quantity=quantity or self.quantity, columns=dict(self.columns))


@dataclass(frozen=True)
class ScanGrid:
    """Half-range grid refined around the peak until spacing <= fwhm * fraction.

    The initial grid is ``n_initial`` uniform points on ``[0, x_max]``;
    refinement bisects intervals, so every sample lies on a dyadic
    subdivision of the initial spacing.
    """

    x_max: float
    n_initial: int = 17
    adaptive: bool = True
    spacing_fraction: float = 0.1
    max_rounds: int = 8
    symmetric: bool = True

    def __post_init__(self):
        if self.x_max <= 0 or self.n_initial < 3:
            raise GridError("grid needs x_max > 0 and at least 3 points")

    def initial(self):
        return np.linspace(0.0, self.x_max, self.n_initial)


def _mirror(x, cols):
    if x[0] != 0.0:
        raise GridError("symmetric grids must start at the node")
    xs = np.concatenate([-x[:0:-1], x])
    return xs, {k: np.concatenate([v[:0:-1], v]) for k, v in cols.items()}


def _adaptive_scan(point_fn, grid, key, map_fn=map, offset=0.0):
    """Evaluate ``point_fn`` on ``grid``; returns sorted positions and column dict."""
    results = {}

    def run(xs):
        new = [x for x in xs if x not in results]
        for x, r in zip(new, map_fn(point_fn, [offset + x for x in new])):
            results[x] = r

    run(list(grid.initial()))
    for _ in range(grid.max_rounds if grid.adaptive else 0):
        xs = np.array(sorted(results))
        ys = np.array([results[x][key] for x in xs])
        full_x, full = _mirror(xs, {key: ys}) if grid.symmetric else (xs, {key: ys})
        try:
            width = profile_fwhm(full_x, full[key])
        except GridError:
            break
        target = grid.spacing_fraction * width
        reach = 0.75 * width
        gaps = np.diff(xs)
        mids = [0.5 * (xs[i] + xs[i + 1]) for i in range(len(gaps))
                if gaps[i] > target and xs[i] < reach]
        if not mids:
            break
        run(mids)
    xs = np.array(sorted(results))
    cols = {k: np.array([results[x][k] for x in xs]) for k in results[xs[0]]}
    if grid.symmetric:
        return _mirror(xs, cols)
    return xs, cols


def _record_every(program, scheme, span):
    steps = span / program.default_dt(scheme)
    return max(1, int(steps // _RECORDS_PER_TRAJECTORY))


def _diagnostics(traj):
    return {
        "steps": traj.steps,
        "trace_error": traj.max_trace_deviation,
        "hermiticity_error": traj.max_asymmetry,
        "min_eigenvalue": traj.min_eigenvalue(),
    }


def arm_split(sw, split):
    """Per-transition standing wave.

    With ``split`` the quoted coupling Rabi frequency is taken to be that of
    the linearly polarised beam, so each of its sigma+ and sigma- parts
    drives its arm at ``1/sqrt(2)`` of it.
    """
    if not split:
        return sw
    f = 1 / math.sqrt(2)
    return replace(sw, omega_max=sw.omega_max * f, omega_min=sw.omega_min * f)


def readout_point(x, sw, schedule, scheme=None):
    """Photons scattered by an atom at ``x`` that starts every sequence in ``|b>``.

    One sequence is simulated and the result scaled by ``repeat_count``: the
    atom is assumed back in ``|b>`` at the start of each sequence.
    """
    scheme = scheme or me.LevelScheme()
    single = schedule.single()
    prog = me.DriveProgram.from_schedule(single, sw, x)
    traj = me.evolve(me.basis_projector(me.B), prog, (0.0, single.period), scheme=scheme,
                     marks=[single.coupling.t_end], record_aux=False,
                     record_every=_record_every(prog, scheme, single.period))
    n = schedule.repeat_count
    eit, rep = traj.photon_bins[0] * n, traj.photon_bins[1:].sum() * n
    out = {"photons": eit + rep, "photons_eit": eit, "photons_repump": rep}
    out.update(_diagnostics(traj))
    return out


def readout_scan(sw, schedule, detection=None, grid=None, scheme=None, map_fn=map,
                 arm_split_coupling=False):
    """Scattered photons versus position for the readout protocol.

    Parameters
    ----------
    sw : StandingWave
        Balanced coupling field (``omega_min`` is ignored and taken as 0
        during the EIT pulse).
    schedule : PulseSchedule
    detection : DetectionModel, optional
    grid : ScanGrid, optional
        Defaults to a half-range of four times the transfer estimate.
    arm_split_coupling : bool
        See :func:`arm_split`.

    Returns
    -------
    ScanProfile
        ``values`` are photons over all repetitions; ``columns`` carry the
        detected counts, the EIT/repump split and per-position diagnostics.
    """
    detection = detection or DetectionModel()
    sw_eit = arm_split(sw.with_min(0.0), arm_split_coupling)
    if grid is None:
        est = constants.WAVELENGTH_D2 * schedule.probe.peak / sw.omega_max
        grid = ScanGrid(min(4 * est, sw.wavelength / 4))
    fn = partial(readout_point, sw=sw_eit, schedule=schedule, scheme=scheme)
    xs, cols = _adaptive_scan(fn, grid, "photons", map_fn, offset=sw.node_position)
    cols["detected"] = detection.detected(cols["photons"])
    meta = {
        "omega_c_max": sw.omega_max,
        "omega_p": schedule.probe.peak,
        "repeat_count": schedule.repeat_count,
        "probe_duration": schedule.probe.duration,
        "arm_split_coupling": bool(arm_split_coupling),
        "combined_efficiency": detection.combined_efficiency,
    }
    return ScanProfile(xs + sw.node_position, cols.pop("photons"), "photons", cols, meta)


def neighbor_crosstalk(sw, schedule, context=None, scheme=None, arm_split_coupling=False):
    """Photons scattered at the two neighbouring sites, with the node count for scale.

    Returns a dict with ``positions``, ``photons`` (per neighbour),
    ``node_photons``, ``ratio`` (worst neighbour / node) and
    ``bandwidth_ratio_sq = (delta_omega / Omega_C,max)^2``.
    """
    context = context or QubitArrayContext(target=sw.node_position)
    sw_eit = arm_split(sw.with_min(0.0), arm_split_coupling)
    node = readout_point(context.target, sw_eit, schedule, scheme)["photons"]
    pos = context.neighbor_positions
    counts = [readout_point(x, sw_eit, schedule, scheme)["photons"] for x in pos]
    return {
        "positions": pos,
        "photons": tuple(counts),
        "node_photons": node,
        "ratio": max(counts) / node if node > 0 else math.inf,
        "bandwidth_ratio_sq": schedule.fractional_bandwidth(sw.omega_max) ** 2,
    }


def stark_effective_shift(omega_stark, delta):
    """Light shift ``Os^2 / (2 Delta)`` and excited-state admixture ``(Os / 2 Delta)^2``.

    Both inputs in linewidth units.  Warns when ``|Delta| < 10 Os``, where
    the perturbative forms lose accuracy.
    """
    if delta == 0:
        raise ZeroDivisionError("stark detuning must be nonzero")
    if omega_stark > 0 and abs(delta) < 10 * omega_stark:
        warnings.warn("stark detuning is less than 10x the Rabi frequency; "
                      "effective shift is inaccurate", RuntimeWarning, stacklevel=2)
    return omega_stark**2 / (2 * delta), (omega_stark / (2 * delta)) ** 2


def _phase_rho0():
    rho = np.zeros((5, 5), dtype=complex)
    rho[me.B, me.B] = rho[me.R, me.R] = rho[me.B, me.R] = rho[me.R, me.B] = 0.5
    return rho


def phase_point(x, sw, schedule, stark_mode="effective", scheme=None):
    """Gate phase and spontaneous-emission probability for an atom at ``x``.

    The atom starts in ``(|b> + |r>)/sqrt(2)`` with ``|r>`` uncoupled; the
    phase is the change of ``arg rho_br``.  The emission probability is
    normalised to the initial ``|b>`` population so it refers to an atom
    prepared in ``|b>``.
    """
    scheme = scheme or me.LevelScheme(reference_level=True)
    if not scheme.reference_level:
        scheme = replace(scheme, reference_level=True)
    rho0 = _phase_rho0()
    prog = me.DriveProgram.from_schedule(schedule.single(), sw, x, stark_mode=stark_mode)
    traj = me.evolve(rho0, prog, (0.0, schedule.period), scheme=scheme, record_aux=False,
                     record_every=_record_every(prog, scheme, schedule.period))
    final = traj.final
    emitted = traj.photon_bins.sum() + traj.admixture_bins.sum()
    out = {
        "phase": float(np.angle(final[me.B, me.R] / rho0[me.B, me.R])),
        "se_prob": float(emitted / rho0[me.B, me.B].real),
        "coherence": float(abs(final[me.B, me.R])),
    }
    out.update(_diagnostics(traj))
    return out


def compare_stark_modes(sw, schedule, x=0.0, scheme=None):
    """Run one position in both Stark modes and report relative differences."""
    eff = phase_point(x, sw, schedule, "effective", scheme)
    exp = phase_point(x, sw, schedule, "explicit", scheme)

    def rel(a, b):
        return abs(a - b) / abs(b) if b else abs(a - b)

    return {
        "x": x,
        "effective": eff,
        "explicit": exp,
        "phase_rel_diff": rel(eff["phase"], exp["phase"]),
        "se_rel_diff": rel(eff["se_prob"], exp["se_prob"]),
    }


MODE_TOLERANCE = 0.05


def phase_gate_scan(sw, schedule, grid=None, stark_mode="effective", scheme=None, map_fn=map,
                    validate_points=(), arm_split_coupling=False):
    """Phase and spontaneous-emission profiles of the Stark phase gate.

    Parameters
    ----------
    sw : StandingWave
        Coupling field with its nonzero minimum at the node.
    validate_points : sequence of float
        Offsets from the node at which an effective-mode scan is cross-checked
        against the explicit Stark coupling; a relative disagreement above
        5% raises a :class:`RuntimeWarning`.

    Returns
    -------
    phase, se : ScanProfile
        Both on the same positions; ``phase.metadata["mode_checks"]`` holds
        the validation results.
    """
    sw_arm = arm_split(sw, arm_split_coupling)
    if grid is None:
        grid = ScanGrid(sw.wavelength / 4)
    fn = partial(phase_point, sw=sw_arm, schedule=schedule, stark_mode=stark_mode, scheme=scheme)
    xs, cols = _adaptive_scan(fn, grid, "phase", map_fn, offset=sw.node_position)
    checks = []
    if stark_mode == "effective" and schedule.stark is not None:
        for x in validate_points:
            chk = compare_stark_modes(sw_arm, schedule, sw.node_position + x, scheme)
            checks.append(chk)
            worst = max(chk["phase_rel_diff"], chk["se_rel_diff"])
            if worst > MODE_TOLERANCE:
                warnings.warn(f"effective and explicit Stark modes differ by {worst:.1%} "
                              f"at x={x:.3g} m", RuntimeWarning, stacklevel=2)
    meta = {
        "omega_c_max": sw.omega_max,
        "omega_c_min": sw.omega_min,
        "omega_p": schedule.probe.peak,
        "omega_stark": schedule.stark.peak if schedule.stark is not None else 0.0,
        "stark_delta": schedule.stark_delta,
        "stark_mode": stark_mode,
        "arm_split_coupling": bool(arm_split_coupling),
        "mode_checks": checks,
    }
    pos = xs + sw.node_position
    se = cols.pop("se_prob")
    phase = ScanProfile(pos, cols.pop("phase"), "phase", cols, meta)
    return phase, ScanProfile(pos, se, "se_prob", dict(cols), dict(meta))
