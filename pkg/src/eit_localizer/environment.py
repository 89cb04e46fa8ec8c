"""Finite atomic localisation in the lattice and light scattered by the target atom.

Lengths are in metres, energies in joules and Rabi frequencies in units of
the D2 linewidth unless a name says otherwise.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from . import constants
from . import master_equation as me
from .errors import GridError
from .protocols import ScanProfile, profile_fwhm

FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))


@dataclass(frozen=True)
class TrapModel:
    """Lattice potential ``U0 sin^2(k_lat x)`` expanded around a minimum."""

    depth: float
    lambda_lattice: float = constants.WAVELENGTH_LATTICE
    mass: float = constants.MASS_RB87

    def __post_init__(self):
        if not self.depth > 0:
            raise ValueError("trap depth must be positive")
        if not self.lambda_lattice > 0 or not self.mass > 0:
            raise ValueError("lattice wavelength and mass must be positive")

    @classmethod
    def from_temperature(cls, kelvin, **kw):
        """Depth given as ``k_B * T``."""
        return cls(depth=constants.K_B * kelvin, **kw)

    @property
    def k_lattice(self):
        return 2 * math.pi / self.lambda_lattice

    @property
    def trap_frequency(self):
        """Angular oscillation frequency ``k_lat sqrt(2 U0 / m)``."""
        return self.k_lattice * math.sqrt(2 * self.depth / self.mass)


def ground_state_sigma(trap):
    """Position spread ``sqrt(hbar / (2 m omega))`` of the harmonic ground state."""
    return math.sqrt(constants.HBAR / (2 * trap.mass * trap.trap_frequency))


def _uniform_spacing(positions, sigma, points_per_sigma):
    base = float(np.min(np.diff(positions)))
    dx = base
    while dx > sigma / points_per_sigma:
        dx /= 2
    return dx


def convolve_profile(profile, sigma, feature_level=1e-3, margin=5.0, points_per_sigma=10):
    """Average ``profile`` over a Gaussian position density of width ``sigma``.

    The profile is linearly interpolated onto a uniform grid whose spacing
    is the finest input spacing, halved until it is at most
    ``sigma / points_per_sigma``.  For grids built by bisection every input
    sample is then a grid node.  The output extends past the input by the
    kernel half-width so the integrated counts are preserved exactly up to
    rounding.

    Parameters
    ----------
    profile : ScanProfile
    sigma : float
        Standard deviation of the position density (metres).
    feature_level : float
        Samples at or above ``feature_level`` times the peak belong to the
        feature, which must sit at least ``margin * sigma`` inside the grid.

    Returns
    -------
    ScanProfile
        ``metadata`` gains ``sigma``, ``mass_in`` and ``mass_out`` (sums
        times spacing on the uniform grid).

    Raises
    ------
    GridError
        The grid does not extend far enough past the feature.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    x, y = profile.positions, profile.values
    peak = float(np.max(y))
    inside = np.nonzero(y >= feature_level * peak)[0]
    lo, hi = x[inside[0]], x[inside[-1]]
    if lo - x[0] < margin * sigma or x[-1] - hi < margin * sigma:
        raise GridError(
            f"grid [{x[0]:.3g}, {x[-1]:.3g}] m leaves less than {margin:g} sigma "
            f"({margin * sigma:.3g} m) around the feature [{lo:.3g}, {hi:.3g}] m"
        )
    if sigma == 0:
        return replace(profile, columns={}, metadata={**profile.metadata, "sigma": 0.0})

    dx = _uniform_spacing(x, sigma, points_per_sigma)
    n = int(round((x[-1] - x[0]) / dx)) + 1
    grid = x[0] + dx * np.arange(n)
    vals = np.interp(grid, x, y)
    half = int(math.ceil(6 * sigma / dx))
    k = dx * np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (k / sigma) ** 2)
    kernel /= kernel.sum()
    out = np.convolve(vals, kernel, mode="full")
    out_x = x[0] - half * dx + dx * np.arange(len(out))
    meta = dict(profile.metadata)
    meta.update(sigma=sigma, mass_in=float(vals.sum() * dx), mass_out=float(out.sum() * dx))
    return ScanProfile(out_x, out, profile.quantity, {}, meta)


def gaussian_fwhm(sigma):
    return FWHM_PER_SIGMA * sigma


POLARIZATIONS = ("pi", "sigma+", "sigma-")


@dataclass(frozen=True)
class DipoleSource:
    """Classical dipole ``p`` oscillating at the D2 frequency.

    The quantisation axis is ``z``; ``pi`` points along it and ``sigma+-``
    are the spherical unit vectors ``-+(x +- i y)/sqrt(2)``.  ``magnitude``
    defaults to the single F=1 <-> F'=0 sublevel matrix element.
    """

    polarization: str = "pi"
    magnitude: float = constants.DIPOLE_F1_F0
    wavelength: float = constants.WAVELENGTH_D2
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")
        if self.magnitude < 0:
            raise ValueError("dipole magnitude must be non-negative")

    @property
    def k(self):
        return 2 * math.pi / self.wavelength

    @property
    def vector(self):
        if self.polarization == "pi":
            unit = np.array([0, 0, 1], dtype=complex)
        elif self.polarization == "sigma+":
            unit = -np.array([1, 1j, 0]) / math.sqrt(2)
        else:
            unit = np.array([1, -1j, 0]) / math.sqrt(2)
        return self.magnitude * unit


def dipole_field(src, r_obs):
    """Complex field amplitude (V/m) radiated by ``src`` at ``r_obs``.

    ``E = k^3/(4 pi eps0) { (r x p) x r / (kr) + (1/(kr)^3 - i/(kr)^2) [3 r (r.p) - p] }``
    with ``r`` the unit vector from the source; the retardation phase
    ``exp(ikr)`` is dropped since only magnitudes enter the perturbation.
    """
    d = np.asarray(r_obs, dtype=float) - np.asarray(src.origin, dtype=float)
    r = float(np.linalg.norm(d))
    if r == 0:
        raise ZeroDivisionError("field point coincides with the dipole")
    n = d / r
    p = src.vector
    kr = src.k * r
    far = np.cross(np.cross(n, p), n) / kr
    near = (1 / kr**3 - 1j / kr**2) * (3 * n * np.dot(n, p) - p)
    return src.k**3 / (4 * math.pi * constants.EPSILON_0) * (far + near)


def far_field(src, r_obs):
    """Radiation-zone limit ``k^2/(4 pi eps0 r) (r x p) x r``."""
    d = np.asarray(r_obs, dtype=float) - np.asarray(src.origin, dtype=float)
    r = float(np.linalg.norm(d))
    n = d / r
    return src.k**2 / (4 * math.pi * constants.EPSILON_0 * r) * np.cross(np.cross(n, src.vector), n)


def rabi_perturbation(src, r_obs, receiver_dipole=constants.DIPOLE_F1_F0):
    """Rabi frequency ``d |E| / (2 hbar)`` the source induces at ``r_obs``, in rad/s.

    The radiating atom's positive-frequency dipole ``d rho_eg`` is at most
    half the matrix element, so the field of a source of magnitude ``d`` is
    halved before it is multiplied by the receiver's matrix element.
    """
    e = np.linalg.norm(dipole_field(src, r_obs))
    return receiver_dipole * e / (2 * constants.HBAR)


def rabi_perturbations(r_obs, **kw):
    """:func:`rabi_perturbation` for every source polarisation, in rad/s."""
    return {pol: rabi_perturbation(DipoleSource(pol, **kw), r_obs) for pol in POLARIZATIONS}


@dataclass
class PerturbationPair:
    """Sampled probe and coupling Rabi-frequency perturbations on a uniform time grid.

    Amplitudes are complex Rabi frequencies in linewidth units, times in
    seconds.  They add to the drive Rabi frequencies, so the Hamiltonian
    picks up half of them.
    """

    t0: float
    step: float
    omega_p_dipole: np.ndarray
    omega_c_dipole: np.ndarray

    def scaled(self, factor):
        return PerturbationPair(self.t0, self.step, self.omega_p_dipole * factor,
                                self.omega_c_dipole * factor)

    def to_program(self):
        return me.Perturbation(self.t0, self.step,
                               0.5 * np.asarray(self.omega_p_dipole, dtype=complex),
                               0.5 * np.asarray(self.omega_c_dipole, dtype=complex))

    @property
    def peak(self):
        return float(max(np.abs(self.omega_p_dipole).max(initial=0),
                         np.abs(self.omega_c_dipole).max(initial=0)))


def emission_envelope(sw, schedule, peak, x=None, scheme=None, phase=0.0):
    """Perturbation following the target atom's emission during one sequence.

    The field scattered by the target scales with its dipole, so the
    envelope is ``sqrt(rho_ee(t) / max rho_ee)`` of the target's trajectory,
    scaled to ``peak`` (linewidth units) and given the phase ``phase``.
    """
    scheme = scheme or me.LevelScheme()
    single = schedule.single()
    x = sw.node_position if x is None else x
    prog = me.DriveProgram.from_schedule(single, sw.with_min(0.0), x)
    traj = me.evolve(me.basis_projector(me.B), prog, (0.0, single.period), scheme=scheme,
                     record_every=10**9)
    ree = np.clip(traj.aux, 0.0, None)
    top = ree.max()
    env = np.sqrt(ree / top) if top > 0 else np.zeros_like(ree)
    samples = peak * np.exp(1j * phase) * env
    return PerturbationPair(0.0, traj.dt, samples, samples.copy())


CROSSTALK_PHASES = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)


def neighbor_photons(sw, schedule, x, perturbation=None, scheme=None):
    """Photons scattered in one sequence by an atom at ``x`` starting in ``|b>``."""
    scheme = scheme or me.LevelScheme()
    single = schedule.single()
    pert = perturbation.to_program() if perturbation is not None else None
    prog = me.DriveProgram.from_schedule(single, sw.with_min(0.0), x, perturbation=pert)
    traj = me.evolve(me.basis_projector(me.B), prog, (0.0, single.period), scheme=scheme,
                     record_every=10**9, record_aux=False, dt=prog.default_dt(scheme)
                     if pert is None else _unperturbed_dt(single, sw, x, scheme))
    return float(traj.photon_bins.sum())


def _unperturbed_dt(schedule, sw, x, scheme):
    # keep the step identical with and without the perturbation so the
    # difference is not polluted by a change of discretisation
    return me.DriveProgram.from_schedule(schedule, sw.with_min(0.0), x).default_dt(scheme)


def crosstalk_delta(sw, schedule, perturbation, x=None, scheme=None, phases=CROSSTALK_PHASES):
    """Relative change of the neighbour's photon count caused by the target's field.

    ``perturbation`` is a :class:`PerturbationPair`; it is applied with each
    extra phase in ``phases`` and the largest change is reported.

    Returns
    -------
    dict
        ``delta`` (relative change, or absolute if the baseline is zero),
        ``relative`` flag, ``baseline``, ``per_phase`` changes and ``x``.
    """
    x = sw.node_position + constants.QUBIT_SPACING if x is None else x
    base = neighbor_photons(sw, schedule, x, None, scheme)
    changes = []
    for ph in phases:
        p = perturbation.scaled(np.exp(1j * ph))
        changes.append(abs(neighbor_photons(sw, schedule, x, p, scheme) - base))
    relative = base > 0
    per_phase = [c / base for c in changes] if relative else changes
    return {
        "x": x,
        "baseline": base,
        "relative": relative,
        "per_phase": per_phase,
        "delta": max(per_phase),
    }
