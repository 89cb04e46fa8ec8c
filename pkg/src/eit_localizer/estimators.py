"""Estimator-style wrappers around the scan functions.

``fit`` runs the simulation (or convolution) and stores the resulting
profile; ``predict`` interpolates it at new positions.  Hyper-parameters
are plain constructor arguments, so ``get_params``/``set_params`` and
``sklearn.base.clone`` work as usual.  Positions are metres, given as a
1-D array or a single-column 2-D array.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import environment, protocols, pulses


def check_positions(X):
    """Validate positions and return them as a finite 1-D float array."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    arr = check_array(arr, ensure_2d=True, dtype=float)
    if arr.shape[1] != 1:
        raise ValueError(f"expected a single position column, got {arr.shape[1]}")
    return arr[:, 0]


class ReadoutLocalizer(BaseEstimator):
    """Photon-count profile of the state-selective readout.

    Attributes
    ----------
    profile_ : ScanProfile
    fwhm_ : float
    node_photons_ : float
    """

    def __init__(self, omega_c_max=18.0, omega_p=0.2, probe_duration=6e-6, t_rise=1e-6,
                 repeats=16, repump=True, repump_min_fraction=0.1, x_max=None,
                 combined_efficiency=0.03, arm_split_coupling=False):
        self.omega_c_max = omega_c_max
        self.omega_p = omega_p
        self.probe_duration = probe_duration
        self.t_rise = t_rise
        self.repeats = repeats
        self.repump = repump
        self.repump_min_fraction = repump_min_fraction
        self.x_max = x_max
        self.combined_efficiency = combined_efficiency
        self.arm_split_coupling = arm_split_coupling

    def fit(self, X=None, y=None):
        """Run the scan.  ``X`` is ignored; the grid is adaptive."""
        sched = pulses.readout_schedule(
            probe_peak=self.omega_p, probe_duration=self.probe_duration, t_rise=self.t_rise,
            coupling_lead=self.t_rise, repeats=self.repeats, repump=self.repump,
            repump_min_fraction=self.repump_min_fraction,
        )
        grid = protocols.ScanGrid(self.x_max) if self.x_max else None
        det = protocols.DetectionModel(combined_efficiency=self.combined_efficiency)
        self.profile_ = protocols.readout_scan(pulses.StandingWave(self.omega_c_max), sched, det,
                                               grid, arm_split_coupling=self.arm_split_coupling)
        self.fwhm_ = self.profile_.fwhm
        self.node_photons_ = self.profile_.value_at(0.0)
        return self

    def predict(self, X):
        """Scattered photons at positions ``X``."""
        check_is_fitted(self, "profile_")
        return np.interp(check_positions(X), self.profile_.positions, self.profile_.values)

    def predict_detected(self, X):
        return self.predict(X) * self.combined_efficiency


class PhaseGateLocalizer(BaseEstimator):
    """Phase and spontaneous-emission profiles of the Stark phase gate."""

    def __init__(self, omega_c_max=208.0, omega_c_min=8.0, omega_p=8.0, stark_omega=1.6,
                 stark_delta=200.0, stark_duration=15e-6, stark_mode="effective", x_max=None,
                 n_initial=9, arm_split_coupling=False):
        self.omega_c_max = omega_c_max
        self.omega_c_min = omega_c_min
        self.omega_p = omega_p
        self.stark_omega = stark_omega
        self.stark_delta = stark_delta
        self.stark_duration = stark_duration
        self.stark_mode = stark_mode
        self.x_max = x_max
        self.n_initial = n_initial
        self.arm_split_coupling = arm_split_coupling

    def fit(self, X=None, y=None):
        sched = pulses.phase_gate_schedule(probe_peak=self.omega_p, stark_peak=self.stark_omega,
                                           stark_delta=self.stark_delta,
                                           stark_duration=self.stark_duration)
        sw = pulses.StandingWave(self.omega_c_max, self.omega_c_min)
        grid = protocols.ScanGrid(self.x_max or sw.wavelength / 4, n_initial=self.n_initial)
        self.phase_profile_, self.se_profile_ = protocols.phase_gate_scan(
            sw, sched, grid, self.stark_mode, arm_split_coupling=self.arm_split_coupling)
        self.fwhm_ = self.phase_profile_.fwhm
        return self

    def predict(self, X):
        """Gate phase (rad) at positions ``X``."""
        check_is_fitted(self, "phase_profile_")
        p = self.phase_profile_
        return np.interp(check_positions(X), p.positions, p.values)

    def predict_se(self, X):
        check_is_fitted(self, "se_profile_")
        p = self.se_profile_
        return np.interp(check_positions(X), p.positions, p.values)


class ThermalBroadening(TransformerMixin, BaseEstimator):
    """Average a position profile over the lattice ground-state density.

    ``fit(X, y)`` takes positions ``X`` and profile values ``y``;
    ``transform(X)`` returns the averaged profile at ``X``.
    """

    def __init__(self, depth_kelvin=5e-3, lambda_lattice=None):
        self.depth_kelvin = depth_kelvin
        self.lambda_lattice = lambda_lattice

    def fit(self, X, y):
        x = check_positions(X)
        vals = np.asarray(y, dtype=float)
        if vals.shape != x.shape:
            raise ValueError("X and y must have the same length")
        order = np.argsort(x)
        kw = {"lambda_lattice": self.lambda_lattice} if self.lambda_lattice else {}
        trap = environment.TrapModel.from_temperature(self.depth_kelvin, **kw)
        self.sigma_ = environment.ground_state_sigma(trap)
        self.profile_ = environment.convolve_profile(
            protocols.ScanProfile(x[order], vals[order]), self.sigma_)
        self.fwhm_ = self.profile_.fwhm
        return self

    def transform(self, X):
        check_is_fitted(self, "profile_")
        return np.interp(check_positions(X), self.profile_.positions, self.profile_.values,
                         left=0.0, right=0.0)
