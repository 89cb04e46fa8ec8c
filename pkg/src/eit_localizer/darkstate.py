"""Dressed states of a resonantly driven three-level Lambda system.

Basis ordering is ``(|a>, |b>, |e>)``: the probe couples ``|a>`` to ``|e>``
and the coupling laser couples ``|b>`` to ``|e>``.  Rabi frequencies and
detunings are angular frequencies in units of the D2 linewidth.

The interaction Hamiltonian uses the half-Rabi convention of the
four-level dynamics (off-diagonal ``-Omega/2``), with the two-photon
detuning on ``|b>`` and the one-photon detuning on ``|e>``::

    H = [[ 0,       0,               -Omega_P/2 ],
         [ 0,       -(D1 - D2),      -Omega_C/2 ],
         [ -Omega_P/2, -Omega_C/2,   -D1        ]]

With that choice the closed-form eigenvectors below are exact eigenvectors
of ``H`` at two-photon resonance, signs included.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDriveError


@dataclass(frozen=True)
class MixingAngles:
    theta: float
    phi: float


@dataclass(frozen=True)
class DressedStates:
    a_plus: np.ndarray
    a_zero: np.ndarray
    a_minus: np.ndarray

    def as_matrix(self):
        """Columns ordered ``(a_plus, a_zero, a_minus)``."""
        return np.column_stack([self.a_plus, self.a_zero, self.a_minus])


def _check_drive(omega_p, omega_c):
    if omega_p < 0 or omega_c < 0:
        raise ValueError("Rabi amplitudes must be non-negative")
    if omega_p == 0 and omega_c == 0:
        raise DegenerateDriveError("probe and coupling Rabi frequencies are both zero")


def hamiltonian(omega_p, omega_c, delta1=0.0, delta2=0.0):
    """Rotating-wave interaction Hamiltonian in the ``(a, b, e)`` basis."""
    return np.array(
        [
            [0.0, 0.0, -omega_p / 2],
            [0.0, -(delta1 - delta2), -omega_c / 2],
            [-omega_p / 2, -omega_c / 2, -delta1],
        ],
        dtype=complex,
    )


def mixing_angles(omega_p, omega_c, delta1=0.0):
    """Return ``(theta, phi)`` with ``tan theta = Op/Oc`` and ``tan 2phi = Omega/D1``.

    Both angles lie in ``[0, pi/2]``.  ``Omega = sqrt(Op^2 + Oc^2)``.
    """
    _check_drive(omega_p, omega_c)
    theta = float(np.arctan2(omega_p, omega_c))
    phi = 0.5 * float(np.arctan2(np.hypot(omega_p, omega_c), delta1))
    return MixingAngles(theta, phi)


def dark_state(omega_p, omega_c):
    """Dark superposition ``cos(theta)|a> - sin(theta)|b>``."""
    theta = mixing_angles(omega_p, omega_c).theta
    return np.array([np.cos(theta), -np.sin(theta), 0.0], dtype=complex)


def dark_state_b_population(omega_p, omega_c):
    """``|<b|a0>|^2 = Op^2 / (Op^2 + Oc^2)``."""
    _check_drive(omega_p, omega_c)
    return omega_p**2 / (omega_p**2 + omega_c**2)


def dressed_eigensystem(omega_p, omega_c, delta1=0.0, delta2=0.0):
    """Dressed states and their energies.

    At two-photon resonance (``delta1 == delta2``) the closed-form vectors
    are returned.  Otherwise ``H`` is diagonalised numerically and each
    eigenvector is labelled by its largest overlap with the resonant
    closed-form states, with its global phase fixed to match.

    Returns
    -------
    states : DressedStates
    energies : ndarray, shape (3,)
        Eigenvalues ordered like ``(a_plus, a_zero, a_minus)``.
    """
    ang = mixing_angles(omega_p, omega_c, delta1)
    st, ct = np.sin(ang.theta), np.cos(ang.theta)
    sp, cp = np.sin(ang.phi), np.cos(ang.phi)
    a_plus = np.array([st * sp, ct * sp, cp], dtype=complex)
    a_zero = np.array([ct, -st, 0.0], dtype=complex)
    a_minus = np.array([st * cp, ct * cp, -sp], dtype=complex)

    if delta1 == delta2:
        omega = np.hypot(omega_p, omega_c)
        energies = np.array([-0.5 * omega * cp / sp, 0.0, 0.5 * omega * sp / cp])
        return DressedStates(a_plus, a_zero, a_minus), energies

    vals, vecs = np.linalg.eigh(hamiltonian(omega_p, omega_c, delta1, delta2))
    reference = np.column_stack([a_plus, a_zero, a_minus])
    overlap = np.abs(reference.conj().T @ vecs)
    order = []
    for row in overlap:
        masked = [row[j] if j not in order else -1.0 for j in range(3)]
        order.append(int(np.argmax(masked)))
    out = []
    for k, j in enumerate(order):
        v = vecs[:, j]
        ph = np.vdot(reference[:, k], v)
        out.append(v * (np.conj(ph) / abs(ph)) if abs(ph) > 0 else v)
    return DressedStates(*out), vals[order]


def transfer_fwhm_estimate(omega_p, omega_c_max, wavelength):
    """Rough localisation width ``wavelength * Op / Oc_max`` (same length unit as ``wavelength``)."""
    if omega_c_max == 0:
        raise ZeroDivisionError("omega_c_max must be positive")
    if omega_c_max < 0:
        raise ValueError("omega_c_max must be positive")
    return wavelength * omega_p / omega_c_max
