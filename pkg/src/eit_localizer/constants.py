"""Physical constants and 87Rb D2-line parameters.

All simulation rates are expressed in units of ``GAMMA_D2`` and all
simulation times in units of ``1 / GAMMA_D2``; the helpers at the bottom
convert between those reduced units and SI.
"""

import math

from scipy import constants as _c

HBAR = _c.hbar
EPSILON_0 = _c.epsilon_0
C_LIGHT = _c.c
K_B = _c.k
ATOMIC_MASS = _c.atomic_mass

# D2 natural linewidth, rad/s
GAMMA_D2 = 2 * math.pi * 6.06e6
WAVELENGTH_D2 = 780e-9
K_D2 = 2 * math.pi / WAVELENGTH_D2

# lattice chosen so neighbours sit at coupling antinodes
WAVELENGTH_LATTICE = 1.5 * WAVELENGTH_D2
QUBIT_SPACING = WAVELENGTH_LATTICE / 2

MASS_RB87 = 86.909180527 * ATOMIC_MASS

# Total squared transition dipole out of |F'=0, m'=0>, summed over the three
# F=1 sublevels, fixed by the decay rate: Gamma = w^3 |d|^2 / (3 pi eps0 hbar c^3).
_OMEGA_D2 = 2 * math.pi * C_LIGHT / WAVELENGTH_D2
DIPOLE_TOTAL_SQ = 3 * math.pi * EPSILON_0 * HBAR * C_LIGHT**3 * GAMMA_D2 / _OMEGA_D2**3
# F'=0 -> F=1 decays isotropically: each of the three sublevel transitions
# carries one third of the strength.
DIPOLE_F1_F0 = math.sqrt(DIPOLE_TOTAL_SQ / 3)

# detection chain
NUMERICAL_APERTURE = 0.5
DOWNSTREAM_EFFICIENCY = 0.40
COMBINED_EFFICIENCY = 0.03


def seconds_to_reduced(t):
    """Convert a time in seconds to units of 1/GAMMA_D2."""
    return t * GAMMA_D2


def reduced_to_seconds(tau):
    return tau / GAMMA_D2


def hz_to_gamma(f_hz):
    """Convert an ordinary frequency f (Hz) to the angular rate 2*pi*f in GAMMA_D2 units."""
    return 2 * math.pi * f_hz / GAMMA_D2
