"""Cross-module invariant checks run by the ``validate`` subcommand.

Each check returns a dict with ``name``, ``value``, ``limit`` and
``passed``.  All of them are cheap (a few seconds in total).
"""

import math

import numpy as np

from . import _kernel, darkstate, environment, protocols, pulses
from . import master_equation as me


def rabi_error(dt, omega=1.0, t_end=10.0):
    """Final ``rho_ee`` error of RK4 on an undamped resonantly driven two-level atom."""

    def rhs(t, rho):
        h = np.array([[0, omega / 2], [omega / 2, 0]], dtype=complex)
        return -1j * (h @ rho - rho @ h)

    n = int(round(t_end / dt))
    rho = np.array([[1, 0], [0, 0]], dtype=complex)
    for i in range(n):
        rho = me.step_rk4(rho, i * dt, dt, rhs)
    return abs(rho[1, 1].real - math.sin(omega * t_end / 2) ** 2)


def rk4_order(dt=0.2, **kw):
    """Observed convergence order from step sizes ``dt`` and ``dt / 2``."""
    return math.log2(rabi_error(dt, **kw) / rabi_error(dt / 2, **kw))


def _check(name, value, limit, passed):
    return {"name": name, "value": float(value), "limit": float(limit), "passed": bool(passed)}


def dark_state_residual(omega_p, omega_c):
    """Largest deviation from the closed-form dressed-state identities, relative to ``|H|``."""
    states, ev = darkstate.dressed_eigensystem(omega_p, omega_c)
    h = darkstate.hamiltonian(omega_p, omega_c)
    u = states.as_matrix()
    res = np.abs(h @ u - u * ev).max()
    res = max(res, np.abs(u.conj().T @ u - np.eye(3)).max())
    res = max(res, abs(states.a_zero[2]))
    res = max(res, np.abs(np.sort(ev) - np.linalg.eigvalsh(h)).max())
    return float(res / max(1.0, np.linalg.norm(h, 2)))


def kernel_residual(seed=0):
    """Compiled vs dense generator on a random state with every term switched on."""
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    scheme = me.LevelScheme(ground_dephasing=0.05, reference_level=True)
    worst = 0.0
    for mode in ("effective", "explicit"):
        table = np.array([[0, -1.0, 1.0, 1.0, 1.0, 0.7], [1, -1.0, 1.0, 1.0, 1.0, 2.3],
                          [2, -1.0, 1.0, 1.0, 1.0, 1.6]])
        t = 0.4
        out = np.zeros((5, 5), dtype=complex)
        _kernel.rhs(rho, t, out, table, 1.0, np.full(3, 1 / 3), 0.05, 0.3, -0.2,
                    me.STARK_MODES[mode], 20.0, 0.0, 1.0, np.zeros(0, complex), np.zeros(0, complex),
                    np.zeros(3), np.zeros(3, complex), np.zeros(5))
        drive = me.DriveSnapshot(0.7, 2.3, 1.6, 0.3, -0.2, 20.0, t)
        ref = me.build_rhs(scheme, drive, rho, mode)
        worst = max(worst, float(np.abs(out - ref).max()))
    return worst


def invariant_suite():
    checks = []
    res = max(dark_state_residual(op, oc) for op, oc in [(0.2, 18.0), (1.0, 1.0), (8.0, 0.5)])
    checks.append(_check("dark_state_identities", res, 1e-12, res <= 1e-12))
    res = kernel_residual()
    checks.append(_check("kernel_matches_dense_generator", res, 1e-12, res <= 1e-12))

    sw = pulses.StandingWave(18.0)
    pt = protocols.readout_point(0.0, sw, pulses.readout_schedule())
    checks.append(_check("trace_drift", pt["trace_error"], 1e-9, pt["trace_error"] <= 1e-9))
    checks.append(_check("hermiticity", pt["hermiticity_error"], 1e-10,
                         pt["hermiticity_error"] <= 1e-10))
    checks.append(_check("positivity", pt["min_eigenvalue"], -1e-8, pt["min_eigenvalue"] >= -1e-8))

    order = rk4_order()
    checks.append(_check("rk4_order", order, 4.0, abs(order - 4) <= 0.8))

    x = np.linspace(-100e-9, 100e-9, 401)
    prof = protocols.ScanProfile(x, np.exp(-0.5 * (x / 5e-9) ** 2))
    conv = environment.convolve_profile(prof, 8.3e-9)
    mass = abs(conv.metadata["mass_out"] / conv.metadata["mass_in"] - 1)
    checks.append(_check("convolution_mass", mass, 1e-6, mass <= 1e-6))

    src = environment.DipoleSource("pi")
    r = np.array([200 * src.wavelength / (2 * math.pi), 0.0, 0.0])
    full = np.linalg.norm(environment.dipole_field(src, r))
    far = np.linalg.norm(environment.far_field(src, r))
    dev = abs(full / far - 1)
    checks.append(_check("dipole_far_field", dev, 1e-2, dev <= 1e-2))

    env = pulses.PulseEnvelope(0.0, 1.0, 2.0, 1.0, 1.0)
    t = np.linspace(-0.5, 4.5, 20001)
    jump = np.abs(np.diff(env(t))).max()
    bound = math.pi * (t[1] - t[0])
    checks.append(_check("envelope_continuity", jump, bound, jump <= bound))
    return checks
