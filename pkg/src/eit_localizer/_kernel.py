"""Compiled fixed-step RK4 propagation of the rotating-frame density matrix.

Everything here is in reduced units: rates in GAMMA_D2, time in 1/GAMMA_D2.
Level indices are fixed: a=0, b=1, c=2, e=3 and the optional uncoupled
reference r=4.

The generator is hand-expanded instead of built from dense Lindblad
operators; :func:`eit_localizer.master_equation.build_rhs` is the dense
reference it is tested against.
"""

import math

import numba as nb
import numpy as np

A, B, C, E = 0, 1, 2, 3

STARK_OFF, STARK_EXPLICIT, STARK_EFFECTIVE = 0, 1, 2

STATUS_OK, STATUS_TRACE = 0, 1


@nb.njit(cache=True)
def _envelope(u, rise, hold, fall):
    if u <= 0.0 or u >= rise + hold + fall:
        return 0.0
    if u < rise:
        s = math.sin(0.5 * math.pi * u / rise)
        return s * s
    if u <= rise + hold:
        return 1.0
    s = math.sin(0.5 * math.pi * (rise + hold + fall - u) / fall)
    return s * s


@nb.njit(cache=True)
def _drives(t, table, out):
    out[0] = 0.0
    out[1] = 0.0
    out[2] = 0.0
    for i in range(table.shape[0]):
        ch = int(table[i, 0])
        out[ch] += table[i, 5] * _envelope(t - table[i, 1], table[i, 2], table[i, 3], table[i, 4])


@nb.njit(cache=True)
def _interp(t, t0, step, samples):
    n = samples.shape[0]
    if n == 0:
        return 0j
    u = (t - t0) / step
    if u <= 0.0:
        return samples[0]
    if u >= n - 1:
        return samples[n - 1]
    i = int(u)
    w = u - i
    return samples[i] * (1.0 - w) + samples[i + 1] * w


@nb.njit(cache=True)
def rhs(rho, t, out, table, gamma, branching, dephasing, d1, d2, stark_mode, stark_delta,
        pert_t0, pert_step, pert_p, pert_c, drv, v, d):
    """Write d(rho)/dt into ``out``; returns the Stark-admixture scattering rate.

    ``drv``, ``v`` and ``d`` are scratch buffers of length 3, 3 and ``n``.
    """
    n = rho.shape[0]
    _drives(t, table, drv)
    op, oc, os_ = drv[0], drv[1], drv[2]
    v[A] = -0.5 * oc
    v[B] = -0.5 * op
    v[C] = -0.5 * oc
    if pert_p.shape[0] > 0:
        # perturbations are coupling matrix elements, not half-Rabi amplitudes
        v[B] -= _interp(t, pert_t0, pert_step, pert_p)
        pc = _interp(t, pert_t0, pert_step, pert_c)
        v[A] -= pc
        v[C] -= pc
    s_eff = 0.0
    q = 0.0
    if stark_mode == STARK_EXPLICIT and os_ != 0.0:
        # e^{-i(Delta - D1) t}: positive Delta lowers the bright ground state, as in the effective form
        w = -0.5 * os_ * complex(math.cos((stark_delta - d1) * t), -math.sin((stark_delta - d1) * t))
        v[A] += w
        v[C] += w
    elif stark_mode == STARK_EFFECTIVE and os_ != 0.0:
        s_eff = os_ * os_ / (4.0 * stark_delta)
        q = gamma * (os_ / (2.0 * stark_delta)) ** 2

    for i in range(n):
        d[i] = 0.0
    d[B] = d2 - d1
    d[E] = -d1

    for i in range(n):
        for j in range(n):
            # (H rho)_ij
            if i == E:
                hr = d[E] * rho[E, j] + np.conj(v[A]) * rho[A, j] + np.conj(v[B]) * rho[B, j] + np.conj(v[C]) * rho[C, j]
            elif i < E:
                hr = d[i] * rho[i, j] + v[i] * rho[E, j]
            else:
                hr = 0j
            # (rho H)_ij
            if j == E:
                rh = rho[i, E] * d[E] + rho[i, A] * v[A] + rho[i, B] * v[B] + rho[i, C] * v[C]
            elif j < E:
                rh = rho[i, j] * d[j] + rho[i, E] * np.conj(v[j])
            else:
                rh = 0j
            out[i, j] = -1j * (hr - rh)

    if s_eff != 0.0:
        # H_eff = -s (|a>+|c>)(<a|+<c|)
        for j in range(n):
            rs = rho[A, j] + rho[C, j]
            out[A, j] += 1j * s_eff * rs
            out[C, j] += 1j * s_eff * rs
        for i in range(n):
            cs = rho[i, A] + rho[i, C]
            out[i, A] -= 1j * s_eff * cs
            out[i, C] -= 1j * s_eff * cs

    ree = rho[E, E].real
    for g in range(3):
        out[g, g] += gamma * branching[g] * ree
    for j in range(n):
        out[E, j] -= 0.5 * gamma * rho[E, j]
        out[j, E] -= 0.5 * gamma * rho[j, E]

    if dephasing != 0.0:
        # Lindblad operators sqrt(dephasing)|g><g| on the three ground levels
        for i in range(n):
            for j in range(n):
                if i != j:
                    k = (i < E) + (j < E)
                    out[i, j] -= 0.5 * dephasing * k * rho[i, j]

    adm = 0.0
    if q != 0.0:
        bright = (rho[A, A] + rho[C, C] + rho[A, C] + rho[C, A]).real
        adm = q * bright
        for g in range(3):
            out[g, g] += q * branching[g] * bright
        for j in range(n):
            rs = rho[A, j] + rho[C, j]
            out[A, j] -= 0.5 * q * rs
            out[C, j] -= 0.5 * q * rs
        for i in range(n):
            cs = rho[i, A] + rho[i, C]
            out[i, A] -= 0.5 * q * cs
            out[i, C] -= 0.5 * q * cs
    return adm


@nb.njit(cache=True)
def admixture_rate(rho, t, table, gamma, stark_delta, drv):
    """Stark-admixture scattering rate of ``rho`` at ``t`` (effective mode only)."""
    _drives(t, table, drv)
    os_ = drv[2]
    if os_ == 0.0:
        return 0.0
    bright = (rho[A, A] + rho[C, C] + rho[A, C] + rho[C, A]).real
    return gamma * (os_ / (2.0 * stark_delta)) ** 2 * bright


@nb.njit(cache=True)
def propagate(rho0, t0, t1, nsteps, table, gamma, branching, dephasing, d1, d2,
              stark_mode, stark_delta, pert_t0, pert_step, pert_p, pert_c,
              marks, record_every, trace_tol, record_aux):
    """Integrate from ``t0`` to ``t1`` in ``nsteps`` equal RK4 steps.

    Photon integrals (trapezoidal in ``gamma * rho_ee`` and, separately, the
    Stark admixture rate) are binned by the step midpoint against the sorted
    ``marks``.  Every ``record_every`` steps the state is stored.

    With ``record_aux`` the per-step ``rho_ee`` and admixture rate are kept too.

    Returns ``(rho, photons, admixture, rec_t, rec_rho, aux_ree, aux_adm,
    max_asym, max_trace_dev, status)``.
    """
    n = rho0.shape[0]
    h = (t1 - t0) / nsteps if nsteps > 0 else 0.0
    rho = rho0.copy()
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    tmp = np.empty_like(rho)
    drv = np.zeros(3)
    v = np.empty(3, np.complex128)
    d = np.zeros(n)
    nbins = marks.shape[0] + 1
    photons = np.zeros(nbins)
    admix = np.zeros(nbins)
    nrec = nsteps // record_every + 2
    rec_t = np.empty(nrec)
    rec_rho = np.empty((nrec, n, n), np.complex128)
    rec_t[0] = t0
    rec_rho[0] = rho
    irec = 1
    naux = nsteps + 1 if record_aux else 0
    aux_ree = np.zeros(naux)
    aux_adm = np.zeros(naux)
    if record_aux:
        aux_ree[0] = rho[E, E].real
    max_asym = 0.0
    max_dev = 0.0
    status = STATUS_OK

    for s in range(nsteps):
        t = t0 + s * h
        adm1 = rhs(rho, t, k1, table, gamma, branching, dephasing, d1, d2, stark_mode, stark_delta,
                   pert_t0, pert_step, pert_p, pert_c, drv, v, d)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + 0.5 * h * k1[i, j]
        rhs(tmp, t + 0.5 * h, k2, table, gamma, branching, dephasing, d1, d2, stark_mode, stark_delta,
            pert_t0, pert_step, pert_p, pert_c, drv, v, d)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + 0.5 * h * k2[i, j]
        rhs(tmp, t + 0.5 * h, k3, table, gamma, branching, dephasing, d1, d2, stark_mode, stark_delta,
            pert_t0, pert_step, pert_p, pert_c, drv, v, d)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + h * k3[i, j]
        rhs(tmp, t + h, k4, table, gamma, branching, dephasing, d1, d2, stark_mode, stark_delta,
            pert_t0, pert_step, pert_p, pert_c, drv, v, d)
        ree0 = rho[E, E].real
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + (h / 6.0) * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        tr = 0.0
        for i in range(n):
            for j in range(i, n):
                a = tmp[i, j]
                b = np.conj(tmp[j, i])
                dev = abs(a - b)
                if dev > max_asym:
                    max_asym = dev
                m = 0.5 * (a + b)
                rho[i, j] = m
                rho[j, i] = np.conj(m)
            rho[i, i] = rho[i, i].real
            tr += rho[i, i].real
        dev = abs(tr - 1.0)
        if dev > max_dev:
            max_dev = dev
        # record at the step midpoint
        mid = t + 0.5 * h
        b = 0
        while b < marks.shape[0] and mid >= marks[b]:
            b += 1
        photons[b] += 0.5 * h * gamma * (ree0 + rho[E, E].real)
        if stark_mode == STARK_EFFECTIVE:
            adm_next = admixture_rate(rho, t + h, table, gamma, stark_delta, drv)
            admix[b] += 0.5 * h * (adm1 + adm_next)
            if record_aux:
                aux_adm[s] = adm1
                aux_adm[s + 1] = adm_next
        if record_aux:
            aux_ree[s + 1] = rho[E, E].real
        if (s + 1) % record_every == 0 or s == nsteps - 1:
            rec_t[irec] = t + h
            rec_rho[irec] = rho
            irec += 1
        if dev > trace_tol:
            status = STATUS_TRACE
            break
    return (rho, photons, admix, rec_t[:irec], rec_rho[:irec], aux_ree, aux_adm,
            max_asym, max_dev, status)
