"""Run subcommands from a :class:`~eit_localizer.config.SimConfig` and write their outputs.

Each subcommand produces one CSV table and one JSON file holding the run
manifest and scalar results.  Tables are formatted with a fixed number of
significant digits and every position is computed independently, so the
CSV bytes do not depend on the number of worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
import csv
import io
import json
import math
import os
import time
import warnings

import numpy as np

from . import __version__, constants, darkstate, environment, protocols, pulses
from . import master_equation as me
from .errors import GridError

THREADS_ENV = "EIT_LOCALIZER_THREADS"

SUBCOMMANDS = ("dark-state", "readout-scan", "convolve", "dipole-check", "phase-scan", "validate")

DEFAULT_PRESET = {
    "readout-scan": "fig5",
    "convolve": "fig6",
    "phase-scan": "fig9",
    "dipole-check": "fig6",
}


def resolve_jobs(jobs=None):
    """Worker count: the environment variable wins over ``jobs``, default all cores."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ValueError("job count must be >= 1")
    return jobs


@contextmanager
def mapper(jobs):
    """Yield an order-preserving ``map`` backed by ``jobs`` processes."""
    if jobs <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield lambda fn, items: pool.map(fn, items, chunksize=1)


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# builders ------------------------------------------------------------------


def scheme_from(cfg, reference=False):
    return me.LevelScheme(gamma_e=cfg["scheme.gamma_e"], ground_dephasing=cfg["scheme.dephasing"],
                          reference_level=reference)


def readout_schedule_from(cfg):
    return pulses.readout_schedule(
        probe_peak=cfg["probe.omega"],
        probe_duration=cfg["probe.duration"],
        t_rise=cfg["probe.rise"],
        coupling_lead=cfg["coupling.lead"],
        repump_duration=cfg["repump.duration"],
        repump_min_fraction=cfg["repump.min_fraction"],
        repeats=cfg["sequence.repeats"],
        repump=cfg["repump.enabled"],
    )


def gate_schedule_from(cfg):
    return pulses.phase_gate_schedule(
        probe_peak=cfg["probe.omega"],
        probe_duration=cfg["probe.duration"],
        coupling_duration=cfg["coupling.duration"],
        stark_peak=cfg["stark.omega"],
        stark_duration=cfg["stark.duration"],
        stark_delta=cfg["stark.delta"],
        t_rise=cfg["probe.rise"],
    )


def grid_from(cfg, default_x_max):
    x_max = cfg["grid.x_max"] or default_x_max
    return protocols.ScanGrid(x_max, n_initial=max(3, cfg["grid.points"]),
                              adaptive=cfg["grid.adaptive"],
                              spacing_fraction=cfg["grid.spacing_fraction"])


def readout_default_x_max(cfg, omega_max):
    est = constants.WAVELENGTH_D2 * cfg["probe.omega"] / omega_max
    return min(4 * est, constants.WAVELENGTH_D2 / 4)


def _safe_fwhm(profile):
    try:
        return profile.fwhm
    except GridError:
        return float("nan")


# subcommands ---------------------------------------------------------------


def run_dark_state(cfg, map_fn):
    header = ["omega_p_over_gamma", "omega_c_over_gamma", "theta_rad", "phi_rad",
              "dark_b_population", "lambda_plus_over_gamma", "lambda_zero_over_gamma",
              "lambda_minus_over_gamma", "fwhm_transfer_nm"]
    rows = []
    op = cfg["probe.omega"]
    for oc in cfg["coupling.omega_max"]:
        ang = darkstate.mixing_angles(op, oc)
        _, ev = darkstate.dressed_eigensystem(op, oc)
        est = darkstate.transfer_fwhm_estimate(op, oc, constants.WAVELENGTH_D2)
        rows.append([op, oc, ang.theta, ang.phi, darkstate.dark_state_b_population(op, oc),
                     ev[0], ev[1], ev[2], est * 1e9])
    return header, rows, {"rows": len(rows)}, {}


def run_readout(cfg, map_fn):
    sched = readout_schedule_from(cfg)
    det = protocols.DetectionModel(combined_efficiency=cfg["detection.efficiency"])
    scheme = scheme_from(cfg)
    header = ["x_nm", "omega_c_max_over_gamma", "photons", "photons_eit", "photons_repump",
              "detected", "steps", "note"]
    rows, results, steps = [], [], {}
    for om in cfg["coupling.omega_max"]:
        sw = pulses.StandingWave(om, 0.0, node_position=cfg["coupling.node"])
        grid = grid_from(cfg, readout_default_x_max(cfg, om))
        prof = protocols.readout_scan(sw, sched, det, grid, scheme, map_fn,
                                      arm_split_coupling=cfg["coupling.arm_split"])
        c = prof.columns
        for i, x in enumerate(prof.positions):
            note = "node" if x == cfg["coupling.node"] else ""
            rows.append([x * 1e9, om, prof.values[i], c["photons_eit"][i], c["photons_repump"][i],
                         c["detected"][i], c["steps"][i], note])
        xt = protocols.neighbor_crosstalk(sw, sched, scheme=scheme,
                                          arm_split_coupling=cfg["coupling.arm_split"])
        node = prof.value_at(cfg["coupling.node"])
        results.append({
            "omega_c_max_over_gamma": om,
            "fwhm_nm": _safe_fwhm(prof) * 1e9,
            "node_photons": node,
            "node_photons_eit": float(np.interp(cfg["coupling.node"], prof.positions, c["photons_eit"])),
            "node_detected": node * det.combined_efficiency,
            "neighbor_photons": xt["photons"],
            "neighbor_ratio": xt["ratio"],
            "bandwidth_ratio_sq": xt["bandwidth_ratio_sq"],
            "max_trace_error": float(np.max(c["trace_error"])),
            "max_hermiticity_error": float(np.max(c["hermiticity_error"])),
            "min_eigenvalue": float(np.min(c["min_eigenvalue"])),
        })
        steps[str(om)] = [int(s) for s in c["steps"]]
    summary = {
        "scans": results,
        "sequence_time_us": sched.total_duration * 1e6,
        "measurement_time_us": sched.measurement_time * 1e6,
    }
    return header, rows, summary, steps


def run_convolve(cfg, map_fn):
    sched = readout_schedule_from(cfg)
    scheme = scheme_from(cfg)
    trap = environment.TrapModel.from_temperature(cfg["trap.depth"])
    sigma = environment.ground_state_sigma(trap)
    header = ["x_nm", "omega_c_max_over_gamma", "photons_convolved"]
    rows, results, steps = [], [], {}
    for om in cfg["coupling.omega_max"]:
        sw = pulses.StandingWave(om, 0.0, node_position=cfg["coupling.node"])
        default = readout_default_x_max(cfg, om) + 6 * sigma
        prof = protocols.readout_scan(sw, sched, None, grid_from(cfg, default), scheme, map_fn,
                                      arm_split_coupling=cfg["coupling.arm_split"])
        conv = environment.convolve_profile(prof, sigma)
        rows.extend([x * 1e9, om, v] for x, v in zip(conv.positions, conv.values))
        results.append({
            "omega_c_max_over_gamma": om,
            "fwhm_raw_nm": _safe_fwhm(prof) * 1e9,
            "fwhm_nm": _safe_fwhm(conv) * 1e9,
            "mass_in": conv.metadata["mass_in"],
            "mass_out": conv.metadata["mass_out"],
        })
        steps[str(om)] = [int(s) for s in prof.columns["steps"]]
    summary = {
        "sigma_nm": sigma * 1e9,
        "density_fwhm_nm": environment.gaussian_fwhm(sigma) * 1e9,
        "trap_frequency_rad_s": trap.trap_frequency,
        "scans": results,
    }
    return header, rows, summary, steps


def run_dipole(cfg, map_fn):
    dist = cfg["dipole.distance"]
    r = np.array([dist, 0.0, 0.0])
    header = ["polarization", "distance_nm", "field_v_per_m", "rabi_perturbation_hz"]
    rows = []
    for pol in environment.POLARIZATIONS:
        src = environment.DipoleSource(pol)
        e = float(np.linalg.norm(environment.dipole_field(src, r)))
        rows.append([pol, dist * 1e9, e, environment.rabi_perturbation(src, r) / (2 * math.pi)])
    src = environment.DipoleSource(cfg["dipole.polarization"])
    rabi = environment.rabi_perturbation(src, r)
    sched = readout_schedule_from(cfg)
    scheme = scheme_from(cfg)
    sw = pulses.StandingWave(max(cfg["coupling.omega_max"]), 0.0, node_position=cfg["coupling.node"])
    peak = rabi / constants.GAMMA_D2 * cfg["dipole.scale"]
    pert = environment.emission_envelope(sw, sched, peak, scheme=scheme)
    xt = environment.crosstalk_delta(sw, sched, pert, x=cfg["coupling.node"] + dist, scheme=scheme)
    summary = {
        "polarization": cfg["dipole.polarization"],
        "distance_nm": dist * 1e9,
        "rabi_perturbation_hz": rabi / (2 * math.pi),
        "rabi_perturbation_rad_s": rabi,
        "omega_c_max_over_gamma": sw.omega_max,
        "crosstalk_delta": xt["delta"],
        "crosstalk_relative": xt["relative"],
        "crosstalk_per_phase": xt["per_phase"],
        "neighbor_baseline_photons": xt["baseline"],
    }
    return header, rows, summary, {}


def run_phase(cfg, map_fn):
    sched = gate_schedule_from(cfg)
    scheme = scheme_from(cfg, reference=True)
    header = ["x_nm", "omega_c_max_over_gamma", "phase_rad", "se_prob", "coherence", "steps"]
    rows, results, steps = [], [], {}
    for om in cfg["coupling.omega_max"]:
        sw = pulses.StandingWave(om, cfg["coupling.omega_min"], node_position=cfg["coupling.node"])
        grid = grid_from(cfg, constants.WAVELENGTH_D2 / 4)
        validate = (0.0,) if cfg["stark.validate"] else ()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ph, se = protocols.phase_gate_scan(sw, sched, grid, cfg["stark.mode"], scheme, map_fn,
                                               validate_points=validate,
                                               arm_split_coupling=cfg["coupling.arm_split"])
        for i, x in enumerate(ph.positions):
            rows.append([x * 1e9, om, ph.values[i], se.values[i], ph.columns["coherence"][i],
                         ph.columns["steps"][i]])
        checks = [{"x_nm": c["x"] * 1e9, "phase_rel_diff": c["phase_rel_diff"],
                   "se_rel_diff": c["se_rel_diff"], "phase_explicit_rad": c["explicit"]["phase"],
                   "se_explicit": c["explicit"]["se_prob"]} for c in ph.metadata["mode_checks"]]
        results.append({
            "omega_c_max_over_gamma": om,
            "phase_fwhm_nm": _safe_fwhm(ph) * 1e9,
            "se_fwhm_nm": _safe_fwhm(se) * 1e9,
            "node_phase_rad": ph.value_at(cfg["coupling.node"]),
            "node_se_prob": se.value_at(cfg["coupling.node"]),
            "antinode_phase_rad": float(ph.values[-1]),
            "mode_checks": checks,
            "warnings": [str(w.message) for w in caught],
            "max_trace_error": float(np.max(ph.columns["trace_error"])),
            "min_eigenvalue": float(np.min(ph.columns["min_eigenvalue"])),
        })
        steps[str(om)] = [int(s) for s in ph.columns["steps"]]
    summary = {"scans": results, "nominal_stark_phase_rad": pulses.nominal_stark_phase(sched)}
    return header, rows, summary, steps


def run_validate(cfg, map_fn):
    from .validation import invariant_suite

    checks = invariant_suite()
    header = ["check", "value", "limit", "passed"]
    rows = [[c["name"], c["value"], c["limit"], c["passed"]] for c in checks]
    summary = {"passed": all(c["passed"] for c in checks), "checks": len(checks)}
    return header, rows, summary, {}


RUNNERS = {
    "dark-state": run_dark_state,
    "readout-scan": run_readout,
    "convolve": run_convolve,
    "dipole-check": run_dipole,
    "phase-scan": run_phase,
    "validate": run_validate,
}


def run(subcommand, cfg, out_dir=".", jobs=1):
    """Execute ``subcommand`` and write ``<subcommand>.csv`` and ``<subcommand>.json``.

    Returns ``(exit_code, summary)``; the exit code is nonzero only for a
    failing ``validate`` (exceptions propagate to the caller).
    """
    if subcommand not in RUNNERS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    t0 = time.perf_counter()
    with mapper(jobs) as map_fn:
        header, rows, summary, steps = RUNNERS[subcommand](cfg, map_fn)
    wall = time.perf_counter() - t0
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{subcommand}.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(header, rows))
    manifest = {
        "subcommand": subcommand,
        "preset": cfg.preset,
        "config_hash": cfg.digest(),
        "config": cfg.as_dict(),
        "code_version": __version__,
        "jobs": jobs,
        "wall_time_s": wall,
        "csv": os.path.basename(csv_path),
        "step_counts": steps,
        "results": summary,
    }
    with open(os.path.join(out_dir, f"{subcommand}.json"), "w", encoding="utf-8") as fh:
        fh.write(to_json(manifest))
    code = 0
    if subcommand == "validate" and not summary["passed"]:
        code = 1
    return code, summary
