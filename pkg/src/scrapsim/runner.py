"""Protocol execution: drives the physics modules and writes artifacts.

Every protocol produces a RunReport (resolved config echo, headline metrics,
pass/fail against the declared thresholds, file manifest) plus CSV artifacts.
CSV output is canonical: fixed header, 12 significant digits, LF endings, so
identical configs produce byte-identical files.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import math
import os
import time

import numpy as np
from scipy.special import erf

from . import plotting
from .circuit import (LevelStructure, levels_report, levels_table,
                      solve_bound_states)
from .config import RunConfig, dump_config
from .constants import radns_to_ghz
from .dynamics import (TimeDependentHamiltonian, basis_state, evolve,
                       pi_pulse_analytic, trajectory_csv_rows)
from .errors import ConfigValidationError
from .pulses import PulseSchedule, adiabaticity_margin
from .single_qubit import (QubitModel3, not_gate, phase_gate,
                           readout_transfer, run_hadamard, run_inversion)
from .two_qubit import (CoupledCircuitParams, run_iswap_passage,
                        solve_coupled_levels, stark_shift_ratio)

DEFAULT_OUT_ENV = "SCRAPSIM_OUT"


@dataclasses.dataclass
class RunReport:
    """Outcome of one protocol run."""

    protocol: str
    config_echo: str
    metrics: dict
    checks: dict
    files: list

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def status(self) -> int:
        return 0 if self.passed else 1

    def summary(self) -> str:
        lines = [f"protocol: {self.protocol}", "metrics:"]
        for key in sorted(self.metrics):
            lines.append(f"  {key}: {_fmt(self.metrics[key])}")
        lines.append("checks:")
        for key in sorted(self.checks):
            lines.append(f"  {key}: {'PASS' if self.checks[key] else 'FAIL'}")
        lines.append("files:")
        for f in self.files:
            lines.append(f"  {f}")
        lines.append(f"status: {self.status}")
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.11e}"
    return str(value)


def write_csv(path: str, header: list, block: np.ndarray,
              stride: int = 1) -> None:
    """Canonical CSV: 12 significant digits, LF line endings."""
    block = np.atleast_2d(block)[::stride]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in block:
            fh.write(",".join(f"{v:.11e}" for v in row) + "\n")


def resolve_out_dir(cli_out: str | None, config: RunConfig) -> str:
    out = (cli_out or config.data["output"]["directory"]
           or os.environ.get(DEFAULT_OUT_ENV) or "scrapsim-out")
    os.makedirs(out, exist_ok=True)
    return out


def run(config: RunConfig, out_dir: str, plots: bool = False,
        workers: int | None = None, dt: float | None = None) -> RunReport:
    """Execute the configured protocol and write its artifacts."""
    handler = _HANDLERS[config.protocol]
    ctx = _Context(config=config, out_dir=out_dir, plots=plots,
                   workers=workers or config.workers,
                   dt=dt if dt is not None else config.dt)
    metrics, checks, files = handler(ctx)
    report = RunReport(protocol=config.protocol,
                       config_echo=dump_config(config),
                       metrics=metrics, checks=checks, files=files)
    _write_report(ctx, report)
    return report


@dataclasses.dataclass
class _Context:
    config: RunConfig
    out_dir: str
    plots: bool
    workers: int
    dt: float
    write_files: bool = True

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def threshold(self, name: str, default: float) -> float:
        return self.config.thresholds.get(name, default)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _write_report(ctx: _Context, report: RunReport) -> None:
    if not ctx.write_files:
        return
    payload = {
        "protocol": report.protocol,
        "metrics": _jsonable(report.metrics),
        "checks": _jsonable(report.checks),
        "files": report.files,
        "status": report.status,
        "config": report.config_echo,
    }
    with open(ctx.path("report.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(ctx.path("report.txt"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(report.summary())
    report.files.extend(["report.json", "report.txt"])


def write_error_record(out_dir: str, exc: Exception, status: int) -> None:
    """Machine-readable record of a failed run."""
    os.makedirs(out_dir, exist_ok=True)
    payload = {"error": type(exc).__name__, "message": str(exc),
               "status": status}
    path = os.path.join(out_dir, "error.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _solve_levels(ctx: _Context) -> LevelStructure:
    numerics = ctx.config.data["numerics"]
    return solve_bound_states(
        ctx.config.circuit_params(),
        n_levels=numerics["n_levels"],
        check_convergence=numerics["check_convergence"])


def _model(ctx: _Context) -> QubitModel3:
    return QubitModel3.from_levels(ctx.config.circuit_params(),
                                   _solve_levels(ctx))


def _write_trajectory(ctx: _Context, name: str, trajectory) -> list:
    if not ctx.write_files:
        return []
    header, block = trajectory_csv_rows(trajectory)
    stride = ctx.config.data["output"]["stride"]
    write_csv(ctx.path(name), header, block, stride=stride)
    files = [name]
    if ctx.plots:
        base = name.rsplit(".", 1)[0]
        files.append(plotting.populations_plot(trajectory,
                                               ctx.path(f"{base}_populations.svg")))
        files.append(plotting.eigenvalues_plot(trajectory,
                                               ctx.path(f"{base}_eigenvalues.svg")))
    return files


# ---------------------------------------------------------------------------
# Protocol handlers.  Each returns (metrics, checks, files).
# ---------------------------------------------------------------------------

def _run_levels(ctx: _Context):
    started = time.perf_counter()
    levels = _solve_levels(ctx)
    elapsed = time.perf_counter() - started
    metrics = {
        "f10_ghz": radns_to_ghz(levels.transition_frequency(1, 0)),
        "f21_ghz": radns_to_ghz(levels.transition_frequency(2, 1)),
        "nu_rad_per_ns": levels.anharmonicity_gap,
        "d00": float(levels.dipole[0, 0]),
        "d11": float(levels.dipole[1, 1]),
        "d22": float(levels.dipole[2, 2]),
        "d01_abs": float(abs(levels.dipole[0, 1])),
        "d12_abs": float(abs(levels.dipole[1, 2])),
        "d02_abs": float(abs(levels.dipole[0, 2])),
        "p01_abs": float(abs(levels.momentum[0, 1])),
        "p12_abs": float(abs(levels.momentum[1, 2])),
        "p02_abs": float(abs(levels.momentum[0, 2])),
        "solve_seconds": elapsed,
    }
    files = []
    if ctx.write_files:
        with open(ctx.path("levels.txt"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(levels_report(levels))
        rows = levels_table(levels)
        header = list(rows[0].keys())
        block = np.array([[row[k] for k in header] for row in rows])
        write_csv(ctx.path("levels.csv"), header, block)
        files = ["levels.txt", "levels.csv"]
        if ctx.plots:
            files.append(plotting.levels_plot(
                ctx.config.circuit_params(), levels, ctx.path("levels.svg")))
    return metrics, {}, files


def _run_pi_pulse(ctx: _Context):
    model = _model(ctx)
    width = ctx.config.data["pi_pulse"]["width_ns"]
    areas = ctx.config.data["pi_pulse"]["areas_rad"]
    rate = model.pump_rate_per_na * abs(model.dipole(0, 1))
    rows = []
    worst = 0.0
    for area in areas:
        # Two-level resonant block driven by a Gaussian of the given area.
        amplitude = area / (rate * math.sqrt(math.pi) * width)

        def generator(t, amp=amplitude):
            w = 0.5 * rate * amp * math.exp(-(t / width) ** 2)
            return np.array([[0.0, w], [w, 0.0]], dtype=complex)

        h = TimeDependentHamiltonian(2, generator)
        span = 6.0 * width
        traj = evolve(h, basis_state(0, 2), -span, span, ctx.dt)
        effective_area = area * erf(span / width)
        expected = pi_pulse_analytic(effective_area)
        simulated = float(traj.final_populations[1])
        rows.append([area, simulated, expected, abs(simulated - expected)])
        worst = max(worst, abs(simulated - expected))
    files = []
    if ctx.write_files:
        write_csv(ctx.path("pi_pulse.csv"),
                  ["area_rad", "p_excited", "p_analytic", "abs_error"],
                  np.array(rows))
        files = ["pi_pulse.csv"]
    tol = ctx.threshold("pi_pulse_tolerance", 1e-6)
    return ({"max_abs_error": worst},
            {"matches_analytic": worst <= tol}, files)


def _run_inversion(ctx: _Context):
    model = _model(ctx)
    sched_cfg = ctx.config.data["schedule"]
    schedule = ctx.config.schedule(model.qubit_frequency)
    result = run_inversion(model, schedule,
                           initial_level=sched_cfg["initial_level"],
                           dt=ctx.dt, variant=sched_cfg["variant"],
                           auto_calibrate=sched_cfg["auto_calibrate"])
    metrics = {
        "transfer": result.fidelity,
        "leakage_max": result.leakage_max,
        "leakage_final": result.leakage_final,
        "calibration_factor": result.calibration_factor,
        "theta_start": result.boundary_angles[0],
        "theta_end": result.boundary_angles[1],
        "window_ns": schedule.duration,
        "variant": sched_cfg["variant"],
    }
    checks = {
        "transfer": result.fidelity >= ctx.threshold("min_transfer", 0.99),
        "leakage": result.leakage_max <= ctx.threshold("max_leakage", 0.015),
    }
    files = _write_trajectory(ctx, "trajectory.csv", result.trajectory)
    return metrics, checks, files


def _run_hadamard(ctx: _Context):
    model = _model(ctx)
    schedule = ctx.config.schedule(model.qubit_frequency)
    res1 = run_hadamard(model, schedule, initial_level=1, dt=ctx.dt)
    res0 = run_hadamard(model, schedule, initial_level=0, dt=ctx.dt,
                        phase_correction=res1.phase_correction)
    phase_difference = None
    if res0.relative_phase is not None and res1.relative_phase is not None:
        raw = res0.relative_phase - res1.relative_phase
        phase_difference = math.atan2(math.sin(raw), math.cos(raw))
    metrics = {
        "fidelity_from_1": res1.fidelity,
        "fidelity_from_0": res0.fidelity,
        "phase_correction": res1.phase_correction,
        "relative_phase_from_1": res1.relative_phase,
        "relative_phase_from_0": res0.relative_phase,
        "phase_difference": phase_difference,
        "leakage_max": max(res1.leakage_max, res0.leakage_max),
    }
    checks = {
        "fidelity": res1.fidelity >= ctx.threshold("min_fidelity", 0.99),
        "phase_structure": (phase_difference is not None
                            and abs(abs(phase_difference) - math.pi)
                            <= ctx.threshold("phase_tolerance", 0.1)),
    }
    files = _write_trajectory(ctx, "trajectory.csv", res1.trajectory)
    return metrics, checks, files


def _run_phase_gate(ctx: _Context):
    model = _model(ctx)
    pg = ctx.config.data["phase_gate"]
    pulse = ctx.config.pulse_shape(pg["stark"])
    window = tuple(pg["window_ns"])
    result = phase_gate(model, pulse, window, dt=ctx.dt)

    expected = _expected_stark_phase(model, pg["stark"], window)
    drift = float(np.abs(result.trajectory.populations
                         - result.trajectory.populations[0]).max())
    phase_error = (abs(result.relative_phase - expected)
                   if result.relative_phase is not None else math.inf)
    metrics = {
        "measured_phase": result.relative_phase,
        "expected_phase": expected,
        "phase_error": phase_error,
        "population_drift": drift,
    }
    checks = {
        "phase": phase_error <= ctx.threshold("phase_tolerance", 1e-6),
        "populations_conserved": drift <= ctx.threshold("max_population_drift",
                                                        1e-9),
    }
    files = _write_trajectory(ctx, "trajectory.csv", result.trajectory)
    return metrics, checks, files


def _expected_stark_phase(model: QubitModel3, pulse_cfg: dict,
                          window: tuple) -> float:
    """Closed-form -integral of the |1> Stark shift over the window."""
    t0, tf = window
    kind = pulse_cfg["kind"]
    if kind == "gaussian":
        amp, center, width = (pulse_cfg["amplitude"], pulse_cfg["center"],
                              pulse_cfg["width"])
        area = (amp * width * math.sqrt(math.pi) / 2.0
                * (erf((tf - center) / width) - erf((t0 - center) / width)))
    elif kind == "linear_ramp":
        slope, start = pulse_cfg["slope"], pulse_cfg["start"]
        area = slope * ((tf - start) ** 2 - (t0 - start) ** 2) / 2.0
    elif kind == "constant":
        area = pulse_cfg["amplitude"] * (tf - t0)
    else:
        area = 0.0
    shift_per_na = -model.stark_rate_per_na * (model.dipole(1, 1)
                                               - model.dipole(0, 0))
    return -shift_per_na * area


def _run_not_gate(ctx: _Context):
    model = _model(ctx)
    variant = ctx.config.data["schedule"]["variant"]
    result = not_gate(model, dt=ctx.dt, variant=variant)
    metrics = {
        "process_fidelity": result.process_fidelity,
        "phase_correction": result.phase_correction,
        "inversion_transfer_from_1": result.results[1].fidelity,
        "inversion_transfer_from_0": result.results[0].fidelity,
    }
    checks = {"process_fidelity": result.process_fidelity
              >= ctx.threshold("min_process_fidelity", 0.98)}
    files = _write_trajectory(ctx, "trajectory.csv",
                              result.results[1].trajectory)
    return metrics, checks, files


def _run_readout(ctx: _Context):
    model = _model(ctx)
    res1, res0 = readout_transfer(model, dt=ctx.dt)
    metrics = {
        "transfer_to_readout": res1.fidelity,
        "spectator_retention": res0.fidelity,
        "calibration_factor": res1.calibration_factor,
    }
    checks = {
        "transfer": res1.fidelity >= ctx.threshold("min_transfer", 0.99),
        "selectivity": res0.fidelity >= ctx.threshold("min_selectivity", 0.99),
    }
    files = _write_trajectory(ctx, "trajectory.csv", res1.trajectory)
    files += _write_trajectory(ctx, "spectator.csv", res0.trajectory)
    return metrics, checks, files


def _coupled(ctx: _Context) -> CoupledCircuitParams:
    tq = ctx.config.data["two_qubit"]
    params = ctx.config.circuit_params()
    if tq["coupling_capacitance_pf"] is not None:
        return CoupledCircuitParams(params, tq["coupling_capacitance_pf"])
    return CoupledCircuitParams.from_zeta(params, tq["zeta"])


def _run_iswap(ctx: _Context):
    tq = ctx.config.data["two_qubit"]
    coupled = _coupled(ctx)
    levels = solve_coupled_levels(coupled,
                                  n_levels=ctx.config.data["numerics"]["n_levels"])
    result = run_iswap_passage(coupled, levels,
                               chirp_rate=tq["chirp_rate_na_per_ns"],
                               window=tuple(tq["window_ns"]), dt=ctx.dt,
                               min_edge_ratio=tq["min_edge_ratio"])
    metrics = {
        "swap_fidelity": result.swap_fidelity,
        "spectator_min_p11": result.spectator_min,
        "leakage_max": result.leakage_max,
        "swap_coupling_rad_per_ns": result.swap_coupling,
        "edge_ratio": result.edge_ratio,
        "window_ns": result.window[1] - result.window[0],
        "zeta": coupled.zeta,
    }
    checks = {
        "swap": result.swap_fidelity >= ctx.threshold("min_swap_fidelity", 0.98),
        "spectator": result.spectator_min
        >= ctx.threshold("min_spectator", 0.98),
        "leakage": result.leakage_max <= ctx.threshold("max_leakage", 0.02),
    }
    files = _write_trajectory(ctx, "subspace_single.csv",
                              result.trajectory_single)
    files += _write_trajectory(ctx, "subspace_double.csv",
                               result.trajectory_double)
    return metrics, checks, files


def _run_adiabaticity(ctx: _Context):
    model = _model(ctx)
    schedule = ctx.config.schedule(model.qubit_frequency)
    ad = ctx.config.data["adiabaticity"]
    report = adiabaticity_margin(schedule, model.drive_rates, dt=ctx.dt,
                                 threshold=ad["threshold"])
    metrics = {
        "max_margin": report.max_margin,
        "min_gap_rad_per_ns": report.min_gap,
        "adiabatic": report.adiabatic,
        "threshold": report.threshold,
    }
    checks = {}
    if ad["require_adiabatic"]:
        checks["adiabatic"] = report.adiabatic
    files = []
    if ctx.write_files:
        block = np.column_stack([report.times, report.rabi_rate,
                                 report.detuning, report.theta, report.margin,
                                 report.angle_rate_ratio])
        write_csv(ctx.path("adiabaticity.csv"),
                  ["t_ns", "rabi_rad_per_ns", "detuning_rad_per_ns",
                   "theta_rad", "margin", "angle_rate_ratio"], block)
        files = ["adiabaticity.csv"]
        if ctx.plots:
            files.append(plotting.adiabaticity_plot(
                report, ctx.path("adiabaticity.svg")))
    return metrics, checks, files


def _run_stark_shift(ctx: _Context):
    ss = ctx.config.data["stark_shift"]
    params = ctx.config.circuit_params()
    levels = _solve_levels(ctx)
    rows = []
    checks = {}
    metrics = {}
    for k, current in enumerate(ss["currents_na"]):
        ratio = stark_shift_ratio(params, levels, current)
        rows.append([current, ratio])
        metrics[f"ratio_at_{current:+.0f}nA"] = ratio
        if ss["expected_ratios"] is not None:
            expected = ss["expected_ratios"][k]
            checks[f"ratio_at_{current:+.0f}nA"] = (
                abs(ratio - expected) <= ss["tolerance"])
    files = []
    if ctx.write_files:
        write_csv(ctx.path("stark_shift.csv"),
                  ["current_na", "fractional_shift"], np.array(rows))
        files = ["stark_shift.csv"]
    return metrics, checks, files


def _run_sweep(ctx: _Context):
    sweep = ctx.config.data["sweep"]
    base = RunConfig(json.loads(json.dumps(ctx.config.data)))
    base.data["protocol"] = sweep["protocol"]
    base.data["sweep"] = None
    handler = _HANDLERS[sweep["protocol"]]

    def one(value):
        cfg = base.copy_with(sweep["path"], value)
        sub_ctx = _Context(config=cfg, out_dir=ctx.out_dir, plots=False,
                           workers=1, dt=cfg.dt, write_files=False)
        metrics, checks, _ = handler(sub_ctx)
        return metrics, checks

    values = sweep["values"]
    if ctx.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(ctx.workers) as pool:
            outcomes = list(pool.map(one, values))
    else:
        outcomes = [one(v) for v in values]

    metric_keys = sorted({k for m, _ in outcomes for k, v in m.items()
                          if isinstance(v, (int, float))
                          and not isinstance(v, bool)})
    header = ["value"] + metric_keys
    block = np.array([[float(v)] + [float(m.get(k, math.nan))
                                    for k in metric_keys]
                      for v, (m, _) in zip(values, outcomes)]) \
        if values else np.empty((0, len(header)))
    files = []
    if ctx.write_files:
        write_csv(ctx.path("sweep.csv"), header, block)
        files = ["sweep.csv"]
    all_sub_checks = all(all(c.values()) for _, c in outcomes) if outcomes else True
    return ({"points": len(values), "path": sweep["path"]},
            {"sub_runs": all_sub_checks} if outcomes else {}, files)


_HANDLERS = {
    "levels": _run_levels,
    "pi-pulse": _run_pi_pulse,
    "inversion": _run_inversion,
    "hadamard": _run_hadamard,
    "phase-gate": _run_phase_gate,
    "not-gate": _run_not_gate,
    "readout": _run_readout,
    "iswap": _run_iswap,
    "adiabaticity": _run_adiabaticity,
    "stark-shift": _run_stark_shift,
    "sweep": _run_sweep,
}
