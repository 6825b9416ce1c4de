"""Experiment orchestration: analytic tables, simulation runs, the waiting-time figure.

Every command writes a CSV with a fixed header, numbers serialized in
full-precision scientific notation, so identical configurations yield
byte-identical files.  Cell-level failures are recorded per row and
collected into a machine-readable error summary; remaining cells are still
emitted.
"""

from __future__ import annotations

import csv
import io
import itertools
import os
from dataclasses import dataclass, replace

from .config import ExperimentConfig
from .core import SystemParams, herald_prob
from .errors import MemsyncError
from .montecarlo import SimConfig, compare_to_analytic, run_simulation
from .resolved import (
    analyze_system,
    fidelity_no_memory,
    threshold_p_sync,
    threshold_p_unsync,
)
from .binary import waiting_time
from .svgchart import humanize_seconds, render_grouped_log_bars

FIG2_N_RANGE = range(2, 13)
FIG2_SERIES = (
    # (name, eta_s, eta_r, fidelity kind, waiting-time event kind)
    ("unsynchronized", None, None, "unpostselected", "coincidence"),
    ("synchronized_postselected", 0.75, 0.75, "postselected", "postselected"),
    ("synchronized_unpostselected", 0.99, 0.99, "unpostselected", "coincidence"),
)


@dataclass
class CommandResult:
    """Outcome of one CLI command."""

    files: list
    errors: list

    @property
    def exit_code(self) -> int:
        return 0 if not self.errors else 1


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17e")


def _write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _set_by_path(system: SystemParams, key: str, value) -> SystemParams:
    if key == "N":
        return replace(system, N=int(value))
    if key == "pump_rate":
        return replace(system, pump_rate=float(value))
    if key == "n_max":
        return replace(system, n_max=int(value))
    section, _, name = key.partition(".")
    if section == "source":
        return replace(system, source=replace(system.source, **{name: float(value)}))
    if section == "memory":
        return replace(system, memory=replace(system.memory, **{name: float(value)}))
    raise ValueError(f"unsupported sweep key {key!r}")


def _sweep_points(config: ExperimentConfig):
    """Yield (overrides-dict, SystemParams) over the cartesian sweep grid."""
    if not config.sweep:
        yield {}, config.system
        return
    keys = list(config.sweep)
    for combo in itertools.product(*(config.sweep[k] for k in keys)):
        overrides = dict(zip(keys, combo))
        system = config.system
        for key, value in overrides.items():
            system = _set_by_path(system, key, value)
        yield overrides, system


ANALYTIC_HEADER = [
    "N", "p", "h", "d", "eta_s", "eta_r", "B", "decoherence_mode", "n_max",
    "pump_rate", "q", "Y", "R", "P", "p_sync", "c_sync", "c_closed_form",
    "waiting_time_s", "c", "p_less", "p_geq", "F", "F_tilde",
    "denominator_mode", "error",
]


def _analytic_row(system: SystemParams, denominator_mode: str):
    s, m = system.source, system.memory
    base = [system.N, _num(s.p), _num(s.h), _num(s.d), _num(m.eta_s),
            _num(m.eta_r), _num(m.B), m.decoherence_mode, system.n_max,
            _num(system.pump_rate)]
    try:
        a = analyze_system(system, denominator_mode)
    except MemsyncError as exc:
        return base + [""] * 13 + [denominator_mode, str(exc)], str(exc)
    ch, fid = a.chain, a.fidelity
    row = base + [
        _num(ch.q), _num(ch.Y), _num(ch.R), _num(ch.P), _num(ch.p_sync),
        _num(ch.c_sync), _num(ch.c_closed_form), _num(ch.waiting_time),
        _num(fid.c), _num(fid.p_less), _num(fid.p_geq), _num(fid.F),
        _num(fid.F_tilde), denominator_mode, "",
    ]
    return row, None


def cmd_analytic(config: ExperimentConfig, out_dir: str | None = None,
                 filename: str = "analytic.csv") -> CommandResult:
    """One closed-form report row per (swept) parameter point."""
    out = out_dir or config.out_dir
    rows, errors = [], []
    for overrides, system in _sweep_points(config):
        row, err = _analytic_row(system, config.denominator_mode)
        rows.append(row)
        if err:
            errors.append({"point": overrides, "error": err})
    path = os.path.join(out, filename)
    _write_csv(path, ANALYTIC_HEADER, rows)
    return CommandResult(files=[path], errors=errors)


def cmd_sweep(config: ExperimentConfig, out_dir: str | None = None) -> CommandResult:
    """Alias of the analytic table over the configured sweep grid."""
    return cmd_analytic(config, out_dir, filename="sweep.csv")


SIMULATE_HEADER = [
    "N", "p", "h", "d", "eta_s", "eta_r", "B", "decoherence_mode",
    "steps", "warmup_steps", "replicas", "seed",
    "occupancy_actual", "occupancy_actual_se", "occupancy_believed",
    "occupancy_believed_se", "readout_rate", "readout_rate_se",
    "exact_rate", "exact_rate_se", "geqn_rate", "geqn_rate_se",
    "quantity", "analytic", "rel_deviation", "z_score", "error",
]


def cmd_simulate(config: ExperimentConfig, out_dir: str | None = None) -> CommandResult:
    """Run the protocol simulator and attach the analytic comparison."""
    out = out_dir or config.out_dir
    system = config.system
    s, m = system.source, system.memory
    sim_cfg = SimConfig(steps=config.sim.steps, seed=config.sim.seed,
                        replicas=config.sim.replicas,
                        warmup_steps=config.sim.warmup_steps)
    errors = []
    rows = []
    base = [system.N, _num(s.p), _num(s.h), _num(s.d), _num(m.eta_s),
            _num(m.eta_r), _num(m.B), m.decoherence_mode]
    try:
        stats = run_simulation(system, sim_cfg)
        sim_cols = [
            stats.steps, stats.warmup_steps, stats.replicas, config.sim.seed,
            _num(stats.occupancy_actual), _num(stats.occupancy_actual_se),
            _num(stats.occupancy_believed), _num(stats.occupancy_believed_se),
            _num(stats.readout_rate), _num(stats.readout_rate_se),
            _num(stats.exact_rate), _num(stats.exact_rate_se),
            _num(stats.geqn_rate), _num(stats.geqn_rate_se),
        ]
        try:
            analysis = analyze_system(system, config.denominator_mode)
            table = compare_to_analytic(stats, analysis.chain, analysis.fidelity)
            for row in table.rows:
                rows.append(base + sim_cols + [
                    row.quantity, _num(row.analytic), _num(row.rel_deviation),
                    _num(row.z_score), "",
                ])
        except MemsyncError as exc:
            errors.append({"point": {}, "error": str(exc)})
            rows.append(base + sim_cols + ["", "", "", "", str(exc)])
    except (MemsyncError, ValueError) as exc:
        errors.append({"point": {}, "error": str(exc)})
        rows.append(base + [""] * 18 + [str(exc)])

    path = os.path.join(out, "simulate.csv")
    _write_csv(path, SIMULATE_HEADER, rows)
    return CommandResult(files=[path], errors=errors)


FIG2_HEADER = [
    "N", "series", "eta_s", "eta_r", "fidelity_kind", "p_theta", "q",
    "fidelity", "event_kind", "event_probability", "waiting_time_s",
    "waiting_time_human", "non_monotone", "error",
]


def _fig2_cell(system: SystemParams, series, theta: float, denominator_mode: str):
    """Waiting time of one (series, N) cell; returns (row, error or None)."""
    name, eta_s, eta_r, kind, event_kind = series
    source = system.source
    if name == "unsynchronized":
        p_theta = threshold_p_unsync(source.h, theta)
        src = replace(source, p=p_theta)
        q = herald_prob(src)
        fidelity = fidelity_no_memory(src)
        event_prob = (q * fidelity) ** system.N
        wait = waiting_time(event_prob, system.pump_rate)
        return [system.N, name, "", "", kind, _num(p_theta), _num(q),
                _num(fidelity), event_kind, _num(event_prob), _num(wait),
                humanize_seconds(wait), False, ""], None

    memory = replace(system.memory, eta_s=eta_s, eta_r=eta_r)
    trial = replace(system, memory=memory)
    result = threshold_p_sync(trial, theta, fidelity_kind=kind,
                              denominator_mode=denominator_mode)
    at_threshold = replace(trial, source=replace(source, p=result.p_theta))
    analysis = analyze_system(at_threshold, denominator_mode)
    if event_kind == "postselected":
        event_prob = analysis.fidelity.p_geq
    else:
        event_prob = analysis.fidelity.c
    wait = waiting_time(event_prob, system.pump_rate)
    return [system.N, name, _num(eta_s), _num(eta_r), kind,
            _num(result.p_theta), _num(analysis.chain.q), _num(result.fidelity),
            event_kind, _num(event_prob), _num(wait), humanize_seconds(wait),
            result.non_monotone, ""], None


def cmd_fig2(config: ExperimentConfig, out_dir: str | None = None) -> CommandResult:
    """Waiting times for N = 2..12: unsynchronized vs synchronized series."""
    out = out_dir or config.out_dir
    rows, errors = [], []
    waits = {name: [] for name, *_ in FIG2_SERIES}
    for N in FIG2_N_RANGE:
        system = replace(config.system, N=N)
        for series in FIG2_SERIES:
            name = series[0]
            try:
                row, _ = _fig2_cell(system, series, config.theta,
                                    config.denominator_mode)
                rows.append(row)
                waits[name].append(float(row[10]))
            except (MemsyncError, ValueError) as exc:
                rows.append([N, name, _num(series[1]), _num(series[2]), series[3],
                             "", "", "", series[4], "", "", "", False, str(exc)])
                waits[name].append(None)
                errors.append({"point": {"N": N, "series": name}, "error": str(exc)})

    csv_path = os.path.join(out, "fig2.csv")
    _write_csv(csv_path, FIG2_HEADER, rows)

    svg = render_grouped_log_bars(
        categories=[str(N) for N in FIG2_N_RANGE],
        series={name: waits[name] for name, *_ in FIG2_SERIES},
        title="Average waiting time between accepted N-photon events",
        xlabel="number of photons N",
        ylabel="waiting time (s)",
    )
    svg_path = os.path.join(out, "fig2.svg")
    os.makedirs(out, exist_ok=True)
    with open(svg_path, "w", newline="") as fh:
        fh.write(svg)

    return CommandResult(files=[csv_path, svg_path], errors=errors)


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "fig2": cmd_fig2,
    "sweep": cmd_sweep,
}
