"""Experiment execution and table export.

Every experiment produces delimited text tables (comma-separated, dot
decimal, LF endings) plus a JSON run manifest.  Output bytes are a pure
function of (spec, seed): floats are formatted with a fixed shortest
representation and no timestamps are embedded, so reruns diff clean.
"""

from __future__ import annotations

import json
import os
from dataclasses import replace
from typing import Callable

import numpy as np

import repdpos
from repdpos.config import ExperimentSpec, VerificationSweep, config_hash
from repdpos.consensus import (
    SimulationReport,
    correct_block_probability,
    detection_rate,
    run_simulation,
)
from repdpos.contracts import (
    check_menu,
    manager_profit,
    security_latency_metric,
    solve_optimal_contract,
    stackelberg_symmetric,
)

DETECTION_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))

Table = tuple[tuple[str, ...], list[tuple]]  # (header, rows)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".10g")
    return str(value)


def _focus_candidate(report: SimulationReport) -> str:
    if report.malicious:
        return report.malicious[0]
    return report.candidates[0]


def _timeseries(report: SimulationReport) -> Table:
    candidate = _focus_candidate(report)
    c = report.candidates.index(candidate)
    victims = report.victims.get(candidate, ())
    rows_idx = [report.vehicles.index(v) for v in victims] or list(
        range(len(report.vehicles))
    )
    rows = []
    for scheme in ("none", "tsl", "mwsl"):
        series = report.reputation[scheme][:, rows_idx, c].mean(axis=1)
        for minute, value in enumerate(series):
            rows.append((minute, scheme, value))
    return ("minute", "scheme", "reputation"), rows


def _detection(report: SimulationReport) -> Table:
    rows = []
    for threshold in DETECTION_GRID:
        for scheme in ("tsl", "mwsl"):
            rows.append(
                (threshold, scheme, detection_rate(report, threshold, scheme=scheme))
            )
    return ("threshold", "scheme", "detection_rate"), rows


def _ledger_dump(report: SimulationReport) -> Table:
    rows = [
        (
            r.rater, r.ratee, r.opinion.belief, r.opinion.disbelief,
            r.opinion.uncertainty, r.round,
        )
        for r in report.ledger.records
    ]
    return ("rater", "ratee", "belief", "disbelief", "uncertainty", "round"), rows


def _event_dump(report: SimulationReport) -> Table:
    rows = [
        (e.vehicle, e.rsu, e.timestamp, e.outcome, e.link_quality)
        for e in report.events
    ]
    return ("vehicle", "rsu", "timestamp", "outcome", "link_quality"), rows


def _menu_table(menu, profile, params) -> Table:
    report = check_menu(menu, profile, params.unit_cost)
    rows = []
    for q, (item, theta, prior) in enumerate(
        zip(menu.items, profile.types, profile.priors), start=1
    ):
        phi = security_latency_metric(
            theta, prior, params.verifier_count, 1.0 / item.inv_latency, params
        )
        profit = params.verifier_count * prior * (
            params.gain * phi - params.reward_weight * item.reward
        )
        rows.append(
            (
                q, theta, prior, item.reward, item.inv_latency,
                report.utility_matrix[q - 1][q - 1], profit,
            )
        )
    return (
        "type", "theta", "prior", "reward", "inv_latency", "utility", "profit",
    ), rows


def _simulation_tables(spec: ExperimentSpec) -> dict[str, Table]:
    scenario = replace(spec.scenario, seed=spec.seed)
    report = run_simulation(scenario)
    tables: dict[str, Table] = {}
    for name in spec.outputs:
        if name == "reputation_timeseries":
            tables[name] = _timeseries(report)
        elif name == "detection_rate":
            tables[name] = _detection(report)
        elif name == "ledger_dump":
            tables[name] = _ledger_dump(report)
        elif name == "event_dump":
            tables[name] = _event_dump(report)
        elif name == "contract_menu":
            if report.menu is None:
                raise ValueError(
                    "contract_menu requested but the scenario never solved a "
                    "menu (enable standby_verification and the contract engine)"
                )
            tables[name] = _menu_table(
                report.menu, report.menu_profile, report.menu_params
            )
    return tables


VARIANT_SETTINGS = {
    "mwsl_standby": ("mwsl", True),
    "mwsl_no_standby": ("mwsl", False),
    "tsl_no_standby": ("tsl", False),
}


def _verification_tables(spec: ExperimentSpec) -> dict[str, Table]:
    sweep = spec.sweep or VerificationSweep()
    rows = []
    for threshold in sweep.thresholds:
        for variant in sweep.variants:
            scheme, standby = VARIANT_SETTINGS[variant]
            scenario = replace(
                spec.scenario,
                seed=spec.seed,
                scheme=scheme,
                standby_verification=standby,
                thresholds=replace(spec.scenario.thresholds, detection=threshold),
            )
            report = run_simulation(scenario)
            rows.append((threshold, variant, correct_block_probability(report)))
    return {"correct_block_probability": (("threshold", "variant", "probability"), rows)}


def _contract_tables(spec: ExperimentSpec) -> dict[str, Table]:
    experiment = spec.contract
    tables: dict[str, Table] = {}
    profile = experiment.uniform_profile(experiment.types)
    params = experiment.params
    if experiment.verifiers_per_type is not None:
        params = replace(
            params, verifier_count=experiment.verifiers_per_type * experiment.types
        )
    menu = solve_optimal_contract(profile, params)
    for name in spec.outputs:
        if name == "verifier_utilities":
            audit = check_menu(menu, profile, params.unit_cost)
            rows = []
            for i in range(len(profile)):
                for j in range(len(profile)):
                    rows.append((i + 1, j + 1, audit.utility_matrix[i][j]))
            tables[name] = (("chooser_type", "item_type", "utility"), rows)
        elif name == "contract_menu":
            tables[name] = _menu_table(menu, profile, params)
        elif name == "profit_vs_types":
            rows = []
            for q in experiment.q_sweep:
                prof_q = experiment.uniform_profile(q)
                params_q = experiment.params
                if experiment.verifiers_per_type is not None:
                    params_q = replace(
                        params_q,
                        verifier_count=experiment.verifiers_per_type * q,
                    )
                contract_menu = solve_optimal_contract(prof_q, params_q)
                sym_menu = stackelberg_symmetric(prof_q, params_q)
                rows.append((q, "contract", manager_profit(contract_menu, prof_q, params_q)))
                rows.append(
                    (q, "stackelberg_sym", manager_profit(sym_menu, prof_q, params_q))
                )
            tables[name] = (("types", "model", "profit"), rows)
    return tables


RUNNERS: dict[str, Callable[[ExperimentSpec], dict[str, Table]]] = {
    "simulation": _simulation_tables,
    "verification_sweep": _verification_tables,
    "contract": _contract_tables,
}


def run_experiment(spec: ExperimentSpec) -> dict[str, Table]:
    """Compute every requested table (nothing is written yet)."""
    tables = RUNNERS[spec.kind](spec)
    missing = [name for name in spec.outputs if name not in tables]
    if missing:
        raise ValueError(f"runner produced no data for table(s) {missing}")
    return {name: tables[name] for name in spec.outputs}


def write_outputs(
    spec: ExperimentSpec, tables: dict[str, Table], out_dir: str
) -> list[str]:
    """Write tables plus the run manifest; returns the file list.

    Called only after all tables are computed, so a failing experiment
    leaves no partial outputs behind.
    """
    digest = config_hash(spec)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, (header, rows) in tables.items():
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(
                f"# config_hash={digest} seed={spec.seed} "
                f"repdpos={repdpos.__version__}\n"
            )
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        written.append(path)
    manifest = {
        "name": spec.name,
        "config_hash": digest,
        "seed": spec.seed,
        "package_version": repdpos.__version__,
        "tables": {name: f"{name}.csv" for name in tables},
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(manifest_path)
    return written
