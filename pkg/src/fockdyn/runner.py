"""Grid execution for the command-line workflows.

Each grid cell is computed by a top-level function so it can run in a worker
process. Results come back in grid order and are written once, after all
cells finish, which keeps the artifacts independent of scheduling.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, ExperimentConfig
from .criteria import ProbeSettings, classify, cross_check, k_lambda_norm_bound, k_lambda_sup_ratio
from .dynamics import (
    cesaro_report,
    d_hypercyclicity_sequence,
    gelfand_estimate,
    iterate_norm_sequence,
    ritt_sequence,
)
from .operators import ConvergenceError
from .quadrature import QuadratureError
from .space import (
    QuadratureConfig,
    SpaceParams,
    TaylorSeries,
    monomial_norm_asymptotic_log,
    monomial_norm_log,
    monomial_norm_sup_log,
    norm_quadrature_log,
    sup_norm_estimate,
)

COMPUTATIONAL_ERRORS = (QuadratureError, ConvergenceError, np.linalg.LinAlgError, FloatingPointError, OverflowError)
SUP_REL_TOL = 1e-4

CELL_COLUMNS = ["cell", "p", "alpha", "m"]
SERIES_COLUMNS = CELL_COLUMNS + ["operator", "series", "n", "value", "certified"]


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def jsonable(obj):
    """Recursively replace non-finite floats and numpy scalars so the output is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    if isinstance(obj, complex):
        return fmt(obj)
    return obj


def cell_fields(index: int, space: SpaceParams) -> list[str]:
    return [str(index), fmt(space.p), fmt(float(space.alpha)), fmt(float(space.m))]


@dataclass
class CellResult:
    tables: dict[str, list[list[str]]] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    failed: bool = False


# ------------------------------------------------------------------- norms

NORMS_COLUMNS = CELL_COLUMNS + ["n", "exact_log_norm", "asymptotic_log_norm", "route", "route_log_norm", "rel_error", "certified"]


def norms_cell(cfg: ExperimentConfig, index: int, space: SpaceParams) -> CellResult:
    res = CellResult({"norms": []})
    worst = 0.0
    route_tol = SUP_REL_TOL if space.is_sup else cfg.tol
    qcfg = QuadratureConfig(radial_rel_tol=min(1e-11, cfg.tol / 100))
    for n in range(cfg.norms_nmax + 1):
        f = TaylorSeries.monomial(n)
        if space.is_sup:
            exact = monomial_norm_sup_log(space, n)
            asym = math.nan
            route = "grid-sup"
            est = sup_norm_estimate(space, f).log_value
        else:
            exact = monomial_norm_log(space, n)
            asym = monomial_norm_asymptotic_log(space, n) if n >= 1 else math.nan
            route = "quadrature"
            try:
                est = norm_quadrature_log(space, f, qcfg)
            except QuadratureError:
                est = math.nan
        rel = abs(math.expm1(est - exact)) if math.isfinite(est) else math.nan
        ok = math.isfinite(rel) and rel <= route_tol
        if not ok:
            res.failed = True
        else:
            worst = max(worst, rel)
        res.tables["norms"].append(cell_fields(index, space) + [str(n), fmt(exact), fmt(asym), route, fmt(est), fmt(rel), fmt(ok)])
    res.summary = {
        "space": space.label(),
        "route": "grid-sup" if space.is_sup else "quadrature",
        "max_rel_error": worst,
        "tolerance": route_tol,
        "failed": res.failed,
    }
    return res


# ---------------------------------------------------------------- classify

CLASSIFY_FIELDS = ["bounded", "compact", "hypercyclic", "supercyclic", "cyclic", "power_bounded", "uniformly_mean_ergodic", "ritt"]
CLASSIFY_COLUMNS = CELL_COLUMNS + ["operator"] + CLASSIFY_FIELDS + ["citations"]


def classify_cell(cfg: ExperimentConfig, index: int, space: SpaceParams) -> CellResult:
    c = classify(space, cfg.operator_spec())
    d = c.to_dict()
    row = cell_fields(index, space) + [c.operator] + [d[k] for k in CLASSIFY_FIELDS] + [" | ".join(c.citations)]
    return CellResult({"classify": [row]}, d)


# ------------------------------------------------------------------- probe

CROSSCHECK_COLUMNS = CELL_COLUMNS + ["operator", "field", "classifier", "probe", "status", "evidence"]


def _series_rows(index, space, name, rows) -> list[list[str]]:
    return [cell_fields(index, space) + [name, s, str(n), fmt(v), fmt(c)] for s, n, v, c in rows]


def _random_polynomial(rng: np.random.Generator, max_degree: int) -> TaylorSeries:
    d = int(rng.integers(0, max_degree + 1))
    return TaylorSeries(tuple(complex(x, y) for x, y in zip(rng.normal(size=d + 1), rng.normal(size=d + 1))))


def probe_cell(cfg: ExperimentConfig, index: int, space: SpaceParams) -> CellResult:
    spec = cfg.operator_spec()
    res = CellResult({name: [] for name in cfg.probes})
    summary: dict = {"space": space.label(), "operator": spec.label(), "probes": {}}
    res.summary = summary
    cols = cfg.truncation or None
    is_shift = not (spec.kind == "K" and spec.params[1] != 0)
    op = spec.build() if is_shift else None
    orbit = None

    def skip(name, reason):
        summary["probes"][name] = {"skipped": reason}

    for name in cfg.probes:
        try:
            if name in ("orbit", "gelfand", "cesaro", "ritt") and not is_shift:
                skip(name, "K_lambda with lambda != 0 is not a finite weighted shift")
            elif name == "orbit":
                orbit = iterate_norm_sequence(space, op, cfg.nmax, cols=cols)
                res.tables[name] = _series_rows(index, space, op.name, orbit.to_rows())
                summary["probes"][name] = orbit.to_dict()
            elif name == "gelfand":
                if cfg.nmax < 8:
                    skip(name, "nmax < 8")
                    continue
                if orbit is None:
                    orbit = iterate_norm_sequence(space, op, cfg.nmax, cols=cols)
                rep = gelfand_estimate(space, op, cfg.nmax, orbit=orbit)
                res.tables[name] = _series_rows(index, space, op.name, rep.to_rows())
                summary["probes"][name] = rep.to_dict()
            elif name in ("cesaro", "ritt") and space.p != 2:
                skip(name, "operator-norm probe needs p=2")
            elif name == "cesaro":
                rep = cesaro_report(space, op, cfg.nmax, cols=cols)
                res.tables[name] = _series_rows(index, space, op.name, rep.to_rows())
                summary["probes"][name] = rep.to_dict()
            elif name == "ritt":
                rep = ritt_sequence(space, op, cfg.nmax, cols=cols)
                res.tables[name] = _series_rows(index, space, op.name, rep.to_rows())
                summary["probes"][name] = rep.to_dict()
            elif name == "hypercyclicity":
                if space.m != 1 or space.is_sup:
                    skip(name, "needs m=1 and finite p")
                    continue
                rep = d_hypercyclicity_sequence(space, cfg.nmax)
                res.tables[name] = _series_rows(index, space, "D", rep.to_rows())
                summary["probes"][name] = rep.to_dict()
            elif name == "kbound":
                _kbound(cfg, index, space, spec, res, skip)
            elif name == "crosscheck":
                settings = ProbeSettings(nmax=cfg.nmax, cesaro_nmax=cfg.nmax, gelfand_nmax=max(cfg.nmax, 8), cols=cols)
                rep = cross_check(space, spec, settings)
                res.tables[name] = [
                    cell_fields(index, space) + [rep.operator, r.field, r.classifier, r.probe, r.status, r.evidence]
                    for r in rep.rows
                ]
                summary["probes"][name] = {"rows": len(rep.rows), "disagreements": rep.disagreements}
        except COMPUTATIONAL_ERRORS as exc:
            res.failed = True
            summary["probes"][name] = {"error": f"{type(exc).__name__}: {exc}"}
            if name != "crosscheck":
                res.tables[name] = [cell_fields(index, space) + [spec.label(), "error", "0", "nan", "false"]]
    return res


def _kbound(cfg, index, space, spec, res, skip) -> None:
    if spec.kind != "K":
        skip("kbound", "needs a K operator")
        return
    a, lam, m = spec.params
    if not space.is_sup or space.m != m or abs(complex(lam)) >= space.alpha:
        skip("kbound", "needs p=inf, matching m and |lambda| < alpha")
        return
    bound = k_lambda_norm_bound(a, lam, space.alpha)
    rng = np.random.default_rng([cfg.seed, index])
    worst = 0.0
    rows = []
    for i in range(cfg.samples):
        ratio = k_lambda_sup_ratio(space, a, lam, _random_polynomial(rng, 15))
        worst = max(worst, ratio)
        rows.append(("sup_ratio", i, ratio, False))
    res.tables["kbound"] = _series_rows(index, space, spec.label(), rows)
    res.summary["probes"]["kbound"] = {
        "bound": bound,
        "max_ratio": worst,
        "within_bound": worst <= bound * (1 + 1e-3),
    }


# ------------------------------------------------------------------ driver

HEADERS = {
    "norms": NORMS_COLUMNS,
    "classify": CLASSIFY_COLUMNS,
    "crosscheck": CROSSCHECK_COLUMNS,
}

COMMANDS = {"norms": norms_cell, "classify": classify_cell, "probe": probe_cell}


def _run_cell(args):
    command, cfg, index, space = args
    return COMMANDS[command](cfg, index, space)


def run_grid(command: str, cfg: ExperimentConfig, jobs: int = 1) -> list[CellResult]:
    tasks = [(command, cfg, i, s) for i, s in enumerate(cfg.grid())]
    if jobs <= 1 or len(tasks) == 1:
        return [_run_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, tasks))


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def execute(command: str, cfg: ExperimentConfig, out: Path, jobs: int = 1) -> bool:
    """Run ``command`` over the grid and write its artifacts; returns True when no cell failed."""
    results = run_grid(command, cfg, jobs)
    out.mkdir(parents=True, exist_ok=True)
    tables: dict[str, list[list[str]]] = {}
    for r in results:
        for name, rows in r.tables.items():
            tables.setdefault(name, []).extend(rows)
    files = []
    for name, rows in tables.items():
        header = HEADERS.get(name, SERIES_COLUMNS)
        fname = f"{name}.csv" if command != "probe" else f"probe_{name}.csv"
        write_csv(out / fname, header, rows)
        files.append(fname)
    ok = not any(r.failed for r in results)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg.to_dict(),
        "cells": [r.summary for r in results],
        "files": sorted(files),
        "status": "ok" if ok else "computational-failure",
    }
    if command == "probe":
        summary["disagreements"] = sum(c["probes"].get("crosscheck", {}).get("disagreements", 0) for c in summary["cells"])
    write_json(out / f"{command}_summary.json", summary)
    return ok


def aggregate(out: Path) -> dict:
    """Collect the summaries of earlier runs in ``out`` into one report."""
    sections = {}
    for command in ("norms", "classify", "probe"):
        path = out / f"{command}_summary.json"
        if path.exists():
            sections[command] = json.loads(path.read_text(encoding="utf-8"))
    if not sections:
        raise FileNotFoundError(f"no summaries found in {out}")
    report = {
        "schema_version": SCHEMA_VERSION,
        "commands": sorted(sections),
        "status": {k: v["status"] for k, v in sections.items()},
        "sections": sections,
    }
    if "norms" in sections:
        report["max_norm_rel_error"] = max(c["max_rel_error"] for c in sections["norms"]["cells"])
    if "probe" in sections:
        report["disagreements"] = sections["probe"].get("disagreements", 0)
    write_json(out / "report.json", report)
    return report
