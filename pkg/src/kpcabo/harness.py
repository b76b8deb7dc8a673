"""Benchmark campaigns: running grids of configs, persisting traces, summarising.

Every run is written to its own CSV (config columns followed by the
per-iteration columns) and each output directory gets a JSON manifest
listing the files with their SHA-256 content hashes. Runs whose file is
already listed in the manifest with a matching hash are not recomputed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import drivers, testbed
from .config import ALGORITHMS, ROW_FIELDS, RunConfig, RunRecord

log = logging.getLogger(__name__)

CONFIG_FIELDS = ("algorithm", "function_id", "dim", "instance_seed", "run_seed", "budget", "doe_size", "eta",
                 "restarts")
COLUMNS = CONFIG_FIELDS + ROW_FIELDS
EXTERNAL_COLUMNS = ("function_id", "dim", "instance_seed", "run_seed", "eval_count", "best_so_far")
MANIFEST = "manifest.json"
DEFAULT_GROUP = ("algorithm", "function_id", "dim")
_INT_CONFIG = {"dim", "instance_seed", "run_seed", "budget", "doe_size", "restarts"}


class SchemaError(ValueError):
    pass


# -- CSV persistence -------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def run_filename(config: RunConfig) -> str:
    return (f"{config.algorithm}_{config.function_id}_d{config.dim}_i{config.instance_seed}"
            f"_s{config.run_seed}_{config.digest()}.csv")


def write_record(record: RunRecord, path) -> Path:
    path = Path(path)
    cfg = record.config.key()
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in record.iterations:
            w.writerow([_fmt(cfg[k]) for k in CONFIG_FIELDS] + [_fmt(row[k]) for k in ROW_FIELDS])
    os.replace(tmp, path)
    return path


def read_record(path) -> RunRecord:
    """Inverse of :func:`write_record` (numeric fields are exact at 17 digits)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise SchemaError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no iteration rows")
    first = rows[0]
    cfg = {k: (int(first[k]) if k in _INT_CONFIG else first[k]) for k in CONFIG_FIELDS}
    cfg["eta"] = float(cfg["eta"])
    record = RunRecord(config=RunConfig.from_dict(cfg))
    for raw in rows:
        row = {k: float(raw[k]) for k in ROW_FIELDS}
        row["eval_count"] = int(row["eval_count"])
        record.iterations.append(row)
    record.final_best = record.iterations[-1]["best_so_far"]
    if len(rows) < record.config.budget:
        record.status = "degenerate"
    return record


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# -- campaigns -------------------------------------------------------------


def _load_manifest(directory: Path) -> dict:
    path = directory / MANIFEST
    if not path.exists():
        return {}
    with open(path) as fh:
        data = json.load(fh)
    return {entry["digest"]: entry for entry in data.get("runs", [])}


def _reusable(directory: Path, entry) -> bool:
    if entry is None or entry.get("status") not in ("completed", "degenerate"):
        return False
    path = directory / entry["file"]
    return path.exists() and file_sha256(path) == entry["sha256"]


def _execute(config: RunConfig):
    """Run one config and write its CSV; errors stay with this run."""
    directory = Path(config.output_dir)
    path = directory / run_filename(config)
    try:
        f = testbed.make_function(config.function_id, config.dim, config.instance_seed)
        record = drivers.run(f, config)
        write_record(record, path)
        return record, path.name, ""
    except Exception as exc:  # reported in the manifest, the campaign goes on
        log.error("run %s failed: %s", config.digest(), exc)
        record = RunRecord(config=config, status="failed", message=f"{type(exc).__name__}: {exc}")
        return record, None, record.message


def _entry(config, filename, record, directory):
    entry = dict(digest=config.digest(), file=filename, status=record.status, message=record.message,
                 config=config.key(), total_seconds=record.total_seconds)
    entry["sha256"] = file_sha256(directory / filename) if filename else None
    return entry


def run_campaign(grid, parallelism: int = 1) -> list:
    """Execute every config in ``grid``; return one :class:`RunRecord` each.

    Runs already present in their directory's manifest with an unchanged
    file are read back instead of recomputed. Each output directory gets a
    manifest written once, after its runs finish.
    """
    grid = list(grid)
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    for config in grid:
        if config.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {config.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    directories = {Path(c.output_dir) for c in grid}
    for d in directories:
        d.mkdir(parents=True, exist_ok=True)
    manifests = {d: _load_manifest(d) for d in directories}

    records = [None] * len(grid)
    entries = {d: dict(m) for d, m in manifests.items()}
    todo = []
    seen = set()
    for i, config in enumerate(grid):
        d = Path(config.output_dir)
        entry = manifests[d].get(config.digest())
        if _reusable(d, entry):
            rec = read_record(d / entry["file"])
            rec.total_seconds = entry.get("total_seconds", 0.0)
            rec.config = config
            records[i] = rec
        elif (d, config.digest()) not in seen:
            seen.add((d, config.digest()))
            todo.append(i)

    if parallelism == 1 or len(todo) <= 1:
        results = [_execute(grid[i]) for i in todo]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_execute, [grid[i] for i in todo]))

    computed = defaultdict(int)
    done = {}
    for i, (record, filename, _) in zip(todo, results):
        config = grid[i]
        d = Path(config.output_dir)
        entries[d][config.digest()] = _entry(config, filename, record, d)
        computed[d] += 1
        records[i] = record
        done[(d, config.digest())] = record
    for i, config in enumerate(grid):
        if records[i] is None:  # duplicate config within the grid
            records[i] = done[(Path(config.output_dir), config.digest())]

    for d in directories:
        runs = sorted(entries[d].values(), key=lambda e: e["file"] or e["digest"])
        manifest = dict(runs=runs, computed=computed[d],
                        failed=[e["digest"] for e in runs if e["status"] == "failed"])
        with open(d / MANIFEST, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
    return records


def load_records(directory) -> list:
    """Read every run CSV in ``directory`` (the manifest is not required)."""
    return [read_record(p) for p in sorted(Path(directory).glob("*.csv"))]


# -- summaries -------------------------------------------------------------


@dataclass
class Summary:
    convergence: list = field(default_factory=list)  # one dict per group and eval_count
    timing: list = field(default_factory=list)  # one dict per group

    def write(self, path) -> tuple:
        """Write the convergence table to ``path`` and timings next to it."""
        path = Path(path)
        timing_path = path.with_name(path.stem + "_timing" + (path.suffix or ".csv"))
        for rows, p in ((self.convergence, path), (self.timing, timing_path)):
            if not rows:
                continue
            with open(p, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows({k: _fmt(v) for k, v in r.items()} for r in rows)
        return path, timing_path


def _sem(values) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def summarize(records, group_by=DEFAULT_GROUP) -> Summary:
    """Mean target gap with its standard error per group and evaluation count,
    plus mean per-run totals of fit and acquisition time per group.

    Records are pooled over every config field not in ``group_by`` (by
    default instances and run seeds). Runs that stopped early contribute
    only to the evaluation counts they reached.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to summarise")
    group_by = tuple(group_by)
    groups = defaultdict(list)
    for rec in records:
        key = rec.config.key()
        groups[tuple(key[k] for k in group_by)].append(rec)
    out = Summary()
    for gkey in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        recs = groups[gkey]
        base = dict(zip(group_by, gkey))
        by_count = defaultdict(list)
        for rec in recs:
            for row in rec.iterations:
                by_count[row["eval_count"]].append(row["target_gap"])
        for count in sorted(by_count):
            gaps = by_count[count]
            out.convergence.append(dict(base, eval_count=count, n_runs=len(gaps),
                                        mean_gap=float(np.mean(gaps)), sem_gap=_sem(gaps)))
        fit = [np.nansum(rec.column("fit_seconds")) for rec in recs]
        acq = [np.nansum(rec.column("acq_seconds")) for rec in recs]
        out.timing.append(dict(base, n_runs=len(recs), fit_seconds=float(np.mean(fit)),
                               acq_seconds=float(np.mean(acq))))
    return out


# -- external baselines ----------------------------------------------------


def export_external(records, path) -> Path:
    """Write records in the six-column external schema."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EXTERNAL_COLUMNS)
        for rec in records:
            c = rec.config
            for row in rec.iterations:
                w.writerow([c.function_id, c.dim, c.instance_seed, c.run_seed, row["eval_count"],
                            _fmt(row["best_so_far"])])
    return path


def _empty_row(eval_count, best, gap):
    row = {k: math.nan for k in ROW_FIELDS}
    row.update(eval_count=eval_count, best_so_far=best, target_gap=gap)
    return row


def ingest_external(csv_path, algorithm_label: str) -> list:
    """Turn an external best-so-far trace file into records that
    :func:`summarize` accepts, with target gaps from the testbed optima."""
    if not algorithm_label:
        raise ValueError("algorithm label must be non-empty")
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(EXTERNAL_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise SchemaError(f"schema mismatch: missing columns {sorted(missing)}")
        rows = list(reader)
    runs = defaultdict(list)
    optima = {}
    # line 1 is the header
    for line, raw in enumerate(rows, start=2):
        fid = raw["function_id"]
        if fid not in testbed.FUNCTION_IDS:
            raise SchemaError(f"row {line}: unknown function_id {fid!r}")
        try:
            dim, inst, seed, count = (int(raw[k]) for k in ("dim", "instance_seed", "run_seed", "eval_count"))
            best = float(raw["best_so_far"])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"row {line}: {exc}") from None
        if dim < 2 or count < 1:
            raise SchemaError(f"row {line}: dim must be >= 2 and eval_count >= 1")
        key = (fid, dim, inst, seed)
        if (fid, dim, inst) not in optima:
            optima[(fid, dim, inst)] = testbed.make_function(fid, dim, inst).optimum_value
        trace = runs[key]
        if trace and count <= trace[-1]["eval_count"]:
            raise SchemaError(f"row {line}: eval_count {count} does not increase")
        trace.append(_empty_row(count, best, best - optima[(fid, dim, inst)]))
    records = []
    for (fid, dim, inst, seed), trace in runs.items():
        config = RunConfig(algorithm=algorithm_label, function_id=fid, dim=dim, instance_seed=inst, run_seed=seed,
                           budget=trace[-1]["eval_count"], doe_size=0)
        records.append(RunRecord(config=config, iterations=trace, final_best=trace[-1]["best_so_far"]))
    return records


# -- default grid ----------------------------------------------------------

DEFAULT_FUNCTIONS = ("rastrigin", "weierstrass", "schaffers", "gallagher-21", "lunacek")
DEFAULT_DIMS = (10, 20)
DEFAULT_SEEDS = 10


def default_grid(output_dir="runs", algorithms=ALGORITHMS, functions=DEFAULT_FUNCTIONS, dims=DEFAULT_DIMS,
                 seeds=DEFAULT_SEEDS, instance_seed=0) -> list:
    """Desk-scale grid: budget 5d, one run per seed."""
    return [RunConfig(algorithm=a, function_id=fn, dim=d, instance_seed=instance_seed, run_seed=s,
                      budget=5 * d, output_dir=str(output_dir))
            for a in algorithms for fn in functions for d in dims for s in range(seeds)]


def grid_from_dict(grid_desc: dict) -> list:
    """Build a grid from a JSON-style dict.

    Either ``{"runs": [config, ...]}`` or a product specification with list
    values for ``algorithms``, ``functions``, ``dims``, ``seeds`` (a count or
    a list), ``instances`` and scalar ``budget`` (default 5d), ``eta``,
    ``restarts``, ``output_dir``.
    """
    if "runs" in grid_desc:
        return [RunConfig.from_dict(dict(c, output_dir=c.get("output_dir", grid_desc.get("output_dir", "runs"))))
                for c in grid_desc["runs"]]
    seeds = grid_desc.get("seeds", DEFAULT_SEEDS)
    seeds = range(seeds) if isinstance(seeds, int) else seeds
    grid = []
    for a in grid_desc.get("algorithms", ALGORITHMS):
        for fn in grid_desc.get("functions", DEFAULT_FUNCTIONS):
            for d in grid_desc.get("dims", DEFAULT_DIMS):
                for inst in grid_desc.get("instances", [0]):
                    for s in seeds:
                        grid.append(RunConfig(
                            algorithm=a, function_id=fn, dim=d, instance_seed=inst, run_seed=s,
                            budget=grid_desc.get("budget", 5 * d), eta=grid_desc.get("eta", 0.9),
                            restarts=grid_desc.get("restarts", 10), output_dir=grid_desc.get("output_dir", "runs")))
    return grid
