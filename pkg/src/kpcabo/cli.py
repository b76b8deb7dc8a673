"""Command-line entry point: ``kpcabo {run,campaign,summarize,ingest}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import harness
from .config import ALGORITHMS, RunConfig
from .testbed import FUNCTION_IDS

OUTPUT_ENV = "KPCABO_OUTPUT_DIR"


def _default_out() -> str:
    return os.environ.get(OUTPUT_ENV, "runs")


def _report(records) -> int:
    failed = 0
    for rec in records:
        c = rec.config
        print(f"{c.algorithm} {c.function_id} d={c.dim} instance={c.instance_seed} seed={c.run_seed} "
              f"status={rec.status} final_gap={rec.iterations[-1]['target_gap'] if rec.iterations else float('nan'):.6g}")
        failed += rec.status == "failed"
    return failed


def cmd_run(args) -> int:
    grid = [RunConfig(algorithm=args.algo, function_id=args.fn, dim=args.dim, instance_seed=args.instance,
                      run_seed=s, budget=args.budget, output_dir=args.out) for s in range(args.seeds)]
    failed = _report(harness.run_campaign(grid, args.jobs))
    if failed:
        raise RuntimeError(f"{failed} run(s) failed; see {Path(args.out) / harness.MANIFEST}")
    return 0


def cmd_campaign(args) -> int:
    with open(args.config) as fh:
        grid_desc = json.load(fh)
    grid_desc.setdefault("output_dir", _default_out())
    grid = harness.grid_from_dict(grid_desc)
    failed = _report(harness.run_campaign(grid, args.jobs or grid_desc.get("parallelism", 1)))
    if failed:
        raise RuntimeError(f"{failed} run(s) failed; see the manifest in {grid_desc['output_dir']}")
    return 0


def cmd_summarize(args) -> int:
    records = harness.load_records(args.inp)
    if not records:
        raise FileNotFoundError(f"no run CSVs in {args.inp}")
    conv, timing = harness.summarize(records).write(args.out)
    print(f"wrote {conv} and {timing} from {len(records)} runs")
    return 0


def cmd_ingest(args) -> int:
    records = harness.ingest_external(args.csv, args.label)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for rec in records:
        harness.write_record(rec, out / harness.run_filename(rec.config))
    print(f"ingested {len(records)} runs labelled {args.label!r} into {out}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one line instead of the usage block
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kpcabo", description="KPCA-assisted Bayesian optimisation benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one algorithm on one function for several seeds")
    r.add_argument("--algo", required=True, choices=ALGORITHMS)
    r.add_argument("--fn", required=True, choices=FUNCTION_IDS)
    r.add_argument("--dim", required=True, type=int)
    r.add_argument("--budget", required=True, type=int)
    r.add_argument("--seeds", type=int, default=1, help="number of run seeds, 0..k-1")
    r.add_argument("--instance", type=int, default=0)
    r.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or ./runs)")
    r.add_argument("--jobs", type=int, default=1, help="parallel runs")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("campaign", help="run a grid described by a JSON file")
    c.add_argument("--config", required=True)
    c.add_argument("--jobs", type=int, default=None)
    c.set_defaults(func=cmd_campaign)

    s = sub.add_parser("summarize", help="mean target gap and timings per group")
    s.add_argument("--in", dest="inp", default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_summarize)

    i = sub.add_parser("ingest", help="convert an external best-so-far CSV into run files")
    i.add_argument("--csv", required=True)
    i.add_argument("--label", required=True)
    i.add_argument("--out", default=None)
    i.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for name in ("out", "inp"):
        if getattr(args, name, "") is None:
            setattr(args, name, _default_out())
    try:
        return args.func(args)
    except Exception as exc:
        print(f"kpcabo {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
