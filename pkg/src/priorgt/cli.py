"""Batch command-line front end.

Subcommands: ``plan`` (write a test plan or matrix), ``simulate`` (run a
campaign to CSV), ``bounds`` (print the five bound reports), and ``oracle``
(run the brute-force checks).  Every subcommand is deterministic given its
flags; output files are written to a temporary name and renamed into place so
interrupted runs never leave torn files.  Exit codes: 0 success, 1 a check
failed, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import adaptive, bounds, nonadaptive, oracle, sim
from .priors import load_prior


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _bounds_table(reports: list[bounds.BoundReport], fmt: str) -> str:
    if fmt == "json":
        payload = [
            {
                "theorem": r.theorem,
                "test_bound": r.test_bound,
                "error_bound": r.error_bound,
                "applicable": r.applicable,
                "notes": r.notes,
            }
            for r in reports
        ]
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        lines = ["theorem,test_bound,error_bound,applicable,notes"]
        for r in reports:
            notes = r.notes.replace(",", ";")
            lines.append(f"{r.theorem},{r.test_bound!r},{r.error_bound!r},{int(r.applicable)},{notes}")
        return "\n".join(lines) + "\n"
    lines = [f"{'theorem':8} {'test_bound':>14} {'error_bound':>12} {'applicable':>10}  notes"]
    for r in reports:
        lines.append(
            f"{r.theorem:8} {r.test_bound:14.4f} {r.error_bound:12.6g} "
            f"{str(r.applicable):>10}  {r.notes}"
        )
    return "\n".join(lines) + "\n"


def cmd_plan(args) -> int:
    p = load_prior(args.prior)
    if args.algorithm in ("me", "shannon_fano", "huffman"):
        construction = "max_entropy" if args.algorithm == "me" else args.algorithm
        plan = adaptive.build_plan(p, construction)
        payload = adaptive.plan_to_json_dict(plan)
    elif args.algorithm == "cca":
        t = nonadaptive.num_tests_cca(p, args.delta)
        if t < 1:
            raise ValueError("the sampled design needs at least one row; raise delta or mu")
        g = nonadaptive.optimal_g(p)
        m = nonadaptive.build_cca_matrix(p, t, g, args.seed)
        payload = nonadaptive.matrix_to_json_dict(m)
    else:
        m = nonadaptive.build_block_matrix(p, args.eps, args.delta, args.seed)
        payload = nonadaptive.matrix_to_json_dict(m)
    _atomic_write(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(_bounds_table(bounds.all_reports(p, args.eps, args.delta, args.pe), "text"))
    return 0


def cmd_simulate(args) -> int:
    campaign = sim.load_campaign(args.campaign)
    reports = sim.run_campaign(campaign)
    summary = sim.summarize(reports)
    _atomic_write(args.out, sim.trials_csv_text(reports))
    summary_path = args.summary_out
    if summary_path is None:
        root, ext = os.path.splitext(args.out)
        summary_path = f"{root}.summary{ext or '.csv'}"
    _atomic_write(summary_path, sim.summary_csv_text(summary))
    sys.stdout.write(f"wrote {len(reports)} trial rows to {args.out}\n")
    sys.stdout.write(f"wrote {len(summary)} summary rows to {summary_path}\n")
    return 0


def cmd_bounds(args) -> int:
    p = load_prior(args.prior)
    text = _bounds_table(bounds.all_reports(p, args.eps, args.delta, args.pe), args.format)
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_oracle(args) -> int:
    results = oracle.run_all_checks(seed=args.seed)
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        sys.stdout.write(f"{status}  {r.name:<{width}}  {r.seconds:8.3f}s  {r.detail}\n")
        failed += not r.passed
    sys.stdout.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priorgt",
        description="Group testing with per-item priors: plans, bounds, oracle checks, simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="write a test plan or test matrix as JSON")
    plan.add_argument("--prior", required=True, help="path to a prior spec JSON")
    plan.add_argument(
        "--algorithm",
        required=True,
        choices=["me", "shannon_fano", "huffman", "cca", "block"],
    )
    plan.add_argument("--eps", type=float, default=0.01)
    plan.add_argument("--delta", type=float, default=1.0)
    plan.add_argument("--pe", type=float, default=0.0)
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--out", required=True)
    plan.set_defaults(fn=cmd_plan)

    simulate = sub.add_parser("simulate", help="run a campaign and write trial/summary CSVs")
    simulate.add_argument("--campaign", required=True, help="path to a campaign JSON")
    simulate.add_argument("--out", required=True, help="trial CSV path")
    simulate.add_argument("--summary-out", default=None, help="summary CSV path (default: derived)")
    simulate.set_defaults(fn=cmd_simulate)

    bnd = sub.add_parser("bounds", help="print the five bound reports for a prior")
    bnd.add_argument("--prior", required=True)
    bnd.add_argument("--eps", type=float, default=0.01)
    bnd.add_argument("--delta", type=float, default=1.0)
    bnd.add_argument("--pe", type=float, default=0.0)
    bnd.add_argument("--format", choices=["text", "csv", "json"], default="text")
    bnd.add_argument("--out", default=None)
    bnd.set_defaults(fn=cmd_bounds)

    orc = sub.add_parser("oracle", help="run the brute-force verification battery")
    orc.add_argument("--seed", type=int, default=20240801)
    orc.set_defaults(fn=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
