"""Command-line entry point: ``dsrkit {validate,partitions,simulate,campaign,report}``."""
from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from .dbt import InvalidSpec, NotDbtReady, PartitionSpec, Scenario, CampaignResult, build_partitions, run_campaign
from .dsr_model import DsrSyntaxError, UnsupportedDsrType, parse_dsr_document
from .qa import ConstraintSet, load_default_baseline, run_all_checks
from .report import (
    METRICS,
    aggregate_max_over_h,
    build_heatmap,
    render_defect_report_text,
    render_heatmap_csv,
    render_heatmap_svg,
    render_heatmap_text,
)
from .sim import BackendFailure, BuiltinBackend, ExternalBackend, InvalidParams, ModelParams, simulate

EXIT_OK, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2
INPUT_ERRORS = (OSError, DsrSyntaxError, UnsupportedDsrType, InvalidSpec, InvalidParams)


def _fail(message: str) -> int:
    print(f"dsrkit: error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _load_baseline(path):
    if path is None:
        return load_default_baseline()
    return ConstraintSet.from_json(Path(path).read_bytes())


def _print_report(report, fmt):
    if fmt == "json":
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(render_defect_report_text(report))


def _metrics(choice):
    return METRICS if choice == "both" else (choice,)


def write_heatmaps(result: CampaignResult, out_dir: Path, metrics, aggregate_h=False) -> list[Path]:
    written = []
    for metric in metrics:
        slices = build_heatmap(result, metric)
        if aggregate_h:
            slices = [aggregate_max_over_h(slices)]
        stem = out_dir / f"heatmap_{metric}"
        for suffix, payload in (
            (".csv", render_heatmap_csv(slices)),
            (".svg", render_heatmap_svg(slices)),
            (".txt", render_heatmap_text(slices).encode("utf-8")),
        ):
            path = stem.with_suffix(suffix)
            path.write_bytes(payload)
            written.append(path)
    return written


def cmd_validate(args) -> int:
    try:
        dsr = parse_dsr_document(Path(args.dsr).read_bytes())
        baseline = _load_baseline(args.baseline)
    except INPUT_ERRORS as exc:
        return _fail(str(exc))
    report = run_all_checks(dsr, baseline)
    _print_report(report, args.format)
    return EXIT_OK if report.dbt_ready else EXIT_FINDINGS


def cmd_partitions(args) -> int:
    try:
        spec = PartitionSpec.from_json(Path(args.spec).read_bytes())
    except INPUT_ERRORS as exc:
        return _fail(str(exc))
    print(json.dumps([p.to_dict() for p in build_partitions(spec)], indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = ModelParams(zeta=args.zeta, omega_n=args.omega_n, tau_att=args.tau_att,
                         c_drift=args.c_drift, dt=args.dt, t_end=args.t_end)
    scenario = Scenario(args.theta, args.psi, args.phi, args.height, (0, 0, 0), 0, 0)
    try:
        csv_text = simulate(scenario, params).to_csv()
    except InvalidParams as exc:
        return _fail(str(exc))
    if args.out:
        Path(args.out).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_campaign(args) -> int:
    if args.scenarios_per_partition < 1:
        return _fail("--scenarios-per-partition must be at least 1")
    try:
        dsr = parse_dsr_document(Path(args.dsr).read_bytes())
        spec = PartitionSpec.from_json(Path(args.spec).read_bytes())
        baseline = _load_baseline(args.baseline)
    except INPUT_ERRORS as exc:
        return _fail(str(exc))

    out_dir = Path(args.out)
    with tempfile.TemporaryDirectory(prefix="dsrkit-") as work:
        backend = ExternalBackend(args.backend, work) if args.backend else BuiltinBackend()
        try:
            result = run_campaign(dsr, spec, args.scenarios_per_partition, args.seed, backend,
                                  baseline=baseline, jobs=args.jobs)
        except NotDbtReady as exc:
            print(f"dsrkit: {exc}", file=sys.stderr)
            if exc.report is not None:
                _print_report(exc.report, args.format)
            return EXIT_FINDINGS
        except BackendFailure as exc:
            return _fail(str(exc))
        except InvalidSpec as exc:
            return _fail(str(exc))

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "campaign.json").write_bytes(result.to_json())
        write_heatmaps(result, out_dir, _metrics(args.metric), args.aggregate_h)
    except OSError as exc:
        return _fail(str(exc))
    n_inf = sum(p.violations_horizontal > 0 for p in result.per_partition)
    print(f"{len(result.per_scenario)} scenarios in {len(result.per_partition)} partitions; "
          f"{n_inf} partition(s) with horizontal violations; results in {out_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        result = CampaignResult.from_json(Path(args.campaign).read_bytes())
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_heatmaps(result, out_dir, _metrics(args.metric), args.aggregate_h)
    except (*INPUT_ERRORS, KeyError, TypeError, ValueError) as exc:
        return _fail(f"cannot rebuild heat maps: {exc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dsrkit", description="Take-Off Performance DSR checks and defect-based testing.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a DSR document for domain-specific defects")
    p.add_argument("dsr")
    p.add_argument("--baseline", help="constraint baseline JSON (default: packaged take-off baseline)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("partitions", help="print the partition grid of a partition spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_partitions)

    p = sub.add_parser("simulate", help="run one built-in take-off simulation, trajectory CSV on stdout")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--psi", type=float, required=True)
    p.add_argument("--height", type=float, required=True)
    p.add_argument("--phi", type=float, default=0.0)
    defaults = ModelParams()
    for name in ("zeta", "omega_n", "tau_att", "c_drift", "dt", "t_end"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=getattr(defaults, name))
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    def heatmap_flags(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--metric", choices=("horizontal", "altitude", "both"), default="both")
        p.add_argument("--aggregate-h", action="store_true", help="one map per metric, max over h slices")

    p = sub.add_parser("campaign", help="run the defect-based testing campaign")
    p.add_argument("dsr")
    p.add_argument("spec")
    p.add_argument("--baseline")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--scenarios-per-partition", type=int, default=2)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--backend", help="external simulator command, called once per scenario file")
    p.add_argument("--format", choices=("text", "json"), default="text")
    heatmap_flags(p)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("report", help="rebuild heat maps from a stored campaign.json")
    p.add_argument("campaign")
    heatmap_flags(p)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
