"""Command-line interface: simulate, discover, evaluate, bench, study, oracle-check.

All user-facing files use 1-based variable indices.  Every command that writes
output also writes a manifest echoing the fully resolved configuration, so a
run can be reproduced from its artifacts.  Exit codes: 0 success, 1 analysis
failure, 2 usage or configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .ci import DegenerateDataError, FisherZProvider, OracleProvider
from .discovery import DiscoveryOptions, stage_one, stage_three, stage_two
from .evaluate import (
    compare,
    run_benchmark,
    run_sample_size_study,
    run_scalability,
)
from .graph import SequentialCausalGraph, check_condition_1, check_condition_2
from .simulate import (
    CsvFormatError,
    SelectionSurvivalError,
    StructureSpec,
    generate,
    random_structure,
    read_dataset_csv,
    write_dataset_csv,
)

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "1", "yes", "on"):
        return True
    if value in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_manifest(out_dir: Path, command: str, config: dict, outputs: dict) -> None:
    manifest = {
        "command": command,
        "config": config,
        "outputs": outputs,
        "version": __version__,
    }
    _atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqsel",
        description="Identify latent-selection, direct, and confounded dependencies in sequential data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a structure and a selected dataset")
    sim.add_argument("--n-vars", type=int, required=True)
    sim.add_argument("--n-samples", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--with-confounders", type=_parse_bool, default=True, metavar="BOOL")
    sim.add_argument("--max-extra", type=int, default=None, help="cap on extras per dependency kind")
    sim.add_argument("--max-selection", type=int, default=None, help="extra cap on selection pairs")
    sim.add_argument("--out-dir", type=Path, required=True)

    dis = sub.add_parser("discover", help="run the identification algorithm on a dataset CSV")
    dis.add_argument("--data", type=Path, required=True)
    dis.add_argument("--alpha", type=float, default=0.05)
    dis.add_argument("--with-confounders", type=_parse_bool, default=True, metavar="BOOL")
    dis.add_argument("--trace", action="store_true", help="write one JSON record per CI query")
    dis.add_argument("--out-dir", type=Path, required=True)

    ev = sub.add_parser("evaluate", help="score an estimated structure against a ground truth")
    ev.add_argument("--truth", type=Path, required=True)
    ev.add_argument("--estimate", type=Path, required=True)
    ev.add_argument("--out-dir", type=Path, required=True)

    be = sub.add_parser("bench", help="query-count and wall-time scaling across graph sizes")
    be.add_argument("--n-list", type=_parse_int_list, required=True)
    be.add_argument("--max-selection", type=int, default=10)
    be.add_argument("--n-samples", type=int, default=10_000)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--alpha", type=float, default=0.05)
    be.add_argument("--out-dir", type=Path, required=True)

    st = sub.add_parser("study", help="selection-pair scores across sample sizes")
    st.add_argument("--sizes", type=_parse_int_list, required=True)
    st.add_argument("--replicates", type=int, required=True)
    st.add_argument("--n-vars", type=int, default=8)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--alpha", type=float, default=0.05)
    st.add_argument("--out-dir", type=Path, required=True)

    oc = sub.add_parser("oracle-check", help="exact-recovery sweep with the graph oracle")
    oc.add_argument("--n-vars", type=int, required=True)
    oc.add_argument("--replicates", type=int, required=True)
    oc.add_argument("--with-confounders", type=_parse_bool, default=True, metavar="BOOL")
    oc.add_argument("--seed", type=int, default=0)

    return parser


def cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.n_vars < 2:
        parser.error("--n-vars must be >= 2")
    if args.n_samples < 1:
        parser.error("--n-samples must be >= 1")
    out_dir: Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = StructureSpec(
        n_vars=args.n_vars,
        allow_confounders=args.with_confounders,
        max_extra_per_kind=args.max_extra,
        seed=args.seed,
        max_selection_pairs=args.max_selection,
    )
    result = generate(spec, args.n_samples)
    _atomic_write(out_dir / "graph.json", result.graph.to_json())
    write_dataset_csv(result.dataset, out_dir / "data.csv")
    realized = {
        "first_order_direct": sum(1 for i, j in result.graph.direct_edges if j == i + 1),
        "higher_order_direct": sum(1 for i, j in result.graph.direct_edges if j > i + 1),
        "selection_groups": len(result.graph.selection_groups),
        "confounder_pairs": len(result.graph.confounder_pairs),
    }
    config = {
        "n_vars": args.n_vars,
        "n_samples": args.n_samples,
        "seed": args.seed,
        "with_confounders": args.with_confounders,
        "max_extra": args.max_extra,
        "max_selection": args.max_selection,
    }
    outputs = {
        "graph": "graph.json",
        "dataset": "data.csv",
        "realized_counts": realized,
        "survival_rate": result.survival_rate,
        "n_raw_sampled": result.n_raw_sampled,
    }
    _write_manifest(out_dir, "simulate", config, outputs)
    print(f"wrote {out_dir / 'data.csv'} ({args.n_samples} rows, {args.n_vars} columns)")
    return EXIT_OK


def cmd_discover(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not 0.0 < args.alpha < 1.0:
        parser.error("--alpha must lie in (0, 1)")
    out_dir: Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = read_dataset_csv(args.data)
    provider = FisherZProvider(dataset, alpha=args.alpha)
    state = stage_one(provider, dataset.n_vars, trace=args.trace)
    state = stage_two(provider, state)
    if args.with_confounders:
        state = stage_three(provider, state)
    estimate = state.to_graph()
    _atomic_write(out_dir / "estimate.json", estimate.to_json())
    _atomic_write(out_dir / "estimate.dot", estimate.to_dot())
    outputs = {
        "estimate": "estimate.json",
        "dot": "estimate.dot",
        "ci_query_count": provider.query_count,
    }
    if args.trace:
        lines = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in state.trace or [])
        _atomic_write(out_dir / "trace.jsonl", lines)
        outputs["trace"] = "trace.jsonl"
    config = {
        "data": str(args.data),
        "alpha": args.alpha,
        "with_confounders": args.with_confounders,
        "trace": args.trace,
    }
    _write_manifest(out_dir, "discover", config, outputs)
    print(
        f"identified {len(estimate.direct_edges)} direct, "
        f"{len(estimate.selection_groups)} selection, "
        f"{len(estimate.confounder_pairs)} confounded "
        f"({provider.query_count} CI queries)"
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out_dir: Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    truth = SequentialCausalGraph.from_json(args.truth.read_text())
    estimate = SequentialCausalGraph.from_json(args.estimate.read_text())
    report = compare(truth, estimate)
    violations = [
        {"condition_id": v.condition_id, "pairs": [list(p) for p in v.offending_pairs], "description": v.description}
        for v in (*check_condition_1(truth), *check_condition_2(truth))
    ]
    payload = report.to_json_dict()
    payload["truth_condition_violations"] = violations
    _atomic_write(out_dir / "report.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    config = {"truth": str(args.truth), "estimate": str(args.estimate)}
    _write_manifest(out_dir, "evaluate", config, {"report": "report.json"})
    for name, m in report.kinds.items():
        print(f"{name}: precision={m.precision:.3f} recall={m.recall:.3f}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not args.n_list:
        parser.error("--n-list must not be empty")
    if sorted(args.n_list) != args.n_list:
        parser.error("--n-list must be ascending")
    out_dir: Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    points = run_scalability(
        args.n_list, args.max_selection, n_samples=args.n_samples, seed=args.seed, alpha=args.alpha
    )
    path = out_dir / "bench.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_vars", "ci_query_count", "wall_time_seconds"])
        for p in points:
            writer.writerow([p.n_vars, p.ci_query_count, format(p.wall_time, ".6f")])
    config = {
        "n_list": args.n_list,
        "max_selection": args.max_selection,
        "n_samples": args.n_samples,
        "seed": args.seed,
        "alpha": args.alpha,
    }
    _write_manifest(out_dir, "bench", config, {"bench": "bench.csv"})
    for p in points:
        print(f"N={p.n_vars}: {p.ci_query_count} queries, {p.wall_time:.2f}s")
    return EXIT_OK


def cmd_study(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not args.sizes:
        parser.error("--sizes must not be empty")
    if sorted(args.sizes) != args.sizes:
        parser.error("--sizes must be ascending")
    if args.replicates < 2:
        parser.error("--replicates must be >= 2")
    out_dir: Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = run_sample_size_study(
        args.sizes, args.n_vars, args.replicates, seed=args.seed, alpha=args.alpha
    )
    with open(out_dir / "study.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_samples", "mean_precision", "std_precision", "mean_recall", "std_recall"])
        for s in summaries:
            writer.writerow(
                [
                    s.n_samples,
                    format(s.mean_precision, ".6f"),
                    format(s.std_precision, ".6f"),
                    format(s.mean_recall, ".6f"),
                    format(s.std_recall, ".6f"),
                ]
            )
    payload = [
        {
            "n_samples": s.n_samples,
            "mean_precision": s.mean_precision,
            "std_precision": s.std_precision,
            "mean_recall": s.mean_recall,
            "std_recall": s.std_recall,
        }
        for s in summaries
    ]
    _atomic_write(out_dir / "study.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    config = {
        "sizes": args.sizes,
        "replicates": args.replicates,
        "n_vars": args.n_vars,
        "seed": args.seed,
        "alpha": args.alpha,
    }
    _write_manifest(out_dir, "study", config, {"study_csv": "study.csv", "study_json": "study.json"})
    for s in summaries:
        print(
            f"n={s.n_samples}: precision {s.mean_precision:.3f}+-{s.std_precision:.3f}, "
            f"recall {s.mean_recall:.3f}+-{s.std_recall:.3f}"
        )
    return EXIT_OK


def _exact_match(truth: SequentialCausalGraph, estimate: SequentialCausalGraph) -> bool:
    """Exact structural equality over expanded pair sets per kind."""
    return (
        truth.direct_edges == estimate.direct_edges
        and truth.selection_pairs == estimate.selection_pairs
        and truth.confounded_pairs == estimate.confounded_pairs
    )


def cmd_oracle_check(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.n_vars < 2:
        parser.error("--n-vars must be >= 2")
    if args.replicates < 1:
        parser.error("--replicates must be >= 1")
    failures = []
    from .discovery import discover  # local import keeps the hookable surface small

    start = time.perf_counter()
    for rep in range(args.replicates):
        seed = args.seed + rep
        spec = StructureSpec(n_vars=args.n_vars, allow_confounders=args.with_confounders, seed=seed)
        truth = random_structure(spec)
        provider = OracleProvider(truth)
        estimate = discover(
            provider,
            args.n_vars,
            DiscoveryOptions(with_confounders=args.with_confounders),
        )
        ok = _exact_match(truth, estimate)
        print(f"seed {seed}: {'pass' if ok else 'FAIL'}")
        if not ok:
            failures.append(seed)
    elapsed = time.perf_counter() - start
    print(
        f"{args.replicates - len(failures)}/{args.replicates} exact recoveries "
        f"in {elapsed:.1f}s"
    )
    if failures:
        print(f"failing seeds: {', '.join(map(str, failures))}", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "discover": cmd_discover,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "study": cmd_study,
    "oracle-check": cmd_oracle_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = _COMMANDS[args.command]
    try:
        return command(args, parser)
    except CsvFormatError as exc:
        print(f"error: malformed CSV: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DegenerateDataError, SelectionSurvivalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    raise SystemExit(main())
