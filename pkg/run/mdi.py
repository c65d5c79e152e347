import argparse
import logging
import sys
from pathlib import Path

from tabulate import tabulate

from dev.core import MDIError, NumericalError
from dev.data_parser import (
    DataFormatError,
    instance_name,
    read_csv,
    read_dataset,
    read_detections,
    write_dataset,
    write_detections,
    write_point_scores,
    write_pr_curve,
    write_report,
)
from dev.evaluation import evaluate_dataset
from dev.pipeline import METHODS, RunConfig, detect_dataset, detect_series
from dev.synthesis import GROUP_NAMES, generate_dataset
from run.bench import run_bench
from run.table import run_table, write_table
from utils import load_config_files, load_settings

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors reported as exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _method_parser(options):
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--method", choices=METHODS, default=options["method"])
    parser.add_argument("--cov", choices=["full", "shared", "identity"], default=options["cov"])
    parser.add_argument("--embed", type=int, default=options["embed"], help="Time-delay embedding dimension k")
    parser.add_argument("--min-len", dest="min_len", type=int, default=options["min_len"])
    parser.add_argument("--max-len", dest="max_len", type=int, default=options["max_len"])
    parser.add_argument("--top", type=int, default=options["top"], help="Number of non-overlapping intervals to report")
    parser.add_argument("--bandwidth", type=float, default=options["bandwidth"], help="KDE bandwidth on standardized data")
    parser.add_argument("--reg", type=float, default=options["reg"], help="Relative covariance regularization")
    parser.add_argument("--no-standardize", dest="standardize", action="store_false", default=options["standardize"])
    parser.add_argument("--thresholds", type=int, default=options["thresholds"], help="Score thresholds for pointwise baselines")
    parser.add_argument("--workers", type=int, default=options["workers"], help="Worker processes (0: all but two cores)")
    return parser


def _dataset_parser(options):
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=options["seed"])
    parser.add_argument("--length", type=int, default=options["length"])
    parser.add_argument("--instances-per-group", dest="instances_per_group", type=int, default=options["instances_per_group"])
    parser.add_argument("--lengthscale", type=float, default=options["lengthscale"])
    parser.add_argument("--ell-anomaly", dest="ell_anomaly", type=float, default=options["ell_anomaly"])
    parser.add_argument("--ac-sigma-fraction", dest="ac_sigma_fraction", type=float, default=options["ac_sigma_fraction"])
    return parser


def build_parser(options, base_parser):
    parser = ArgumentParser(prog="mdi", description="Maximally divergent interval detection", parents=[base_parser])
    parser.add_argument("-v", "--verbose", action="store_true", default=options["verbose"])
    commands = parser.add_subparsers(dest="command", required=True)
    method = _method_parser(options)
    dataset = _dataset_parser(options)

    detect = commands.add_parser("detect", parents=[method], help="Find maximally divergent intervals")
    source = detect.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="CSV file with a header row and numeric columns")
    source.add_argument("--dataset", help="Dataset JSON written by 'generate'")
    detect.add_argument("--groups", help="Comma-separated dataset groups to run (default: all)")
    detect.add_argument("--out", help="Detections JSON (default: stdout)")
    detect.add_argument("--trace", help="Write per-step scores as two-column text")

    generate = commands.add_parser("generate", parents=[dataset], help="Write the synthetic benchmark dataset")
    generate.add_argument("--out", required=True)

    evaluate = commands.add_parser("evaluate", help="AP and AUC of detections against a dataset")
    evaluate.add_argument("--dataset", required=True)
    evaluate.add_argument("--detections", required=True)
    evaluate.add_argument("--iou", type=float, default=options["iou"], help="IoU a detection must exceed to count")
    evaluate.add_argument("--out", required=True)
    evaluate.add_argument("--pr-curve", dest="pr_curve", help="Recall-precision text (default: next to --out)")

    bench = commands.add_parser("bench", parents=[method], help="Time the scans over series lengths")
    bench.add_argument("--sizes", help="Comma-separated series lengths")
    bench.add_argument("--seed", type=int, default=options["seed"])

    table = commands.add_parser("table", parents=[method, dataset], help="AP/AUC of all method variants on the benchmark")
    table.add_argument("--iou", type=float, default=options["iou"])
    table.add_argument("--out", help="Also write the tables as JSON")
    return parser


def parse_options(argv=None):
    # --config is read first so the files can change the defaults of every other flag
    base_parser = argparse.ArgumentParser(add_help=False)
    base_parser.add_argument("--config", type=str, help="Path to one or more configuration files (semicolon-delimited)")
    base_args, remaining_args = base_parser.parse_known_args(argv)

    options = load_settings()
    if base_args.config:
        options.update(load_config_files(base_args.config))

    args = vars(build_parser(options, base_parser).parse_args(remaining_args))
    options.update({k: v for k, v in args.items() if v is not None and k != "config"})
    if options.get("sizes"):
        options["bench_sizes"] = [int(s) for s in options["sizes"].split(",")]
    return options


def cmd_detect(options):
    config = RunConfig.from_options(options)
    traces = {}
    if options.get("input"):
        name = instance_name(options["input"])
        detections, scores = detect_series(read_csv(options["input"]), config, name)
        traces[name] = scores
    else:
        _, instances = read_dataset(options["dataset"])
        if options.get("groups"):
            wanted = [g.strip() for g in options["groups"].split(",")]
            unknown = set(wanted) - set(GROUP_NAMES)
            if unknown:
                raise MDIError(f"Unknown group(s): {', '.join(sorted(unknown))}")
            instances = [inst for inst in instances if inst.group in wanted]
        detections = []
        for inst, (found, scores) in zip(instances, detect_dataset(instances, config), strict=True):
            detections.extend(found)
            traces[inst.id] = scores

    text = write_detections(detections, options.get("out"))
    if options.get("trace"):
        write_point_scores(traces, options["trace"])
    if options.get("out"):
        print(f"Wrote {len(detections)} detections to {options['out']}")
    else:
        sys.stdout.write(text)


def cmd_generate(options):
    instances = generate_dataset(
        options["seed"],
        n=options["length"],
        instances_per_group=options["instances_per_group"],
        lengthscale=options["lengthscale"],
        ell_anomaly=options["ell_anomaly"],
        ac_sigma_fraction=options["ac_sigma_fraction"],
    )
    write_dataset(instances, options["seed"], options["out"])
    print(f"Wrote {len(instances)} instances (seed {options['seed']}) to {options['out']}")


def cmd_evaluate(options):
    _, instances = read_dataset(options["dataset"])
    detections = read_detections(options["detections"])
    reports = evaluate_dataset(detections, instances, options["iou"])
    write_report(reports, options["iou"], options["out"])
    out = Path(options["out"])
    pr_path = options.get("pr_curve") or out.with_name(f"{out.stem}.pr.txt")
    write_pr_curve(reports, pr_path)

    rows = [{"group": name, "AP": r.ap, "AUC": r.auc} for name, r in reports.items()]
    print(tabulate(rows, headers="keys", tablefmt=options.get("dataframe_format", "plain"), floatfmt=".3f"))


def cmd_bench(options):
    result = run_bench(options)
    print(tabulate(result, headers="keys", tablefmt=options.get("dataframe_format", "plain"), showindex=False, floatfmt=".3f"))


def cmd_table(options):
    ap_table, auc_table = run_table(options)
    dataframe_format = options.get("dataframe_format", "plain")
    print("\nAverage precision")
    print(tabulate(ap_table, headers="keys", tablefmt=dataframe_format, showindex=False, floatfmt=".2f"))
    print("\nAUC")
    print(tabulate(auc_table, headers="keys", tablefmt=dataframe_format, showindex=False, floatfmt=".2f"))
    if options.get("out"):
        write_table(ap_table, auc_table, options["out"])


COMMANDS = {
    "detect": cmd_detect,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "table": cmd_table,
}


def main(argv=None):
    options = parse_options(argv)
    logging.basicConfig(level=logging.INFO if options.get("verbose") else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[options["command"]](options)
    except NumericalError as e:
        print(f"mdi: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataFormatError, OSError) as e:
        print(f"mdi: {e}", file=sys.stderr)
        return EXIT_IO
    except (MDIError, ValueError) as e:
        print(f"mdi: {e}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
