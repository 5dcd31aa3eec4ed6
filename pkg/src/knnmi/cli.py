"""Command-line interface: estimate-entropy, estimate-mi, estimate-mmi, experiment.

Exit codes: 0 success, 1 data or estimation error, 2 usage error.  Output is
canonical JSON (schema_version 1, floats at 17 significant digits) on stdout
or at --out.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import jsonio
from .dataset import Dataset, DegeneracyPolicy, DuplicateSampleError, IngestionError, \
    check_duplicates, load_csv
from .entropy import EntropyConfig, estimate_entropy
from .experiments import ExperimentSpec, run_experiment
from .knn import Norm
from .mi import MiMethod, estimate_mi
from .mmi import BalancedSetFunction, mmi_biksg, mmi_general, mmi_ksg, mmi_l_plus_1_kl


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knnmi",
                                     description="fixed-k nearest-neighbor information estimators")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_groups):
        p.add_argument("--input", required=True, help="CSV file of samples")
        p.add_argument("--header", action="store_true", help="skip a single header line")
        if with_groups == "mi":
            p.add_argument("--dx", type=int, help="columns in X")
            p.add_argument("--dy", type=int, help="columns in Y")
            p.add_argument("--groups", help='alternative grouping, e.g. "1,1"')
        elif with_groups == "mmi":
            p.add_argument("--groups", required=True, help='column group sizes, e.g. "1,1,1"')
        p.add_argument("--k", type=int, default=4)
        p.add_argument("--truncate", action="store_true")
        p.add_argument("--delta", type=float, default=0.5)
        p.add_argument("--jitter", type=float, default=None, metavar="SCALE",
                       help="perturb every entry by uniform noise in [-SCALE, SCALE]")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p_ent = sub.add_parser("estimate-entropy", help="differential entropy of all columns")
    add_common(p_ent, None)
    p_ent.add_argument("--norm", choices=["l2", "linf"], default="linf")

    p_mi = sub.add_parser("estimate-mi", help="mutual information between X and Y columns")
    add_common(p_mi, "mi")
    p_mi.add_argument("--method", choices=["3kl", "ksg", "biksg"], default="ksg")
    p_mi.add_argument("--norm", choices=["l2", "linf"], default=None,
                      help="3kl only; ksg is l_inf and biksg is l2 by definition")
    p_mi.add_argument("--boundary", choices=["strict", "inclusive"], default="strict",
                      help="marginal count convention at the shared radius")

    p_mmi = sub.add_parser("estimate-mmi", help="multivariate MI across column groups")
    add_common(p_mmi, "mmi")
    p_mmi.add_argument("--method", choices=["3kl", "ksg", "biksg", "general"], default="ksg")
    p_mmi.add_argument("--norm", choices=["l2", "linf"], default=None)
    p_mmi.add_argument("--boundary", choices=["strict", "inclusive"], default="strict")
    p_mmi.add_argument("--psi-offset", type=int, choices=[0, 1], default=1,
                       help="offset inside psi(count + offset) for the ksg family")
    p_mmi.add_argument("--set-function", default=None, metavar="JSON",
                       help='general method: file with [{"groups": [0, 2], "coeff": "1"}, ...]')

    p_exp = sub.add_parser("experiment", help="run a JSON experiment spec")
    p_exp.add_argument("--spec", required=True)
    p_exp.add_argument("--seed", type=int, default=None,
                       help="master seed (overrides the spec file)")
    p_exp.add_argument("--threads", type=int, default=1)
    p_exp.add_argument("--out", default=None)
    p_exp.add_argument("--csv", default=None, help="also write tidy CSV here")
    p_exp.add_argument("--scatter-csv", default=None,
                       help="correlation experiments: write local-bias pairs here")
    return parser


def _parse_groups(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --groups value {text!r}: {exc}") from exc
    if not dims or any(g < 1 for g in dims):
        raise UsageError(f"bad --groups value {text!r}: dims must be positive")
    return dims


def _load_dataset(args, group_dims) -> Dataset:
    ds = load_csv(args.input, group_dims, has_header=args.header)
    if args.jitter is not None:
        if args.seed is None:
            raise UsageError("--jitter requires --seed")
        ds = check_duplicates(ds, DegeneracyPolicy("jitter", args.jitter), seed=args.seed)
    return ds


def _emit(doc: dict, out_path) -> None:
    text = jsonio.dumps(doc)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_entropy(args) -> dict:
    import csv as _csv
    with open(args.input, newline="", encoding="utf-8") as fh:
        first = next(_csv.reader(fh), None)
    if first is None:
        raise IngestionError(f"{args.input}: empty file")
    d = len(first)
    ds = _load_dataset(args, (d,))
    cfg = EntropyConfig(k=args.k, norm=args.norm, truncate=args.truncate, delta=args.delta)
    report = estimate_entropy(ds, cfg)
    doc = report.to_dict()
    doc.update(schema_version=1, command="estimate-entropy")
    return doc


def _mi_group_dims(args) -> tuple[int, ...]:
    if args.groups:
        dims = _parse_groups(args.groups)
        if len(dims) != 2:
            raise UsageError("estimate-mi needs exactly two groups")
        return dims
    if args.dx is None or args.dy is None:
        raise UsageError("estimate-mi requires --dx and --dy (or --groups)")
    if args.dx < 1 or args.dy < 1:
        raise UsageError("--dx and --dy must be positive")
    return (args.dx, args.dy)


def _cmd_mi(args) -> dict:
    try:
        method = MiMethod(args.method, truncate=args.truncate, delta=args.delta,
                          norm=args.norm)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ds = _load_dataset(args, _mi_group_dims(args))
    report = estimate_mi(ds, method, args.k, boundary=args.boundary)
    doc = report.to_dict()
    doc.update(schema_version=1, command="estimate-mi")
    return doc


def _cmd_mmi(args) -> dict:
    dims = _parse_groups(args.groups)
    ds = _load_dataset(args, dims)
    if args.truncate:
        raise UsageError("--truncate is not available for estimate-mmi")
    if args.method == "general":
        if not args.set_function:
            raise UsageError("--method general requires --set-function")
        with open(args.set_function, encoding="utf-8") as fh:
            entries = json.load(fh)
        f = BalancedSetFunction.from_config(entries)
        report = mmi_general(ds, f, args.k, boundary=args.boundary,
                             psi_offset=args.psi_offset)
    elif args.method == "3kl":
        norm = args.norm or "linf"
        report = mmi_l_plus_1_kl(ds, args.k, norm=norm)
    elif args.method == "ksg":
        if args.norm == "l2":
            raise UsageError("ksg uses the l_inf norm; --norm l2 is invalid")
        report = mmi_ksg(ds, args.k, boundary=args.boundary, psi_offset=args.psi_offset)
    else:
        if args.norm == "linf":
            raise UsageError("biksg uses the l2 norm; --norm linf is invalid")
        report = mmi_biksg(ds, args.k)
    doc = report.to_dict()
    doc.update(schema_version=1, command="estimate-mmi")
    return doc


def _cmd_experiment(args) -> dict:
    with open(args.spec, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if cfg.get("master_seed") is None:
        raise UsageError("experiment requires a seed: pass --seed or set master_seed in the spec")
    spec = ExperimentSpec.from_config(cfg)
    result = run_experiment(spec, threads=max(1, args.threads))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("\n".join(result.to_csv_rows()) + "\n")
    if args.scatter_csv:
        with open(args.scatter_csv, "w", encoding="utf-8") as fh:
            fh.write("\n".join(result.scatter_csv_rows()) + "\n")
    return result.to_doc()


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        if args.command == "estimate-entropy":
            doc = _cmd_entropy(args)
        elif args.command == "estimate-mi":
            doc = _cmd_mi(args)
        elif args.command == "estimate-mmi":
            doc = _cmd_mmi(args)
        else:
            doc = _cmd_experiment(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IngestionError, DuplicateSampleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(doc, getattr(args, "out", None))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
