"""Command-line front end.

Subcommands: build-costs, eval, calibrate, shuffle-eval, simulate.
Exit codes: 0 success, 1 internal failure, 2 input or validation error
(argparse usage errors included). The requested artifact goes to stdout
unless --out is given; diagnostics go to stderr. Every subcommand is
deterministic given identical files and flags, including --threads.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .calibration import (CalibrationReport, CONFIDENCE_SOURCES,
                          apply_temperature, bin_confidences, ece,
                          fit_temperature, mce)
from .dataio import (FormatError, calibration_report_to_json,
                     cost_matrix_to_csv, load_hierarchy, load_predictions,
                     metrics_report_to_json, save_hierarchy,
                     save_predictions)
from .metrics import DEFAULT_K_LIST, full_report
from .predictions import PredictionSet
from .riskmin import batch_apply, batch_crm_top1, build_cost_matrix
from .synth import SynthConfig, TREE_MODES, TRUTH_MODES, gen_predictions, \
    gen_taxonomy
from .taxonomy import TaxonomyError, shuffle_leaves

__all__ = ["main"]


def _k_list(text: str) -> list[int]:
    try:
        ks = [int(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list {text!r}") from None
    if not ks:
        raise argparse.ArgumentTypeError("k list is empty")
    return ks


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _default_threads() -> int:
    return os.cpu_count() or 1


def _indent_json(doc: str, pad: str) -> str:
    lines = doc.rstrip("\n").split("\n")
    return lines[0] + "\n" + "\n".join(pad + l for l in lines[1:])


def _cmd_build_costs(args) -> str:
    tax = load_hierarchy(args.hierarchy)
    return cost_matrix_to_csv(build_cost_matrix(tax))


def _cmd_eval(args) -> str:
    tax = load_hierarchy(args.hierarchy)
    preds = load_predictions(args.predictions, tax)
    report = full_report(preds, tax, args.basis, args.k, threads=args.threads)
    if args.theorem1_fastpath and args.basis == "crm":
        # The shortcut cannot speed up a full ranking (the re-rank always
        # runs), so here the flag re-derives the top-1 column through it
        # and insists on bit-identical results.
        C = build_cost_matrix(tax)
        fast = batch_crm_top1(preds, C, use_fastpath=True,
                              threads=args.threads)
        full = batch_crm_top1(preds, C, use_fastpath=False,
                              threads=args.threads)
        if not np.array_equal(fast, full):
            raise RuntimeError("fast-path top-1 diverged from the full path")
    return metrics_report_to_json(report)


def _cmd_calibrate(args) -> str:
    if args.source == "crm-selected" and args.hierarchy is None:
        raise ValueError("--hierarchy is required when --source crm-selected")
    tax = load_hierarchy(args.hierarchy) if args.hierarchy else None
    val = load_predictions(args.val_predictions, tax)
    test = load_predictions(args.predictions, tax)
    if tax is None and val.class_names != test.class_names:
        raise ValueError(
            "validation and test files disagree on class order; "
            "pass --hierarchy to align them by name"
        )
    if test.N == 0:
        raise ValueError("test prediction file has no rows")
    temperature = fit_temperature(val)
    post = PredictionSet(apply_temperature(test.probs, temperature),
                         test.truth, test.class_names)
    if args.source == "crm-selected":
        C = build_cost_matrix(tax)
        ranked_pre = batch_apply(test, C, "crm", threads=args.threads)
        ranked_post = batch_apply(post, C, "crm", threads=args.threads)
    else:
        ranked_pre = batch_apply(test, None, "likelihood")
        ranked_post = batch_apply(post, None, "likelihood")
    bins_pre = bin_confidences(test, ranked_pre, args.bins, args.source)
    bins_post = bin_confidences(post, ranked_post, args.bins, args.source)
    report = CalibrationReport(
        ece_pre=ece(bins_pre), ece_post=ece(bins_post),
        mce_pre=mce(bins_pre), mce_post=mce(bins_post),
        temperature=temperature, confidence_source=args.source,
    )
    return calibration_report_to_json(report)


def _cmd_shuffle_eval(args) -> str:
    tax = load_hierarchy(args.hierarchy)
    shuffled = shuffle_leaves(tax, args.seed)
    preds = load_predictions(args.predictions, tax)
    pick = {
        ("likelihood", "original"): (tax, "likelihood"),
        ("likelihood", "shuffled"): (shuffled, "likelihood"),
        ("crm", "original"): (tax, "crm"),
        ("crm", "shuffled"): (shuffled, "crm"),
    }
    docs = {}
    for key, (t, basis) in pick.items():
        report = full_report(preds, t, basis, args.k, threads=args.threads)
        docs[key] = _indent_json(metrics_report_to_json(report), "    ")
    return (
        "{\n"
        '  "likelihood": {\n'
        '    "original": ' + docs[("likelihood", "original")] + ",\n"
        '    "shuffled": ' + docs[("likelihood", "shuffled")] + "\n"
        "  },\n"
        '  "crm": {\n'
        '    "original": ' + docs[("crm", "original")] + ",\n"
        '    "shuffled": ' + docs[("crm", "shuffled")] + "\n"
        "  }\n"
        "}\n"
    )


def _cmd_simulate(args) -> None:
    cfg = SynthConfig(
        seed=args.seed, K=args.classes, N=args.samples,
        concentration=args.concentration, truth_mode=args.truth_mode,
        corrupt_rho=args.corrupt_rho, tree_mode=args.tree_mode,
    )
    tax = gen_taxonomy(cfg)
    preds = gen_predictions(cfg, tax)
    save_hierarchy(tax, args.out_hierarchy)
    save_predictions(preds, args.out_predictions)
    return None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hier-risk",
        description="Risk-minimizing correction and hierarchy-aware "
                    "evaluation for classifier likelihoods.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out=True, threads=False):
        if out:
            p.add_argument("--out", help="write the artifact here instead "
                                         "of stdout")
        if threads:
            p.add_argument("--threads", type=_positive_int,
                           default=_default_threads(),
                           help="worker threads for batch ranking; results "
                                "do not depend on this")

    p = sub.add_parser("build-costs",
                       help="emit the confusion-cost matrix as CSV")
    p.add_argument("--hierarchy", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_build_costs)

    p = sub.add_parser("eval", help="rank predictions and report metrics")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--basis", choices=("likelihood", "crm"), default="crm")
    p.add_argument("--k", type=_k_list, default=list(DEFAULT_K_LIST),
                   help="comma-separated list of ranking depths")
    p.add_argument("--theorem1-fastpath", action="store_true",
                   help="re-derive the top-1 column through the max-p>0.5 "
                        "shortcut and verify it changes nothing")
    add_common(p, threads=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("calibrate",
                       help="fit a temperature on a validation split and "
                            "report ECE/MCE on a test split")
    p.add_argument("--val-predictions", required=True)
    p.add_argument("--predictions", required=True,
                   help="test split the report is computed on")
    p.add_argument("--bins", type=_positive_int, default=15)
    p.add_argument("--source", choices=tuple(CONFIDENCE_SOURCES),
                   default="max-likelihood")
    p.add_argument("--hierarchy",
                   help="required for --source crm-selected; otherwise "
                        "aligns file columns by name")
    add_common(p, threads=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("shuffle-eval",
                       help="evaluate both ranking bases against the "
                            "original and a leaf-shuffled hierarchy")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=_k_list, default=list(DEFAULT_K_LIST))
    add_common(p, threads=True)
    p.set_defaults(func=_cmd_shuffle_eval)

    p = sub.add_parser("simulate",
                       help="write a synthetic hierarchy and prediction file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--classes", type=_positive_int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--truth-mode", choices=TRUTH_MODES,
                   default="self-sampled")
    p.add_argument("--corrupt-rho", type=float, default=0.0)
    p.add_argument("--tree-mode", choices=TREE_MODES, default="flat")
    p.add_argument("--out-predictions", required=True)
    p.add_argument("--out-hierarchy", required=True)
    add_common(p, out=False)
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        text = args.func(args)
        if text is not None:
            out = getattr(args, "out", None)
            if out:
                with open(out, "wb") as f:
                    f.write(text.encode("utf-8"))
            else:
                sys.stdout.write(text)
    except (TaxonomyError, FormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e!r}", file=sys.stderr)
        return 1
    return 0
