"""Command-line interface: train | bounds | verify | report.

Exit codes: 0 on success, 1 on usage or input errors, 2 when a verification
run observes a bound violation.  Every run with a fixed seed is
deterministic; output JSON is pretty-printed with sorted keys, and the only
nondeterministic field anywhere is the manifest timestamp.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bounds import BoundConfig, beta_grid, bound_report
from .linalg import derive_seed
from .network import (
    SchemaError,
    apply_perturbation,
    batch_scores,
    load_dataset,
    load_weights,
    margin_loss,
    margins,
    rebalance,
    save_dataset,
    save_weights,
)
from .pacbayes import (
    PACBAYES_REPORT_SCHEMA_VERSION,
    lemma2_check,
    mc_pacbayes,
    recursion_check,
    sample_perturbation,
    spectral_tail_check,
    theorem_sigma,
)
from .trainer import (
    TaskSpec,
    TrainConfig,
    TrainingDivergedError,
    average_loss,
    generate_dataset,
    train_sgd,
)

__all__ = ["main", "build_parser", "CliError"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2

TASK_KINDS = {"blobs": "gaussian_blobs", "random-labels": "random_labels"}
LOSS_NAMES = {"cross-entropy": "cross_entropy", "hinge": "multiclass_hinge"}
MARGIN_PERCENTILES = (10, 25, 50, 75, 90)


class CliError(Exception):
    """Usage or input problem; rendered to stderr and mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _add_common(p, out_help):
    p.add_argument("--seed", type=int, default=0, help="master seed; every stream derives from it")
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker-count hint (falls back to SPECMARGIN_THREADS); all work is "
        "order-independent and currently runs serially, so results never depend on it",
    )
    p.add_argument("--out", default=None, help=out_help)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="specmargin",
        description="Compute and verify norm-based generalization bounds for small ReLU networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("train", help="synthesize a dataset and train a network on it")
    p.add_argument("--task", choices=sorted(TASK_KINDS), required=True)
    p.add_argument("--n", type=int, required=True, help="input dimension")
    p.add_argument("--k", type=int, required=True, help="number of classes")
    p.add_argument("--m", type=int, required=True, help="sample count")
    p.add_argument("--separation", type=float, default=5.0, help="minimum cluster-center distance")
    p.add_argument("--arch", required=True, help="comma-separated layer sizes, e.g. 2,16,16,2")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--loss", choices=sorted(LOSS_NAMES), default="cross-entropy")
    p.add_argument("--init-scale", type=float, default=1.0)
    _add_common(p, "output directory (default: current directory)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bounds", help="compute all bounds for a weight/dataset pair")
    p.add_argument("--weights", required=True)
    p.add_argument("--dataset", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--gamma", type=float, help="margin at which to evaluate the bounds")
    g.add_argument(
        "--gamma-percentile",
        type=float,
        help="set gamma to this percentile (0-100) of the positive margins",
    )
    p.add_argument("--delta", type=float, default=0.05, help="failure probability")
    p.add_argument("--mode", choices=["capacity", "traceable"], default="capacity")
    p.add_argument("--format", choices=["json", "text"], default="json")
    _add_common(p, "output file (default: stdout)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="run the perturbation-inequality checks")
    p.add_argument("--weights", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--trials", type=int, default=200, help="perturbation trials")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sigma", type=float, help="perturbation scale")
    g.add_argument(
        "--proof-sigma",
        action="store_true",
        help="use the scale the bound derivation prescribes for this network and gamma",
    )
    g2 = p.add_mutually_exclusive_group(required=True)
    g2.add_argument("--gamma", type=float)
    g2.add_argument("--gamma-percentile", type=float)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--tail-trials", type=int, default=1000)
    p.add_argument("--mc-trials", type=int, default=200)
    p.add_argument(
        "--recursion-inputs",
        type=int,
        default=1,
        help="how many worst-case inputs get the per-layer recursion check per trial",
    )
    _add_common(p, "output file for the JSON report (default: stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="compare one or more bound reports side by side")
    p.add_argument("reports", nargs="+", help="bound report JSON files")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    _add_common(p, "output file (default: stdout)")
    p.set_defaults(func=cmd_report)
    return parser


# ---------------------------------------------------------------------------
# Shared plumbing.

def _resolve_threads(args) -> int:
    t = getattr(args, "threads", None)
    if t is None:
        env = os.environ.get("SPECMARGIN_THREADS")
        if env is None:
            return 1
        try:
            t = int(env)
        except ValueError:
            raise CliError(f"SPECMARGIN_THREADS must be an integer, got {env!r}")
    if t < 1:
        raise CliError(f"threads must be at least 1, got {t}")
    return t


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest(args, threads: int, input_paths) -> dict:
    flags = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "command"):
            continue
        flags[key.replace("_", "-")] = value
    return {
        "command": args.command,
        "flags": flags,
        "threads": threads,
        "inputs": {path: _sha256(path) for path in input_paths},
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _sanitize(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats to null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _dump_json(doc) -> str:
    return json.dumps(_sanitize(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_pair(args):
    try:
        net = load_weights(args.weights)
    except FileNotFoundError:
        raise CliError(f"weights file not found: {args.weights}")
    try:
        data = load_dataset(args.dataset)
    except FileNotFoundError:
        raise CliError(f"dataset file not found: {args.dataset}")
    if data.input_dim != net.input_dim or data.num_classes != net.output_dim:
        raise CliError(
            f"weights expect input dim {net.input_dim} and {net.output_dim} classes; "
            f"dataset has input dim {data.input_dim} and {data.num_classes} classes"
        )
    return net, data


def _resolve_gamma(args, net, data):
    """Explicit --gamma, or a percentile of the positive margins."""
    if args.gamma is not None:
        if not (args.gamma > 0 and math.isfinite(args.gamma)):
            raise CliError(f"--gamma must be positive and finite, got {args.gamma}")
        return args.gamma, {"source": "flag"}
    p = args.gamma_percentile
    if not 0 <= p <= 100:
        raise CliError(f"--gamma-percentile must lie in [0, 100], got {p}")
    all_margins = margins(net, data)
    positive = all_margins[all_margins > 0]
    if positive.size == 0:
        raise CliError(
            "no sample has a positive margin, so --gamma-percentile cannot produce "
            "a valid gamma; pass an explicit --gamma"
        )
    gamma = float(np.percentile(positive, p))
    if gamma <= 0:
        raise CliError(
            f"percentile {p} of the positive margins resolves to {gamma}; "
            "try a higher percentile or an explicit --gamma"
        )
    return gamma, {"source": "percentile", "percentile": p}


# ---------------------------------------------------------------------------
# Subcommands.

def cmd_train(args) -> int:
    threads = _resolve_threads(args)
    try:
        arch = tuple(int(s) for s in args.arch.split(","))
    except ValueError:
        raise CliError(f"--arch must be comma-separated integers, got {args.arch!r}")
    if len(arch) < 2:
        raise CliError(f"--arch needs at least two sizes, got {args.arch!r}")
    if arch[0] != args.n or arch[-1] != args.k:
        raise CliError(
            f"--arch must start with --n and end with --k: got {args.arch!r} "
            f"with n={args.n}, k={args.k}"
        )
    spec = TaskSpec(
        kind=TASK_KINDS[args.task],
        n=args.n,
        k=args.k,
        m=args.m,
        separation=args.separation,
        seed=args.seed,
    )
    cfg = TrainConfig(
        architecture=arch,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        loss=LOSS_NAMES[args.loss],
        init_scale=args.init_scale,
        seed=args.seed,
    )
    data = generate_dataset(spec)
    net = train_sgd(data, cfg)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    weights_path = os.path.join(out_dir, "weights.json")
    dataset_path = os.path.join(out_dir, "dataset.json")
    save_weights(net, weights_path)
    save_dataset(data, dataset_path)
    loss0 = margin_loss(net, data, 0.0)
    marg = margins(net, data)
    percentiles = {f"p{p}": float(np.percentile(marg, p)) for p in MARGIN_PERCENTILES}
    meta = {
        "schema": "train_meta_v1",
        "task": asdict(spec),
        "train": asdict(cfg),
        "final": {
            "zero_margin_loss": loss0,
            "mean_train_loss": average_loss(net, data, cfg.loss),
            "margin_percentiles": percentiles,
        },
        "outputs": {
            "weights": {"path": weights_path, "sha256": _sha256(weights_path)},
            "dataset": {"path": dataset_path, "sha256": _sha256(dataset_path)},
        },
        "manifest": _manifest(args, threads, []),
    }
    _emit(_dump_json(meta), os.path.join(out_dir, "train_meta.json"))
    print(f"wrote {weights_path}, {dataset_path}, {os.path.join(out_dir, 'train_meta.json')}")
    print(f"zero-margin loss: {loss0:.6f}")
    print("margin percentiles: " + "  ".join(f"{k}={v:.6f}" for k, v in percentiles.items()))
    return EXIT_OK


def _bounds_text(report: dict) -> str:
    b = report["bounds"]
    lines = [
        f"gamma: {report['config']['gamma']:.6g}   mode: {report['config']['mode']}   "
        f"m: {report['config']['m']}",
        f"margin loss at gamma: {report['margins']['loss_at_gamma']:.6g}   "
        f"at zero: {report['margins']['loss_at_zero']:.6g}",
        f"theorem1:     {b['theorem1']:.6g}",
        f"bartlett_l1:  {b['bartlett_l1']:.6g}",
        f"bartlett_l21: {b['bartlett_l21']:.6g}",
        f"vc:           {b['vc']:.6g}",
        f"regime: {report['regime']['label']} "
        f"(comp_our={report['regime']['comp_our']:.6g}, comp_bar={report['regime']['comp_bar']:.6g})",
        f"vc-condition ratios: r_our={report['vc_conditions']['r_our']:.6g}, "
        f"r_bar={report['vc_conditions']['r_bar']:.6g}",
    ]
    return "\n".join(lines) + "\n"


def cmd_bounds(args) -> int:
    threads = _resolve_threads(args)
    net, data = _load_pair(args)
    gamma, gamma_detail = _resolve_gamma(args, net, data)
    if not 0 < args.delta < 1:
        raise CliError(f"--delta must lie in (0, 1), got {args.delta}")
    cfg = BoundConfig(gamma=gamma, delta=args.delta, m=data.size, mode=args.mode)
    report = bound_report(
        net,
        data,
        cfg,
        provenance={"weights": args.weights, "dataset": args.dataset, "gamma": gamma_detail},
    )
    report["manifest"] = _manifest(args, threads, [args.weights, args.dataset])
    if args.format == "json":
        _emit(_dump_json(report), args.out)
    else:
        _emit(_bounds_text(report), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    threads = _resolve_threads(args)
    net, data = _load_pair(args)
    if args.trials < 1:
        raise CliError(f"--trials must be positive, got {args.trials}")
    if args.recursion_inputs < 0:
        raise CliError(f"--recursion-inputs must be nonnegative, got {args.recursion_inputs}")
    if not 0 < args.delta < 1:
        raise CliError(f"--delta must lie in (0, 1), got {args.delta}")
    gamma, gamma_detail = _resolve_gamma(args, net, data)
    if args.proof_sigma:
        _, beta = rebalance(net)
        grid = beta_grid(gamma, data.radius, data.size, net.depth)
        beta_tilde = grid.nearest(beta)
        sigma = theorem_sigma(gamma, data.radius, net.depth, net.width, beta_tilde)
        sigma_detail = {
            "source": "proof",
            "beta": beta,
            "beta_tilde": beta_tilde,
            "cover_size": grid.size,
        }
    else:
        sigma = args.sigma
        if sigma < 0:
            raise CliError(f"--sigma must be nonnegative, got {sigma}")
        sigma_detail = {"source": "given"}

    base_scores = batch_scores(net, data.inputs)
    trial_docs = []
    recursion_docs = []
    lemma2_failures = 0
    step_failures = 0
    closed_failures = 0
    clipped_trials = 0
    for t in range(args.trials):
        pert, factors = sample_perturbation(net, sigma, derive_seed(args.seed, 0, t), "clipped")
        if any(f != 1.0 for f in factors):
            clipped_trials += 1
        trial = lemma2_check(net, pert, data, sigma)
        if not trial.holds:
            lemma2_failures += 1
        trial_docs.append(trial.to_dict())
        if args.recursion_inputs > 0:
            diff = batch_scores(apply_perturbation(net, pert), data.inputs) - base_scores
            worst = np.argsort(np.sum(diff * diff, axis=1))[::-1][: args.recursion_inputs]
            for idx in worst:
                steps = recursion_check(net, pert, data.inputs[int(idx)])
                step_failures += sum(1 for s in steps if not s.step_holds)
                closed_failures += sum(1 for s in steps if not s.closed_holds)
                recursion_docs.append(
                    {"trial": t, "input_index": int(idx), "steps": [s.to_dict() for s in steps]}
                )

    if sigma > 0:
        if args.tail_trials < 100:
            raise CliError(f"--tail-trials must be at least 100, got {args.tail_trials}")
        scale = sigma * math.sqrt(net.width)
        t_grid = np.linspace(0.5 * scale, 4.0 * scale, 10)
        points = spectral_tail_check(
            net.width, sigma, t_grid, args.tail_trials, derive_seed(args.seed, 1)
        )
        tail_doc = {
            "trials": args.tail_trials,
            "points": [p.to_dict() for p in points],
            "all_ok": all(p.ok for p in points),
        }
    else:
        tail_doc = None

    estimate = mc_pacbayes(
        net, data, gamma, sigma, args.mc_trials, derive_seed(args.seed, 2), args.delta
    )

    failures = lemma2_failures + step_failures + closed_failures
    report = {
        "schema": PACBAYES_REPORT_SCHEMA_VERSION,
        "config": {
            "weights": args.weights,
            "dataset": args.dataset,
            "trials": args.trials,
            "gamma": gamma,
            "gamma_detail": gamma_detail,
            "delta": args.delta,
            "seed": args.seed,
            "recursion_inputs": args.recursion_inputs,
            "mc_trials": args.mc_trials,
            "survival_note": "output-change maxima are taken over the dataset, "
            "a stated proxy for the whole radius-B domain",
        },
        "sigma": sigma,
        "sigma_detail": sigma_detail,
        "lemma2": {
            "trials": args.trials,
            "clipped_trials": clipped_trials,
            "failures": lemma2_failures,
            "all_hold": lemma2_failures == 0,
            "per_trial": trial_docs,
        },
        "recursion": {
            "checks": len(recursion_docs),
            "step_failures": step_failures,
            "closed_failures": closed_failures,
            "all_hold": step_failures == 0 and closed_failures == 0,
            "per_check": recursion_docs,
        },
        "tail": tail_doc,
        "mc": estimate.to_dict(),
        "manifest": _manifest(args, threads, [args.weights, args.dataset]),
    }
    _emit(_dump_json(report), args.out)
    if args.out is not None:
        print(
            f"lemma2: {args.trials - lemma2_failures}/{args.trials} trials hold "
            f"({clipped_trials} needed clipping)"
        )
        print(
            f"recursion: {len(recursion_docs)} checks, {step_failures} step and "
            f"{closed_failures} closed-form failures"
        )
        if tail_doc is not None:
            ok = sum(1 for p in tail_doc["points"] if p["ok"])
            print(f"tail: {ok}/{len(tail_doc['points'])} thresholds within slack")
        print(
            f"survival: {estimate.survival:.4f} "
            f"({'>= 1/2' if estimate.survival_ok else 'BELOW 1/2'})"
        )
    return EXIT_VERIFY if failures else EXIT_OK


_ROW_FIELDS = (
    "report",
    "mode",
    "gamma",
    "margin_loss",
    "theorem1",
    "bartlett_l1",
    "bartlett_l21",
    "vc",
    "comp_our",
    "comp_bar",
    "regime",
    "r_our",
    "r_bar",
    "vc_verdict_ours",
    "vc_verdict_l1",
)


def _report_row(path: str, doc: dict) -> dict:
    try:
        r_our = doc["vc_conditions"]["r_our"]
        r_bar = doc["vc_conditions"]["r_bar"]
        return {
            "report": path,
            "mode": doc["config"]["mode"],
            "gamma": doc["config"]["gamma"],
            "margin_loss": doc["margins"]["loss_at_gamma"],
            "theorem1": doc["bounds"]["theorem1"],
            "bartlett_l1": doc["bounds"]["bartlett_l1"],
            "bartlett_l21": doc["bounds"]["bartlett_l21"],
            "vc": doc["bounds"]["vc"],
            "comp_our": doc["regime"]["comp_our"],
            "comp_bar": doc["regime"]["comp_bar"],
            "regime": doc["regime"]["label"],
            "r_our": r_our,
            "r_bar": r_bar,
            "vc_verdict_ours": "improves" if (r_our is not None and r_our < 1) else "no-improvement",
            "vc_verdict_l1": "improves" if (r_bar is not None and r_bar < 1) else "no-improvement",
        }
    except (KeyError, TypeError) as e:
        raise CliError(f"{path}: not a complete bound report (missing {e})")


def _rows_text(rows) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    table = [list(_ROW_FIELDS)] + [[fmt(row[f]) for f in _ROW_FIELDS] for row in rows]
    widths = [max(len(line[i]) for line in table) for i in range(len(_ROW_FIELDS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in table]
    return "\n".join(lines) + "\n"


def _rows_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_ROW_FIELDS)
    for row in rows:
        rendered = []
        for f in _ROW_FIELDS:
            v = row[f]
            if isinstance(v, float):
                rendered.append(repr(v))
            elif v is None:
                rendered.append("")
            else:
                rendered.append(str(v))
        writer.writerow(rendered)
    return buf.getvalue()


def cmd_report(args) -> int:
    threads = _resolve_threads(args)
    rows = []
    for path in args.reports:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise CliError(f"report file not found: {path}")
        except json.JSONDecodeError as e:
            raise CliError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
        if not isinstance(doc, dict) or "schema" not in doc:
            raise CliError(f"{path}: not a bound report (no schema field)")
        if doc["schema"] != "bound_report_v1":
            raise CliError(
                f"{path}: schema version {doc['schema']!r} is not supported; "
                f"this tool reads 'bound_report_v1'"
            )
        rows.append(_report_row(path, doc))
    if args.format == "json":
        doc = {
            "schema": "bound_comparison_v1",
            "rows": rows,
            "manifest": _manifest(args, threads, args.reports),
        }
        _emit(_dump_json(doc), args.out)
    elif args.format == "csv":
        _emit(_rows_csv(rows), args.out)
    else:
        _emit(_rows_text(rows), args.out)
    if args.out is not None and args.format in ("csv", "text"):
        # Tables cannot embed their manifest, so it rides alongside.
        _emit(_dump_json(_manifest(args, threads, args.reports)), args.out + ".manifest.json")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDivergedError as e:
        print(f"error: training diverged: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
