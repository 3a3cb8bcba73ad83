"""Command-line front end.

Subcommands:

    adapt   run one method on a bundle and write a JSON run report
    eval    score stored predictions against a labeled bundle
    synth   generate a synthetic shifted-domain bundle
    bench   run all methods on one bundle with a comparative table

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 runtime/state
error. Set PDA_LOG=DEBUG|INFO|WARNING to control diagnostics; --threads
caps the numerical thread pools (results are identical for any value).

Heavy numerical imports are deferred until after --threads is applied, so
the flag genuinely controls the BLAS pool size.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import EXIT_OK, EXIT_USAGE, PdaError, exit_code_for

log = logging.getLogger("pda.cli")

_METHODS = ("source", "pda", "pda-mcd", "mcd-direct", "upper", "onehot-proto")
_METRICS = ("cosine", "euclidean")


class _Parser(argparse.ArgumentParser):
    """argparse with the usage-error exit code pinned to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _configure_threads(argv: list[str]) -> int:
    """Apply --threads to the BLAS pools before numpy is imported."""
    threads = 0
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            candidate = argv[i + 1]
        elif arg.startswith("--threads="):
            candidate = arg.split("=", 1)[1]
        else:
            continue
        try:
            threads = int(candidate)
        except ValueError:
            return 0  # argparse will reject it with a proper usage error
    resolved = threads if threads > 0 else (os.cpu_count() or 1)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(resolved)
    return resolved


def _configure_logging() -> None:
    level_name = os.environ.get("PDA_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--metric", choices=_METRICS, default="cosine",
                   help="prototype distance measure (default: cosine)")
    p.add_argument("--h-fraction", type=float, default=0.75,
                   help="MCD subset fraction in (0.5, 1.0]")
    p.add_argument("--mcd-starts", type=int, default=10,
                   help="random starts for the randomized MCD search")
    p.add_argument("--c-steps-max", type=int, default=20)
    p.add_argument("--det-rel-tol", type=float, default=1e-9)
    p.add_argument("--exhaustive-threshold", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0,
                   help="numerical thread cap (0 = hardware concurrency)")
    p.add_argument("--uniform-priors", action="store_true",
                   help="uniform instead of pseudo-label-proportion class priors")
    p.add_argument("--onehot", action="store_true",
                   help="drop confidence weighting in pda-mcd prototype construction")
    p.add_argument("--weighted-true", action="store_true",
                   help="keep model-confidence weights in the upper-bound prototypes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pda",
                     description="Feed-forward source-free domain adaptation "
                                 "via class prototypes.")
    sub = parser.add_subparsers(dest="command", required=True)

    adapt = sub.add_parser("adapt", help="run one adaptation method on a bundle")
    adapt.add_argument("--bundle", required=True, help="bundle directory")
    adapt.add_argument("--method", required=True, choices=_METHODS)
    _add_run_options(adapt)
    adapt.add_argument("--out", help="write the JSON run report here (default: stdout)")
    adapt.add_argument("--preds-out", help="write predictions as an int64 array file")
    adapt.add_argument("--protos-out", help="dump the prototype set to this directory")
    adapt.set_defaults(func=_cmd_adapt)

    ev = sub.add_parser("eval", help="score stored predictions against bundle labels")
    ev.add_argument("--bundle", required=True)
    ev.add_argument("--preds", required=True, help="predictions array file")
    ev.add_argument("--out", help="write the JSON accuracy report here (default: stdout)")
    ev.set_defaults(func=_cmd_eval)

    synth = sub.add_parser("synth", help="generate a synthetic shifted-domain bundle")
    synth.add_argument("--spec", required=True, help="JSON shift spec")
    synth.add_argument("--out", required=True, help="bundle output directory")
    synth.set_defaults(func=_cmd_synth)

    bench = sub.add_parser("bench", help="run all methods on one bundle")
    bench.add_argument("--bundle", required=True)
    _add_run_options(bench)
    bench.add_argument("--out", help="write the JSON report array here")
    bench.set_defaults(func=_cmd_bench)
    return parser


def _pipeline_config(args, threads: int):
    from .pipeline import PipelineConfig

    return PipelineConfig(
        metric=args.metric,
        h_fraction=args.h_fraction,
        n_starts=args.mcd_starts,
        c_steps_max=args.c_steps_max,
        det_rel_tol=args.det_rel_tol,
        exhaustive_threshold=args.exhaustive_threshold,
        seed=args.seed,
        threads=threads,
        uniform_priors=args.uniform_priors,
        onehot=args.onehot,
        weighted_true=args.weighted_true,
    )


def _emit_json(payload, out_path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fp:
            fp.write(text + "\n")
    else:
        print(text)


def _cmd_adapt(args, threads: int) -> int:
    import numpy as np

    from .bundle_io import load_bundle, write_array
    from .pipeline import run_method

    bundle = load_bundle(args.bundle)
    cfg = _pipeline_config(args, threads)
    report = run_method(bundle, args.method, cfg)
    payload = report.to_dict()
    payload["config_echo"]["bundle"] = args.bundle
    _emit_json(payload, args.out)
    if args.preds_out:
        write_array(args.preds_out, report.predictions.astype(np.int64))
    if args.protos_out:
        from .pipeline import _adapt
        from .prototypes import save_prototypes

        if args.method in ("pda", "pda-mcd", "upper", "onehot-proto"):
            save_prototypes(_adapt(bundle, args.method, cfg), args.protos_out)
        else:
            log.warning("method %s builds no prototypes; --protos-out ignored", args.method)
    if report.accuracy is not None:
        log.info("method=%s accuracy=%.4f", args.method, report.accuracy)
    return EXIT_OK


def _cmd_eval(args, threads: int) -> int:
    from .bundle_io import load_bundle, read_int_array
    from .classify import accuracy_report
    from .errors import PreconditionError

    bundle = load_bundle(args.bundle)
    if bundle.labels is None:
        raise PreconditionError("eval requires a labeled bundle")
    preds = read_int_array(args.preds)
    report = accuracy_report(preds, bundle.labels, bundle.num_classes)
    _emit_json(report, args.out)
    return EXIT_OK


def _cmd_synth(args, threads: int) -> int:
    from .bundle_io import save_bundle
    from .synth import generate, load_shift_spec

    spec = load_shift_spec(args.spec)
    bundle = generate(spec)
    save_bundle(bundle, args.out)
    print(f"wrote bundle: N={bundle.num_examples} D={bundle.feature_dim} "
          f"C={bundle.num_classes} -> {args.out}")
    return EXIT_OK


def _cmd_bench(args, threads: int) -> int:
    from .bundle_io import load_bundle
    from .pipeline import run_all_methods

    bundle = load_bundle(args.bundle)
    cfg = _pipeline_config(args, threads)
    reports = run_all_methods(bundle, cfg)
    header = f"{'method':<14}{'accuracy':>10}{'adapt_s':>12}{'infer_s':>12}"
    print(header)
    print("-" * len(header))
    for r in reports:
        acc = f"{r.accuracy:.4f}" if r.accuracy is not None else "n/a"
        print(f"{r.method:<14}{acc:>10}{r.adapt_time_s:>12.4f}{r.infer_time_s:>12.4f}")
    if args.out:
        payload = []
        for r in reports:
            d = r.to_dict()
            d["config_echo"]["bundle"] = args.bundle
            payload.append(d)
        _emit_json(payload, args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    threads = _configure_threads(argv)
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, threads)
    except PdaError as exc:
        print(f"pda: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"pda: I/O error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
