"""Command line entry point: ``ddpce {run,fit,sample,basis}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path


from .basis import build_basis, load_basis, save_basis
from .errors import DDPCEError
from .harness import emit_report, evaluate_model, load_config, run_experiment, with_seed_override
from .regression import Scheme, assemble_design, fit, sparse_fit
from .sampling import draw_samples, load_samples, save_samples
from .surrogate import SurrogateModel, analytic_moments, save_surrogate


def _cmd_run(args):
    config = load_config(args.config)
    if args.seed_override is not None:
        config = with_seed_override(config, args.seed_override)
    if args.stability_threshold is not None:
        config = replace(config, stability_threshold=args.stability_threshold)
    out = args.out or config.out
    report = run_experiment(config)
    emit_report(report, out)
    print(Path(out, "table.csv").read_text(encoding="utf-8"), end="")
    return 0


def _cmd_sample(args):
    config = load_config(args.config)
    m = args.m or config.m_train
    seed = config.seed_train if args.seed_override is None else args.seed_override
    s = draw_samples(config.inputs, m, seed)
    if args.with_response:
        s = s.with_responses(evaluate_model(config, s.x))
    save_samples(s, args.out)
    return 0


def _cmd_basis(args):
    s = load_samples(args.samples)
    save_basis(build_basis(s, args.degree), args.out)
    return 0


def _cmd_fit(args):
    s = load_samples(args.samples)
    if s.y is None:
        raise DDPCEError(f"{args.samples} has no y column")
    basis = load_basis(args.basis) if args.basis else build_basis(s, args.degree)
    design = assemble_design(basis, s)
    scheme = Scheme.parse(args.scheme)
    if args.sparsity is not None or args.epsilon is not None:
        result = sparse_fit(design, s.y, scheme, args.sparsity, args.epsilon)
    else:
        result = fit(design, s.y, scheme)
    model = SurrogateModel(basis, result)
    save_surrogate(model, args.out)
    mean, var = analytic_moments(model)
    wd = result.weighted_diagnostics
    print(f"scheme={scheme} terms={basis.n_terms} active={len(result.active_set)}")
    print(f"score_lr={result.diagnostics.score_lr!r} gram_cond={result.diagnostics.gram_condition!r}")
    if wd is not None:
        print(f"score_lr_weighted={wd.score_lr!r} gram_cond_weighted={wd.gram_condition!r}")
    print(f"mean={mean!r} variance={var!r} residual_rms={result.residual_rms!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddpce", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full experiment: MC reference plus weighting sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (defaults to the config's out key)")
    p.add_argument("--seed-override", type=int)
    p.add_argument("--stability-threshold", type=float,
                   help="flag weighted scores at or above this value in curves.csv")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sample", help="draw input samples from a config's input spec")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--seed-override", type=int)
    p.add_argument("--with-response", action="store_true", help="evaluate the config's model as y")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("basis", help="build and export a basis from a sample CSV")
    p.add_argument("--samples", required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_basis)

    p = sub.add_parser("fit", help="fit a surrogate to a sample CSV with a y column")
    p.add_argument("--samples", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--degree", type=int)
    group.add_argument("--basis", help="basis file written by the basis subcommand")
    p.add_argument("--scheme", default="ols", help="ols, cls or tempered(ALPHA)")
    p.add_argument("--sparsity", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DDPCEError, OSError) as exc:
        print("error: " + json.dumps({"type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
