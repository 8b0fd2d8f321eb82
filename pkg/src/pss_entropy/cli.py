"""Command-line interface: ``pss-entropy <command> ...``.

Exit codes: 0 success, 2 input or parse error, 3 degenerate data, 4 bad
configuration.
"""

import argparse
import math
import sys

import numpy as np

from . import bench, modelsel, pss
from .errors import ConfigError, InvalidInputError, PssError


def _g(v):
    return "%.17g" % v


def parse_cols(text, n_cols):
    """``"a..b"`` (inclusive) or ``"a,b,c"``, 0-based column indices."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            cols = list(range(int(a), int(b) + 1))
        else:
            cols = [int(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise ConfigError(f"bad column selection {text!r}") from None
    if not cols or min(cols) < 0 or max(cols) >= n_cols:
        raise ConfigError(f"column selection {text!r} is outside 0..{n_cols - 1}")
    return cols


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _load(args):
    return bench.load_table(args.input, args.header, args.delimiter).data


def cmd_entropy(args):
    est = pss.estimate_entropy(_load(args), args.ell)
    print(f"entropy\t{_g(est.value)}")
    print(f"skipped_rows\t{est.n_skipped}")


def cmd_mi(args):
    x = _load(args)
    xc = parse_cols(args.x_cols, x.shape[1])
    yc = parse_cols(args.y_cols, x.shape[1])
    print(f"mi\t{_g(pss.mutual_information(x[:, xc], x[:, yc], args.ell))}")


def cmd_tc(args):
    if (args.ell is None) == (not args.cv):
        raise ConfigError("give exactly one of --ell or --cv")
    rep = bench.tc_report(_load(args), ell=args.ell, cv=args.cv, folds=args.folds,
                          seed=args.seed, whiten_first=args.whiten, knn_k=args.knn_k)
    print(f"tc\t{_g(rep.tc)}")
    print(f"ell\t{rep.ell}")
    print(f"policy\t{rep.policy}")
    print(f"whitened\t{str(rep.whitened).lower()}")
    print(f"joint_entropy\t{_g(rep.joint_entropy)}")
    print(f"marginal_entropy_sum\t{_g(math.fsum(rep.marginal_entropies))}")
    for name, v in rep.knn_tc.items():
        print(f"{name}_tc\t{_g(v)}")
    print(f"seconds\t{rep.seconds:.6f}")
    print(f"nonnegative\t{str(rep.nonnegative).lower()}")


def cmd_cv(args):
    if args.ell_min < 1 or args.ell_max < args.ell_min:
        raise ConfigError("need 1 <= ell-min <= ell-max")
    res = modelsel.cv_select_ell(_load(args), range(args.ell_min, args.ell_max + 1),
                                 args.folds, args.seed, score=args.score)
    print("ell,loss,undefined_fraction")
    for ell in sorted(res.undefined_fraction):
        loss = res.losses.get(ell, math.nan)
        print(f"{ell},{_g(loss) if ell in res.losses else 'infeasible'},"
              f"{_g(res.undefined_fraction[ell])}")
    print(f"ell_star\t{res.ell_star}")


def cmd_select(args):
    x = _load(args)
    if not 0 <= args.label_col < x.shape[1]:
        raise ConfigError(f"label column {args.label_col} is outside 0..{x.shape[1] - 1}")
    labels = x[:, args.label_col]
    if args.median_split:
        labels = (labels > np.median(labels)).astype(int)
    feats = np.delete(x, args.label_col, axis=1)
    names = [j for j in range(x.shape[1]) if j != args.label_col]
    tr = modelsel.greedy_forward_select(feats, labels, args.ell, args.steps)
    print("step,feature,mi")
    for step, (j, mi) in enumerate(zip(tr.selected, tr.mi), start=1):
        print(f"{step},{names[j]},{_g(mi)}")


def cmd_bench(args):
    cfg = bench.BenchConfig(
        family=args.family, dims=_int_list(args.dims), ns=_int_list(args.ns),
        rhos=_float_list(args.rhos), shape=args.shape, scale=args.scale,
        estimators=[e.strip() for e in args.estimators.split(",") if e.strip()],
        policy=args.policy, ells=_int_list(args.ells) if args.ells else None,
        ks=_int_list(args.ks) if args.ks else None, trials=args.trials, seed=args.seed,
        knn_method=args.knn_method, workers=args.workers,
    )
    rep = bench.run_benchmark(cfg)
    text = bench.report_csv(rep) if args.format == "csv" else bench.report_json(rep) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_density(args):
    model = pss.fit(_load(args), args.ell)
    pts = bench.load_table(args.points, args.header, args.delimiter).data
    if pts.shape[1] != model.dims:
        raise InvalidInputError(f"points have {pts.shape[1]} columns, data has {model.dims}")
    logf, status = pss.evaluate(model, pts)
    for v, s in zip(logf, status):
        if s == pss.OK:
            print(_g(v))
        elif s == pss.OUT_OF_RANGE:
            print("out-of-range")
        else:
            print("undefined")


def build_parser():
    p = argparse.ArgumentParser(prog="pss-entropy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_input(sp):
        sp.add_argument("--input", required=True, help="CSV file of numeric rows")
        sp.add_argument("--header", action="store_true", help="first row holds column names")
        sp.add_argument("--delimiter", default=",")
        return sp

    sp = with_input(sub.add_parser("entropy", help="joint PSS entropy in nats"))
    sp.add_argument("--ell", type=int, required=True)
    sp.set_defaults(func=cmd_entropy)

    sp = with_input(sub.add_parser("mi", help="PSS mutual information between column groups"))
    sp.add_argument("--x-cols", required=True, help="'a..b' or 'a,b,c' (0-based)")
    sp.add_argument("--y-cols", required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.set_defaults(func=cmd_mi)

    sp = with_input(sub.add_parser("tc", help="total correlation report"))
    sp.add_argument("--whiten", action="store_true")
    sp.add_argument("--ell", type=int)
    sp.add_argument("--cv", action="store_true", help="choose ell by cross-validation")
    sp.add_argument("--folds", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--knn-k", type=int, help="also report KL and KSG TC at this k")
    sp.set_defaults(func=cmd_tc)

    sp = with_input(sub.add_parser("cv", help="cross-validated loss table over ell"))
    sp.add_argument("--ell-min", type=int, default=1)
    sp.add_argument("--ell-max", type=int, required=True)
    sp.add_argument("--folds", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--score", choices=modelsel.SCORES, default="mixture")
    sp.set_defaults(func=cmd_cv)

    sp = with_input(sub.add_parser("select", help="greedy forward feature selection"))
    sp.add_argument("--label-col", type=int, required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--median-split", action="store_true",
                    help="binarise a continuous label at its median")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("bench", help="seeded RMSE/runtime sweep")
    sp.add_argument("--family", choices=["normal", "gamma"], default="normal")
    sp.add_argument("--dims", required=True)
    sp.add_argument("--ns", required=True)
    sp.add_argument("--rhos", default="0")
    sp.add_argument("--shape", type=float, default=0.4)
    sp.add_argument("--scale", type=float, default=0.3)
    sp.add_argument("--estimators", default="pss,kl,ksg")
    sp.add_argument("--policy", choices=bench.POLICIES, default="oracle")
    sp.add_argument("--ells", help="oracle grid for ell, e.g. 1,2,3")
    sp.add_argument("--ks", help="oracle grid for k")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--knn-method", choices=["tree", "brute"], default="tree")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)

    sp = with_input(sub.add_parser("density", help="log-density at query points"))
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--points", required=True, help="CSV of query points (same header rule)")
    sp.set_defaults(func=cmd_density)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except PssError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InvalidInputError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
