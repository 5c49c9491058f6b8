"""Command-line interface: ``rankchoice <subcommand> ...``.

Exit status is 0 on success, 1 on a domain error (bad data, infeasible or
failed computation) and 2 on a usage error.  Every random step is driven by
``--seed``.  Tables go out as CSV, single results as JSON, floats with 12
significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bench, io, models, robust, sparse
from .core import ChoiceError, PriceVector, SchemeKind, SparseChoiceModel, exact_marginals

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, out: str | None) -> None:
    _emit(json.dumps(io.round12(obj), indent=2) + "\n", out)


def _int_range(text: str) -> list[int]:
    """``"5,10,20"`` or ``"5:30:5"`` (inclusive stop)."""
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            if step < 1:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like 5,10 or a range like 5:30:5, got {text!r}") from None


def _load_model(args):
    return io.load_model(args.model, getattr(args, "n", None))


def _prices(path: str | None, n: int) -> PriceVector:
    if path is None:
        return PriceVector.unit(n)
    p = io.load_prices(path)
    if p.n != n:
        raise ChoiceError(f"price file has {p.n} entries, data has {n} products")
    return p


# -- subcommands -------------------------------------------------------------


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.family == "sparse":
        if args.k is None:
            raise UsageError("--family sparse needs --k")
        model = models.generate_random_model(models.GenerativeSpec(args.k, args.weight_low, args.weight_high),
                                             args.n, rng)
    else:
        model = models.make_family_model(args.family, args.n, rng, s=args.s, mmnl_draws=args.draws)
    _emit_json(io.model_to_json(model), args.out)
    return EXIT_OK


def cmd_marginals(args) -> int:
    model = _load_model(args)
    kind = SchemeKind(args.scheme)
    assortments = [a.members for a in io.parse_assortments(args.assortments)] if args.assortments else None
    scheme = io.make_scheme(kind.value, model.n, assortments)
    if isinstance(model, SparseChoiceModel):
        data = exact_marginals(model, scheme)
    elif kind is SchemeKind.CENSORED:
        data = models.simulate_pairwise_marginals(model)
    elif kind is SchemeKind.TRANSACTION:
        data = models.transaction_marginals(model, scheme.assortments)
    elif isinstance(model, models.MnlModel) and model.n <= 8:
        data = exact_marginals(models.to_rank_distribution(model), scheme)
    else:
        raise ChoiceError(f"{kind.value} marginals need a rank-list model, or an MNL model with N <= 8")
    _emit(io.write_json(io.data_to_json(data)), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load_model(args)
    assortments = io.parse_assortments(args.assortments)
    t = models.simulate_transactions(model, assortments, args.arrivals, np.random.default_rng(args.seed),
                                     censor_at=args.censor_at)
    _emit(io.transactions_to_csv(t), args.out)
    return EXIT_OK


def _is_csv(path: str) -> bool:
    return path.lower().endswith(".csv")


def cmd_predict(args) -> int:
    target = io.parse_assortments(args.assortment)
    if len(target) != 1:
        raise UsageError("--assortment takes exactly one assortment, e.g. \"0,3,7\"")
    target = target[0]
    if args.method == "interval":
        if not _is_csv(args.data):
            raise UsageError("--method interval reads a transactions CSV")
        tx = io.load_transactions(args.data, censor_at=args.censor_at)
        prices = _prices(args.prices, tx.n) if args.prices else None
        z = robust.DEFAULT_Z if args.z is None else args.z
        res = robust.robust_conversion_interval(tx, target, z, prices=prices, sense=args.sense)
    else:
        if _is_csv(args.data):
            raise UsageError("a transactions CSV is only read by --method interval")
        data = io.load_data(args.data)
        if args.scheme is not None and SchemeKind(args.scheme) is not data.scheme.kind:
            raise ChoiceError(f"--scheme {args.scheme} but the data file holds {data.scheme.kind.value} data")
        mode = args.mode or ("interval" if data.intervals is not None else "eq")
        q = robust.RobustQuery(data, target, _prices(args.prices, data.scheme.n), args.sense, mode)
        if args.method == "brute":
            res = robust.robust_bruteforce(q)
        elif args.method == "sampled":
            res = robust.robust_sampled_dual(q, args.samples, seed=args.seed)
        elif args.method == "ranking":
            res = robust.robust_ranking_exact(q)
        elif args.method == "cut":
            res = robust.robust_cutting_plane(q, args.rounds)
        else:
            res = robust.robust_censored_comparison(q)
    _emit_json(res.to_json(), args.out)
    if not res.ok:
        for line in res.log:
            if line:
                print(line, file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_sparsefit(args) -> int:
    data = io.load_data(args.data)
    if args.scheme is not None and SchemeKind(args.scheme) is not data.scheme.kind:
        raise ChoiceError(f"--scheme {args.scheme} but the data file holds {data.scheme.kind.value} data")
    if not data.is_point:
        raise ChoiceError("sparsefit needs exact point data; interval or sampled data are refused")
    out = sparse.sparsest_fit(data)
    obj: dict = {"status": out.status, "masses": list(out.masses), "signature_rows": list(out.signature_rows)}
    if out.recovered:
        obj["model"] = io.model_to_json(out.model)
    else:
        obj["reason"] = out.reason
        obj["row"] = out.row
    _emit_json(obj, args.out)
    return EXIT_OK if out.recovered else EXIT_DOMAIN


def cmd_phase_diagram(args) -> int:
    cells = sparse.recovery_phase_diagram(args.scheme, args.n_range, args.k_range, args.trials, args.seed,
                                          args.workers)
    rows = [(c.scheme, c.n, c.k, c.trials, c.recovered, c.rate) for c in cells]
    _emit(io.table_to_csv(("scheme", "n", "k", "trials", "recovered", "rate"), rows), args.out)
    return EXIT_OK


def cmd_study(args) -> int:
    spec = bench.ExperimentSpec(args.family, n=args.n, instances=args.instances, assortments=args.assortments,
                                min_size=args.min_size, max_size=args.max_size, seed=args.seed,
                                method=args.method, s=args.s, rounds=args.rounds, samples=args.samples,
                                mmnl_draws=args.draws)
    result = bench.run_simulation_study(spec, args.workers)
    _emit(io.table_to_csv(bench.STUDY_HEADER, bench.study_rows(result)), args.out)
    if args.hist:
        Path(args.hist).write_text(io.table_to_csv(("low", "high", "count"), result.histogram()))
    if result.excluded_count:
        print(f"{result.excluded_count} record(s) excluded (infeasible LP or zero bound)", file=sys.stderr)
    return EXIT_OK


def cmd_crossval(args) -> int:
    tx = io.load_transactions(args.transactions, censor_at=args.censor_at)
    methods = tuple(args.methods.split(","))
    result = bench.run_kfold_cv(tx, args.k, methods=methods, z=args.z, seed=args.seed,
                                arrival_factor=args.arrival_factor)
    _emit(io.table_to_csv(bench.CV_HEADER, bench.cv_rows(result, methods)), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rankchoice", description="Robust revenue prediction from marginal sales data.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name: str, help: str, fn) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, description=help)
        p.set_defaults(func=fn)
        return p

    def out(p):
        p.add_argument("--out", help="write here instead of stdout")

    p = command("generate", "draw a ground-truth choice model as JSON", cmd_generate)
    p.add_argument("--family", required=True, choices=("sparse",) + models.FAMILIES)
    p.add_argument("--n", type=int, required=True, help="number of products including no-purchase")
    p.add_argument("--k", type=int, help="support size for --family sparse")
    p.add_argument("--weight-low", type=float, default=1.0)
    p.add_argument("--weight-high", type=float, default=2.0)
    p.add_argument("--s", type=float, default=0.25, help="relative coefficient spread for MMNL families")
    p.add_argument("--draws", type=int, default=models.MC_DRAWS, help="Monte Carlo draws for MMNL")
    p.add_argument("--seed", type=int, default=0)
    out(p)

    p = command("marginals", "exact partial-information data vector of a model", cmd_marginals)
    p.add_argument("--model", required=True, help="model JSON or preset amzn / amzn-cnl / amzn-mmnl")
    p.add_argument("--n", type=int, help="number of products for a preset")
    p.add_argument("--scheme", required=True, choices=[k.value for k in SchemeKind])
    p.add_argument("--assortments", help='transaction assortments, e.g. "1,2;3"')
    out(p)

    p = command("simulate", "multinomial sales counts as transactions CSV", cmd_simulate)
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--assortments", required=True, help='e.g. "1,2;3;1,3"')
    p.add_argument("--arrivals", type=int, required=True, help="customers per assortment")
    p.add_argument("--censor-at", type=int, help="treat counts at or below this as unobserved")
    p.add_argument("--seed", type=int, default=0)
    out(p)

    p = command("predict", "robust revenue (or conversion) bound for one assortment", cmd_predict)
    p.add_argument("--data", required=True, help="data-vector JSON, or transactions CSV for --method interval")
    p.add_argument("--scheme", choices=[k.value for k in SchemeKind], help="assert the data's scheme")
    p.add_argument("--assortment", required=True, help='e.g. "0,3,7"')
    p.add_argument("--prices", help="price JSON (default: unit prices, i.e. conversion rate)")
    p.add_argument("--method", default="brute", choices=robust.METHODS)
    p.add_argument("--sense", default="min", choices=("min", "max"))
    p.add_argument("--mode", choices=[m.value for m in robust.ConstraintMode],
                   help="how data enter: eq (default), ge, interval (default for interval data)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--z", type=float, help=f"interval width (default {robust.DEFAULT_Z})")
    p.add_argument("--censor-at", type=int)
    p.add_argument("--seed", type=int, default=0)
    out(p)

    p = command("sparsefit", "recover the sparsest model from exact data", cmd_sparsefit)
    p.add_argument("--data", required=True)
    p.add_argument("--scheme", choices=[k.value for k in SchemeKind])
    out(p)

    p = command("phase-diagram", "exact-recovery rate over (N, K) as CSV", cmd_phase_diagram)
    p.add_argument("--scheme", required=True, choices=("comparison", "ranking", "topset", "censored"))
    p.add_argument("--n-range", type=_int_range, required=True)
    p.add_argument("--k-range", type=_int_range, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    out(p)

    p = command("study", "synthetic revenue study; one error record per CSV row", cmd_study)
    p.add_argument("--family", required=True, choices=models.FAMILIES)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--assortments", type=int, default=10)
    p.add_argument("--min-size", type=int, default=1)
    p.add_argument("--max-size", type=int)
    p.add_argument("--method", default="brute", choices=bench.STUDY_METHODS)
    p.add_argument("--s", type=float, default=0.25)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--draws", type=int, default=models.MC_DRAWS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.add_argument("--hist", help="also write histogram bins (width 0.05) as CSV here")
    out(p)

    p = command("crossval", "k-fold cross-validation of conversion-rate predictions", cmd_crossval)
    p.add_argument("--transactions", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--methods", default="robust,mnl")
    p.add_argument("--z", type=float, help="interval width (default: smallest feasible per fold)")
    p.add_argument("--arrival-factor", type=float, default=1.0, help="scale training arrival counts")
    p.add_argument("--censor-at", type=int)
    p.add_argument("--seed", type=int, default=0)
    out(p)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rankchoice: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ChoiceError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"rankchoice: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
