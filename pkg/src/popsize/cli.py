"""Command line interface: ``popsize fit | compare | simulate``.

Exit codes: 0 success, 2 usage error, 3 data validation error, 4 numerical
or degenerate-data error. On failure one JSON object is written to stderr
on a single line, e.g. ``{"error": "DegenerateDataError", "exit_code": 4,
"reason": "f2=0", "message": "..."}``.
"""

import argparse
import json
import sys
from pathlib import Path

from . import report as rpt
from .covariate import zelterman_regression, zt_poisson_regression_estimate
from .data import Covariate, ModelSpec, load_schema, read_frequency_csv, read_individual_csv
from .exceptions import NumericalError, PopsizeError, UsageError
from .glm import likelihood_ratio_test
from .homogeneous import Method, chao_estimate, zelterman_estimate, zelterman_lambda, zt_poisson_mle
from .simulate import (
    PRNG_ALGORITHM,
    STREAM_LAYOUT_VERSION,
    replicate,
    simulate_mixture,
    summarize,
    write_observed_csv,
)

__all__ = ["main", "build_parser", "parse_mixture", "parse_categorical"]

HOMOGENEOUS = (Method.ZELTERMAN, Method.CHAO, Method.ZTPOISSON_MLE)
REGRESSION = (Method.ZELTERMAN_REGRESSION, Method.ZTPOISSON_REGRESSION)


class _Parser(argparse.ArgumentParser):
    # route argparse failures through the JSON error line and exit code 2
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}", reason="bad-arguments")


def parse_categorical(text):
    """Parse ``name``, ``name=l1|l2|l3`` or ``name=l1|l2|l3:ref``.

    Levels are separated by ``|`` so that they may contain commas. Without
    levels they are taken from the data (sorted); without ``:ref`` the last
    level is the reference.
    """
    name, eq, rest = text.partition("=")
    name = name.strip()
    if not name:
        raise UsageError(f"bad --categorical {text!r}", reason="bad-categorical")
    if not eq:
        return Covariate.categorical(name)
    ref = None
    if ":" in rest:
        rest, _, ref = rest.rpartition(":")
        ref = ref.strip()
    levels = [v.strip() for v in rest.split("|") if v.strip()]
    if not levels:
        raise UsageError(f"bad --categorical {text!r}: no levels", reason="bad-categorical")
    return Covariate.categorical(name, levels, ref)


def parse_mixture(text):
    """Parse ``"w:lam,w:lam,..."`` into a list of ``(weight, lambda)``."""
    comps = []
    for part in text.split(","):
        try:
            w, lam = part.split(":")
            comps.append((float(w), float(lam)))
        except ValueError:
            raise UsageError(
                f"bad mixture component {part!r}; expected weight:lambda",
                reason="bad-mixture",
            ) from None
    total = sum(w for w, _ in comps)
    if any(w <= 0 for w, _ in comps) or abs(total - 1.0) > 1e-9:
        raise UsageError(
            f"mixture weights must be positive and sum to 1 (got {total:g})",
            reason="bad-mixture",
        )
    if any(not lam > 0 or lam == float("inf") for _, lam in comps):
        raise UsageError("mixture rates must be finite and > 0", reason="bad-mixture")
    return comps


def _add_data_args(p, methods):
    p.add_argument("--method", required=True, choices=[m.value for m in methods])
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--format", choices=["individual", "frequency"], default="individual")
    p.add_argument("--count-col", default=None, help="count column (default: count)")
    p.add_argument("--categorical", action="append", default=[], metavar="SPEC",
                   help="name[=l1|l2|...[:reference]]; repeatable")
    p.add_argument("--schema", type=Path, default=None,
                   help="JSON covariate schema (count column and covariate kinds)")
    p.add_argument("--output", choices=["text", "json"], default="text")


def build_parser():
    parser = _Parser(prog="popsize", description="Population size from zero-truncated counts.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit one estimator")
    _add_data_args(fit, HOMOGENEOUS + REGRESSION)
    fit.add_argument("--covariates", default="", help="comma-separated covariate names")

    cmp_ = sub.add_parser("compare", help="compare nested regression models")
    _add_data_args(cmp_, REGRESSION)
    cmp_.add_argument("--models", required=True,
                      help='semicolon-separated covariate lists, e.g. ";age" or "g;g,a"')

    sim = sub.add_parser("simulate", help="Monte Carlo check of the homogeneous estimators")
    sim.add_argument("--n-pop", type=int, required=True)
    rate = sim.add_mutually_exclusive_group(required=True)
    rate.add_argument("--lambda", dest="lam", type=float)
    rate.add_argument("--mixture", help='"w:lambda,w:lambda,..."')
    sim.add_argument("--seeds", type=int, default=100)
    sim.add_argument("--seed-base", type=int, default=0)
    sim.add_argument("--method", default="zelterman",
                     help="comma-separated subset of zelterman,chao,ztpoisson")
    sim.add_argument("--dump-dir", type=Path, default=None,
                     help="write the observed counts of each seed as CSV")
    sim.add_argument("--output", choices=["text", "json"], default="text")
    return parser


# --- data loading ----------------------------------------------------------------

def _covariate_schema(args, names):
    """Covariate declarations for ``names``: --categorical, then --schema, else continuous."""
    declared = {}
    count_col = "count"
    if args.schema is not None:
        count_col, covs = load_schema(args.schema)
        declared.update({c.name: c for c in covs})
    for text in args.categorical:
        c = parse_categorical(text)
        declared[c.name] = c
    if args.count_col is not None:
        count_col = args.count_col
    return count_col, [declared.get(n, Covariate.continuous(n)) for n in names]


def _load_individual(args, names):
    count_col, schema = _covariate_schema(args, names)
    ds = read_individual_csv(args.data, count_col, schema)
    return ds, rpt.input_digest(args.data, "individual", ds.frequency_table(), len(ds))


def _load_table(args):
    if args.format == "frequency":
        table = read_frequency_csv(args.data)
        rows = sum(1 for line in Path(args.data).read_text(encoding="utf-8-sig").splitlines()[1:]
                   if line.strip())
        return table, rpt.input_digest(args.data, "frequency", table, rows)
    ds, digest = _load_individual(args, [])
    return ds.frequency_table(), digest


def _regression(method, ds, spec):
    f = zelterman_regression if method is Method.ZELTERMAN_REGRESSION else zt_poisson_regression_estimate
    fit, est, _ = f(ds, spec)
    return fit, est


# --- commands --------------------------------------------------------------------

def cmd_fit(args):
    method = Method(args.method)
    covariates = ModelSpec.parse(args.covariates).terms
    if method in HOMOGENEOUS:
        if covariates or args.categorical:
            raise UsageError(f"{method} takes no covariates", reason="covariates-not-allowed")
        table, digest = _load_table(args)
        rate = None
        if method is Method.ZELTERMAN:
            est = zelterman_estimate(table)
            rate = zelterman_lambda(table, 1)
        elif method is Method.CHAO:
            est = chao_estimate(table)
        else:
            rate, est = zt_poisson_mle(table)
        return rpt.fit_report(method, digest, est, rate=rate)
    if args.format == "frequency":
        raise UsageError(
            f"{method} needs individual records; --format frequency has no covariates",
            reason="regression-needs-individual",
        )
    ds, digest = _load_individual(args, covariates)
    spec = ModelSpec(covariates)
    fit, est = _regression(method, ds, spec)
    return rpt.fit_report(method, digest, est, fit=fit, model=spec.label)


def _parse_models(text):
    specs = [ModelSpec.parse(part) for part in text.split(";")]
    for prev, cur in zip(specs, specs[1:]):
        if not set(prev.terms) <= set(cur.terms) or prev.terms == cur.terms:
            raise UsageError(
                f"models must be strictly nested: {prev.label!r} -> {cur.label!r}",
                reason="non-nested",
            )
    return specs


def cmd_compare(args):
    method = Method(args.method)
    if args.format == "frequency":
        raise UsageError("compare needs individual records", reason="regression-needs-individual")
    specs = _parse_models(args.models)
    names = []
    for s in specs:
        names.extend(t for t in s.terms if t not in names)
    ds, digest = _load_individual(args, names)
    rows, lrts = [], []
    for spec in specs:
        fit, est = _regression(method, ds, spec)
        if rows:
            lrts.append((spec.label, rows[-1][0], likelihood_ratio_test(fit, rows[-1][1])))
        rows.append((spec.label, fit, est))
    return rpt.compare_report(method, digest, rows, lrts)


def cmd_simulate(args):
    if args.n_pop < 1:
        raise UsageError("--n-pop must be >= 1", reason="bad-n-pop")
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1", reason="bad-seeds")
    if args.mixture is not None:
        comps = parse_mixture(args.mixture)
    else:
        if not args.lam > 0 or args.lam == float("inf"):
            raise UsageError("--lambda must be finite and > 0", reason="bad-lambda")
        comps = [(1.0, args.lam)]
    try:
        methods = [Method(m.strip()) for m in args.method.split(",") if m.strip()]
    except ValueError:
        raise UsageError(f"unknown method in {args.method!r}", reason="bad-method") from None
    if not methods or any(m not in HOMOGENEOUS for m in methods):
        raise UsageError(
            "simulate supports zelterman, chao and ztpoisson", reason="bad-method"
        )
    outcomes = replicate(args.n_pop, comps, methods, args.seeds, args.seed_base)
    if args.dump_dir is not None:
        args.dump_dir.mkdir(parents=True, exist_ok=True)
        for k in range(args.seeds):
            seed = args.seed_base + k
            pop = simulate_mixture(args.n_pop, comps, seed)
            write_observed_csv(pop, args.dump_dir / f"seed_{seed}.csv")
    per_seed = {}
    for m, outs in outcomes.items():
        rows = []
        for k, o in enumerate(outs):
            row = {"seed": args.seed_base + k}
            if o is None:
                row.update(n_observed=None, n_hat=None, ci_low=None, ci_high=None, covered=None)
            else:
                e = o.estimate
                row.update(
                    n_observed=float(e.n_observed), n_hat=e.n_hat,
                    ci_low=e.ci_low, ci_high=e.ci_high, covered=bool(o.covered),
                )
            rows.append(row)
        per_seed[m.value] = rows
    config = {
        "n_pop": args.n_pop,
        "components": [[w, lam] for w, lam in comps],
        "seeds": args.seeds,
        "seed_base": args.seed_base,
        "methods": [m.value for m in methods],
        "prng": PRNG_ALGORITHM,
        "stream_layout_version": STREAM_LAYOUT_VERSION,
    }
    summaries = {m.value: summarize(outs) for m, outs in outcomes.items()}
    return rpt.simulate_report(config, per_seed, summaries)


_COMMANDS = {"fit": cmd_fit, "compare": cmd_compare, "simulate": cmd_simulate}


def _fail(err, code, stderr):
    payload = {
        "error": type(err).__name__,
        "exit_code": code,
        "reason": getattr(err, "reason", type(err).__name__),
        "message": str(err),
    }
    line = getattr(err, "line", None)
    if line is not None:
        payload["line"] = line
    stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None, stdout=None, stderr=None):
    """Run the CLI and return the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        rep = _COMMANDS[args.command](args)
    except PopsizeError as err:
        return _fail(err, err.exit_code, stderr)
    except FloatingPointError as err:
        return _fail(err, NumericalError.exit_code, stderr)
    except OSError as err:
        # unreadable or missing input counts as a data problem
        err.reason = "io-error"
        return _fail(err, 3, stderr)
    stdout.write(rpt.dumps(rep) if args.output == "json" else rpt.render_text(rep))
    return 0


if __name__ == "__main__":
    sys.exit(main())
