"""Reports for the command line front end.

A report is a plain ``dict`` that serializes straight to JSON. Numeric fields
hold full double precision (``json`` writes the shortest round-tripping
repr, always at least as many significant digits as the value carries). Each
report also has a ``display`` block with the rounded strings that text mode
prints, and :func:`render_text` reads only from that block, so the two
output modes cannot disagree.

Rounding in ``display``: population sizes and their standard errors and
interval bounds to integers, rates, coefficients and coefficient standard
errors to 4 decimals, log-likelihoods, AIC and LRT statistics to 2 decimals,
p-values to 4 decimals.
"""

import hashlib
import json
import math

from .counts import FrequencyTable

__all__ = [
    "SCHEMA_VERSION",
    "input_digest",
    "estimate_block",
    "rate_block",
    "fit_block",
    "fit_report",
    "compare_report",
    "simulate_report",
    "render_text",
    "dumps",
]

SCHEMA_VERSION = "1.0"


def _int(x):
    return "nan" if not math.isfinite(x) else f"{x:.0f}"


def _dec(x, k=4):
    return "nan" if x is None or not math.isfinite(x) else f"{x:.{k}f}"


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def input_digest(path, fmt, table: FrequencyTable, n_rows):
    """Identify the input: path, sha256 of its bytes, row count and margins."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return {
        "path": str(path),
        "format": fmt,
        "sha256": h.hexdigest(),
        "rows": int(n_rows),
        "n_observed": _num(table.n),
        "frequencies": {str(j): _num(f) for j, f in table.freq.items()},
    }


def estimate_block(est):
    return {
        "n_hat": _num(est.n_hat),
        "se": _num(est.se),
        "ci_low": _num(est.ci_low),
        "ci_high": _num(est.ci_high),
        "n_observed": _num(est.n_observed),
        "f0_hat": _num(est.f0_hat),
        "completeness": _num(est.completeness),
        "var_sampling": _num(est.var_sampling),
        "var_parameter": _num(est.var_parameter),
    }


def _estimate_display(est):
    return {
        "n_hat": _int(est.n_hat),
        "se": _int(est.se),
        "ci_low": _int(est.ci_low),
        "ci_high": _int(est.ci_high),
        "n_observed": _int(est.n_observed),
    }


def rate_block(rate):
    if rate is None:
        return None
    return {
        "lambda_hat": _num(rate.lambda_hat),
        "var_log_lambda": None if rate.var_log_lambda is None else _num(rate.var_log_lambda),
        "ci_low": None if rate.ci_low is None else _num(rate.ci_low),
        "ci_high": None if rate.ci_high is None else _num(rate.ci_high),
    }


def _rate_display(rate):
    if rate is None:
        return None
    return {
        "lambda_hat": _dec(rate.lambda_hat),
        "ci_low": _dec(rate.ci_low),
        "ci_high": _dec(rate.ci_high),
    }


def fit_block(fit):
    if fit is None:
        return None
    return {
        "family": fit.family,
        "coefficients": [
            {"name": name, "estimate": _num(b), "se": _num(s)}
            for name, b, s in zip(fit.columns, fit.beta, fit.se)
        ],
        "log_lik": _num(fit.log_lik),
        "aic": _num(fit.aic),
        "n_fit": int(fit.n_fit),
        "iterations": int(fit.iterations),
        "converged": bool(fit.converged),
    }


def _fit_display(fit):
    if fit is None:
        return None
    return {
        "coefficients": [
            {"name": name, "estimate": _dec(b), "se": _dec(s)}
            for name, b, s in zip(fit.columns, fit.beta, fit.se)
        ],
        "log_lik": _dec(fit.log_lik, 2),
        "aic": _dec(fit.aic, 2),
    }


def _warnings(est, extra=()):
    return list(est.warnings) + list(extra)


def fit_report(method, digest, est, rate=None, fit=None, model=None):
    """Report for a single fitted estimator."""
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "fit",
        "method": str(method),
        "model": model,
        "input": digest,
        "estimate": estimate_block(est),
        "rate": rate_block(rate),
        "fit": fit_block(fit),
        "warnings": _warnings(est),
        "display": {
            "estimate": _estimate_display(est),
            "rate": _rate_display(rate),
            "fit": _fit_display(fit),
        },
    }


def compare_report(method, digest, rows, lrts):
    """Report for a sequence of nested models.

    Parameters
    ----------
    rows : list of (label, FitResult, PopulationEstimate)
    lrts : list of (label, against_label, LrtResult)
    """
    models, shown = [], []
    warnings = []
    for label, fit, est in rows:
        models.append(
            {"model": label, "estimate": estimate_block(est), "fit": fit_block(fit)}
        )
        shown.append(
            {"model": label, "estimate": _estimate_display(est), "fit": _fit_display(fit)}
        )
        warnings.extend(f"{label}: {w}" for w in est.warnings)
    tests = [
        {
            "model": lab,
            "against": ref,
            "statistic": _num(t.statistic),
            "df": int(t.df),
            "p_value": _num(t.p_value),
        }
        for lab, ref, t in lrts
    ]
    tests_shown = [
        {
            "model": lab,
            "against": ref,
            "statistic": _dec(t.statistic, 2),
            "df": str(t.df),
            "p_value": _dec(t.p_value),
        }
        for lab, ref, t in lrts
    ]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "compare",
        "method": str(method),
        "input": digest,
        "models": models,
        "lrt": tests,
        "warnings": warnings,
        "display": {"models": shown, "lrt": tests_shown},
    }


def simulate_report(config, per_seed, summaries):
    """Report for a simulation run.

    Parameters
    ----------
    config : dict
        Echo of the simulation settings (JSON-serializable).
    per_seed : dict
        ``method -> list of dicts`` with keys seed, n_observed, n_hat,
        ci_low, ci_high, covered (``n_hat`` etc. ``None`` on failure).
    summaries : dict
        ``method -> summary`` as returned by :func:`popsize.simulate.summarize`.
    """
    shown = {}
    for m, s in summaries.items():
        shown[m] = {
            "replicates": str(s["replicates"]),
            "failures": str(s["failures"]),
            "mean_n_hat": _int(s["mean_n_hat"]) if "mean_n_hat" in s else "nan",
            "mean_relative_bias": _dec(s.get("mean_relative_bias")),
            "coverage": _dec(s.get("coverage")),
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulate",
        "config": config,
        "replicates": per_seed,
        "summary": summaries,
        "warnings": [],
        "display": {"summary": shown},
    }


# --- text rendering ------------------------------------------------------------

def _table(header, rows):
    widths = [max(len(str(r[k])) for r in [header] + rows) for k in range(len(header))]
    fmt = lambda r: "  ".join(
        str(c).ljust(w) if k == 0 else str(c).rjust(w) for k, (c, w) in enumerate(zip(r, widths))
    )
    return [fmt(header)] + [fmt(r) for r in rows]


def _text_fit(rep):
    d = rep["display"]
    e = d["estimate"]
    src = rep["input"]
    lines = [
        f"method: {rep['method']}" + (f"  model: {rep['model']}" if rep.get("model") else ""),
        f"data: {src['path']} ({src['format']}, {src['rows']} rows)",
        f"observed n: {e['n_observed']}",
        f"N_hat: {e['n_hat']}  se: {e['se']}  95% CI: ({e['ci_low']}, {e['ci_high']})",
    ]
    if d["rate"] is not None:
        r = d["rate"]
        ci = "" if r["ci_low"] == "nan" else f"  95% CI: ({r['ci_low']}, {r['ci_high']})"
        lines.append(f"lambda_hat: {r['lambda_hat']}{ci}")
    if d["fit"] is not None:
        f = d["fit"]
        lines.append(f"log-likelihood: {f['log_lik']}  AIC: {f['aic']}")
        lines.extend(
            _table(
                ["coefficient", "estimate", "se"],
                [[c["name"], c["estimate"], c["se"]] for c in f["coefficients"]],
            )
        )
    return lines


def _text_compare(rep):
    d = rep["display"]
    src = rep["input"]
    lines = [
        f"method: {rep['method']}",
        f"data: {src['path']} ({src['format']}, {src['rows']} rows)",
        f"observed n: {d['models'][0]['estimate']['n_observed']}",
    ]
    lines.extend(
        _table(
            ["model", "N_hat", "se", "95% CI", "LL", "AIC"],
            [
                [
                    m["model"],
                    m["estimate"]["n_hat"],
                    m["estimate"]["se"],
                    f"({m['estimate']['ci_low']}, {m['estimate']['ci_high']})",
                    m["fit"]["log_lik"],
                    m["fit"]["aic"],
                ]
                for m in d["models"]
            ],
        )
    )
    if d["lrt"]:
        lines.append("")
        lines.extend(
            _table(
                ["model", "vs", "LRT", "df", "p-value"],
                [[t["model"], t["against"], t["statistic"], t["df"], t["p_value"]] for t in d["lrt"]],
            )
        )
    for m in d["models"]:
        lines.append("")
        lines.extend(
            _table(
                [f"[{m['model']}]", "estimate", "se"],
                [[c["name"], c["estimate"], c["se"]] for c in m["fit"]["coefficients"]],
            )
        )
    return lines


def _text_simulate(rep):
    c = rep["config"]
    lines = [
        f"simulate: n_pop={c['n_pop']} components={c['components']} "
        f"seeds={c['seeds']} seed_base={c['seed_base']}",
    ]
    lines.extend(
        _table(
            ["method", "replicates", "failures", "mean N_hat", "rel. bias", "coverage"],
            [
                [m, s["replicates"], s["failures"], s["mean_n_hat"], s["mean_relative_bias"], s["coverage"]]
                for m, s in rep["display"]["summary"].items()
            ],
        )
    )
    return lines


def render_text(rep):
    """Human readable rendering; every number comes from ``rep['display']``."""
    lines = {"fit": _text_fit, "compare": _text_compare, "simulate": _text_simulate}[rep["kind"]](rep)
    lines.extend(f"warning: {w}" for w in rep["warnings"])
    return "\n".join(lines) + "\n"


def dumps(rep):
    """Deterministic JSON (sorted keys, no NaN tokens)."""
    return json.dumps(rep, indent=2, sort_keys=True, allow_nan=False) + "\n"
