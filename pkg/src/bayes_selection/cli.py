"""Command line front end: ``fit``, ``simulate`` and ``diagnose``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import linalg

from . import diagnostics
from .chain import ChainConfig
from .dataio import (DataError, read_dataset, read_draws, read_json, write_dataset,
                     write_draws, write_json)
from .distributions import make_rng
from .gibbs_binary import run_chain_binary
from .gibbs_continuous import run_chain_continuous
from .model import DegenerateCorrelationError, ModelVariant, PriorSpec
from .nu_sampler import ModeNotFoundError
from .simgen import Scenario, dichotomize, gen_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

log = logging.getLogger("bayes_selection")


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


FIT_DEFAULTS = {
    "model": "selection-t", "iters": 50000, "burnin": 10000, "chains": 1, "thin": 1,
    "seed": 0, "no_intercept": False, "sigma0_scale": 100.0, "workers": 1,
    "nu0": 3.0, "alpha0": 1.0, "beta0": 0.1, "prior_b": 0.1, "prior_c": 0.1,
    "split_rhat": False,
}
FIT_REQUIRED = ("data", "outcome", "select", "x", "w", "out")


def _csv_list(text):
    items = [t.strip() for t in text.split(",")] if isinstance(text, str) else list(text)
    if not items or any(not t for t in items):
        raise argparse.ArgumentTypeError(f"bad column list {text!r}")
    return items


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bayes-selection",
        description="Bayesian sample-selection models with normal or Student-t errors.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    # SUPPRESS lets a config file fill anything not given on the command line
    fit = sub.add_parser("fit", help="run the sampler on a CSV data set",
                         argument_default=argparse.SUPPRESS)
    fit.add_argument("--config", help="JSON file with any of the flags below (flags win)")
    fit.add_argument("--model", choices=[v.value for v in ModelVariant])
    fit.add_argument("--data", help="dataset CSV")
    fit.add_argument("--outcome", help="outcome column (empty or NA when unselected)")
    fit.add_argument("--select", help="selection indicator column (0/1)")
    fit.add_argument("--x", type=_csv_list, help="comma-separated outcome covariates")
    fit.add_argument("--w", type=_csv_list, help="comma-separated selection covariates")
    fit.add_argument("--no-intercept", action="store_true", dest="no_intercept")
    fit.add_argument("--iters", type=int)
    fit.add_argument("--burnin", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--chains", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--workers", type=int, help="processes for running chains")
    fit.add_argument("--sigma0-scale", type=float, dest="sigma0_scale",
                     help="prior variance of each regression coefficient")
    fit.add_argument("--nu0", type=float)
    fit.add_argument("--alpha0", type=float)
    fit.add_argument("--beta0", type=float)
    fit.add_argument("--prior-b", type=float, dest="prior_b")
    fit.add_argument("--prior-c", type=float, dest="prior_c")
    fit.add_argument("--split-rhat", action="store_true", dest="split_rhat")
    fit.add_argument("--out", help="output directory")

    sim = sub.add_parser("simulate", help="write a simulated data set")
    sim.add_argument("--scenario", required=True, help="normal, t3 or mixture")
    sim.add_argument("--n", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--binary", action="store_true", help="replace y by I(y > 0)")
    sim.add_argument("--out", required=True, help="dataset CSV path")
    sim.add_argument("--truth", help="truth JSON path (default: <out stem>.truth.json)")

    diag = sub.add_parser("diagnose", help="summaries and figure data from draws.csv")
    diag.add_argument("--draws", required=True)
    diag.add_argument("--out", required=True, help="output directory")
    diag.add_argument("--bins", type=int, default=diagnostics.DEFAULT_BINS)
    diag.add_argument("--split-rhat", action="store_true", dest="split_rhat")
    return parser


def resolve_fit_options(ns):
    """Merge defaults < config file < explicit flags."""
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "verbose", "config")}
    opts = dict(FIT_DEFAULTS)
    if getattr(ns, "config", None):
        cfg = read_json(ns.config)
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(FIT_DEFAULTS) - set(FIT_REQUIRED)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key in ("x", "w"):
            if key in cfg:
                try:
                    cfg[key] = _csv_list(cfg[key])
                except argparse.ArgumentTypeError as exc:
                    raise UsageError(str(exc)) from None
        opts.update(cfg)
    opts.update(given)
    missing = [k for k in FIT_REQUIRED if k not in opts]
    if missing:
        raise UsageError("missing required options: " + ", ".join("--" + m for m in missing))
    try:
        ModelVariant.from_name(opts["model"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for key in ("iters", "chains", "thin", "workers"):
        if int(opts[key]) < 1:
            raise UsageError(f"--{key} must be at least 1")
    if not 0 <= int(opts["burnin"]) < int(opts["iters"]):
        raise UsageError("--burnin must satisfy 0 <= burnin < iters")
    if not float(opts["sigma0_scale"]) > 0:
        raise UsageError("--sigma0-scale must be positive")
    return opts


def _run_one(job):
    data, priors, config = job
    runner = run_chain_binary if config.variant.binary else run_chain_continuous
    draws = runner(data, priors, config, make_rng(config.seed))
    return draws


def run_chains(data, priors, variant, iters, burnin, thin, seed, chains, workers=1):
    """Run ``chains`` chains with seeds seed, seed + 1, ..."""
    jobs = [(data, priors, ChainConfig(iterations=iters, burnin=burnin, thin=thin,
                                       seed=seed + c, variant=variant))
            for c in range(chains)]
    if workers > 1 and chains > 1:
        with ProcessPoolExecutor(max_workers=min(workers, chains)) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    for c, draws in enumerate(results):
        draws.chain = c
        if np.any(np.isnan(draws.as_matrix())):
            raise NumericFailure(f"chain {c} produced NaN draws")
    return results


def _diagnostics_payload(chains, split):
    out = {"n_chains": len(chains), "n_draws_per_chain": chains[0].n_draws}
    if len(chains) >= 2:
        out["rhat"] = diagnostics.rhat_table(chains, split=split)
    else:
        out["rhat"] = None
    try:
        out["nu_acceptance_rate"] = diagnostics.acceptance_rate(chains)
    except diagnostics.NotApplicable:
        out["nu_acceptance_rate"] = None
    return out


def cmd_fit(ns):
    opts = resolve_fit_options(ns)
    variant = ModelVariant.from_name(opts["model"])
    data = read_dataset(opts["data"], opts["outcome"], opts["select"], opts["x"], opts["w"],
                        binary=variant.binary, intercept=not opts["no_intercept"])
    if data.n == 0:
        raise DataError("data set is empty")
    priors = PriorSpec.default(data.k, data.l, sigma0_scale=float(opts["sigma0_scale"]),
                               nu0=float(opts["nu0"]), alpha0=float(opts["alpha0"]),
                               beta0=float(opts["beta0"]), b=float(opts["prior_b"]),
                               c=float(opts["prior_c"]))
    log.info("fitting %s to %d records (%d selected)", variant.value, data.n,
             int(data.selected.sum()))
    chains = run_chains(data, priors, variant, int(opts["iters"]), int(opts["burnin"]),
                        int(opts["thin"]), int(opts["seed"]), int(opts["chains"]),
                        int(opts["workers"]))
    diag = _diagnostics_payload(chains, opts["split_rhat"])
    labels = ["(intercept)"] * (not opts["no_intercept"])
    diag["labels"] = {
        **{f"beta_{j}": name for j, name in enumerate(labels + list(opts["x"]))},
        **{f"gamma_{j}": name for j, name in enumerate(labels + list(opts["w"]))},
    }
    diag["model"] = variant.value
    out = opts["out"]
    os.makedirs(out, exist_ok=True)
    # all chains are done before anything is written
    write_draws(os.path.join(out, "draws.csv"), chains)
    write_json(os.path.join(out, "summary.json"), diagnostics.summarize(chains))
    write_json(os.path.join(out, "diagnostics.json"), diag)
    if diag["rhat"] is None:
        log.warning("single chain: R-hat not computed")
    return EXIT_OK


def cmd_simulate(ns):
    try:
        scenario = Scenario.from_name(ns.scenario)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if ns.n < 1:
        raise UsageError("--n must be at least 1")
    data, truth = gen_scenario(scenario, ns.n, ns.seed)
    if ns.binary:
        data = dichotomize(data)
    truth = dict(truth, scenario=scenario.value, n=ns.n, seed=ns.seed, binary=ns.binary)
    parent = os.path.dirname(os.path.abspath(ns.out))
    os.makedirs(parent, exist_ok=True)
    write_dataset(ns.out, data)
    truth_path = ns.truth or os.path.splitext(ns.out)[0] + ".truth.json"
    write_json(truth_path, truth)
    return EXIT_OK


def cmd_diagnose(ns):
    if ns.bins < 1:
        raise UsageError("--bins must be at least 1")
    chains, _ = read_draws(ns.draws)
    lengths = {c.n_draws for c in chains}
    os.makedirs(ns.out, exist_ok=True)
    write_json(os.path.join(ns.out, "summary.json"), diagnostics.summarize(chains))
    if len(chains) < 2:
        log.warning("single chain: R-hat omitted")
        rhat = {}
    elif len(lengths) != 1:
        raise DataError("chains in the draws file have unequal lengths")
    else:
        rhat = diagnostics.rhat_table(chains, split=ns.split_rhat)
    write_json(os.path.join(ns.out, "rhat.json"), rhat)
    rows = diagnostics.figure_rows(diagnostics.figure_data(chains, bins=ns.bins))
    with open(os.path.join(ns.out, "figure_data.csv"), "w") as fh:
        fh.write("parameter,kind,lower,upper,value\n")
        for name, kind, lo, hi, v in rows:
            fh.write(f"{name},{kind},{_num(lo)},{_num(hi)},{_num(v)}\n")
    return EXIT_OK


def _num(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "diagnose": cmd_diagnose}


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[ns.command](ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericFailure, ModeNotFoundError, DegenerateCorrelationError,
            linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
