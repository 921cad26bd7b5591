"""Acceptance criteria, one test per criterion.

Each test records (passed, detail) in ``conftest.ACCEPTANCE_RESULTS`` before
asserting, so the terminal summary lists every criterion with its numbers.
Sampler runs are cached and shared between criteria.
"""

import functools
import math
import os
import time

import numpy as np
import pytest
from scipy import optimize, special, stats

from conftest import ACCEPTANCE_RESULTS

from bayes_selection import ChainConfig, ModelVariant, PriorSpec, run_chain
from bayes_selection.dataio import read_dataset, write_draws
from bayes_selection.diagnostics import acceptance_rate, rhat_table, summarize
from bayes_selection.distributions import make_rng, sample_inverse_wishart2_many
from bayes_selection.gibbs_continuous import (
    impute_alpha_prior, impute_latent_continuous, impute_q, post_alpha, post_delta)
from bayes_selection.model import (
    LatentState, ParamState, RestrictedCov, SelectionData, Spd2)
from bayes_selection.nu_sampler import d2log_cond_nu, gamma_approx
from bayes_selection.simgen import dichotomize, gen_scenario

pytestmark = pytest.mark.slow

SEEDS = range(1, 11)
N = 1000
ITERS, BURNIN = 10_000, 2_000
NORMAL = ModelVariant.SELECTION_NORMAL
T = ModelVariant.SELECTION_T
PROBIT = ModelVariant.SELECTION_PROBIT
ROBIT = ModelVariant.SELECTION_ROBIT
# truth for beta_1, gamma_1, gamma_2, rho
TARGETS = {"beta_1": 1.0, "gamma_1": 1.0, "gamma_2": 1.5, "rho": 0.3}


def record(key, passed, detail):
    ACCEPTANCE_RESULTS[key] = (passed, detail)


def chain_seed(data_seed, chain):
    return 100 * data_seed + chain


@functools.lru_cache(maxsize=None)
def fit(scenario, variant, data_seed, chain=0):
    """(draws, wall seconds) for one chain on one simulated data set."""
    data, _ = gen_scenario(scenario, N, data_seed)
    if variant.binary:
        data = dichotomize(data)
    seed = chain_seed(data_seed, chain)
    config = ChainConfig(iterations=ITERS, burnin=BURNIN, seed=seed, variant=variant)
    start = time.perf_counter()
    draws = run_chain(data, PriorSpec.default(data.k, data.l), config, make_rng(seed))
    return draws, time.perf_counter() - start


def covers(summary, name, value):
    return summary[name]["ci_lower"] < value < summary[name]["ci_upper"]


def test_criterion_1_normal_recovery():
    counts = {}
    per_param = {}
    nu_medians = []
    slowest = 0.0
    for variant in (NORMAL, T):
        hits = 0
        single = dict.fromkeys(TARGETS, 0)
        for s in SEEDS:
            draws, secs = fit("normal", variant, s)
            slowest = max(slowest, secs)
            summ = summarize(draws)
            # a seed counts only if every target is covered
            hits += all(covers(summ, name, v) for name, v in TARGETS.items())
            for name, v in TARGETS.items():
                single[name] += covers(summ, name, v)
            if variant is T:
                nu_medians.append(summ["nu"]["median"])
        counts[variant.value] = hits
        per_param[variant.value] = single
    ok = (min(counts.values()) >= 8 and min(nu_medians) > 20 and slowest < 300)
    record("1", ok, f"seeds covering all targets {counts} of 10 (per target {per_param}); "
                    f"min nu median {min(nu_medians):.1f}; slowest chain {slowest:.1f}s")
    assert ok


def test_criterion_2_t3_robustness():
    nu_hits = 0
    errors = {NORMAL: [], T: []}
    for s in SEEDS:
        for variant in (NORMAL, T):
            summ = summarize(fit("t3", variant, s)[0])
            errors[variant] += [abs(summ["gamma_1"]["mean"] - 1.0), abs(summ["gamma_2"]["mean"] - 1.5)]
            if variant is T:
                nu_hits += covers(summ, "nu", 3.0)
    mae_n, mae_t = np.mean(errors[NORMAL]), np.mean(errors[T])
    ok = nu_hits >= 8 and mae_n > mae_t
    record("2", ok, f"nu CI covers 3 in {nu_hits}/10; MAE(gamma) normal {mae_n:.4f} vs t {mae_t:.4f}")
    assert ok


def test_criterion_3_mixture_stress():
    finite = True
    narrower = 0
    widths = {NORMAL: [], T: []}
    for s in SEEDS:
        for variant in (NORMAL, T, PROBIT, ROBIT):
            draws = fit("mixture", variant, s)[0]
            mat = draws.as_matrix()
            nu_ok = np.all(np.isinf(mat[:, -1])) if not variant.heavy_tailed else np.all(np.isfinite(mat[:, -1]))
            finite &= bool(np.all(np.isfinite(mat[:, :-1])) and nu_ok)
        w = {}
        for variant in (NORMAL, T):
            summ = summarize(fit("mixture", variant, s)[0])
            w[variant] = [summ[g]["ci_upper"] - summ[g]["ci_lower"] for g in ("gamma_1", "gamma_2")]
            widths[variant].append(w[variant])
        narrower += all(a < b for a, b in zip(w[T], w[NORMAL]))
    mean_n = np.mean(widths[NORMAL], axis=0)
    mean_t = np.mean(widths[T], axis=0)
    ok = finite and narrower >= 8
    record("3", ok, f"all draws finite: {finite}; t intervals narrower in {narrower}/10 seeds "
                    f"(mean widths gamma_1, gamma_2: normal {mean_n.round(3).tolist()}, "
                    f"t {mean_t.round(3).tolist()})")
    assert ok


def test_criterion_4_mis_acceptance():
    rates = [acceptance_rate(fit("t3", T, s)[0]) for s in SEEDS]
    ok = min(rates) > 0.90
    record("4", ok, f"nu acceptance min {min(rates):.3f}, mean {np.mean(rates):.3f} over 10 t3 runs")
    assert ok


def test_criterion_5_prior_transforms():
    rng = make_rng(505)
    s11, s12, s22 = sample_inverse_wishart2_many(3.0, Spd2(1.0, 0.0, 1.0), 100_000, rng)
    rho = s12 / np.sqrt(s11 * s22)
    ks = stats.kstest(rho, stats.uniform(-1, 2).cdf).statistic
    # sigma2^2 (1 - rho^2) = 1 / (Sigma^{-1})_22 should be 1 / chi^2_3
    target = s22 * (1 - rho * rho)
    probs = np.arange(0.1, 1.0, 0.1)
    exact = 1.0 / stats.chi2(3).ppf(1 - probs)
    rel = np.max(np.abs(np.quantile(target, probs) / exact - 1))
    ok = ks < 0.01 and rel < 0.02
    record("5", ok, f"KS(rho, U(-1,1)) = {ks:.4f}; max decile rel. error {rel:.4f}")
    assert ok


def gls_oracle(X, W, ystar, ustar, omega, mu0, Sigma0):
    """Posterior of delta for the seemingly unrelated regression with known covariance."""
    n, k = X.shape
    l = W.shape[1]
    oinv = np.linalg.inv(omega)
    prec = np.linalg.inv(Sigma0)
    rhs = prec @ mu0
    for i in range(n):
        Z = np.zeros((2, k + l))
        Z[0, :k] = X[i]
        Z[1, k:] = W[i]
        prec = prec + Z.T @ oinv @ Z
        rhs = rhs + Z.T @ oinv @ np.array([ystar[i], ustar[i]])
    cov = np.linalg.inv(prec)
    return cov @ rhs, cov


def tiny_loglik(b, g, nu, s1_sq=1.5, rho=0.5):
    # N = 2 instance: record 1 observed (y = 0.7, x = 1, w = 0.5), record 2 unselected (w = 1.2)
    s1 = math.sqrt(s1_sq)
    e = 0.7 - b
    if math.isinf(nu):
        l1 = (stats.norm.logpdf(e, scale=s1)
              + stats.norm.logcdf((0.5 * g + rho * e / s1) / math.sqrt(1 - rho ** 2)))
        l2 = stats.norm.logcdf(-1.2 * g)
    else:
        z = e / s1
        scale = np.sqrt((1 - rho ** 2) * (nu + z * z) / (nu + 1))
        l1 = stats.t.logpdf(e, nu, scale=s1) + stats.t.logcdf((0.5 * g + rho * z) / scale, nu + 1)
        l2 = stats.t.logcdf(-1.2 * g, nu)
    return l1 + l2


def tiny_sampler(nu, sweeps, seed):
    data = SelectionData([1, 0], [0.7, np.nan], [[1.0], [-0.5]], [[0.5], [1.2]])
    pri = PriorSpec(np.zeros(2), np.eye(2))
    cov = RestrictedCov(1.5, 0.5)
    variant = NORMAL if math.isinf(nu) else T
    rng = make_rng(seed)
    params = ParamState(np.zeros(2), cov, nu, 1)
    lat = LatentState(np.array([0.7, 0.0]), np.array([0.5, -0.5]), np.ones(2), 1.0)
    out = np.empty((sweeps, 2))
    for s in range(sweeps):
        if variant.heavy_tailed:
            a = impute_alpha_prior(pri, rng, variant)
            lat.q, lat.alpha = lat.q * (a / lat.alpha), a
        lat.ystar, lat.ustar = impute_latent_continuous(data, params, lat.q, lat.alpha, rng)
        if variant.heavy_tailed:
            lat.q = impute_q(data, lat.ystar, lat.ustar, params, lat.alpha, rng)
            lat.alpha = post_alpha(data, lat, params, pri, rng)
        params = ParamState(post_delta(lat, data, params, pri, rng), cov, nu, 1)
        out[s] = params.delta
    return out


def test_criterion_6_conjugacy():
    rng = make_rng(606)
    X = np.column_stack([np.ones(5), [0.3, -1.2, 0.8, 2.0, -0.4]])
    W = np.column_stack([np.ones(5), [1.1, 0.2, -0.9, 0.5, 1.7]])
    ystar = np.array([0.9, -1.4, 1.3, 2.2, 0.1])
    ustar = np.array([0.6, 0.4, -0.8, 1.5, -0.2])
    omega = RestrictedCov(2.0, -0.4)
    mu0 = np.array([0.5, -0.5, 0.2, 0.0])
    Sigma0 = np.diag([4.0, 2.0, 3.0, 1.0]) + 0.5
    mean, cov = gls_oracle(X, W, ystar, ustar, omega.matrix().as_array(), mu0, Sigma0)

    data = SelectionData(np.ones(5), ystar, X, W)
    pri = PriorSpec(mu0, Sigma0)
    lat = LatentState(ystar, ustar, np.ones(5), 1.0)
    params = ParamState(np.zeros(4), omega, math.inf, 2)
    p0 = pri.precision0
    draws = np.array([post_delta(lat, data, params, pri, rng, p0) for _ in range(100_000)])
    se = np.sqrt(np.diag(cov) / len(draws))
    mean_z = np.max(np.abs(draws.mean(0) - mean) / se)
    scale = np.sqrt(np.outer(np.diag(cov), np.diag(cov)))
    cov_err = np.max(np.abs(np.cov(draws.T) - cov) / scale)

    edges = np.linspace(-4, 4, 17)
    edges[0], edges[-1] = -np.inf, np.inf
    mid = np.linspace(-6, 6, 601)
    B, G = np.meshgrid(mid, mid, indexing="ij")
    tvs = []
    for nu, seed in ((math.inf, 61), (4.0, 62)):
        lp = tiny_loglik(B, G, nu) - 0.5 * (B ** 2 + G ** 2)
        p = np.exp(lp - lp.max())
        p /= p.sum()
        sample = tiny_sampler(nu, 40_000, seed)[1000:]
        for j, marg in enumerate((p.sum(1), p.sum(0))):
            truth = np.histogram(mid, edges, weights=marg)[0]
            emp = np.histogram(sample[:, j], edges)[0] / len(sample)
            tvs.append(0.5 * np.abs(emp - truth).sum())
    ok = mean_z < 3 and cov_err < 0.05 and max(tvs) < 0.05
    record("6", ok, f"GLS mean max |z| {mean_z:.2f}, cov max rel. error {cov_err:.4f}; "
                    f"grid TV max {max(tvs):.4f}")
    assert ok


def test_criterion_7_gamma_approx():
    worst_score = worst_mode = worst_curv = worst_bisect = 0.0
    cases = 0
    for n in (10, 100, 1000):
        for mode in np.geomspace(0.3, 100, 12):
            for alpha0 in (1.0, 2.0):
                xi = (0.5 * n * (math.log(mode / 2) - special.psi(mode / 2)) + 0.5 * n
                      + (alpha0 - 1) / mode)

                def score(v):
                    return (0.5 * n * (math.log(v / 2) - special.psi(v / 2)) + 0.5 * n - xi
                            + (alpha0 - 1) / v)

                prop = gamma_approx(n, xi, alpha0)
                nu = prop.nu_star
                worst_score = max(worst_score, abs(score(nu)))
                worst_mode = max(worst_mode, abs((prop.alpha_star - 1) / prop.beta_star - nu) / nu)
                curv = d2log_cond_nu(nu, n, xi, alpha0)
                worst_curv = max(worst_curv, abs(-(prop.alpha_star - 1) / nu ** 2 - curv))
                root = optimize.bisect(score, 1e-3, 1e4, xtol=1e-12, rtol=1e-15, maxiter=500)
                worst_bisect = max(worst_bisect, abs(nu - root))
                cases += 1
    ok = worst_score < 1e-8 and worst_mode < 1e-10 and worst_curv < 1e-10 and worst_bisect < 1e-6
    record("7", ok, f"{cases} cases: max |l'| {worst_score:.1e}, mode identity {worst_mode:.1e}, "
                    f"curvature identity {worst_curv:.1e}, bisection gap {worst_bisect:.1e}")
    assert ok


def test_criterion_8_determinism_and_rhat(tmp_path):
    data, _ = gen_scenario("normal", N, 1)
    config = ChainConfig(iterations=2000, burnin=500, seed=7, variant=T)
    pri = PriorSpec.default(data.k, data.l)
    a = run_chain(data, pri, config, make_rng(7))
    b = run_chain(data, pri, config, make_rng(7))
    # compare through the CSV writer used by the command line tool
    write_draws(tmp_path / "a.csv", [a])
    write_draws(tmp_path / "b.csv", [b])
    identical = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    worst = (0.0, None)
    for variant in (NORMAL, T):
        for s in SEEDS:
            chains = [fit("normal", variant, s, c)[0] for c in range(3)]
            for name, r in rhat_table(chains).items():
                if r > worst[0]:
                    worst = (r, f"{variant.value} seed {s} {name}")
    ok = identical and worst[0] < 1.1
    record("8", ok, f"byte-identical rerun: {identical}; max R-hat {worst[0]:.3f} ({worst[1]})")
    assert ok


AMBULATORY_ENV = "AMBULATORY_CSV"


def test_criterion_9_ambulatory_expenditures():
    path = os.environ.get(AMBULATORY_ENV)
    if not path:
        record("9", None, f"external data not supplied (set {AMBULATORY_ENV} to the CSV path)")
        pytest.skip("ambulatory expenditures CSV not available")
    x = ["age", "female", "educ", "blhisp", "totchr", "ins"]
    data = read_dataset(path, "lambexp", "dambexp", x, x + ["income"])
    config = ChainConfig(iterations=20_000, burnin=5_000, seed=9, variant=T)
    summ = summarize(run_chain(data, PriorSpec.default(data.k, data.l), config, make_rng(9)))
    rho, nu = summ["rho"]["mean"], summ["nu"]["median"]
    ok = abs(rho + 0.327) <= 0.05 and 8.8 < nu < 22.5
    record("9", ok, f"posterior mean rho {rho:.3f} (target -0.327 +/- 0.05); nu median {nu:.2f}")
    assert ok
