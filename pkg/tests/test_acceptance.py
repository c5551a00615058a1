"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
complete. The two heavy studies (criteria 6 and 9) come from session-scoped
fixtures shared with the module tests.
"""

import json
import os

import numpy as np
import pytest
from scipy import stats as sps
from scipy.integrate import quad
from scipy.special import expit

from zitpo.cli import main
from zitpo.estimation import chi2_sf, fit_mle, norm_sf
from zitpo.gpd import GpdMean, GpdScale, excess_distribution, gpd_cdf, mean_over_threshold, mean_quantile_level
from zitpo.model import CoefVector, ModelSpec, ZitpoParams, density, linkinv_log, linkinv_logit, predict, zero_prob
from zitpo.diagnostics import residuals_from_params
from zitpo.simulation import SimConfig, reference_config, replicate_rng, rtrunc_gpd, simulate_dataset


def report(num, name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num:2d} ({name}): {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def test_criterion_01_mixture_normalization():
    rng = np.random.default_rng(1001)
    worst = 0.0
    for _ in range(20):
        mu = rng.uniform(0.1, 100.0)
        p = ZitpoParams(
            pi=rng.uniform(0.05, 0.95),
            mu=mu,
            xi=float(rng.choice([-0.3, 0.0, 0.082, 0.25, 0.5, 0.9])),
            y_trunc=float(rng.choice([0.0, 0.1])) * mu,
        )
        upper = GpdMean(p.mu, p.xi).to_scale().upper if p.xi < 0 else np.inf
        mass, _ = quad(lambda y: density(y, p).value, p.y_trunc, upper, limit=400)
        worst = max(worst, abs(zero_prob(p) + mass - 1.0))
    report(1, "normalization", worst < 1e-6, f"worst |total-1| = {worst:.2e}")


def test_criterion_02_cdf_at_the_mean():
    worst = 0.0
    for mu in (0.1, 1.0, 25.0, 59.0, 100.0, 1000.0):
        for xi in (-0.5, -0.3, 0.082, 0.25, 0.5, 0.9):
            got = gpd_cdf(mu, GpdMean(mu, xi))
            worst = max(worst, abs(got - mean_quantile_level(xi)))
    report(2, "mean-quantile identity", worst < 1e-12, f"worst deviation = {worst:.2e}")


def test_criterion_03_excess_over_threshold():
    mu, xi, yb = 59.0, 0.082, 10.0
    base = GpdScale(tau=mu * (1.0 - xi), xi=xi)
    exc = excess_distribution(base, yb)
    sign_ok = exc.tau == pytest.approx(base.tau + xi * yb, abs=1e-12)

    draws = rtrunc_gpd(1.0 - replicate_rng(1003, 0).random(10**5), mu, xi, 0.0)
    cond = np.sort(draws[draws > yb])
    theo = np.asarray(gpd_cdf(cond, exc))
    n = cond.size
    ks = max(
        np.max(np.arange(1, n + 1) / n - theo),
        np.max(theo - np.arange(0, n) / n),
    )

    big = rtrunc_gpd(1.0 - replicate_rng(1003, 1).random(10**6), mu, xi, 0.0)
    cond_mean = float(np.mean(big[big > yb]))
    mean_formula = mean_over_threshold(GpdMean(mu, xi), yb)
    rel = abs(cond_mean / mean_formula - 1.0)

    ok = sign_ok and ks < 0.006 and rel < 0.005
    report(
        3,
        "excess stability",
        ok,
        f"KS = {ks:.4f} (n={n}), conditional-mean rel err = {rel:.4f}, "
        f"scale {exc.tau:.3f} = tau + xi*y",
    )


def test_criterion_04_inverse_cdf_sampling_law():
    mu, xi, y0 = 2.5, 0.25, 0.3
    exact = rtrunc_gpd(1.0, mu, xi, y0) == y0
    draws = rtrunc_gpd(1.0 - replicate_rng(1004, 0).random(10**5), mu, xi, y0)
    p = GpdMean(mu, xi)
    f0 = gpd_cdf(y0, p)

    def trunc_cdf(y):
        return (np.asarray(gpd_cdf(np.maximum(y, y0), p)) - f0) / (1.0 - f0)

    ks = sps.kstest(draws, trunc_cdf)
    ok = exact and ks.pvalue > 0.01
    report(4, "sampling law", ok, f"KS p = {ks.pvalue:.3f}, u=1 -> y_trunc exact: {exact}")


def test_criterion_05_residual_law_finite_sample():
    cfg = reference_config(n=2000, reps=100, xi=0.25, seed=1005)
    coef = CoefVector(beta1=np.asarray(cfg.beta1), beta2=np.asarray(cfg.beta2), xi=cfg.xi)
    passed = 0
    for r in range(100):
        y, spec = simulate_dataset(cfg, r)
        mu = predict(spec, coef)[1]
        rs = residuals_from_params(y, cfg.y_trunc, mu, cfg.xi)
        ks = sps.kstest(rs.residuals, lambda x: np.asarray(gpd_cdf(x, GpdMean(1.0, cfg.xi))))
        passed += ks.pvalue > 0.01
    report(5, "residual law", passed >= 97, f"{passed}/100 replicates pass KS at 1%")


@pytest.mark.slow
def test_criterion_06_estimator_coverage_study(desk_coverage):
    cfg, rep = desk_coverage
    beta_params = [p for p in rep.params if p.name != "xi"]
    cov_ok = all(0.92 <= p.coverage <= 0.975 for p in beta_params)
    xi_mean = next(p.mean for p in rep.params if p.name == "xi")
    bias_ok = xi_mean < cfg.xi

    med_err = {}
    for p in beta_params:
        vals = np.array([r[2] for r in rep.estimates if r[1] == p.name])
        med_err[p.name] = abs(float(np.median(vals)) - p.truth)
    med_ok = all(v < 0.05 for v in med_err.values())

    cov_range = (
        min(p.coverage for p in beta_params),
        max(p.coverage for p in beta_params),
    )
    ok = cov_ok and bias_ok and med_ok and rep.n_excluded <= 0.2 * rep.reps
    report(
        6,
        "coverage study",
        ok,
        f"beta coverage in [{cov_range[0]:.3f}, {cov_range[1]:.3f}] "
        f"(band [0.92, 0.975]), mean xi_hat = {xi_mean:.4f} < {cfg.xi}, "
        f"worst |median-truth| = {max(med_err.values()):.4f}, "
        f"excluded {rep.n_excluded}/{rep.reps}",
    )


def test_criterion_07_inference_formulas():
    wald_p = 2.0 * norm_sf(abs(1.11 / 0.50))
    lrt_p = chi2_sf(3.92, 1)
    rating = linkinv_logit(-1.95)
    listening = linkinv_log(4.08)
    checks = {
        "2*Phi(-|1.11/0.50|) near 0.027": abs(wald_p - 0.027) < 0.005,
        "chi2_1 tail at 3.92 near 0.048": abs(lrt_p - 0.048) < 0.002,
        "logit^-1(-1.95) in [0.120, 0.129]": 0.120 <= rating <= 0.129,
        "exp(4.08) in [58.5, 59.8]": 58.5 <= listening <= 59.8,
    }
    report(
        7,
        "reported inference values",
        all(checks.values()),
        f"wald p = {wald_p:.4f}, lrt p = {lrt_p:.4f}, "
        f"intercepts = ({rating:.4f}, {listening:.2f})",
    )


def test_criterion_08_closed_form_mle():
    worst = 0.0
    for seed in range(10):
        cfg = SimConfig(
            n=600, reps=1, beta1=(0.2,), beta2=(1.1,), xi=0.0,
            y_trunc=0.0, covariate_recipe=(), seed=seed,
        )
        y, spec = simulate_dataset(cfg, 0)
        fit = fit_mle(y, 0.0, spec, fix_xi=0.0)
        assert fit.converged
        pi_err = abs(expit(fit.coef.beta1[0]) - np.mean(y > 0))
        mu_err = abs(np.exp(fit.coef.beta2[0]) - np.mean(y[y > 0]))
        worst = max(worst, pi_err, mu_err / np.mean(y[y > 0]))
    report(8, "closed-form MLE", worst < 1e-6, f"worst deviation = {worst:.2e} over 10 seeds")


@pytest.mark.slow
def test_criterion_09_lrt_null_calibration(lrt_null_study):
    stats_arr = lrt_null_study["stats"]
    mean = float(np.mean(stats_arr))
    ks = sps.kstest(stats_arr, sps.chi2(1).cdf)
    ok = 0.8 <= mean <= 1.2 and ks.pvalue > 0.01 and stats_arr.size >= 400
    report(
        9,
        "LRT null calibration",
        ok,
        f"mean = {mean:.3f} (band [0.8, 1.2]), KS p = {ks.pvalue:.3f}, "
        f"{stats_arr.size} converged replicates",
    )


def test_criterion_10_coverage_determinism(tmp_path):
    texts = []
    for name, workers in (
        ("a.json", 1),
        ("b.json", 1),
        ("c.json", max(2, os.cpu_count() or 2)),
    ):
        out = tmp_path / name
        code = main([
            "coverage", "--preset", "reference", "--n", "400", "--reps", "8",
            "--xi", "0.25", "--seed", "77", "--workers", str(workers),
            "--out", str(out),
        ])
        assert code == 0
        texts.append(out.read_bytes())
    ok = texts[0] == texts[1] == texts[2]
    json.loads(texts[0])  # the artifact is valid JSON
    report(10, "byte-identical coverage JSON", ok, f"{len(texts)} runs identical: {ok}")
