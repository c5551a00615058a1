"""Maximum-likelihood fitting and Wald / likelihood-ratio inference.

The likelihood is maximized by a BFGS quasi-Newton iteration with a
backtracking (sufficient-decrease) line search and central-difference
numeric gradients. The shape parameter is optimized through the bijection
``xi = 1 - exp(-theta)`` so the ``xi < 1`` constraint never binds; standard
errors are mapped back to the natural scale by the delta method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, expit, gammaincc, ndtri

from .model import CoefVector, ModelSpec, _loglik_terms, predict

__all__ = [
    "FitResult",
    "TestResult",
    "fit_mle",
    "numeric_gradient",
    "numeric_hessian",
    "confidence_interval",
    "wald_test",
    "lrt",
]

GRAD_STEP = float(np.finfo(float).eps) ** (1.0 / 3.0)
HESS_STEP = float(np.finfo(float).eps) ** 0.25


def norm_sf(z: float) -> float:
    """Standard normal upper tail via erfc."""
    return float(0.5 * erfc(z / math.sqrt(2.0)))


def norm_ppf(q: float) -> float:
    """Standard normal quantile."""
    return float(ndtri(q))


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution via the regularized gamma."""
    if df == 0:
        return 1.0 if x <= 0.0 else 0.0
    return float(gammaincc(df / 2.0, x / 2.0))


@dataclass(frozen=True)
class FitResult:
    """Converged (or not) maximum-likelihood fit.

    ``se`` and ``cov`` are on the natural scale, ordered as
    (beta1, beta2, xi); ``cov`` comes from the inverse observed Hessian.
    Non-converged fits carry NaN standard errors, never fabricated ones.
    """

    coef: CoefVector
    se: np.ndarray
    cov: np.ndarray
    loglik: float
    n_zero: int
    n_pos: int
    converged: bool
    iterations: int
    names1: tuple[str, ...]
    names2: tuple[str, ...]
    y_trunc: float
    xi_fixed: bool = False
    trace: tuple[tuple[int, float, float], ...] | None = None

    @property
    def n(self) -> int:
        return self.n_zero + self.n_pos

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(
            [f"pi:{n}" for n in self.names1]
            + [f"mu:{n}" for n in self.names2]
            + ["xi"]
        )

    @property
    def estimates(self) -> np.ndarray:
        """Natural-scale parameter vector (beta1, beta2, xi)."""
        return np.concatenate([self.coef.beta1, self.coef.beta2, [self.coef.xi]])

    @property
    def n_free_params(self) -> int:
        k = self.coef.beta1.size + self.coef.beta2.size
        return k if self.xi_fixed else k + 1


@dataclass(frozen=True)
class TestResult:
    """A Wald or likelihood-ratio test outcome."""

    statistic: float
    p_value: float
    kind: str
    df: int | None = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


def numeric_gradient(f, x, h: float = GRAD_STEP) -> np.ndarray:
    """Central-difference gradient with per-coordinate step h*max(1, |x_j|).

    Raises if the function is non-finite at any probe point, naming the
    coordinate.
    """
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for j in range(x.size):
        hj = h * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += hj
        xm[j] -= hj
        fp, fm = f(xp), f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value probing coordinate {j}")
        g[j] = (fp - fm) / (2.0 * hj)
    return g


def numeric_hessian(f, x, h: float = HESS_STEP) -> np.ndarray:
    """Central second differences, symmetrized as (H + H^T)/2."""
    x = np.asarray(x, dtype=float)
    k = x.size
    steps = np.array([h * max(1.0, abs(x[j])) for j in range(k)])
    f0 = f(x)
    if not np.isfinite(f0):
        raise ValueError("non-finite function value at the expansion point")
    H = np.empty((k, k))
    for i in range(k):
        xp, xm = x.copy(), x.copy()
        xp[i] += steps[i]
        xm[i] -= steps[i]
        fp, fm = f(xp), f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value probing coordinate {i}")
        H[i, i] = (fp - 2.0 * f0 + fm) / steps[i] ** 2
        for j in range(i + 1, k):
            fpp = f(_bump(x, (i, steps[i]), (j, steps[j])))
            fpm = f(_bump(x, (i, steps[i]), (j, -steps[j])))
            fmp = f(_bump(x, (i, -steps[i]), (j, steps[j])))
            fmm = f(_bump(x, (i, -steps[i]), (j, -steps[j])))
            if not all(np.isfinite(v) for v in (fpp, fpm, fmp, fmm)):
                raise ValueError(
                    f"non-finite function value probing coordinates ({i}, {j})"
                )
            H[i, j] = (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j])
            H[j, i] = H[i, j]
    return (H + H.T) / 2.0


def _bump(x: np.ndarray, *moves: tuple[int, float]) -> np.ndarray:
    out = x.copy()
    for j, dj in moves:
        out[j] += dj
    return out


class _LineSearchFailure(Exception):
    pass


def _maximize_bfgs(f, x0, gtol: float, ftol: float, max_iter: int, keep_trace: bool):
    """Maximize f by BFGS with an Armijo backtracking line search.

    Returns (x, fval, grad, converged, iterations, trace). Convergence means
    gradient max-norm < gtol and relative objective change < ftol.
    """

    def neg(x):
        return -f(x)

    x = np.asarray(x0, dtype=float).copy()
    fx = neg(x)
    if not np.isfinite(fx):
        raise ValueError("objective is not finite at the starting point")
    g = numeric_gradient(neg, x)
    H = np.eye(x.size)
    trace: list[tuple[int, float, float]] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = -H @ g
        slope = float(g @ p)
        if slope >= 0.0:
            # Curvature information went stale; restart from steepest descent.
            H = np.eye(x.size)
            p = -g
            slope = float(g @ p)
            if slope >= 0.0:
                break
        try:
            alpha, fnew = _backtrack(neg, x, p, fx, slope)
        except _LineSearchFailure:
            if not np.allclose(H, np.eye(x.size)):
                H = np.eye(x.size)
                continue
            break
        s = alpha * p
        x = x + s
        gnew = numeric_gradient(neg, x)
        yk = gnew - g
        sy = float(s @ yk)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(yk)):
            rho = 1.0 / sy
            I = np.eye(x.size)
            V = I - rho * np.outer(s, yk)
            H = V @ H @ V.T + rho * np.outer(s, s)
        gnorm = float(np.max(np.abs(gnew)))
        fchange = abs(fnew - fx) / max(1.0, abs(fnew))
        if keep_trace:
            trace.append((it, -fnew, gnorm))
        fx, g = fnew, gnew
        if gnorm < gtol and fchange < ftol:
            converged = True
            break
    return x, -fx, -g, converged, it, tuple(trace)


def _backtrack(neg, x, p, fx, slope, c1: float = 1e-4, shrink: float = 0.5):
    alpha = 1.0
    while alpha > 1e-20:
        fnew = neg(x + alpha * p)
        if np.isfinite(fnew) and fnew <= fx + c1 * alpha * slope:
            return alpha, fnew
        alpha *= shrink
    raise _LineSearchFailure


def _default_start(y: np.ndarray, spec: ModelSpec, xi_start: float) -> CoefVector:
    pos = y > 0.0
    frac = min(max(float(np.mean(pos)), 1e-3), 1.0 - 1e-3)
    b1 = np.zeros(spec.x1.shape[1])
    b1[0] = math.log(frac / (1.0 - frac))
    b2 = np.zeros(spec.x2.shape[1])
    b2[0] = math.log(float(np.mean(y[pos])))
    return CoefVector(beta1=b1, beta2=b2, xi=xi_start)


def fit_mle(
    y,
    y_trunc: float,
    spec: ModelSpec,
    init: CoefVector | None = None,
    *,
    fix_xi: float | None = None,
    gtol: float = 1e-6,
    ftol: float = 1e-10,
    max_iter: int = 500,
    keep_trace: bool = False,
    retry_seed: int = 0,
) -> FitResult:
    """Fit the mixture model by maximum likelihood.

    Parameters
    ----------
    y : array_like
        Response vector; each entry 0 or > ``y_trunc``.
    y_trunc : float
        Known recording threshold.
    spec : ModelSpec
        Design matrices for both parts.
    init : CoefVector, optional
        Starting coefficients. Defaults to the logit of the positive
        fraction / log of the positive mean for the intercepts, zeros for
        the remaining coefficients, and xi = 0.1.
    fix_xi : float, optional
        Freeze the shape at this value instead of estimating it.
    gtol, ftol, max_iter :
        Convergence controls: gradient max-norm and relative likelihood
        change, and the iteration cap.
    keep_trace : bool
        Record (iteration, loglik, gradient-norm) triples.
    retry_seed : int
        Seed for the single perturbed restart used when the first pass does
        not converge.

    The fit is deterministic given (data, init, options). If the optimizer
    does not converge after the perturbed retry, the result is returned with
    ``converged=False`` and NaN standard errors.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != spec.n:
        raise ValueError(f"response length {y.shape} does not match design n={spec.n}")
    bad = (y < 0.0) | ((y > 0.0) & (y <= y_trunc)) | ~np.isfinite(y)
    if np.any(bad):
        row = int(np.argmax(bad))
        raise ValueError(
            f"row {row}: response {y[row]} is neither 0 nor above the "
            f"truncation threshold {y_trunc}"
        )
    n_pos = int(np.sum(y > 0.0))
    n_zero = y.size - n_pos
    p1, p2 = spec.x1.shape[1], spec.x2.shape[1]
    if n_zero == 0:
        raise ValueError("response contains no zeros; the mixture part is degenerate")
    if n_pos == 0:
        raise ValueError("response contains no positive observations")
    if n_pos < p2 + 1:
        raise ValueError(
            f"need at least {p2 + 1} positive observations for {p2} mean "
            f"coefficients plus the shape, got {n_pos}"
        )
    for label, x in (("x1", spec.x1), ("x2", spec.x2)):
        if np.linalg.matrix_rank(x) < x.shape[1]:
            raise ValueError(f"design matrix {label} is rank deficient")

    if init is None:
        init = _default_start(y, spec, 0.1 if fix_xi is None else fix_xi)
    if init.beta1.size != p1 or init.beta2.size != p2:
        raise ValueError("starting coefficients do not match the design dimensions")

    def unpack(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        b1 = theta[:p1]
        b2 = theta[p1 : p1 + p2]
        if fix_xi is not None:
            return b1, b2, fix_xi
        t = theta[p1 + p2]
        # exp would overflow below -700; such probes are rejected anyway
        xi = 1.0 - math.exp(-t) if t > -700.0 else -math.inf
        return b1, b2, xi

    def objective(theta: np.ndarray) -> float:
        b1, b2, xi = unpack(theta)
        if not np.isfinite(xi) or xi >= 1.0:
            return -np.inf
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            pi = expit(spec.x1 @ b1)
            mu = np.exp(spec.x2 @ b2)
            terms = _loglik_terms(y, pi, mu, xi, y_trunc)
        if not np.all(np.isfinite(terms)):
            return -np.inf
        return math.fsum(terms)

    theta0 = np.concatenate([init.beta1, init.beta2])
    if fix_xi is None:
        xi0 = min(init.xi, 1.0 - 1e-12)
        theta0 = np.append(theta0, -math.log1p(-xi0))
    if not np.isfinite(objective(theta0)):
        raise ValueError("log-likelihood is not finite at the starting coefficients")

    attempts = [theta0]
    rng = np.random.default_rng(retry_seed)
    attempts.append(theta0 + rng.normal(0.0, 0.1, size=theta0.size))

    best = None
    iterations_total = 0
    trace: tuple[tuple[int, float, float], ...] = ()
    for start in attempts:
        try:
            xhat, fval, grad, ok, its, tr = _maximize_bfgs(
                objective, start, gtol, ftol, max_iter, keep_trace
            )
        except ValueError:
            # Start or a gradient probe left the feasible region.
            continue
        iterations_total += its
        if best is None or fval > best[1] or (ok and not best[3]):
            best = (xhat, fval, grad, ok)
            trace = tr
        if ok:
            break

    if best is None:
        # Both starts failed before the first step; report the initial point.
        best = (theta0, objective(theta0), np.full(theta0.size, np.nan), False)
    xhat, fval, _, converged = best
    b1, b2, xi = unpack(xhat)
    coef = CoefVector(beta1=b1, beta2=b2, xi=xi)

    k = p1 + p2 + 1
    cov = np.full((k, k), np.nan)
    se = np.full(k, np.nan)
    if converged:
        cov_theta, ok = _covariance(objective, xhat)
        if ok:
            if fix_xi is None:
                # Delta method for xi = 1 - exp(-theta): d(xi)/d(theta) = 1 - xi
                jac = np.ones(xhat.size)
                jac[-1] = 1.0 - xi
                cov = cov_theta * np.outer(jac, jac)
            else:
                cov = np.zeros((k, k))
                cov[: k - 1, : k - 1] = cov_theta
            se = np.sqrt(np.diag(cov))
        else:
            converged = False

    return FitResult(
        coef=coef,
        se=se,
        cov=cov,
        loglik=fval,
        n_zero=n_zero,
        n_pos=n_pos,
        converged=converged,
        iterations=iterations_total,
        names1=spec.names1,
        names2=spec.names2,
        y_trunc=float(y_trunc),
        xi_fixed=fix_xi is not None,
        trace=trace if keep_trace else None,
    )


def _covariance(objective, xhat: np.ndarray) -> tuple[np.ndarray, bool]:
    """Inverse negative Hessian at the optimum; flags indefinite information."""
    try:
        H = numeric_hessian(objective, xhat)
    except ValueError:
        return np.empty(0), False
    info = -H
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        return np.empty(0), False
    return np.linalg.inv(info), True


def confidence_interval(fit: FitResult, level: float = 0.95) -> np.ndarray:
    """Normal-theory intervals estimate +/- z_{(1+level)/2} * se, one row per
    parameter in (beta1, beta2, xi) order."""
    if not fit.converged:
        raise ValueError("confidence intervals require a converged fit")
    if not (0.0 < level < 1.0):
        raise ValueError(f"level must lie in (0, 1), got {level}")
    z = norm_ppf((1.0 + level) / 2.0)
    est = fit.estimates
    return np.column_stack([est - z * fit.se, est + z * fit.se])


def wald_test(fit: FitResult) -> list[TestResult]:
    """Two-sided normal tests, one per regression coefficient (both parts)."""
    if not fit.converged:
        raise ValueError("Wald tests require a converged fit")
    k = fit.coef.beta1.size + fit.coef.beta2.size
    est = fit.estimates[:k]
    se = fit.se[:k]
    if np.any(se == 0.0):
        j = int(np.argmax(se == 0.0))
        raise ValueError(f"zero standard error for {fit.param_names[j]}")
    out = []
    for b, s in zip(est, se):
        z = b / s
        out.append(TestResult(statistic=float(z), p_value=2.0 * norm_sf(abs(z)), kind="wald"))
    return out


def lrt(full: FitResult, reduced: FitResult) -> TestResult:
    """Likelihood-ratio test of a reduced model nested in a full one.

    Nesting is checked by column names per part and by matching data
    signatures (n, zero/positive split, truncation threshold).
    """
    for part, f_names, r_names in (
        ("pi", full.names1, reduced.names1),
        ("mu", full.names2, reduced.names2),
    ):
        missing = set(r_names) - set(f_names)
        if missing:
            raise ValueError(
                f"models are not nested: {part} part of the reduced model has "
                f"columns {sorted(missing)} absent from the full model"
            )
    if (full.n_zero, full.n_pos, full.y_trunc) != (
        reduced.n_zero,
        reduced.n_pos,
        reduced.y_trunc,
    ):
        raise ValueError("models were fitted to different data")
    df = full.n_free_params - reduced.n_free_params
    stat = 2.0 * (full.loglik - reduced.loglik)
    if stat < -1e-8:
        raise ValueError(
            f"likelihood ratio statistic {stat} is negative: the models are "
            "not nested or a fit did not converge"
        )
    stat = max(stat, 0.0)
    return TestResult(statistic=stat, p_value=chi2_sf(stat, df), kind="lrt", df=df)
