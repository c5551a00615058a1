# Generalized Pareto kernels: the two parameterizations, the position of the
# mean, and what conditioning on a threshold does to the distribution.

import numpy as np

from zitpo import (
    GpdMean,
    GpdScale,
    excess_distribution,
    gpd_cdf,
    gpd_pdf,
    gpd_quantile,
    mean_over_threshold,
    mean_quantile_level,
    rtrunc_gpd,
)

# A listening-time-like distribution: mean 59 minutes, mild tail.
law = GpdMean(mu=59.0, xi=0.082)
print("scale form:", law.to_scale())

# The mean always sits at the same probability level, whatever mu is.
print("\nP(Y <= mean):")
for mu in (25.0, 50.0, 100.0):
    print(f"  mu={mu:5.1f}  ->  {gpd_cdf(mu, GpdMean(mu, 0.082)):.4f}")
print("closed form  ->  %.4f" % mean_quantile_level(0.082))

# Quantiles invert the CDF.
for q in (0.25, 0.5, 0.9, 0.99):
    y = gpd_quantile(q, law)
    print(f"q={q:.2f}: y={y:8.2f}  (check cdf={gpd_cdf(y, law):.4f})")

# Density decreases monotonically from 1/tau at the origin.
ys = np.array([0.0, 10.0, 59.0, 200.0])
print("\ndensity:", np.round(gpd_pdf(ys, law), 5))

# Heavy listeners: condition on Y > 120 minutes. The conditional law is
# again generalized Pareto with the same shape and a shifted scale.
heavy = excess_distribution(law.to_scale(), 120.0)
print("\nconditional on Y > 120:", heavy)
print("conditional mean:", mean_over_threshold(law, 120.0))

# Monte-Carlo check of the conditional mean.
rng = np.random.default_rng(0)
draws = rtrunc_gpd(1.0 - rng.random(200_000), 59.0, 0.082, 0.0)
print("simulated     :", draws[draws > 120.0].mean().round(3))
