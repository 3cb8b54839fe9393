"""
How much confounding should you plan for? Dropped-covariate audit
=================================================================

A practical way to anchor the sensitivity level: refit the propensity
model with each observed covariate removed and look at the induced
odds-ratio spread per unit. If you believe no unobserved confounder is
more informative about treatment choice than, say, the strongest
observed covariate, the spread of that covariate's ratios suggests the
largest gamma worth defending against.
"""

import numpy as np

from crpolicy import Dataset, odds_ratio_audit

rng = np.random.default_rng(0)
n = 4000


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


# Selection driven strongly by x0, weakly by x1, not at all by x2.
X = rng.standard_normal((n, 3))
e = sigmoid(1.5 * X[:, 0] + 0.4 * X[:, 1])
T = (rng.random(n) < e).astype(int)
data = Dataset(X=X, T=T, Y=np.zeros(n), m=2)

ratios = odds_ratio_audit(data)
print("per-covariate odds-ratio quantiles (drop the covariate, refit, compare):")
print(f"{'covariate':>10s} {'2.5%':>8s} {'50%':>8s} {'97.5%':>8s}")
for j, name in enumerate(["x0", "x1", "x2"]):
    lo, mid, hi = np.percentile(ratios[j], [2.5, 50, 97.5])
    print(f"{name:>10s} {lo:8.3f} {mid:8.3f} {hi:8.3f}")

print("\nReading: dropping the strong driver x0 swings the per-unit odds by a")
print("large factor, the weak driver x1 by a small one, and the irrelevant x2")
print("not at all. An unobserved confounder 'no stronger than x1' motivates a")
print("gamma around the x1 row's spread; fortify to the x0 row only if such a")
print("powerful hidden driver is plausible.")
