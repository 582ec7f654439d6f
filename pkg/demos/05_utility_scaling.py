"""Exponential-utility scaling: the efficient scheme minimizes the limit objective.

With risk aversion alpha and cost coefficient kappa tied by
alpha^{(6-2b)/(2-b)} kappa^{2/(2-b)} = mu, the surrogate
alpha kappa E[C] + (alpha^2/2) E[<Z>] converges to mu_hat (here 2.0 at
mu = 12, beta = 0) when the barrier width is the optimal eps = nu/alpha,
and is strictly worse at perturbed widths.
"""

from hedgesim import ModelSpec, UtilityParams, mu_hat, nu, scaled_utility_experiment
from hedgesim.models import BM

params = UtilityParams(mu=12.0, beta=0.0, alpha=50.0)
model = ModelSpec(kind=BM, T=1.0, dt=4.8e-5)
print(f"mu = {params.mu}, beta = {params.beta}, alpha = {params.alpha}")
print(f"implied kappa = {params.kappa:.3e}, optimal eps = nu/alpha = {nu(12.0, 0.0)/50:.5f}")
print(f"target mu_hat = {mu_hat(12.0, 0.0)}")
print()
print(f"{'eps factor':>11} {'surrogate':>10} {'utility 1-E[exp]':>17}")
for f in (0.5, 1.0, 2.0):
    rep = scaled_utility_experiment(model, params, 1000, seed=31, workers=2,
                                    eps_factor=f)
    util = "overflow" if rep.utility_estimate is None else f"{rep.utility_estimate:+.2f}"
    star = "  <- optimal" if f == 1.0 else ""
    print(f"{f:>11.1f} {rep.surrogate:>10.4f} {util:>17}{star}")
print()
print("the exponential-utility diagnostic is negative under the printed sign")
print("convention (1 - E[exp{C + V/2}] with a positive exponent); the linear")
print("surrogate is the quantity the scaling theory pins down.")
