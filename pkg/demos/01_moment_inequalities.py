"""Kurtosis-skewness inequalities on exact discrete laws.

Every quantity here is an exact weighted sum over finitely many atoms, so the
inequalities can be watched holding to machine precision, including their
equality cases on the two-point (Bernoulli) family.
"""

import numpy as np

from hedgesim import (
    DiscreteDistribution,
    bernoulli_distribution,
    center,
    exact_moments,
    fukasawa_gap,
    ks1_margin,
    ks20_margin,
    pearson_gap,
)

rng = np.random.default_rng(7)

print("random centered laws: margins are never negative")
print(f"{'atoms':>5} {'pearson-1':>12} {'fukasawa':>12} {'ks1(b=.5)':>12} {'ks20(a=.5,b=1.5)':>17}")
for _ in range(8):
    n = rng.integers(2, 7)
    values = rng.uniform(-3, 3, n)
    weights = rng.uniform(0.1, 1, n)
    d = center(DiscreteDistribution(list(zip(values, weights / weights.sum()))))
    m = exact_moments(d, 0.5)
    m15 = exact_moments(d, 1.5)
    print(f"{n:>5} {pearson_gap(m) - 1:>12.3e} {fukasawa_gap(m):>12.3e} "
          f"{ks1_margin(m):>12.3e} {ks20_margin(m15, 0.5):>17.3e}")

print()
print("two-point family e^x / -e^{-x}: the extremal case")
print(f"{'x':>5} {'pearson_gap':>14} {'fukasawa_gap':>14} {'ks1_margin':>14}")
for x in (0.0, 0.5, 1.0, 2.0, 4.0):
    m = exact_moments(bernoulli_distribution(x), 0.5)
    print(f"{x:>5.1f} {pearson_gap(m):>14.12f} {fukasawa_gap(m):>14.3e} {ks1_margin(m):>14.3e}")
print("pearson_gap pins to 1 on every two-point law; fukasawa_gap to 0;")
print("ks1_margin to 0 only at the symmetric point x = 0.")
