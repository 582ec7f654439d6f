"""Exact moments of finitely supported laws and kurtosis-skewness inequalities.

Everything in this module is deterministic: distributions are finite lists of
(value, weight) atoms and all moments are exact weighted power sums, so the
inequality margins can be asserted to machine precision in tests instead of
being estimated from samples.

Moment sums and the inequality margins are evaluated in extended precision
(``np.longdouble``) internally.  The margins are differences of O(m4) terms
that collapse to O(1); at the edge of the tested range (values around e^5)
plain float64 cancellation noise exceeds the 1e-12 equality tolerance, while
80-bit arithmetic keeps it below 1e-14.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_LD = np.longdouble

# Tolerances used by the invariant checks (absolute, quantities O(1)).
WEIGHT_TOL = 1e-12
CENTER_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDistribution:
    """A finitely supported probability law given as (value, weight) atoms.

    Weights must be strictly positive and sum to one (within 1e-12), and the
    support must contain at least two distinct values so that the centered law
    has positive variance.
    """

    atoms: tuple[tuple[float, float], ...]

    def __init__(self, atoms):
        object.__setattr__(self, "atoms", tuple((float(v), float(w)) for v, w in atoms))
        self._validate()

    def _validate(self) -> None:
        if len(self.atoms) < 2:
            raise ValueError("need at least 2 atoms")
        values = [v for v, _ in self.atoms]
        weights = [w for _, w in self.atoms]
        if any(not math.isfinite(v) for v in values):
            raise ValueError("atom values must be finite")
        if any(w <= 0.0 or not math.isfinite(w) for w in weights):
            raise ValueError("atom weights must be positive")
        total = math.fsum(weights)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"atom weights sum to {total!r}, expected 1")
        if len(set(values)) < 2:
            raise ValueError("zero variance: support has a single value")

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def mean(self) -> float:
        return float(np.dot(self.values.astype(_LD), self.weights.astype(_LD)))

    def scaled(self, c: float) -> "DiscreteDistribution":
        """Law of c*X (weights unchanged)."""
        return DiscreteDistribution([(c * v, w) for v, w in self.atoms])


@dataclass(frozen=True)
class MomentSet:
    """Centered moments m2, m3, m4 plus E|X| and E|X|^beta of one law.

    Only meaningful for a centered law (mean zero within 1e-12).  Fields may
    hold extended-precision scalars when produced by :func:`exact_moments`.
    """

    m2: float
    m3: float
    m4: float
    abs1: float
    abs_beta: float
    beta: float

    def __post_init__(self):
        if not self.m2 > 0.0:
            raise ValueError("m2 must be positive")
        # Jensen: E[X^4] >= E[X^2]^2 and E|X| <= sqrt(E[X^2]); small relative
        # slack admits hand-built float64 moment sets.
        if self.m4 < self.m2**2 * (1.0 - 1e-12):
            raise ValueError("m4 < m2^2 is not realizable")
        if self.abs1 > math.sqrt(float(self.m2)) * (1.0 + 1e-12):
            raise ValueError("abs1 > sqrt(m2) is not realizable")
        if self.abs1 <= 0.0 or self.abs_beta <= 0.0:
            raise ValueError("absolute moments must be positive")


def center(dist: DiscreteDistribution) -> DiscreteDistribution:
    """Shift atom values by the mean so the returned law has mean zero.

    Weights are unchanged.  Raises ValueError("zero variance") if the shifted
    law would be degenerate.
    """
    mu = dist.mean()
    shifted = [(v - mu, w) for v, w in dist.atoms]
    if len({v for v, _ in shifted}) < 2:
        raise ValueError("zero variance")
    out = DiscreteDistribution(shifted)
    if abs(out.mean()) > CENTER_TOL:
        # one more pass kills the float residual left by large-magnitude atoms
        out = center(out)
    return out


def exact_moments(dist: DiscreteDistribution, beta: float) -> MomentSet:
    """Exact centered moments of a centered law, including E|X|^beta.

    Parameters
    ----------
    dist : DiscreteDistribution
        Must already be centered (mean zero within 1e-12); use :func:`center`.
    beta : float
        Exponent for the fractional absolute moment, in [0, 2).  The
        convention 0^0 := 1 applies, so beta = 0 gives E[1_{|X|>=0}] = 1.

    Returns
    -------
    MomentSet
        Extended-precision weighted power sums.
    """
    if not 0.0 <= beta < 2.0:
        raise ValueError(f"beta must be in [0, 2), got {beta}")
    mu = dist.mean()
    if abs(mu) > CENTER_TOL:
        raise ValueError(f"distribution not centered (mean = {mu!r})")
    v = dist.values.astype(_LD)
    w = dist.weights.astype(_LD)
    # Re-center in extended precision: removes the O(1e-16) residual mean of
    # float64 atoms, which otherwise leaks into the equality-case margins.
    v = v - np.dot(v, w)
    m2 = np.dot(v**2, w)
    if not m2 > 0.0:
        raise ValueError("zero variance")
    a = np.abs(v)
    if beta == 0.0:
        abs_beta = _LD(1.0)
    else:
        abs_beta = np.dot(a**_LD(beta), w)
    return MomentSet(
        m2=m2,
        m3=np.dot(v**3, w),
        m4=np.dot(v**4, w),
        abs1=np.dot(a, w),
        abs_beta=abs_beta,
        beta=beta,
    )


def bernoulli_distribution(x: float) -> DiscreteDistribution:
    """Two-point law with atoms e^x and -e^{-x}, mean 0 and unit variance.

    The weight on e^x is 1/(1 + e^{2x}).  This one-parameter family realizes
    every centered two-point law up to scale; x = 0 is the symmetric case and
    the skewness grows with |x| (m3 = 2 sinh x).
    """
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    t = math.exp(-2.0 * abs(x))
    # both weights in directly-rounded form; 1 - w would cancel badly for x < 0
    if x >= 0.0:
        w_up, w_dn = t / (1.0 + t), 1.0 / (1.0 + t)
    else:
        w_up, w_dn = 1.0 / (1.0 + t), t / (1.0 + t)
    dist = DiscreteDistribution([(math.exp(x), w_up), (-math.exp(-x), w_dn)])
    m = exact_moments(dist, 1.0)
    assert abs(dist.mean()) <= CENTER_TOL and abs(float(m.m2) - 1.0) <= 1e-12
    return dist


def pearson_gap(m: MomentSet) -> float:
    """Kurtosis minus squared skewness: m4/m2^2 - m3^2/m2^3.

    At least 1 for every centered law, with equality exactly on two-point
    laws.
    """
    if not m.m2 > 0.0:
        raise ValueError("m2 must be positive")
    m2, m3, m4 = _LD(m.m2), _LD(m.m3), _LD(m.m4)
    return float(m4 / m2**2 - m3**2 / m2**3)


def fukasawa_gap(m: MomentSet) -> float:
    """LHS minus RHS of the refined bound m4/m2^2 - (3/4) m3^2/m2^3 >= m2/E|X|^2.

    Nonnegative for every centered law; zero on two-point laws (and on
    two-point laws diluted with an atom at zero, which leave both sides
    unchanged after renormalization).
    """
    if not m.m2 > 0.0:
        raise ValueError("m2 must be positive")
    if not m.abs1 > 0.0:
        raise ValueError("abs1 must be positive")
    m2, m3, m4, a1 = _LD(m.m2), _LD(m.m3), _LD(m.m4), _LD(m.abs1)
    return float(m4 / m2**2 - 0.75 * m3**2 / m2**3 - m2 / a1**2)


def ks1_margin(m: MomentSet) -> float:
    """Margin of the kurtosis-skewness bound with the E|X|^beta norm, beta in [0,1).

    Evaluates m4/m2^2 - (3/4) m3^2/m2^3 - m2^{beta/(2-beta)} / abs_beta^{2/(2-beta)}
    using the beta the moment set was built with.  Nonnegative for every
    centered law; zero iff the law is symmetric two-point (up to an atom at
    zero when beta > 0).
    """
    if not 0.0 <= m.beta < 1.0:
        raise ValueError(f"ks1 requires beta in [0, 1), got {m.beta}")
    if not (m.m2 > 0.0 and m.abs_beta > 0.0):
        raise ValueError("m2 and abs_beta must be positive")
    m2, m3, m4 = _LD(m.m2), _LD(m.m3), _LD(m.m4)
    lhs = m4 / m2**2 - 0.75 * m3**2 / m2**3
    rhs = np.exp((_LD(m.beta) * np.log(m2) - 2.0 * np.log(_LD(m.abs_beta))) / _LD(2.0 - m.beta))
    return float(lhs - rhs)


def ks20_margin(m: MomentSet, alpha: float) -> float:
    """Margin of the alpha-interpolated kurtosis-skewness bound, beta in [0, 2).

    Evaluates m4/m2^2 - alpha m3^2/m2^3 - (1-alpha) m2^{b/(2-b)}/abs_beta^{2/(2-b)}
    minus alpha.  Nonnegative for every centered law; zero iff symmetric
    two-point (same zero-atom caveat as :func:`ks1_margin`).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not 0.0 <= m.beta < 2.0:
        raise ValueError(f"beta must be in [0, 2), got {m.beta}")
    if not (m.m2 > 0.0 and m.abs_beta > 0.0):
        raise ValueError("m2 and abs_beta must be positive")
    m2, m3, m4 = _LD(m.m2), _LD(m.m3), _LD(m.m4)
    a = _LD(alpha)
    holder = np.exp((_LD(m.beta) * np.log(m2) - 2.0 * np.log(_LD(m.abs_beta))) / _LD(2.0 - m.beta))
    lhs = m4 / m2**2 - a * m3**2 / m2**3 - (1.0 - a) * holder
    return float(lhs - a)


def _log_cosh(y: float) -> float:
    # log cosh(y), stable for any magnitude of y
    y = abs(y)
    return y + math.log1p(math.exp(-2.0 * y)) - math.log(2.0)


def g(x: float, beta: float) -> float:
    """Shape factor cosh((beta-1) x) * cosh(x)^{1-beta} of the two-point family.

    g(0) = 1, g''(0) = (1-beta)(2-beta), and for beta in (1,2) the power
    g^{-2/(2-beta)} tends to 4 as |x| grows.  Computed through log-cosh so
    large |x| does not overflow intermediates.
    """
    return math.exp(_log_cosh((beta - 1.0) * x) + (1.0 - beta) * _log_cosh(x))


def bernoulli_ratio(x: float, alpha: float, beta: float) -> float:
    """Normalized kurtosis-skewness functional evaluated on the two-point family.

    For the law :func:`bernoulli_distribution`(x) this returns
    abs_beta^{2/(2-beta)} / m2^{beta/(2-beta)} * (m4/m2^2 - alpha m3^2/m2^3)
    in closed form.  Equals 1 at x = 0; for beta in (1,2) it tends to
    1 - alpha as |x| grows, and it exceeds 1 - alpha everywhere.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if not 0.0 <= beta < 2.0:
        raise ValueError(f"beta must be in [0, 2), got {beta}")
    if x == 0.0:
        return 1.0
    ln_g_pow = (2.0 / (2.0 - beta)) * (_log_cosh((beta - 1.0) * x) + (1.0 - beta) * _log_cosh(x))
    sech2 = math.exp(-2.0 * _log_cosh(x))
    return math.exp(ln_g_pow) * (4.0 * (1.0 - alpha) + (4.0 * alpha - 3.0) * sech2)


def efficiency_factor(x: float, beta: float) -> float:
    """Asymptotic efficiency ratio F(x, beta) of the asymmetric-barrier scheme.

    F(x, beta) = (4 cosh^2 x - 1) / (3 cosh(x)^{2/(2-beta)} cosh((beta-1)x)^{-2/(2-beta)}).

    F(0) = 1 and F -> 1/3 as |x| -> infinity for beta in (1, 2); it coincides
    with :func:`bernoulli_ratio` at alpha = 2/3.
    """
    if beta == 2.0:
        raise ValueError("beta = 2 makes the exponent singular")
    if x == 0.0:
        return 1.0
    lc = _log_cosh(x)
    # ln(4 cosh^2 x - 1) = ln(2 cosh 2x + 1), kept in log space
    big = math.log(2.0) + _log_cosh(2.0 * x)
    ln_num = big + math.log1p(math.exp(-big))
    ln_den = math.log(3.0) + (2.0 / (2.0 - beta)) * (lc - _log_cosh((beta - 1.0) * x))
    return math.exp(ln_num - ln_den)
