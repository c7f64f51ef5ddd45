"""Return probabilities and local time at the origin, exactly and asymptotically.

The walk here is the boundary walk seen from the origin: it moves 0 -> 1
with probability ``p``, 0 -> cemetery with probability ``p_kill`` (zero in
the killing-free case) and otherwise stays at 0. ``F_k = P(X_k = 0)`` with
``X_0 = 0``.

Four ways of producing F_k are offered:

``ExactDP``
    propagates the exact law on sites 0..K; ground truth.
``NaiveRenewal``
    ``F_k = (1-p)^k + sum_j h_j F_{k-2j}``. It only counts paths that leave
    the origin at time 0 or never, so it undercounts from k = 3 on.
``CorrectedRenewal``
    first-return decomposition ``F_k = (1-p)F_{k-1} + sum_j h_j F_{k-2j}``;
    agrees with ``ExactDP``.
``Asymptotic``
    ``k^{-3/2} / (sqrt(2 pi) (1-p)^2)``, reported as is. It is not a valid
    approximation for this walk (the killing-free walk is null recurrent), so
    tables built with it carry a disclaimer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from halfline.series import SeriesPoly, sqrt_one_minus_x


class ReturnMethod(str, enum.Enum):
    EXACT_DP = "dp"
    NAIVE_RENEWAL = "naive"
    CORRECTED_RENEWAL = "corrected"
    ASYMPTOTIC = "asymptotic"


ASYMPTOTIC_DISCLAIMER = (
    "k^-3/2 / (sqrt(2 pi) (1-p)^2) is reported verbatim; it is inconsistent with "
    "the finite value F(1) of the same generating function and is not asserted"
)


@dataclass(frozen=True)
class ReturnProbTable:
    p: float
    values: np.ndarray
    method: ReturnMethod
    p_kill: float = 0.0
    disclaimer: str | None = None

    @property
    def K(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k: int):
        return self.values[k]


def _check_p(p, p_kill=0.0):
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if p_kill < 0 or p + p_kill > 1:
        raise ValueError("need p_kill >= 0 and p + p_kill <= 1")


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    """C_n = binom(2n, n) / (n + 1), as an exact integer."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.comb(2 * n, n) // (n + 1)


def catalan_weight(j: int):
    """C_{j-1} / 4^{j-1}, the chance that the walk started at 1 first hits 0 at step 2j-1, times 2."""
    return catalan(j - 1) / 4 ** (j - 1)


def first_return_mass(j: int, p):
    """h_j: probability of leaving 0 at once and first returning at time 2j."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if isinstance(p, Fraction):
        return p / 2 * Fraction(catalan(j - 1), 4 ** (j - 1))
    return p / 2 * catalan_weight(j)


def weighted_catalan_sum(J: int) -> float:
    """sum_{j=1}^{J} C_{j-1} / 4^{j-1}; tends to 2, but only like 2 - 2/sqrt(pi J)."""
    terms, w = [], 1.0
    for j in range(1, J + 1):
        terms.append(w)
        w *= (2 * j - 1) / (2 * (j + 1))  # C_j / (4 C_{j-1})
    return math.fsum(terms)


def _zero_one(p):
    return (Fraction(0), Fraction(1)) if isinstance(p, Fraction) else (0.0, 1.0)


def _exact_dp(p, K, p_kill):
    zero, one = _zero_one(p)
    stay = one - p - p_kill
    half = one / 2
    dtype = object if isinstance(p, Fraction) else np.float64
    v = np.full(K + 2, zero, dtype=dtype)
    v[0] = one
    out = [v[0]]
    for _ in range(K):
        w = np.full_like(v, zero)
        w[0] = stay * v[0] + half * v[1]
        w[1] = p * v[0] + half * v[2]
        w[2:-1] = half * (v[1:-2] + v[3:])
        v = w
        out.append(v[0])
    return out


def _renewal(p, K, p_kill, corrected):
    zero, one = _zero_one(p)
    stay = one - p - p_kill
    h = [zero] + [first_return_mass(j, p) for j in range(1, K // 2 + 1)]
    F = [one]
    for k in range(1, K + 1):
        acc = stay * F[k - 1] if corrected else stay**k
        for j in range(1, k // 2 + 1):
            acc += h[j] * F[k - 2 * j]
        F.append(acc)
    return F


def return_probabilities(p, K: int, method=ReturnMethod.EXACT_DP, p_kill=0.0) -> ReturnProbTable:
    """Table of F_0..F_K. Pass ``p`` as a Fraction for exact rational arithmetic."""
    method = ReturnMethod(method)
    _check_p(p, p_kill)
    if K < 0:
        raise ValueError("K must be >= 0")
    if isinstance(p, Fraction):
        p_kill = Fraction(p_kill)
    disclaimer = None
    if method is ReturnMethod.EXACT_DP:
        vals = _exact_dp(p, K, p_kill)
    elif method is ReturnMethod.NAIVE_RENEWAL:
        vals = _renewal(p, K, p_kill, corrected=False)
    elif method is ReturnMethod.CORRECTED_RENEWAL:
        vals = _renewal(p, K, p_kill, corrected=True)
    else:
        k = np.arange(K + 1, dtype=np.float64)
        with np.errstate(divide="ignore"):
            vals = k**-1.5 / (math.sqrt(2 * math.pi) * (1 - float(p)) ** 2)
        vals[0] = np.nan
        disclaimer = ASYMPTOTIC_DISCLAIMER
    dtype = object if isinstance(p, Fraction) and method is not ReturnMethod.ASYMPTOTIC else np.float64
    arr = np.array(vals, dtype=dtype)
    arr.setflags(write=False)
    return ReturnProbTable(p, arr, method, p_kill, disclaimer)


def gf_coefficients(which: str, p, K: int) -> SeriesPoly:
    """Truncated generating functions G, H or F_naive by series arithmetic.

    G(x) = 1/(1-(1-p)x) - 1, H(x) = p(1 - sqrt(1-x)),
    F_naive(x) = (G(x) + 1) / (1 - H(x^2)).
    """
    _check_p(p)
    exact = isinstance(p, Fraction)
    one = Fraction(1) if exact else 1.0
    x = SeriesPoly.x(K, exact)
    if which == "G":
        return one / (one - (one - p) * x) - one
    if which == "H":
        root = (one - x).sqrt()
        return p * (one - root)
    if which in ("F", "F_naive"):
        G = gf_coefficients("G", p, K)
        H = gf_coefficients("H", p, K)
        return (G + one) / (one - H.substitute_square())
    raise ValueError(f"unknown generating function {which!r}")


def catalan_series_H(p, K: int) -> SeriesPoly:
    """H from the binomial expansion of sqrt(1-x); cross-check for :func:`gf_coefficients`."""
    exact = isinstance(p, Fraction)
    return p * (1 - sqrt_one_minus_x(K, exact))


def expected_local_time(p, n: int, method=ReturnMethod.EXACT_DP, p_kill=0.0):
    """E[number of k in 0..n with X_k = 0] = sum_{k<=n} F_k."""
    table = return_probabilities(p, n, method, p_kill)
    if isinstance(p, Fraction) and table.values.dtype == object:
        return sum(table.values, Fraction(0))
    return math.fsum(table.values)


# zeta(3/2) -------------------------------------------------------------------

_BERNOULLI = (Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30), Fraction(5, 66))


def zeta(s: float, cutoff: int = 64) -> float:
    """Riemann zeta for real s > 1 by direct summation plus Euler-Maclaurin tail."""
    if s <= 1:
        raise ValueError("series only converges for s > 1")
    M = cutoff
    head = math.fsum(k**-s for k in range(1, M))
    tail = M ** (1 - s) / (s - 1) + 0.5 * M**-s
    rising = s  # s (s+1) ... (s+2j-2)
    fact = 2
    for j, b in enumerate(_BERNOULLI, start=1):
        tail += float(b) / fact * rising * M ** (-s - 2 * j + 1)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return head + tail


ZETA_3_2 = zeta(1.5)


@dataclass(frozen=True)
class LocalTimeBound:
    p: float
    n: int
    gamma: float | None
    value: float


def local_time_upper_bound(p: float, n: int, gamma: float | None = None) -> LocalTimeBound:
    """Evaluate 1/p + p/(sqrt(2 pi)(1-p)^2) * (-zeta(3/2) + 2 sqrt(2)/sqrt(n)).

    Reported, not trusted: the bracket is negative for n >= 2, so the value
    can fall below the true expected local time.
    """
    _check_p(p)
    if n < 1:
        raise ValueError("n must be >= 1")
    coef = p / (math.sqrt(2 * math.pi) * (1 - p) ** 2)
    value = 1 / p + coef * (-ZETA_3_2 + 2 * math.sqrt(2) / math.sqrt(n))
    return LocalTimeBound(p, n, gamma, value)


def bound_exponents(alpha: float, beta: float) -> tuple[float, float, float]:
    """N-exponents (min(alpha, beta), -beta, -beta - 1/2) of the walk-level bound."""
    return (min(alpha, beta), -beta, -beta - 0.5)


def walk_local_time_bound(params, n: int) -> LocalTimeBound:
    """Bound with 1 - p replaced by the walk's stay probability at 0."""
    bound = local_time_upper_bound(params.departure_prob, n)
    return LocalTimeBound(bound.p, n, min(params.alpha, params.beta), bound.value)


def local_time_comparison(p: float, ns, p_kill: float = 0.0) -> list[dict]:
    """Rows (n, exact E[L_n], bound value, bound - exact) for reporting."""
    ns = sorted(set(int(n) for n in ns))
    if not ns:
        return []
    table = return_probabilities(p, ns[-1], ReturnMethod.EXACT_DP, p_kill)
    cums = np.cumsum(table.values)
    rows = []
    for n in ns:
        bound = local_time_upper_bound(p + p_kill, n).value
        exact = float(cums[n])
        rows.append({"n": n, "exact": exact, "bound": bound, "gap": bound - exact, "bound_holds": bound >= exact})
    return rows
