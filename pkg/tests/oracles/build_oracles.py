"""Regenerate frozen.json: reference numbers computed without the package.

Run from the repository root:  python3 tests/oracles/build_oracles.py
Every value here comes from a method that shares no code with halfline.
"""

import itertools
import json
import math
from fractions import Fraction
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40
OUT = Path(__file__).with_name("frozen.json")


def enumerate_return_probs(p: Fraction, K: int, p_kill: Fraction = Fraction(0)):
    """P(X_k = 0) by summing over every path of length k (exponential, tiny k only)."""
    stay = 1 - p - p_kill
    out = []
    for k in range(K + 1):
        total = Fraction(0)
        # each step is a symbol: at 0 -> 'S' stay / 'U' up (kill paths never return);
        # in the bulk -> '+' or '-'
        def walk(x, remaining, prob):
            nonlocal total
            if remaining == 0:
                if x == 0:
                    total += prob
                return
            if x == 0:
                walk(0, remaining - 1, prob * stay)
                walk(1, remaining - 1, prob * p)
            else:
                if x - 1 <= remaining - 1:
                    walk(x - 1, remaining - 1, prob / 2)
                if x + 1 <= remaining - 1:
                    walk(x + 1, remaining - 1, prob / 2)

        walk(0, k, Fraction(1))
        out.append(total)
    return out


def srw_survival(x0_sites: int, steps: int) -> float:
    """P(simple walk from x0 avoids 0 for ``steps`` steps), by forward DP on a dict."""
    dist = {x0_sites: mp.mpf(1)}
    for _ in range(steps):
        new = {}
        for x, pr in dist.items():
            for y in (x - 1, x + 1):
                if y > 0:
                    new[y] = new.get(y, 0) + pr / 2
        dist = new
    return float(mp.fsum(dist.values()))


def gauss(x, t):
    return mp.exp(-x * x / (2 * t)) / mp.sqrt(2 * mp.pi * t)


def bump(x):
    return mp.exp(-((x - 1) ** 2) / (2 * mp.mpf("0.25") ** 2))


def closed(kind, f, x0, t):
    x0, t = mp.mpf(x0), mp.mpf(t)
    sign = 1 if kind == "reflected" else -1
    val = mp.quad(lambda x: f(x) * (gauss(x - x0, t) + sign * gauss(x + x0, t)), [0, x0, x0 + 3, mp.inf])
    if kind == "absorbed":
        val += f(0) * mp.erfc(x0 / mp.sqrt(2 * t))
    return float(val)


def main():
    frozen = {}
    for name, p in (("half", Fraction(1, 2)), ("tenth", Fraction(1, 10))):
        frozen[f"return_probs_{name}"] = [str(v) for v in enumerate_return_probs(p, 12)]
    frozen["return_probs_killed"] = [str(v) for v in enumerate_return_probs(Fraction(1, 4), 10, Fraction(1, 8))]

    # partial sums of C_{j-1}/4^{j-1}: telescoping closed form 2 - 2 binom(2J,J)/4^J
    J = 200
    frozen["catalan_partial_200"] = str(2 - Fraction(2 * math.comb(2 * J, J), 4**J))
    frozen["catalan_partial_200_float"] = float(2 - Fraction(2 * math.comb(2 * J, J), 4**J))

    # first 12 Taylor coefficients of p(1 - sqrt(1-x)) at p = 1/2 via mpmath.taylor
    coeffs = mp.taylor(lambda x: mp.mpf(1) / 2 * (1 - mp.sqrt(1 - x)), 0, 12)
    frozen["H_taylor_half"] = [float(c) for c in coeffs]

    frozen["zeta_3_2"] = float(mp.zeta(1.5))
    p, n = mp.mpf("0.5"), 4
    frozen["bound_half_4"] = float(1 / p + p / (mp.sqrt(2 * mp.pi) * (1 - p) ** 2) * (-mp.zeta(1.5) + 2 * mp.sqrt(2) / mp.sqrt(n)))

    frozen["killed_survival_1_1"] = float(1 - mp.erfc(1 / mp.sqrt(2)))
    # lattice oracle: x0 = 1 at 200 sites per unit, t = 1 -> 40000 steps is too slow in pure
    # Python; 40 sites per unit with 1600 steps keeps the O(1/N) agreement visible
    frozen["srw_survival_40_1600"] = srw_survival(40, 1600)

    cases = []
    for kind in ("reflected", "absorbed", "killed"):
        for t in ("0.25", "0.5", "1"):
            for x0 in ("0.1", "0.5", "1", "2"):
                cases.append({"kind": kind, "t": float(t), "x0": float(x0), "value": closed(kind, bump, x0, t)})
    frozen["closed_form_bump"] = cases
    frozen["absorbed_identity_x"] = closed("absorbed", lambda x: x, "0.7", "0.5")

    OUT.write_text(json.dumps(frozen, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
