"""Discrete generators, the Dynkin martingale and compensator residuals.

Two generators act on functions of the walk:

* the one-step (lattice) generator ``Lhat f(x) = E[f(X_1) - f(x) | X_0 = x]``;
* the diffusively rescaled one, ``L_N = N**2 * Lhat`` acting on f(m/N).

Functions on the state space are :class:`GridFunction` objects; the value at
the cemetery is always 0. Smooth test functions with analytic derivatives
come from :class:`SmoothFunction`, and :func:`bump_for_triple` builds one
that satisfies a given boundary condition at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite_e, polynomial

from halfline.phase import BoundaryTriple, LimitKind, classify
from halfline.walk import CEMETERY, BoundaryParams, LatticeState, PathSample, encode_state, step_distribution

# grid functions --------------------------------------------------------------


@dataclass(frozen=True)
class GridFunction:
    """Values of f on sites 0..M, plus f(cemetery) = 0.

    With ``scaleN`` set, site m stands for the point m/N of the rescaled
    walk; otherwise the function lives on the lattice itself.
    """

    values: np.ndarray = field(repr=False)
    scaleN: int | None = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a non-empty 1-d array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def lattice(cls, g: Callable, M: int) -> "GridFunction":
        """f(m) = g(m) for m = 0..M."""
        return cls(np.asarray(g(np.arange(M + 1)), dtype=np.float64))

    @classmethod
    def project(cls, g: Callable, scaleN: int, L: float) -> "GridFunction":
        """Natural projection f_N(m) = g(m/N) on 0 <= m/N <= L."""
        M = int(math.floor(scaleN * L))
        x = np.arange(M + 1) / scaleN
        vals = np.asarray(g(x), dtype=np.float64)
        if vals.shape == ():
            vals = np.full(M + 1, float(vals))
        return cls(vals, scaleN)

    @property
    def last_site(self) -> int:
        return self.values.shape[0] - 1

    def __call__(self, x: LatticeState) -> float:
        if x is CEMETERY:
            return 0.0
        m = encode_state(x)
        if m > self.last_site:
            raise KeyError(f"f is not defined at site {m} (last site {self.last_site})")
        return float(self.values[m])


def _need_neighbours(f: GridFunction, m: int) -> None:
    if m + 1 > f.last_site:
        raise KeyError(f"f is missing the neighbour {m + 1} of site {m}")


def apply_lattice_generator(params: BoundaryParams, f: GridFunction, x: LatticeState) -> float:
    if x is CEMETERY:
        return 0.0
    m = encode_state(x)
    _need_neighbours(f, m)
    v = f.values
    if m >= 1:
        return 0.5 * (v[m + 1] + v[m - 1] - 2.0 * v[m])
    return params.kill_prob * (0.0 - v[0]) + params.up_prob * (v[1] - v[0])


def apply_rescaled_generator(params: BoundaryParams, f: GridFunction, x: LatticeState) -> float:
    """``N**2`` times the lattice generator at site x, i.e. at the point x/N."""
    if f.scaleN is not None and f.scaleN != params.scaleN:
        raise ValueError(f"f is projected at N={f.scaleN}, walk has N={params.scaleN}")
    N = params.scaleN
    return float(N * N) * apply_lattice_generator(params, f, x)


def lattice_generator_table(params: BoundaryParams, f: GridFunction) -> np.ndarray:
    """Lhat f on sites 0..M-1 (the last site lacks a right neighbour)."""
    v = f.values
    out = np.empty(v.shape[0] - 1)
    if out.size == 0:
        raise KeyError("f needs at least two sites")
    out[0] = apply_lattice_generator(params, f, 0)
    out[1:] = 0.5 * (v[2:] + v[:-2] - 2.0 * v[1:-1])
    return out


def dynkin_increment_mean(params: BoundaryParams, f: GridFunction, x: LatticeState) -> float:
    """E[f(X_1) - f(X_0) | X_0 = x] - Lhat f(x) by enumerating the step law."""
    fx = f(x)
    drift = math.fsum(p * (f(y) - fx) for y, p in step_distribution(params, x))
    return drift - apply_lattice_generator(params, f, x)


@dataclass(frozen=True)
class DynkinRecord:
    path: PathSample
    f: GridFunction
    increments: np.ndarray = field(repr=False)
    martingale_values: np.ndarray = field(repr=False)


def dynkin_martingale(params: BoundaryParams, path: PathSample, f: GridFunction) -> DynkinRecord:
    """M_k = f(X_k) - f(X_0) - sum_{j<k} Lhat f(X_j) along a recorded path."""
    codes = path.states
    top = int(codes.max(initial=0))
    if top + 1 > f.last_site and path.steps > 0:
        raise KeyError(f"path reaches site {top}; f must be defined up to {top + 1}")
    table = np.append(lattice_generator_table(params, f), 0.0) if f.last_site >= 1 else np.zeros(1)
    fv = np.append(f.values, 0.0)  # index -1 -> cemetery
    lf = np.append(table, 0.0)
    fx = fv[codes]
    comp = np.concatenate(([0.0], np.cumsum(lf[codes[:-1]])))
    M = fx - fx[0] - comp
    inc = np.diff(M)
    for a in (inc, M):
        a.setflags(write=False)
    return DynkinRecord(path, f, inc, M)


# smooth test functions -------------------------------------------------------


def _gauss_derivs(x, center, width, order):
    """d^k/dx^k exp(-(x-c)^2 / 2w^2) for k = 0..order."""
    u = (x - center) / width
    g = np.exp(-0.5 * u * u)
    out = []
    for k in range(order + 1):
        coef = np.zeros(k + 1)
        coef[k] = 1.0
        out.append((-1.0 / width) ** k * hermite_e.hermeval(u, coef) * g)
    return out


@dataclass(frozen=True)
class _GaussTerm:
    """coef * x^power * exp(-(x - center)^2 / (2 width^2))."""

    coef: float
    center: float
    width: float
    power: int = 0

    reach_widths = 40.0

    def derivative(self, x, order):
        g = _gauss_derivs(x, self.center, self.width, order)
        mono = polynomial.Polynomial.basis(self.power)
        acc = np.zeros_like(x, dtype=np.float64)
        for k in range(order + 1):
            dm = mono.deriv(k) if k else mono
            acc = acc + math.comb(order, k) * dm(x) * g[order - k]
        return self.coef * acc

    @property
    def reach(self) -> float:
        return self.center + self.reach_widths * self.width


@dataclass(frozen=True)
class _PolyBumpTerm:
    """coef * (1 - u^2)^5 for |u| < 1, u = (x - center)/halfwidth; C^4 with compact support."""

    coef: float
    center: float
    halfwidth: float

    def derivative(self, x, order):
        base = polynomial.Polynomial([1.0, 0.0, -1.0]) ** 5
        d = base.deriv(order) if order else base
        u = (x - self.center) / self.halfwidth
        inside = np.abs(u) < 1
        return self.coef * np.where(inside, d(u), 0.0) / self.halfwidth**order

    @property
    def reach(self) -> float:
        return self.center + self.halfwidth


@dataclass(frozen=True)
class SmoothFunction:
    """Finite sum of Gaussian-type and polynomial-bump terms on [0, inf)."""

    terms: tuple

    def derivative(self, x, order: int = 0):
        if not 0 <= order <= 4:
            raise ValueError("derivatives are available up to order 4")
        x = np.asarray(x, dtype=np.float64)
        return sum((t.derivative(x, order) for t in self.terms), np.zeros_like(x))

    def __call__(self, x):
        return self.derivative(x, 0)

    @property
    def reach(self) -> float:
        """Beyond this point f and its derivatives are below 1e-300 (or exactly 0)."""
        return max(t.reach for t in self.terms)

    def jet0(self) -> tuple[float, float, float]:
        z = np.zeros(1)
        return tuple(float(self.derivative(z, k)[0]) for k in range(3))

    def sup_norm(self, order: int = 0, samples: int = 20001) -> float:
        x = np.linspace(0.0, self.reach, samples)
        return float(np.max(np.abs(self.derivative(x, order))))

    def boundary_residual(self, triple: BoundaryTriple) -> float:
        return triple.residual(*self.jet0())

    def boundary_tolerance(self) -> float:
        return 1e-8 * (self.sup_norm(0) + self.sup_norm(2))

    def project(self, scaleN: int) -> GridFunction:
        return GridFunction.project(self, scaleN, self.reach + 2.0 / scaleN)


def gaussian_bump(center: float = 0.5, width: float = 0.5, coef: float = 1.0) -> SmoothFunction:
    return SmoothFunction((_GaussTerm(coef, center, width),))


def poly_bump(center: float = 1.0, halfwidth: float = 0.75, coef: float = 1.0) -> SmoothFunction:
    return SmoothFunction((_PolyBumpTerm(coef, center, halfwidth),))


def _jet_rows(w):
    # (f, f', f'') at 0 of g, x g, x^2 g with g = exp(-x^2 / 2w^2)
    return np.array([[1.0, 0.0, -1.0 / w**2], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]])


def with_origin_conditions(
    base: SmoothFunction, rows: Sequence[Sequence[float]], targets: Sequence[float], width: float = 0.5
) -> SmoothFunction:
    """Add a correction near 0 so that rows . (f(0), f'(0), f''(0)) = targets.

    The correction is (a + b x + d x^2) exp(-x^2 / 2 width^2) with the
    minimum-norm (a, b, d); its support sits near the origin so the bulk
    shape of ``base`` survives.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    targets = np.asarray(targets, dtype=np.float64)
    jet = np.array(base.jet0())
    basis = _jet_rows(width)  # basis[i] = jet of i-th correction function
    system = rows @ basis.T
    rhs = targets - rows @ jet
    coef, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    extra = tuple(_GaussTerm(float(c), 0.0, width, p) for p, c in enumerate(coef) if c != 0.0)
    return SmoothFunction(base.terms + extra)


def bump_for_triple(
    triple: BoundaryTriple,
    base: SmoothFunction | None = None,
    *,
    flat_origin: bool = False,
    width: float = 0.5,
) -> SmoothFunction:
    """Test function obeying c1 f(0) - c2 f'(0) + (c3/2) f''(0) = 0.

    ``flat_origin`` additionally forces f'(0) = f''(0) = 0.
    """
    base = gaussian_bump() if base is None else base
    c1, c2, c3 = triple.as_tuple()
    rows = [[c1, -c2, 0.5 * c3]]
    targets = [0.0]
    if flat_origin:
        rows += [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        targets += [0.0, 0.0]
    return with_origin_conditions(base, rows, targets, width)


# compensator residuals -------------------------------------------------------


@dataclass(frozen=True)
class CompensatorResidual:
    """h_N(y) = L_N f_N(y) - (1/2) f''(y) on lattice sites y = m/N."""

    regime: LimitKind
    f: GridFunction
    sites: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    def at(self, x: LatticeState) -> float:
        if x is CEMETERY:
            return 0.0
        m = encode_state(x)
        idx = np.searchsorted(self.sites, m)
        if idx >= self.sites.size or self.sites[idx] != m:
            raise KeyError(f"site {m} was not a test point")
        return float(self.residuals[idx])

    def as_dict(self) -> dict:
        out = {int(s): float(r) for s, r in zip(self.sites, self.residuals)}
        out[CEMETERY] = 0.0
        return out

    @property
    def bulk_sup(self) -> float:
        mask = self.sites > 0
        return float(np.max(np.abs(self.residuals[mask]))) if mask.any() else 0.0

    @property
    def origin(self) -> float:
        return self.at(0) if self.sites.size and self.sites[0] == 0 else float("nan")


def compensator_residual(
    regime: LimitKind | str,
    params: BoundaryParams,
    f: SmoothFunction,
    testpoints: Sequence[int] | None = None,
) -> CompensatorResidual:
    """Residual of the rescaled generator against (1/2) d^2/dx^2 on f.

    ``f`` must satisfy the boundary condition of ``regime`` up to
    1e-8 (||f|| + ||f''||); ``regime`` must be the one ``params`` falls in.
    """
    regime = LimitKind(regime)
    found = classify(params.alpha, params.beta, params.bigA, params.bigB)
    if found.kind is not regime:
        raise ValueError(f"params belong to the {found.kind.value} regime, not {regime.value}")
    res = abs(f.boundary_residual(found.triple))
    tol = f.boundary_tolerance()
    if res > tol:
        raise ValueError(f"f violates the {regime.value} boundary condition: |residual| = {res:.3g} > {tol:.3g}")
    N = params.scaleN
    fN = f.project(N)
    if testpoints is None:
        sites = np.arange(fN.last_site)
    else:
        sites = np.unique(np.asarray(list(testpoints), dtype=np.int64))
        if sites.size and (sites[0] < 0 or sites[-1] >= fN.last_site):
            raise KeyError("test points must lie in 0..M-1 of the projected grid")
    table = float(N * N) * lattice_generator_table(params, fN)
    limit = 0.5 * f.derivative(sites / N, 2)
    residuals = table[sites] - limit
    for a in (sites, residuals):
        a.setflags(write=False)
    return CompensatorResidual(regime, fN, sites, residuals)


def bulk_taylor_bound(f: SmoothFunction, scaleN: int) -> float:
    """Sup of the central-difference error: ||f''''|| / (24 N^2)."""
    return f.sup_norm(4) / (24.0 * scaleN**2)


def origin_expansion(params: BoundaryParams, f: SmoothFunction) -> dict:
    """Leading terms of L_N f(0) from a Taylor expansion of f(1/N).

    L_N f(0) = -A N^(2-alpha) f(0) + B N^(1-beta) f'(0)
               + (B/2) N^(-beta) f''(0) + (B/6) N^(-1-beta) f'''(0) + ...
    """
    N = float(params.scaleN)
    f0, f1, f2 = f.jet0()
    f3 = float(f.derivative(np.zeros(1), 3)[0])
    A, B, a, b = params.bigA, params.bigB, params.alpha, params.beta
    return {
        "kill": -A * N ** (2 - a) * f0,
        "reflect": B * N ** (1 - b) * f1,
        "second_order": 0.5 * B * N ** (-b) * f2,
        "third_order": B * N ** (-1 - b) * f3 / 6.0,
        "limit": 0.5 * f2,
    }


def mixed_origin_leading(params: BoundaryParams, f: SmoothFunction) -> float:
    """Predicted leading origin residual B f''(0) / (2N) in the mixed regime."""
    return 0.5 * params.bigB * f.jet0()[2] / params.scaleN


def fit_loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log|value| against log N."""
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.abs(np.asarray(values, dtype=np.float64)))
    return float(np.polyfit(x, y, 1)[0])
