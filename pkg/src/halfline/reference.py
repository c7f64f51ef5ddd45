"""Ground truth for E_x[f(W_t)] under the limiting Brownian motions.

Reflected, absorbed and killed Brownian motion have classical closed forms
(method of images). Every other boundary triple is handled by solving the
backward heat equation

    u_t = u_xx / 2  on (0, L),   u(0, x) = f(x),
    c1 u - c2 u_x + c3 u_t = 0  at x = 0,
    u(t, L) = f(L),

whose solution at time t is u(t, x) = E_x[f(W_t)]. The boundary row replaces
(c3/2) u_xx(0) by c3 u_t(0), so no one-sided second derivative is needed.
Interior: Crank-Nicolson, started with four half-size backward Euler steps
to damp the high-frequency content of non-smooth data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, sparse
from scipy.sparse.linalg import splu
from scipy.special import ndtr

from halfline.phase import BoundaryTriple, LimitKind, classify

CLOSED_FORM_KINDS = (LimitKind.REFLECTED, LimitKind.ABSORBED, LimitKind.KILLED)
CLOSED_FORM_TRIPLES = {
    LimitKind.REFLECTED: BoundaryTriple(0.0, 1.0, 0.0),
    LimitKind.ABSORBED: BoundaryTriple(0.0, 0.0, 1.0),
    LimitKind.KILLED: BoundaryTriple(1.0, 0.0, 0.0),
}

#: mesh ratio dt/dx^2 above which a solve is refused
MAX_MESH_RATIO = 100.0
#: distance, in units of sqrt(t), kept between the far boundary and anything of interest
FAR_FIELD_WIDTHS = 6.0


def _gauss(x, t):
    return np.exp(-0.5 * x * x / t) / math.sqrt(2 * math.pi * t)


def hit_probability(x0: float, t: float) -> float:
    """P_x0(tau_0 <= t) = 2 Phi(-x0 / sqrt(t))."""
    return float(2 * ndtr(-x0 / math.sqrt(t)))


def _kind(kind) -> LimitKind:
    kind = LimitKind(kind)
    if kind not in CLOSED_FORM_KINDS:
        raise ValueError(f"no closed form for {kind.value}")
    return kind


def closed_form_expectation(kind, f: Callable[[float], float], x0: float, t: float) -> float:
    """E_x0[f(W_t)] for reflected, absorbed or killed Brownian motion."""
    kind = _kind(kind)
    if t <= 0:
        raise ValueError("t must be > 0")
    if x0 < 0:
        raise ValueError("x0 must be >= 0")
    sign = 1.0 if kind is LimitKind.REFLECTED else -1.0

    def integrand(x):
        return f(x) * (_gauss(x - x0, t) + sign * _gauss(x + x0, t))

    upper = x0 + 40 * math.sqrt(t)
    pts = [x0] if 0 < x0 < upper else None
    value, _ = integrate.quad(integrand, 0.0, upper, points=pts, limit=400, epsabs=1e-13, epsrel=1e-12)
    if kind is LimitKind.ABSORBED:
        value += f(0.0) * hit_probability(x0, t)
    return value


def closed_form_continuous_cdf(kind, x0: float, t: float, y):
    """Mass of the law on (0, y] (reflected: [0, y]), excluding atoms and the cemetery."""
    kind = _kind(kind)
    y = np.asarray(y, dtype=np.float64)
    s = math.sqrt(t)
    if kind is LimitKind.REFLECTED:
        return ndtr((y - x0) / s) - ndtr((-y - x0) / s)
    return (ndtr((y - x0) / s) - ndtr(-x0 / s)) - (ndtr((y + x0) / s) - ndtr(x0 / s))


# Wentzell heat solver -------------------------------------------------------


@dataclass(frozen=True)
class HeatGrid:
    """Solution of the backward equation on x_j = j*dx, j = 0..nx."""

    dx: float
    dt: float
    L: float
    triple: BoundaryTriple
    x: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)  # u[i, j] = u(times[i], x[j])

    @property
    def final(self) -> np.ndarray:
        return self.u[-1]

    def at(self, x0, time_index: int = -1):
        """Linear interpolation of u(times[time_index], x0)."""
        return np.interp(x0, self.x, self.u[time_index])

    def to_csv(self, path, time_index: int = -1) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u"])
            for xj, uj in zip(self.x, self.u[time_index]):
                w.writerow([repr(float(xj)), repr(float(uj))])


class _Stepper:
    """Sparse one-step operators of the theta scheme on unknowns u_0..u_{nx-1}."""

    def __init__(self, triple: BoundaryTriple, dx: float, nx: int, h: float, theta: float):
        c1, c2, c3 = triple.as_tuple()
        k = 0.5 / dx**2  # u_t = k * (u_{j+1} - 2u_j + u_{j-1})
        main = np.full(nx, -2.0 * k)
        off = np.full(nx - 1, k)
        lap = sparse.diags([off, main, off], [-1, 0, 1], shape=(nx, nx), format="lil")
        lap[0, :] = 0.0
        lap = lap.tocsr()
        ident = sparse.identity(nx, format="csr")
        bvec = sparse.lil_matrix((nx, nx))
        # c1 u0 - c2 (-3u0 + 4u1 - u2) / (2dx)
        bvec[0, 0] = c1 + 3.0 * c2 / (2 * dx)
        bvec[0, 1] = -4.0 * c2 / (2 * dx)
        bvec[0, 2] = c2 / (2 * dx)
        bvec = bvec.tocsr()
        e0 = sparse.lil_matrix((nx, nx))
        e0[0, 0] = 1.0
        e0 = e0.tocsr()
        interior = ident - e0
        theta_b = theta if c3 > 0 else 1.0
        lhs = interior - theta * h * lap + c3 * e0 + theta_b * h * bvec
        rhs = interior + (1 - theta) * h * lap + c3 * e0 - (1 - theta_b) * h * bvec
        self.lhs = lhs.tocsc()
        self.rhs = rhs.tocsr()
        self.lu = splu(self.lhs)
        # far-field value enters row nx-1 through u_nx
        self.g = np.zeros(nx)
        self.g[-1] = h * k

    def forward(self, u: np.ndarray, far: float) -> np.ndarray:
        return self.lu.solve(self.rhs @ u + far * self.g)

    def adjoint(self, w: np.ndarray) -> tuple[np.ndarray, float]:
        """w -> (S^T w, w . M^{-1} g) where S = M^{-1} R."""
        z = self.lu.solve(w, trans="T")
        return self.rhs.T @ z, float(z @ self.g)


def _schedule(triple, dx, nx, t, nt):
    dt = t / nt
    half = _Stepper(triple, dx, nx, dt / 2, 1.0)
    cn = _Stepper(triple, dx, nx, dt, 0.5)
    startup = min(nt, 2)
    # one entry per interval of length dt
    return [(half, half)] * startup + [(cn,)] * (nt - startup), dt


def _default_L(t: float) -> float:
    return max(4.0, 3.0 + FAR_FIELD_WIDTHS * math.sqrt(t))


def _sample_terminal(f, x):
    vals = np.asarray(f(x), dtype=np.float64)
    if vals.shape == ():
        vals = np.full_like(x, float(vals))
    if not np.all(np.isfinite(vals)):
        raise ValueError("terminal data must be finite")
    return vals


def _check_far_field(vals, x, L, t):
    tail = x >= L - FAR_FIELD_WIDTHS * math.sqrt(t)
    seg = vals[tail]
    scale = 1.0 + np.max(np.abs(vals))
    if seg.size >= 3 and np.max(np.abs(np.diff(seg, 2))) > 1e-8 * scale:
        raise ValueError("terminal data is not affine near L; increase L")


def _grid(triple, t, L, nx, nt, dx, dt, max_mesh_ratio):
    if t <= 0:
        raise ValueError("t must be > 0")
    L = _default_L(t) if L is None else float(L)
    if L < FAR_FIELD_WIDTHS * math.sqrt(t):
        raise ValueError(f"L={L} too small for t={t}: need L >= {FAR_FIELD_WIDTHS} sqrt(t)")
    if dx is not None:
        nx = int(round(L / dx))
    if dt is not None:
        nt = max(1, int(round(t / dt)))
    if nx < 3:
        raise ValueError("need at least 3 spatial cells")
    dx = L / nx
    ratio = (t / nt) / dx**2
    if ratio > max_mesh_ratio:
        raise ValueError(f"dt/dx^2 = {ratio:.3g} exceeds the bound {max_mesh_ratio}")
    return L, nx, nt, dx


def wentzell_solve(
    triple: BoundaryTriple,
    f: Callable,
    t: float,
    *,
    L: float | None = None,
    nx: int = 2000,
    nt: int = 4000,
    dx: float | None = None,
    dt: float | None = None,
    snapshots: int = 1,
    max_mesh_ratio: float = MAX_MESH_RATIO,
) -> HeatGrid:
    """Solve for u(t, x) = E_x[f(W_t)] on [0, L].

    ``f`` must accept a numpy array. ``snapshots`` evenly spaced times
    (besides t = 0) are kept in the returned grid.
    """
    L, nx, nt, dx = _grid(triple, t, L, nx, nt, dx, dt, max_mesh_ratio)
    x = np.linspace(0.0, L, nx + 1)
    vals = _sample_terminal(f, x)
    _check_far_field(vals, x, L, t)
    far = float(vals[-1])
    steps, dt_ = _schedule(triple, dx, nx, t, nt)
    keep = {int(round(nt * (i + 1) / snapshots)) for i in range(snapshots)}
    u = vals[:-1].copy()
    times, rows = [0.0], [vals.copy()]
    for n, macro in enumerate(steps, start=1):
        for st in macro:
            u = st.forward(u, far)
        if n in keep:
            times.append(n * dt_)
            rows.append(np.append(u, far))
    return HeatGrid(dx, dt_, L, triple, x, np.array(times), np.vstack(rows))


# reference laws -------------------------------------------------------------


@dataclass(frozen=True)
class ReferenceLaw:
    """Law of W_t started at x0, in closed form or as grid weights.

    For a grid law ``weights[j]`` is the weight of node x_j and
    ``far_weight`` multiplies f(L): E f(W_t) = weights . f(x) + far_weight f(L).
    """

    kind: LimitKind
    t: float
    x0: float
    triple: BoundaryTriple
    representation: str  # "closed_form" | "heat_grid"
    x: np.ndarray | None = field(default=None, repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)
    far_weight: float = 0.0

    @classmethod
    def closed_form(cls, kind, x0: float, t: float) -> "ReferenceLaw":
        kind = _kind(kind)
        if t <= 0 or x0 < 0:
            raise ValueError("need t > 0 and x0 >= 0")
        return cls(kind, t, x0, CLOSED_FORM_TRIPLES[kind], "closed_form")

    @classmethod
    def heat_grid(
        cls,
        triple: BoundaryTriple,
        x0: float,
        t: float,
        *,
        L: float | None = None,
        nx: int = 2000,
        nt: int = 4000,
        max_mesh_ratio: float = MAX_MESH_RATIO,
        kind: LimitKind | None = None,
    ) -> "ReferenceLaw":
        """Discrete law at x0 from the adjoint of the solver's one-step maps.

        Exactly consistent with :func:`wentzell_solve` on the same grid: for
        any f, expectation(f) equals the solver's u(t, x0) interpolated
        linearly in x0.
        """
        L, nx, nt, dx = _grid(triple, t, L, nx, nt, None, None, max_mesh_ratio)
        if x0 < 0 or x0 > L - FAR_FIELD_WIDTHS * math.sqrt(t):
            raise ValueError("x0 must lie in [0, L - 6 sqrt(t)]")
        x = np.linspace(0.0, L, nx + 1)
        steps, _ = _schedule(triple, dx, nx, t, nt)
        w = np.zeros(nx)
        j = min(int(x0 / dx), nx - 2)
        frac = x0 / dx - j
        w[j] += 1 - frac
        w[j + 1] += frac
        far = 0.0
        for macro in reversed(steps):
            for st in reversed(macro):
                w, gpart = st.adjoint(w)
                far += gpart
        if kind is None:
            kind = _kind_of_triple(triple)
        return cls(kind, t, x0, triple, "heat_grid", x, np.append(w, 0.0), far)

    # functionals ------------------------------------------------------------

    def expectation(self, f) -> float:
        if self.representation == "closed_form":
            if not callable(f):
                raise ValueError("closed-form laws need a callable f")
            return closed_form_expectation(self.kind, f, self.x0, self.t)
        if callable(f):
            vals = _sample_terminal(f, self.x)
        else:
            vals = np.asarray(f, dtype=np.float64)
            if vals.shape != self.x.shape:
                raise ValueError(f"f has {vals.shape} samples, grid has {self.x.shape}")
        return float(self.weights @ vals + self.far_weight * vals[-1])

    @property
    def origin_atom(self) -> float:
        if self.representation == "closed_form":
            return hit_probability(self.x0, self.t) if self.kind is LimitKind.ABSORBED else 0.0
        if self.triple.c3 == 0:
            return 0.0
        w = self.weights
        # node 0 also carries half a cell of continuous density; extrapolate it from nodes 1, 2
        return float(max(w[0] - (2 * w[1] - w[2]) / 2, 0.0))

    @property
    def alive_mass(self) -> float:
        if self.representation == "closed_form":
            return 1.0 if self.kind is not LimitKind.KILLED else 1.0 - hit_probability(self.x0, self.t)
        return float(np.sum(self.weights) + self.far_weight)

    @property
    def cemetery_mass(self) -> float:
        return 1.0 - self.alive_mass

    def continuous_cdf(self, y):
        """Mass of the continuous part on [0, y], excluding the origin atom."""
        y = np.asarray(y, dtype=np.float64)
        if self.representation == "closed_form":
            return closed_form_continuous_cdf(self.kind, self.x0, self.t, y)
        w = self.weights.copy()
        w[0] -= self.origin_atom
        cum = np.cumsum(w)
        # piecewise linear between nodes with half of each node weight on either side
        mid = np.concatenate(([0.0], cum - w / 2))
        knots = np.concatenate(([0.0], self.x))
        return np.interp(y, knots, mid, right=cum[-1])

    def masses(self) -> dict:
        alive = self.alive_mass
        atom = self.origin_atom
        return {"continuous": alive - atom, "origin_atom": atom, "cemetery": 1.0 - alive}


def _kind_of_triple(triple: BoundaryTriple) -> LimitKind:
    c1, c2, c3 = triple.as_tuple()
    terms = (c1 > 0, c2 > 0, c3 > 0)
    from halfline.phase import _KIND_BY_TERMS

    return _KIND_BY_TERMS[terms]


def reference_law_for(params, x0: float, t: float, **grid) -> ReferenceLaw:
    """Limit law of the walk ``params`` (closed form when one exists)."""
    regime = classify(params.alpha, params.beta, params.bigA, params.bigB)
    if regime.kind in CLOSED_FORM_KINDS:
        return ReferenceLaw.closed_form(regime.kind, x0, t)
    return ReferenceLaw.heat_grid(regime.triple, x0, t, kind=regime.kind, **grid)


def expectation_under_reference(law: ReferenceLaw, f) -> float:
    return law.expectation(f)
