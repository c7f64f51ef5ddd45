"""Ensemble simulation of the rescaled walk and comparison with limit laws.

Replicate ``r`` of base seed ``s`` is always the same trajectory (see
:mod:`halfline.rng`), whatever the number of worker threads, so every
estimate here is a deterministic function of its configuration.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np
from scipy.stats import norm

from halfline import _kernels
from halfline.generators import GridFunction, lattice_generator_table
from halfline.phase import LimitKind, classify
from halfline.reference import ReferenceLaw, reference_law_for
from halfline.walk import DEAD, BoundaryParams, start_site, time_index

DEFAULT_REPLICATES = 100_000


def set_threads(n: int | None = None) -> int:
    """Cap the worker threads; ``None`` reads HALFLINE_THREADS. Returns the count in use."""
    if n is None:
        env = os.environ.get("HALFLINE_THREADS")
        n = int(env) if env else None
    if n is not None:
        if n < 1:
            raise ValueError("thread count must be >= 1")
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return numba.get_num_threads()


@dataclass(frozen=True)
class EnsembleConfig:
    params: BoundaryParams
    x0: float
    t: float
    replicates: int = DEFAULT_REPLICATES
    base_seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValueError("t must be finite and >= 0")
        start_site(self.params.scaleN, self.x0)  # validates x0
        if not 0 <= int(self.base_seed) < 2**64:
            raise ValueError("base_seed must fit in 64 bits")

    @property
    def start(self) -> int:
        return start_site(self.params.scaleN, self.x0)

    @property
    def steps(self) -> int:
        return time_index(self.params.scaleN, self.t)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start_site"] = self.start
        d["steps"] = self.steps
        return d


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    stderr: float
    replicates: int
    confidence: float = 0.95

    @classmethod
    def from_samples(cls, samples: np.ndarray, confidence: float = 0.95) -> "EstimateWithCI":
        x = np.asarray(samples, dtype=np.float64)
        n = x.size
        if n == 0:
            raise ValueError("no samples")
        mean = math.fsum(x) / n
        if n > 1:
            var = math.fsum((x - mean) ** 2) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = float("nan")
        return cls(mean, se, n, confidence)

    @property
    def halfwidth(self) -> float:
        return float(norm.ppf(0.5 + self.confidence / 2)) * self.stderr

    @property
    def interval(self) -> tuple[float, float]:
        return (self.mean - self.halfwidth, self.mean + self.halfwidth)

    def with_confidence(self, confidence: float) -> "EstimateWithCI":
        return EstimateWithCI(self.mean, self.stderr, self.replicates, confidence)

    def contains(self, value: float) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi

    def zscore(self, value: float) -> float:
        if self.stderr == 0:
            return 0.0 if value == self.mean else math.inf
        return (self.mean - value) / self.stderr


@dataclass(frozen=True)
class EnsembleRun:
    """Raw per-replicate summaries; positions are lattice sites, -1 = cemetery."""

    config: EnsembleConfig
    checkpoints: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    local_time: np.ndarray = field(repr=False)
    first_hit: np.ndarray = field(repr=False)
    occupation: np.ndarray = field(repr=False)
    death: np.ndarray = field(repr=False)
    occupation_site: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[:, -1]


def run_ensemble(
    cfg: EnsembleConfig,
    times: Sequence[float] | None = None,
    occupation_site: int = 0,
    first_replicate: int = 0,
) -> EnsembleRun:
    """Simulate ``cfg.replicates`` walks up to ``cfg.steps`` steps.

    ``times`` adds extra macroscopic observation times (each <= cfg.t); the
    final column of ``states`` is always step ``cfg.steps``.
    """
    N = cfg.params.scaleN
    steps = cfg.steps
    extra = sorted({time_index(N, s) for s in (times or ())})
    if extra and extra[-1] > steps:
        raise ValueError("observation times must not exceed the horizon")
    checkpoints = np.array(sorted(set(extra) | {steps}), dtype=np.int64)
    out = _kernels.ensemble(
        np.uint64(cfg.base_seed),
        np.uint64(first_replicate),
        cfg.replicates,
        cfg.start,
        steps,
        cfg.params.kill_prob,
        cfg.params.up_prob,
        checkpoints,
        int(occupation_site),
    )
    return EnsembleRun(cfg, checkpoints, *out, occupation_site=int(occupation_site))


def _evaluate(f, sites: np.ndarray, scaleN: int) -> np.ndarray:
    alive = sites != DEAD
    vals = np.zeros(sites.shape, dtype=np.float64)
    if isinstance(f, GridFunction):
        if f.scaleN is not None and f.scaleN != scaleN:
            raise ValueError(f"f is projected at N={f.scaleN}, ensemble has N={scaleN}")
        top = int(sites.max(initial=0))
        if top > f.last_site:
            raise KeyError(f"a walker reached site {top}, beyond f's last site {f.last_site}")
        vals[alive] = f.values[sites[alive]]
    else:
        vals[alive] = np.asarray(f(sites[alive] / scaleN), dtype=np.float64)
    return vals


def ensemble_expectation(cfg: EnsembleConfig, f, confidence: float = 0.95) -> EstimateWithCI:
    """Monte Carlo estimate of E f(B^N_t), with f(cemetery) = 0.

    ``f`` is a :class:`GridFunction` on sites or a vectorised callable of
    the rescaled position m/N.
    """
    run = run_ensemble(cfg)
    return EstimateWithCI.from_samples(_evaluate(f, run.final, cfg.params.scaleN), confidence)


def expectations(run: EnsembleRun, fs: dict, column: int = -1) -> dict:
    N = run.config.params.scaleN
    return {name: EstimateWithCI.from_samples(_evaluate(f, run.states[:, column], N)) for name, f in fs.items()}


def departure_params(p: float, p_kill: float = 0.0) -> BoundaryParams:
    """Walk at N = 1 that leaves 0 upwards w.p. ``p`` and dies w.p. ``p_kill``."""
    return BoundaryParams(0.0, 0.0, p_kill, p, 1)


def local_time_ensemble(params: BoundaryParams, n: int, replicates: int, seed: int) -> EstimateWithCI:
    """Mean number of k in 0..n with X_k = 0, for walks started at 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = _kernels.ensemble(
        np.uint64(seed), np.uint64(0), replicates, 0, n, params.kill_prob, params.up_prob, np.array([n], np.int64), 0
    )
    return EstimateWithCI.from_samples(out[1])


def dynkin_ensemble(
    params: BoundaryParams, f: GridFunction, start: int, steps: int, replicates: int, seed: int
) -> EstimateWithCI:
    """Mean of the Dynkin martingale M_steps over independent walks."""
    table = lattice_generator_table(params, f)
    vals = _kernels.dynkin_terminal(
        np.uint64(seed), np.uint64(0), replicates, start, steps, params.kill_prob, params.up_prob,
        np.ascontiguousarray(f.values[:-1]), table,
    )
    if np.isnan(vals).any():
        raise KeyError("a walker left the range where f and its generator are known")
    return EstimateWithCI.from_samples(vals)


def cemetery_mass_profile(cfg: EnsembleConfig, times: Sequence[float]) -> np.ndarray:
    """Fraction of walkers absorbed by each time, from one set of shared paths."""
    run = run_ensemble(cfg, times)
    N = cfg.params.scaleN
    idx = [int(np.searchsorted(run.checkpoints, time_index(N, s))) for s in times]
    return np.array([np.mean(run.states[:, i] == DEAD) for i in idx])


def origin_occupation(cfg: EnsembleConfig, radius: float = 0.05) -> EstimateWithCI:
    """Fraction of steps 0..k_t spent at sites <= radius * N."""
    site = int(math.floor(radius * cfg.params.scaleN))
    run = run_ensemble(cfg, occupation_site=site)
    return EstimateWithCI.from_samples(run.occupation / (cfg.steps + 1))


# distances -------------------------------------------------------------------


@dataclass(frozen=True)
class DistanceReport:
    ks: float
    cemetery_mass_diff: float
    origin_atom_diff: float
    cemetery_mass: float
    origin_atom: float
    reference_cemetery_mass: float
    reference_origin_atom: float
    replicates: int
    scaleN: int

    def to_dict(self) -> dict:
        return {
            "ks": self.ks,
            "cemeteryMassDiff": self.cemetery_mass_diff,
            "originAtomDiff": self.origin_atom_diff,
            "cemeteryMass": self.cemetery_mass,
            "originAtom": self.origin_atom,
            "referenceCemeteryMass": self.reference_cemetery_mass,
            "referenceOriginAtom": self.reference_origin_atom,
            "replicates": self.replicates,
            "N": self.scaleN,
        }


def _check_law(cfg: EnsembleConfig, law: ReferenceLaw) -> None:
    regime = classify(cfg.params.alpha, cfg.params.beta, cfg.params.bigA, cfg.params.bigB)
    if regime.kind is not law.kind:
        raise ValueError(f"walk is in the {regime.kind.value} regime, law is {law.kind.value}")
    if not math.isclose(law.t, cfg.t, rel_tol=1e-12) or not math.isclose(law.x0, cfg.x0, rel_tol=1e-12):
        raise ValueError("law and configuration disagree on x0 or t")


def ks_continuous(samples: np.ndarray, law: ReferenceLaw, bins: int | None = None) -> float:
    """KS distance between normalised empirical and reference continuous parts."""
    y = np.sort(np.asarray(samples, dtype=np.float64))
    mass = law.alive_mass - law.origin_atom
    if y.size == 0 or mass <= 0:
        return 0.0 if y.size == 0 and mass <= 0 else 1.0
    if bins is None:
        pts = np.unique(y)
        upper = np.searchsorted(y, pts, side="right") / y.size
        lower = np.searchsorted(y, pts, side="left") / y.size
        ref = law.continuous_cdf(pts) / mass
        return float(max(np.max(np.abs(upper - ref)), np.max(np.abs(lower - ref))))
    edges = np.linspace(0.0, y[-1], int(bins) + 1)
    emp = np.searchsorted(y, edges, side="right") / y.size
    return float(np.max(np.abs(emp - law.continuous_cdf(edges) / mass)))


def distance_from_run(run: EnsembleRun, law: ReferenceLaw, bins: int | None = None, column: int = -1) -> DistanceReport:
    cfg = run.config
    N = cfg.params.scaleN
    sites = run.states[:, column]
    n = sites.size
    dead = sites == DEAD
    at0 = sites == 0
    atom_law = law.triple.c3 > 0
    cont = sites[~dead & ~at0] if atom_law else sites[~dead]
    ks = ks_continuous(cont / N, law, bins)
    cem = float(np.count_nonzero(dead)) / n
    atom = float(np.count_nonzero(at0)) / n
    ref_cem = law.cemetery_mass
    ref_atom = law.origin_atom
    return DistanceReport(ks, abs(cem - ref_cem), abs(atom - ref_atom), cem, atom, ref_cem, ref_atom, n, N)


def distribution_distance(cfg: EnsembleConfig, law: ReferenceLaw, bins: int | None = None) -> DistanceReport:
    """KS on the alive continuous part plus cemetery and origin-atom differences."""
    _check_law(cfg, law)
    return distance_from_run(run_ensemble(cfg), law, bins)


# sweeps ---------------------------------------------------------------------

SWEEP_COLUMNS = ("N", "regime", "statistic", "value", "stderr", "replicates", "seed")


@dataclass(frozen=True)
class SweepRow:
    N: int
    regime: str
    statistic: str
    value: float
    stderr: float
    replicates: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def convergence_sweep(
    target: tuple[float, float, float, float],
    Ns: Sequence[int],
    x0: float,
    t: float,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    test_functions: dict[str, Callable] | None = None,
    bins: int | None = None,
    law_options: dict | None = None,
) -> list[SweepRow]:
    """Distance rows for the walk ``target = (alpha, beta, A, B)`` at each N.

    Each N contributes ks, cemeteryMassDiff and originAtomDiff rows, plus one
    ``expectation_diff:<name>`` row (Monte Carlo minus reference) per test
    function.
    """
    rows: list[SweepRow] = []
    law = None
    for N in Ns:
        params = BoundaryParams(*target, int(N))
        cfg = EnsembleConfig(params, x0, t, replicates, seed)
        if law is None:
            law = reference_law_for(params, x0, t, **(law_options or {}))
        _check_law(cfg, law)
        run = run_ensemble(cfg)
        rep = distance_from_run(run, law, bins)
        regime = law.kind.value
        rows.append(SweepRow(int(N), regime, "ks", rep.ks, float("nan"), rep.replicates, seed))
        rows.append(SweepRow(int(N), regime, "cemeteryMassDiff", rep.cemetery_mass_diff,
                             _binomial_se(rep.cemetery_mass, rep.replicates), rep.replicates, seed))
        rows.append(SweepRow(int(N), regime, "originAtomDiff", rep.origin_atom_diff,
                             _binomial_se(rep.origin_atom, rep.replicates), rep.replicates, seed))
        for name, est in expectations(run, test_functions or {}).items():
            diff = est.mean - law.expectation(test_functions[name])
            rows.append(SweepRow(int(N), regime, f"expectation_diff:{name}", diff, est.stderr, rep.replicates, seed))
    return rows


def sweep_report(rows: Sequence[SweepRow]) -> dict:
    """JSON-ready mirror of the sweep table."""
    return {"columns": list(SWEEP_COLUMNS), "rows": [r.to_dict() for r in rows]}
