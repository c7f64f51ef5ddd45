"""The (alpha, beta, A, B)-boundary random walk on {cemetery} U {0, 1, 2, ...}.

Away from the origin the walk is the simple symmetric walk. From 0 it is
sent to the cemetery with probability ``A / N**alpha``, moves to 1 with
probability ``B / N**beta`` and otherwise stays put. The cemetery is
absorbing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from halfline import _kernels

DEAD = _kernels.DEAD


class Cemetery(enum.Enum):
    """The absorbing graveyard state."""

    CEMETERY = "cemetery"

    def __repr__(self) -> str:
        return "CEMETERY"


CEMETERY = Cemetery.CEMETERY

#: A lattice state: a non-negative site index or :data:`CEMETERY`.
LatticeState = Union[int, Cemetery]


def encode_state(x: LatticeState) -> int:
    if x is CEMETERY:
        return DEAD
    if isinstance(x, (bool, np.bool_)) or int(x) != x or x < 0:
        raise ValueError(f"invalid lattice state {x!r}")
    return int(x)


def decode_state(code: int) -> LatticeState:
    return CEMETERY if code == DEAD else int(code)


@dataclass(frozen=True)
class BoundaryParams:
    alpha: float
    beta: float
    bigA: float
    bigB: float
    scaleN: int

    def __post_init__(self):
        for name in ("alpha", "beta", "bigA", "bigB"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if int(self.scaleN) != self.scaleN or self.scaleN < 1:
            raise ValueError(f"scaleN must be an integer >= 1, got {self.scaleN!r}")
        object.__setattr__(self, "scaleN", int(self.scaleN))
        total = self.kill_prob + self.up_prob
        if total > 1.0:
            raise ValueError(
                f"A/N^alpha + B/N^beta = {total!r} exceeds 1 at N={self.scaleN}; "
                "origin probabilities must form a sub-distribution"
            )

    @property
    def kill_prob(self) -> float:
        return self.bigA / float(self.scaleN) ** self.alpha

    @property
    def up_prob(self) -> float:
        return self.bigB / float(self.scaleN) ** self.beta

    @property
    def stay_prob(self) -> float:
        return 1.0 - self.kill_prob - self.up_prob

    @property
    def departure_prob(self) -> float:
        """Probability of leaving the origin in one step (to 1 or to the cemetery)."""
        return self.kill_prob + self.up_prob

    def with_scale(self, scaleN: int) -> "BoundaryParams":
        return BoundaryParams(self.alpha, self.beta, self.bigA, self.bigB, scaleN)


def step_distribution(params: BoundaryParams, x: LatticeState) -> list[tuple[LatticeState, float]]:
    """One-step transition law from ``x`` as (state, probability) pairs.

    Zero-probability moves are kept so the list always names every
    neighbour; the masses sum to one.
    """
    if x is CEMETERY:
        return [(CEMETERY, 1.0)]
    m = encode_state(x)
    if m >= 1:
        return [(m - 1, 0.5), (m + 1, 0.5)]
    return [
        (CEMETERY, params.kill_prob),
        (1, params.up_prob),
        (0, params.stay_prob),
    ]


def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) % 2**64)


@dataclass(frozen=True)
class PathSample:
    """A recorded trajectory; ``states[k]`` is X_k with -1 for the cemetery."""

    states: np.ndarray = field(repr=False)
    seed: int
    replicate: int = 0

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "states", arr)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def steps(self) -> int:
        return len(self) - 1

    def state(self, k: int) -> LatticeState:
        return decode_state(int(self.states[k]))

    def lattice_states(self) -> list[LatticeState]:
        return [decode_state(int(c)) for c in self.states]

    @property
    def local_time_at_zero(self) -> int:
        return int(np.count_nonzero(self.states == 0))


def simulate_path(
    params: BoundaryParams,
    start: LatticeState,
    steps: int,
    seed: int,
    replicate: int = 0,
) -> PathSample:
    """Simulate ``steps`` steps from ``start``.

    The result depends only on the arguments: replicate ``r`` of seed ``s``
    is the same trajectory that the ensemble estimators use for that pair.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    code = encode_state(start)
    if code == DEAD:
        return PathSample(np.full(steps + 1, DEAD, np.int64), int(seed), replicate)
    states = _kernels.dense_path(
        _seed64(seed), np.uint64(replicate), code, int(steps), params.kill_prob, params.up_prob
    )
    return PathSample(states, int(seed), replicate)


def time_index(scaleN: int, t: float) -> int:
    """Lattice step ``floor(N**2 * t)`` observed at macroscopic time ``t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return math.floor(scaleN * scaleN * t)


def rescaled_position(path: PathSample, params: BoundaryParams, t: float) -> float | Cemetery:
    """Position of the diffusively rescaled walk, X_{floor(N^2 t)} / N."""
    k = time_index(params.scaleN, t)
    if k > path.steps:
        raise IndexError(f"path too short: need step {k}, have {path.steps}")
    code = int(path.states[k])
    if code == DEAD:
        return CEMETERY
    return code / params.scaleN


def start_site(scaleN: int, x0: float) -> int:
    """Lattice site nearest to macroscopic position ``x0`` (halves round up)."""
    if x0 < 0 or not math.isfinite(x0):
        raise ValueError("x0 must be finite and >= 0")
    return math.floor(scaleN * x0 + 0.5)


def exact_marginal(params: BoundaryParams, start: LatticeState, steps: int) -> tuple[np.ndarray, float]:
    """Exact law of X_steps: (probabilities of sites 0..start+steps, cemetery mass).

    Plain forward propagation of the transition matrix; an oracle for the
    Monte Carlo estimators at small sizes.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    code = encode_state(start)
    if code == DEAD:
        return np.zeros(1), 1.0
    size = code + steps + 2
    v = np.zeros(size)
    v[code] = 1.0
    dead = 0.0
    kill, up, stay = params.kill_prob, params.up_prob, params.stay_prob
    for _ in range(steps):
        w = np.zeros_like(v)
        w[0] = stay * v[0] + 0.5 * v[1]
        w[1] = up * v[0] + 0.5 * v[2]
        w[2:-1] = 0.5 * (v[1:-2] + v[3:])
        dead += kill * v[0]
        v = w
    return v[:-1], dead
