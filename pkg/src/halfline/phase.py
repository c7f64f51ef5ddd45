"""Phase diagram: which Brownian motion on the half-line a walk converges to.

At the origin the rescaled generator reads, to leading order,

    L_N f(0) ~ -A N^(2-alpha) f(0) + B N^(1-beta) f'(0),

and the limit must satisfy L f(0) = f''(0)/2. Matching the three terms gives
the boundary condition c1 f(0) - c2 f'(0) + (c3/2) f''(0) = 0 with
(c1, c2, c3) proportional to (A N^(2-alpha), B N^(1-beta), 1). Only the terms
with the largest N-exponent survive normalisation, which is how
:func:`classify` assigns a regime. A vanishing intensity removes its term.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

_EXP_TOL = 1e-12


class LimitKind(str, enum.Enum):
    MIXED = "mixed"
    STICKY = "sticky"
    EXPONENTIAL_HOLDING = "exponential_holding"
    REFLECTED = "reflected"
    ABSORBED = "absorbed"
    ELASTIC = "elastic"
    KILLED = "killed"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class BoundaryTriple:
    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        vals = (self.c1, self.c2, self.c3)
        if any(not math.isfinite(c) or c < 0 for c in vals):
            raise ValueError(f"triple entries must be finite and >= 0: {vals}")
        if abs(math.fsum(vals) - 1.0) > 1e-12:
            raise ValueError(f"triple must lie on the simplex, sums to {math.fsum(vals)!r}")

    @classmethod
    def normalized(cls, c1: float, c2: float, c3: float) -> "BoundaryTriple":
        total = math.fsum((c1, c2, c3))
        if total <= 0:
            raise ValueError("cannot normalise a zero triple")
        return cls(c1 / total, c2 / total, c3 / total)

    @property
    def degenerate_killed(self) -> bool:
        """c1 = 1 lies outside the Feller class (boundary condition f(0) = 0)."""
        return self.c1 == 1.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c1, self.c2, self.c3)

    def residual(self, f0: float, f1: float, f2: float) -> float:
        """c1 f(0) - c2 f'(0) + (c3/2) f''(0)."""
        return self.c1 * f0 - self.c2 * f1 + 0.5 * self.c3 * f2


@dataclass(frozen=True)
class Regime:
    kind: LimitKind
    triple: BoundaryTriple | None
    extension: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        c = self.triple.as_tuple() if self.triple else (None, None, None)
        return {
            "regime": self.kind.value,
            "c1": c[0],
            "c2": c[1],
            "c3": c[2],
            "extensionFlag": self.extension,
            "note": self.note,
        }


# (kill, reflect, stick) surviving terms -> regime
_KIND_BY_TERMS = {
    (True, True, True): LimitKind.MIXED,
    (False, True, True): LimitKind.STICKY,
    (True, False, True): LimitKind.EXPONENTIAL_HOLDING,
    (True, True, False): LimitKind.ELASTIC,
    (False, True, False): LimitKind.REFLECTED,
    (False, False, True): LimitKind.ABSORBED,
    (True, False, False): LimitKind.KILLED,
}


def _eq(a: float, b: float) -> bool:
    return abs(a - b) <= _EXP_TOL


def _listed(kind: LimitKind, alpha: float, beta: float, A: float, B: float) -> bool:
    """Whether (alpha, beta, A, B) sits inside the region stated for ``kind`` with the intensities it uses."""
    if kind is LimitKind.MIXED:
        return _eq(alpha, 2) and _eq(beta, 1) and A > 0 and B > 0
    if kind is LimitKind.STICKY:
        return _eq(beta, 1) and alpha > 2 and B > 0
    if kind is LimitKind.EXPONENTIAL_HOLDING:
        return _eq(alpha, 2) and beta > 1 and A > 0 and B > 0
    if kind is LimitKind.ELASTIC:
        return _eq(alpha, beta + 1) and beta < 1 and A > 0 and B > 0
    if kind is LimitKind.REFLECTED:
        return alpha > beta + 1 and beta < 1 and B > 0
    if kind is LimitKind.ABSORBED:
        return alpha > 2 and beta > 1
    if kind is LimitKind.KILLED:
        return ((alpha < beta + 1 and beta < 1) or (alpha < 2 and beta > 1)) and A > 0
    return False


def classify(alpha: float, beta: float, A: float, B: float) -> Regime:
    """Limit regime and boundary triple of the (alpha, beta, A, B) walk.

    Points outside the listed regions (e.g. beta = 1 with alpha < 2, or a
    vanishing intensity) are resolved by the same dominant-term rule and
    flagged with ``extension=True``. Infinite inputs are Unclassified.
    """
    values = (alpha, beta, A, B)
    if any(math.isnan(v) or v < 0 for v in values):
        raise ValueError(f"alpha, beta, A, B must be >= 0, got {values}")
    if any(math.isinf(v) for v in values):
        return Regime(LimitKind.UNCLASSIFIED, None, True, "infinite parameters lie outside the phase diagram")

    # (exponent, intensity) per boundary mechanism; missing intensity drops it
    terms = [(2 - alpha, A), (1 - beta, B), (0.0, 1.0)]
    live = [e for e, w in terms if w > 0]
    top = max(live)
    survive = tuple(w > 0 and _eq(e, top) for e, w in terms)
    kind = _KIND_BY_TERMS[survive]
    weights = [w if s else 0.0 for (e, w), s in zip(terms, survive)]
    triple = BoundaryTriple.normalized(*weights)
    extension = not _listed(kind, alpha, beta, A, B)
    note = "resolved by dominant boundary term" if extension else ""
    return Regime(kind, triple, extension, note)


def effective_triple(params) -> BoundaryTriple:
    """Finite-N boundary triple proportional to (A N^(2-alpha), B N^(1-beta), 1).

    Describes the diffusion the walk at scale N approximates before the
    subdominant terms have died out; tends to the classified triple.
    """
    N = float(params.scaleN)
    return BoundaryTriple.normalized(
        params.bigA * N ** (2 - params.alpha), params.bigB * N ** (1 - params.beta), 1.0
    )


def params_for_target(triple: BoundaryTriple) -> tuple[float, float, float, float]:
    """Representative (alpha, beta, A, B) whose walk converges to ``triple``."""
    c1, c2, c3 = triple.as_tuple()
    if c1 > 0 and c2 > 0 and c3 > 0:
        return (2.0, 1.0, c1 / c3, c2 / c3)
    if c1 == 0 and c2 > 0 and c3 > 0:
        return (3.0, 1.0, 1.0, c2 / c3)
    if c2 == 0 and c1 > 0 and c3 > 0:
        return (2.0, 3.0, c1 / c3, 1.0)
    if c3 == 0 and c1 > 0 and c2 > 0:
        return (1.5, 0.5, c1, c2)
    if (c1, c2, c3) == (0.0, 1.0, 0.0):
        return (3.0, 0.0, 1.0, 0.5)
    if (c1, c2, c3) == (0.0, 0.0, 1.0):
        return (3.0, 2.0, 1.0, 1.0)
    if (c1, c2, c3) == (1.0, 0.0, 0.0):
        return (0.0, 0.0, 0.5, 0.5)
    raise ValueError(f"no representative for {triple}")  # unreachable on the simplex


REPRESENTATIVE_TRIPLES = {
    LimitKind.MIXED: BoundaryTriple(1 / 3, 1 / 3, 1 - 2 / 3),
    LimitKind.STICKY: BoundaryTriple(0.0, 0.5, 0.5),
    LimitKind.EXPONENTIAL_HOLDING: BoundaryTriple(0.5, 0.0, 0.5),
    LimitKind.ELASTIC: BoundaryTriple(0.5, 0.5, 0.0),
    LimitKind.REFLECTED: BoundaryTriple(0.0, 1.0, 0.0),
    LimitKind.ABSORBED: BoundaryTriple(0.0, 0.0, 1.0),
    LimitKind.KILLED: BoundaryTriple(1.0, 0.0, 0.0),
}


def representative_params(kind: LimitKind | str) -> tuple[float, float, float, float]:
    return params_for_target(REPRESENTATIVE_TRIPLES[LimitKind(kind)])
