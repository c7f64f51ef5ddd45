import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfline.phase import (
    REPRESENTATIVE_TRIPLES,
    BoundaryTriple,
    LimitKind,
    _listed,
    classify,
    effective_triple,
    params_for_target,
    representative_params,
)
from halfline.walk import BoundaryParams

THIRD = 1 / 3

EXAMPLES = [
    ((2, 1, 1, 1), LimitKind.MIXED, (THIRD, THIRD, THIRD)),
    ((3, 1, 0, 2), LimitKind.STICKY, (0.0, 2 / 3, THIRD)),
    ((5, 0.5, 1, 1), LimitKind.REFLECTED, (0.0, 1.0, 0.0)),
    ((1, 0.5, 1, 1), LimitKind.KILLED, (1.0, 0.0, 0.0)),
    ((2, 3, 1, 1), LimitKind.EXPONENTIAL_HOLDING, (0.5, 0.0, 0.5)),
    ((1.5, 0.5, 2, 1), LimitKind.ELASTIC, (2 / 3, THIRD, 0.0)),
    ((3, 2, 1, 1), LimitKind.ABSORBED, (0.0, 0.0, 1.0)),
]


@pytest.mark.parametrize("args,kind,triple", EXAMPLES)
def test_regime_examples(args, kind, triple):
    r = classify(*args)
    assert r.kind is kind
    assert r.triple.as_tuple() == triple


@pytest.mark.parametrize(
    "args,kind",
    [
        ((2, 1, 0, 1), LimitKind.STICKY),  # A = 0 at the mixed exponents
        ((2, 1, 1, 0), LimitKind.EXPONENTIAL_HOLDING),  # B = 0 with beta = 1
        ((2, 3, 1, 0), LimitKind.EXPONENTIAL_HOLDING),  # B = 0 with beta > 1
        ((1, 1, 1, 1), LimitKind.KILLED),  # beta = 1, alpha < 2
        ((3, 0.5, 0, 0), LimitKind.ABSORBED),  # nothing leaves the origin
    ],
)
def test_extensions_are_flagged(args, kind):
    r = classify(*args)
    assert r.kind is kind and r.extension and r.note


def test_listed_points_are_not_flagged():
    for args, _, _ in EXAMPLES:
        if args[2] > 0:
            assert not classify(*args).extension


def test_invalid_and_infinite_inputs():
    with pytest.raises(ValueError):
        classify(-1, 1, 1, 1)
    with pytest.raises(ValueError):
        classify(1, math.nan, 1, 1)
    r = classify(math.inf, 1, 1, 1)
    assert r.kind is LimitKind.UNCLASSIFIED and r.triple is None
    assert r.to_dict()["regime"] == "unclassified"


def test_triple_validation():
    with pytest.raises(ValueError):
        BoundaryTriple(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        BoundaryTriple(-0.1, 0.6, 0.5)
    assert BoundaryTriple(1.0, 0.0, 0.0).degenerate_killed
    assert not BoundaryTriple(0.5, 0.5, 0.0).degenerate_killed


def test_params_for_target_examples():
    assert params_for_target(BoundaryTriple(THIRD, THIRD, 1 - 2 * THIRD)) == pytest.approx((2, 1, 1, 1))
    a, b, A, B = params_for_target(BoundaryTriple(0, 1, 0))
    assert a > b + 1 and 0 <= b < 1 and B > 0
    assert params_for_target(BoundaryTriple(0, 0, 1))[:2] == (3.0, 2.0)


def _roundtrip(triple):
    r = classify(*params_for_target(triple))
    return r, max(abs(x - y) for x, y in zip(r.triple.as_tuple(), triple.as_tuple()))


def test_roundtrip_random_simplex():
    rng = np.random.default_rng(2024)
    for c in rng.dirichlet([1, 1, 1], size=10_000):
        triple = BoundaryTriple.normalized(*c)
        r, err = _roundtrip(triple)
        assert r.kind is LimitKind.MIXED and err <= 1e-12


def test_roundtrip_faces_and_vertices():
    rng = np.random.default_rng(7)
    for zero in range(3):
        for _ in range(200):
            c = rng.dirichlet([1, 1])
            vals = list(c)
            vals.insert(zero, 0.0)
            _, err = _roundtrip(BoundaryTriple.normalized(*vals))
            assert err <= 1e-12
    for kind, triple in REPRESENTATIVE_TRIPLES.items():
        r = classify(*representative_params(kind))
        assert r.kind is kind and not r.extension


@settings(max_examples=300, deadline=None)
@given(a=st.floats(0, 6), b=st.floats(0, 6), A=st.floats(0.01, 50), B=st.floats(0.01, 50), c=st.floats(0.01, 100))
def test_scale_consistency(a, b, A, B, c):
    r = classify(a, b, A, B)
    if r.kind in (LimitKind.REFLECTED, LimitKind.ABSORBED, LimitKind.KILLED):
        assert classify(a, b, c * A, c * B).kind is r.kind


@settings(max_examples=500, deadline=None)
@given(a=st.floats(0, 6), b=st.floats(0, 6), A=st.floats(0.01, 5), B=st.floats(0.01, 5))
def test_regions_disjoint_and_consistent(a, b, A, B):
    listed = [k for k in LimitKind if _listed(k, a, b, A, B)]
    assert len(listed) <= 1
    r = classify(a, b, A, B)
    if listed:
        assert r.kind is listed[0] and not r.extension
    else:
        assert r.extension


def test_effective_triple_tends_to_limit():
    gaps = []
    for N in (10, 100, 1000, 10_000):
        eff = effective_triple(BoundaryParams(3, 1, 1, 1, N))
        gaps.append(abs(eff.c1))
    assert gaps == sorted(gaps, reverse=True) and gaps[-1] < 1e-3
