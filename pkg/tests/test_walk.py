import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfline.walk import (
    CEMETERY,
    BoundaryParams,
    decode_state,
    encode_state,
    exact_marginal,
    rescaled_position,
    simulate_path,
    start_site,
    step_distribution,
    time_index,
)


def test_params_reject_excess_origin_mass():
    with pytest.raises(ValueError, match="exceeds 1"):
        BoundaryParams(0, 0, 0.6, 0.6, 1)


@pytest.mark.parametrize(
    "kw",
    [
        dict(alpha=-1, beta=1, bigA=1, bigB=1, scaleN=10),
        dict(alpha=1, beta=math.nan, bigA=1, bigB=1, scaleN=10),
        dict(alpha=1, beta=1, bigA=math.inf, bigB=1, scaleN=10),
        dict(alpha=1, beta=1, bigA=1, bigB=1, scaleN=0),
        dict(alpha=1, beta=1, bigA=1, bigB=1, scaleN=2.5),
    ],
)
def test_params_validation(kw):
    with pytest.raises(ValueError):
        BoundaryParams(**kw)


def test_step_distribution_bulk():
    p = BoundaryParams(2, 1, 1, 1, 10)
    assert step_distribution(p, 3) == [(2, 0.5), (4, 0.5)]


def test_step_distribution_origin():
    law = dict(step_distribution(BoundaryParams(2, 1, 1, 1, 10), 0))
    assert law[CEMETERY] == pytest.approx(0.01, abs=1e-15)
    assert law[1] == pytest.approx(0.1, abs=1e-15)
    assert law[0] == pytest.approx(0.89, abs=1e-15)


def test_step_distribution_cemetery():
    assert step_distribution(BoundaryParams(2, 1, 1, 1, 10), CEMETERY) == [(CEMETERY, 1.0)]


@settings(max_examples=200, deadline=None)
@given(
    alpha=st.floats(0, 5),
    beta=st.floats(0, 5),
    A=st.floats(0, 1),
    B=st.floats(0, 1),
    N=st.integers(2, 10_000),
    x=st.one_of(st.just(CEMETERY), st.integers(0, 50)),
)
def test_step_masses_form_a_distribution(alpha, beta, A, B, N, x):
    try:
        p = BoundaryParams(alpha, beta, A, B, N)
    except ValueError:
        return
    masses = [m for _, m in step_distribution(p, x)]
    assert all(m >= 0 for m in masses)
    assert math.fsum(masses) == pytest.approx(1.0, abs=4e-16)


def test_state_codec_roundtrip():
    for s in (CEMETERY, 0, 1, 17):
        assert decode_state(encode_state(s)) == s
    with pytest.raises(ValueError):
        encode_state(-3)


def test_zero_steps():
    p = BoundaryParams(2, 1, 1, 1, 10)
    assert simulate_path(p, 0, 0, 1).lattice_states() == [0]
    assert simulate_path(p, 0, 0, 1).local_time_at_zero == 1
    assert simulate_path(p, 4, 0, 1).local_time_at_zero == 0


def test_cemetery_start_stays():
    path = simulate_path(BoundaryParams(2, 1, 1, 1, 10), CEMETERY, 5, 3)
    assert path.lattice_states() == [CEMETERY] * 6


def test_no_origin_moves_means_stuck():
    path = simulate_path(BoundaryParams(1, 1, 0, 0, 5), 0, 100, 9)
    assert set(path.lattice_states()) == {0}


def _check_path_structure(states):
    for a, b in zip(states[:-1], states[1:]):
        if a == -1:
            assert b == -1
        elif a >= 1:
            assert abs(a - b) == 1
        else:
            assert b in (-1, 0, 1)


@pytest.mark.parametrize("seed", [0, 1, 2**63 + 5])
def test_path_invariants_and_determinism(seed):
    p = BoundaryParams(1, 0.5, 1, 1, 4)  # frequent killing
    a = simulate_path(p, 2, 5000, seed, replicate=7)
    b = simulate_path(p, 2, 5000, seed, replicate=7)
    assert np.array_equal(a.states, b.states)
    _check_path_structure(a.states.tolist())
    assert a.local_time_at_zero == sum(1 for s in a.lattice_states() if s == 0)


def test_replicates_differ():
    p = BoundaryParams(2, 1, 1, 1, 10)
    a = simulate_path(p, 5, 200, 1, 0)
    b = simulate_path(p, 5, 200, 1, 1)
    assert not np.array_equal(a.states, b.states)


def test_states_are_read_only():
    path = simulate_path(BoundaryParams(2, 1, 1, 1, 10), 5, 10, 1)
    with pytest.raises(ValueError):
        path.states[0] = 3


def test_origin_frequencies_match_step_distribution():
    # 10^6 one-step draws from site 0, one per replicate
    from halfline import _kernels

    p = BoundaryParams(2, 1, 3, 1, 10)  # kill 0.03, up 0.1
    n = 1_000_000
    out = _kernels.ensemble(np.uint64(11), np.uint64(0), n, 0, 1, p.kill_prob, p.up_prob, np.array([1]), 0)
    final = out[0][:, 0]
    for code, prob in ((-1, p.kill_prob), (1, p.up_prob), (0, p.stay_prob)):
        freq = np.mean(final == code)
        se = math.sqrt(prob * (1 - prob) / n)
        assert abs(freq - prob) < 4 * se


def test_rescaled_position():
    p = BoundaryParams(2, 1, 1, 1, 10)
    path = simulate_path(p, 7, 300, 4)
    assert rescaled_position(path, p, 0) == pytest.approx(0.7)
    k = time_index(10, 1.234)
    assert k == 123
    expected = path.state(k)
    got = rescaled_position(path, p, 1.234)
    assert got == (CEMETERY if expected is CEMETERY else expected / 10)
    with pytest.raises(IndexError, match="path too short"):
        rescaled_position(path, p, 3.01)


def test_rescaled_position_cemetery():
    p = BoundaryParams(0, 0, 1, 0, 10)  # certain death from 0
    path = simulate_path(p, 0, 5, 1)
    assert rescaled_position(path, p, 0.05) is CEMETERY


def test_start_site_rounding():
    assert start_site(200, 0.5) == 100
    assert start_site(10, 0.25) == 3
    with pytest.raises(ValueError):
        start_site(10, -0.1)


def test_exact_marginal_matches_simulation():
    from halfline import _kernels

    p = BoundaryParams(1, 0.5, 1, 1, 9)
    probs, dead = exact_marginal(p, 2, 30)
    assert math.fsum(probs) + dead == pytest.approx(1.0, abs=1e-14)
    n = 200_000
    out = _kernels.ensemble(np.uint64(5), np.uint64(0), n, 2, 30, p.kill_prob, p.up_prob, np.array([30]), 0)
    final = out[0][:, 0]
    for code, prob in ((-1, dead), (0, probs[0]), (2, probs[2])):
        se = math.sqrt(prob * (1 - prob) / n)
        assert abs(np.mean(final == code) - prob) < 4 * se
