"""Numba kernels shared by path simulation and the ensemble estimators.

States are encoded as int64 with -1 standing for the cemetery. All kernels
consume the stream from :mod:`halfline.rng` in exactly the same way, so the
dense path, the streaming summary and the Dynkin accumulator of a given
(seed, replicate) describe the same trajectory.
"""

import os

import numba as nb
import numpy as np

from halfline.rng import bulk_block, origin_uniform, popcount64, replicate_key

DEAD = -1

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # the bundled TBB is too old here and only produces a warning
    nb.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]


@nb.njit(inline="always", cache=True)
def _origin_move(u, p_kill, p_up):
    if u < p_kill:
        return DEAD
    if u < p_kill + p_up:
        return 1
    return 0


@nb.njit(cache=True)
def dense_path(seed, replicate, start, steps, p_kill, p_up):
    key = replicate_key(seed, replicate)
    out = np.empty(steps + 1, np.int64)
    x = start
    out[0] = x
    bits = np.uint64(0)
    for s in range(steps):
        if (s & 63) == 0:
            bits = bulk_block(key, s >> 6)
        if x > 0:
            x += 2 * np.int64((bits >> np.uint64(s & 63)) & np.uint64(1)) - 1
        elif x == 0:
            x = _origin_move(origin_uniform(key, s), p_kill, p_up)
        out[s + 1] = x
    return out


@nb.njit(parallel=True, cache=True)
def ensemble(seed, first_rep, nrep, start, steps, p_kill, p_up, checkpoints, occ_site):
    """Streaming summaries for replicates ``first_rep .. first_rep+nrep-1``.

    Returns (states at checkpoints, local time at 0, first hitting step of 0,
    occupation count of sites <= occ_site, absorption step). Hitting and
    absorption steps are -1 when the event does not happen by ``steps``.
    """
    ncheck = checkpoints.shape[0]
    states = np.empty((nrep, ncheck), np.int64)
    local_time = np.zeros(nrep, np.int64)
    hit0 = np.full(nrep, -1, np.int64)
    occupation = np.zeros(nrep, np.int64)
    death = np.full(nrep, -1, np.int64)
    guard = 64 + max(occ_site, 0)
    for i in nb.prange(nrep):
        key = replicate_key(seed, first_rep + i)
        x = start
        c = 0
        lt = 0
        occ = 0
        h = -1
        bits = np.uint64(0)
        s = 0
        while s < steps and x != DEAD:
            while c < ncheck and checkpoints[c] == s:
                states[i, c] = x
                c += 1
            if (s & 63) == 0:
                bits = bulk_block(key, s >> 6)
                if x > guard and s + 64 <= steps:
                    # whole block stays in the bulk: advance by popcount
                    while c < ncheck and checkpoints[c] < s + 64:
                        j = checkpoints[c] - s
                        mask = (np.uint64(1) << np.uint64(j)) - np.uint64(1)
                        states[i, c] = x + 2 * popcount64(bits & mask) - j
                        c += 1
                    x += 2 * popcount64(bits) - 64
                    s += 64
                    continue
            if x == 0:
                lt += 1
                if h < 0:
                    h = s
            if x <= occ_site:
                occ += 1
            if x > 0:
                x += 2 * np.int64((bits >> np.uint64(s & 63)) & np.uint64(1)) - 1
            else:
                x = _origin_move(origin_uniform(key, s), p_kill, p_up)
                if x == DEAD:
                    death[i] = s + 1
                    break
            s += 1
        if x != DEAD:
            while c < ncheck:
                states[i, c] = x
                c += 1
            if x == 0:
                lt += 1
                if h < 0:
                    h = steps
            if x <= occ_site:
                occ += 1
        else:
            while c < ncheck:
                states[i, c] = DEAD
                c += 1
        local_time[i] = lt
        hit0[i] = h
        occupation[i] = occ
    return states, local_time, hit0, occupation, death


@nb.njit(parallel=True, cache=True)
def dynkin_terminal(seed, first_rep, nrep, start, steps, p_kill, p_up, fvals, lfvals):
    """Dynkin martingale value after ``steps`` steps for each replicate.

    ``fvals``/``lfvals`` hold f and its one-step generator on sites
    0..len-1; a walker leaving that range flags its entry with NaN.
    """
    out = np.empty(nrep, np.float64)
    m = fvals.shape[0]
    for i in nb.prange(nrep):
        key = replicate_key(seed, first_rep + i)
        x = start
        comp = 0.0
        ok = True
        bits = np.uint64(0)
        for s in range(steps):
            if (s & 63) == 0:
                bits = bulk_block(key, s >> 6)
            if x == DEAD:
                break
            if x >= m:
                ok = False
                break
            comp += lfvals[x]
            if x > 0:
                x += 2 * np.int64((bits >> np.uint64(s & 63)) & np.uint64(1)) - 1
            else:
                x = _origin_move(origin_uniform(key, s), p_kill, p_up)
        if not ok or x >= m:
            out[i] = np.nan
        else:
            fx = 0.0 if x == DEAD else fvals[x]
            out[i] = fx - fvals[start] - comp
    return out
