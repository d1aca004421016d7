"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``.

Uniforms and chain states are bit-identical to the compiled path. Split sums
use ``math.fsum`` (exactly rounded), so they agree with the compiled
Neumaier sums to within an ulp or two.
"""

import math

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(key, start, count, ndraws):
    first = start * ndraws + 1
    c = np.arange(first, first + count * ndraws, dtype=np.uint64)
    h = _mix64(np.uint64(key) + c * GOLDEN)
    u = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return u.reshape(count, ndraws)


def chain_states(u, cum_transition, cum_stationary):
    u = np.ascontiguousarray(u, dtype=np.float64)
    cum_transition = np.asarray(cum_transition, dtype=np.float64)
    n = u.shape[0]
    S = cum_transition.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    # step[k, s]: state at k given state s at k-1. The composition
    # step[k] o ... o step[1] is a prefix scan over maps on {0..S-1},
    # done by doubling so the loop is log2(n) vectorized gathers.
    step = np.empty((n, S), dtype=np.int64)
    for s in range(S):
        idx = np.searchsorted(cum_transition[s, :-1], u, side="right")
        step[:, s] = idx
    first = min(int(np.searchsorted(cum_stationary[:-1], u[0], side="right")), S - 1)
    step[0, :] = first
    scan = step
    d = 1
    while d < n:
        nxt = scan.copy()
        nxt[d:] = np.take_along_axis(scan[d:], scan[:-d], axis=1)
        scan = nxt
        d *= 2
    return scan[:, 0].copy()


def split_sums(x, b):
    x = np.asarray(x, dtype=np.float64)
    inside = np.abs(x) <= b
    return math.fsum(x), math.fsum(x[inside]), math.fsum(x[~inside])
