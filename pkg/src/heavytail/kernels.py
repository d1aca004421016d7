"""Kernel selection plus the Python-side helpers of the counter-based RNG.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Set ``HEAVYTAIL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("HEAVYTAIL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

uniforms = _impl.uniforms
chain_states = _impl.chain_states
split_sums = _impl.split_sums

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    """splitmix64 finalizer on Python ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed, stream):
    """64-bit key for the uniform stream identified by ``(seed, stream)``."""
    inner = mix64((seed & MASK64) ^ 0x6A09E667F3BCC909)
    return mix64(inner ^ ((stream * _GOLDEN) & MASK64))


def replicate_stream(n, index):
    """Stream id for replicate ``index`` at sample size ``n``."""
    return mix64(((n & MASK64) << 20) ^ mix64(index + 1))
