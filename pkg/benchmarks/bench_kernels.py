"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from heavytail import _kernels_py, kernels

try:
    from heavytail import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def cases(mod, n):
    key = kernels.stream_key(1, 2)
    u = mod.uniforms(key, 0, n, 3)
    P = np.array([[0.9, 0.1], [0.1, 0.9]])
    cum_p = np.cumsum(P, axis=1)
    cum_pi = np.cumsum([0.5, 0.5])
    x = np.random.default_rng(0).standard_t(2.5, n)
    return {
        "uniforms": lambda: mod.uniforms(key, 0, n, 3),
        "chain_states": lambda: mod.chain_states(u[:, 0].copy(), cum_p, cum_pi),
        "split_sums": lambda: mod.split_sums(x, 3.0),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _kernels_py}
    if _kernels_cy is not None:
        backends["cython"] = _kernels_cy
    else:
        print("compiled extension not built; timing the fallback only")
    timings = {}
    for name, mod in backends.items():
        for case, fn in cases(mod, args.n).items():
            timings[name, case] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<14}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for case in ("uniforms", "chain_states", "split_sums"):
        py = timings["python", case]
        cy = timings.get(("cython", case))
        cy_txt = f"{cy * 1e3:14.2f}{py / cy:9.1f}x" if cy else f"{'-':>14}{'-':>10}"
        print(f"{case:<14}{py * 1e3:14.2f}{cy_txt}")


if __name__ == "__main__":
    main()
