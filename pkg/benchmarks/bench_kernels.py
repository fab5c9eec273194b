"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
fed the same inputs on every backend; outputs are compared before timing.
"""

import argparse
import timeit

import numpy as np

from ltlab.kernels import backends


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((200_000, 3))
    b = rng.standard_normal((200_000, 3))
    k = rng.uniform(0.0, 10.0, 200_000)
    l = rng.uniform(0.0, 10.0, 200_000)
    q = rng.uniform(1.0, 8.0, 200_000)
    x = np.cos(np.linspace(0.01, np.pi - 0.01, 2048))
    return {
        "vec_gap_batch": lambda m: m.vec_gap_batch(a, b, 4, True),
        "scalar_pow_gaps": lambda m: m.scalar_pow_gaps(k, l, q),
        "legendre_table": lambda m: m.legendre_table(24, x),
    }


def _agree(x, y):
    if isinstance(x, tuple):
        return all(_agree(u, v) for u, v in zip(x, y))
    x, y = np.asarray(x), np.asarray(y)
    # gaps are differences of large powers, so compare on the scale of the array
    return np.allclose(x, y, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(x)))))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    found = backends()
    cases = _inputs()
    if "cython" not in found:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'kernel':<18}" + "".join(f"{name:>12}" for name in found) + f"{'speedup':>10}")
    for kernel, call in cases.items():
        outs = {name: call(mod) for name, mod in found.items()}
        if "cython" in outs and not _agree(outs["python"], outs["cython"]):
            raise SystemExit(f"{kernel}: backends disagree")
        times = {name: min(timeit.repeat(lambda m=mod: call(m), number=1, repeat=args.repeat))
                 for name, mod in found.items()}
        row = f"{kernel:<18}" + "".join(f"{1e3 * t:>10.2f}ms" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
