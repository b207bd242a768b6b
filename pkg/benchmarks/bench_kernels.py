"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from annulus_dilation import _pykernels
from annulus_dilation.linalg import complex_gaussian, rng_from_seed

try:
    from annulus_dilation import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    for n in (4, 8, 16, 32):
        a = complex_gaussian(rng, (n, n))
        yield f"jacobi_svd n={n}", lambda k, a=a: k.jacobi_svd(a)
        h = a + a.conj().T
        yield f"jacobi_eigh n={n}", lambda k, h=h: k.jacobi_eigh(h)
    alpha = 0.6 * np.exp(2j * np.pi * rng.uniform(0, 1, 4096))
    for terms in (40, 400):
        yield f"jk_series pts=4096 terms={terms}", lambda k, t=terms: k.jk_series(alpha, 1.7, 0.5, t, t)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = rng_from_seed(0)
    print(f"{'kernel':34s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng):
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:34s} {t_py:10.3f} {'n/a':>10s} {'':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:34s} {t_py:10.3f} {t_cy:10.3f} {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
