"""Benchmark the brute-force placement search backends.

The enumeration kernel has three implementations: a numba-compiled loop
(default when numba imports), a chunked numpy fallback, and the plain
Python reference. Run:

    python benchmarks/bench_bruteforce.py [--devices N] [--modules M]
"""

import argparse
import time

from splitshare import kernels
from splitshare.instance_gen import GenParams, generate
from splitshare.sharing import build_shared_catalog


def make_problem(n_devices: int, n_modules: int, seed: int = 0):
    # n_modules distinct modules: one model with (n_modules - 1) encoders
    params = GenParams(seed=seed, n_devices=(n_devices, n_devices),
                       n_models=(1, 1),
                       encoders_per_model=(n_modules - 1, n_modules - 1),
                       share_probability=0.0, n_requests=(3, 3),
                       capacity_slack=(4.0, 6.0))
    s = generate(params)
    return kernels.pack_problem(s, build_shared_catalog(s), list(s.trace))


def bench(fn, *args, repeat: int = 3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--devices", type=int, default=5)
    ap.add_argument("--modules", type=int, default=6,
                    help="distinct modules (search space = devices**modules)")
    args = ap.parse_args()

    p = make_problem(args.devices, args.modules)
    n_codes = p.comp.shape[1] ** p.comp.shape[0]
    print(f"devices={args.devices} modules={p.comp.shape[0]} "
          f"candidates={n_codes}")

    kernel_args = (p.comp, p.mem, p.cap, p.lat, p.bw, p.enc_idx, p.enc_in,
                   p.enc_out, p.head_idx, p.src_idx, 0, n_codes)

    t_py, r_py = bench(kernels._search_py, *kernel_args, repeat=1)
    print(f"python : {t_py * 1e3:9.1f} ms  obj={r_py[0]:.6f}")

    t_np, r_np = bench(kernels._search_np, p, 0, n_codes)
    print(f"numpy  : {t_np * 1e3:9.1f} ms  obj={r_np[0]:.6f}  "
          f"speedup vs python {t_py / t_np:5.1f}x")
    assert r_np == r_py

    if kernels._search_nb is not None:
        kernels._search_nb(*kernel_args)  # warm the JIT cache
        t_nb, r_nb = bench(kernels._search_nb, *kernel_args)
        print(f"numba  : {t_nb * 1e3:9.1f} ms  obj={r_nb[0]:.6f}  "
              f"speedup vs python {t_py / t_nb:5.1f}x, "
              f"vs numpy {t_np / t_nb:5.1f}x")
        assert r_nb == r_py
    else:
        print("numba  : unavailable")


if __name__ == "__main__":
    main()
