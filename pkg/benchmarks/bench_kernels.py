"""Time the compiled groupwise kernel against the numpy fallback.

    python benchmarks/bench_kernels.py --T 20000 --repeat 3
"""

import argparse
import time

import numpy as np

from grouphedge import _kernels_py
from grouphedge.data import SyntheticSpec, gen_synthetic

try:
    from grouphedge import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def inputs(T, d, seed=0):
    r = gen_synthetic(SyntheticSpec(T=T, d=d, seed=seed))
    K, D = r.activity.shape[1], r.dim
    return dict(
        X=np.ascontiguousarray(r.contexts), act=np.ascontiguousarray(r.activity),
        y=np.ascontiguousarray(r.outcomes), a_inv=np.broadcast_to(np.eye(D), (K, D, D)).copy(),
        b=np.zeros((K, D)), R=np.zeros(K), C=np.zeros(K), log_prior=np.full(K, -np.log(K)),
        uniforms=np.random.default_rng(seed).random(T),
    )


def time_backend(mod, inp, repeat):
    best = np.inf
    for _ in range(repeat):
        s = {k: v.copy() for k, v in inp.items()}
        t0 = time.perf_counter()
        mod.run_groupwise_vaw(s["X"], s["act"], s["y"], s["a_inv"], s["b"], s["R"], s["C"],
                              s["log_prior"], False, s["uniforms"], True)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=20000)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    inp = inputs(args.T, args.d)
    py = time_backend(_kernels_py, inp, args.repeat)
    print(f"groupwise  python  T={args.T}: {py:8.3f} s  ({1e6 * py / args.T:7.2f} us/round)")
    if _kernels_cy is None:
        print("compiled extension not built; skipping")
        return
    cy = time_backend(_kernels_cy, inp, args.repeat)
    print(f"groupwise  cython  T={args.T}: {cy:8.3f} s  ({1e6 * cy / args.T:7.2f} us/round)  speedup {py / cy:5.1f}x")

    r = gen_synthetic(SyntheticSpec(T=args.T, d=args.d))
    X, y = np.ascontiguousarray(r.contexts), np.ascontiguousarray(r.outcomes)
    for name, mod in (("python", _kernels_py), ("cython", _kernels_cy)):
        t0 = time.perf_counter()
        mod.run_baseline_vaw(X, y, 1.0)
        print(f"baseline   {name}  T={args.T}: {time.perf_counter() - t0:8.3f} s")


if __name__ == "__main__":
    main()
