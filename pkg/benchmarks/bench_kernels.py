"""Compare the compiled and numpy forest kernels.

    python benchmarks/bench_kernels.py --rows 2000 --trees 100 --repeat 3

Times a batch of split searches, tree application and full forest training on
each backend, and checks both backends grow the same forest.
"""

import argparse
import time

import numpy as np

from scam_radar import _kernels_py, forest, kernels
from scam_radar.features import N_FEATURES

try:
    from scam_radar import _kernels_c
except ImportError:
    _kernels_c = None


def synthetic(rows, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, N_FEATURES))
    X[:, ::3] = np.round(X[:, ::3] * 4)  # some tied values, like count features
    y = (X[:, 0] + X[:, 5] * X[:, 7] + 0.5 * rng.normal(size=rows) > 0).astype(np.int8)
    return X, y


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def use(backend):
    kernels.best_split = backend.best_split
    kernels.apply_tree = backend.apply_tree


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--trees", type=int, default=100)
    ap.add_argument("--splits", type=int, default=500, help="split searches per timing")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    X, y = synthetic(args.rows, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    idx = np.sort(rng.integers(0, args.rows, size=args.rows)).astype(np.int64)
    orders = [rng.permutation(N_FEATURES).astype(np.int64) for _ in range(args.splits)]
    params = forest.Hyperparams(n_trees=args.trees)

    backends = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])
    results = {}
    for name, mod in backends:
        use(mod)
        t_split, _ = best_of(lambda: [mod.best_split(X, y, idx, o, 6, 1) for o in orders], args.repeat)
        t_train, model = best_of(lambda: forest.train(X, y, params, seed=args.seed), args.repeat)
        t_apply, _ = best_of(lambda: [mod.apply_tree(t.feature, t.threshold, t.left, t.right, X)
                                      for t in model.trees], args.repeat)
        results[name] = (t_split, t_apply, t_train, model.to_json())
    use(kernels._impl)

    print(f"rows={args.rows} features={N_FEATURES} trees={args.trees} splits={args.splits} "
          f"(best of {args.repeat})")
    print(f"{'backend':8} {'split ms':>10} {'apply ms':>10} {'train s':>9}")
    for name, (ts, ta, tt, _) in results.items():
        print(f"{name:8} {ts * 1e3:10.1f} {ta * 1e3:10.1f} {tt:9.3f}")
    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(f"speedup  {py[0] / cy[0]:10.1f}x {py[1] / cy[1]:9.1f}x {py[2] / cy[2]:8.1f}x")
        print("identical forests:", py[3] == cy[3])
    else:
        print("compiled kernels not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
