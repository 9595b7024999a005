"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--walks 200000] [--json out.json]
"""
import argparse
import json
import time

import numpy as np

from abbundle import _core
from abbundle import liegroups as lg
from abbundle import propagator as pr
from abbundle.geometry import punctures_from_points
from abbundle.holonomy import FluxScenario


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(walks, rng):
    px, py = np.array([3.5, -2.5, 0.5]), np.array([0.5, 4.5, -3.5])
    steps = np.ascontiguousarray(rng.integers(0, 4, size=(walks, 24), dtype=np.int8))
    idx = np.arange(0, walks, 4, dtype=np.int64)
    loop = np.ascontiguousarray(np.cumsum(rng.normal(size=(20_000, 2)), axis=0))
    mats = np.ascontiguousarray(np.array([lg.exp(lg.random_algebra("SU2", rng, scale=0.1)).matrix for _ in range(20_000)]))
    return {
        "ray_crossings": lambda impl: impl.ray_crossings(loop, px, py),
        "walk_ends": lambda impl: impl.walk_ends(steps, 0, 0, px, py, 0.5),
        "walk_letters": lambda impl: impl.walk_letters(steps, idx, 0, 0, px, py),
        "chunk_products": lambda impl: impl.chunk_products(mats, 64),
    }


def sampler_case(walks):
    s = FluxScenario(
        1, tuple(punctures_from_points([(4.5, 2.5)])), (-3.0, 4.0), "U1", (lg.algebra_from_coeffs("U1", [1.0]),)
    )
    screen = np.stack([np.full(11, 8.0), np.arange(-10.0, 11.0, 2.0)], axis=1)
    ens = pr.WalkEnsemble(s, (0.0, 0.0), 24, walks, seed=0)
    return lambda: pr.sample_screen_tables(ens, screen)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--walks", type=int, default=200_000)
    ap.add_argument("--json", help="write the timings here as well")
    args = ap.parse_args(argv)

    backends = _core.available_backends()
    rng = np.random.default_rng(0)
    rows = []
    for name, case in kernel_cases(args.walks, rng).items():
        row = {"kernel": name}
        for b, impl in backends.items():
            case(impl)  # warm up
            row[b] = best_of(lambda: case(impl), args.repeat)
        rows.append(row)

    # end-to-end sampler with whichever backend is active in this process
    run = sampler_case(args.walks)
    run()
    rows.append({"kernel": f"sample_screen_tables[{_core.BACKEND}]", _core.BACKEND: best_of(run, args.repeat)})

    names = list(backends)
    print(f"{'kernel':32s}" + "".join(f"{n:>12s}" for n in names) + f"{'speedup':>10s}")
    for row in rows:
        cells = "".join(f"{row[n] * 1e3:10.2f}ms" if n in row else f"{'-':>12s}" for n in names)
        speed = f"{row['python'] / row['cython']:9.1f}x" if "python" in row and "cython" in row else f"{'-':>10s}"
        print(f"{row['kernel']:32s}{cells}{speed}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"walks": args.walks, "repeat": args.repeat, "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
