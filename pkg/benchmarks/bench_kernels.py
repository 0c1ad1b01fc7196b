"""Compare the numba and numpy kernel backends.

Times each kernel on desk-scale inputs (after one warm-up call so numba's
compilation is excluded), checks that both backends agree, then times one
full DSISD solve on star3 to show where the end-to-end time goes.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import time

import numpy as np

from dsisd import _accel
from dsisd.harness import load_config, make_instance, solve
from dsisd.harness.config import default_config_path


def timeit(fn, args, repeat):
    fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    ants = rng.uniform(-2, 2, (24, 2))
    grid = rng.uniform(-0.3, 0.3, (1681, 2)) + np.array([0.0, 3.0])
    k = 2 * np.pi / 0.125
    a = rng.standard_normal((100, 1681)) + 1j * rng.standard_normal((100, 1681))
    b = rng.standard_normal((8, 1681)) + 1j * rng.standard_normal((8, 1681))
    x = rng.standard_normal(400_000) + 1j * rng.standard_normal(400_000)
    pts = np.array([1, 1j, -1, -1j], dtype=np.complex128)
    return {
        "path_delay 24x1681": ("path_delay", (ants, grid, k, 1e-6)),
        "khatri_rao 800x1681": ("khatri_rao", (a, b)),
        "nearest_index 4e5": ("nearest_index", (x, pts)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"active backend: {_accel.backend()} (numba available: {_accel.HAVE_NUMBA})")
    print(f"{'kernel':24s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, (kernel, kargs) in cases(rng).items():
        f_np = getattr(_accel, kernel + "_numpy")
        f_nb = getattr(_accel, kernel + "_numba")
        r_np, r_nb = f_np(*kargs), f_nb(*kargs)
        if isinstance(r_np, tuple):
            r_np, r_nb = r_np[0], r_nb[0]
        assert np.allclose(r_np, r_nb, rtol=1e-12, atol=0), name
        t_np = timeit(f_np, kargs, args.repeat)
        t_nb = timeit(f_nb, kargs, args.repeat)
        print(f"{name:24s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.2f}")

    cfg = load_config(default_config_path())
    inst = make_instance(cfg, 30.0, cfg.seed)
    solve(cfg, inst.problem, "dsisd", diagnostics=False)  # warm-up (JIT)
    t0 = time.perf_counter()
    solve(cfg, inst.problem, "dsisd", diagnostics=False)
    t_solve = time.perf_counter() - t0
    t0 = time.perf_counter()
    solve(cfg, inst.problem, "centralized")
    t_cent = time.perf_counter() - t0
    print(f"star3 DSISD solve ({cfg.solver.iterations} it): {1e3 * t_solve:.1f} ms; "
          f"decode-and-image ({cfg.solver.alternations} alt): {1e3 * t_cent:.1f} ms "
          f"[{_accel.backend()} kernels; dense LAPACK dominates]")


if __name__ == "__main__":
    main()
