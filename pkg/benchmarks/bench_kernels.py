"""Compare the numba kernels with their numpy twins.

Run ``python benchmarks/bench_kernels.py [--repeat N] [--threads N]``.  Each
line reports the best wall time of both paths and the largest absolute
difference between their outputs.
"""

import argparse
import time

import numpy as np

from dislab import kernels
from dislab.mesh import generate_mesh
from dislab.model import UnitDisk


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def _maxdiff(a, b):
    if isinstance(a, tuple):
        return max(_maxdiff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def cases(rng):
    pts = rng.uniform(-1, 1, size=(200_000, 2))
    src = rng.uniform(-0.8, 0.8, size=(8, 2))
    b = rng.uniform(-1.5, 1.5, size=8)
    mesh = generate_mesh(UnitDisk(), 0.02)
    area, _, _ = kernels.p1_element_matrices_np(mesh.vertices, mesh.triangles, 1.0, 4.0)
    ev = rng.normal(size=(len(mesh.triangles), 2))
    return [
        ("strain_sum (200k pts, 8 sources)",
         lambda: kernels.strain_sum_np(pts, src, b, 1.7),
         lambda: kernels.strain_sum_nb(pts, src, b, 1.7)),
        ("partition_weight (200k pts, 8 centers)",
         lambda: kernels.partition_weight_np(pts, src, 1.7, 3),
         lambda: kernels.partition_weight_nb(pts, src, 1.7, 3)),
        (f"p1_element_matrices ({len(mesh.triangles)} triangles)",
         lambda: kernels.p1_element_matrices_np(mesh.vertices, mesh.triangles, 1.0, 4.0),
         lambda: kernels.p1_element_matrices_nb(mesh.vertices, mesh.triangles, 1.0, 4.0)),
        (f"vertex_average ({len(mesh.triangles)} triangles)",
         lambda: kernels.vertex_average_np(mesh.triangles, area, ev, mesh.n_vertices),
         lambda: kernels.vertex_average_nb(mesh.triangles, area, ev, mesh.n_vertices)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    kernels.set_threads(args.threads)
    rng = np.random.default_rng(0)
    print(f"{'kernel':45s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, f_np, f_nb in cases(rng):
        t_np, o_np = best_of(f_np, args.repeat)
        t_nb, o_nb = best_of(f_nb, args.repeat)
        print(f"{name:45s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.1f} "
              f"{_maxdiff(o_np, o_nb):10.2e}")


if __name__ == "__main__":
    main()
