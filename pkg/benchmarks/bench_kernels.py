"""Compare the compiled and numpy geometry kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Times mesh-to-mesh distance (accelerated and brute force), the point-in-mesh
test, and relation inference over a synthetic scene on each available
backend, and checks that both backends return the same numbers.
"""

import argparse
import time

import numpy as np

from bimenrich import _pykernels
from bimenrich.mesh import box_mesh
from bimenrich.synth import SceneSpec, generate_scene

try:
    from bimenrich import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t)
    return min(times), result


def workloads():
    rng = np.random.default_rng(0)
    objects, _ = generate_scene(SceneSpec(seed=1))
    walls = [m.corners() for _, c, m in objects if c == "wall"]
    wall_a, wall_b = walls[0], walls[1]
    soup_a = rng.normal(size=(300, 3, 3))
    soup_b = rng.normal(size=(300, 3, 3)) + 4.0
    points = rng.uniform(-1, 2, size=(5000, 3))
    cube = box_mesh((0, 0, 0), (1, 1, 1)).corners()

    def scene_pairs(k):
        def run():
            corners = [m.corners() for _, _, m in objects]
            return min(k.mesh_distance(a, b) for i, a in enumerate(corners)
                       for b in corners[i + 1:])
        return run

    return {
        "mesh_distance, wall pair": lambda k: k.mesh_distance(wall_a, wall_b),
        "mesh_distance, 300x300 soup": lambda k: k.mesh_distance(soup_a, soup_b),
        "brute force, 300x300 soup": lambda k: k.mesh_distance_bruteforce(soup_a, soup_b),
        "points_inside, 5000 points": lambda k: int(k.points_inside(points, cube).sum()),
        f"all pairs in a {len(objects)}-object scene": lambda k: scene_pairs(k)(),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = [("numpy", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled extension not built; timing the numpy fallback only")

    header = f"{'workload':38s}" + "".join(f"{name:>12s}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for label, work in workloads().items():
        timings, results = [], []
        for _, k in backends:
            t, r = best_of(lambda: work(k), args.repeat)
            timings.append(t)
            results.append(r)
        row = f"{label:38s}" + "".join(f"{t * 1e3:10.2f}ms" for t in timings)
        if len(backends) == 2:
            row += f"{timings[0] / timings[1]:9.1f}x"
            if not np.isclose(results[0], results[1], rtol=0, atol=1e-12):
                row += "  MISMATCH"
        print(row)


if __name__ == "__main__":
    main()
