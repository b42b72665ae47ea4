"""Compare the compiled and numpy render kernels.

Usage: python3 benchmarks/bench_render.py [--genomes N] [--size S] [--repeat R]
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from chainfocus.cgp.genome import decode, random_genome
from chainfocus.cgp.render import KERNELS, ImageSpec, render


def time_backend(phenotypes, spec, backend, repeat):
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for ph in phenotypes:
            render(ph, spec, backend=backend)
        runs.append(time.perf_counter() - t0)
    return min(runs), statistics.median(runs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--genomes", type=int, default=200)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    phenotypes = [decode(random_genome(rng)) for _ in range(args.genomes)]
    spec = ImageSpec(args.size, args.size)
    active = np.mean([len(p.func) for p in phenotypes])
    print(f"{args.genomes} genomes, {args.size}x{args.size} px, mean active nodes {active:.1f}")

    results = {}
    for name in sorted(KERNELS):
        best, med = time_backend(phenotypes, spec, name, args.repeat)
        results[name] = best
        per = best / args.genomes * 1e3
        print(f"{name:>9}: best {best:.3f} s  median {med:.3f} s  ({per:.3f} ms/image)")
    if "compiled" not in results:
        print("compiled kernel not built; only the numpy fallback was timed")
        return
    ref = [render(p, spec, backend="compiled") for p in phenotypes[:20]]
    alt = [render(p, spec, backend="python") for p in phenotypes[:20]]
    diff = max(float(np.abs(a - b).max()) for a, b in zip(ref, alt))
    print(f"speedup compiled/python: {results['python'] / results['compiled']:.2f}x")
    print(f"max abs difference over 20 images: {diff:.3g}")


if __name__ == "__main__":
    main()
