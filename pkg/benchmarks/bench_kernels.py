"""Timing and agreement check: compiled kernels vs the numpy fallback.

Run as a script; needs an install with the extension built to have
anything to compare (otherwise it reports the fallback timings alone).

    python benchmarks/bench_kernels.py --dim 150 --steps 200 --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bosonic_qpe.kernels import HAVE_COMPILED, get_implementation


def _random_density(dim: int, rng) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return np.ascontiguousarray(rho / np.trace(rho).real)


def _time(fn, repeat: int) -> tuple[float, object]:
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench(dim: int, steps: int, m: int, repeat: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    rho = _random_density(2 * dim, rng)
    hdiag = np.concatenate([np.zeros(dim), -12.566 * np.arange(dim)])
    upper = 135.0 * np.sqrt(np.arange(1, dim))
    amp = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    amp /= np.linalg.norm(amp)
    wfrac = rng.uniform(0, 4, size=dim)
    uniforms = rng.uniform(size=m)
    dt = 1e-4

    impls = [("numpy", get_implementation(False))]
    if HAVE_COMPILED:
        impls.append(("compiled", get_implementation(True)))
    else:
        print("compiled extension not available; timing the fallback only")

    cases = {
        "rk4-diag": lambda impl: impl.lindblad_rk4_diag(
            rho.copy(), hdiag, 0.02, 0.001, dt, steps),
        "rk4-tridiag": lambda impl: impl.lindblad_rk4_tridiag(
            rho.copy(), upper.astype(np.complex128), 0.02, 0.001, dt, steps),
        "sample-bits": lambda impl: impl.sample_diagonal_bits(
            amp.copy(), wfrac, m, 1, uniforms, np.zeros(m, dtype=np.int64)),
    }

    print(f"dim={dim} steps={steps} m={m} (best of {repeat})")
    for name, call in cases.items():
        row = [f"{name:<12}"]
        results = []
        for label, impl in impls:
            elapsed, res = _time(lambda: call(impl), repeat)
            results.append(np.asarray(res))
            row.append(f"{label} {elapsed * 1e3:9.2f} ms")
        if len(results) == 2:
            dev = float(np.max(np.abs(results[0] - results[1])))
            row.append(f"max|diff| {dev:.2e}")
        print("  ".join(row))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dim", type=int, default=150)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--m", type=int, default=8)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    bench(args.dim, args.steps, args.m, args.repeat, args.seed)


if __name__ == "__main__":
    main()
