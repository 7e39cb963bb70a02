"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 128] [--repeat 200]

Prints per-call times for each coefficient-space kernel and for one full
integrating-factor RK4 step of the nonlinear model.
"""

import argparse
import timeit

import numpy as np

from kolmo import _kernels
from kolmo.integrator import Stepper
from kolmo.models import ModelSpec
from kolmo.spectral import TorusConfig, operators, random_field


def kernel_cases(n):
    cfg = TorusConfig(alpha=2.0, nx=n, ny=n)
    ops = operators(cfg)
    rng = np.random.default_rng(0)
    w = random_field(cfg, rng, 0, 400).coeffs
    b = random_field(cfg, rng, 0, 400).coeffs
    shape = w.shape
    z1, z2, out = (np.empty(shape, complex) for _ in range(3))
    real = np.empty(shape)
    half = np.fft.rfft2(rng.standard_normal(shape), norm="forward")
    e = np.exp(-0.01 * ops.k2 * 0.01).astype(complex)
    return {
        "pack_pair": lambda k: k.pack_pair(w, b, ops.kx, ops.ky, ops.mask, z1, z2),
        "cross_product": lambda k: k.cross_product(z1, z2, real),
        "sin_y_shift": lambda k: k.sin_y_shift(w, ops.dx_oneplus, 1, 1.0, ops.mask, out),
        "hermitian_fill": lambda k: k.hermitian_fill(half, ops.rev_j, ops.mask, out),
        "axpy": lambda k: k.axpy(w, 0.005, e, b, out),
        "combine": lambda k: k.combine(e, e, w, 0.01, b, b, b, b, out),
    }, cfg, w


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--repeat", type=int, default=200)
    args = p.parse_args()
    backends = [_kernels.NUMPY_KERNELS]
    if _kernels.NUMBA_KERNELS is not None:
        backends.append(_kernels.NUMBA_KERNELS)
    cases, cfg, w = kernel_cases(args.n)
    print(f"grid {args.n}x{args.n}, {args.repeat} calls each, times in ms")
    print(f"{'kernel':<16}" + "".join(f"{k.name:>10}" for k in backends) + "   speedup")
    for name, fn in cases.items():
        row = []
        for k in backends:
            fn(k)  # compile / warm up
            row.append(1e3 * min(timeit.repeat(lambda: fn(k), number=args.repeat, repeat=3)) / args.repeat)
        sp = row[0] / row[-1] if len(row) > 1 else 1.0
        print(f"{name:<16}" + "".join(f"{v:10.4f}" for v in row) + f"{sp:9.2f}x")

    spec = ModelSpec("Perturbed", a=1, nu=1e-3, sigma=1)
    row = []
    steps = max(args.repeat // 10, 5)
    for k in backends:
        st = Stepper(spec, cfg, k)
        st.step(0.0, 0.01, w)
        row.append(1e3 * min(timeit.repeat(lambda: st.step(0.0, 0.01, w), number=steps, repeat=3)) / steps)
    sp = row[0] / row[-1] if len(row) > 1 else 1.0
    print(f"{'full RK4 step':<16}" + "".join(f"{v:10.4f}" for v in row) + f"{sp:9.2f}x")


if __name__ == "__main__":
    main()
