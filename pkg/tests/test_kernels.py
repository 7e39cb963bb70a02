import os
import subprocess
import sys

import numpy as np
import pytest

from kolmo import _kernels
from kolmo.spectral import TorusConfig, operators, random_field

pytestmark = pytest.mark.skipif(_kernels.NUMBA_KERNELS is None, reason="numba not importable")

NP, NB = _kernels.NUMPY_KERNELS, _kernels.NUMBA_KERNELS


@pytest.fixture(params=[(16, 16, 1.0), (32, 64, 0.5), (24, 12, 1.0)])
def setup(request):
    nx, ny, beta = request.param
    cfg = TorusConfig(alpha=1.7, nx=nx, ny=ny, beta=beta)
    rng = np.random.default_rng(nx * ny)
    a = random_field(cfg, rng, 0, 1e4, in_x=False).coeffs
    b = random_field(cfg, rng, 0, 1e4, in_x=False).coeffs
    return cfg, operators(cfg), a, b, rng


def both(fn, shape, dtype=complex, n_out=1):
    outs = []
    for k in (NP, NB):
        bufs = [np.full(shape, np.nan, dtype) for _ in range(n_out)]
        fn(k, *bufs)
        outs.append(bufs)
    return outs


def test_pack_pair(setup):
    cfg, ops, a, b, _ = setup
    (p1, p2), (q1, q2) = both(lambda k, z1, z2: k.pack_pair(a, b, ops.kx, ops.ky, ops.mask, z1, z2),
                              a.shape, n_out=2)
    np.testing.assert_allclose(q1, p1, rtol=0, atol=1e-13)
    np.testing.assert_allclose(q2, p2, rtol=0, atol=1e-13)


def test_cross_product(setup):
    _, _, a, b, _ = setup
    (p,), (q,) = both(lambda k, out: k.cross_product(a, b, out), a.shape, float)
    np.testing.assert_array_equal(p, q)


@pytest.mark.parametrize("coef", [1.0, -0.37])
def test_sin_y_shift(setup, coef):
    cfg, ops, a, _, _ = setup
    s = cfg.y_shift
    (p,), (q,) = both(lambda k, out: k.sin_y_shift(a, ops.dx_oneplus, s, coef, ops.mask, out), a.shape)
    np.testing.assert_allclose(q, p, rtol=0, atol=1e-14 * np.abs(p).max())


def test_hermitian_fill(setup):
    cfg, ops, _, _, rng = setup
    half = np.fft.rfft2(rng.standard_normal((cfg.nx, cfg.ny)), norm="forward")
    for mask in (ops.ones, ops.mask):
        (p,), (q,) = both(lambda k, out: k.hermitian_fill(half, ops.rev_j, mask, out), half.shape[:1] + (cfg.ny,))
        np.testing.assert_array_equal(p, q)


def test_hermitian_fill_recovers_full_transform(setup):
    cfg, ops, _, _, rng = setup
    v = rng.standard_normal((cfg.nx, cfg.ny))
    full = np.fft.fft2(v, norm="forward")
    half = np.fft.rfft2(v, norm="forward")
    for k in (NP, NB):
        out = np.empty_like(full)
        k.hermitian_fill(half, ops.rev_j, ops.ones, out)
        np.testing.assert_allclose(out, full, rtol=0, atol=1e-15)


def test_update_kernels(setup):
    _, ops, a, b, rng = setup
    e = np.exp(-0.3 * ops.k2 * 0.01).astype(complex)
    e2 = np.sqrt(e)
    k3 = a * 0.5j
    (p,), (q,) = both(lambda k, out: k.axpy(a, 0.01, e, b, out), a.shape)
    np.testing.assert_allclose(q, p, rtol=1e-15, atol=1e-15)
    (p,), (q,) = both(lambda k, out: k.axpy1(a, 0.01, b, out), a.shape)
    np.testing.assert_allclose(q, p, rtol=1e-15, atol=1e-15)
    (p,), (q,) = both(lambda k, out: k.combine(e, e2, a, 0.01, b, k3, a, b, out), a.shape)
    np.testing.assert_allclose(q, p, rtol=1e-14, atol=1e-15)


def test_axpy_in_place_aliasing(setup):
    _, ops, a, b, _ = setup
    f = np.exp(-ops.k2 * 1e-3).astype(complex)
    ref = a + 0.1 * f * b
    for k in (NP, NB):
        x = a.copy()
        k.axpy(x, 0.1, f, b, x)
        np.testing.assert_allclose(x, ref, rtol=1e-15, atol=1e-15)


@pytest.mark.parametrize("flag, expected", [("0", "numpy"), ("off", "numpy"), ("1", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, KOLMO_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "import kolmo; print(kolmo.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
