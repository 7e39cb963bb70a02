"""Elementwise coefficient-space kernels with a numba path and a numpy path.

The numba versions fuse loops that numpy would split into several temporaries.
Set ``KOLMO_NUMBA=0`` to force the numpy path (numba is also skipped when it
cannot be imported). Both implementations are always importable as
``NUMPY_KERNELS`` / ``NUMBA_KERNELS`` so tests can compare them.

All kernels write into a caller-provided ``out`` array and return it.
"""

import os
from types import SimpleNamespace

import numpy as np


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------

def _np_pack_pair(a, b, kx, ky, mask, z1, z2):
    # z1 -> (d_x a) + i (d_y b), z2 -> (d_y a) + i (d_x b) after inverse FFT
    kxc = kx[:, None]
    kyc = ky[None, :]
    np.multiply(mask, 1j * kxc * a - kyc * b, out=z1)
    np.multiply(mask, 1j * kyc * a - kxc * b, out=z2)
    return z1, z2


def _np_cross_product(z1, z2, out):
    np.subtract(z1.real * z1.imag, z2.real * z2.imag, out=out)
    return out


def _np_sin_y_shift(w, dxop, s, coef, mask, out):
    ny = w.shape[1]
    half = ny // 2
    g = dxop * w
    out[...] = 0.0
    m = np.arange(ny)
    m = np.where(m < half, m, m - ny)
    lo = m - s >= -half
    hi = m + s < half
    out[:, lo] += g[:, (m[lo] - s) % ny]
    out[:, hi] -= g[:, (m[hi] + s) % ny]
    out *= (-0.5j * coef) * mask
    return out


def _np_hermitian_fill(half, rev_j, mask, out):
    ny = out.shape[1]
    out[:, : ny // 2 + 1] = half
    out[:, ny // 2 + 1:] = np.conj(half[rev_j, ny // 2 - 1: 0: -1])
    for col in (0, ny // 2):
        c = out[:, col]
        out[:, col] = 0.5 * (c + np.conj(c[rev_j]))
    out *= mask
    return out


def _np_axpy(x, h, f, k, out):
    np.add(x, h * f * k, out=out)
    return out


def _np_axpy1(x, h, k, out):
    np.add(x, h * k, out=out)
    return out


def _np_combine(e, e2, w, h, k1, k2, k3, k4, out):
    np.add(e * w, (h / 6.0) * (e * k1 + 2.0 * e2 * (k2 + k3) + k4), out=out)
    return out


NUMPY_KERNELS = SimpleNamespace(
    name="numpy",
    pack_pair=_np_pack_pair,
    cross_product=_np_cross_product,
    sin_y_shift=_np_sin_y_shift,
    hermitian_fill=_np_hermitian_fill,
    axpy=_np_axpy,
    axpy1=_np_axpy1,
    combine=_np_combine,
)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    jit = njit(cache=True, nogil=True)

    @jit
    def pack_pair(a, b, kx, ky, mask, z1, z2):
        nx, ny = a.shape
        for i in range(nx):
            ki = kx[i]
            for j in range(ny):
                mk = mask[i, j]
                if mk == 0.0:
                    z1[i, j] = 0.0
                    z2[i, j] = 0.0
                else:
                    kj = ky[j]
                    ai = a[i, j]
                    bi = b[i, j]
                    z1[i, j] = mk * (1j * ki * ai - kj * bi)
                    z2[i, j] = mk * (1j * kj * ai - ki * bi)
        return z1, z2

    @jit
    def cross_product(z1, z2, out):
        nx, ny = out.shape
        for i in range(nx):
            for j in range(ny):
                p = z1[i, j]
                q = z2[i, j]
                out[i, j] = p.real * p.imag - q.real * q.imag
        return out

    @jit
    def sin_y_shift(w, dxop, s, coef, mask, out):
        nx, ny = w.shape
        half = ny // 2
        scale = -0.5j * coef
        for i in range(nx):
            for c in range(ny):
                mk = mask[i, c]
                if mk == 0.0:
                    out[i, c] = 0.0
                    continue
                m = c if c < half else c - ny
                acc = 0.0j
                mm = m - s
                if mm >= -half:
                    idx = mm if mm >= 0 else mm + ny
                    acc += dxop[i, idx] * w[i, idx]
                mp = m + s
                if mp < half:
                    idx = mp if mp >= 0 else mp + ny
                    acc -= dxop[i, idx] * w[i, idx]
                out[i, c] = scale * mk * acc
        return out

    @jit
    def hermitian_fill(half, rev_j, mask, out):
        nx, ny = out.shape
        hy = ny // 2
        for i in range(nx):
            r = rev_j[i]
            for c in range(ny):
                mk = mask[i, c]
                if mk == 0.0:
                    out[i, c] = 0.0
                elif c == 0 or c == hy:
                    out[i, c] = mk * 0.5 * (half[i, c] + np.conj(half[r, c]))
                elif c < hy:
                    out[i, c] = mk * half[i, c]
                else:
                    out[i, c] = mk * np.conj(half[r, ny - c])
        return out

    @jit
    def axpy(x, h, f, k, out):
        nx, ny = out.shape
        for i in range(nx):
            for j in range(ny):
                out[i, j] = x[i, j] + h * f[i, j] * k[i, j]
        return out

    @jit
    def axpy1(x, h, k, out):
        nx, ny = out.shape
        for i in range(nx):
            for j in range(ny):
                out[i, j] = x[i, j] + h * k[i, j]
        return out

    @jit
    def combine(e, e2, w, h, k1, k2, k3, k4, out):
        nx, ny = out.shape
        h6 = h / 6.0
        for i in range(nx):
            for j in range(ny):
                ei = e[i, j]
                out[i, j] = ei * w[i, j] + h6 * (
                    ei * k1[i, j] + 2.0 * e2[i, j] * (k2[i, j] + k3[i, j]) + k4[i, j]
                )
        return out

    return SimpleNamespace(
        name="numba",
        pack_pair=pack_pair,
        cross_product=cross_product,
        sin_y_shift=sin_y_shift,
        hermitian_fill=hermitian_fill,
        axpy=axpy,
        axpy1=axpy1,
        combine=combine,
    )


def _numba_requested():
    flag = os.environ.get("KOLMO_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


try:
    NUMBA_KERNELS = _build_numba()
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_KERNELS = None

K = NUMBA_KERNELS if (NUMBA_KERNELS is not None and _numba_requested()) else NUMPY_KERNELS
BACKEND = K.name
