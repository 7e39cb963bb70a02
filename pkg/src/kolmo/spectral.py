"""Fourier representation of real, mean-zero fields on the flat torus.

The torus is ``[0, 2*pi/alpha) x [0, 2*pi/beta)``. A field is stored as the
full complex coefficient array in FFT order: entry ``[j % nx, m % ny]`` is the
amplitude of ``exp(i*(alpha*j*x + beta*m*y))`` with ``j`` in ``[-nx/2, nx/2)``
and ``m`` in ``[-ny/2, ny/2)``. A unit cosine therefore carries two
coefficients of 1/2.

Bilinear products are dealiased by truncation: every operator output is
restricted to the band ``|j| <= Kx, |m| <= Ky`` with ``3*K < n``, which makes
quadratic products of band-limited fields alias-free on the native grid.
"""

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from types import SimpleNamespace

import numpy as np
import scipy.fft as sfft

from . import _kernels
from .errors import (
    ConfigMismatch,
    DegenerateMode,
    InvalidConfig,
    MeanNotZero,
    NotInX,
    WrongAspect,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusConfig:
    """Aspect ratio, grid size and dealiasing rule of the periodic box.

    ``beta`` defaults to 1 (y-period 2*pi); when set, ``1/beta`` must be an
    integer so that ``cos y`` is still a lattice mode.
    """

    alpha: float
    nx: int = 128
    ny: int = 128
    beta: float = 1.0
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidConfig("alpha", f"must be positive, got {self.alpha!r}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise InvalidConfig("beta", f"must be positive, got {self.beta!r}")
        inv = 1.0 / self.beta
        if abs(inv - round(inv)) > 1e-9:
            raise InvalidConfig("beta", f"1/beta must be an integer, got 1/{self.beta!r}")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise InvalidConfig(name, f"must be an even integer >= 4, got {n!r}")
        if not (0.0 < self.dealias_fraction <= 1.0):
            raise InvalidConfig(
                "dealias_fraction", f"must lie in (0, 1], got {self.dealias_fraction!r}"
            )

    @property
    def lx(self):
        return TWO_PI / self.alpha

    @property
    def ly(self):
        return TWO_PI / self.beta

    @property
    def area(self):
        return self.lx * self.ly

    @property
    def dx(self):
        return self.lx / self.nx

    @property
    def dy(self):
        return self.ly / self.ny

    @property
    def y_shift(self):
        """Lattice index of the physical wavenumber 1 in y (the ``sin y`` mode)."""
        return int(round(1.0 / self.beta))

    @property
    def cutoff(self):
        """Largest retained |j| and |m| after dealiasing."""
        kx = max(int(math.ceil(self.dealias_fraction * self.nx / 2 - 1e-12)) - 1, 0)
        ky = max(int(math.ceil(self.dealias_fraction * self.ny / 2 - 1e-12)) - 1, 0)
        return kx, ky

    def grid(self):
        """Collocation coordinates ``(x, y)``, each of shape ``(nx, ny)``."""
        x = np.arange(self.nx) * self.dx
        y = np.arange(self.ny) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "nx": self.nx,
            "ny": self.ny,
            "dealias_fraction": self.dealias_fraction,
        }


@lru_cache(maxsize=64)
def operators(config: TorusConfig):
    """Wavenumber tables for ``config``; cached and read-only."""
    nx, ny = config.nx, config.ny
    j = np.fft.fftfreq(nx, 1.0 / nx)
    m = np.fft.fftfreq(ny, 1.0 / ny)
    kx = config.alpha * j
    ky = config.beta * m
    k2 = kx[:, None] ** 2 + ky[None, :] ** 2
    inv_k2 = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv_k2, where=k2 > 0)
    cx, cy = config.cutoff
    mask = ((np.abs(j)[:, None] <= cx) & (np.abs(m)[None, :] <= cy)).astype(float)
    mask[0, 0] = 0.0
    oneplus = 1.0 - inv_k2
    ops = SimpleNamespace(
        j=j.astype(int),
        m=m.astype(int),
        kx=kx,
        ky=ky,
        k2=k2,
        inv_k2=inv_k2,
        neg_inv_k2=-inv_k2,
        mask=mask,
        oneplus=oneplus,
        dx_oneplus=1j * kx[:, None] * oneplus,
        rev_j=(-np.arange(nx)) % nx,
        rev_m=(-np.arange(ny)) % ny,
        ones=np.ones((nx, ny)),
        unit=np.abs(k2 - 1.0) <= 1e-12,
        sub_unit=k2 < 1.0 - 1e-12,
    )
    for v in vars(ops).values():
        if isinstance(v, np.ndarray):
            v.setflags(write=False)
    return ops


def _readonly(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients of a real, mean-zero scalar field (see module docstring)."""

    config: TorusConfig
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = _readonly(self.coeffs)
        if c.shape != (self.config.nx, self.config.ny):
            raise ConfigMismatch(
                f"coefficient shape {c.shape} does not match grid "
                f"({self.config.nx}, {self.config.ny})"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, config):
        return cls(config, np.zeros((config.nx, config.ny), complex))

    @classmethod
    def from_modes(cls, config, modes):
        """Build ``sum c*exp(i k.x) + c.c.`` from ``{(j, m): c}``."""
        c = np.zeros((config.nx, config.ny), complex)
        for (j, m), amp in modes.items():
            if (j, m) == (0, 0):
                continue
            _check_index(config, j, m)
            c[j % config.nx, m % config.ny] += amp
            c[-j % config.nx, -m % config.ny] += np.conj(amp)
        return cls(config, c)

    def coeff(self, j, m):
        return complex(self.coeffs[j % self.config.nx, m % self.config.ny])

    def _same(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.config != self.config:
            raise ConfigMismatch(f"{self.config} vs {other.config}")
        return other

    def __add__(self, other):
        if self._same(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.config, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._same(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.config, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.config, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return SpectralField(self.config, self.coeffs * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Point values on the uniform ``nx x ny`` collocation grid."""

    config: TorusConfig
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.config.nx, self.config.ny):
            raise ConfigMismatch(f"value shape {v.shape} does not match grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _check_index(config, j, m):
    if not (-config.nx // 2 < j < config.nx // 2 and -config.ny // 2 < m < config.ny // 2):
        raise IndexError(f"mode ({j}, {m}) does not fit a {config.nx}x{config.ny} grid")


def plane_wave(config, j, m, kind="cos", amplitude=1.0):
    """``amplitude * cos`` or ``sin`` of ``alpha*j*x + beta*m*y``."""
    if kind == "cos":
        c = 0.5 * amplitude
    elif kind == "sin":
        c = -0.5j * amplitude
    else:
        raise ValueError(f"kind must be 'cos' or 'sin', got {kind!r}")
    return SpectralField.from_modes(config, {(j, m): c})


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def _hermitian_fft(values, ops, mask=None, kern=None):
    """Normalized forward FFT of a real array, Hermitian to the last bit.

    With ``mask`` the result is also multiplied by it (fused in the kernel).
    """
    kern = kern or _kernels.K
    half = sfft.rfft2(values, norm="forward")
    out = np.empty(values.shape, complex)
    if mask is None:
        mask = ops.ones
    kern.hermitian_fill(half, ops.rev_j, mask, out)
    return out


def to_physical(f: SpectralField) -> PhysicalField:
    z = sfft.ifft2(f.coeffs, norm="forward")
    scale = np.max(np.abs(z.real)) if z.size else 0.0
    resid = np.max(np.abs(z.imag)) if z.size else 0.0
    if resid > 1e-12 * max(scale, 1e-300) and resid > 1e-300:
        warnings.warn(f"discarding imaginary residue {resid:.3e}; field not Hermitian")
    return PhysicalField(f.config, z.real)


def to_spectral(g: PhysicalField, strict=False) -> SpectralField:
    """Forward transform; the mean is removed (or rejected when ``strict``)."""
    v = np.asarray(g.values)
    if not np.all(np.isfinite(v)):
        raise ValueError("physical field has non-finite entries")
    ops = operators(g.config)
    c = _hermitian_fft(v, ops)
    mean = c[0, 0].real
    scale = np.max(np.abs(v)) if v.size else 0.0
    if abs(mean) > 1e-10 * scale and abs(mean) > 0.0:
        if strict:
            raise MeanNotZero(f"field mean {mean:.3e} is not zero")
        warnings.warn(f"removing nonzero mean {mean:.3e}")
    c[0, 0] = 0.0
    return SpectralField(g.config, c)


# ---------------------------------------------------------------------------
# linear operators
# ---------------------------------------------------------------------------

def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.config, -operators(f.config).k2 * f.coeffs)


def inv_laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.config, operators(f.config).neg_inv_k2 * f.coeffs)


def ddx(f: SpectralField) -> SpectralField:
    ops = operators(f.config)
    return SpectralField(f.config, 1j * ops.kx[:, None] * f.coeffs)


def ddy(f: SpectralField) -> SpectralField:
    ops = operators(f.config)
    return SpectralField(f.config, 1j * ops.ky[None, :] * f.coeffs)


def velocity_from_vorticity(w: SpectralField):
    """``u = (d_y psi, -d_x psi)`` with ``w = -laplacian(psi)``."""
    psi = -inv_laplacian(w)
    return ddy(psi), -ddx(psi)


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.config, operators(f.config).mask * f.coeffs)


# ---------------------------------------------------------------------------
# bilinear operators (array level; used by the time stepper)
# ---------------------------------------------------------------------------

def jacobian_arrays(a, b, ops, kern=None):
    """Dealiased coefficients of ``d_x A d_y B - d_y A d_x B``."""
    kern = kern or _kernels.K
    z1 = np.empty(a.shape, complex)
    z2 = np.empty(a.shape, complex)
    kern.pack_pair(a, b, ops.kx, ops.ky, ops.mask, z1, z2)
    # two real fields per complex inverse transform
    p = sfft.ifft2(z1, norm="forward", overwrite_x=True)
    q = sfft.ifft2(z2, norm="forward", overwrite_x=True)
    prod = np.empty(a.shape, float)
    kern.cross_product(p, q, prod)
    return _hermitian_fft(prod, ops, ops.mask, kern)


def advection_arrays(w, ops, kern=None):
    """``J(inv_laplacian(w), w)`` on coefficient arrays."""
    return jacobian_arrays(ops.neg_inv_k2 * w, w, ops, kern)


def sin_y_dx_oneplus_arrays(w, ops, s, coef=1.0, kern=None):
    """``coef * sin(y) * d_x (1 + inv_laplacian) w``, exact in coefficient space."""
    kern = kern or _kernels.K
    out = np.empty(w.shape, complex)
    kern.sin_y_shift(w, ops.dx_oneplus, s, coef, ops.mask, out)
    return out


def jacobian(phi: SpectralField, varphi: SpectralField) -> SpectralField:
    if phi.config != varphi.config:
        raise ConfigMismatch(f"{phi.config} vs {varphi.config}")
    ops = operators(phi.config)
    return SpectralField(phi.config, jacobian_arrays(phi.coeffs, varphi.coeffs, ops))


def mult_sin_y_dx_oneplus(w: SpectralField) -> SpectralField:
    ops = operators(w.config)
    return SpectralField(w.config, sin_y_dx_oneplus_arrays(w.coeffs, ops, w.config.y_shift))


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

def _keep(f, keep):
    return SpectralField(f.config, np.where(keep, f.coeffs, 0.0))


def project_ne0(w: SpectralField) -> SpectralField:
    """Remove the x-average (all kx = 0 modes)."""
    ops = operators(w.config)
    return _keep(w, (ops.j != 0)[:, None] & np.ones(w.config.ny, bool)[None, :])


def project_K(w: SpectralField) -> SpectralField:
    """Keep only the Kolmogorov modes ``cos y``, ``sin y``."""
    ops = operators(w.config)
    s = w.config.y_shift
    keep = (ops.j == 0)[:, None] & (np.abs(ops.m) == s)[None, :]
    return _keep(w, keep)


def project_a(w: SpectralField) -> SpectralField:
    """Keep only ``cos x``, ``sin x``; defined on the square torus only."""
    if abs(w.config.alpha - 1.0) > 1e-12:
        raise WrongAspect(f"project_a needs alpha = 1, got {w.config.alpha}")
    ops = operators(w.config)
    keep = (np.abs(ops.j) == 1)[:, None] & (ops.m == 0)[None, :]
    return _keep(w, keep)


def _zonal_content(w):
    return np.max(np.abs(w.coeffs[0, :]))


def project_N(w: SpectralField, lambda_cut: float) -> SpectralField:
    """Projection of ``w`` in X onto eigenmodes of ``-laplacian`` with eigenvalue <= lambda_cut."""
    if lambda_cut <= 0:
        raise ValueError("lambda_cut must be positive")
    scale = np.max(np.abs(w.coeffs))
    if _zonal_content(w) > 1e-14 * scale:
        raise NotInX("field has kx = 0 content")
    ops = operators(w.config)
    return _keep(w, (ops.k2 <= lambda_cut * (1 + 1e-12)) & (ops.j != 0)[:, None])


def strip_unit_modes(w: SpectralField) -> SpectralField:
    """Zero the |k| = 1 modes, the kernel of ``1 + inv_laplacian``."""
    return _keep(w, ~operators(w.config).unit)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def inner(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product over the torus."""
    f._same(g)
    return float(f.config.area * np.real(np.vdot(f.coeffs, g.coeffs)))


def l2_norm(w: SpectralField) -> float:
    return math.sqrt(w.config.area * float(np.sum(np.abs(w.coeffs) ** 2)))


def _check_x_domain(w, ops):
    bad = ops.unit | ops.sub_unit
    scale = np.max(np.abs(w.coeffs))
    if np.any(np.abs(w.coeffs[bad]) > 1e-14 * max(scale, 1e-300)):
        raise DegenerateMode("field has content on a mode with |k|^2 <= 1")


def x_norm_sq(w: SpectralField) -> float:
    ops = operators(w.config)
    _check_x_domain(w, ops)
    return w.config.area * float(np.sum(ops.oneplus * np.abs(w.coeffs) ** 2))


def x_norm(w: SpectralField) -> float:
    """``||(1 + inv_laplacian)^(1/2) w||``."""
    return math.sqrt(max(x_norm_sq(w), 0.0))


def grad_x_norm_sq(w: SpectralField) -> float:
    """``||grad w||_X^2 = sum (|k|^2 - 1) |c_k|^2`` (area weighted)."""
    ops = operators(w.config)
    _check_x_domain(w, ops)
    return w.config.area * float(np.sum((ops.k2 - 1.0) * np.abs(w.coeffs) ** 2))


# ---------------------------------------------------------------------------
# random data
# ---------------------------------------------------------------------------

def random_field(config, rng, k2_min=0.0, k2_max=16.0, in_x=True, l2=None):
    """Gaussian, Hermitian, band-limited field with ``k2_min <= |k|^2 <= k2_max``.

    With ``in_x`` the kx = 0 modes are removed so the result lies in X. With
    ``l2`` the field is rescaled to that L2 norm.
    """
    ops = operators(config)
    shape = (config.nx, config.ny)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c = 0.5 * (c + np.conj(c[np.ix_(ops.rev_j, ops.rev_m)]))
    keep = (ops.k2 >= k2_min * (1 - 1e-12)) & (ops.k2 <= k2_max * (1 + 1e-12))
    keep &= ops.mask > 0
    if in_x:
        keep &= (ops.j != 0)[:, None]
    c = np.where(keep, c, 0.0)
    f = SpectralField(config, c)
    if l2 is not None:
        n = l2_norm(f)
        if n == 0.0:
            raise ValueError("no modes in the requested band")
        f = f * (l2 / n)
    return f
