"""Right-hand sides of the vorticity equations.

Every model is split as ``d_t w = D w + N(t, w)`` where ``D`` is the diagonal
diffusion symbol (handled exactly by the integrating factor) and ``N`` holds
advection, the basic-flow coupling and the forcing.

Variants (``b(t) = a + exp(-nu t)`` is the amplitude of the decaying basic flow
``-a cos y - exp(-nu t) cos y``)::

    NonlinearNS           N = -J(inv_lap w, w) - nu a cos y
    LinearizedDecaying    N = -exp(-nu t) S w
    LinearizedKolmogorov  N = -a S w
    LinearizedCombined    N = -b(t) S w
    Perturbed             N = -b(t) S w - sigma J(inv_lap w, w)
    LinearizedEuler       N = -(a + 1) S w,   D = 0

with ``S w = sin y * d_x (1 + inv_lap) w``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigMismatch, InvalidConfig
from .spectral import (
    SpectralField,
    advection_arrays,
    operators,
    sin_y_dx_oneplus_arrays,
)

NONLINEAR = "NonlinearNS"
PERTURBED = "Perturbed"
LIN_DECAYING = "LinearizedDecaying"
LIN_KOLMOGOROV = "LinearizedKolmogorov"
LIN_COMBINED = "LinearizedCombined"
LIN_EULER = "LinearizedEuler"

VARIANTS = (NONLINEAR, PERTURBED, LIN_DECAYING, LIN_KOLMOGOROV, LIN_COMBINED, LIN_EULER)
LINEAR_VARIANTS = (LIN_DECAYING, LIN_KOLMOGOROV, LIN_COMBINED, LIN_EULER)


@dataclass(frozen=True)
class ModelSpec:
    variant: str
    a: int = 0
    nu: float = 0.0
    sigma: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidConfig("variant", f"unknown variant {self.variant!r}")
        if self.a not in (0, 1):
            raise InvalidConfig("a", f"must be 0 or 1, got {self.a!r}")
        if self.sigma not in (0, 1):
            raise InvalidConfig("sigma", f"must be 0 or 1, got {self.sigma!r}")
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise InvalidConfig("nu", f"must be a nonnegative number, got {self.nu!r}")

    @property
    def is_linear(self):
        return self.variant in LINEAR_VARIANTS or (
            self.variant == PERTURBED and self.sigma == 0
        )

    def to_dict(self):
        d = {"variant": self.variant, "a": self.a, "nu": self.nu}
        if self.variant == PERTURBED:
            d["sigma"] = self.sigma
        return d


def diffusion_symbol(spec: ModelSpec, grid) -> np.ndarray:
    """Per-mode ``-nu |k|^2``; identically zero for the linearized Euler flow."""
    ops = operators(grid)
    if spec.variant == LIN_EULER:
        return np.zeros_like(ops.k2)
    return -spec.nu * ops.k2


def _shear_coefficient(spec, t):
    v = spec.variant
    if v == LIN_DECAYING:
        return math.exp(-spec.nu * t)
    if v == LIN_KOLMOGOROV:
        return float(spec.a)
    if v in (LIN_COMBINED, PERTURBED):
        return spec.a + math.exp(-spec.nu * t)
    if v == LIN_EULER:
        return spec.a + 1.0
    return 0.0


def make_rhs(spec: ModelSpec, grid, kern=None):
    """Array-level ``N(t, c)`` closure for ``grid``; the integrator's hot path."""
    kern = kern or _kernels.K
    ops = operators(grid)
    s = grid.y_shift
    v = spec.variant

    if v == NONLINEAR:
        forcing = np.zeros((grid.nx, grid.ny), complex)
        if spec.a:
            forcing[0, s] = forcing[0, -s] = -0.5 * spec.nu * spec.a

        def rhs(t, c):
            out = advection_arrays(c, ops, kern)
            np.negative(out, out=out)
            if spec.a:
                out += forcing
            return out

        return rhs

    nonlinear = v == PERTURBED and spec.sigma == 1

    def rhs(t, c):
        b = _shear_coefficient(spec, t)
        out = sin_y_dx_oneplus_arrays(c, ops, s, -b, kern)
        if nonlinear:
            out -= advection_arrays(c, ops, kern)
        return out

    return rhs


def nonstiff_rhs(spec: ModelSpec, t: float, w: SpectralField, grid=None) -> SpectralField:
    if grid is not None and grid != w.config:
        raise ConfigMismatch(f"field lives on {w.config}, model on {grid}")
    return SpectralField(w.config, make_rhs(spec, w.config)(t, w.coeffs))


def full_rhs(spec: ModelSpec, t: float, w: SpectralField) -> SpectralField:
    """``D w + N(t, w)``: the complete time derivative."""
    d = diffusion_symbol(spec, w.config) * w.coeffs
    return SpectralField(w.config, d + make_rhs(spec, w.config)(t, w.coeffs))
