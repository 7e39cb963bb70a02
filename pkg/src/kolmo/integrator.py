"""Integrating-factor RK4 time stepping.

Diffusion is diagonal in coefficient space, so it is integrated exactly by
the factor ``exp(D h)``; the remaining terms go through classical RK4 in the
transformed variable (Lawson's scheme). Time-dependent coefficients are
evaluated at the stage times ``t``, ``t + h/2``, ``t + h``.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidConfig, NonFinite
from .models import (
    LIN_COMBINED,
    LIN_DECAYING,
    LIN_EULER,
    LIN_KOLMOGOROV,
    NONLINEAR,
    PERTURBED,
    ModelSpec,
    diffusion_symbol,
    make_rhs,
)
from .spectral import SpectralField, operators, to_physical, velocity_from_vorticity

DEFAULT_DT = 0.01


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    sample_every: int | None = None
    cfl_safety: float = 0.5

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidConfig("dt", f"must be positive, got {self.dt!r}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise InvalidConfig("t_end", f"must be positive, got {self.t_end!r}")
        if self.dt > self.t_end:
            raise InvalidConfig("dt", f"dt={self.dt} exceeds t_end={self.t_end}")
        if self.sample_every is not None and (
                int(self.sample_every) != self.sample_every or self.sample_every < 1):
            raise InvalidConfig("sample_every", f"must be a positive integer, got {self.sample_every!r}")
        if not (0 < self.cfl_safety <= 1):
            raise InvalidConfig("cfl_safety", f"must lie in (0, 1], got {self.cfl_safety!r}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled states plus per-step scalar tracks.

    ``times``/``states`` hold the full fields (every ``sample_every`` steps if set, at
    requested checkpoints and at the end). ``track_t`` and the ``l2``, ``x``,
    ``gradx2`` tracks are recorded at every step. The X-type tracks are taken
    after removing the |k| = 1 modes, which carry zero weight under
    ``1 + inv_laplacian``; they are NaN if a mode with |k| < 1 is populated.
    """

    model: ModelSpec
    times: np.ndarray
    states: tuple
    track_t: np.ndarray
    l2: np.ndarray
    x: np.ndarray
    gradx2: np.ndarray
    dt: float = 0.0
    steps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def config(self):
        return self.states[0].config

    @property
    def final(self):
        return self.states[-1]

    def state_at(self, t, tol=1e-9):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no stored state at t={t}")
        return self.states[i]


class _Tracker:
    def __init__(self, config):
        ops = operators(config)
        self.area = config.area
        self.keep = ~ops.unit
        self.sub = ops.sub_unit
        self.w_x = np.where(self.keep, ops.oneplus, 0.0)
        self.w_g = np.where(self.keep, ops.k2 - 1.0, 0.0)
        self.t, self.l2, self.x, self.g = [], [], [], []

    def record(self, t, c):
        p = c.real * c.real + c.imag * c.imag
        self.t.append(t)
        self.l2.append(math.sqrt(self.area * p.sum()))
        if np.any(p[self.sub] > 1e-28 * p.max()):
            self.x.append(math.nan)
            self.g.append(math.nan)
        else:
            self.x.append(math.sqrt(max(self.area * float((self.w_x * p).sum()), 0.0)))
            self.g.append(self.area * float((self.w_g * p).sum()))


def _factors(lin, h, cache):
    f = cache.get(h)
    if f is None:
        f = (np.exp(lin * h), np.exp(lin * (0.5 * h)))
        cache[h] = f
    return f


class Stepper:
    """Reusable integrating-factor RK4 stepper for one model on one grid."""

    def __init__(self, spec: ModelSpec, config, kern=None):
        self.spec = spec
        self.config = config
        self.kern = kern or _kernels.K
        self.rhs = make_rhs(spec, config, self.kern)
        self.lin = diffusion_symbol(spec, config)
        self._cache = {}
        shape = (config.nx, config.ny)
        self._u = np.empty(shape, complex)
        self._ew2 = np.empty(shape, complex)

    def step(self, t, h, c):
        k = self.kern
        e, e2 = _factors(self.lin, h, self._cache)
        u, ew2 = self._u, self._ew2
        np.multiply(e2, c, out=ew2)
        k1 = self.rhs(t, c)
        k.axpy(ew2, 0.5 * h, e2, k1, u)
        k2 = self.rhs(t + 0.5 * h, u)
        k.axpy1(ew2, 0.5 * h, k2, u)
        k3 = self.rhs(t + 0.5 * h, u)
        np.multiply(e, c, out=u)
        k.axpy(u, h, e2, k3, u)
        k4 = self.rhs(t + h, u)
        out = np.empty_like(c)
        k.combine(e, e2, c, h, k1, k2, k3, k4, out)
        return out


def step(spec: ModelSpec, t: float, dt: float, w: SpectralField) -> SpectralField:
    """One integrating-factor RK4 step of size ``dt``."""
    if not dt > 0:
        raise InvalidConfig("dt", f"must be positive, got {dt!r}")
    out = Stepper(spec, w.config).step(t, dt, w.coeffs)
    if not np.isfinite(out.sum()):
        raise NonFinite("non-finite coefficient after step", t + dt)
    return SpectralField(w.config, out)


def _band_limit(w):
    ops = operators(w.config)
    c = w.coeffs * ops.mask
    lost = np.max(np.abs(w.coeffs - c))
    if lost > 1e-14 * max(np.max(np.abs(w.coeffs)), 1e-300):
        warnings.warn(f"initial data truncated to the dealiasing band (max lost {lost:.2e})")
    return c


def integrate(spec: ModelSpec, w0: SpectralField, stepper: StepperConfig,
              checkpoints=(), observer=None, kern=None) -> Trajectory:
    """Advance ``w0`` to ``stepper.t_end``.

    The step before each checkpoint and before ``t_end`` is shortened so those
    times are hit exactly; states there are always stored. ``observer(t, c)``,
    if given, sees the raw coefficient array after every step (and at t = 0);
    it must not modify it.
    """
    cfg = w0.config
    dt, t_end = stepper.dt, stepper.t_end
    targets = sorted({float(t) for t in checkpoints if 0 < t < t_end} | {float(t_end)})
    st = Stepper(spec, cfg, kern)
    tracker = _Tracker(cfg)
    c = _band_limit(w0)
    t = 0.0
    n = 0
    times, states = [0.0], [SpectralField(cfg, c)]
    tracker.record(0.0, c)
    if observer is not None:
        observer(0.0, c)
    for target in targets:
        while t < target:
            rem = target - t
            if rem <= dt * (1 + 1e-9):
                h, t_new = rem, target
            else:
                h, t_new = dt, t + dt
            c = st.step(t, h, c)
            n += 1
            t = t_new
            if not np.isfinite(c.sum()):
                raise NonFinite("solver blew up", t)
            tracker.record(t, c)
            if observer is not None:
                observer(t, c)
            if t == target or (stepper.sample_every and n % stepper.sample_every == 0):
                times.append(t)
                states.append(SpectralField(cfg, c))
    return Trajectory(
        model=spec,
        times=np.array(times),
        states=tuple(states),
        track_t=np.array(tracker.t),
        l2=np.array(tracker.l2),
        x=np.array(tracker.x),
        gradx2=np.array(tracker.g),
        dt=dt,
        steps=n,
    )


def basic_flow_speed(spec: ModelSpec) -> float:
    """Largest speed of the ``sin y`` shear the model advects with."""
    v = spec.variant
    if v == LIN_DECAYING:
        return 1.0
    if v == LIN_KOLMOGOROV or v == NONLINEAR:
        return float(spec.a)
    if v in (LIN_COMBINED, PERTURBED, LIN_EULER):
        return spec.a + 1.0
    return 0.0


def choose_dt(spec: ModelSpec, w0: SpectralField, grid=None, default=DEFAULT_DT,
              cfl_safety=0.5) -> float:
    """``min(default, cfl_safety * h_min / u_max)``; ``default`` when nothing moves."""
    grid = grid or w0.config
    u1, u2 = velocity_from_vorticity(w0)
    speed = np.sqrt(to_physical(u1).values ** 2 + to_physical(u2).values ** 2)
    u_max = float(speed.max()) + basic_flow_speed(spec)
    if u_max <= 0.0:
        return default
    h_min = min(grid.dx, grid.dy)
    return min(default, cfl_safety * h_min / u_max)
