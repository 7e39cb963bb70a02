"""Closed-form solutions of the forced vorticity equation.

Each family is built from plane waves whose stream function is proportional
to the vorticity on every group of equal |k|, so the advection term vanishes
identically and every wave simply decays as ``exp(-nu |k|^2 t)``. The
stationary part ``-a cos y`` is balanced by the forcing.

Aspect ratios are stored squared and exact (``alpha_sq`` is a ``Fraction``),
so resonance conditions such as ``alpha^2 n^2 + m^2 = j^2`` are checked in
rational arithmetic.
"""

import math
import warnings
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import ClassVar, NamedTuple

import numpy as np

from .errors import IncompatibleDomain, InvalidConfig, ResonanceViolated
from .models import NONLINEAR, ModelSpec
from .spectral import SpectralField, TorusConfig, advection_arrays, l2_norm, operators


class Term(NamedTuple):
    """``amp * cos|sin(alpha j x + beta m y)``; ``stationary`` terms do not decay."""

    j: int
    m: int
    kind: str
    amp: float
    stationary: bool = False


class Violation(NamedTuple):
    code: str
    message: str


def _frac(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(v)
    return Fraction(str(v)) if isinstance(v, str) else Fraction(v)


def _products(fx, j, fy, m, amp):
    """Expand ``amp * fx(alpha j x) * fy(beta m y)`` into plane waves."""
    h = 0.5 * amp
    if fx == "cos" and fy == "cos":
        return [Term(j, -m, "cos", h), Term(j, m, "cos", h)]
    if fx == "sin" and fy == "sin":
        return [Term(j, -m, "cos", h), Term(j, m, "cos", -h)]
    if fx == "sin" and fy == "cos":
        return [Term(j, m, "sin", h), Term(j, -m, "sin", h)]
    return [Term(j, m, "sin", h), Term(j, -m, "sin", -h)]


def _quadrupole(n, m, c):
    c1, c2, c3, c4 = c
    return (
        _products("sin", n, "sin", m, c1)
        + _products("cos", n, "sin", m, c2)
        + _products("sin", n, "cos", m, c3)
        + _products("cos", n, "cos", m, c4)
    )


def _coeffs(values, size, name):
    values = tuple(float(v) for v in values)
    if len(values) != size:
        raise InvalidConfig(name, f"expected {size} coefficients, got {len(values)}")
    return values


@dataclass(frozen=True)
class ExactSpec:
    """Common parameters: viscosity, squared aspect ratio, y-lattice spacing."""

    family: ClassVar[str] = ""

    nu: float
    alpha_sq: Fraction = Fraction(1)
    beta: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "alpha_sq", _frac(self.alpha_sq))
        object.__setattr__(self, "beta", _frac(self.beta))
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise InvalidConfig("nu", f"must be nonnegative, got {self.nu!r}")
        if self.alpha_sq <= 0:
            raise InvalidConfig("alpha_sq", "must be positive")
        if self.beta <= 0:
            raise InvalidConfig("beta", "must be positive")

    # subclasses provide these
    a: ClassVar[int] = 0

    def terms(self):
        raise NotImplementedError

    def conditions(self):
        return []

    @property
    def alpha(self):
        return math.sqrt(self.alpha_sq)

    @property
    def y_unit(self):
        """Lattice index in y of the physical wavenumber 1."""
        return int(1 / self.beta)

    def k2(self, j, m):
        return self.alpha_sq * j * j + self.beta * self.beta * m * m

    def model(self):
        return ModelSpec(NONLINEAR, a=self.a, nu=self.nu)

    def grid(self, nx=128, ny=128, dealias_fraction=2.0 / 3.0):
        return TorusConfig(alpha=self.alpha, nx=nx, ny=ny, beta=float(self.beta),
                           dealias_fraction=dealias_fraction)

    def to_dict(self):
        d = {"family": self.family}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Fraction):
                v = str(v)
            elif isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            d[f.name] = v
        return d


def _basic(spec):
    terms = []
    if spec.a:
        terms.append(Term(0, spec.y_unit, "cos", -float(spec.a), True))
    return terms


@dataclass(frozen=True)
class Unidirectional(ExactSpec):
    """``-a cos y + sum_n exp(-n^2 nu t) (a_n cos ny + b_n sin ny)``."""

    family: ClassVar[str] = "Unidirectional"
    a: int = 1
    coefficients: tuple = ()  # (n, a_n, b_n)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(
            self, "coefficients",
            tuple((int(n), float(an), float(bn)) for n, an, bn in self.coefficients),
        )

    def terms(self):
        out = _basic(self)
        for n, an, bn in self.coefficients:
            out += [Term(0, n * self.y_unit, "cos", an), Term(0, n * self.y_unit, "sin", bn)]
        return out

    def conditions(self):
        bad = [n for n, _, _ in self.coefficients if n < 1]
        if bad:
            return [Violation("InvalidParameter", f"wavenumbers must be >= 1, got {bad}")]
        return []


@dataclass(frozen=True)
class ExtendedLowMode(ExactSpec):
    """Low-mode family on the box with ``alpha^2 + beta^2 = 1``; all modes have |k| = 1."""

    family: ClassVar[str] = "ExtendedLowMode"
    a: int = 1
    c: tuple = (0.0,) * 6

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "c", _coeffs(self.c, 6, "c"))

    def terms(self):
        c1, c2, c3, c4, c5, c6 = self.c
        s = self.y_unit
        out = _basic(self)
        out.append(Term(0, s, "cos", -1.0))
        out += [Term(0, s, "sin", c1), Term(0, s, "cos", c2)]
        out += _products("sin", 1, "sin", 1, c3)
        out += _products("cos", 1, "cos", 1, c4)
        out += _products("sin", 1, "cos", 1, c5)
        out += _products("cos", 1, "sin", 1, c6)
        return out

    def conditions(self):
        v = []
        if self.alpha_sq + self.beta ** 2 != 1:
            v.append(Violation("DomainViolated", f"alpha^2 + beta^2 = {self.alpha_sq + self.beta ** 2} != 1"))
        if (1 / self.beta).denominator != 1:
            v.append(Violation("DomainViolated", f"1/beta = {1 / self.beta} is not an integer"))
        return v


@dataclass(frozen=True)
class BarFlow(ExactSpec):
    """Bars along ``n alpha x + m y = const``: harmonics ``k`` of one direction."""

    family: ClassVar[str] = "BarFlow"
    n: int = 1
    m: int = 1
    coefficients: tuple = ()  # (k, a_k, b_k)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(
            self, "coefficients",
            tuple((int(k), float(ak), float(bk)) for k, ak, bk in self.coefficients),
        )

    def terms(self):
        out = []
        for k, ak, bk in self.coefficients:
            j, m = k * self.n, k * self.m * self.y_unit
            out += [Term(j, m, "cos", ak), Term(j, m, "sin", bk)]
        return out

    def conditions(self):
        v = []
        if self.n == 0 and self.m == 0:
            v.append(Violation("InvalidParameter", "direction (n, m) must be nonzero"))
        if any(k == 0 for k, _, _ in self.coefficients):
            v.append(Violation("InvalidParameter", "harmonic k = 0 is not allowed"))
        return v


@dataclass(frozen=True)
class TaylorQuadrupole(ExactSpec):
    """Four products of ``sin/cos(n alpha x)`` and ``sin/cos(m y)``."""

    family: ClassVar[str] = "TaylorQuadrupole"
    n: int = 1
    m: int = 1
    c: tuple = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "c", _coeffs(self.c, 4, "c"))

    def terms(self):
        return _quadrupole(self.n, self.m * self.y_unit, self.c)

    def conditions(self):
        if self.n == 0 or self.m == 0:
            return [Violation("InvalidParameter", "n and m must be nonzero")]
        return []


@dataclass(frozen=True)
class Resonant3(ExactSpec):
    """Quadrupole plus ``sin/cos(j y)`` with ``alpha^2 n^2 + m^2 = j^2``."""

    family: ClassVar[str] = "Resonant3"
    n: int = 1
    m: int = 1
    j: int = 1
    c: tuple = (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "c", _coeffs(self.c, 6, "c"))

    def terms(self):
        s = self.y_unit
        out = _quadrupole(self.n, self.m * s, self.c[:4])
        out += [Term(0, self.j * s, "sin", self.c[4]), Term(0, self.j * s, "cos", self.c[5])]
        return out

    def conditions(self):
        lhs = self.alpha_sq * self.n ** 2 + self.m ** 2
        if not _equal(lhs, Fraction(self.j ** 2)):
            return [Violation("ResonanceViolated", f"alpha^2 n^2 + m^2 = {lhs} != j^2 = {self.j ** 2}")]
        return []


@dataclass(frozen=True)
class Resonant4(ExactSpec):
    """Quadrupole plus ``sin/cos(i alpha x)`` and ``sin/cos(j y)`` on one circle."""

    family: ClassVar[str] = "Resonant4"
    n: int = 1
    m: int = 1
    i: int = 1
    j: int = 1
    c: tuple = (1.0,) + (0.0,) * 7

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "c", _coeffs(self.c, 8, "c"))

    def terms(self):
        s = self.y_unit
        c = self.c
        out = _quadrupole(self.n, self.m * s, c[:4])
        out += [Term(self.i, 0, "sin", c[4]), Term(self.i, 0, "cos", c[5])]
        out += [Term(0, self.j * s, "sin", c[6]), Term(0, self.j * s, "cos", c[7])]
        return out

    def conditions(self):
        lhs = self.alpha_sq * self.n ** 2 + self.m ** 2
        mid = self.alpha_sq * self.i ** 2
        rhs = Fraction(self.j ** 2)
        if not (_equal(lhs, mid) and _equal(mid, rhs)):
            return [Violation(
                "ResonanceViolated",
                f"alpha^2 n^2 + m^2 = {lhs}, alpha^2 i^2 = {mid}, j^2 = {rhs} are not all equal",
            )]
        return []


@dataclass(frozen=True)
class RemarkCounterexample(ExactSpec):
    """Single tilted wave ``sin(alpha x + y)`` with L2 norm ``d * nu`` at t = 0."""

    family: ClassVar[str] = "RemarkCounterexample"
    d: float = 1.0

    @property
    def amplitude(self):
        return self.d * self.nu * math.sqrt(self.alpha) / (math.sqrt(2.0) * math.pi)

    def terms(self):
        return [Term(1, self.y_unit, "sin", self.amplitude)]

    def conditions(self):
        v = []
        if self.alpha_sq < 1:
            v.append(Violation("DomainViolated", "requires alpha >= 1"))
        if self.d <= 0:
            v.append(Violation("InvalidParameter", "d must be positive"))
        return v


@dataclass(frozen=True)
class BasicNonstationary(ExactSpec):
    """``-a cos y - exp(-nu t) cos y``: the decaying basic flow."""

    family: ClassVar[str] = "BasicNonstationary"
    a: int = 0

    def terms(self):
        return _basic(self) + [Term(0, self.y_unit, "cos", -1.0)]


FAMILIES = {
    cls.family: cls
    for cls in (Unidirectional, ExtendedLowMode, BarFlow, TaylorQuadrupole, Resonant3,
                Resonant4, RemarkCounterexample, BasicNonstationary)
}


def _equal(p, q):
    if p == q:
        return True
    # float-derived squares: accept agreement to 1e-12
    big = max(p.denominator, q.denominator) > 10 ** 6
    return big and abs(float(p) - float(q)) <= 1e-12 * max(1.0, abs(float(q)))


def validate(spec: ExactSpec):
    """Violated arithmetic conditions as a list of ``Violation``; empty when valid."""
    v = []
    if getattr(spec, "a", 0) not in (0, 1):
        v.append(Violation("InvalidParameter", f"a must be 0 or 1, got {spec.a}"))
    if (1 / spec.beta).denominator != 1:
        v.append(Violation("DomainViolated", f"1/beta = {1 / spec.beta} is not an integer"))
    v += [x for x in spec.conditions() if x not in v]
    return v


def _check(spec, grid):
    problems = validate(spec)
    for p in problems:
        if p.code == "ResonanceViolated":
            raise ResonanceViolated(p.message)
    if problems:
        raise IncompatibleDomain("; ".join(p.message for p in problems))
    if abs(grid.alpha ** 2 - float(spec.alpha_sq)) > 1e-12 * max(1.0, float(spec.alpha_sq)):
        raise IncompatibleDomain(f"grid alpha^2 = {grid.alpha ** 2} but spec needs {spec.alpha_sq}")
    if abs(grid.beta - float(spec.beta)) > 1e-12:
        raise IncompatibleDomain(f"grid beta = {grid.beta} but spec needs {spec.beta}")


def eval_exact(spec: ExactSpec, t: float, grid: TorusConfig) -> SpectralField:
    """Coefficient field of the exact solution at time ``t`` on ``grid``."""
    _check(spec, grid)
    cx, cy = grid.cutoff
    c = np.zeros((grid.nx, grid.ny), complex)
    for term in spec.terms():
        if term.amp == 0.0 or (term.j, term.m) == (0, 0):
            continue
        j, m = term.j, term.m
        if not (abs(j) < grid.nx // 2 and abs(m) < grid.ny // 2):
            raise IncompatibleDomain(f"mode ({j}, {m}) does not fit a {grid.nx}x{grid.ny} grid")
        if abs(j) > cx or abs(m) > cy:
            warnings.warn(f"mode ({j}, {m}) lies beyond the dealiasing cutoff {grid.cutoff}")
        decay = 1.0 if term.stationary else math.exp(-spec.nu * float(spec.k2(j, m)) * t)
        amp = term.amp * decay
        z = 0.5 * amp if term.kind == "cos" else -0.5j * amp
        c[j % grid.nx, m % grid.ny] += z
        c[-j % grid.nx, -m % grid.ny] += np.conj(z)
    return SpectralField(grid, c)


def _canonical(j, m):
    return (j, m) if (j > 0 or (j == 0 and m > 0)) else (-j, -m)


def analytic_rates(spec: ExactSpec):
    """``[((j, m), nu |k|^2), ...]`` for every decaying mode, slowest first."""
    seen = {}
    for term in spec.terms():
        if term.stationary or term.amp == 0.0:
            continue
        key = _canonical(term.j, term.m)
        seen[key] = spec.nu * float(spec.k2(*key))
    return sorted(seen.items(), key=lambda kv: (kv[1], kv[0]))


def stationarity_residual(w: SpectralField) -> float:
    """``||J(inv_laplacian(w), w)|| / ||w||^2``."""
    n = l2_norm(w)
    if n == 0.0:
        return 0.0
    j = SpectralField(w.config, advection_arrays(w.coeffs, operators(w.config)))
    return l2_norm(j) / n ** 2


def euler_stationarity_residual(spec: ExactSpec, t: float, grid: TorusConfig) -> float:
    return stationarity_residual(eval_exact(spec, t, grid))


# ---------------------------------------------------------------------------
# serialization and named instances
# ---------------------------------------------------------------------------

def exact_from_dict(d):
    d = dict(d)
    if "example" in d:
        name = d.pop("example")
        if name not in EXAMPLES:
            raise InvalidConfig("example", f"unknown example {name!r}; known: {sorted(EXAMPLES)}")
        return EXAMPLES[name](**d)
    family = d.pop("family", None)
    if family not in FAMILIES:
        raise InvalidConfig("family", f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    cls = FAMILIES[family]
    if "alpha" in d:
        alpha = d.pop("alpha")
        d.setdefault("alpha_sq", Fraction(alpha) ** 2 if isinstance(alpha, float) else _frac(alpha) ** 2)
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise InvalidConfig(sorted(unknown)[0], f"not a field of {family}")
    for key in ("c",):
        if key in d:
            d[key] = tuple(d[key])
    if "coefficients" in d:
        d["coefficients"] = tuple(tuple(x) for x in d["coefficients"])
    try:
        return cls(**d)
    except TypeError as exc:
        raise InvalidConfig(family, str(exc)) from None


def four_vortex_transition(nu=0.01):
    """Four vortices relaxing onto ``-cos y`` on ``[0, 4pi/sqrt3) x [0, 4pi)``."""
    return ExtendedLowMode(nu=nu, alpha_sq=Fraction(3, 4), beta=Fraction(1, 2), a=1,
                           c=(0.0, 2.0, 1.0, 0.0, 0.0, 0.0))


def diagonal_bars(nu=0.01):
    """Diagonal bar state with harmonics 2 and 4 on ``alpha = sqrt(6)/2``."""
    return BarFlow(nu=nu, alpha_sq=Fraction(3, 2), n=1, m=1,
                   coefficients=((2, 0.0, 1.0), (4, 1.0, 0.0)))


def resonant_triad(nu=0.01):
    """Quadrupole (1, 2) locked with ``sin 3y`` on ``alpha = sqrt 5``."""
    return Resonant3(nu=nu, alpha_sq=Fraction(5), n=1, m=2, j=3,
                     c=(1.0, 0.0, 0.0, 0.3, 0.4, 0.0))


def resonant_quartet(nu=0.01):
    """Quadrupole (4, 3) with ``sin 5x`` and ``sin 5y`` on the square torus."""
    return Resonant4(nu=nu, alpha_sq=Fraction(1), n=4, m=3, i=5, j=5,
                     c=(0.4, 0.0, 0.0, 0.5, 0.3, 0.0, 1.0, 0.0))


def taylor_flow(nu=0.01, n=1, m=1, alpha_sq=1):
    return TaylorQuadrupole(nu=nu, alpha_sq=alpha_sq, n=n, m=m, c=(1.0, 0.0, 0.0, 0.0))


def counterexample(nu=0.01, d=1.0, alpha_sq=4):
    return RemarkCounterexample(nu=nu, alpha_sq=alpha_sq, d=d)


EXAMPLES = {
    "four-vortex-transition": four_vortex_transition,
    "diagonal-bars": diagonal_bars,
    "resonant-triad": resonant_triad,
    "resonant-quartet": resonant_quartet,
    "taylor": taylor_flow,
    "counterexample": counterexample,
}
