import dataclasses
import math
import zlib
from fractions import Fraction

import numpy as np
import pytest

from kolmo.diagnostics import exact_solution_error
from kolmo.errors import IncompatibleDomain, InvalidConfig, ResonanceViolated
from kolmo.exact import (
    EXAMPLES,
    FAMILIES,
    BarFlow,
    BasicNonstationary,
    ExtendedLowMode,
    RemarkCounterexample,
    Resonant3,
    Resonant4,
    TaylorQuadrupole,
    Unidirectional,
    analytic_rates,
    eval_exact,
    exact_from_dict,
    stationarity_residual,
    validate,
)
from kolmo.models import full_rhs
from kolmo.spectral import (
    TorusConfig,
    l2_norm,
    plane_wave,
    project_a,
    project_K,
    project_ne0,
    to_physical,
)

NU = 0.01

UNIDIRECTIONAL_3 = Unidirectional(nu=NU, alpha_sq=Fraction(3, 2), a=1,
                                  coefficients=((2, 0.5, 0.0), (3, 0.0, 0.25), (5, 0.1, -0.2)))

SPECS = [
    UNIDIRECTIONAL_3,
    EXAMPLES["four-vortex-transition"](NU),
    EXAMPLES["diagonal-bars"](NU),
    EXAMPLES["taylor"](NU),
    TaylorQuadrupole(nu=NU, alpha_sq=Fraction(1, 2), n=2, m=3, c=(0.3, -0.2, 0.5, 1.0)),
    EXAMPLES["resonant-triad"](NU),
    EXAMPLES["resonant-quartet"](NU),
    EXAMPLES["counterexample"](NU),
    ExtendedLowMode(nu=NU, alpha_sq=Fraction(3, 4), beta=Fraction(1, 2), a=0,
                    c=(0.2, 0.1, 0.7, -0.3, 0.4, 0.5)),
    BarFlow(nu=NU, alpha_sq=Fraction(2), n=1, m=-2, coefficients=((1, 0.3, 0.1), (3, -0.2, 0.4))),
    BasicNonstationary(nu=NU, a=1),
]


def spec_id(s):
    return s.family


def small_grid(spec):
    return spec.grid(48, 48)


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_every_instance_validates(spec):
    assert validate(spec) == []


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
@pytest.mark.parametrize("t", [0.0, 7.5, 40.0])
def test_exact_fields_satisfy_the_equation(spec, t):
    """Central time difference of the evaluator equals the model's right-hand side."""
    g = small_grid(spec)
    h = 1e-3
    dwdt = (eval_exact(spec, t + h, g) - eval_exact(spec, t - h, g)) * (0.5 / h)
    rhs = full_rhs(spec.model(), t, eval_exact(spec, t, g))
    scale = max(l2_norm(rhs), 1e-3 * l2_norm(eval_exact(spec, t, g)))
    assert l2_norm(dwdt - rhs) < 1e-7 * scale


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_exact_fields_are_euler_stationary(spec):
    assert stationarity_residual(eval_exact(spec, 3.0, small_grid(spec))) < 1e-14


def test_stationarity_residual_detects_non_solutions():
    g = TorusConfig(alpha=1.0, nx=32, ny=32)
    w = plane_wave(g, 1, 0) + plane_wave(g, 0, 2)
    assert stationarity_residual(w) > 1e-3


def pointwise(spec, t, n=48):
    g = spec.grid(n, n)
    x, y = g.grid()
    return g, x, y, to_physical(eval_exact(spec, t, g)).values


def test_four_vortex_transition_pointwise():
    spec = EXAMPLES["four-vortex-transition"](NU)
    g, x, y, w0 = pointwise(spec, 0.0)
    a = math.sqrt(3) / 2
    assert g.lx == pytest.approx(4 * math.pi / math.sqrt(3)) and g.ly == pytest.approx(4 * math.pi)
    assert np.max(np.abs(w0 - np.sin(a * x) * np.sin(y / 2))) < 1e-14
    _, _, _, w_late = pointwise(spec, 5000.0)
    assert np.max(np.abs(w_late + np.cos(y))) < 1e-10


def test_diagonal_bars_pointwise():
    spec = EXAMPLES["diagonal-bars"](NU)
    _, x, y, w = pointwise(spec, 10.0)
    a = math.sqrt(6) / 2
    ref = np.exp(-10 * NU * 10) * np.sin(2 * a * x + 2 * y) + np.exp(-40 * NU * 10) * np.cos(4 * a * x + 4 * y)
    assert np.max(np.abs(w - ref)) < 1e-14


def test_resonant_triad_pointwise():
    spec = EXAMPLES["resonant-triad"](NU)
    _, x, y, w = pointwise(spec, 5.0)
    a = math.sqrt(5)
    ref = (np.sin(a * x) * np.sin(2 * y) + 0.3 * np.cos(a * x) * np.cos(2 * y) + 0.4 * np.sin(3 * y))
    assert np.max(np.abs(w - np.exp(-9 * NU * 5.0) * ref)) < 1e-14


def test_resonant_quartet_pointwise():
    spec = EXAMPLES["resonant-quartet"](NU)
    _, x, y, w = pointwise(spec, 2.0)
    ref = (0.4 * np.sin(4 * x) * np.sin(3 * y) + 0.5 * np.cos(4 * x) * np.cos(3 * y)
           + 0.3 * np.sin(5 * x) + np.sin(5 * y))
    assert np.max(np.abs(w - np.exp(-25 * NU * 2.0) * ref)) < 1e-14


def test_unidirectional_pointwise():
    _, x, y, w = pointwise(UNIDIRECTIONAL_3, 3.0)
    e = lambda n: math.exp(-n * n * NU * 3.0)  # noqa: E731
    ref = -np.cos(y) + 0.5 * e(2) * np.cos(2 * y) + 0.25 * e(3) * np.sin(3 * y) \
        + e(5) * (0.1 * np.cos(5 * y) - 0.2 * np.sin(5 * y))
    assert np.max(np.abs(w - ref)) < 1e-14


@pytest.mark.parametrize("alpha_sq, d", [(4, 1.0), (1, 0.5), (Fraction(9, 4), 2.0)])
def test_counterexample_norm_is_d_nu(alpha_sq, d):
    spec = RemarkCounterexample(nu=0.003, alpha_sq=alpha_sq, d=d)
    w = eval_exact(spec, 0.0, spec.grid(16, 16))
    assert l2_norm(w) == pytest.approx(d * 0.003, rel=1e-14)


def test_violations_are_reported():
    bad = Resonant3(nu=NU, alpha_sq=4, n=1, m=2, j=3)
    (v,) = validate(bad)
    assert v.code == "ResonanceViolated"
    with pytest.raises(ResonanceViolated):
        eval_exact(bad, 0.0, TorusConfig(alpha=2.0, nx=16, ny=16))
    bad4 = Resonant4(nu=NU, alpha_sq=1, n=4, m=3, i=5, j=4)
    assert validate(bad4)[0].code == "ResonanceViolated"
    low = ExtendedLowMode(nu=NU, alpha_sq=Fraction(1, 2), beta=Fraction(1, 2))
    assert validate(low)[0].code == "DomainViolated"
    with pytest.raises(IncompatibleDomain):
        eval_exact(low, 0.0, TorusConfig(alpha=math.sqrt(0.5), beta=0.5, nx=16, ny=16))
    assert validate(RemarkCounterexample(nu=NU, alpha_sq=Fraction(1, 4)))[0].code == "DomainViolated"


def test_float_resonance_is_accepted_within_roundoff():
    spec = Resonant3(nu=NU, alpha_sq=math.sqrt(5) ** 2, n=1, m=2, j=3)
    assert validate(spec) == []
    off = Resonant3(nu=NU, alpha_sq=5.001, n=1, m=2, j=3)
    assert validate(off)


def test_grid_must_match_spec():
    spec = EXAMPLES["resonant-triad"](NU)
    with pytest.raises(IncompatibleDomain):
        eval_exact(spec, 0.0, TorusConfig(alpha=2.0, nx=32, ny=32))
    with pytest.raises(IncompatibleDomain):
        eval_exact(EXAMPLES["four-vortex-transition"](NU), 0.0,
                   TorusConfig(alpha=math.sqrt(3) / 2, nx=32, ny=32))


def test_modes_beyond_the_cutoff_warn_or_fail():
    spec = EXAMPLES["resonant-quartet"](NU)
    with pytest.warns(UserWarning, match="cutoff"):
        eval_exact(spec, 0.0, spec.grid(12, 12))
    with pytest.raises(IncompatibleDomain):
        eval_exact(spec, 0.0, spec.grid(8, 8))


def test_analytic_rates():
    rates = dict(analytic_rates(EXAMPLES["diagonal-bars"](NU)))
    assert rates == pytest.approx({(2, 2): 0.1, (4, 4): 0.4})
    slowest = [analytic_rates(EXAMPLES[k](NU))[0][1] for k in ("resonant-triad", "resonant-quartet")]
    assert slowest == pytest.approx([0.09, 0.25])
    assert all(abs(r - 0.25) < 1e-15 for _, r in analytic_rates(EXAMPLES["resonant-quartet"](NU)))


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_dict_round_trip(spec):
    again = exact_from_dict(spec.to_dict())
    assert again == spec


def test_from_dict_variants():
    s = exact_from_dict({"family": "Resonant3", "alpha": 2.23606797749979, "n": 1, "m": 2, "j": 3,
                         "nu": 0.01, "c": [1, 0, 0, 0, 0, 0]})
    assert validate(s) == []
    assert exact_from_dict({"example": "resonant-triad", "nu": 0.02}).nu == 0.02
    with pytest.raises(InvalidConfig):
        exact_from_dict({"family": "Nope", "nu": 0.01})
    with pytest.raises(InvalidConfig):
        exact_from_dict({"example": "nope"})
    with pytest.raises(InvalidConfig) as ei:
        exact_from_dict({"family": "BarFlow", "nu": 0.01, "wrong": 1})
    assert ei.value.field == "wrong"
    with pytest.raises(InvalidConfig):
        exact_from_dict({"family": "Resonant3", "nu": 0.01, "c": [1, 2]})


def test_families_registry():
    assert set(FAMILIES) == {s.family for s in SPECS}
    assert isinstance(SPECS[0].model().nu, float)
    with pytest.raises(InvalidConfig):
        Unidirectional(nu=-1.0)


def random_instance(spec, rng):
    """Same family and wavenumbers as ``spec``, fresh free coefficients."""
    kw = {}
    if hasattr(spec, "coefficients"):
        kw["coefficients"] = tuple((n, *rng.uniform(-1, 1, 2)) for n, _, _ in spec.coefficients)
    if hasattr(spec, "c"):
        kw["c"] = tuple(rng.uniform(-1, 1, len(spec.c)))
    if hasattr(spec, "d"):
        kw["d"] = float(rng.uniform(0.2, 2.0))
    if spec.family in ("Unidirectional", "ExtendedLowMode", "BasicNonstationary"):
        kw["a"] = int(rng.integers(0, 2))
    return dataclasses.replace(spec, **kw)


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_solver_reproduces_random_instances(spec):
    rng = np.random.default_rng(zlib.crc32(spec.family.encode()))
    for _ in range(3):
        inst = random_instance(spec, rng)
        assert validate(inst) == []
        rep = exact_solution_error(inst, t_end=50.0, grid=inst.grid(32, 32), dt=0.01)
        assert rep.max_rel_error < 1e-6, (inst, rep.max_rel_error)


@pytest.mark.parametrize("alpha_sq", [1, 4, Fraction(9, 4)])
def test_counterexample_projection_properties(alpha_sq):
    spec = RemarkCounterexample(nu=NU, alpha_sq=alpha_sq, d=1.0)
    w = eval_exact(spec, 0.0, spec.grid(16, 16))
    n = l2_norm(w)
    assert l2_norm(project_ne0(w) - w) <= 1e-14 * n
    assert l2_norm(w - project_K(w) - w) <= 1e-14 * n
    if alpha_sq == 1:
        assert l2_norm(project_a(w)) <= 1e-14 * n
