import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clifford_orlicz.grid import BoundaryField, MultivectorField, build_box, build_disc
from clifford_orlicz.kernels import difference_quotient_sum
from clifford_orlicz.orlicz import (
    ConvergenceError,
    ExpMinusOne,
    NormConfig,
    OrliczFunction,
    Power,
    PowerOverP,
    check_young_axioms,
    clifford_luxembourg_norm,
    conjugate_psi,
    eval_psi,
    luxembourg_norm,
    modular_integral,
    slobodeckji_norm,
    slobodeckji_terms,
    sobolev_norm,
)

ALL_PSI = [Power(1.5), Power(2), Power(3), PowerOverP(2), PowerOverP(4), ExpMinusOne()]


@pytest.fixture(scope="module")
def unit_square():
    return build_box([1.0, 1.0], 1 / 16)


# --- Young functions ----------------------------------------------------------


def test_eval_examples():
    assert eval_psi(Power(2), 3.0) == 9.0
    assert math.isclose(eval_psi(ExpMinusOne(), 1.0), math.e - 1, rel_tol=1e-15)
    for psi in ALL_PSI:
        assert eval_psi(psi, 0.0) == 0.0
    with pytest.raises(ValueError):
        eval_psi(Power(2), -1.0)


@pytest.mark.parametrize("psi", ALL_PSI + [conjugate_psi(Power(3)), conjugate_psi(ExpMinusOne())])
def test_young_axioms(psi):
    assert check_young_axioms(psi, t_max=20.0)


def test_bad_kinds():
    with pytest.raises(ValueError):
        OrliczFunction("cosh")
    with pytest.raises(ValueError):
        Power(1.0)
    with pytest.raises(ValueError):
        OrliczFunction("conjugate")


def test_from_spec_roundtrip():
    for psi in ALL_PSI + [conjugate_psi(Power(3))]:
        assert OrliczFunction.from_spec(psi.describe()) == psi
    assert OrliczFunction.from_spec("power:2") == Power(2)
    assert OrliczFunction.from_spec("exp_minus_one") == ExpMinusOne()


# --- conjugates ----------------------------------------------------------------


def test_power_over_p_self_conjugate_numeric():
    s = np.linspace(0, 5, 51)
    numeric = OrliczFunction("conjugate", base=PowerOverP(2))(s)
    np.testing.assert_allclose(numeric, s**2 / 2, atol=1e-8)
    assert conjugate_psi(PowerOverP(2)) == PowerOverP(2)
    assert conjugate_psi(PowerOverP(3)) == PowerOverP(1.5)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_power_conjugate_closed_form(p):
    """(t^p)* (s) = (p - 1) (s / p)^(p / (p - 1))."""
    s = np.linspace(0, 6, 61)
    expected = (p - 1) * (s / p) ** (p / (p - 1))
    np.testing.assert_allclose(conjugate_psi(Power(p))(s), expected, rtol=1e-8, atol=1e-10)


def test_exp_conjugate_closed_form():
    """(e^t - 1)* (s) = s log s - s + 1 for s >= 1, else 0."""
    s = np.linspace(0, 8, 81)
    with np.errstate(divide="ignore", invalid="ignore"):
        expected = np.where(s >= 1, s * np.log(s) - s + 1, 0.0)
    np.testing.assert_allclose(conjugate_psi(ExpMinusOne())(s), expected, atol=1e-9)


@pytest.mark.parametrize("psi", ALL_PSI)
def test_conjugate_at_zero_and_young_inequality(psi):
    star = conjugate_psi(psi)
    assert star(0.0) == 0.0
    s = np.linspace(0, 4, 100)
    t = np.linspace(0, 4, 100)
    S, T = np.meshgrid(s, t)
    lhs = S * T
    rhs = eval_psi(psi, T) + eval_psi(star, S)
    assert np.all(lhs <= rhs + 1e-9 * (1 + rhs))


def test_conjugate_of_conjugate_returns_base():
    assert conjugate_psi(conjugate_psi(Power(3))) == Power(3)


# --- modular and Luxembourg ------------------------------------------------------


def test_modular_examples():
    w = np.full(16, 1 / 16)
    assert modular_integral(np.zeros(16), w, Power(2), 0.5) == 0.0
    assert math.isclose(modular_integral(np.full(16, 2.0), w, Power(2), 2.0), 1.0, rel_tol=1e-15)
    with pytest.raises(ValueError):
        modular_integral(np.ones(16), w, Power(2), 0.0)
    with pytest.raises(ValueError):
        modular_integral(np.ones(3), w, Power(2), 1.0)


def test_modular_monotone_in_beta(rng):
    for psi in ALL_PSI:
        f, w = rng.standard_normal(50), rng.random(50) / 50
        assert modular_integral(f, w, psi, 2.0) <= modular_integral(f, w, psi, 1.0)


def test_luxembourg_examples():
    w = np.full(64, 1 / 64)
    assert luxembourg_norm(np.zeros(64), w, Power(2)) == 0.0
    assert abs(luxembourg_norm(np.full(64, 2.0), w, Power(2)) - 2.0) <= 1e-9


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_luxembourg_equals_lp_norm(p, rng):
    cfg = NormConfig()
    for _ in range(100):
        f = rng.standard_normal(200) * rng.uniform(0.01, 100)
        w = rng.random(200) / 100
        lp = float(w @ np.abs(f) ** p) ** (1 / p)
        assert abs(luxembourg_norm(f, w, Power(p), cfg) - lp) <= 1e-8 * max(1.0, lp)


@pytest.mark.parametrize("psi", ALL_PSI)
def test_modular_at_norm_is_near_one(psi, rng):
    cfg = NormConfig()
    for _ in range(20):
        f, w = rng.standard_normal(100), rng.random(100) / 100
        beta = luxembourg_norm(f, w, psi, cfg)
        m = modular_integral(f, w, psi, beta)
        assert 1 - 10 * cfg.bisect_tol <= m <= 1.0


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=40),
    st.floats(-50, 50, allow_nan=False),
    st.sampled_from(ALL_PSI),
)
def test_homogeneity(f, c, psi):
    f = np.array(f)
    w = np.full(f.size, 1.0 / f.size)
    base = luxembourg_norm(f, w, psi)
    assert math.isclose(luxembourg_norm(c * f, w, psi), abs(c) * base, rel_tol=1e-8, abs_tol=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(ALL_PSI))
def test_triangle_inequality(seed, psi):
    r = np.random.default_rng(seed)
    f, g = r.standard_normal((2, 30)) * r.uniform(0.1, 10, 2)[:, None]
    w = r.random(30) / 30
    lhs = luxembourg_norm(f + g, w, psi)
    assert lhs <= (luxembourg_norm(f, w, psi) + luxembourg_norm(g, w, psi)) * (1 + 1e-8)


def test_convergence_error_carries_bracket():
    with pytest.raises(ConvergenceError) as info:
        luxembourg_norm(np.array([1.0, 3.0]), np.array([0.3, 0.7]), Power(2), NormConfig(max_iter=2))
    assert len(info.value.bracket) == 2


def test_norm_config_validation():
    with pytest.raises(ValueError):
        NormConfig(bisect_tol=0)
    with pytest.raises(ValueError):
        NormConfig(lam=-1)


# --- field norms -----------------------------------------------------------------


def _const(dom, comps):
    v = np.zeros((dom.n_cells, 1 << dom.dim))
    for A, c in comps.items():
        v[:, A] = c
    return MultivectorField(dom, v)


def test_clifford_luxembourg_examples(unit_square):
    dom, _ = unit_square
    assert clifford_luxembourg_norm(MultivectorField.zeros(dom), Power(2)) == 0.0
    assert abs(clifford_luxembourg_norm(_const(dom, {0: 2.0}), Power(2)) - 2.0) <= 1e-9
    assert abs(clifford_luxembourg_norm(_const(dom, {0: 2.0, 1: 2.0}), Power(2)) - 4.0) <= 1e-9


def test_sobolev_examples(unit_square):
    dom, _ = unit_square
    f = MultivectorField.from_function(dom, lambda P: np.c_[P[:, 0], np.zeros((len(P), 3))])
    assert sobolev_norm(f, 0, Power(2)) == clifford_luxembourg_norm(f, Power(2))
    expected = math.sqrt(1 / 3) + 1
    assert abs(sobolev_norm(f, 1, Power(2)) - expected) <= dom.h**2
    c = _const(dom, {0: 1.5, 3: -0.5})
    for k in (1, 2):
        assert math.isclose(sobolev_norm(c, k, Power(2)), sobolev_norm(c, 0, Power(2)), rel_tol=1e-12)
    with pytest.raises(NotImplementedError):
        sobolev_norm(f, 3, Power(2))


@pytest.mark.parametrize("psi", [Power(2), ExpMinusOne()])
def test_sobolev_monotone_in_k(psi):
    dom, _ = build_disc(1.0, 1 / 16)
    f = MultivectorField.from_function(dom, lambda P: np.c_[np.sin(3 * P[:, 0]), P[:, 1] ** 2, P[:, 0] * P[:, 1], np.cos(P[:, 1])])
    n0, n1, n2 = (sobolev_norm(f, k, psi) for k in (0, 1, 2))
    assert n0 <= n1 <= n2


# --- boundary norm --------------------------------------------------------------------


def test_slobodeckji_constant_field():
    _, mesh = build_disc(1.0, 1 / 16)
    c = 0.7
    g = BoundaryField(mesh, np.tile([c, 0, 0, 0], (mesh.n_facets, 1)).astype(float))
    single, double = slobodeckji_terms(g, 1, Power(2))
    assert math.isclose(single, 2 * math.pi * c**2, rel_tol=1e-12)
    assert double == 0.0
    assert slobodeckji_norm(g, 1, Power(2)) == single


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_slobodeckji_power_factorisation(p, lam, rng):
    """For Power(p) the kernel is |g(x)-g(y)|^p |x-y|^(2-n-p) / lam^p."""
    x = rng.standard_normal((40, 2))
    g = rng.standard_normal((40, 4))
    w = rng.random(40)
    d = np.linalg.norm(x[:, None] - x[None], axis=2)
    dg = np.linalg.norm(g[:, None] - g[None], axis=2)
    off = ~np.eye(40, dtype=bool)
    expected = np.sum((w[:, None] * w[None])[off] * dg[off] ** p * d[off] ** (-p) / lam**p)
    got = difference_quotient_sum(x, g, w, lam, Power(p))
    assert math.isclose(got, expected, rel_tol=1e-12)


def test_slobodeckji_k2_and_errors():
    _, mesh = build_disc(1.0, 1 / 16)
    g = BoundaryField.from_function(mesh, lambda P: np.c_[P[:, 0], P[:, 1], np.zeros((len(P), 2))])
    s1, d1 = slobodeckji_terms(g, 1, Power(2))
    s2, d2 = slobodeckji_terms(g, 2, Power(2))
    assert s2 > s1 and d1 > 0 and d2 > 0
    with pytest.raises(NotImplementedError):
        slobodeckji_terms(g, 3, Power(2))


def test_box_unit_volume_norm():
    dom, _ = build_box([1.0, 1.0], 1 / 8)
    assert math.isclose(dom.weights.sum(), 1.0, rel_tol=1e-14)
