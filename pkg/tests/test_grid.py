import math

import numpy as np
import pytest

from clifford_orlicz.grid import (
    Ball,
    BoundaryField,
    BoundaryMesh,
    Box,
    GeometryError,
    MultivectorField,
    build_ball,
    build_box,
    build_disc,
    dalpha_apply,
    dirac_apply,
    dirac_bar_apply,
    fd_partial,
    laplacian_apply,
    multi_indices,
    trace_restrict,
    zero_trace_error,
)


def scalar_field(dom, fn):
    def full(P):
        v = np.zeros((len(P), 1 << dom.dim))
        v[:, 0] = fn(P)
        return v

    return MultivectorField.from_function(dom, full)


@pytest.fixture(scope="module")
def disc16():
    return build_disc(1.0, 1 / 16)


@pytest.fixture(scope="module")
def disc32():
    return build_disc(1.0, 1 / 32)


@pytest.fixture(scope="module")
def ball8():
    return build_ball(1.0, 1 / 8)


# --- builders -------------------------------------------------------------------


@pytest.mark.parametrize("h", [1 / 8, 1 / 16, 1 / 32])
def test_disc_measures(h):
    dom, mesh = build_disc(1.0, h)
    assert abs(mesh.area - 2 * math.pi) <= h
    assert abs(dom.volume - math.pi) <= 2 * math.pi * h
    assert abs(dom.weights.sum() - math.pi) <= h**2


def test_box_measures():
    dom, mesh = build_box([1.0, 1.0], 1 / 16)
    assert mesh.area == 4.0
    assert dom.weights.sum() == 1.0
    dom3, mesh3 = build_box([1.0, 0.5, 0.75], 1 / 8)
    assert math.isclose(mesh3.area, 2 * (0.5 + 0.75 + 0.375), rel_tol=1e-14)
    assert math.isclose(dom3.weights.sum(), 0.375, rel_tol=1e-14)


def test_ball_measures(ball8):
    dom, mesh = ball8
    assert abs(mesh.area - 4 * math.pi) <= 1 / 8
    assert abs(dom.weights.sum() - 4 / 3 * math.pi) <= 1 / 8


@pytest.mark.parametrize("builder", [lambda: build_disc(1.0, 1 / 16), lambda: build_ball(1.0, 1 / 8), lambda: build_box([1.0, 1.0], 1 / 8)])
def test_normals_unit_and_outward(builder):
    dom, mesh = builder()
    assert np.all(np.abs(np.linalg.norm(mesh.normals, axis=1) - 1) <= 1e-12)
    moved = mesh.centers + (dom.h / 10) * mesh.normals
    assert not np.any(dom.geometry.contains(moved))
    inward = mesh.centers - (dom.h / 10) * mesh.normals
    assert np.all(dom.geometry.contains(inward))


def test_mask_centres_inside(disc16, ball8):
    for dom, _ in (disc16, ball8):
        assert np.all(dom.geometry.contains(dom.points))
        assert dom.full_stencil.any()


def test_too_coarse():
    with pytest.raises(GeometryError):
        build_disc(1.0, 0.8)
    with pytest.raises(GeometryError):
        build_box([1.0, 1.0], 0.5)


def test_mesh_validation():
    c = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(GeometryError):
        BoundaryMesh(c, 2 * c, np.ones(2))
    with pytest.raises(GeometryError):
        BoundaryMesh(c[:1], c[:1], np.ones(1))
    dup = BoundaryMesh(np.array([[1.0, 0.0], [1.0, 0.0]]), c, np.ones(2))
    with pytest.raises(GeometryError):
        dup.check_separated()


def test_geometry_primitives():
    b = Ball(2.0, 3)
    assert math.isclose(b.volume(), 32 / 3 * math.pi)
    assert math.isclose(b.surface_area(), 16 * math.pi)
    assert b.distance(np.zeros(3)) == 2.0
    box = Box((1.0, 2.0))
    assert box.volume() == 2.0 and box.surface_area() == 6.0
    assert box.contains(np.array([0.5, 1.5])) and not box.contains(np.array([1.5, 0.5]))


# --- differential operators ---------------------------------------------------


def test_fd_partial_exactness(disc16):
    dom, _ = disc16
    c = scalar_field(dom, lambda P: np.full(len(P), 3.0))
    for j in range(2):
        assert np.all(fd_partial(c, j).values == 0)
        lin = fd_partial(scalar_field(dom, lambda P: P[:, j]), j)
        np.testing.assert_allclose(lin.values[:, 0], 1.0, atol=1e-12)
        sq = fd_partial(scalar_field(dom, lambda P: P[:, j] ** 2), j)
        sel = dom.interior_stencil(1)
        np.testing.assert_allclose(sq.values[sel, 0], 2 * dom.points[sel, j], atol=1e-12)


def test_fd_partial_second_order():
    errs = []
    for h in (1 / 16, 1 / 32):
        dom, _ = build_disc(1.0, h)
        d = fd_partial(scalar_field(dom, lambda P: np.sin(2 * P[:, 0])), 0)
        errs.append(np.max(np.abs(d.values[:, 0] - 2 * np.cos(2 * dom.points[:, 0]))))
    assert 3.0 <= errs[0] / errs[1] <= 5.0


def test_dirac_examples(disc16, ball8):
    for dom, _ in (disc16, ball8):
        n = dom.dim
        assert np.all(dirac_apply(scalar_field(dom, lambda P: np.ones(len(P)))).values == 0)

        def vec(P):
            v = np.zeros((len(P), 1 << n))
            for j in range(n):
                v[:, 1 << j] = P[:, j]
            return v

        D = dirac_apply(MultivectorField.from_function(dom, vec)).values
        expected = np.zeros(1 << n)
        expected[0] = -n
        np.testing.assert_allclose(D, np.tile(expected, (dom.n_cells, 1)), atol=1e-12)
    dom, _ = disc16
    f = MultivectorField.from_function(dom, lambda P: np.c_[P[:, 0], np.zeros((len(P), 2)), -P[:, 1]])
    np.testing.assert_allclose(dirac_apply(f).values, 0.0, atol=1e-12)


def test_dirac_bar_is_conjugate_dirac(disc16):
    dom, _ = disc16
    f = MultivectorField(dom, np.random.default_rng(1).standard_normal((dom.n_cells, 4)))
    np.testing.assert_allclose(dirac_bar_apply(f).values, -dirac_apply(f).values, atol=1e-14)


@pytest.mark.parametrize("which", ["disc", "ball"])
def test_dirac_squared_is_minus_laplacian_on_cubics(which, disc16, ball8):
    """Holds to rounding where all stencils are central and the data is a cubic."""
    dom, _ = disc16 if which == "disc" else ball8
    n, size = dom.dim, 1 << dom.dim
    rng = np.random.default_rng(7)
    monomials = [e for e in np.ndindex(*(4,) * n) if sum(e) <= 3]
    coef = rng.standard_normal((len(monomials), size))

    def cubic(P):
        basis = np.stack([np.prod(P ** np.array(e), axis=1) for e in monomials], axis=1)
        return basis @ coef

    f = MultivectorField.from_function(dom, cubic)
    sel = dom.interior_stencil(2)
    lhs = dirac_apply(dirac_apply(f)).values[sel]
    rhs = -laplacian_apply(f).values[sel]
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_dalpha(disc16):
    dom, _ = disc16
    f = scalar_field(dom, lambda P: P[:, 0] * P[:, 1])
    np.testing.assert_array_equal(dalpha_apply(f, (0, 0)).values, f.values)
    sel = dom.interior_stencil(1)
    np.testing.assert_allclose(dalpha_apply(f, (1, 1)).values[sel, 0], 1.0, atol=1e-12)
    g = scalar_field(dom, lambda P: P[:, 0] ** 2)
    np.testing.assert_allclose(dalpha_apply(g, (2, 0)).values[sel, 0], 2.0, atol=1e-12)
    with pytest.raises(NotImplementedError):
        dalpha_apply(f, (2, 1))
    assert multi_indices(2, 1) == [(1, 0), (0, 1)] or sorted(multi_indices(2, 1)) == [(0, 1), (1, 0)]
    assert len(multi_indices(3, 2)) == 6


def test_dirichlet_laplacian_is_spd(disc16):
    dom, _ = disc16
    L = dom.laplacian_matrix(dirichlet=True)
    assert abs(L - L.T).max() <= 1e-12 / dom.h**2
    x = np.random.default_rng(3).standard_normal(dom.n_cells)
    assert x @ (L @ x) < 0


def test_divergence_theorem(disc16, disc32):
    errs = []
    for dom, mesh in (disc16, disc32):
        phi = lambda P: P[:, 0] ** 2 + np.sin(P[:, 1]) + P[:, 0] * P[:, 1]
        f = scalar_field(dom, phi)
        for j in range(2):
            vol = float(dom.weights @ fd_partial(f, j).values[:, 0])
            bnd = float(mesh.weights @ (phi(mesh.centers) * mesh.normals[:, j]))
            errs.append(abs(vol - bnd))
            assert abs(vol - bnd) <= 2 * dom.h


# --- trace ----------------------------------------------------------------------


def test_trace_examples(disc16):
    dom, mesh = disc16
    c = np.array([1.0, -2.0, 0.5, 3.0])
    const = MultivectorField(dom, np.tile(c, (dom.n_cells, 1)))
    np.testing.assert_allclose(trace_restrict(const, mesh).values, np.tile(c, (mesh.n_facets, 1)), atol=1e-12)
    zero = trace_restrict(MultivectorField.zeros(dom), mesh)
    assert np.all(zero.values == 0)
    x1 = trace_restrict(scalar_field(dom, lambda P: P[:, 0]), mesh)
    theta = np.arctan2(mesh.centers[:, 1], mesh.centers[:, 0])
    assert np.max(np.abs(x1.values[:, 0] - np.cos(theta))) <= dom.h**2


def test_zero_trace_error():
    errs = []
    for h in (1 / 16, 1 / 32):
        dom, mesh = build_disc(1.0, h)
        bump = scalar_field(dom, lambda P: 1 - np.sum(P**2, axis=1))
        errs.append(zero_trace_error(bump, mesh))
        assert errs[-1] <= 4 * h**2
        assert zero_trace_error(MultivectorField.zeros(dom), mesh) == 0.0
        c = MultivectorField(dom, np.tile([3.0, 0.0, 4.0, 0.0], (dom.n_cells, 1)))
        assert math.isclose(zero_trace_error(c, mesh), 5.0, rel_tol=1e-12)
    assert errs[1] < errs[0]


def test_trace_on_ball(ball8):
    dom, mesh = ball8
    t = trace_restrict(scalar_field(dom, lambda P: P[:, 2] + 2 * P[:, 0]), mesh)
    np.testing.assert_allclose(t.values[:, 0], mesh.centers[:, 2] + 2 * mesh.centers[:, 0], atol=1e-10)


# --- fields ---------------------------------------------------------------------


def test_field_arithmetic_and_restrict(disc16):
    dom, mesh = disc16
    rng = np.random.default_rng(0)
    a = MultivectorField(dom, rng.standard_normal((dom.n_cells, 4)))
    b = MultivectorField(dom, rng.standard_normal((dom.n_cells, 4)))
    np.testing.assert_allclose((a + b - b).values, a.values)
    np.testing.assert_allclose((-a).values, -a.values)
    np.testing.assert_allclose((a * 2.0).values, 2 * a.values)
    core = dom.subdomain(dom.core_selector(1.5))
    r = a.restrict(core)
    assert r.values.shape == (core.n_cells, 4)
    np.testing.assert_array_equal(r.values, a.values[core.index_in(dom)])
    with pytest.raises(ValueError):
        MultivectorField(dom, np.zeros((dom.n_cells, 3)))
    with pytest.raises(ValueError):
        MultivectorField(dom, np.full((dom.n_cells, 4), np.inf))
    g = BoundaryField.zeros(mesh)
    assert g.l2_norm() == 0.0
    with pytest.raises(ValueError):
        BoundaryField(mesh, np.zeros((mesh.n_facets + 1, 4)))


def test_tangential_derivative_on_circle(disc32):
    _, mesh = disc32
    theta = np.arctan2(mesh.centers[:, 1], mesh.centers[:, 0])
    (T,) = mesh.tangential_gradient_matrices()
    d = T @ np.sin(theta)
    assert np.max(np.abs(d - np.cos(theta))) <= 1e-3


@pytest.mark.parametrize("h", [1 / 8, 1 / 12])
def test_tangential_derivative_on_sphere(h):
    """Gradient of the height function z, including the facets near the poles."""
    _, mesh = build_ball(1.0, h)
    z = mesh.centers[:, 2]
    Ts = mesh.tangential_gradient_matrices()
    frames = mesh.tangent_frames()
    exact = np.stack([frames[:, a, 2] for a in range(2)], axis=1)
    got = np.stack([T @ z for T in Ts], axis=1)
    assert np.max(np.abs(got - exact)) <= 0.6 * h
