"""Masked Cartesian grids for model domains, their boundary meshes, and
finite-difference operators acting on Clifford-valued fields.

Differential operators are assembled once per domain as ``scipy.sparse``
matrices over the interior-cell enumeration and applied to the
``(n_cells, 2**n)`` coefficient array of a field.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .clifford import conj_arrays, left_mul_vector, mul_arrays


class GeometryError(ValueError):
    """Inconsistent or too coarse domain / mesh construction."""


# ---------------------------------------------------------------------------
# analytic shapes


@dataclass(frozen=True)
class Ball:
    """Centered ball (disc for ``dim == 2``)."""

    radius: float
    dim: int

    def contains(self, x):
        return np.linalg.norm(x, axis=-1) < self.radius

    def distance(self, x):
        """Signed distance to the boundary, positive inside."""
        return self.radius - np.linalg.norm(x, axis=-1)

    def ray_distance(self, x, axis, sign):
        """Distance from ``x`` to the boundary along ``sign * e_axis``."""
        a = x[:, axis]
        rest = np.sum(x**2, axis=1) - a**2
        return np.abs(sign * np.sqrt(np.maximum(self.radius**2 - rest, 0.0)) - a)

    def surface_area(self):
        return 2 * math.pi ** (self.dim / 2) / math.gamma(self.dim / 2) * self.radius ** (self.dim - 1)

    def volume(self):
        return self.surface_area() * self.radius / self.dim

    def describe(self):
        return {"kind": "disc" if self.dim == 2 else "ball", "radius": self.radius}


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[0, L_1] x ... x [0, L_n]``."""

    lengths: tuple

    @property
    def dim(self):
        return len(self.lengths)

    def contains(self, x):
        L = np.asarray(self.lengths)
        return np.all((x > 0) & (x < L), axis=-1)

    def distance(self, x):
        L = np.asarray(self.lengths)
        inside = np.minimum(x, L - x).min(axis=-1)
        outside = np.linalg.norm(np.maximum(np.maximum(-x, x - L), 0.0), axis=-1)
        return np.where(inside >= 0, inside, -outside)

    def ray_distance(self, x, axis, sign):
        return self.lengths[axis] - x[:, axis] if sign > 0 else x[:, axis]

    def surface_area(self):
        L = np.asarray(self.lengths, dtype=float)
        return float(sum(2 * np.prod(np.delete(L, j)) for j in range(L.size)))

    def volume(self):
        return float(np.prod(self.lengths))

    def describe(self):
        return {"kind": "box", "lengths": list(self.lengths)}


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Cells of a uniform grid whose centers lie inside ``geometry``.

    ``origin`` is the lower corner of cell ``(0, ..., 0)``; cell centers are
    ``origin + (i + 1/2) h``. Interior cells are enumerated in C order of
    ``np.nonzero(mask)``; every field over the domain uses that order.
    """

    dim: int
    shape: tuple
    h: float
    origin: np.ndarray
    mask: np.ndarray
    geometry: object = None
    quad_weights: np.ndarray = field(default=None, repr=False)
    _ops: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise GeometryError(f"grid dimension must be 2 or 3, got {self.dim}")
        if self.mask.shape != tuple(self.shape):
            raise GeometryError("mask shape does not match grid shape")
        if self.h <= 0:
            raise GeometryError("spacing must be positive")

    @cached_property
    def cells(self):
        return np.argwhere(self.mask)

    @cached_property
    def points(self):
        return self.origin + (self.cells + 0.5) * self.h

    @cached_property
    def lookup(self):
        idx = np.full(self.shape, -1, dtype=np.int64)
        idx[self.mask] = np.arange(self.n_cells)
        return idx

    @property
    def n_cells(self):
        return int(self.mask.sum())

    @property
    def cell_volume(self):
        return self.h**self.dim

    @property
    def volume(self):
        return self.n_cells * self.cell_volume

    @cached_property
    def weights(self):
        """Volume quadrature weights (cut-cell corrected when available)."""
        if self.quad_weights is not None:
            return self.quad_weights
        return np.full(self.n_cells, self.cell_volume)

    def distance(self, x):
        return self.geometry.distance(np.asarray(x, dtype=float))

    def neighbor(self, axis, offset):
        """Index of the cell ``offset`` steps along ``axis`` (-1 if absent)."""
        c = self.cells.copy()
        c[:, axis] += offset
        ok = (c[:, axis] >= 0) & (c[:, axis] < self.shape[axis])
        out = np.full(self.n_cells, -1, dtype=np.int64)
        out[ok] = self.lookup[tuple(c[ok].T)]
        return out

    @cached_property
    def full_stencil(self):
        """Cells whose 2n face neighbours are all interior."""
        ok = np.ones(self.n_cells, dtype=bool)
        for j in range(self.dim):
            ok &= (self.neighbor(j, 1) >= 0) & (self.neighbor(j, -1) >= 0)
        return ok

    def interior_stencil(self, depth=1):
        """Cells whose neighbours up to ``depth`` steps on every axis exist."""
        ok = np.ones(self.n_cells, dtype=bool)
        for j in range(self.dim):
            for s in range(1, depth + 1):
                ok &= (self.neighbor(j, s) >= 0) & (self.neighbor(j, -s) >= 0)
        return ok

    def core_selector(self, kappa):
        """Cells at distance at least ``kappa * h`` from the boundary."""
        return self.distance(self.points) >= kappa * self.h

    def subdomain(self, selector):
        """Domain made of the selected cells (same grid and geometry)."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[tuple(self.cells[selector].T)] = True
        weights = self.weights[self.lookup[mask]]
        return GridDomain(self.dim, self.shape, self.h, self.origin, mask, self.geometry, weights)

    def same_grid(self, other):
        return (
            self.dim == other.dim
            and tuple(self.shape) == tuple(other.shape)
            and math.isclose(self.h, other.h, rel_tol=1e-12)
            and np.allclose(self.origin, other.origin, rtol=0, atol=1e-12 * self.h)
        )

    def index_in(self, other):
        """Positions of this domain's cells inside ``other`` (must be a superset)."""
        if not self.same_grid(other):
            raise GeometryError("domains live on different grids")
        idx = other.lookup[tuple(self.cells.T)]
        if np.any(idx < 0):
            raise GeometryError("domain is not contained in the target domain")
        return idx

    # -- sparse operators ---------------------------------------------------

    def diff_matrix(self, axis, dirichlet=False):
        """First derivative along ``axis``.

        Central differences where both neighbours exist, second order
        one-sided otherwise. With ``dirichlet=True`` the field is taken to
        vanish on the true boundary: a missing neighbour is a ghost value
        extrapolated linearly through that zero (see :meth:`ghost_factor`)
        and the central formula is used everywhere.
        """
        key = ("d", axis, dirichlet)
        if key not in self._ops:
            self._ops[key] = self._build_diff(axis, dirichlet)
        return self._ops[key]

    def ghost_factor(self, axis, sign, min_fraction=1e-3):
        """Ghost value over cell value for a zero boundary condition.

        If the boundary lies ``theta * h`` from the cell center towards the
        missing neighbour, the linear extrapolation through zero gives
        ``ghost = -(1 - theta) / theta * value``; ``theta`` is floored at
        ``min_fraction``.
        """
        theta = self.geometry.ray_distance(self.points, axis, sign) / self.h
        theta = np.clip(theta, min_fraction, None)
        return -(1.0 - theta) / theta

    def _assemble(self, rows, cols, vals):
        N = self.n_cells
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
        )

    def _build_diff(self, axis, dirichlet):
        N, h = self.n_cells, self.h
        me = np.arange(N)
        p1, m1 = self.neighbor(axis, 1), self.neighbor(axis, -1)
        rows, cols, vals = [], [], []

        def put(sel, col, coef):
            rows.append(me[sel])
            cols.append(me[sel] if col is None else col[sel])
            vals.append(np.broadcast_to(np.asarray(coef, dtype=float), (N,))[sel] / h)

        if dirichlet:
            put(p1 >= 0, p1, 0.5)
            put(m1 >= 0, m1, -0.5)
            put(p1 < 0, None, 0.5 * self.ghost_factor(axis, 1))
            put(m1 < 0, None, -0.5 * self.ghost_factor(axis, -1))
        else:
            p2, m2 = self.neighbor(axis, 2), self.neighbor(axis, -2)
            central = (p1 >= 0) & (m1 >= 0)
            fwd = ~central & (p1 >= 0) & (p2 >= 0)
            bwd = ~central & ~fwd & (m1 >= 0) & (m2 >= 0)
            fwd1 = ~central & ~fwd & ~bwd & (p1 >= 0)
            bwd1 = ~central & ~fwd & ~bwd & ~fwd1 & (m1 >= 0)
            put(central, p1, 0.5)
            put(central, m1, -0.5)
            put(fwd, None, -1.5)
            put(fwd, p1, 2.0)
            put(fwd, p2, -0.5)
            put(bwd, None, 1.5)
            put(bwd, m1, -2.0)
            put(bwd, m2, 0.5)
            put(fwd1, p1, 1.0)
            put(fwd1, None, -1.0)
            put(bwd1, None, 1.0)
            put(bwd1, m1, -1.0)
        return self._assemble(rows, cols, vals)

    def second_diff_matrix(self, axis, dirichlet=False):
        """Second derivative along ``axis``; ``dirichlet`` as in :meth:`diff_matrix`.

        The Dirichlet version only alters diagonal entries, so the summed
        Laplacian stays symmetric negative definite.
        """
        key = ("dd", axis, dirichlet)
        if key in self._ops:
            return self._ops[key]
        N, h2 = self.n_cells, self.h**2
        me = np.arange(N)
        nb = {s: self.neighbor(axis, s) for s in (-3, -2, -1, 1, 2, 3)}
        rows, cols, vals = [], [], []

        def put(sel, col, coef):
            rows.append(me[sel])
            cols.append(me[sel] if col is None else col[sel])
            vals.append(np.broadcast_to(np.asarray(coef, dtype=float), (N,))[sel] / h2)

        if dirichlet:
            put(np.ones(N, dtype=bool), None, -2.0)
            for s in (1, -1):
                put(nb[s] >= 0, nb[s], 1.0)
                put(nb[s] < 0, None, self.ghost_factor(axis, s))
        else:
            have = {s: nb[s] >= 0 for s in nb}
            central = have[1] & have[-1]
            fwd = ~central & have[1] & have[2] & have[3]
            bwd = ~central & ~fwd & have[-1] & have[-2] & have[-3]
            fwd1 = ~central & ~fwd & ~bwd & have[1] & have[2]
            bwd1 = ~central & ~fwd & ~bwd & ~fwd1 & have[-1] & have[-2]
            put(central, None, -2.0)
            put(central, nb[1], 1.0)
            put(central, nb[-1], 1.0)
            for sel, s in ((fwd, 1), (bwd, -1)):
                put(sel, None, 2.0)
                put(sel, nb[s], -5.0)
                put(sel, nb[2 * s], 4.0)
                put(sel, nb[3 * s], -1.0)
            for sel, s in ((fwd1, 1), (bwd1, -1)):
                put(sel, None, 1.0)
                put(sel, nb[s], -2.0)
                put(sel, nb[2 * s], 1.0)
        m = self._assemble(rows, cols, vals)
        self._ops[key] = m
        return m

    def laplacian_matrix(self, dirichlet=False):
        key = ("lap", dirichlet)
        if key not in self._ops:
            self._ops[key] = sum(
                self.second_diff_matrix(j, dirichlet) for j in range(self.dim)
            ).tocsr()
        return self._ops[key]


def _grid_for(geometry, h, lower, upper):
    n = geometry.dim
    shape = tuple(int(v) for v in np.round((np.asarray(upper) - np.asarray(lower)) / h))
    origin = np.asarray(lower, dtype=float)
    axes = [origin[j] + (np.arange(shape[j]) + 0.5) * h for j in range(n)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    mask = geometry.contains(centers)
    dom = GridDomain(n, shape, float(h), origin, mask, geometry)
    if isinstance(geometry, Ball):
        dom = GridDomain(n, shape, float(h), origin, mask, geometry, _cut_cell_weights(dom, centers))
    per_axis = [np.unique(dom.cells[:, j]).size for j in range(n)]
    if min(per_axis, default=0) < 4 or not dom.full_stencil.any():
        raise GeometryError(f"spacing h={h} is too coarse for {geometry.describe()}")
    return dom


def _cut_cell_weights(dom, centers, samples=None):
    """Quadrature weights that account for cells cut by a curved boundary.

    Each interior cell gets the measure of its part inside the domain; the
    inside part of every exterior cell is lumped onto the interior cell
    nearest to that part's centroid. Measures come from midpoint
    supersampling of the cut cells.
    """
    n, h = dom.dim, dom.h
    S = samples or (16 if n == 2 else 10)
    flat = centers.reshape(-1, n)
    band = np.nonzero(np.abs(dom.geometry.distance(flat)) < 0.5 * h * math.sqrt(n) * 1.001)[0]
    sub = (np.arange(S) + 0.5) / S - 0.5
    offsets = np.stack(np.meshgrid(*[sub] * n, indexing="ij"), axis=-1).reshape(-1, n) * h
    w = np.full(dom.n_cells, dom.cell_volume)
    lookup = dom.lookup.reshape(-1)
    tree = cKDTree(dom.points)
    for c in band:
        pts = flat[c] + offsets
        inside = dom.geometry.contains(pts)
        part = inside.mean() * dom.cell_volume
        if lookup[c] >= 0:
            w[lookup[c]] += part - dom.cell_volume
        elif part > 0:
            w[tree.query(pts[inside].mean(axis=0))[1]] += part
    return w


# ---------------------------------------------------------------------------
# boundary


@dataclass(frozen=True, eq=False)
class BoundaryMesh:
    """Boundary facets: centers, outward unit normals, surface weights.

    ``h`` is the spacing of the grid the mesh was built alongside; the
    Cauchy transform measures its evaluation collar in units of it.
    """

    centers: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    geometry: object = None
    h: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        c, nu, w = self.centers, self.normals, self.weights
        if c.ndim != 2 or nu.shape != c.shape or w.shape != (c.shape[0],):
            raise GeometryError("inconsistent boundary mesh arrays")
        if c.shape[0] < 2:
            raise GeometryError("boundary mesh needs at least two facets")
        if np.any(np.abs(np.linalg.norm(nu, axis=1) - 1.0) > 1e-12):
            raise GeometryError("facet normals must have unit length")

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def n_facets(self):
        return self.centers.shape[0]

    @property
    def area(self):
        return float(self.weights.sum())

    @cached_property
    def tree(self):
        return cKDTree(self.centers)

    def check_separated(self):
        d, _ = self.tree.query(self.centers, k=2)
        if np.any(d[:, 1] <= 0.0):
            raise GeometryError("boundary mesh has coincident facet centers")

    def tangent_frames(self):
        """Orthonormal tangent vectors per facet, shape ``(M, n-1, n)``."""
        nu = self.normals
        if self.dim == 2:
            return np.stack([-nu[:, 1], nu[:, 0]], axis=-1)[:, None, :]
        ref = np.where(np.abs(nu[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
        t1 = np.cross(ref, nu)
        t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
        t2 = np.cross(nu, t1)
        return np.stack([t1, t2], axis=1)

    def tangential_gradient_matrices(self, neighbours=None):
        """Sparse least-squares tangential derivative operators.

        One matrix per tangent direction. For a closed curve with two
        neighbours this is the arc-parameter central difference.
        """
        k = neighbours or (2 if self.dim == 2 else 8)
        key = ("tgrad", k)
        if key in self._cache:
            return self._cache[key]
        M = self.n_facets
        pool = min(M - 1, 4 * k) if self.dim > 2 else k
        _, cand = self.tree.query(self.centers, k=pool + 1)
        cand = cand[:, 1:]
        frames = self.tangent_frames()
        rows, cols, vals = [[] for _ in range(self.dim - 1)], [[] for _ in range(self.dim - 1)], [[] for _ in range(self.dim - 1)]
        for i in range(M):
            # widen the stencil until it spans the tangent plane; on a
            # latitude-longitude sphere grid the nearest facets near a pole
            # all share one ring
            for m in range(k, pool + 1):
                nb = cand[i, :m]
                A = (self.centers[nb] - self.centers[i]) @ frames[i].T
                sv = np.linalg.svd(A, compute_uv=False)
                if sv[-1] >= 0.3 * sv[0]:
                    break
            P = np.linalg.pinv(A)
            for a in range(self.dim - 1):
                rows[a].extend([i] * (m + 1))
                cols[a].extend([i, *nb])
                vals[a].extend([-P[a].sum(), *P[a]])
        mats = [
            sp.csr_matrix((vals[a], (rows[a], cols[a])), shape=(M, M)) for a in range(self.dim - 1)
        ]
        self._cache[key] = mats
        return mats


def build_disc(radius, h, n_facets=None, facet_density=2.0):
    """Disc of ``radius`` with an equally spaced parametrized boundary."""
    if radius <= 0 or h <= 0:
        raise GeometryError("radius and h must be positive")
    geom = Ball(float(radius), 2)
    m = math.ceil(radius / h)
    dom = _grid_for(geom, h, [-(m + 1) * h] * 2, [(m + 1) * h] * 2)
    M = n_facets or 4 * math.ceil(facet_density * 2 * math.pi * radius / h / 4)
    theta = 2 * math.pi * (np.arange(M) + 0.5) / M
    nu = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    w = np.full(M, 2 * math.pi * radius / M)
    return dom, BoundaryMesh(radius * nu, nu, w, geom, float(h))


def build_ball(radius, h, facet_density=1.5):
    """Ball in R^3; sphere facets on a Gauss-Legendre x uniform-azimuth grid."""
    if radius <= 0 or h <= 0:
        raise GeometryError("radius and h must be positive")
    geom = Ball(float(radius), 3)
    m = math.ceil(radius / h)
    dom = _grid_for(geom, h, [-(m + 1) * h] * 3, [(m + 1) * h] * 3)
    nt = max(8, math.ceil(facet_density * math.pi * radius / h))
    nphi = 2 * nt
    z, wz = np.polynomial.legendre.leggauss(nt)
    phi = 2 * math.pi * (np.arange(nphi) + 0.5) / nphi
    Z, PHI = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(1 - Z**2)
    nu = np.stack([s * np.cos(PHI), s * np.sin(PHI), Z], axis=-1).reshape(-1, 3)
    nu /= np.linalg.norm(nu, axis=1, keepdims=True)
    w = (np.repeat(wz, nphi) * (2 * math.pi / nphi)) * radius**2
    return dom, BoundaryMesh(radius * nu, nu, w, geom, float(h))


def build_box(lengths, h, facets_per_cell=2):
    """Box ``[0, L]``; each face is split into squares of side ``h / facets_per_cell``."""
    L = tuple(float(v) for v in lengths)
    if len(L) not in (2, 3) or min(L) <= 0 or h <= 0:
        raise GeometryError("box needs 2 or 3 positive lengths and h > 0")
    for v in L:
        if abs(v / h - round(v / h)) > 1e-9:
            raise GeometryError(f"box length {v} is not a multiple of h={h}")
    geom = Box(L)
    n = len(L)
    dom = _grid_for(geom, h, [-h] * n, [v + h for v in L])
    s = h / facets_per_cell
    centers, normals, weights = [], [], []
    for j in range(n):
        others = [a for a in range(n) if a != j]
        ticks = [(np.arange(round(L[a] / s)) + 0.5) * s for a in others]
        pts = np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1).reshape(-1, n - 1)
        for side, val in ((-1.0, 0.0), (1.0, L[j])):
            c = np.empty((pts.shape[0], n))
            c[:, others] = pts
            c[:, j] = val
            nu = np.zeros_like(c)
            nu[:, j] = side
            centers.append(c)
            normals.append(nu)
            weights.append(np.full(pts.shape[0], s ** (n - 1)))
    return dom, BoundaryMesh(
        np.concatenate(centers), np.concatenate(normals), np.concatenate(weights), geom, float(h)
    )


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class MultivectorField:
    """One multivector per interior cell; ``values`` has shape ``(N, 2**n)``."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.domain.n_cells, 1 << self.domain.dim):
            raise GeometryError(
                f"field needs shape {(self.domain.n_cells, 1 << self.domain.dim)}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise GeometryError("field values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, domain):
        return cls(domain, np.zeros((domain.n_cells, 1 << domain.dim)))

    @classmethod
    def from_function(cls, domain, fn):
        """Sample ``fn(points) -> (N, 2**n)`` at the cell centers."""
        return cls(domain, fn(domain.points))

    @property
    def dim(self):
        return self.domain.dim

    def _wrap(self, v):
        return MultivectorField(self.domain, v)

    def __add__(self, other):
        return self._wrap(self.values + other.values)

    def __sub__(self, other):
        return self._wrap(self.values - other.values)

    def __neg__(self):
        return self._wrap(-self.values)

    def __mul__(self, c):
        return self._wrap(self.values * float(c))

    __rmul__ = __mul__

    def restrict(self, sub):
        """Values on a subdomain of the same grid."""
        return MultivectorField(sub, self.values[sub.index_in(self.domain)])

    def l2_norm(self):
        return float(np.sqrt(self.domain.weights @ np.sum(self.values**2, axis=1)))


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """One multivector per boundary facet."""

    mesh: BoundaryMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.n_facets, 1 << self.mesh.dim):
            raise GeometryError(
                f"boundary field needs shape {(self.mesh.n_facets, 1 << self.mesh.dim)}, got {v.shape}"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros((mesh.n_facets, 1 << mesh.dim)))

    @classmethod
    def from_function(cls, mesh, fn):
        return cls(mesh, fn(mesh.centers))

    def __sub__(self, other):
        return BoundaryField(self.mesh, self.values - other.values)

    def l2_norm(self):
        return float(np.sqrt(self.mesh.weights @ np.sum(self.values**2, axis=1)))


# ---------------------------------------------------------------------------
# operators on fields


def fd_partial(f, axis, dirichlet=False):
    return f._wrap(f.domain.diff_matrix(axis, dirichlet) @ f.values)


def dirac_apply(f, dirichlet=False):
    """``D f = sum_j e_j d_j f``."""
    n = f.dim
    out = np.zeros_like(f.values)
    for j in range(n):
        out += left_mul_vector(np.eye(n)[j], f.domain.diff_matrix(j, dirichlet) @ f.values, n)
    return f._wrap(out)


def dirac_bar_apply(f, dirichlet=False):
    """``Dbar f = sum_j conj(e_j) d_j f = -D f``."""
    return -dirac_apply(f, dirichlet)


def laplacian_apply(f, dirichlet=False):
    return f._wrap(f.domain.laplacian_matrix(dirichlet) @ f.values)


def multi_indices(n, order):
    """Multi-indices with ``|alpha| == order`` in lexicographically descending order."""
    return [a for a in itertools.product(range(order, -1, -1), repeat=n) if sum(a) == order]


def dalpha_matrix(domain, alpha):
    if sum(alpha) > 2:
        raise NotImplementedError("derivatives beyond order 2 are not supported")
    op = sp.identity(domain.n_cells, format="csr")
    for j, a in enumerate(alpha):
        for _ in range(a):
            op = domain.diff_matrix(j) @ op
    return op


def dalpha_apply(f, alpha):
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != f.dim or min(alpha) < 0:
        raise ValueError(f"multi-index {alpha} does not fit dimension {f.dim}")
    return f._wrap(dalpha_matrix(f.domain, alpha) @ f.values)


def trace_matrix(domain, mesh, radius=None, max_gap=None):
    """Sparse interpolation matrix from cell values to facet centers.

    Multilinear interpolation when the ``2**n`` surrounding cell centers are
    all interior; otherwise an affine least-squares fit over interior cells
    within ``radius`` (default ``2.5 h``), which extrapolates. A facet whose
    nearest interior cell is farther than ``max_gap`` (default ``2 h``) is
    an error.
    """
    h, n = domain.h, domain.dim
    radius = 2.5 * h if radius is None else radius
    max_gap = 2.0 * h if max_gap is None else max_gap
    # keyed on content: ids of freed meshes can be reused
    key = ("trace", hashlib.sha1(mesh.centers.tobytes()).hexdigest(), radius, max_gap)
    if key in domain._ops:
        return domain._ops[key][1]
    P = mesh.centers
    u = (P - domain.origin) / h - 0.5
    i0 = np.floor(u).astype(np.int64)
    frac = u - i0
    shape = np.asarray(domain.shape)
    corners = np.array(list(itertools.product((0, 1), repeat=n)))
    rows, cols, vals = [], [], []
    tree = domain_tree(domain)
    for i in range(P.shape[0]):
        idx = i0[i] + corners
        inb = np.all((idx >= 0) & (idx < shape), axis=1)
        cell = np.full(len(corners), -1)
        cell[inb] = domain.lookup[tuple(idx[inb].T)]
        wts = np.prod(np.where(corners == 1, frac[i], 1 - frac[i]), axis=1)
        if np.all(cell >= 0):
            rows.extend([i] * cell.size)
            cols.extend(cell)
            vals.extend(wts)
            continue
        near = tree.query_ball_point(P[i], radius)
        dist0 = tree.query(P[i])[0]
        if dist0 > max_gap or len(near) < n + 1:
            raise GeometryError(
                f"facet {i} at {P[i]} has no interior cells nearby (nearest at {dist0:.3g})"
            )
        near = np.asarray(sorted(near))
        A = np.hstack([np.ones((near.size, 1)), (domain.points[near] - P[i]) / h])
        if np.linalg.matrix_rank(A) < n + 1:
            raise GeometryError(f"facet {i}: degenerate interpolation stencil")
        w = np.linalg.pinv(A)[0]
        rows.extend([i] * near.size)
        cols.extend(near)
        vals.extend(w)
    T = sp.csr_matrix((vals, (rows, cols)), shape=(P.shape[0], domain.n_cells))
    domain._ops[key] = (mesh, T)
    return T


def domain_tree(domain):
    if "tree" not in domain._ops:
        domain._ops["tree"] = cKDTree(domain.points)
    return domain._ops["tree"]


def trace_restrict(f, mesh, radius=None, max_gap=None):
    T = trace_matrix(f.domain, mesh, radius, max_gap)
    return BoundaryField(mesh, T @ f.values)


def zero_trace_error(f, mesh):
    """Largest Clifford norm of the trace; small for W_0-class fields."""
    g = trace_restrict(f, mesh)
    return float(np.max(np.linalg.norm(g.values, axis=1)))


def clifford_mul_fields(a, b):
    return a._wrap(mul_arrays(a.values, b.values, a.dim))


def conj_field(a):
    return a._wrap(conj_arrays(a.values, a.dim))
