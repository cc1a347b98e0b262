"""Fundamental solution of the Dirac operator and the two integral transforms
built from it.

Conventions (``e_j^2 = -1``, ``D = sum e_j d_j``):

* ``Phi(x) = conj(x) / (omega_n |x|^n)`` satisfies ``D Phi = Phi D = delta``.
* Teodorescu transform ``T f(x) = int_Omega Phi(x - y) f(y) dy``; then
  ``D T f = f``.
* Cauchy (Feuter) transform ``F g(x) = int_dOmega Phi(y - x) nu(y) g(y) dS``.
* Borel-Pompeiu: ``f = F(trace f) + T(D f)`` inside Omega.

Some texts write the Teodorescu transform as either ``zeta`` or ``xi``;
here it is always :func:`teodorescu`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clifford import CliffordError, Multivector, conjugate, embed, left_mul_vector, vector_left_perm
from .grid import (
    BoundaryField,
    MultivectorField,
    dirac_apply,
    trace_restrict,
)
from .kernels import vector_kernel_sum


class NearBoundaryError(ValueError):
    """Cauchy transform requested too close to the boundary."""


@dataclass(frozen=True)
class KernelConfig:
    """Discretisation policy for the transforms.

    ``kappa``: Cauchy evaluation points must keep ``|dist| >= kappa * h`` from
    the boundary. The volume quadrature always drops the cell that contains
    the evaluation point (``singular_cell_policy = "exclude"``).
    """

    kappa: float = 1.5
    singular_cell_policy: str = "exclude"

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.singular_cell_policy != "exclude":
            raise ValueError("only the 'exclude' singular-cell policy is implemented")


def omega_n(n):
    """Surface area of the unit sphere in R^n."""
    if n < 2:
        raise ValueError("omega_n needs n >= 2")
    if n % 2 == 0:
        gamma_half = math.factorial(n // 2 - 1)
    else:
        # Gamma(m + 1/2) = (2m)! sqrt(pi) / (4^m m!)
        m = (n - 1) // 2
        gamma_half = math.factorial(2 * m) * math.sqrt(math.pi) / (4**m * math.factorial(m))
    return 2 * math.pi ** (n / 2) / gamma_half


def fundamental_solution(x):
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise CliffordError("the fundamental solution is singular at 0")
    return conjugate(embed(x)) / (omega_n(x.size) * r**x.size)


def fundamental_solution_arrays(z):
    """``Phi`` at many points ``z`` of shape ``(N, n)``; returns ``(N, 2**n)``."""
    z = np.asarray(z, dtype=float)
    n = z.shape[1]
    r = np.linalg.norm(z, axis=1)
    out = np.zeros((z.shape[0], 1 << n))
    for j in range(n):
        out[:, 1 << j] = -z[:, j] / (omega_n(n) * r**n)
    return out


def _assemble(vk, n, m):
    """Turn ``sum_k e_k * vk[:, k]`` into coefficient arrays; ``m`` stacked fields."""
    perm, sign = vector_left_perm(n)
    P = vk.shape[0]
    size = 1 << n
    vk = vk.reshape(P, n, m, size)
    out = np.zeros((P, m, size))
    for k in range(n):
        out[..., perm[k]] += sign[k] * vk[:, k]
    return out


def teodorescu_values(domain, values, targets=None):
    """Teodorescu transform of stacked coefficient arrays.

    ``values`` has shape ``(N, m, 2**n)`` or ``(N, 2**n)``; the result is
    evaluated at ``targets`` (defaults to the cell centers) with the cell
    containing each target left out of the sum.
    """
    n = domain.dim
    v = np.asarray(values, dtype=float)
    squeeze = v.ndim == 2
    v = v.reshape(domain.n_cells, -1, 1 << n)
    m = v.shape[1]
    targets = domain.points if targets is None else np.asarray(targets, dtype=float)
    # Phi(x - y) = -(x - y) / (omega |x - y|^n) on the vector blades
    vk = vector_kernel_sum(
        targets,
        domain.points,
        v.reshape(domain.n_cells, -1),
        domain.weights,
        -1.0 / omega_n(n),
        exclude_radius=0.5 * domain.h,
    )
    out = _assemble(vk, n, m)
    return out[:, 0, :] if squeeze else out


def teodorescu(f, cfg=None, targets=None):
    """``T f`` as a field (``targets`` may be a subdomain of the same grid)."""
    if targets is None:
        return MultivectorField(f.domain, teodorescu_values(f.domain, f.values))
    return MultivectorField(targets, teodorescu_values(f.domain, f.values, targets.points))


def check_collar(mesh, points, cfg):
    cfg = cfg or KernelConfig()
    d = np.abs(mesh.geometry.distance(np.asarray(points, dtype=float)))
    if mesh.h > 0 and np.any(d < cfg.kappa * mesh.h * (1 - 1e-12)):
        worst = float(d.min())
        raise NearBoundaryError(
            f"evaluation point at distance {worst:.3g} < kappa*h = {cfg.kappa * mesh.h:.3g} from the boundary"
        )


def cauchy_values(mesh, values, points, cfg=None):
    """Cauchy transform of stacked boundary coefficient arrays at ``points``."""
    n = mesh.dim
    points = np.atleast_2d(np.asarray(points, dtype=float))
    check_collar(mesh, points, cfg)
    v = np.asarray(values, dtype=float)
    squeeze = v.ndim == 2
    v = v.reshape(mesh.n_facets, -1, 1 << n)
    m = v.shape[1]
    nu_g = left_mul_vector(mesh.normals[:, None, :], v, n)
    # Phi(y - x) = (x - y) / (omega |x - y|^n)
    vk = vector_kernel_sum(
        points, mesh.centers, nu_g.reshape(mesh.n_facets, -1), mesh.weights, 1.0 / omega_n(n)
    )
    out = _assemble(vk, n, m)
    return out[:, 0, :] if squeeze else out


def cauchy_boundary(g, points, cfg=None):
    """Cauchy transform of ``g`` at ``points``; a list of multivectors.

    ``points`` may also be a :class:`GridDomain`, in which case a field on it
    is returned.
    """
    if hasattr(points, "points") and hasattr(points, "mask"):
        return MultivectorField(points, cauchy_values(g.mesh, g.values, points.points, cfg))
    vals = cauchy_values(g.mesh, g.values, points, cfg)
    return [Multivector(g.mesh.dim, row) for row in vals]


@dataclass(frozen=True, eq=False)
class BorelPompeiuResult:
    residual: MultivectorField
    rel_error: float
    boundary_part: MultivectorField
    volume_part: MultivectorField


def rel_l2(err, ref):
    """``||err|| / ||ref||``; the absolute norm when ``ref`` vanishes."""
    e, r = err.l2_norm(), ref.l2_norm()
    return e / r if r > 0 else e


def borel_pompeiu_residual(f, mesh, cfg=None):
    """Residual of ``f = F(trace f) + T(D f)`` on the collar-excluded cells."""
    cfg = cfg or KernelConfig()
    dom = f.domain
    core = dom.subdomain(dom.core_selector(cfg.kappa))
    bnd = cauchy_boundary(trace_restrict(f, mesh), core, cfg)
    vol = teodorescu(dirac_apply(f), cfg, targets=core)
    fc = f.restrict(core)
    res = fc - bnd - vol
    return BorelPompeiuResult(res, rel_l2(res, fc), bnd, vol)


def boundary_field_of(mesh, fn):
    return BoundaryField(mesh, fn(mesh.centers))
