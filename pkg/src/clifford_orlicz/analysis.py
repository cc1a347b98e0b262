"""Orlicz-Bergman decomposition, the first-order Dirac boundary value
problem, and empirical probes of operator norms.

The decomposition of ``f`` into a monogenic part ``g`` and a potential part
``eta = Dbar w`` solves ``Laplace w = D f`` with zero Dirichlet data; then
``D eta = D Dbar w = Laplace w = D f`` so that ``D g = 0`` up to
discretisation. (Setting ``eta`` to ``w`` itself would not make ``g``
monogenic.)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .fields import BandLimitedField
from .grid import (
    BoundaryField,
    MultivectorField,
    dalpha_matrix,
    dirac_apply,
    dirac_bar_apply,
    multi_indices,
    trace_restrict,
    zero_trace_error,
)
from .orlicz import (
    NormConfig,
    clifford_luxembourg_norm,
    conjugate_psi,
    eval_psi,
    slobodeckji_terms,
    sobolev_norm,
)
from .transforms import (
    KernelConfig,
    cauchy_values,
    rel_l2,
    teodorescu,
    teodorescu_values,
)


class SolverError(RuntimeError):
    """The Dirichlet Laplacian solve did not converge."""

    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


@dataclass(frozen=True)
class LinearSolverConfig:
    rel_tol: float = 1e-10
    max_iter: int = 20000

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


def solve_dirichlet(domain, rhs, solver=None):
    """Solve ``Laplace w = rhs`` with ``w = 0`` on the boundary, column by column.

    Conjugate gradients on the SPD matrix ``-Laplace`` (ghost-cell
    Dirichlet treatment, see :meth:`GridDomain.second_diff_matrix`).
    """
    solver = solver or LinearSolverConfig()
    A = -domain.laplacian_matrix(dirichlet=True)
    out = np.zeros_like(rhs)
    for c in range(rhs.shape[1]):
        b = -rhs[:, c]
        if not np.any(b):
            continue
        trace = []
        bn = np.linalg.norm(b)
        x, info = spla.cg(
            A,
            b,
            rtol=solver.rel_tol,
            atol=0.0,
            maxiter=solver.max_iter,
            callback=lambda xk: trace.append(float(np.linalg.norm(b - A @ xk) / bn)),
        )
        if info != 0:
            raise SolverError(
                f"CG did not converge for component {c} after {len(trace)} iterations "
                f"(relative residual {trace[-1] if trace else float('nan'):.3g})",
                trace,
            )
        out[:, c] = x
    return out


# ---------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    monogenic_part: MultivectorField
    potential_part: MultivectorField
    generator: MultivectorField
    diagnostics: dict = field(default_factory=dict)


def bergman_decompose(f, mesh, psi=None, solver=None, kernel=None, k=None, norm_cfg=None):
    """Split ``f = g + eta`` with ``D g ~ 0`` and ``eta = Dbar w``, ``w`` zero on the boundary.

    ``monogenicity_residual`` is ``||D g|| / ||f||`` in L2 over the cells at
    least ``kernel.kappa * h`` from the boundary.
    """
    kernel = kernel or KernelConfig()
    if k is not None and psi is None:
        raise ValueError("Sobolev diagnostics need a Young function psi")
    dom = f.domain
    w = MultivectorField(dom, solve_dirichlet(dom, dirac_apply(f).values, solver))
    eta = dirac_bar_apply(w, dirichlet=True)
    g = f - eta
    core = dom.subdomain(dom.core_selector(kernel.kappa))
    Dg = dirac_apply(g)
    diag = {
        "monogenicity_residual": rel_l2(Dg.restrict(core), f.restrict(core)),
        "trace_residual": zero_trace_error(w, mesh),
        "reconstruction_error": rel_l2(f - g - eta, f),
    }
    if psi is not None:
        diag["norm_f"] = clifford_luxembourg_norm(f, psi, norm_cfg)
        diag["norm_monogenic"] = clifford_luxembourg_norm(g, psi, norm_cfg)
        diag["norm_potential"] = clifford_luxembourg_norm(eta, psi, norm_cfg)
    if k is not None:
        diag["sobolev_order"] = k
        diag["dirac_monogenic_sobolev"] = sobolev_norm(Dg.restrict(core), k - 1, psi, norm_cfg)
        diag["sobolev_f"] = sobolev_norm(f, k, psi, norm_cfg)
        diag["sobolev_monogenic"] = sobolev_norm(g, k, psi, norm_cfg)
        diag["sobolev_potential"] = sobolev_norm(eta, k, psi, norm_cfg)
    return DecompositionResult(g, eta, w, diag)


def bergman_decompose_sobolev(f, k, mesh, psi, solver=None, kernel=None, norm_cfg=None):
    if k not in (1, 2):
        raise NotImplementedError("Sobolev decomposition is implemented for k in {1, 2}")
    return bergman_decompose(f, mesh, psi, solver, kernel, k=k, norm_cfg=norm_cfg)


def routed_fraction(result, part, psi, cfg=None):
    """Share of ``||g|| + ||eta||`` (Luxembourg) carried by ``part``."""
    ng = clifford_luxembourg_norm(result.monogenic_part, psi, cfg)
    ne = clifford_luxembourg_norm(result.potential_part, psi, cfg)
    total = ng + ne
    if total == 0:
        return 1.0
    return (ng if part == "monogenic" else ne) / total


# ---------------------------------------------------------------------------
# boundary value problem


@dataclass(frozen=True, eq=False)
class BvpReport:
    solution: MultivectorField
    interior_residual: float
    trace_residual: float
    boundary_term: float
    interior_term: float
    solution_norm: float
    measured_ratio: float
    policy: dict

    def to_dict(self):
        return {
            "interior_residual": self.interior_residual,
            "trace_residual": self.trace_residual,
            "norm_estimate": {
                "boundary_term": self.boundary_term,
                "interior_term": self.interior_term,
                "solution_sobolev_norm": self.solution_norm,
                "measured_ratio": self.measured_ratio,
            },
            "policy": self.policy,
            "solution_cells": self.solution.domain.n_cells,
        }


def _rel_or_abs(err_norm, ref_norm):
    return err_norm / ref_norm if ref_norm > 0 else err_norm


def solve_first_order_bvp(f, g, psi, k=1, kernel=None, norm_cfg=None):
    """``u = F g + T f`` on the cells at least ``kappa h`` inside the domain.

    The report carries ``||D u - f|| / ||f||`` on those cells, the relative
    boundary mismatch of the extrapolated trace of ``u``, and the two data
    terms of the norm estimate with the measured ratio
    ``||u||_{W^{k,psi}} / (boundary_term + interior_term)``.
    """
    kernel = kernel or KernelConfig()
    norm_cfg = norm_cfg or NormConfig()
    if k not in (1, 2):
        raise NotImplementedError("BVP norm estimates are implemented for k in {1, 2}")
    dom, mesh = f.domain, g.mesh
    core = dom.subdomain(dom.core_selector(kernel.kappa))
    u = MultivectorField(
        core,
        cauchy_values(mesh, g.values, core.points, kernel) + teodorescu_values(dom, f.values, core.points),
    )
    fc = f.restrict(core)
    interior = _rel_or_abs((dirac_apply(u) - fc).l2_norm(), fc.l2_norm())
    tu = trace_restrict(
        u, mesh, radius=(kernel.kappa + 2.5) * dom.h, max_gap=(kernel.kappa + 1.5) * dom.h
    )
    trace_res = _rel_or_abs((tu - g).l2_norm(), g.l2_norm())
    single, double = slobodeckji_terms(g, k, psi, norm_cfg)
    boundary_term = single + double
    interior_term = 0.0
    for alpha in multi_indices(dom.dim, k - 1):
        d = dalpha_matrix(dom, alpha) @ f.values
        interior_term += float(dom.weights @ eval_psi(psi, np.linalg.norm(d, axis=1) / norm_cfg.lam))
    u_norm = sobolev_norm(u, k, psi, norm_cfg)
    denom = boundary_term + interior_term
    ratio = u_norm / denom if denom > 0 else (0.0 if u_norm == 0 else float("inf"))
    policy = {
        "collar_kappa": kernel.kappa,
        "collar_width": kernel.kappa * dom.h,
        "evaluation": "cells with distance >= kappa*h from the boundary",
        "singular_cell_policy": kernel.singular_cell_policy,
        "lambda": norm_cfg.lam,
        "k": k,
    }
    return BvpReport(u, interior, trace_res, boundary_term, interior_term, u_norm, ratio, policy)


# ---------------------------------------------------------------------------
# dual norm


def _trial_field(domain, seed, index):
    bump = np.maximum(domain.distance(domain.points), 0.0) ** 2
    vals = BandLimitedField(domain.dim, seed, index)(domain.points) * bump[:, None]
    return MultivectorField(domain, vals)


def dual_norm_lower_bound(f, psi, trial_count, seed=0, cfg=None, return_ratios=False):
    """Sampled lower bound of ``sup_g |<f, D g>| / ||g||_{W_0^{1, psi*}}``.

    Trial fields are seeded band-limited fields times the squared distance
    to the boundary, so they vanish there. Trial ``i`` depends only on
    ``(seed, i)``: a larger ``trial_count`` extends the same sample set.
    """
    if trial_count < 1:
        raise ValueError("trial_count must be >= 1")
    dom = f.domain
    psi_star = conjugate_psi(psi)
    ratios = []
    for i in range(trial_count):
        tg = _trial_field(dom, seed, i)
        pairing = float(dom.weights @ np.sum(f.values * dirac_apply(tg).values, axis=1))
        norm = sobolev_norm(tg, 1, psi_star, cfg)
        ratios.append(abs(pairing) / norm if norm > 0 else 0.0)
    bound = max(ratios)
    return (bound, ratios) if return_ratios else bound


# ---------------------------------------------------------------------------
# mapping probes

OPERATORS = ("dirac", "teodorescu", "cauchy_trace_composition")


@dataclass(frozen=True)
class ProbeReport:
    operator: str
    k: int
    max_ratio: float
    ratios: tuple
    h: float

    def to_dict(self):
        return {
            "operator": self.operator,
            "k": self.k,
            "h": self.h,
            "max_ratio": self.max_ratio,
            "ratios": list(self.ratios),
        }


def mapping_probe(operator, domain, mesh, suite_size, k, psi, seed=0, kernel=None, norm_cfg=None):
    """Largest ``target norm / source norm`` over a seeded random suite.

    dirac:                      ``||D f||_{k-1} / ||f||_k``
    teodorescu:                 ``||T f||_{k+1} / ||f||_k``
    cauchy_trace_composition:   ``||F trace f||_k / ||f||_k`` (target on the collar-excluded cells)

    Zero source fields are skipped.
    """
    if operator not in OPERATORS:
        raise ValueError(f"unknown operator {operator!r}")
    kernel = kernel or KernelConfig()
    size = 1 << domain.dim
    fs = [
        MultivectorField(domain, BandLimitedField(domain.dim, seed, i)(domain.points))
        for i in range(suite_size)
    ]
    stack = np.stack([f.values for f in fs], axis=1)
    if operator == "dirac":
        if k < 1:
            raise ValueError("the dirac probe needs k >= 1")
        targets = [dirac_apply(f) for f in fs]
        korder = k - 1
    elif operator == "teodorescu":
        if k + 1 > 2:
            raise ValueError("the teodorescu probe needs k <= 1")
        tv = teodorescu_values(domain, stack)
        targets = [MultivectorField(domain, tv[:, i, :]) for i in range(suite_size)]
        korder = k + 1
    else:
        core = domain.subdomain(domain.core_selector(kernel.kappa))
        T = np.stack([trace_restrict(f, mesh).values for f in fs], axis=1)
        cv = cauchy_values(mesh, T.reshape(mesh.n_facets, -1, size), core.points, kernel)
        targets = [MultivectorField(core, cv[:, i, :]) for i in range(suite_size)]
        korder = k
    ratios = []
    for f, t in zip(fs, targets):
        src = sobolev_norm(f, k, psi, norm_cfg)
        if src == 0:
            continue
        ratios.append(sobolev_norm(t, korder, psi, norm_cfg) / src)
    return ProbeReport(operator, k, float(max(ratios)) if ratios else 0.0, tuple(ratios), domain.h)


def boundary_trace_of(mesh, fn):
    return BoundaryField(mesh, fn(mesh.centers))


def right_inverse_error(f, kernel=None, core_only=True):
    """``||D T f - f|| / ||f||``, by default on the collar-excluded cells."""
    kernel = kernel or KernelConfig()
    dom = f.domain
    DTf = dirac_apply(teodorescu(f))
    if not core_only:
        return rel_l2(DTf - f, f)
    core = dom.subdomain(dom.core_selector(kernel.kappa))
    return rel_l2((DTf - f).restrict(core), f.restrict(core))
