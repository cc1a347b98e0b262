"""Young (Orlicz) functions and the norms built on them.

All integrals are quadratures with explicit weights: cell weights of a
:class:`~clifford_orlicz.grid.GridDomain` inside the domain, facet weights
of a :class:`~clifford_orlicz.grid.BoundaryMesh` on the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GeometryError, dalpha_matrix, multi_indices
from .kernels import difference_quotient_sum


class ConvergenceError(RuntimeError):
    """Luxembourg bisection did not reach the tolerance."""

    def __init__(self, msg, bracket):
        super().__init__(f"{msg}; last bracket {bracket}")
        self.bracket = bracket


# ---------------------------------------------------------------------------
# Orlicz functions

_KINDS = ("power", "power_over_p", "exp_minus_one", "conjugate")


@dataclass(frozen=True)
class OrliczFunction:
    """A Young function ``psi`` on ``[0, inf)``.

    kinds
        ``power``          ``t**p``
        ``power_over_p``   ``t**p / p``
        ``exp_minus_one``  ``exp(t) - 1``
        ``conjugate``      ``sup_{t>=0} (s t - base(t))`` evaluated numerically
    """

    kind: str
    p: float | None = None
    base: OrliczFunction | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown Orlicz function kind {self.kind!r}")
        if self.kind in ("power", "power_over_p") and not (self.p is not None and self.p > 1):
            raise ValueError("power Young functions need p > 1")
        if self.kind == "conjugate" and self.base is None:
            raise ValueError("a numeric conjugate needs its base function")

    def __call__(self, t):
        return eval_psi(self, t)

    def describe(self):
        if self.kind == "conjugate":
            return {"kind": "conjugate", "base": self.base.describe()}
        if self.p is None:
            return {"kind": self.kind}
        return {"kind": self.kind, "p": self.p}

    @classmethod
    def from_spec(cls, spec):
        """Build from ``{"kind": ..., "p": ...}`` or a string like ``"power:2"``."""
        if isinstance(spec, str):
            kind, _, p = spec.partition(":")
            return cls(kind, float(p) if p else None)
        if spec["kind"] == "conjugate":
            return cls("conjugate", base=cls.from_spec(spec["base"]))
        return cls(spec["kind"], spec.get("p"))


def Power(p):
    return OrliczFunction("power", float(p))


def PowerOverP(p):
    return OrliczFunction("power_over_p", float(p))


def ExpMinusOne():
    return OrliczFunction("exp_minus_one")


def eval_psi(psi, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("Orlicz functions are evaluated at t >= 0 only")
    if psi.kind == "power":
        out = t_arr**psi.p
    elif psi.kind == "power_over_p":
        out = t_arr**psi.p / psi.p
    elif psi.kind == "exp_minus_one":
        with np.errstate(over="ignore"):
            out = np.expm1(t_arr)
    else:
        out = _numeric_conjugate(psi.base, t_arr).reshape(t_arr.shape)
    return float(out) if np.ndim(t) == 0 else out


_INV_PHI = (math.sqrt(5) - 1) / 2


def _numeric_conjugate(base, s, iters=120):
    """``sup_{t>=0} (s t - base(t))`` by golden-section search, vectorised in ``s``.

    The bracket ``[0, T]`` is doubled until the secant slope of ``base`` on
    ``[T/2, T]`` exceeds ``s``; by convexity the maximiser then lies in it.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    hi = np.ones_like(s)
    for _ in range(200):
        slope = (eval_psi(base, hi) - eval_psi(base, hi / 2)) / (hi / 2)
        grow = slope < s
        if not grow.any():
            break
        hi = np.where(grow, 2 * hi, hi)
    lo = np.zeros_like(s)
    a = hi - _INV_PHI * (hi - lo)
    b = lo + _INV_PHI * (hi - lo)
    fa = s * a - eval_psi(base, a)
    fb = s * b - eval_psi(base, b)
    for _ in range(iters):
        left = fa > fb
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
        a_new = hi - _INV_PHI * (hi - lo)
        b_new = lo + _INV_PHI * (hi - lo)
        fa_new = s * a_new - eval_psi(base, a_new)
        fb_new = s * b_new - eval_psi(base, b_new)
        a, b, fa, fb = a_new, b_new, fa_new, fb_new
    t = 0.5 * (lo + hi)
    return np.maximum(s * t - eval_psi(base, t), 0.0)


def conjugate_psi(psi):
    """Legendre-Fenchel conjugate; closed form where one is known."""
    if psi.kind == "power_over_p":
        return PowerOverP(psi.p / (psi.p - 1))
    if psi.kind == "conjugate":
        return psi.base
    return OrliczFunction("conjugate", base=psi)


def check_young_axioms(psi, t_max=50.0, samples=400):
    """Sampled check of ``psi(0) = 0``, monotonicity and midpoint convexity."""
    t = np.concatenate([[0.0], np.geomspace(1e-4, t_max, samples)])
    v = eval_psi(psi, t)
    mid = eval_psi(psi, 0.5 * (t[1:] + t[:-1]))
    return bool(
        v[0] == 0.0
        and np.all(np.diff(v) >= -1e-12 * np.abs(v[1:]))
        and np.all(mid <= 0.5 * (v[1:] + v[:-1]) * (1 + 1e-12) + 1e-15)
    )


# ---------------------------------------------------------------------------
# scalar norms


@dataclass(frozen=True)
class NormConfig:
    bisect_tol: float = 1e-10
    max_iter: int = 200
    lam: float = 1.0

    def __post_init__(self):
        if self.bisect_tol <= 0 or self.lam <= 0 or self.max_iter < 1:
            raise ValueError("bisect_tol, lam and max_iter must be positive")


def modular_integral(f, weights, psi, beta):
    """``sum_i w_i psi(|f_i| / beta)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    f = np.abs(np.asarray(f, dtype=float))
    w = np.asarray(weights, dtype=float)
    if f.shape != w.shape:
        raise ValueError("samples and weights differ in length")
    with np.errstate(over="ignore"):
        return float(w @ eval_psi(psi, f / beta))


def luxembourg_norm(f, weights, psi, cfg=None):
    """``inf{beta > 0 : modular(f, beta) <= 1}`` by bracketing and bisection.

    The upper end of the final bracket is returned, so the modular there is
    at most one. The zero field has norm zero.
    """
    cfg = cfg or NormConfig()
    a = np.abs(np.asarray(f, dtype=float))
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("samples must be finite")
    if a.size == 0 or a.max() == 0.0:
        return 0.0

    def excess(beta):
        return modular_integral(a, w, psi, beta) > 1.0

    it = 0
    hi = float(a.max())
    if excess(hi):
        while excess(hi):
            hi *= 2.0
            it += 1
            if it >= cfg.max_iter:
                raise ConvergenceError("could not bracket the norm", (hi / 2, hi))
        lo = hi / 2.0
    else:
        lo = hi / 2.0
        while not excess(lo):
            lo /= 2.0
            it += 1
            if it >= cfg.max_iter:
                raise ConvergenceError("could not bracket the norm", (lo, 2 * lo))
        hi = 2.0 * lo
    floor = 1.0 - 10 * cfg.bisect_tol
    while hi - lo > cfg.bisect_tol * hi or modular_integral(a, w, psi, hi) < floor:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid):
            lo = mid
        else:
            hi = mid
        it += 1
        if it >= cfg.max_iter:
            raise ConvergenceError("bisection did not converge", (lo, hi))
    return hi


def component_norms(values, weights, psi, cfg=None):
    """Luxembourg norm of every blade component column of ``values``."""
    return np.array([luxembourg_norm(values[:, A], weights, psi, cfg) for A in range(values.shape[1])])


def clifford_luxembourg_norm(f, psi, cfg=None):
    """Sum over blades of the Luxembourg norms of the component fields."""
    return float(np.sum(component_norms(f.values, f.domain.weights, psi, cfg)))


def sobolev_norm(f, k, psi, cfg=None):
    """``sum_A sum_{|alpha| <= k} || D^alpha f_A ||_psi`` (blades outer, alphas inner)."""
    if k not in (0, 1, 2):
        raise NotImplementedError("Orlicz-Sobolev norms are implemented for k <= 2")
    dom = f.domain
    alphas = [a for order in range(k + 1) for a in multi_indices(dom.dim, order)]
    derivs = [dalpha_matrix(dom, a) @ f.values for a in alphas]
    total = 0.0
    for A in range(f.values.shape[1]):
        for d in derivs:
            total += luxembourg_norm(d[:, A], dom.weights, psi, cfg)
    return total


# ---------------------------------------------------------------------------
# boundary norm


def boundary_derivatives(g, order):
    """Tangential derivatives of order ``order`` (0 or 1) of a boundary field."""
    if order == 0:
        return [g.values]
    if order == 1:
        return [T @ g.values for T in g.mesh.tangential_gradient_matrices()]
    raise NotImplementedError("boundary derivatives beyond first order are not supported")


def slobodeckji_terms(g, k, psi, cfg=None):
    """The single and double integral parts of the boundary norm.

    single: ``sum_{|alpha| <= k-1} int psi(|D^alpha g| / lam)``
    double: ``sum_{|alpha| = k-1} iint psi(|D^alpha g(x) - D^alpha g(y)| / (lam |x-y|)) |x-y|^(2-n)``
    with the diagonal ``x = y`` left out.
    """
    cfg = cfg or NormConfig()
    if k not in (1, 2):
        raise NotImplementedError("boundary norms are implemented for k in {1, 2}")
    mesh = g.mesh
    mesh.check_separated()
    w = mesh.weights
    single = 0.0
    for order in range(k):
        for d in boundary_derivatives(g, order):
            single += float(w @ eval_psi(psi, np.linalg.norm(d, axis=1) / cfg.lam))
    double = 0.0
    for d in boundary_derivatives(g, k - 1):
        part = difference_quotient_sum(mesh.centers, d, w, cfg.lam, psi)
        if part < 0:
            raise GeometryError("boundary mesh has coincident facet centers")
        double += part
    return single, double


def slobodeckji_norm(g, k, psi, cfg=None):
    single, double = slobodeckji_terms(g, k, psi, cfg)
    return single + double
