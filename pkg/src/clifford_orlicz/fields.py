"""Named test fields and seeded random band-limited fields.

Every field here is a function of the sample points alone, so the same
field can be sampled on grids of different spacing.
"""
import numpy as np

from .clifford import left_mul_vector
from .transforms import fundamental_solution_arrays

# pole of the monogenic test field; outside the unit disc / ball
PHI_POLE = 2.0


def _zeros(P):
    return np.zeros((P.shape[0], 1 << P.shape[1]))


def monogenic_phi(P):
    """``Phi(x - x0)`` with ``x0 = 2 e_1``: monogenic inside the unit ball."""
    x0 = np.zeros(P.shape[1])
    x0[0] = PHI_POLE
    return fundamental_solution_arrays(P - x0)


def poly_x1(P):
    v = _zeros(P)
    v[:, 0] = P[:, 0]
    return v


def zero_trace_bump(P):
    """``(1 - |x|^2) e_0``; vanishes on the unit sphere."""
    v = _zeros(P)
    v[:, 0] = 1.0 - np.sum(P**2, axis=1)
    return v


def dbar_potential_generator(P):
    """``w = (1 - |x|^2)^2 e_0``: zero trace and zero normal derivative on the unit sphere."""
    v = _zeros(P)
    v[:, 0] = (1.0 - np.sum(P**2, axis=1)) ** 2
    return v


def dbar_potential(P):
    """``Dbar w`` for :func:`dbar_potential_generator`, i.e. ``4 (1 - |x|^2) x``."""
    return left_mul_vector(4.0 * (1.0 - np.sum(P**2, axis=1))[:, None] * P, _unit(P), P.shape[1])


def _unit(P):
    v = _zeros(P)
    v[:, 0] = 1.0
    return v


def monogenic_linear(P):
    """``x_1 - x_2 e_12`` (``n = 2``) or its analogue on the first two axes."""
    v = _zeros(P)
    v[:, 0] = P[:, 0]
    v[:, 0b11] = -P[:, 1]
    return v


def bvp_manufactured(P):
    """Monogenic part plus a zero-trace part; used for BVP recovery tests."""
    return monogenic_linear(P) + zero_trace_bump(P)


def bvp_manufactured_dirac(P):
    """Exact ``D`` of :func:`bvp_manufactured`: ``D(1 - |x|^2) = -2 x``."""
    return left_mul_vector(-2.0 * P, _unit(P), P.shape[1])


BUILTIN = {
    "monogenic-phi": monogenic_phi,
    "dbar-potential": dbar_potential,
    "poly-x1": poly_x1,
    "zero-trace-bump": zero_trace_bump,
}


def builtin_field(name):
    try:
        return BUILTIN[name]
    except KeyError:
        raise KeyError(f"unknown builtin field {name!r}; choose from {sorted(BUILTIN)}") from None


class BandLimitedField:
    """Random trigonometric polynomial with Clifford coefficients.

    ``f(x) = sum_k a_k cos(pi k.x / L) + b_k sin(pi k.x / L)`` over integer
    wave vectors ``|k_j| <= bandwidth``, coefficients decaying like
    ``1 / (1 + |k|^2)``. Fully determined by ``(dim, seed, index)``.
    """

    def __init__(self, dim, seed, index=0, bandwidth=2, length=1.0):
        rng = np.random.default_rng([seed, index])
        grid = np.arange(-bandwidth, bandwidth + 1)
        k = np.stack(np.meshgrid(*[grid] * dim, indexing="ij"), axis=-1).reshape(-1, dim)
        decay = 1.0 / (1.0 + np.sum(k**2, axis=1))
        size = 1 << dim
        self.dim = dim
        self.k = k * (np.pi / length)
        self.a = rng.standard_normal((k.shape[0], size)) * decay[:, None]
        self.b = rng.standard_normal((k.shape[0], size)) * decay[:, None]

    def __call__(self, P):
        phase = P @ self.k.T
        return np.cos(phase) @ self.a + np.sin(phase) @ self.b


def random_suite(dim, seed, count, bandwidth=2):
    return [BandLimitedField(dim, seed, i, bandwidth) for i in range(count)]
