"""Dense arithmetic in the Clifford algebra Cl_n with e_j^2 = -1.

Basis blades are addressed by bitmasks: bit ``j-1`` set means ``e_j`` takes
part in the blade, ``0`` is the identity ``e_0``. A multivector stores its
``2**n`` coefficients in ascending bitmask order.

The module exposes scalar-style helpers (:func:`mv_mul`, :func:`conjugate`,
...) on :class:`Multivector` values and array-level helpers
(:func:`mul_arrays`, :func:`left_mul_vector`) that broadcast over a leading
batch axis; the field code only uses the latter.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DIM = 5


class CliffordError(ValueError):
    """Invalid dimension or argument for a Clifford operation."""


def _check_dim(n):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_DIM:
        raise CliffordError(f"dimension must be an integer in [1, {MAX_DIM}], got {n!r}")
    return int(n)


def grade(bits):
    return bin(int(bits)).count("1")


def blade_product(a, b, dim=MAX_DIM):
    """Return ``(sign, blade)`` with ``e_a * e_b == sign * e_blade``.

    The sign is the parity of the transpositions needed to sort the
    concatenated index list, times ``-1`` for every index present in both
    blades (``e_j e_j = -1``).
    """
    a, b = int(a), int(b)
    if a >> dim or b >> dim or a < 0 or b < 0:
        raise CliffordError(f"blade bitmask out of range for Cl_{dim}")
    swaps = 0
    rest = a >> 1
    while rest:
        swaps += grade(rest & b)
        rest >>= 1
    swaps += grade(a & b)
    return (-1 if swaps & 1 else 1), a ^ b


@lru_cache(maxsize=None)
def product_table(n):
    """Signs and result blades for all blade pairs of Cl_n, shape ``(2**n, 2**n)``."""
    n = _check_dim(n)
    size = 1 << n
    signs = np.empty((size, size), dtype=np.int8)
    blades = np.empty((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(size):
            signs[a, b], blades[a, b] = blade_product(a, b, n)
    signs.setflags(write=False)
    blades.setflags(write=False)
    return signs, blades


@lru_cache(maxsize=None)
def mul_tensor(n):
    """Structure constants ``M[a, b, c]`` with ``(xy)_c = sum x_a y_b M[a, b, c]``."""
    signs, blades = product_table(n)
    size = 1 << n
    m = np.zeros((size, size, size))
    a, b = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    m[a, b, blades] = signs
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def conjugation_signs(n):
    """Per-blade factor ``(-1)**(r(r+1)/2)`` of Clifford conjugation."""
    size = 1 << _check_dim(n)
    r = np.array([grade(a) for a in range(size)])
    s = np.where((r * (r + 1) // 2) % 2, -1.0, 1.0)
    s.setflags(write=False)
    return s


@lru_cache(maxsize=None)
def vector_left_perm(n):
    """Left multiplication by ``e_j`` as a signed permutation.

    Returns ``(perm, sign)`` of shape ``(n, 2**n)`` such that
    ``(e_j x)[perm[j, b]] = sign[j, b] * x[b]``.
    """
    signs, blades = product_table(n)
    perm = np.empty((n, 1 << n), dtype=np.int64)
    sign = np.empty((n, 1 << n))
    for j in range(n):
        perm[j] = blades[1 << j]
        sign[j] = signs[1 << j]
    return perm, sign


def mul_arrays(a, b, n):
    """Clifford product of coefficient arrays broadcasting over leading axes."""
    return np.einsum("...a,...b,abc->...c", a, b, mul_tensor(n), optimize=True)


def left_mul_vector(v, x, n):
    """Product ``v x`` where ``v`` holds vector components ``(..., n)``.

    Cheaper than :func:`mul_arrays` because ``v`` only lives on grade one.
    """
    perm, sign = vector_left_perm(n)
    out = np.zeros(np.broadcast_shapes(v.shape[:-1], x.shape[:-1]) + (1 << n,))
    for j in range(n):
        out[..., perm[j]] += v[..., j, None] * (sign[j] * x)
    return out


def conj_arrays(a, n):
    return a * conjugation_signs(n)


@dataclass(frozen=True, eq=False)
class Multivector:
    """An element of Cl_n given by its ``2**n`` blade coefficients."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        n = _check_dim(self.dim)
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size != 1 << n:
            raise CliffordError(f"Cl_{n} needs {1 << n} coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise CliffordError("multivector coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n):
        return cls(n, np.zeros(1 << n))

    @classmethod
    def scalar(cls, value, n):
        c = np.zeros(1 << n)
        c[0] = value
        return cls(n, c)

    @classmethod
    def blade(cls, bits, n, value=1.0):
        c = np.zeros(1 << n)
        c[bits] = value
        return cls(n, c)

    @classmethod
    def basis(cls, j, n):
        """The generator ``e_j`` (1-based)."""
        if not 1 <= j <= n:
            raise CliffordError(f"e_{j} does not exist in Cl_{n}")
        return cls.blade(1 << (j - 1), n)

    def __getitem__(self, bits):
        return self.coeffs[bits]

    def __add__(self, other):
        if isinstance(other, Multivector):
            _same_dim(self, other)
            return Multivector(self.dim, self.coeffs + other.coeffs)
        return self + Multivector.scalar(other, self.dim)

    __radd__ = __add__

    def __neg__(self):
        return Multivector(self.dim, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return mv_mul(self, other)
        return Multivector(self.dim, self.coeffs * float(other))

    def __rmul__(self, other):
        return Multivector(self.dim, self.coeffs * float(other))

    def __truediv__(self, other):
        return Multivector(self.dim, self.coeffs / float(other))

    def __eq__(self, other):
        return (
            isinstance(other, Multivector)
            and self.dim == other.dim
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __hash__(self):
        return hash((self.dim, self.coeffs.tobytes()))

    def allclose(self, other, atol=1e-12):
        return self.dim == other.dim and np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol)

    def __repr__(self):
        terms = [
            f"{c:+g}{'' if a == 0 else '*e' + ''.join(str(j + 1) for j in range(self.dim) if a >> j & 1)}"
            for a, c in enumerate(self.coeffs)
            if c != 0
        ]
        return f"Multivector({' '.join(terms) or '0'}; n={self.dim})"


def _same_dim(a, b):
    if a.dim != b.dim:
        raise CliffordError(f"dimension mismatch: Cl_{a.dim} vs Cl_{b.dim}")


def mv_mul(a, b):
    _same_dim(a, b)
    return Multivector(a.dim, mul_arrays(a.coeffs, b.coeffs, a.dim))


def conjugate(a):
    """Clifford conjugation: ``e_j -> -e_j`` extended as an anti-automorphism."""
    return Multivector(a.dim, conj_arrays(a.coeffs, a.dim))


def clifford_norm(a):
    return float(np.sqrt(np.dot(a.coeffs, a.coeffs)))


def real_part(a):
    return float(a.coeffs[0])


def embed(x, n=None):
    """Place the components of ``x`` on the grade-one blades of Cl_n."""
    x = np.asarray(x, dtype=float).reshape(-1)
    n = x.size if n is None else n
    if x.size != n:
        raise CliffordError(f"vector of length {x.size} does not embed in Cl_{n}")
    c = np.zeros(1 << _check_dim(n))
    c[[1 << j for j in range(n)]] = x
    return Multivector(n, c)


def vector_part(a):
    """Grade-one coefficients of ``a`` as a plain array."""
    return a.coeffs[[1 << j for j in range(a.dim)]].copy()


def kelvin_inverse(x):
    """Inverse ``conj(x) / |x|^2`` of a nonzero vector."""
    v = embed(x)
    r2 = float(np.dot(v.coeffs, v.coeffs))
    if r2 == 0.0:
        raise CliffordError("the zero vector has no inverse")
    return conjugate(v) / r2
