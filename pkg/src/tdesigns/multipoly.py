"""Sparse real multivariate polynomials and monomial-frame evaluation.

A polynomial is stored as a map from exponent vectors (tuples of
nonnegative ints, one entry per ambient coordinate) to real coefficients.
Terms with coefficient exactly 0 are never stored; the empty polynomial
has degree 0 and evaluates to 0 everywhere.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement

import numpy as np

from .errors import InputError


class MultiPoly:
    """Sparse polynomial in ``ambient_dim`` real variables."""

    __slots__ = ("ambient_dim", "terms")

    def __init__(self, ambient_dim: int, terms=None):
        if ambient_dim < 1:
            raise InputError(f"ambient_dim must be >= 1, got {ambient_dim}")
        self.ambient_dim = int(ambient_dim)
        clean = {}
        for expo, coeff in (terms or {}).items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != ambient_dim:
                raise InputError(
                    f"exponent vector {expo} has length {len(expo)}, "
                    f"expected {ambient_dim}"
                )
            if any(e < 0 for e in expo):
                raise InputError(f"negative exponent in {expo}")
            coeff = float(coeff)
            if coeff != 0.0:
                clean[expo] = clean.get(expo, 0.0) + coeff
                if clean[expo] == 0.0:
                    del clean[expo]
        self.terms = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "MultiPoly":
        return cls(n, {})

    @classmethod
    def constant(cls, n: int, value: float) -> "MultiPoly":
        return cls(n, {(0,) * n: value})

    @classmethod
    def coordinate(cls, n: int, k: int) -> "MultiPoly":
        e = [0] * n
        e[k] = 1
        return cls(n, {tuple(e): 1.0})

    @classmethod
    def from_coefficients(cls, exponents, coeffs, ambient_dim: int) -> "MultiPoly":
        """Build from a coefficient vector over an explicit monomial list."""
        return cls(ambient_dim, dict(zip(map(tuple, exponents), coeffs)))

    # -- basic queries ---------------------------------------------------

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def coefficient_vector(self, exponents) -> np.ndarray:
        """Coefficients aligned with ``exponents`` (absent monomials give 0)."""
        return np.array([self.terms.get(tuple(e), 0.0) for e in exponents])

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return f"MultiPoly({self.ambient_dim}, 0)"
        parts = [f"{c:+g}*x^{list(e)}" for e, c in sorted(self.terms.items())]
        return f"MultiPoly({self.ambient_dim}, {' '.join(parts)})"

    # -- evaluation ------------------------------------------------------

    def __call__(self, x):
        """Evaluate at one point ``(n,)`` or a batch ``(S, n)``.

        Exact sparse term summation: each term is evaluated independently
        and the term values are accumulated with numpy's pairwise sum.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if pts.shape[-1] != self.ambient_dim:
            raise InputError(
                f"point has dimension {pts.shape[-1]}, expected {self.ambient_dim}"
            )
        if not self.terms:
            out = np.zeros(pts.shape[0])
            return float(out[0]) if single else out
        expo = np.array(list(self.terms), dtype=np.int64)
        coeff = np.fromiter(self.terms.values(), dtype=float, count=len(self.terms))
        vals = monomial_matrix(expo, pts) @ coeff
        return float(vals[0]) if single else vals

    # -- calculus --------------------------------------------------------

    def partial(self, k: int) -> "MultiPoly":
        """Partial derivative with respect to coordinate ``k``."""
        out = {}
        for expo, coeff in self.terms.items():
            if expo[k] == 0:
                continue
            e = list(expo)
            e[k] -= 1
            out[tuple(e)] = coeff * expo[k]
        return MultiPoly(self.ambient_dim, out)

    def gradient(self) -> list["MultiPoly"]:
        return [self.partial(k) for k in range(self.ambient_dim)]

    def gradient_at(self, x) -> np.ndarray:
        """Ambient gradient at one point ``(n,)`` or a batch ``(S, n) -> (S, n)``."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        out = np.stack([self.partial(k)(pts) for k in range(self.ambient_dim)], axis=1)
        return out[0] if single else out

    # -- ring operations ---------------------------------------------------

    def _binary(self, other, sign: float) -> "MultiPoly":
        if isinstance(other, (int, float)):
            other = MultiPoly.constant(self.ambient_dim, float(other))
        if other.ambient_dim != self.ambient_dim:
            raise InputError("ambient dimensions differ")
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + sign * c
        return MultiPoly(self.ambient_dim, out)

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return MultiPoly(
                self.ambient_dim, {e: c * float(other) for e, c in self.terms.items()}
            )
        if other.ambient_dim != self.ambient_dim:
            raise InputError("ambient dimensions differ")
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return MultiPoly(self.ambient_dim, out)

    __rmul__ = __mul__
    __radd__ = __add__


def monomials_up_to(n: int, t: int) -> list[tuple[int, ...]]:
    """All exponent vectors with total degree <= t, graded lexicographic.

    Ascending total degree; within a degree, lexicographically descending
    exponent tuples, so x1^d comes first.  Count is C(n+t, n).
    """
    if n < 1 or t < 0:
        raise InputError(f"need n >= 1 and t >= 0, got n={n}, t={t}")
    out = []
    for deg in range(t + 1):
        batch = set()
        for combo in combinations_with_replacement(range(n), deg):
            e = [0] * n
            for c in combo:
                e[c] += 1
            batch.add(tuple(e))
        out.extend(sorted(batch, reverse=True))
    assert len(out) == math.comb(n + t, n)
    return out


def monomial_matrix(exponents, points) -> np.ndarray:
    """Evaluate monomials at points: result[i, j] = prod_k points[i,k]**expo[j,k].

    Uses per-coordinate power tables so the cost is gather + multiply rather
    than repeated pow calls.
    """
    expo = np.asarray(exponents, dtype=np.int64)
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    S, n = pts.shape
    if expo.shape[1] != n:
        raise InputError(f"exponents are for {expo.shape[1]} variables, points have {n}")
    out = np.ones((S, expo.shape[0]))
    for k in range(n):
        ek = expo[:, k]
        top = int(ek.max()) if ek.size else 0
        if top == 0:
            continue
        powers = pts[:, k, None] ** np.arange(top + 1)  # (S, top+1)
        out *= powers[:, ek]
    return out


def monomial_gradient_matrix(exponents, points) -> np.ndarray:
    """d/dx_k of each monomial at each point, shape (S, M, n)."""
    expo = np.asarray(exponents, dtype=np.int64)
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    S, n = pts.shape
    M = expo.shape[0]
    out = np.empty((S, M, n))
    for k in range(n):
        ek = np.maximum(expo.copy(), 0)
        ek[:, k] = np.maximum(expo[:, k] - 1, 0)
        out[:, :, k] = monomial_matrix(ek, pts) * expo[:, k]
    return out
