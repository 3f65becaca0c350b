"""Compact algebraic manifolds given by polynomial equations.

A variety is the common zero set in R^n of polynomials p_1..p_r whose
gradients span a space of dimension exactly n - d at every point (d the
intrinsic dimension).  This module provides the differential-geometric
primitives built on the defining polynomials alone: residual evaluation,
orthogonal normal bases, tangential gradients, closest-point projection,
distances, and measure sampling.  Built-in constructors cover spheres,
tori of revolution, and Grassmannians of k-planes embedded as projection
matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np
from scipy.linalg import qr as scipy_qr

from .errors import InputError, RetractionError, SingularPointError
from .multipoly import MultiPoly

RANK_TOL_DEFAULT = 1e-8


@dataclass
class Point:
    """A single point certified to lie on a variety."""

    coords: np.ndarray
    on_manifold_residual: float

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __len__(self):
        return len(self.coords)


@dataclass
class PointConfig:
    """An N-point configuration on a variety (candidate design)."""

    points: np.ndarray  # (N, n)
    variety: str | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.points, dtype=dtype)

    def __len__(self):
        return self.points.shape[0]

    def to_json(self) -> dict:
        return {"variety": self.variety, "points": self.points.tolist()}

    @classmethod
    def from_json(cls, doc) -> "PointConfig":
        if isinstance(doc, list):  # bare array-of-arrays form
            return cls(np.asarray(doc, dtype=float))
        return cls(np.asarray(doc["points"], dtype=float), doc.get("variety"))


@dataclass
class VarietySpec:
    """A compact algebraic manifold plus its measure/moment hooks.

    ``measure_sampler(count, rng) -> (count, n) array`` draws points
    approximately distributed per the normalized surface measure.
    ``exact_moment(alpha) -> float`` returns the integral of the monomial
    x^alpha when a closed form exists.  ``fast_project`` and
    ``exact_distance`` are optional analytic accelerations that must agree
    with the generic Gauss-Newton / chordal paths.
    """

    name: str
    ambient_dim: int
    intrinsic_dim: int
    defining: list[MultiPoly]
    degree_hint: int | None = None
    measure_sampler: object = None
    exact_moment: object = None
    fast_project: object = None
    exact_distance: object = None
    isometries: list[np.ndarray] = field(default_factory=list)
    tau_rank: float = RANK_TOL_DEFAULT
    _grad_polys: list[list[MultiPoly]] = field(default=None, repr=False)

    def __post_init__(self):
        n, d, r = self.ambient_dim, self.intrinsic_dim, len(self.defining)
        if not (0 < d < n):
            raise InputError(f"need 0 < intrinsic_dim < ambient_dim, got d={d}, n={n}")
        if r < n - d:
            raise InputError(f"need at least n-d={n - d} defining polynomials, got {r}")
        for p in self.defining:
            if p.ambient_dim != n:
                raise InputError("defining polynomial has wrong ambient dimension")
        self._grad_polys = [p.gradient() for p in self.defining]

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.intrinsic_dim

    @property
    def max_defining_degree(self) -> int:
        return max(p.degree for p in self.defining)

    def tolerance(self, x) -> float:
        """On-manifold residual tolerance at x (grows with the point norm)."""
        nrm = float(np.linalg.norm(np.asarray(x, dtype=float), axis=-1).max())
        return 1e-12 * (1.0 + nrm ** self.max_defining_degree)


# ---------------------------------------------------------------------------
# residuals and Jacobians
# ---------------------------------------------------------------------------


def eval_defining(spec: VarietySpec, x) -> np.ndarray:
    """Residual vector (p_1(x), ..., p_r(x)); batched for (S, n) input."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.shape[1] != spec.ambient_dim:
        raise InputError(
            f"point dimension {pts.shape[1]} != ambient_dim {spec.ambient_dim}"
        )
    out = np.stack([p(pts) for p in spec.defining], axis=1)
    return out[0] if single else out


def on_manifold_residual(spec: VarietySpec, x) -> np.ndarray | float:
    res = np.abs(eval_defining(spec, x))
    return res.max(axis=-1)


def defining_jacobian(spec: VarietySpec, x) -> np.ndarray:
    """Jacobian rows grad p_i(x); shape (r, n), batched (S, r, n)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    S = pts.shape[0]
    r, n = len(spec.defining), spec.ambient_dim
    J = np.empty((S, r, n))
    for i, grads in enumerate(spec._grad_polys):
        for k, g in enumerate(grads):
            J[:, i, k] = g(pts)
    return J[0] if single else J


def _check_on_manifold(spec, x):
    res = float(np.max(np.abs(eval_defining(spec, x))))
    tol = spec.tolerance(x)
    if res > tol:
        raise InputError(
            f"point is not on {spec.name}: residual {res:.3e} > tolerance {tol:.3e}"
        )


# ---------------------------------------------------------------------------
# normal space and tangential gradient
# ---------------------------------------------------------------------------


def _gram_schmidt_determinant(grads: np.ndarray) -> list[np.ndarray]:
    """Orthogonal basis from the determinant expansion of the Gram matrix.

    u_i is the formal determinant of the i x i matrix whose first i-1 rows
    are Gram inner products and whose last row holds the gradient vectors;
    expanding along that last row gives u_i as a combination of g_1..g_i.
    """
    m = grads.shape[0]
    G = grads @ grads.T
    out = []
    for i in range(1, m + 1):
        u = np.zeros(grads.shape[1])
        for k in range(i):
            cols = [c for c in range(i) if c != k]
            minor = G[: i - 1, :][:, cols] if i > 1 else np.ones((0, 0))
            det = float(np.linalg.det(minor)) if i > 1 else 1.0
            u += ((-1) ** (i - 1 + k)) * det * grads[k]
        out.append(u)
    return out


def _pivot_subset(J: np.ndarray, m: int) -> tuple[int, ...]:
    """Greedy column-pivoted QR choice of m well-conditioned gradients."""
    _, _, piv = scipy_qr(J.T, mode="economic", pivoting=True)
    return tuple(sorted(int(i) for i in piv[:m]))


def normal_basis(spec: VarietySpec, x, check: bool = True):
    """Pairwise-orthogonal basis of the normal space at an on-manifold point.

    Returns ``(vectors, index_set)`` where index_set names the n-d defining
    polynomials whose gradients were combined.  Raises SingularPointError if
    the best gradient subset is rank-deficient (tolerance ``spec.tau_rank``).
    """
    x = np.asarray(x, dtype=float)
    if check:
        _check_on_manifold(spec, x)
    J = defining_jacobian(spec, x)
    m = spec.codim
    I = _pivot_subset(J, m)
    sub = J[list(I), :]
    sv = np.linalg.svd(sub, compute_uv=False)
    if sv[-1] <= spec.tau_rank:
        raise SingularPointError(
            f"gradient subset {I} of {spec.name} has smallest singular value "
            f"{sv[-1]:.3e} <= {spec.tau_rank:.1e} at {x}"
        )
    return _gram_schmidt_determinant(sub), I


def tangential_project(spec: VarietySpec, pts, vecs) -> np.ndarray:
    """Project ambient vectors onto the tangent spaces at on-manifold points.

    Batched; uses the single-gradient formula for hypersurfaces and the
    orthogonal normal basis elsewhere.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    vecs = np.atleast_2d(np.asarray(vecs, dtype=float))
    if len(spec.defining) == 1:
        g = defining_jacobian(spec, pts)[:, 0, :]
        g2 = np.einsum("ij,ij->i", g, g)
        coef = np.einsum("ij,ij->i", vecs, g) / g2
        return vecs - coef[:, None] * g
    out = np.empty_like(vecs)
    for s in range(pts.shape[0]):
        v = vecs[s].copy()
        basis, _ = normal_basis(spec, pts[s], check=False)
        for u in basis:
            v -= (v @ u) / (u @ u) * u
        out[s] = v
    return out


def tangential_gradient(spec: VarietySpec, f: MultiPoly, x) -> np.ndarray:
    """Tangential gradient of f at x: ambient gradient minus its normal part."""
    x = np.asarray(x, dtype=float)
    _check_on_manifold(spec, x)
    grad = f.gradient_at(x)
    return tangential_project(spec, x[None, :], grad[None, :])[0]


def tangential_gradient_batch(spec: VarietySpec, f: MultiPoly, pts) -> np.ndarray:
    """Tangential gradients of f at each row of pts, shape (S, n)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return tangential_project(spec, pts, f.gradient_at(pts))


# ---------------------------------------------------------------------------
# projection (retraction) onto the variety
# ---------------------------------------------------------------------------


def _gauss_newton_step(spec, y):
    res = eval_defining(spec, y)
    if len(spec.defining) == 1:
        g = defining_jacobian(spec, y)[:, 0, :]
        g2 = np.einsum("ij,ij->i", g, g)
        return -(res[:, 0] / g2)[:, None] * g
    J = defining_jacobian(spec, y)
    # min-norm least-squares step lies in the row space of J = normal span
    step = -np.linalg.pinv(J, rcond=1e-12) @ res[:, :, None]
    return step[:, :, 0]


def project_points(
    spec: VarietySpec,
    pts,
    max_iter: int = 50,
    polish: bool = True,
    use_fast: bool = True,
) -> np.ndarray:
    """Map ambient points onto the variety (batched closest-point retraction).

    Gauss-Newton drives the residuals to the manifold tolerance with steps
    in the normal span; an optional polish pass then removes the tangential
    component of (input - output) so the result is a first-order closest
    point.  Raises RetractionError when the iteration does not converge.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != spec.ambient_dim:
        raise InputError(
            f"point dimension {pts.shape[1]} != ambient_dim {spec.ambient_dim}"
        )
    if use_fast and spec.fast_project is not None:
        return spec.fast_project(pts)

    def gauss_newton(y):
        for _ in range(max_iter):
            res = np.abs(eval_defining(spec, y)).max(axis=1)
            # points already within tolerance never move (exact fixed points)
            live = res > spec.tolerance(y)
            if not live.any():
                return y
            y[live] += _gauss_newton_step(spec, y[live])
        if (np.abs(eval_defining(spec, y)).max(axis=1) > spec.tolerance(y)).any():
            bad = int(np.argmax(np.abs(eval_defining(spec, y)).max(axis=1)))
            raise RetractionError(
                f"Gauss-Newton projection onto {spec.name} failed to converge "
                f"for point index {bad}"
            )
        return y

    y = gauss_newton(pts.copy())
    if polish:
        for _ in range(8):
            vt = tangential_project(spec, y, pts - y)
            if np.linalg.norm(vt, axis=1).max() <= 1e-12 * (1.0 + np.linalg.norm(pts)):
                break
            y = gauss_newton(y + vt)
    return y


def project_to_variety(spec: VarietySpec, x, **kw) -> Point:
    """Single-point closest-point projection; returns a certified Point."""
    y = project_points(spec, np.asarray(x, dtype=float)[None, :], **kw)[0]
    return Point(y, float(np.max(np.abs(eval_defining(spec, y)))))


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def distance(spec: VarietySpec, x, y) -> float:
    """Geodesic distance where a closed form exists, else chordal surrogate.

    The chordal value obeys ||x-y|| <= d_geo <= C * ||x-y|| for nearby
    points (below the reach), which is all the partition diameters and flow
    horizons require.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.exact_distance is not None:
        return float(spec.exact_distance(x, y))
    return float(np.linalg.norm(x - y))


def cross_distances(spec: VarietySpec, A, B) -> np.ndarray:
    """Distance matrix between row sets A (S,n) and B (T,n), batched."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if spec.name.startswith("sphere"):
        return np.arccos(np.clip(A @ B.T, -1.0, 1.0))
    diff2 = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    chordal = np.sqrt(np.maximum(diff2, 0.0))
    if spec.name.startswith("grassmann:1,"):
        # ||P-Q||_F^2 = 2 sin^2(theta); embedded geodesic length sqrt(2)*theta
        return math.sqrt(2.0) * np.arcsin(np.clip(chordal / math.sqrt(2.0), 0.0, 1.0))
    return chordal


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def smoothness_check(spec: VarietySpec, pts) -> dict:
    """Verify the normal space has dimension exactly n-d at sampled points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    m = spec.codim
    worst_keep, worst_drop = np.inf, 0.0
    for s in range(pts.shape[0]):
        sv = np.linalg.svd(defining_jacobian(spec, pts[s]), compute_uv=False)
        worst_keep = min(worst_keep, sv[m - 1])
        if len(sv) > m:
            worst_drop = max(worst_drop, sv[m])
    ok = worst_keep > spec.tau_rank and worst_drop <= 1e-6 * max(worst_keep, 1.0)
    return {
        "ok": bool(ok),
        "min_normal_singular_value": float(worst_keep),
        "max_excess_singular_value": float(worst_drop),
        "points_checked": int(pts.shape[0]),
    }


def normal_product_range(spec: VarietySpec, pts) -> tuple[float, float]:
    """Empirical range of sup over gradient subsets of prod ||u_i||^2.

    The supremum runs over all index sets of size n-d whose gradients are
    independent; the returned (min, max) over the sample estimates the
    two-sided bound constant for the variety.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    m = spec.codim
    r = len(spec.defining)
    lo, hi = np.inf, 0.0
    for s in range(pts.shape[0]):
        J = defining_jacobian(spec, pts[s])
        best = 0.0
        for I in combinations(range(r), m):
            sub = J[list(I), :]
            if np.linalg.svd(sub, compute_uv=False)[-1] <= spec.tau_rank:
                continue
            prod = 1.0
            for u in _gram_schmidt_determinant(sub):
                prod *= float(u @ u)
            best = max(best, prod)
        lo, hi = min(lo, best), max(hi, best)
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# built-in varieties
# ---------------------------------------------------------------------------


def _double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def _sphere_moment(n: int, alpha) -> float:
    """Monomial moment over S^{n-1} with normalized surface measure."""
    if any(a % 2 for a in alpha):
        return 0.0
    s = sum(alpha) // 2
    num = 1.0
    for a in alpha:
        num *= _double_factorial(a - 1)
    den = 1.0
    for j in range(1, s + 1):
        den *= n + 2 * j - 2
    return num / den


def _signed_permutation_matrices(n: int, limit: int = 64) -> list[np.ndarray]:
    """A few signed coordinate permutations of R^n (orthogonal maps)."""
    out = [np.eye(n)]
    cyc = np.zeros((n, n))
    for i in range(n):
        cyc[i, (i + 1) % n] = 1.0
    out.append(cyc)
    flip = np.eye(n)
    flip[0, 0] = -1.0
    out.append(flip)
    out.append(-np.eye(n) if n % 2 == 0 else flip @ cyc)
    return out[:limit]


def sphere(d: int) -> VarietySpec:
    """Unit sphere S^d in R^{d+1}: |x|^2 - 1 = 0."""
    if d < 1:
        raise InputError("sphere dimension must be >= 1")
    n = d + 1
    p = MultiPoly(
        n,
        {tuple(2 * (i == k) for i in range(n)): 1.0 for k in range(n)}
        | {(0,) * n: -1.0},
    )

    def sampler(count, rng):
        g = rng.standard_normal((count, n))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def fast_project(pts):
        nrm = np.linalg.norm(pts, axis=1, keepdims=True)
        if (nrm == 0).any():
            raise RetractionError("cannot radially project the origin onto a sphere")
        return pts / nrm

    def exact_distance(x, y):
        return math.acos(min(1.0, max(-1.0, float(x @ y))))

    return VarietySpec(
        name=f"sphere:{d}",
        ambient_dim=n,
        intrinsic_dim=d,
        defining=[p],
        degree_hint=2,
        measure_sampler=sampler,
        exact_moment=lambda alpha: _sphere_moment(n, alpha),
        fast_project=fast_project,
        exact_distance=exact_distance,
        isometries=_signed_permutation_matrices(n),
    )


def torus(R: float = 2.0, r: float = 1.0) -> VarietySpec:
    """Torus of revolution about the z-axis with radii R > r > 0.

    Defining quartic: (x^2+y^2+z^2+R^2-r^2)^2 - 4 R^2 (x^2+y^2) = 0.
    """
    if not (R > r > 0):
        raise InputError(f"torus needs R > r > 0, got R={R}, r={r}")
    x2 = MultiPoly(3, {(2, 0, 0): 1.0})
    y2 = MultiPoly(3, {(0, 2, 0): 1.0})
    z2 = MultiPoly(3, {(0, 0, 2): 1.0})
    q = x2 + y2 + z2 + (R * R - r * r)
    p = q * q - (4 * R * R) * (x2 + y2)

    def sampler(count, rng):
        out = np.empty((count, 3))
        got = 0
        while got < count:
            todo = count - got
            u = rng.uniform(0.0, 2 * np.pi, size=2 * todo + 16)
            v = rng.uniform(0.0, 2 * np.pi, size=u.size)
            keep = rng.uniform(0.0, 1.0, size=u.size) < (R + r * np.cos(v)) / (R + r)
            u, v = u[keep][:todo], v[keep][:todo]
            rho = R + r * np.cos(v)
            take = len(u)
            out[got : got + take, 0] = rho * np.cos(u)
            out[got : got + take, 1] = rho * np.sin(u)
            out[got : got + take, 2] = r * np.sin(v)
            got += take
        return out

    def exact_moment(alpha):
        a, b, c = alpha

        def circ(p_, q_):  # integral of cos^p sin^q over a period, / 2pi
            if p_ % 2 or q_ % 2:
                return 0.0
            return (
                _double_factorial(p_ - 1)
                * _double_factorial(q_ - 1)
                / _double_factorial(p_ + q_)
            )

        m = a + b + 1
        radial = sum(
            math.comb(m, j) * R ** (m - j) * r**j * circ(j, c) for j in range(m + 1)
        )
        return circ(a, b) * radial * r**c / R

    rot = 2 * np.pi / 7
    rot_mat = np.array(
        [
            [math.cos(rot), -math.sin(rot), 0.0],
            [math.sin(rot), math.cos(rot), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    return VarietySpec(
        name=f"torus:{R:g},{r:g}",
        ambient_dim=3,
        intrinsic_dim=2,
        defining=[p],
        degree_hint=4,
        measure_sampler=sampler,
        exact_moment=exact_moment,
        isometries=[np.eye(3), rot_mat, np.diag([1.0, 1.0, -1.0]), np.diag([1.0, -1.0, 1.0])],
    )


# -- Grassmannian of k-planes as projection matrices -------------------------
#
# Symmetric matrices are identified with R^{n(n+1)/2} isometrically: the
# coordinate for an off-diagonal entry carries a sqrt(2) factor, so the
# Euclidean metric on coordinates equals the Frobenius metric on matrices.
# Conjugation by orthogonal matrices is then an ambient isometry, which is
# what makes the QR sampler produce the normalized surface measure.

_SQRT2 = math.sqrt(2.0)


def sym_index_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i, n)]


def sym_to_coords(P: np.ndarray) -> np.ndarray:
    """Isometric vectorization of symmetric matrices; batched on (..., n, n)."""
    P = np.asarray(P, dtype=float)
    n = P.shape[-1]
    cols = []
    for i, j in sym_index_pairs(n):
        cols.append(P[..., i, j] * (1.0 if i == j else _SQRT2))
    return np.stack(cols, axis=-1)


def coords_to_sym(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    P = np.zeros(x.shape[:-1] + (n, n))
    for m, (i, j) in enumerate(sym_index_pairs(n)):
        if i == j:
            P[..., i, i] = x[..., m]
        else:
            P[..., i, j] = P[..., j, i] = x[..., m] / _SQRT2
    return P


def _conjugation_on_coords(g: np.ndarray) -> np.ndarray:
    """Matrix of A -> g A g^T acting on isometric coordinates."""
    n = g.shape[0]
    pairs = sym_index_pairs(n)
    L = np.zeros((len(pairs), len(pairs)))
    for m, (i, j) in enumerate(pairs):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0 if i == j else 1.0 / _SQRT2
        L[:, m] = sym_to_coords(g @ E @ g.T)
    return L


def grassmann_symmetry_group(n: int) -> list[np.ndarray]:
    """Signed-permutation conjugations acting on projection-matrix coords."""
    out = []
    for perm in permutations(range(n)):
        Pm = np.zeros((n, n))
        for i, p in enumerate(perm):
            Pm[i, p] = 1.0
        for bits in range(2 ** (n - 1)):  # D and -D act identically
            D = np.diag([1.0] + [1.0 if (bits >> b) & 1 == 0 else -1.0 for b in range(n - 1)])
            out.append(_conjugation_on_coords(D @ Pm))
    return out


def grassmannian(k: int, n: int) -> VarietySpec:
    """Grassmannian G(k, n): rank-k orthogonal projection matrices of R^n.

    Embedded in R^{n(n+1)/2} via isometric symmetric-matrix coordinates.
    Defining equations: (P^2 - P)_{ij} = 0 for i <= j, and tr(P) - k = 0.
    Intrinsic dimension k(n-k).
    """
    if not (1 <= k < n):
        raise InputError(f"grassmannian needs 1 <= k < n, got k={k}, n={n}")
    pairs = sym_index_pairs(n)
    nc = len(pairs)
    coord = {}
    for m, (i, j) in enumerate(pairs):
        e = [0] * nc
        e[m] = 1
        scale = 1.0 if i == j else 1.0 / _SQRT2
        coord[(i, j)] = MultiPoly(nc, {tuple(e): scale})
        coord[(j, i)] = coord[(i, j)]
    defining = []
    for i, j in pairs:
        p = MultiPoly.zero(nc)
        for m in range(n):
            p = p + coord[(i, m)] * coord[(m, j)]
        defining.append(p - coord[(i, j)])
    trace = MultiPoly.zero(nc)
    for i in range(n):
        trace = trace + coord[(i, i)]
    defining.append(trace - float(k))

    def sampler(count, rng):
        g = rng.standard_normal((count, n, k))
        q, _ = np.linalg.qr(g)
        return sym_to_coords(q @ np.swapaxes(q, -1, -2))

    def fast_project(pts):
        P = coords_to_sym(pts, n)
        w, v = np.linalg.eigh(P)
        top = v[..., :, n - k :]
        return sym_to_coords(top @ np.swapaxes(top, -1, -2))

    def exact_distance(x, y):
        P, Q = coords_to_sym(x, n), coords_to_sym(y, n)
        wp, vp = np.linalg.eigh(P)
        wq, vq = np.linalg.eigh(Q)
        Up, Uq = vp[:, n - k :], vq[:, n - k :]
        cos = np.clip(np.linalg.svd(Up.T @ Uq, compute_uv=False), 0.0, 1.0)
        return _SQRT2 * float(np.linalg.norm(np.arccos(cos)))

    return VarietySpec(
        name=f"grassmann:{k},{n}",
        ambient_dim=nc,
        intrinsic_dim=k * (n - k),
        defining=defining,
        degree_hint=2 ** (n - 1) if k in (1, n - 1) else None,
        measure_sampler=sampler,
        exact_moment=None,
        fast_project=fast_project,
        exact_distance=exact_distance,
        isometries=grassmann_symmetry_group(n),
    )


# ---------------------------------------------------------------------------
# name resolution, sampling entry point, JSON interface
# ---------------------------------------------------------------------------


def by_name(name: str) -> VarietySpec:
    """Resolve built-in varieties: sphere:d, torus:R,r, grassmann:k,n."""
    try:
        kind, _, args = name.partition(":")
        if kind == "sphere":
            return sphere(int(args))
        if kind == "torus":
            R, r = (float(v) for v in args.split(","))
            return torus(R, r)
        if kind == "grassmann":
            k, n = (int(v) for v in args.split(","))
            return grassmannian(k, n)
    except (ValueError, TypeError) as exc:
        raise InputError(f"cannot parse variety name {name!r}: {exc}") from exc
    raise InputError(f"unknown variety {name!r}")


def sample_measure(spec: VarietySpec, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` points approximately distributed per the normalized
    surface measure; deterministic given the seed."""
    if count < 1:
        raise InputError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    if spec.measure_sampler is not None:
        return spec.measure_sampler(count, rng)
    return _mcmc_sample(spec, count, rng)


def _mcmc_sample(spec, count, rng, step=0.25, burn=200, thin=3):
    """Tangent-step Metropolis walk targeting the surface measure.

    Proposal: Gaussian step in the tangent space followed by Gauss-Newton
    projection back onto the variety, with a reverse-projection check and
    the Gaussian density ratio in the acceptance (so the walk is reversible
    with respect to the surface measure, up to projection tolerance).
    """
    n, d = spec.ambient_dim, spec.intrinsic_dim
    x = project_points(spec, rng.standard_normal((1, n)))[0]

    def tangent_frame(y):
        J = defining_jacobian(spec, y)
        _, _, vt = np.linalg.svd(J)
        return vt[spec.codim :, :].T  # (n, d)

    def advance(x, Tx):
        xi = step * rng.standard_normal(d)
        try:
            y = project_points(spec, (x + Tx @ xi)[None, :], polish=False)[0]
        except RetractionError:
            return x, Tx
        Ty = tangent_frame(y)
        vp = Ty @ (Ty.T @ (x - y))
        try:
            back = project_points(spec, (y + vp)[None, :], polish=False)[0]
        except RetractionError:
            return x, Tx
        if np.linalg.norm(back - x) > 1e-8 * (1.0 + np.linalg.norm(x)):
            return x, Tx
        log_accept = (float(xi @ xi) - float(vp @ vp)) / (2.0 * step * step)
        if math.log(rng.uniform(1e-300, 1.0)) < log_accept:
            return y, Ty
        return x, Tx

    Tx = tangent_frame(x)
    for _ in range(burn):
        x, Tx = advance(x, Tx)
    out = np.empty((count, n))
    for i in range(count):
        for _ in range(thin):
            x, Tx = advance(x, Tx)
        out[i] = x
    return out


def variety_to_json(spec: VarietySpec) -> dict:
    return {
        "name": spec.name,
        "ambient_dim": spec.ambient_dim,
        "intrinsic_dim": spec.intrinsic_dim,
        "polys": [
            [[list(e), c] for e, c in sorted(p.terms.items())] for p in spec.defining
        ],
        "degree_hint": spec.degree_hint,
    }


def variety_from_json(doc) -> VarietySpec:
    """Load a variety from the JSON schema {name, ambient_dim, intrinsic_dim,
    polys}; sampling falls back to the Metropolis walk."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        n = int(doc["ambient_dim"])
        polys = [
            MultiPoly(n, {tuple(e): c for e, c in entries}) for entries in doc["polys"]
        ]
        return VarietySpec(
            name=str(doc["name"]),
            ambient_dim=n,
            intrinsic_dim=int(doc["intrinsic_dim"]),
            defining=polys,
            degree_hint=doc.get("degree_hint"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed variety document: {exc}") from exc
