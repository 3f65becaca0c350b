"""Restricted polynomial spaces on a variety and their reproducing kernels.

The space of degree-<=t polynomials restricted to the variety is realized
numerically: evaluate all ambient monomials at quadrature nodes, weight by
the square roots of the quadrature weights, and orthonormalize by SVD.
Directions with tiny singular values are exactly the monomial combinations
that vanish on the variety (the ideal), so the rank cut implements the
quotient.  The zero-mean part of the space carries the reproducing kernel
whose configuration sums vanish exactly on designs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from .errors import InputError
from .multipoly import (
    MultiPoly,
    monomial_gradient_matrix,
    monomial_matrix,
    monomials_up_to,
)
from . import varieties
from .varieties import VarietySpec, sym_to_coords

RANK_TOL = 1e-8
OVERSAMPLE = 4


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------


@dataclass
class QuadratureRule:
    """Nodes and weights realizing the normalized surface measure.

    ``kind`` is one of monte_carlo / exact_moments / parametric and is
    recorded in every artifact for provenance.  exact_moments rules carry
    nodes too (a degree-exact parametric grid) so evaluation-based
    operations work; their monomial integrals come from the closed form.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.kind not in ("monte_carlo", "exact_moments", "parametric"):
            raise InputError(f"unknown quadrature kind {self.kind!r}")
        if self.weights.shape[0] != self.nodes.shape[0]:
            raise InputError("node/weight count mismatch")
        if (self.weights <= 0).any():
            raise InputError("quadrature weights must be positive")
        total = self.weights.sum()
        if abs(total - 1.0) > 1e-12:
            raise InputError(f"weights must sum to 1, got {total!r}")

    def __len__(self):
        return self.nodes.shape[0]

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum of per-node values (fixed BLAS reduction order)."""
        return float(self.weights @ np.asarray(values, dtype=float))

    def standard_error(self, values: np.ndarray) -> float:
        """Monte Carlo standard error of ``integrate``; 0 for exact grids."""
        if self.kind != "monte_carlo":
            return 0.0
        v = np.asarray(values, dtype=float)
        return float(v.std(ddof=1) / math.sqrt(len(v)))


def integrate_monomial(spec: VarietySpec, alpha, rule: QuadratureRule) -> float:
    """Integral of the monomial x^alpha against the variety measure."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != spec.ambient_dim:
        raise InputError(
            f"exponent length {len(alpha)} != ambient_dim {spec.ambient_dim}"
        )
    if rule.kind == "exact_moments" and spec.exact_moment is not None:
        return float(spec.exact_moment(alpha))
    return rule.integrate(monomial_matrix(np.array([alpha]), rule.nodes)[:, 0])


# -- node grids ---------------------------------------------------------------


def _circle_nodes(degree: int, min_nodes: int = 0):
    K = max(degree + 1, min_nodes, 4)
    ang = 2.0 * np.pi * np.arange(K) / K
    return np.column_stack([np.cos(ang), np.sin(ang)]), np.full(K, 1.0 / K)


def sphere_grid(d: int, degree: int, min_nodes: int = 0):
    """Product grid on S^d integrating all polynomials of total degree
    <= ``degree`` exactly: Gauss-Jacobi in each latitude, trapezoid on S^1."""
    if d == 1:
        return _circle_nodes(degree, min_nodes)
    sub_min = math.ceil(min_nodes ** ((d - 1) / d)) if min_nodes else 0
    sub_pts, sub_w = sphere_grid(d - 1, degree, sub_min)
    nz = max((degree + 2) // 2, 2)
    if nz * len(sub_w) < min_nodes:
        nz = -(-min_nodes // len(sub_w))
    a = (d - 2) / 2.0
    z, wz = roots_jacobi(nz, a, a)
    wz = wz / wz.sum()
    s = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    pts = np.empty((nz * len(sub_w), d + 1))
    pts[:, 0] = np.repeat(z, len(sub_w))
    pts[:, 1:] = np.repeat(s, len(sub_w))[:, None] * np.tile(sub_pts, (nz, 1))
    w = np.repeat(wz, len(sub_w)) * np.tile(sub_w, nz)
    return pts, w


def torus_grid(R: float, r: float, degree: int, min_nodes: int = 0):
    """Tensor-product trapezoid grid with the rotation-surface area weight;
    exact for polynomial integrands of total degree <= ``degree``."""
    Ku, Kv = degree + 2, degree + 3
    if Ku * Kv < min_nodes:
        f = math.ceil(math.sqrt(min_nodes / (Ku * Kv)))
        Ku, Kv = f * Ku, f * Kv
    u = 2.0 * np.pi * np.arange(Ku) / Ku
    v = 2.0 * np.pi * np.arange(Kv) / Kv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    uu, vv = uu.ravel(), vv.ravel()
    rho = R + r * np.cos(vv)
    pts = np.column_stack([rho * np.cos(uu), rho * np.sin(uu), r * np.sin(vv)])
    w = rho / rho.sum()
    return pts, w


def grassmann1_grid(n: int, degree: int, min_nodes: int = 0):
    """Exact grid on G(1, n): monomials pull back along u -> u u^T to sphere
    polynomials of twice the degree, so a degree-2*degree sphere grid maps
    to an exact rule on the projection-matrix coordinates."""
    u, w = sphere_grid(n - 1, 2 * degree, min_nodes)
    P = u[:, :, None] * u[:, None, :]
    return sym_to_coords(P), w


def parametric_rule(spec: VarietySpec, degree: int, min_nodes: int = 0) -> QuadratureRule:
    """Degree-exact parametric quadrature for a built-in variety."""
    name = spec.name
    desc = {"type": "parametric", "variety": name, "degree": degree, "min_nodes": min_nodes}
    if name.startswith("sphere:"):
        pts, w = sphere_grid(spec.intrinsic_dim, degree, min_nodes)
    elif name.startswith("torus:"):
        R, r = (float(v) for v in name.split(":")[1].split(","))
        pts, w = torus_grid(R, r, degree, min_nodes)
    elif name.startswith("grassmann:1,"):
        n = int(name.split(",")[1])
        pts, w = grassmann1_grid(n, degree, min_nodes)
    else:
        raise InputError(f"no parametric rule available for {name}")
    return QuadratureRule(pts, w, "parametric", desc)


def exact_moment_rule(spec: VarietySpec, degree: int, min_nodes: int = 0) -> QuadratureRule:
    """Closed-form moments as the integral oracle, with a degree-exact node
    grid attached for evaluation-based operations."""
    if spec.exact_moment is None:
        raise InputError(f"{spec.name} has no exact moments")
    rule = parametric_rule(spec, degree, min_nodes)
    desc = dict(rule.descriptor, type="exact_moments")
    return QuadratureRule(rule.nodes, rule.weights, "exact_moments", desc)


def monte_carlo_rule(spec: VarietySpec, count: int, seed: int) -> QuadratureRule:
    pts = varieties.sample_measure(spec, count, seed)
    desc = {"type": "monte_carlo", "variety": spec.name, "count": count, "seed": seed}
    return QuadratureRule(pts, np.full(count, 1.0 / count), "monte_carlo", desc)


def default_rule(spec: VarietySpec, t: int, seed: int = 0) -> QuadratureRule:
    """Quadrature used to build the degree-t space on a given variety.

    Spheres and tori get degree-exact grids (closed-form moments attached
    for the sphere); G(1, n) gets the exact pullback grid; anything else
    falls back to Monte Carlo over the variety's sampler.
    """
    min_nodes = OVERSAMPLE * math.comb(spec.ambient_dim + t, spec.ambient_dim)
    if spec.name.startswith("sphere:"):
        return exact_moment_rule(spec, 2 * t, min_nodes)
    if spec.name.startswith("torus:") or spec.name.startswith("grassmann:1,"):
        return parametric_rule(spec, 2 * t, min_nodes)
    return monte_carlo_rule(spec, max(1_000_000, min_nodes), seed)


def dense_rule(spec: VarietySpec, size: int = 250_000, seed: int = 0) -> QuadratureRule:
    """Dense quadrature for integrals of non-polynomial quantities like |f|."""
    try:
        return parametric_rule(spec, 16, min_nodes=size)
    except InputError:
        return monte_carlo_rule(spec, size, seed)


def rule_from_descriptor(spec: VarietySpec, desc: dict) -> QuadratureRule:
    kind = desc.get("type")
    if kind == "parametric":
        return parametric_rule(spec, int(desc["degree"]), int(desc.get("min_nodes", 0)))
    if kind == "exact_moments":
        return exact_moment_rule(spec, int(desc["degree"]), int(desc.get("min_nodes", 0)))
    if kind == "monte_carlo":
        return monte_carlo_rule(spec, int(desc["count"]), int(desc["seed"]))
    raise InputError(f"unknown quadrature descriptor {desc!r}")


# -- symmetrized Monte Carlo moments ------------------------------------------


def _signed_permutation(mat: np.ndarray):
    """Decompose an orthogonal matrix that is a signed permutation into
    (perm, signs) with (g x)[i] = signs[i] * x[perm[i]]; None otherwise."""
    m = np.asarray(mat)
    perm = np.argmax(np.abs(m), axis=1)
    signs = m[np.arange(m.shape[0]), perm]
    rebuilt = np.zeros_like(m)
    rebuilt[np.arange(m.shape[0]), perm] = signs
    if not np.allclose(rebuilt, m, atol=1e-10) or not np.allclose(np.abs(signs), 1.0, atol=1e-10):
        return None
    return perm, np.round(signs)


def moments_with_se(spec: VarietySpec, exponents, rule: QuadratureRule):
    """Monomial integrals with standard errors.

    Exact moments give zero error; parametric grids are treated as exact;
    Monte Carlo estimates are symmetrized over the variety's signed
    coordinate symmetries (odd moments cancel exactly) and carry the
    per-monomial standard error of the symmetrized estimator.
    """
    expo = np.asarray(exponents, dtype=np.int64)
    M = expo.shape[0]
    if spec.exact_moment is not None and rule.kind == "exact_moments":
        return (
            np.array([spec.exact_moment(tuple(a)) for a in expo]),
            np.zeros(M),
        )
    if rule.kind != "monte_carlo":
        vals = rule.weights @ monomial_matrix(expo, rule.nodes)
        return vals, np.zeros(M)
    group = []
    for g in spec.isometries:
        sp = _signed_permutation(g)
        if sp is not None:
            group.append(sp)
    if not group:
        group = [(np.arange(spec.ambient_dim), np.ones(spec.ambient_dim))]
    Y = np.zeros((len(rule), M))
    for perm, signs in group:
        # (g x)^alpha = prod_i signs[i]^alpha[i] * x^beta, beta[perm[i]] += alpha[i]
        beta = np.zeros_like(expo)
        for i in range(spec.ambient_dim):
            beta[:, perm[i]] += expo[:, i]
        sgn = np.prod(np.where(expo % 2 == 1, signs[None, :], 1.0), axis=1)
        Y += sgn[None, :] * monomial_matrix(beta, rule.nodes)
    Y /= len(group)
    vals = rule.weights @ Y
    ses = Y.std(axis=0, ddof=1) / math.sqrt(len(rule))
    return vals, ses


# ---------------------------------------------------------------------------
# orthonormal bases
# ---------------------------------------------------------------------------


@dataclass
class OrthoBasis:
    """Orthonormal basis of the degree-<=t space on a variety.

    ``coeffs[j]`` expresses basis function j in the graded-lexicographic
    monomial frame; row 0 is the constant function 1.
    """

    variety: VarietySpec
    degree: int
    exponents: np.ndarray  # (M, n) int
    coeffs: np.ndarray  # (m, M)
    quadrature: QuadratureRule
    rank_tol: float
    warnings: list[str] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def evaluate(self, points) -> np.ndarray:
        """Basis values at points, shape (S, m)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return monomial_matrix(self.exponents, pts) @ self.coeffs.T

    def evaluate_gradients(self, points) -> np.ndarray:
        """Ambient gradients of each basis function, shape (S, m, n)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dmono = monomial_gradient_matrix(self.exponents, pts)  # (S, M, n)
        return np.einsum("jM,sMn->sjn", self.coeffs, dmono)

    def coefficients_of(self, f: MultiPoly) -> np.ndarray:
        """Basis coefficients of a polynomial via quadrature inner products."""
        vals = f(self.quadrature.nodes)
        return (self.quadrature.weights * vals) @ self.evaluate(self.quadrature.nodes)

    def l2_norm(self, f: MultiPoly) -> float:
        vals = f(self.quadrature.nodes)
        return math.sqrt(max(self.quadrature.integrate(vals * vals), 0.0))

    def to_poly(self, coeff_vector) -> MultiPoly:
        """Monomial-frame polynomial with the given basis coefficients."""
        mono = np.asarray(coeff_vector, dtype=float) @ self.coeffs
        return MultiPoly.from_coefficients(self.exponents, mono, self.variety.ambient_dim)


@dataclass
class ZeroMeanBasis:
    """The zero-mean part of an OrthoBasis (constant removed)."""

    parent: OrthoBasis

    @property
    def variety(self) -> VarietySpec:
        return self.parent.variety

    @property
    def degree(self) -> int:
        return self.parent.degree

    @property
    def dim(self) -> int:
        return self.parent.dim - 1

    def evaluate(self, points) -> np.ndarray:
        return self.parent.evaluate(points)[:, 1:]

    def evaluate_gradients(self, points) -> np.ndarray:
        return self.parent.evaluate_gradients(points)[:, 1:, :]

    def to_poly(self, coeff_vector) -> MultiPoly:
        return self.parent.to_poly(np.concatenate([[0.0], np.asarray(coeff_vector)]))


def build_ortho_basis(
    spec: VarietySpec,
    t: int,
    rule: QuadratureRule | None = None,
    rank_tol: float = RANK_TOL,
) -> OrthoBasis:
    """Orthonormalize the monomials of degree <= t on the variety.

    Monomial values at the nodes are weighted by sqrt(w) and decomposed by
    SVD; directions with singular value <= rank_tol * sigma_max are the
    numerical ideal and are discarded.  The surviving orthonormal functions
    are rotated so the constant function is exactly the first one.
    """
    if t < 0:
        raise InputError("degree must be >= 0")
    if rule is None:
        rule = default_rule(spec, t)
    expo = np.asarray(monomials_up_to(spec.ambient_dim, t), dtype=np.int64)
    M = expo.shape[0]
    if len(rule) < OVERSAMPLE * M:
        raise InputError(
            f"rule has {len(rule)} nodes, below the oversampling bound "
            f"{OVERSAMPLE}*{M}"
        )
    B = np.sqrt(rule.weights)[:, None] * monomial_matrix(expo, rule.nodes)
    _, sv, vt = np.linalg.svd(B, full_matrices=False)
    cut = rank_tol * sv[0]
    m = int(np.sum(sv > cut))
    warnings = []
    ambiguous = np.sum((sv > cut / 10.0) & (sv < cut * 10.0))
    if ambiguous:
        warnings.append(
            f"numerical-rank ambiguity: {int(ambiguous)} singular value(s) "
            f"within a factor 10 of the cut {cut:.3e}"
        )
    coeffs = vt[:m] / sv[:m, None]

    # rotate the constant function onto row 0
    basis = OrthoBasis(spec, t, expo, coeffs, rule, rank_tol, warnings)
    a = (rule.weights @ basis.evaluate(rule.nodes)).astype(float)
    nrm = float(np.linalg.norm(a))
    if abs(nrm - 1.0) > 1e-6:
        warnings.append(f"constant function norm {nrm!r} deviates from 1")
    v = a.copy()
    v[0] -= nrm
    # Householder sending the mean vector to |a| e_0; the rotated phi_0 is
    # the (positive) normalized projection of the constant, i.e. 1 itself.
    if np.linalg.norm(v) > 1e-14:
        H = np.eye(m) - 2.0 * np.outer(v, v) / float(v @ v)
        basis.coeffs = H @ coeffs
    return basis


def zero_mean_subspace(basis: OrthoBasis) -> ZeroMeanBasis:
    """Drop the constant; remaining functions have zero quadrature mean."""
    return ZeroMeanBasis(basis)


def sphere_space_dim(d: int, t: int) -> int:
    """dim of the degree-<=t polynomial space on S^d (exact formula)."""
    return math.comb(d + t, d) + math.comb(d + t - 1, d)


# ---------------------------------------------------------------------------
# kernel and the design functional
# ---------------------------------------------------------------------------


def kernel_eval(zb: ZeroMeanBasis, x, y) -> float:
    """Reproducing kernel of the zero-mean space: sum_j phi_j(x) phi_j(y)."""
    fx = zb.evaluate(np.asarray(x, dtype=float)[None, :])[0]
    fy = zb.evaluate(np.asarray(y, dtype=float)[None, :])[0]
    return float(fx @ fy)


def kernel_matrix(basis, X, Y=None) -> np.ndarray:
    """Kernel Gram matrix between configurations (full or zero-mean basis)."""
    FX = basis.evaluate(np.asarray(X, dtype=float))
    FY = FX if Y is None else basis.evaluate(np.asarray(Y, dtype=float))
    return FX @ FY.T


def design_functional(zb: ZeroMeanBasis, X):
    """Moment vector (1/N) sum_i phi(x_i) and the potential |moments|^2.

    The potential equals the double kernel sum over the configuration
    divided by N^2 and vanishes exactly on t-designs (with respect to the
    quadrature-realized measure).
    """
    pts = np.atleast_2d(np.asarray(X, dtype=float))
    mv = zb.evaluate(pts).mean(axis=0)
    return mv, float(mv @ mv)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_basis(basis: OrthoBasis, path) -> None:
    doc = {
        "variety": basis.variety.name,
        "variety_def": varieties.variety_to_json(basis.variety),
        "t": basis.degree,
        "coeffs": basis.coeffs.ravel().tolist(),
        "dim": basis.dim,
        "quadrature": basis.quadrature.descriptor,
        "rank_tol": basis.rank_tol,
        "warnings": basis.warnings,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_basis(path, spec: VarietySpec | None = None) -> OrthoBasis:
    """Reload a persisted basis; kernel evaluations reproduce bit-for-bit
    because the coefficient matrix round-trips exactly through JSON."""
    with open(path) as fh:
        doc = json.load(fh)
    if spec is None:
        try:
            spec = varieties.by_name(doc["variety"])
        except InputError:
            spec = varieties.variety_from_json(doc["variety_def"])
    t = int(doc["t"])
    expo = np.asarray(monomials_up_to(spec.ambient_dim, t), dtype=np.int64)
    coeffs = np.asarray(doc["coeffs"], dtype=float).reshape(int(doc["dim"]), expo.shape[0])
    rule = rule_from_descriptor(spec, doc["quadrature"])
    return OrthoBasis(spec, t, expo, coeffs, rule, float(doc["rank_tol"]), list(doc["warnings"]))
