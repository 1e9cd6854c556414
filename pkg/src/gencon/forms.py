"""Lie-algebra valued differential forms on chart domains of R^m.

A form of degree k stores one n x n complex coefficient matrix per increasing
multi-index I = (i_1 < ... < i_k), in lexicographic order.  Coefficient
callbacks take points of shape (..., m) and return arrays of shape
(..., C(m, k), n, n); the optional derivative callbacks add one leading
direction axis per derivative order, just after the point axes.

Conventions: (dx^1 ^ ... ^ dx^k)(v_1, ..., v_k) = det[dx^i(v_j)], so
(dx ^ dy)(e_x, e_y) = 1 and d(x dy) = dx ^ dy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .liealg import SCALAR, AlgebraTag, LieValue, commutator

MAX_DEGREE = 4
MAX_DIM = 7

Array = np.ndarray
CoeffFn = Callable[[Array], Array]


class FormError(ValueError):
    pass


@lru_cache(maxsize=None)
def multi_indices(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(m), k))


@lru_cache(maxsize=None)
def _index_of(m: int, k: int) -> dict:
    return {idx: pos for pos, idx in enumerate(multi_indices(m, k))}


@lru_cache(maxsize=None)
def permutations_with_sign(n: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    out = []
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        out.append((perm, -1 if inversions % 2 else 1))
    return tuple(out)


@dataclass(frozen=True)
class KForm:
    degree: int
    dim: int
    tag: AlgebraTag
    coeff: CoeffFn
    dcoeff: CoeffFn | None = None
    d2coeff: CoeffFn | None = None
    # points (..., m) -> bool mask of where the coefficients are defined
    domain: Callable[[Array], Array] | None = None

    def __post_init__(self):
        if not 0 <= self.degree <= MAX_DEGREE:
            raise FormError(f"degree {self.degree} outside 0..{MAX_DEGREE}")
        if not 1 <= self.dim <= MAX_DIM:
            raise FormError(f"chart dimension {self.dim} outside 1..{MAX_DIM}")

    @property
    def ncomp(self) -> int:
        return math.comb(self.dim, self.degree)

    @property
    def n(self) -> int:
        return self.tag.n

    def coefficients(self, points) -> Array:
        points = np.asarray(points, dtype=float)
        return np.asarray(self.coeff(points), dtype=complex)

    def in_domain(self, points) -> Array:
        points = np.asarray(points, dtype=float)
        if self.domain is None:
            return np.ones(points.shape[:-1], dtype=bool)
        return np.asarray(self.domain(points), dtype=bool)

    def __add__(self, other: KForm) -> KForm:
        _check_compatible(self, other)
        return _combine(self, other, 1.0, 1.0)

    def __sub__(self, other: KForm) -> KForm:
        _check_compatible(self, other)
        return _combine(self, other, 1.0, -1.0)

    def scaled(self, s: complex) -> KForm:
        return _combine(self, None, s, 0.0)


def _check_compatible(f: KForm, g: KForm):
    if (f.degree, f.dim, f.tag) != (g.degree, g.dim, g.tag):
        raise FormError("forms differ in degree, dimension or algebra")


def _lift(fn_a, fn_b, sa, sb):
    if fn_b is None:
        return lambda p: sa * fn_a(p)
    return lambda p: sa * fn_a(p) + sb * fn_b(p)


def _combine(f: KForm, g: KForm | None, sa, sb) -> KForm:
    def pick(name):
        a = getattr(f, name)
        if g is None:
            return None if a is None else _lift(a, None, sa, sb)
        b = getattr(g, name)
        return None if a is None or b is None else _lift(a, b, sa, sb)

    domain = f.domain
    if g is not None and g.domain is not None:
        domain = g.domain if f.domain is None else (lambda p: f.domain(p) & g.domain(p))
    return replace(f, coeff=pick("coeff"), dcoeff=pick("dcoeff"), d2coeff=pick("d2coeff"),
                   domain=domain)


def constant_form(degree: int, dim: int, values, tag: AlgebraTag = SCALAR) -> KForm:
    """Form with constant coefficients; `values` has shape (C(dim, degree), n, n)."""
    values = np.asarray(values, dtype=complex).reshape(math.comb(dim, degree), tag.n, tag.n)

    def coeff(p):
        return np.broadcast_to(values, p.shape[:-1] + values.shape)

    def dcoeff(p):
        return np.zeros(p.shape[:-1] + (dim,) + values.shape, dtype=complex)

    def d2coeff(p):
        return np.zeros(p.shape[:-1] + (dim, dim) + values.shape, dtype=complex)

    return KForm(degree, dim, tag, coeff, dcoeff, d2coeff)


def coordinate_form(dim: int, indices: Sequence[int], scale: complex = 1.0) -> KForm:
    """Scalar form `scale * dx^{i1} ^ ... ^ dx^{ik}` with increasing indices."""
    indices = tuple(indices)
    values = np.zeros((math.comb(dim, len(indices)), 1, 1), dtype=complex)
    values[_index_of(dim, len(indices))[indices]] = scale
    return constant_form(len(indices), dim, values)


# -- pointwise evaluation ---------------------------------------------------


def minors(vectors: Array, m: int) -> Array:
    """Determinants of the k x k column minors of stacked vectors (..., k, m)."""
    k = vectors.shape[-2]
    if k == 0:
        return np.ones(vectors.shape[:-2] + (1,))
    idx = multi_indices(m, k)
    if k == 1:
        return vectors[..., 0, :]
    if k == 2:
        # explicit products keep the transposition sign flip bit-exact
        i, j = np.array(idx).T
        u, v = vectors[..., 0, :], vectors[..., 1, :]
        return u[..., i] * v[..., j] - u[..., j] * v[..., i]
    sub = vectors[..., :, list(idx)]  # (..., k, C, k)
    sub = np.moveaxis(sub, -2, -3)  # (..., C, k, k)
    return np.linalg.det(sub)


def contract(coeffs: Array, vectors: Array, m: int) -> Array:
    """Sum_I coeff_I det(v[I]); coeffs (..., C, n, n), vectors (..., k, m)."""
    return np.einsum("...c,...cab->...ab", minors(vectors, m), coeffs)


def evaluate_array(f: KForm, points, vectors) -> Array:
    """Vectorised evaluation: points (..., m), vectors (..., k, m) -> (..., n, n)."""
    points = np.asarray(points, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    return contract(f.coefficients(points), vectors, f.dim)


def _as_vectors(f: KForm, p, vectors, k: int):
    p = np.asarray(p, dtype=float)
    if p.shape != (f.dim,):
        raise FormError(f"point has shape {p.shape}, chart dimension is {f.dim}")
    if len(vectors) != k:
        raise FormError(f"expected {k} vectors, got {len(vectors)}")
    vs = np.array(vectors, dtype=float).reshape(k, -1)
    if vs.shape[1] != f.dim:
        raise FormError(f"vectors must have length {f.dim}")
    return p, vs


def _lie(tag: AlgebraTag, m) -> LieValue:
    # scalar-valued results of non-scalar forms are carried as gl values
    return LieValue(tag, m)


def evaluate(f: KForm, p, *vectors) -> LieValue:
    p, vs = _as_vectors(f, p, vectors, f.degree)
    return _lie(f.tag, evaluate_array(f, p, vs))


# -- derivatives ------------------------------------------------------------


def fd_step(points: Array) -> Array:
    return 1e-4 * np.maximum(1.0, np.max(np.abs(points), axis=-1))


def fd_partials(fn: CoeffFn, points: Array) -> Array:
    """All first partials of `fn` by 4th-order central differences plus one
    Richardson step; returns (..., m, *fn_shape)."""
    points = np.asarray(points, dtype=float)
    m = points.shape[-1]
    h = fd_step(points)
    out = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0

        def central(step):
            s = step[..., None]
            f1, f2 = fn(points + s * e), fn(points + 2 * s * e)
            g1, g2 = fn(points - s * e), fn(points - 2 * s * e)
            d = (8.0 * (f1 - g1) - (f2 - g2)) / 12.0
            return d / step.reshape(step.shape + (1,) * (d.ndim - step.ndim))

        out.append((16.0 * central(h) - central(2 * h)) / 15.0)
    return np.stack(out, axis=points.ndim - 1)


def partials(f: KForm, points) -> Array:
    points = np.asarray(points, dtype=float)
    if f.dcoeff is not None:
        return np.asarray(f.dcoeff(points), dtype=complex)
    return fd_partials(f.coefficients, points)


def second_partials(f: KForm, points) -> Array:
    points = np.asarray(points, dtype=float)
    if f.d2coeff is not None:
        return np.asarray(f.d2coeff(points), dtype=complex)
    return fd_partials(lambda q: partials(f, q), points)


@lru_cache(maxsize=None)
def _d_table(m: int, k: int):
    """For each (k+1)-index J: list of (sign, direction, position of J minus J_r)."""
    pos = _index_of(m, k)
    table = []
    for J in multi_indices(m, k + 1):
        table.append([((-1) ** r, J[r], pos[J[:r] + J[r + 1:]]) for r in range(k + 1)])
    return table


def _d_coeffs(m: int, k: int, grad: Array) -> Array:
    """Coefficients of d(alpha) from partials laid out as (..., m, C, n, n).

    Only the last direction axis is consumed, so extra leading derivative axes
    pass through untouched.
    """
    table = _d_table(m, k)
    axis = grad.ndim - 4  # direction axis of this derivative
    terms = []
    for row in table:
        acc = 0
        for sign, j, c in row:
            acc = acc + sign * np.take(np.take(grad, j, axis=axis), c, axis=axis)
        terms.append(acc)
    return np.stack(terms, axis=grad.ndim - 4)


def exterior_derivative_form(f: KForm) -> KForm:
    if f.degree >= MAX_DEGREE:
        raise FormError("exterior derivative of a top-degree form")
    m, k = f.dim, f.degree

    def coeff(p):
        return _d_coeffs(m, k, partials(f, p))

    dcoeff = None
    if f.dcoeff is not None and f.d2coeff is not None:
        def dcoeff(p):
            # (..., i, j, C): differentiate along i, form index from j
            return _d_coeffs(m, k, second_partials(f, p))

    return KForm(k + 1, m, f.tag, coeff, dcoeff, None, f.domain)


def exterior_derivative(f: KForm, p, *vectors) -> LieValue:
    if f.degree > 3:
        raise FormError("exterior derivative needs degree <= 3")
    return evaluate(exterior_derivative_form(f), p, *vectors)


# -- antisymmetrised pairings ------------------------------------------------

PAIRINGS: dict[str, Callable[[Array, Array], Array]] = {
    "bracket": commutator,
    "scalar-multiply": lambda x, y: x @ y,
    "trace-pair": lambda x, y: np.trace(x @ y, axis1=-2, axis2=-1)[..., None, None],
}


def _pairing(pairing, f: KForm, g: KForm):
    if callable(pairing):
        return pairing
    if pairing not in PAIRINGS:
        raise FormError(f"unknown pairing {pairing!r}")
    if pairing == "bracket" and f.tag != g.tag:
        raise FormError("bracket pairing needs equal algebras")
    if pairing == "scalar-multiply" and f.n != g.n and 1 not in (f.n, g.n):
        raise FormError("incompatible pairing/tags")
    if pairing == "trace-pair" and f.n != g.n:
        raise FormError("incompatible pairing/tags")
    if pairing == "scalar-multiply" and 1 in (f.n, g.n) and f.n != g.n:
        return lambda x, y: x * y
    return PAIRINGS[pairing]


def wedge_pair_array(f: KForm, g: KForm, pairing, points, vectors) -> Array:
    """(1/(j! k!)) sum_sigma sign(sigma) P(f(v_s1..v_sj), g(v_s(j+1)..v_s(j+k))).

    With this normalisation dx ^ dy evaluates to 1 on (e_x, e_y), and a single
    2-form paired with a linear invariant reproduces its pointwise value.
    """
    pair = _pairing(pairing, f, g)
    j, k = f.degree, g.degree
    points = np.asarray(points, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    cf, cg = f.coefficients(points), g.coefficients(points)
    total = 0
    for perm, sign in permutations_with_sign(j + k):
        vf = vectors[..., list(perm[:j]), :]
        vg = vectors[..., list(perm[j:]), :]
        total = total + sign * pair(contract(cf, vf, f.dim), contract(cg, vg, g.dim))
    return total / (math.factorial(j) * math.factorial(k))


def wedge_pair(f: KForm, g: KForm, pairing, p, *vectors):
    p = np.asarray(p, dtype=float)
    if f.dim != g.dim:
        raise FormError("forms live on different charts")
    _, vs = _as_vectors(f, p, vectors, f.degree + g.degree)
    out = wedge_pair_array(f, g, pairing, p, vs)
    if pairing == "bracket":
        return LieValue(f.tag, out)
    return complex(out[0, 0]) if out.shape == (1, 1) else out


# -- pullback -----------------------------------------------------------------


def pullback_array(f: KForm, patch, params, wvecs) -> Array:
    """f at patch(q) on the pushed-forward vectors J(q) w_i."""
    params = np.asarray(params, dtype=float)
    x = patch.map(params)
    jac = patch.jacobian(params)  # (..., m, d)
    pushed = np.einsum("...md,...kd->...km", jac, np.asarray(wvecs, dtype=float))
    return evaluate_array(f, x, pushed)


def pullback(f: KForm, patch, q, *w) -> LieValue:
    q = np.asarray(q, dtype=float)
    if len(w) != f.degree:
        raise FormError(f"expected {f.degree} parameter vectors")
    if q.shape != (patch.dim,):
        raise FormError("parameter point has wrong dimension")
    x = patch.map(q)
    if np.shape(x)[-1] != f.dim:
        raise FormError("patch does not map into the form's chart")
    ws = np.array(w, dtype=float).reshape(f.degree, patch.dim)
    return _lie(f.tag, pullback_array(f, patch, q, ws))
