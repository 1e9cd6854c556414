"""Gauge potentials, curvature, gauge transformations and connections on U x G.

Bundle tangents at (x, g) are left-trivialised: (v, B) is the velocity of
t -> (x + t v, g exp(tB)).  In these coordinates the right action by h sends
(v, B) at (x, g) to (v, ad(h^-1) B) at (x, gh), and the connection built
from a local potential A reads omega_(x,g)(v, B) = ad(g^-1) A_x(v) + B.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .colombeau import EpsilonFamily, EpsilonLadder, NumericalError
from .forms import KForm, evaluate, evaluate_array, multi_indices, partials, second_partials
from .liealg import (SCALAR, SU2, AlgebraTag, GroupElement, LieValue, commutator, expm_array,
                     from_coords, inverse_array, to_coords)


class CanonicalizationError(NumericalError):
    pass


@dataclass(frozen=True)
class GaugePotential:
    family: EpsilonFamily
    tag: AlgebraTag
    name: str = ""

    def at(self, eps: float) -> KForm:
        form = self.family.make(eps)
        if form.degree != 1 or form.tag != self.tag:
            raise ValueError("gauge potential members must be 1-forms with the potential's algebra")
        return form

    @classmethod
    def from_form(cls, form: KForm, name: str = "") -> GaugePotential:
        return cls(EpsilonFamily.constant(form, name), form.tag, name)


def _components(form: KForm, points) -> np.ndarray:
    """Coefficients A_i of a 1-form, shape (..., m, n, n)."""
    return form.coefficients(points)


def curvature_form(A: KForm) -> KForm:
    """F_ij = d_i A_j - d_j A_i + [A_i, A_j] as a 2-form."""
    m = A.dim
    pairs = multi_indices(m, 2)
    ii = [i for i, _ in pairs]
    jj = [j for _, j in pairs]

    def coeff(p):
        a = _components(A, p)
        da = partials(A, p)  # (..., dir, comp, n, n)
        return (da[..., ii, jj, :, :] - da[..., jj, ii, :, :]
                + commutator(a[..., ii, :, :], a[..., jj, :, :]))

    dcoeff = None
    if A.dcoeff is not None:
        def dcoeff(p):
            a = _components(A, p)
            da = partials(A, p)
            d2a = second_partials(A, p)  # (..., k, dir, comp, n, n)
            lhs = d2a[..., :, ii, jj, :, :] - d2a[..., :, jj, ii, :, :]
            ai, aj = a[..., None, ii, :, :], a[..., None, jj, :, :]
            dai, daj = da[..., :, ii, :, :], da[..., :, jj, :, :]
            return lhs + commutator(dai, aj) + commutator(ai, daj)

    return KForm(2, m, A.tag, coeff, dcoeff, None, A.domain)


def curvature(A: GaugePotential, eps: float, p, u, v) -> LieValue:
    return evaluate(curvature_form(A.at(eps)), p, u, v)


def bianchi_residual(A: KForm, points) -> float:
    """max |d_i F_jk + cyclic + [A_i, F_jk] + cyclic| over the points."""
    F = curvature_form(A)
    m = A.dim
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = _components(A, points)
    f = F.coefficients(points)
    df = partials(F, points)
    pos = {idx: c for c, idx in enumerate(multi_indices(m, 2))}
    worst = 0.0
    for i, j, k in multi_indices(m, 3):
        total = 0
        for (x, y, z) in ((i, j, k), (j, k, i), (k, i, j)):
            yz = (y, z) if y < z else (z, y)
            sign = 1 if y < z else -1
            fyz = sign * f[..., pos[yz], :, :]
            total = total + sign * df[..., x, pos[yz], :, :] + commutator(a[..., x, :, :], fyz)
        worst = max(worst, float(np.max(np.abs(total))))
    return worst


def gauge_transform(A: GaugePotential, g: Callable, dg: Callable | None,
                    d2g: Callable | None = None) -> GaugePotential:
    """A -> ad(g^-1) A + g^-1 dg, with g, dg, d2g vectorised over points.

    g(points) -> (..., n, n); dg -> (..., m, n, n); d2g -> (..., m, m, n, n).
    """
    if dg is None:
        raise ValueError("gauge transformation needs the differential of g")
    tag = A.tag

    def transform(form: KForm) -> KForm:
        def coeff(p):
            gm = np.asarray(g(p), dtype=complex)
            gi = inverse_array(tag, gm)[..., None, :, :]
            return gi @ form.coefficients(p) @ gm[..., None, :, :] + gi @ np.asarray(dg(p))

        dcoeff = None
        if d2g is not None and form.dcoeff is not None:
            def dcoeff(p):
                gm = np.asarray(g(p), dtype=complex)[..., None, None, :, :]
                gi = inverse_array(tag, gm)
                dgm = np.asarray(dg(p), dtype=complex)
                dk = dgm[..., :, None, :, :]  # derivative direction k
                di = dgm[..., None, :, :, :]  # component i
                dgi = -gi @ dk @ gi
                a = form.coefficients(p)[..., None, :, :, :]
                da = partials(form, p)
                return (dgi @ a @ gm + gi @ da @ gm + gi @ a @ dk
                        + dgi @ di + gi @ np.asarray(d2g(p), dtype=complex))

        return KForm(1, form.dim, tag, coeff, dcoeff, None, form.domain)

    return GaugePotential(EpsilonFamily(lambda eps: transform(A.at(eps)),
                                        f"gauge transform of {A.name}"), tag, A.name)


# -- su(2) diagonal / off-diagonal split --------------------------------------


def su2_split(a: KForm) -> tuple[KForm, KForm]:
    """a = [[a_D, a_T], [-conj(a_T), -a_D]] -> (a_D, a_T) as complex scalar forms."""
    if a.tag != SU2:
        raise ValueError("su2_split needs an su(2)-valued form")

    def entry(r, c):
        def coeff(p):
            return a.coefficients(p)[..., r:r + 1, c:c + 1]

        dcoeff = None
        if a.dcoeff is not None:
            def dcoeff(p):
                return partials(a, p)[..., r:r + 1, c:c + 1]
        return KForm(a.degree, a.dim, SCALAR, coeff, dcoeff, None, a.domain)

    return entry(0, 0), entry(0, 1)


def su2_assemble(diag, trans) -> np.ndarray:
    """Inverse of su2_split on coefficient arrays (..., 1, 1) -> (..., 2, 2)."""
    d, t = np.asarray(diag)[..., 0, 0], np.asarray(trans)[..., 0, 0]
    return np.stack([np.stack([d, t], -1), np.stack([-np.conj(t), -d], -1)], -2)


def _wedge11(a, b, u, v):
    """(a ^ b)(u, v) = a(u) b(v) - a(v) b(u) for scalar 1-form values."""
    return a(u) * b(v) - a(v) * b(u)


def bracket_split_identities(a: KForm, b: KForm, p, u, v) -> dict:
    """Both sides of [a,b]_D = -2i Im(a_T ^ conj b_T) and [a,b]_T = 2(a_D ^ b_T - a_T ^ b_D).

    The bracket of 1-forms is [a ^ b](u, v) = [a(u), b(v)] - [a(v), b(u)].
    """
    if a.tag != SU2 or b.tag != SU2:
        raise ValueError("bracket split identities need su(2)-valued forms")

    def val(form):
        return lambda w: evaluate(form, p, w).entries

    A, B = val(a), val(b)
    lhs = commutator(A(u), B(v)) - commutator(A(v), B(u))
    aD, aT = (lambda w: A(w)[0, 0]), (lambda w: A(w)[0, 1])
    bD, bT = (lambda w: B(w)[0, 0]), (lambda w: B(w)[0, 1])
    d_rhs = -2j * _wedge11(aT, lambda w: np.conj(bT(w)), u, v).imag
    t_rhs = 2 * (_wedge11(aD, bT, u, v) - _wedge11(aT, bD, u, v))
    return {"D": (complex(lhs[0, 0]), complex(d_rhs)), "T": (complex(lhs[0, 1]), complex(t_rhs))}


# -- connections on the trivial bundle U x G ----------------------------------


@dataclass(frozen=True)
class BundleTangent:
    base: np.ndarray
    fiber: np.ndarray  # algebra matrix B


@dataclass(frozen=True)
class BundleForm:
    """evaluate(x, g, *tangents) -> algebra matrix; x a chart point, g a group matrix."""

    evaluate: Callable
    degree: int
    tag: AlgebraTag

    def __call__(self, x, g, *tangents):
        return np.asarray(self.evaluate(np.asarray(x, float), np.asarray(g, complex), *tangents))


def reconstruct_bundle_form(A: GaugePotential | KForm, eps: float | None = None) -> BundleForm:
    form = A if isinstance(A, KForm) else A.at(eps)
    tag = form.tag

    def omega(x, g, t: BundleTangent):
        ax = evaluate_array(form, x, np.asarray(t.base, float)[None, :])
        return inverse_array(tag, g) @ ax @ g + np.asarray(t.fiber, complex)

    return BundleForm(omega, 1, tag)


def bundle_curvature(omega: BundleForm, x, g, X: BundleTangent, Y: BundleTangent,
                     h: float = 1e-3) -> np.ndarray:
    """Omega(X, Y) = X(omega(Y)) - Y(omega(X)) - omega([X, Y]) + [omega(X), omega(Y)].

    X and Y are extended as fields constant in the base and left-invariant in
    the fibre, so [X, Y] = (0, [B_X, B_Y]); directional derivatives use a
    4th-order central stencil with one Richardson step.
    """
    x, g = np.asarray(x, float), np.asarray(g, complex)
    tag = omega.tag

    def along(T: BundleTangent, target: BundleTangent):
        def f(t):
            gt = g @ expm_array(tag, t * np.asarray(T.fiber, complex))
            return omega(x + t * np.asarray(T.base, float), gt, target)

        def central(s):
            return (8 * (f(s) - f(-s)) - (f(2 * s) - f(-2 * s))) / (12 * s)

        return (16 * central(h) - central(2 * h)) / 15

    lie = BundleTangent(np.zeros_like(np.asarray(X.base, float)),
                        commutator(np.asarray(X.fiber, complex), np.asarray(Y.fiber, complex)))
    wx, wy = omega(x, g, X), omega(x, g, Y)
    return along(X, Y) - along(Y, X) - omega(x, g, lie) + commutator(wx, wy)


def group_lattice(tag: AlgebraTag) -> list[np.ndarray]:
    """32 phases for U(1); 50 low-discrepancy points of SU(2)."""
    if tag.kind == "u1":
        return [np.array([[np.exp(2j * np.pi * k / 32)]]) for k in range(32)]
    if tag == SU2:
        u = qmc.Halton(d=3, scramble=False).random(51)[1:]
        out = []
        for u1, u2, u3 in u:
            # uniform unit quaternion from three uniforms (Shoemake)
            a, b = np.sqrt(1 - u1), np.sqrt(u1)
            q = (a * np.sin(2 * np.pi * u2), a * np.cos(2 * np.pi * u2),
                 b * np.sin(2 * np.pi * u3), b * np.cos(2 * np.pi * u3))
            w, xq, yq, zq = q
            out.append(np.array([[w + 1j * zq, yq + 1j * xq], [-yq + 1j * xq, w - 1j * zq]]))
        return out
    raise ValueError("group lattices exist for U(1) and SU(2) only")


def random_group(tag: AlgebraTag, rng: np.random.Generator) -> np.ndarray:
    if tag.kind == "u1":
        return np.array([[np.exp(1j * rng.uniform(-np.pi, np.pi))]])
    if tag == SU2:
        q = rng.normal(size=4)
        w, x, y, z = q / np.linalg.norm(q)
        return np.array([[w + 1j * z, y + 1j * x], [-y + 1j * x, w - 1j * z]])
    raise ValueError("random group elements exist for U(1) and SU(2) only")


def random_algebra(tag: AlgebraTag, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return from_coords(tag, scale * rng.normal(size=tag.real_dim))


def random_samples(tag: AlgebraTag, lower, upper, count: int, seed: int = 0):
    """(x, g, tangent) triples with x uniform in the box [lower, upper]."""
    rng = np.random.default_rng(seed)
    lower, upper = np.asarray(lower, float), np.asarray(upper, float)
    out = []
    for _ in range(count):
        x = rng.uniform(lower, upper)
        t = BundleTangent(rng.normal(size=len(lower)), random_algebra(tag, rng))
        out.append((x, random_group(tag, rng), t))
    return out


@dataclass
class AxiomResiduals:
    eps: np.ndarray
    res_i: np.ndarray
    res_ii: np.ndarray


def axiom_defects(omega: BundleForm, samples, g_lattice) -> tuple[float, float]:
    """sup ||omega(0, B) - B|| and sup ||omega_(x,gh)(v, ad(h^-1)B) - ad(h^-1) omega_(x,g)(v, B)||."""
    tag = omega.tag
    r1 = r2 = 0.0
    for x, g, t in samples:
        vert = BundleTangent(np.zeros_like(np.asarray(t.base, float)), t.fiber)
        r1 = max(r1, float(np.linalg.norm(omega(x, g, vert) - t.fiber)))
        base_val = omega(x, g, t)
        for h in g_lattice:
            hi = inverse_array(tag, h)
            moved = BundleTangent(t.base, hi @ t.fiber @ h)
            defect = omega(x, g @ h, moved) - hi @ base_val @ h
            r2 = max(r2, float(np.linalg.norm(defect)))
    return r1, r2


def check_axioms(fam, samples, g_lattice, ladder: EpsilonLadder | None = None) -> AxiomResiduals:
    """Residual ladders of the vertical-reproduction and equivariance conditions."""
    ladder = EpsilonLadder() if ladder is None else ladder
    make = fam.make if hasattr(fam, "make") else fam
    res = np.array([axiom_defects(make(eps), samples, g_lattice) for eps in ladder.eps])
    return AxiomResiduals(ladder.eps, res[:, 0], res[:, 1])


def fiber_block(omega: BundleForm, x) -> np.ndarray:
    """Real matrix of B -> omega_(x,e)(0, B) in the algebra basis."""
    tag = omega.tag
    e = np.eye(tag.n, dtype=complex)
    zero = np.zeros(len(x))
    cols = [to_coords(tag, omega(x, e, BundleTangent(zero, from_coords(tag, c))))
            for c in np.eye(tag.real_dim)]
    return np.array(cols).T


def canonicalize(omega, eps: float | None = None, cond_max: float = 1e10) -> BundleForm:
    """Connection whose horizontal space at (x, e) is ker omega_(x,e), extended equivariantly.

    At the identity the result is M^-1 omega_(x,e) with M the fibre block, so
    it reproduces B exactly on vertical vectors; at (x, g) it is
    ad(g^-1) of that value on (v, ad(g) B).
    """
    if not isinstance(omega, BundleForm):
        omega = omega.make(eps) if hasattr(omega, "make") else omega(eps)
    tag = omega.tag
    e = np.eye(tag.n, dtype=complex)

    def solve(x):
        M = fiber_block(omega, x)
        if not np.all(np.isfinite(M)) or np.linalg.cond(M) > cond_max:
            raise CanonicalizationError("ε too large: vertical block degenerate")
        return M

    def canon(x, g, t: BundleTangent):
        gi = inverse_array(tag, g)
        moved = BundleTangent(t.base, g @ np.asarray(t.fiber, complex) @ gi)
        val = to_coords(tag, omega(x, e, moved))
        fixed = from_coords(tag, np.linalg.solve(solve(x), val))
        return gi @ fixed @ g

    return BundleForm(canon, 1, tag)


def canonical_range(family, samples, ladder) -> int:
    """Index of the largest ladder epsilon from which canonicalize succeeds on every sample.

    This is the empirical stand-in for the existential epsilon_0; returns
    len(ladder.eps) when no suffix of the ladder works.
    """
    start = len(ladder.eps)
    for i in range(len(ladder.eps) - 1, -1, -1):
        canon = canonicalize(family.make(ladder.eps[i]))
        try:
            for x, g, t in samples:
                canon(x, g, t)
        except CanonicalizationError:
            break
        start = i
    return start


def bundle_form_distance(a: BundleForm, b: BundleForm, samples) -> float:
    return max(float(np.linalg.norm(a(x, g, t) - b(x, g, t))) for x, g, t in samples)


def as_group(tag: AlgebraTag, m) -> GroupElement:
    return GroupElement(tag, m)


__all__ = [
    "AxiomResiduals", "BundleForm", "BundleTangent", "CanonicalizationError", "GaugePotential",
    "axiom_defects", "bianchi_residual", "bracket_split_identities", "bundle_curvature",
    "bundle_form_distance", "canonical_range", "canonicalize", "check_axioms", "curvature", "curvature_form",
    "fiber_block", "gauge_transform", "group_lattice", "random_algebra", "random_group",
    "random_samples", "reconstruct_bundle_form", "su2_assemble", "su2_split",
]
