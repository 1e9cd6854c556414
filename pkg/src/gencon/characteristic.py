"""Invariant polynomials, Chern forms and Chern numbers of (generalised) connections.

The invariant polynomials come from det(lambda I - A / 2 pi i) = sum_k f_k(A) lambda^(n-k).
A Chern form is built by the antisymmetrised contraction

    f(Omega)(v_1..v_2k) = 1/(2k)! sum_sigma sign(sigma) f(Omega(v_s1, v_s2), ...)

rescaled by (2k)!/2^k.  That constant converts the 1/(2k)! normalisation
(natural when wedge products carry no factorials) to the determinant
convention used by `forms`, so c_1 = f_1(F) pointwise and c_2 integrates to
the instanton number; it is pinned by the BPST test in the suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .colombeau import EpsilonLadder, GeneralizedNumber, extrapolate
from .connection import GaugePotential, curvature_form
from .forms import KForm, exterior_derivative_form, multi_indices, permutations_with_sign
from .liealg import SCALAR, LieValue
from .quadrature import _patches, default_tol, integrate_form

TWO_PI_I = 2j * math.pi
NORMALISATION = {1: 1.0, 2: 6.0}


def _mat(a) -> np.ndarray:
    return np.asarray(a.entries if isinstance(a, LieValue) else a, dtype=complex)


def invariant_poly_array(k: int, *mats) -> np.ndarray:
    """Vectorised f_k; with k arguments it is the symmetric multilinear polarisation."""
    mats = [_mat(m) / TWO_PI_I for m in mats]
    n = mats[0].shape[-1]
    if k > n:
        raise ValueError(f"f_{k} does not exist for {n}x{n} matrices")
    if k == 0:
        return np.ones(mats[0].shape[:-2], dtype=complex)
    if len(mats) == 1:
        mats = mats * k
    if len(mats) != k:
        raise ValueError(f"f_{k} takes 1 or {k} arguments")
    tr = lambda m: np.trace(m, axis1=-2, axis2=-1)  # noqa: E731
    if k == 1:
        return -tr(mats[0])
    a, b = mats
    return 0.5 * (tr(a) * tr(b) - tr(a @ b))


def invariant_poly(k: int, *mats) -> complex:
    return complex(invariant_poly_array(k, *mats))


def _full(F: KForm, coeffs: np.ndarray) -> np.ndarray:
    """Antisymmetric (..., m, m, n, n) from 2-form coefficients (..., C, n, n)."""
    m = F.dim
    out = np.zeros(coeffs.shape[:-3] + (m, m) + coeffs.shape[-2:], dtype=complex)
    for c, (i, j) in enumerate(multi_indices(m, 2)):
        out[..., i, j, :, :] = coeffs[..., c, :, :]
        out[..., j, i, :, :] = -coeffs[..., c, :, :]
    return out


def _contraction(k: int, full: np.ndarray, idx: tuple, dfull: np.ndarray | None = None):
    """1/(2k)! sum_sigma sign f_k(Omega(e_s1, e_s2), ...), or its derivative if `dfull`."""
    total = 0
    for perm, sign in permutations_with_sign(2 * k):
        blocks = [(idx[perm[2 * s]], idx[perm[2 * s + 1]]) for s in range(k)]
        args = [full[..., i, j, :, :] for i, j in blocks]
        if dfull is None:
            term = invariant_poly_array(k, *args)
        else:
            term = 0
            for s, (i, j) in enumerate(blocks):
                dargs = list(a[..., None, :, :] for a in args)
                dargs[s] = dfull[..., :, i, j, :, :]
                term = term + invariant_poly_array(k, *dargs)
        total = total + sign * term
    return total / math.factorial(2 * k)


@dataclass(frozen=True)
class ChernForm:
    k: int
    form: KForm


def chern_form_from_curvature(F: KForm, k: int) -> ChernForm:
    if k not in (1, 2):
        raise ValueError("Chern forms are implemented for k = 1, 2")
    if F.n < k:
        raise ValueError(f"c_{k} needs matrices of size >= {k}")
    m = F.dim
    targets = multi_indices(m, 2 * k)
    scale = NORMALISATION[k]

    def coeff(p):
        full = _full(F, F.coefficients(p))
        vals = [_contraction(k, full, idx) for idx in targets]
        return scale * np.stack(vals, axis=-1)[..., None, None]

    dcoeff = None
    if F.dcoeff is not None:
        def dcoeff(p):
            full = _full(F, F.coefficients(p))
            dfull = _full(F, np.asarray(F.dcoeff(p), dtype=complex))
            vals = [_contraction(k, full, idx, dfull) for idx in targets]
            return scale * np.stack(vals, axis=-1)[..., None, None]

    return ChernForm(k, KForm(2 * k, m, SCALAR, coeff, dcoeff, None, F.domain))


def chern_form(A: GaugePotential | KForm, eps: float | None, k: int) -> ChernForm:
    form = A if isinstance(A, KForm) else A.at(eps)
    return chern_form_from_curvature(curvature_form(form), k)


def closedness_residual(cf: ChernForm | KForm, samples) -> float:
    """max |d(c_k)| over sample points, on coordinate multi-vectors."""
    form = cf.form if isinstance(cf, ChernForm) else cf
    if form.degree == form.dim:
        return 0.0  # top-degree forms are closed
    d = exterior_derivative_form(form)
    return float(np.max(np.abs(d.coefficients(np.atleast_2d(np.asarray(samples, float))))))


@dataclass
class ChernResult:
    net: GeneralizedNumber
    limit: complex
    err_est: float
    order: float


def chern_number(A: GaugePotential, surface, ladder: EpsilonLadder | None = None, k: int = 1,
                 tol: float | None = None, allow_boundary: bool = False) -> ChernResult:
    """Integral of c_k over a closed 2k-dimensional surface per ladder entry, extrapolated."""
    patches = _patches(surface)
    if not allow_boundary and not all(p.closed for p in patches):
        raise ValueError("Chern numbers need a closed surface")
    if any(p.dim != 2 * k for p in patches):
        raise ValueError(f"c_{k} integrates over {2 * k}-dimensional surfaces")
    ladder = EpsilonLadder() if ladder is None else ladder
    vals, errs = [], []
    for eps in ladder.eps:
        cf = chern_form(A, eps, k)
        t = default_tol(eps) if tol is None else tol
        res = integrate_form(cf.form, patches, t, min_scale=eps)
        vals.append(res.value)
        errs.append(res.error)
    net = GeneralizedNumber(ladder, np.array(vals))
    if len(vals) < 6:
        return ChernResult(net, complex(vals[-1]), float(max(errs)), math.nan)
    fit = extrapolate(net)
    return ChernResult(net, fit.limit, max(fit.err_est, errs[-1]), fit.order)
