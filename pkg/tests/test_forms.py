import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gencon.forms import (FormError, KForm, constant_form, coordinate_form, evaluate,
                          exterior_derivative, exterior_derivative_form, multi_indices,
                          partials, pullback, wedge_pair)
from gencon.liealg import SCALAR, SU2, U1, gl
from gencon.quadrature import SurfacePatch, circle, sphere

from strategies import points4

M = 4
E = np.eye(M)


def exp_form(degree, amps, rates, tag=SCALAR, analytic=True):
    """Coefficients amps_I * exp(rates . x); derivatives are exact."""
    amps = np.asarray(amps, dtype=complex).reshape(math.comb(M, degree), tag.n, tag.n)
    rates = np.asarray(rates, dtype=float)

    def coeff(p):
        return np.exp(p @ rates)[..., None, None, None] * amps

    def dcoeff(p):
        return rates[:, None, None, None] * coeff(p)[..., None, :, :, :]

    def d2coeff(p):
        rr = np.outer(rates, rates)[:, :, None, None, None]
        return rr * coeff(p)[..., None, None, :, :, :]

    if not analytic:
        return KForm(degree, M, tag, coeff)
    return KForm(degree, M, tag, coeff, dcoeff, d2coeff)


@st.composite
def smooth_forms(draw, degree=None, analytic=True):
    k = draw(st.integers(0, 2)) if degree is None else degree
    c = math.comb(M, k)
    vals = st.floats(-1, 1, allow_nan=False)
    amps = np.array(draw(st.lists(vals, min_size=c, max_size=c)))
    rates = np.array(draw(st.lists(st.floats(-0.8, 0.8), min_size=M, max_size=M)))
    return exp_form(k, amps, rates, analytic=analytic)


def wire_potential(eps=1.0, alpha=1.0):
    def coeff(p):
        x, y = p[..., 0], p[..., 1]
        d = x * x + y * y + eps * eps
        out = np.zeros(p.shape[:-1] + (M, 1, 1), dtype=complex)
        out[..., 0, 0, 0] = -1j * alpha * y / d
        out[..., 1, 0, 0] = 1j * alpha * x / d
        return out

    return KForm(1, M, U1, coeff)


def test_multi_indices_lexicographic():
    assert multi_indices(4, 2) == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
    assert multi_indices(3, 0) == ((),)


def test_evaluate_examples():
    dx = coordinate_form(M, (0,))
    assert evaluate(dx, np.zeros(M), E[0]).entries[0, 0] == 1.0
    A = wire_potential()
    val = evaluate(A, np.array([1.0, 0, 0, 0]), E[1])
    assert val.tag == U1
    assert val.entries[0, 0] == pytest.approx(0.5j, abs=1e-15)


def test_evaluate_dimension_errors():
    dx = coordinate_form(M, (0,))
    with pytest.raises(FormError):
        evaluate(dx, np.zeros(3), E[0])
    with pytest.raises(FormError):
        evaluate(dx, np.zeros(M), E[0], E[1])
    with pytest.raises(FormError):
        evaluate(dx, np.zeros(M), np.ones(3))


def test_form_caps():
    with pytest.raises(FormError):
        KForm(5, M, SCALAR, lambda p: p)
    with pytest.raises(FormError):
        KForm(1, 8, SCALAR, lambda p: p)


@given(smooth_forms(2), points4, points4)
def test_repeated_argument_vanishes(f, p, v):
    assert evaluate(f, p, v, v).norm() == 0.0


@given(smooth_forms(2), points4, points4, points4)
def test_alternating_exact_sign_flip(f, p, u, v):
    a = evaluate(f, p, u, v).entries
    b = evaluate(f, p, v, u).entries
    assert np.array_equal(a, -b)


def test_exterior_derivative_examples():
    p = np.array([0.3, -0.2, 0.5, 0.1])
    zero = exterior_derivative(constant_form(1, M, np.arange(4.0)), p, E[0], E[1])
    assert zero.norm() == 0.0

    # x dy, with finite-difference derivatives
    def coeff(q):
        out = np.zeros(q.shape[:-1] + (M, 1, 1), dtype=complex)
        out[..., 1, 0, 0] = q[..., 0]
        return out

    xdy = KForm(1, M, SCALAR, coeff)
    assert exterior_derivative(xdy, p, E[0], E[1]).entries[0, 0] == pytest.approx(1.0, abs=1e-10)

    A = wire_potential()
    val = exterior_derivative(A, np.zeros(M), E[0], E[1]).entries[0, 0]
    assert val == pytest.approx(2j, abs=1e-9)


def test_exterior_derivative_needs_low_degree():
    f = constant_form(4, M, [1.0])
    with pytest.raises(FormError):
        exterior_derivative(f, np.zeros(M), *E)


def test_analytic_dcoeff_matches_finite_differences(rng):
    for _ in range(5):
        f = exp_form(2, rng.normal(size=6), rng.normal(size=4) * 0.5)
        g = exp_form(2, np.array(f.coeff(np.zeros(4))).ravel(), np.zeros(4), analytic=False)
        p = rng.uniform(-1, 1, size=4)
        fd = KForm(2, M, SCALAR, f.coeff)
        a, b = partials(f, p), partials(fd, p)
        assert np.allclose(a, b, rtol=1e-5, atol=1e-9)
        assert g.dcoeff is None


@given(smooth_forms(), points4)
def test_d_squared_zero_analytic(f, p):
    if f.degree > 2:
        return
    dd = exterior_derivative_form(exterior_derivative_form(f))
    assert np.max(np.abs(dd.coefficients(p))) <= 1e-8


@given(smooth_forms(analytic=False), points4)
def test_d_squared_zero_finite_differences(f, p):
    dd = exterior_derivative_form(exterior_derivative_form(f))
    scale = max(1.0, float(np.max(np.abs(f.coefficients(p)))))
    assert np.max(np.abs(dd.coefficients(p))) <= 1e-4 * scale


def _wedge_form(f, g):
    """Scalar wedge product as a KForm (coefficients on increasing indices)."""
    j, k = f.degree, g.degree
    targets = multi_indices(M, j + k)

    def coeff(p):
        out = []
        for idx in targets:
            vecs = np.array([E[i] for i in idx])
            out.append(np.stack([wedge_pair(f, g, "scalar-multiply", q, *vecs) for q in
                                 np.atleast_2d(p)]))
        return np.array(out).T.reshape(np.shape(p)[:-1] + (len(targets), 1, 1))

    return KForm(j + k, M, SCALAR, coeff)


@pytest.mark.parametrize("j,k", [(0, 1), (1, 1), (0, 2)])
def test_leibniz(rng, j, k):
    f = exp_form(j, rng.normal(size=math.comb(M, j)), rng.normal(size=M) * 0.4)
    g = exp_form(k, rng.normal(size=math.comb(M, k)), rng.normal(size=M) * 0.4)
    fg = _wedge_form(f, g)
    p = rng.uniform(-0.5, 0.5, size=M)
    vecs = [rng.normal(size=M) for _ in range(j + k + 1)]
    lhs = exterior_derivative(fg, p, *vecs).entries[0, 0]
    df, dg = exterior_derivative_form(f), exterior_derivative_form(g)
    rhs = wedge_pair(df, g, "scalar-multiply", p, *vecs)
    rhs += (-1) ** j * wedge_pair(f, dg, "scalar-multiply", p, *vecs)
    assert lhs == pytest.approx(rhs, abs=1e-6)


def test_wedge_examples():
    dx, dy = coordinate_form(M, (0,)), coordinate_form(M, (1,))
    assert wedge_pair(dx, dy, "scalar-multiply", np.zeros(M), E[0], E[1]) == pytest.approx(1.0)
    a = constant_form(1, M, np.array([1j, 2j, 0, -1j]), U1)
    b = constant_form(1, M, np.array([0.5j, 0, 3j, 1j]), U1)
    br = wedge_pair(a, b, "bracket", np.zeros(M), E[0], E[2])
    assert br.norm() == 0.0


def test_trace_pair_matches_brute_force_permutation_sum():
    h = np.diag([1j, -1j])
    F = constant_form(2, M, np.array([h if i == (0, 1) else 0 * h for i in multi_indices(M, 2)]),
                      SU2)
    rot = np.array([[0, 1], [-1, 0]], dtype=complex) * 0.5 + h * 0.25
    G = constant_form(2, M, np.array([rot if i == (2, 3) else 0 * h for i in multi_indices(M, 2)]),
                      gl(2))
    got = wedge_pair(F, G, "trace-pair", np.zeros(M), *E)

    def sign(perm):
        s, perm = 1, list(perm)
        for i in range(len(perm)):
            while perm[i] != i:
                j = perm[i]
                perm[i], perm[j] = perm[j], perm[i]
                s = -s
        return s

    def val2(mat, slots, u, v):
        out = 0
        for (i, j), c in zip(multi_indices(M, 2), slots):
            out = out + c * (u[i] * v[j] - u[j] * v[i])
        return out

    fs = [h if i == (0, 1) else 0 * h for i in multi_indices(M, 2)]
    gs = [rot if i == (2, 3) else 0 * h for i in multi_indices(M, 2)]
    total = 0
    for perm in itertools.permutations(range(4)):
        a = val2(None, fs, E[perm[0]], E[perm[1]])
        b = val2(None, gs, E[perm[2]], E[perm[3]])
        total += sign(perm) * np.trace(a @ b)
    assert got == pytest.approx(total / 4, abs=1e-14)
    assert got == pytest.approx(np.trace(h @ rot), abs=1e-14)


def test_incompatible_pairing():
    a = constant_form(1, M, np.zeros((4, 2, 2)), SU2)
    b = constant_form(1, M, np.zeros((4, 1, 1)), U1)
    with pytest.raises(FormError):
        wedge_pair(a, b, "bracket", np.zeros(M), E[0], E[1])
    with pytest.raises(FormError):
        wedge_pair(a, b, "trace-pair", np.zeros(M), E[0], E[1])


def test_pullback_examples():
    def coeff(p):
        x, y = p[..., 0], p[..., 1]
        d = x * x + y * y
        out = np.zeros(p.shape[:-1] + (M, 1, 1), dtype=complex)
        out[..., 0, 0, 0] = -y / d
        out[..., 1, 0, 0] = x / d
        return out

    dphi = KForm(1, M, SCALAR, coeff)
    loop = circle(1.0)
    for t in (0.0, 0.7, 2.5, 5.0):
        assert pullback(dphi, loop, [t], [1.0]).entries[0, 0] == pytest.approx(1.0, abs=1e-14)

    const = SurfacePatch(2, (0, 0), (1, 1), lambda q: np.zeros(np.shape(q)[:-1] + (M,)) + 0.3,
                         lambda q: np.zeros(np.shape(q)[:-1] + (M, 2)))
    f = exp_form(2, np.arange(6.0), [0.1, 0.2, 0.3, 0.4])
    assert pullback(f, const, [0.5, 0.5], [1, 0], [0, 1]).norm() == 0.0


def test_pullback_to_sphere_at_pole_matches_fd_jacobian():
    north, _ = sphere(1.0)
    dxdy = coordinate_form(M, (0, 1))
    q = np.array([0.0, 0.4])
    h = 1e-6
    cols = [(north.map(q + h * e) - north.map(q - h * e)) / (2 * h) for e in np.eye(2)]
    direct = evaluate(dxdy, north.map(q), cols[0], cols[1]).entries[0, 0]
    got = pullback(dxdy, north, q, [1, 0], [0, 1]).entries[0, 0]
    assert got == pytest.approx(direct, abs=1e-8)
    # at the pole itself the azimuth column vanishes
    assert got == pytest.approx(0.0, abs=1e-12)
    q = np.array([0.3, 1.1])
    cols = [(north.map(q + h * e) - north.map(q - h * e)) / (2 * h) for e in np.eye(2)]
    direct = evaluate(dxdy, north.map(q), cols[0], cols[1]).entries[0, 0]
    got = pullback(dxdy, north, q, [1, 0], [0, 1]).entries[0, 0]
    assert got == pytest.approx(direct, abs=1e-8)
