import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gencon.colombeau import EpsilonLadder
from gencon.connection import GaugePotential, gauge_transform, random_group
from gencon.forms import constant_form
from gencon.holonomy import (ChartExitError, circle_curve, concatenate, connection_coefficients,
                             covariant_derivative, holonomy, holonomy_net,
                             parallel_transport_vector, reparameterize, reverse, segment_curve,
                             transport)
from gencon.liealg import SU2, U1, GroupElement, group_defect
from gencon.scenarios import flat_wire

from gauges import su2_gauge
from strategies import unit_quaternions

M = 4
EPS = 0.1


def zero_potential(tag=SU2):
    return GaugePotential.from_form(constant_form(1, M, np.zeros((M, tag.n, tag.n)), tag))


def small_circle():
    # starts at (1, 0, 0, 0), like the unit circle, but does not wind around the axis
    return circle_curve(0.25, center=(0.75, 0, 0, 0))


def test_zero_potential_transport_is_trivial(rng):
    g0 = random_group(SU2, rng)
    res = transport(zero_potential(), EPS, circle_curve(1.0), g0)
    assert np.allclose(res.g_end.entries, g0, atol=1e-14)


def test_wire_singular_holonomy():
    res = transport(flat_wire(0.25).singular, None, circle_curve(1.0), np.eye(1))
    assert abs(res.g_end.entries[0, 0] - (-1j)) <= 1e-8


def test_su2_singular_holonomy(su2_flat):
    g = holonomy(su2_flat.singular, None, circle_curve(1.0))
    want = np.diag([np.exp(-0.6j * np.pi), np.exp(0.6j * np.pi)])
    assert np.linalg.norm(g.entries - want, 2) <= 1e-8


def test_wire_holonomy_net_limit():
    sc = flat_wire(0.25)
    net = holonomy_net(sc.potential, circle_curve(1.0), EpsilonLadder(count=10))
    assert abs(net.limit.entries[0, 0] + 1j) <= 1e-9
    assert net.order == pytest.approx(2.0, abs=0.05)


def test_regularised_wire_phase_oracle():
    # exact holonomy of the regularised wire on the unit circle
    sc = flat_wire(0.25)
    for eps in (0.5, 2**-4):
        g = holonomy(sc.potential, eps, circle_curve(1.0)).entries[0, 0]
        assert g == pytest.approx(np.exp(-2j * np.pi * 0.25 / (1 + eps**2)), abs=1e-12)


def test_contractible_loop_in_flat_region():
    g = holonomy(flat_wire(1.0).singular, None, small_circle())
    assert abs(g.entries[0, 0] - 1) <= 1e-10


def test_reverse_gives_inverse(su2_linear):
    A, loop = su2_linear.potential, circle_curve(1.0)
    fwd = holonomy(A, EPS, loop)
    back = holonomy(A, EPS, reverse(loop))
    assert np.linalg.norm(back.entries @ fwd.entries - np.eye(2)) <= 1e-9


def test_concatenation_gives_reversed_product(su2_linear):
    A = su2_linear.potential
    c1, c2 = circle_curve(1.0), small_circle()
    g1, g2 = holonomy(A, EPS, c1), holonomy(A, EPS, c2)
    g12 = holonomy(A, EPS, concatenate(c1, c2), step=1 / 4096)
    assert np.linalg.norm(g12.entries - g2.entries @ g1.entries) <= 1e-9
    back = holonomy(A, EPS, reverse(concatenate(c1, c2)), step=1 / 4096)
    assert np.linalg.norm(back.entries @ g12.entries - np.eye(2)) <= 1e-9
    res = transport(A, EPS, concatenate(c1, c2), np.eye(2), step=1 / 64, trace=True)
    ts = [t for t, _ in res.trace]
    assert len(ts) == res.steps + 1 == 129 and ts[0] == 0.0 and ts[-1] == pytest.approx(2.0)
    assert np.all(np.diff(ts) > 0)


def test_reparameterisation_invariance(su2_linear):
    A, loop = su2_linear.potential, circle_curve(1.0)
    phi = lambda t: 2 * np.pi * (t - np.sin(2 * np.pi * t) / (4 * np.pi))  # noqa: E731
    dphi = lambda t: 2 * np.pi * (1 - 0.5 * np.cos(2 * np.pi * t))  # noqa: E731
    g = holonomy(A, EPS, loop)
    h = holonomy(A, EPS, reparameterize(loop, phi, dphi, 0.0, 1.0))
    assert np.linalg.norm(g.entries - h.entries) <= 1e-8


def test_gauge_covariance_of_holonomy(su2_linear):
    g, dg, d2g = su2_gauge()
    loop = circle_curve(1.0, center=(0, 0, 0.3, 0))
    At = gauge_transform(su2_linear.potential, g, dg, d2g)
    hol = holonomy(su2_linear.potential, EPS, loop).entries
    holt = holonomy(At, EPS, loop).entries
    gb = g(loop.map(np.array(0.0)))
    assert np.linalg.norm(holt - np.linalg.inv(gb) @ hol @ gb) <= 1e-8


@settings(max_examples=10)
@given(unit_quaternions())
def test_conjugation_covariance_constant_gauge(q):
    # a constant gauge g conjugates the potential and hence the holonomy
    from gencon.scenarios import su2_singular
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sc = su2_singular(0.3, "linear")
    g = np.asarray(q)
    At = gauge_transform(sc.potential, lambda p: np.broadcast_to(g, p.shape[:-1] + (2, 2)),
                         lambda p: np.zeros(p.shape[:-1] + (M, 2, 2), dtype=complex))
    loop = circle_curve(1.0)
    hol = holonomy(sc.potential, 0.2, loop, step=2 * np.pi / 512).entries
    holt = holonomy(At, 0.2, loop, step=2 * np.pi / 512).entries
    assert np.linalg.norm(holt - g.conj().T @ hol @ g) <= 1e-8


def test_rk4_convergence(su2_linear):
    A, loop = su2_linear.potential, circle_curve(1.0)
    ref = holonomy(A, 0.25, loop, step=2 * np.pi / 4096).entries
    errs = [np.linalg.norm(holonomy(A, 0.25, loop, step=2 * np.pi / n).entries - ref)
            for n in (32, 64, 128)]
    assert errs[0] / errs[1] >= 12 and errs[1] / errs[2] >= 12


def test_group_constraint_maintained(su2_linear, monopole):
    res = transport(su2_linear.potential, 2**-8, circle_curve(1.0), np.eye(2), trace=True)
    assert res.max_defect <= 1e-10
    assert all(group_defect(SU2, g) <= 1e-10 for _, g in res.trace)
    assert len(res.trace) == res.steps + 1
    res = transport(monopole.potential, 2**-8, monopole.default_loop, np.eye(1))
    assert res.max_defect <= 1e-10


def test_chart_exit_reports_parameter():
    seg = segment_curve((-1, 0, 0, 0.5), (1, 0, 0, 0.5))
    with pytest.raises(ChartExitError) as info:
        transport(flat_wire(1.0).singular, None, seg, np.eye(1), step=1 / 64)
    assert info.value.t == pytest.approx(0.5)


def test_holonomy_rejects_open_curve(wire):
    with pytest.raises(ValueError, match="closed"):
        holonomy(wire.potential, EPS, segment_curve((1, 0, 0, 0), (0, 1, 0, 0)))
    with pytest.raises(ValueError):
        transport(wire.potential, EPS, circle_curve(1.0), np.eye(1), step=0.0)


def test_curve_velocities_match_finite_differences(rng):
    h = 1e-6
    phi = lambda t: t + 0.1 * np.sin(t)  # noqa: E731
    curves = [circle_curve(0.7, center=(0.1, 0, 0, 0), plane=(0, 2)),
              segment_curve((0, 1, 2, 3), (1, -1, 0, 2)),
              reverse(circle_curve(1.0)),
              concatenate(circle_curve(1.0), small_circle()),
              reparameterize(circle_curve(1.0), phi, lambda t: 1 + 0.1 * np.cos(t), 0.0, 2 * np.pi)]
    for c in curves:
        for t in rng.uniform(c.a + 0.01, c.b - 0.01, size=5):
            if abs(t - 1.0) < 0.01 and c.b == 2.0:
                continue
            fd = (c.map(np.array(t + h)) - c.map(np.array(t - h))) / (2 * h)
            v = c.velocity(np.array(t))
            assert np.allclose(v, fd, rtol=1e-6, atol=1e-6 * max(1, np.max(np.abs(v))))


# -- associated bundle ----------------------------------------------------------------


def test_parallel_transport_vector_examples(rng):
    xi = np.array([1 + 2j, -0.5j])
    g = random_group(SU2, rng)
    assert np.allclose(parallel_transport_vector("defining", g, g, xi), xi)
    theta = 0.7
    out = parallel_transport_vector("defining", np.eye(1), [[np.exp(1j * theta)]], [2.0])
    assert out[0] == pytest.approx(2 * np.exp(1j * theta))
    for _ in range(10):
        g0, g1 = random_group(SU2, rng), random_group(SU2, rng)
        out = parallel_transport_vector("defining", g0, g1, xi)
        assert abs(np.linalg.norm(out) - np.linalg.norm(xi)) <= 1e-12
    assert np.array_equal(parallel_transport_vector("trivial", g0, g1, xi), xi)
    with pytest.raises(ValueError):
        parallel_transport_vector("defining", g0, g1, [1.0])
    with pytest.raises(ValueError):
        parallel_transport_vector("adjoint", g0, g1, xi)


def test_parallel_transport_along_wire_loop():
    g1 = transport(flat_wire(0.25).singular, None, circle_curve(1.0), GroupElement.identity(U1))
    out = parallel_transport_vector("defining", np.eye(1), g1.g_end, [1.0])
    assert out[0] == pytest.approx(-1j, abs=1e-8)


def test_connection_coefficient_examples(wire, rng):
    assert np.all(connection_coefficients(zero_potential(), EPS, np.ones(M)) == 0)
    gam = connection_coefficients(wire.potential, 1.0, [1.0, 0, 0, 0])
    assert gam[1, 0, 0] == pytest.approx(0.5j, abs=1e-15)


def test_connection_coefficients_under_constant_gauge(su2_linear, rng):
    g = random_group(SU2, rng)
    At = gauge_transform(su2_linear.potential, lambda p: np.broadcast_to(g, p.shape[:-1] + (2, 2)),
                         lambda p: np.zeros(p.shape[:-1] + (M, 2, 2), dtype=complex))
    p = rng.uniform(-1, 1, size=M)
    gam = connection_coefficients(su2_linear.potential, EPS, p)
    gamt = connection_coefficients(At, EPS, p)
    # Gamma is the transpose of A(d_i), so conjugation acts transposed
    want = np.swapaxes(g.conj().T @ np.swapaxes(gam, -1, -2) @ g, -1, -2)
    assert np.allclose(gamt, want, atol=1e-13)


def _section(rng):
    c0, c1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rates = rng.normal(size=M) * 0.5
    V = lambda p: (c0 + c1 * np.sin(p @ rates))  # noqa: E731
    dV = lambda p: np.outer(rates, c1 * np.cos(p @ rates))  # noqa: E731
    return V, dV


def test_covariant_derivative_of_constant_section_is_zero():
    V = lambda p: np.array([1.0, 2j])  # noqa: E731
    dV = lambda p: np.zeros((M, 2))  # noqa: E731
    X = lambda p: np.array([1.0, -1, 0.5, 2])  # noqa: E731
    assert np.all(covariant_derivative(zero_potential(), EPS, V, dV, X, np.ones(M)) == 0)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_covariant_derivative_leibniz_and_additivity(seed):
    from gencon.scenarios import su2_singular
    import warnings

    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        A = su2_singular(0.3, "linear").potential
    V, dV = _section(rng)
    k = rng.normal(size=M)
    lam = lambda p: np.cos(p @ k)  # noqa: E731
    dlam = lambda p: -np.sin(p @ k) * k  # noqa: E731
    lV = lambda p: lam(p) * V(p)  # noqa: E731
    dlV = lambda p: np.outer(dlam(p), V(p)) + lam(p) * dV(p)  # noqa: E731
    xv, yv = rng.normal(size=(2, M))
    X, Y = (lambda p: xv), (lambda p: yv)
    p = rng.uniform(-1, 1, size=M)
    lhs = covariant_derivative(A, EPS, lV, dlV, X, p)
    rhs = lam(p) * covariant_derivative(A, EPS, V, dV, X, p) + (xv @ dlam(p)) * V(p)
    assert np.allclose(lhs, rhs, atol=1e-8)
    XY = covariant_derivative(A, EPS, V, dV, lambda p: xv + yv, p)
    sep = covariant_derivative(A, EPS, V, dV, X, p) + covariant_derivative(A, EPS, V, dV, Y, p)
    assert np.allclose(XY, sep, rtol=1e-14, atol=1e-14)
