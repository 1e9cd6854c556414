"""Horizontal lifts, holonomy, associated-bundle transport and covariant derivatives.

The lift of a base curve solves  g'(t) g(t)^-1 = -A(gamma'(t)),  i.e.
g' = -A_{gamma(t)}(gamma'(t)) g, with classical RK4 at a fixed step and a
projection back onto the group after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .colombeau import EpsilonLadder, GeneralizedNumber, NumericalError, extrapolate
from .connection import GaugePotential
from .forms import KForm, evaluate_array
from .liealg import (AlgebraTag, GroupElement, LieValue, exp, group_defect, log,
                     project_array)

DEFAULT_STEPS = 4096


class ChartExitError(NumericalError):
    def __init__(self, t: float):
        super().__init__(f"curve leaves the chart at t = {t:.17g}")
        self.t = t


@dataclass(frozen=True)
class ParamCurve:
    map: Callable[[np.ndarray], np.ndarray]  # t (...,) -> points (..., m)
    velocity: Callable[[np.ndarray], np.ndarray]
    a: float
    b: float
    # concatenations remember their pieces so transport never steps across a corner
    pieces: tuple = ()

    def closed(self, atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.map(np.array(self.a)) - self.map(np.array(self.b)))) <= atol)


def circle_curve(R: float = 1.0, center=None, plane=(0, 1), dim: int = 4,
                 turns: float = 1.0) -> ParamCurve:
    """Counter-clockwise circle in the coordinate plane, t in [0, 2 pi turns]."""
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    a, b = plane

    def fmap(t):
        t = np.asarray(t, dtype=float)
        out = np.broadcast_to(center, t.shape + (dim,)).copy()
        out[..., a] += R * np.cos(t)
        out[..., b] += R * np.sin(t)
        return out

    def vel(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (dim,))
        out[..., a] = -R * np.sin(t)
        out[..., b] = R * np.cos(t)
        return out

    return ParamCurve(fmap, vel, 0.0, 2 * np.pi * turns)


def segment_curve(p0, p1) -> ParamCurve:
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)

    def fmap(t):
        t = np.asarray(t, dtype=float)[..., None]
        return p0 + t * (p1 - p0)

    def vel(t):
        return np.broadcast_to(p1 - p0, np.shape(t) + p0.shape)

    return ParamCurve(fmap, vel, 0.0, 1.0)


def reverse(c: ParamCurve) -> ParamCurve:
    return ParamCurve(lambda t: c.map(c.a + c.b - np.asarray(t, float)),
                      lambda t: -c.velocity(c.a + c.b - np.asarray(t, float)), c.a, c.b,
                      tuple(reverse(p) for p in reversed(c.pieces)))


def concatenate(c1: ParamCurve, c2: ParamCurve) -> ParamCurve:
    """c1 followed by c2, on [0, 2]; each piece is traversed at unit parameter speed."""
    L1, L2 = c1.b - c1.a, c2.b - c2.a

    def pick(t, f1, f2, scale):
        t = np.asarray(t, dtype=float)
        first = t <= 1.0
        v1 = f1(c1.a + np.clip(t, 0, 1) * L1) * (L1 if scale else 1.0)
        v2 = f2(c2.a + np.clip(t - 1, 0, 1) * L2) * (L2 if scale else 1.0)
        return np.where(first[..., None], v1, v2)

    return ParamCurve(lambda t: pick(t, c1.map, c2.map, False),
                      lambda t: pick(t, c1.velocity, c2.velocity, True), 0.0, 2.0,
                      (c1, c2))


def reparameterize(c: ParamCurve, phi: Callable, dphi: Callable, a: float, b: float) -> ParamCurve:
    """c o phi for an increasing phi: [a, b] -> [c.a, c.b]."""
    return ParamCurve(lambda t: c.map(phi(np.asarray(t, float))),
                      lambda t: c.velocity(phi(np.asarray(t, float)))
                      * np.asarray(dphi(np.asarray(t, float)))[..., None], a, b)


@dataclass
class TransportResult:
    g_end: GroupElement
    trace: list | None = field(default=None, repr=False)
    steps: int = 0
    max_defect: float = 0.0
    max_drift: float = 0.0


def _generator(form: KForm, curve: ParamCurve, t: np.ndarray) -> np.ndarray:
    pts = curve.map(t)
    inside = form.in_domain(pts)
    if not np.all(inside):
        raise ChartExitError(float(t[np.argmin(inside)]))
    return evaluate_array(form, pts, curve.velocity(t)[..., None, :])


def transport_form(form: KForm, curve: ParamCurve, g0, step: float | None = None,
                   trace: bool = False) -> TransportResult:
    tag: AlgebraTag = form.tag
    g = np.array(g0.entries if isinstance(g0, GroupElement) else g0, dtype=complex)
    length = curve.b - curve.a
    if step is None:
        step = length / DEFAULT_STEPS
    if not step > 0:
        raise ValueError("step must be positive")
    if curve.pieces:
        # each piece occupies a unit of the parent parameter
        res = TransportResult(GroupElement(tag, g), [] if trace else None)
        offset = curve.a
        for piece in curve.pieces:
            span = piece.b - piece.a
            part = transport_form(form, piece, res.g_end, step * span, trace)
            if trace:
                shifted = [(offset + (t - piece.a) / span, h) for t, h in part.trace]
                res.trace.extend(shifted if not res.trace else shifted[1:])
            res = TransportResult(part.g_end, res.trace, res.steps + part.steps,
                                  max(res.max_defect, part.max_defect),
                                  max(res.max_drift, part.max_drift))
            offset += 1.0
        return res
    nsteps = max(1, math.ceil(length / step - 1e-9))
    h = length / nsteps
    t = curve.a + h * np.arange(nsteps + 1)
    mids = t[:-1] + 0.5 * h
    a_nodes = -_generator(form, curve, t)
    a_mids = -_generator(form, curve, mids)
    out = [(float(t[0]), g.copy())] if trace else None
    defect = drift = 0.0
    for k in range(nsteps):
        a0, am, a1 = a_nodes[k], a_mids[k], a_nodes[k + 1]
        k1 = a0 @ g
        k2 = am @ (g + 0.5 * h * k1)
        k3 = am @ (g + 0.5 * h * k2)
        k4 = a1 @ (g + h * k3)
        g = g + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = max(drift, group_defect(tag, g))
        g = project_array(tag, g)
        defect = max(defect, group_defect(tag, g))
        if trace:
            out.append((float(t[k + 1]), g.copy()))
    return TransportResult(GroupElement(tag, g), out, nsteps, defect, drift)


def transport(A: GaugePotential | KForm, eps: float | None, curve: ParamCurve, g0,
              step: float | None = None, trace: bool = False) -> TransportResult:
    form = A if isinstance(A, KForm) else A.at(eps)
    return transport_form(form, curve, g0, step, trace)


def holonomy(A: GaugePotential | KForm, eps: float | None, loop: ParamCurve,
             step: float | None = None) -> GroupElement:
    if not loop.closed():
        raise ValueError("holonomy needs a closed curve")
    form = A if isinstance(A, KForm) else A.at(eps)
    return transport_form(form, loop, GroupElement.identity(form.tag), step).g_end


@dataclass
class HolonomyNet:
    eps: np.ndarray
    elements: list
    limit: GroupElement
    err_est: float
    order: float


def holonomy_net(A: GaugePotential, loop: ParamCurve, ladder: EpsilonLadder | None = None,
                 step: float | None = None) -> HolonomyNet:
    """Holonomy per ladder entry; the limit extrapolates log(g) entry-wise."""
    ladder = EpsilonLadder() if ladder is None else ladder
    elems = [holonomy(A, eps, loop, step) for eps in ladder.eps]
    logs = np.array([log(g).entries for g in elems])
    n = A.tag.n
    lim = np.zeros((n, n), dtype=complex)
    err, order = 0.0, math.nan
    for r in range(n):
        for c in range(n):
            gn = GeneralizedNumber(ladder, logs[:, r, c])
            fit = extrapolate(gn)
            lim[r, c] = fit.limit
            err = max(err, fit.err_est)
            if math.isfinite(fit.order):
                order = fit.order if not math.isfinite(order) else min(order, fit.order)
    # the fitted limit is only approximately in the algebra; clean it before exponentiating
    if A.tag.kind == "u1":
        lim = 1j * lim.imag
    elif A.tag.kind == "su2":
        lim = 0.5 * (lim - lim.conj().T)
        lim -= 0.5 * np.trace(lim) * np.eye(2)
    return HolonomyNet(ladder.eps, elems, exp(LieValue(A.tag, lim)), err, order)


# -- associated vector bundle -------------------------------------------------


def parallel_transport_vector(rep: str, g0, g1, xi0) -> np.ndarray:
    """xi_1 = rho(g1 g0^-1) xi_0 for the defining or trivial representation."""
    g0 = np.asarray(g0.entries if isinstance(g0, GroupElement) else g0, dtype=complex)
    g1 = np.asarray(g1.entries if isinstance(g1, GroupElement) else g1, dtype=complex)
    xi0 = np.asarray(xi0, dtype=complex)
    if rep == "trivial":
        return xi0.copy()
    if rep != "defining":
        raise ValueError(f"unknown representation {rep!r}")
    if xi0.shape != (g0.shape[0],):
        raise ValueError("vector dimension does not match the representation")
    return g1 @ np.linalg.solve(g0, xi0)


def connection_coefficients(A: GaugePotential | KForm, eps: float | None, p) -> np.ndarray:
    """Gamma[i, a, b] = Gamma^b_{i a}, the (b, a) entry of A(d_i) at p."""
    form = A if isinstance(A, KForm) else A.at(eps)
    comps = form.coefficients(np.asarray(p, dtype=float))
    return np.swapaxes(comps, -1, -2)


def covariant_derivative(A: GaugePotential | KForm, eps: float | None, V: Callable,
                         dV: Callable, X: Callable, p) -> np.ndarray:
    """(nabla_X V)^b = X^i d_i V^b + Gamma^b_{i a} V^a X^i.

    V(p) -> (n,), dV(p) -> (m, n) with dV[i] = d_i V, X(p) -> (m,).
    """
    p = np.asarray(p, dtype=float)
    gamma = connection_coefficients(A, eps, p)
    x = np.asarray(X(p), dtype=float)
    v = np.asarray(V(p), dtype=complex)
    dv = np.asarray(dV(p), dtype=complex)
    return x @ dv + np.einsum("i,iab,a->b", x, gamma, v)
