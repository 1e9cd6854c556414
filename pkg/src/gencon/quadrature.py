"""Integration of pulled-back forms over parameterised loops, disks, spheres and balls.

The engine is a tensor-product 7-point Gauss-Legendre rule with adaptive
dyadic subdivision.  Each cell carries, for every parameter axis, the value
obtained by halving along that axis; the largest discrepancy is the cell's
error estimate and the cell is split along the worst axis.  Cells are refined
in priority order (error, then cell index) and summed in index order, so the
result does not depend on evaluation order.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .forms import FormError, KForm, contract

GL_ORDER = 7
MAX_CELLS = 2**20
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)


class QuadratureError(RuntimeError):
    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class SurfacePatch:
    """A parameterised k-dimensional domain in a chart.

    `map` takes parameters (..., dim) to chart points (..., m); `jacobian`
    returns (..., m, dim).  Axes listed in `graded` get a geometric initial
    mesh towards their lower bound when the integrator is given a length
    scale; `param_scale` converts chart length to parameter units there.
    """

    dim: int
    lower: tuple
    upper: tuple
    map: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    orientation: int = 1
    closed: bool = False
    graded: tuple = ()
    param_scale: float = 1.0
    name: str = "patch"

    def reversed(self) -> SurfacePatch:
        return SurfacePatch(self.dim, self.lower, self.upper, self.map, self.jacobian,
                            -self.orientation, self.closed, self.graded, self.param_scale,
                            self.name)

    def split(self, axis: int, at: float) -> tuple[SurfacePatch, SurfacePatch]:
        lo, hi = list(self.lower), list(self.upper)
        left = SurfacePatch(self.dim, tuple(lo), tuple(hi[:axis] + [at] + hi[axis + 1:]),
                            self.map, self.jacobian, self.orientation, False, self.graded,
                            self.param_scale, self.name)
        right = SurfacePatch(self.dim, tuple(lo[:axis] + [at] + lo[axis + 1:]), tuple(hi),
                             self.map, self.jacobian, self.orientation, False, (),
                             self.param_scale, self.name)
        return left, right


Surface = SurfacePatch | Sequence[SurfacePatch]


def _patches(surface: Surface) -> list[SurfacePatch]:
    return [surface] if isinstance(surface, SurfacePatch) else list(surface)


def complex_step_jacobian(fn: Callable, dim: int) -> Callable:
    """Jacobian of an analytic map by complex-step differentiation."""
    h = 1e-30

    def jac(q):
        q = np.asarray(q, dtype=float)
        cols = []
        for j in range(dim):
            dq = np.zeros(dim, dtype=complex)
            dq[j] = 1j * h
            cols.append(np.imag(fn(q + dq)) / h)
        return np.stack(cols, axis=-1)

    return jac


def _embed(values: list, axes: Sequence[int], m: int, center, shape):
    out = np.zeros(shape + (m,), dtype=np.result_type(*[np.asarray(v) for v in values], float))
    out[...] = np.asarray(center, dtype=float)
    for ax, v in zip(axes, values):
        out[..., ax] = out[..., ax] + v
    return out


def box(lower, upper, axes: Sequence[int] | None = None, dim: int = 4, center=None) -> SurfacePatch:
    """Coordinate box: parameter j moves chart coordinate axes[j]."""
    lower, upper = tuple(map(float, lower)), tuple(map(float, upper))
    k = len(lower)
    axes = tuple(range(k)) if axes is None else tuple(axes)
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def fmap(q):
        q = np.asarray(q)
        return _embed([q[..., j] for j in range(k)], axes, dim, center, q.shape[:-1])

    def jac(q):
        q = np.asarray(q)
        j = np.zeros((dim, k))
        for c, ax in enumerate(axes):
            j[ax, c] = 1.0
        return np.broadcast_to(j, q.shape[:-1] + (dim, k))

    return SurfacePatch(k, lower, upper, fmap, jac, name="box")


def disk(R: float = 1.0, center=None, plane=(0, 1), dim: int = 4) -> SurfacePatch:
    """Disk of radius R in the coordinate plane `plane`, polar parameters (rho, phi)."""
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    a, b = plane

    def fmap(q):
        q = np.asarray(q)
        r, p = q[..., 0], q[..., 1]
        return _embed([r * np.cos(p), r * np.sin(p)], (a, b), dim, center, q.shape[:-1])

    def jac(q):
        q = np.asarray(q, dtype=float)
        r, p = q[..., 0], q[..., 1]
        j = np.zeros(q.shape[:-1] + (dim, 2))
        j[..., a, 0], j[..., a, 1] = np.cos(p), -r * np.sin(p)
        j[..., b, 0], j[..., b, 1] = np.sin(p), r * np.cos(p)
        return j

    return SurfacePatch(2, (0.0, 0.0), (float(R), 2 * np.pi), fmap, jac, graded=(0,),
                        name=f"disk(R={R})")


def circle(R: float = 1.0, center=None, plane=(0, 1), dim: int = 4) -> SurfacePatch:
    """Counter-clockwise circle as a 1-dimensional closed patch, parameter phi."""
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    a, b = plane

    def fmap(q):
        q = np.asarray(q)
        p = q[..., 0]
        return _embed([R * np.cos(p), R * np.sin(p)], (a, b), dim, center, q.shape[:-1])

    def jac(q):
        q = np.asarray(q, dtype=float)
        p = q[..., 0]
        j = np.zeros(q.shape[:-1] + (dim, 1))
        j[..., a, 0], j[..., b, 0] = -R * np.sin(p), R * np.cos(p)
        return j

    return SurfacePatch(1, (0.0,), (2 * np.pi,), fmap, jac, closed=True, name=f"circle(R={R})")


def _cap(R, center, axes, dim, sign):
    a, b, c = axes

    def fmap(q):
        q = np.asarray(q)
        t, p = q[..., 0], q[..., 1]
        st = R * np.sin(t)
        return _embed([st * np.cos(p), st * np.sin(p), sign * R * np.cos(t)], (a, b, c), dim,
                      center, q.shape[:-1])

    def jac(q):
        q = np.asarray(q, dtype=float)
        t, p = q[..., 0], q[..., 1]
        j = np.zeros(q.shape[:-1] + (dim, 2))
        j[..., a, 0], j[..., a, 1] = R * np.cos(t) * np.cos(p), -R * np.sin(t) * np.sin(p)
        j[..., b, 0], j[..., b, 1] = R * np.cos(t) * np.sin(p), R * np.sin(t) * np.cos(p)
        j[..., c, 0] = -sign * R * np.sin(t)
        return j

    return fmap, jac


def sphere(R: float = 1.0, center=None, axes=(0, 1, 2), dim: int = 4,
           orientation: int = 1) -> tuple[SurfacePatch, SurfacePatch]:
    """Two polar caps covering the sphere of radius R.

    Each cap uses (angle from its pole, azimuth), so the wire crossings at the
    poles sit on a graded parameter edge.  orientation=+1 is the outward normal.
    """
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    caps = []
    for sign, name in ((1, "north"), (-1, "south")):
        fmap, jac = _cap(R, center, axes, dim, sign)
        # (d/dtheta, d/dphi) is outward on the north cap, inward on the south cap
        caps.append(SurfacePatch(2, (0.0, 0.0), (np.pi / 2, 2 * np.pi), fmap, jac,
                                 orientation * sign, True, (0,), float(R),
                                 f"sphere(R={R}).{name}"))
    return tuple(caps)


def ball(R: float = 1.0, center=None, dim: int = 4) -> SurfacePatch:
    """4-ball in hyperspherical coordinates (r, chi, theta, phi), standard orientation."""
    if dim != 4:
        raise ValueError("ball patches are 4-dimensional")
    center = np.zeros(4) if center is None else np.asarray(center, dtype=float)

    def fmap(q):
        q = np.asarray(q)
        r, chi, th, ph = (q[..., i] for i in range(4))
        s = r * np.sin(chi)
        return _embed([s * np.sin(th) * np.cos(ph), s * np.sin(th) * np.sin(ph),
                       s * np.cos(th), r * np.cos(chi)], range(4), 4, center, q.shape[:-1])

    jac = complex_step_jacobian(fmap, 4)
    q0 = np.array([0.5 * R, 1.0, 1.0, 1.0])
    orient = int(np.sign(np.linalg.det(jac(q0))))
    return SurfacePatch(4, (0.0, 0.0, 0.0, 0.0), (float(R), np.pi, np.pi, 2 * np.pi), fmap,
                        jac, orient, False, (0,), name=f"ball(R={R})")


# -- adaptive engine ----------------------------------------------------------


@dataclass
class QuadResult:
    value: complex | np.ndarray
    error: float
    cells: int
    evaluations: int = 0


@dataclass
class _Cells:
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)
    halves: list = field(default_factory=list)  # (d, 2, n, n) per cell
    value: list = field(default_factory=list)
    err: list = field(default_factory=list)
    axis: list = field(default_factory=list)
    alive: list = field(default_factory=list)


def _tensor_rule(d: int):
    pts = np.array(list(itertools.product(_NODES, repeat=d)))
    wts = np.prod(np.array(list(itertools.product(_WEIGHTS, repeat=d))), axis=1)
    return pts, wts


class _Integrator:
    def __init__(self, integrand, patch: SurfacePatch, nshape):
        self.integrand = integrand
        self.patch = patch
        self.d = patch.dim
        self.pts, self.wts = _tensor_rule(self.d)
        self.nshape = nshape
        self.evaluations = 0

    def rule(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Gauss-Legendre value on boxes (B, d) -> (B, n, n)."""
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        q = mid[:, None, :] + half[:, None, :] * self.pts[None, :, :]
        vals = self.integrand(q.reshape(-1, self.d)).reshape(q.shape[:2] + self.nshape)
        self.evaluations += q.shape[0] * q.shape[1]
        vol = np.prod(half, axis=1)
        return np.einsum("p,bp...->b...", self.wts, vals) * vol.reshape((-1,) + (1,) * len(self.nshape))

    def assess(self, lo: np.ndarray, hi: np.ndarray, value: np.ndarray | None = None):
        """Per-axis halved values, error estimates and preferred split axis."""
        B, d = lo.shape
        subs_lo, subs_hi = [], []
        for j in range(d):
            m = 0.5 * (lo[:, j] + hi[:, j])
            l1, h1 = lo.copy(), hi.copy()
            h1[:, j] = m
            l2, h2 = lo.copy(), hi.copy()
            l2[:, j] = m
            subs_lo += [l1, l2]
            subs_hi += [h1, h2]
        boxes_lo = np.concatenate(([lo] if value is None else []) + subs_lo)
        boxes_hi = np.concatenate(([hi] if value is None else []) + subs_hi)
        vals = self.rule(boxes_lo, boxes_hi)
        if value is None:
            value, vals = vals[:B], vals[B:]
        halves = vals.reshape((d, 2, B) + self.nshape)
        halves = np.moveaxis(halves, 2, 0)  # (B, d, 2, ...)
        split = halves.sum(axis=2)
        diffs = np.abs(split - value[:, None]).reshape(B, d, -1).max(axis=2)
        axis = np.argmax(diffs, axis=1)
        err = diffs[np.arange(B), axis]
        return value, halves, err, axis


def _initial_mesh(patch: SurfacePatch, min_scale: float | None, per_axis: int = 2):
    breaks = []
    for j in range(patch.dim):
        lo, hi = patch.lower[j], patch.upper[j]
        if j in patch.graded and min_scale is not None and min_scale > 0:
            target = min_scale / patch.param_scale / 4.0
            pts = [hi]
            width = hi - lo
            while width > target and len(pts) < 64:
                width /= 2.0
                pts.append(lo + width)
            pts.append(lo)
            breaks.append(np.array(sorted(pts)))
        else:
            breaks.append(np.linspace(lo, hi, per_axis + 1))
    los, his = [], []
    for combo in itertools.product(*[range(len(b) - 1) for b in breaks]):
        los.append([breaks[j][i] for j, i in enumerate(combo)])
        his.append([breaks[j][i + 1] for j, i in enumerate(combo)])
    return np.array(los, dtype=float), np.array(his, dtype=float)


def _adaptive(integrand, patch: SurfacePatch, nshape, tol: float, min_scale, max_cells):
    eng = _Integrator(integrand, patch, nshape)
    lo, hi = _initial_mesh(patch, min_scale)
    value, halves, err, axis = eng.assess(lo, hi)
    cells = _Cells()
    heap = []
    for i in range(lo.shape[0]):
        cells.lo.append(lo[i]); cells.hi.append(hi[i]); cells.halves.append(halves[i])
        cells.value.append(halves[i][axis[i]].sum(axis=0)); cells.err.append(float(err[i]))
        cells.axis.append(int(axis[i])); cells.alive.append(True)
        heapq.heappush(heap, (-float(err[i]), i))
    total_err = math.fsum(cells.err)
    while total_err > tol and heap:
        live = len(heap)
        if live >= max_cells:
            est = _sum_cells(cells)
            raise QuadratureError(
                f"cell budget exhausted ({live} cells), achieved error {total_err:.3e}",
                estimate=est, error=total_err)
        batch = []
        excess = total_err - tol
        acc = 0.0
        while heap and len(batch) < 512 and (acc < excess or not batch):
            negerr, i = heapq.heappop(heap)
            batch.append(i)
            acc += -negerr
        new_lo, new_hi, new_val = [], [], []
        for i in batch:
            cells.alive[i] = False
            j = cells.axis[i]
            m = 0.5 * (cells.lo[i][j] + cells.hi[i][j])
            l1, h1 = cells.lo[i].copy(), cells.hi[i].copy()
            h1[j] = m
            l2, h2 = cells.lo[i].copy(), cells.hi[i].copy()
            l2[j] = m
            new_lo += [l1, l2]
            new_hi += [h1, h2]
            new_val += [cells.halves[i][j][0], cells.halves[i][j][1]]
        nl, nh = np.array(new_lo), np.array(new_hi)
        value, halves, err, axis = eng.assess(nl, nh, np.array(new_val))
        for c in range(nl.shape[0]):
            idx = len(cells.lo)
            cells.lo.append(nl[c]); cells.hi.append(nh[c]); cells.halves.append(halves[c])
            cells.value.append(halves[c][axis[c]].sum(axis=0)); cells.err.append(float(err[c]))
            cells.axis.append(int(axis[c])); cells.alive.append(True)
            heapq.heappush(heap, (-float(err[c]), idx))
        total_err = math.fsum(e for e, a in zip(cells.err, cells.alive) if a)
    return _sum_cells(cells), total_err, len(heap), eng.evaluations


def _sum_cells(cells: _Cells):
    vals = [v for v, a in zip(cells.value, cells.alive) if a]
    return np.sum(np.array(vals), axis=0)


def form_integrand(f: KForm, patch: SurfacePatch, weight=None):
    """Pullback density of `f` on `patch` (orientation and optional weight applied)."""
    if f.degree != patch.dim:
        raise FormError(f"cannot integrate a {f.degree}-form over a {patch.dim}-dimensional patch")

    def integrand(q):
        x = patch.map(q)
        if f.domain is not None and not np.all(f.in_domain(x)):
            raise QuadratureError(f"{patch.name} leaves the domain of the form")
        vecs = np.swapaxes(patch.jacobian(q), -1, -2)  # (N, k, m)
        val = contract(f.coefficients(x), vecs, f.dim) * patch.orientation
        if weight is not None:
            val = val * np.asarray(weight(x))[..., None, None]
        return val

    return integrand


def integrate_form(f: KForm, surface: Surface, tol: float = 1e-8, weight=None,
                   min_scale: float | None = None, max_cells: int = MAX_CELLS) -> QuadResult:
    """Integral of the k-form `f` over a patch or a union of patches."""
    total, err, ncells, nevals = 0, 0.0, 0, 0
    patches = _patches(surface)
    for patch in patches:
        value, e, c, ev = _adaptive(form_integrand(f, patch, weight), patch, (f.n, f.n),
                                    tol / len(patches), min_scale, max_cells)
        total = total + value
        err += e
        ncells += c
        nevals += ev
    if f.n == 1:
        total = complex(total[0, 0])
    return QuadResult(total, err, ncells, nevals)


def integrate_function(fn, lower, upper, tol: float = 1e-10, max_cells: int = MAX_CELLS) -> float:
    """Adaptive integral of a scalar vectorised function over a box."""
    lower, upper = tuple(map(float, lower)), tuple(map(float, upper))
    d = len(lower)
    patch = SurfacePatch(d, lower, upper, lambda q: q, lambda q: None)

    def integrand(q):
        return np.asarray(fn(q), dtype=complex)[..., None, None]

    value, _, _, _ = _adaptive(integrand, patch, (1, 1), tol, None, max_cells)
    return complex(value[0, 0])


def default_tol(eps: float, base: float = 1e-8) -> float:
    """1e-8 down to eps = 2^-10, relaxed like 1/eps below."""
    floor = 2.0**-10
    return base if eps >= floor else base * floor / eps


def flux_limit(family, surface: Surface, ladder=None, tol: float | None = None, weight=None):
    """Integrals of an epsilon-family of k-forms over `surface`, extrapolated to eps -> 0."""
    from .colombeau import EpsilonLadder, GeneralizedNumber, extrapolate

    ladder = EpsilonLadder() if ladder is None else ladder
    make = family.make if hasattr(family, "make") else family
    values, errs = [], []
    for eps in ladder.eps:
        t = default_tol(eps) if tol is None else tol
        res = integrate_form(make(eps), surface, t, weight=weight, min_scale=eps)
        values.append(res.value)
        errs.append(res.error)
    net = GeneralizedNumber(ladder, np.array(values, dtype=complex))
    fit = extrapolate(net)
    return FluxResult(net, fit.limit, fit.order, max(fit.err_est, errs[-1]), np.array(errs))


@dataclass
class FluxResult:
    net: object
    limit: complex
    order: float
    err_est: float
    quad_errors: np.ndarray
