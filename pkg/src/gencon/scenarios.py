"""Closed-form singular gauge fields and their epsilon-regularisations.

Coefficients are written once as sympy expressions in chart coordinates
(x, y, z, w) and compiled to vectorised numpy callbacks together with their
exact first and second partial derivatives.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy as sp

from .colombeau import CompactRegion, EpsilonFamily
from .connection import GaugePotential
from .forms import KForm, multi_indices
from .holonomy import ParamCurve, circle_curve
from .liealg import SCALAR, SU2, U1, AlgebraTag
from .quadrature import SurfacePatch, disk, sphere

X, Y, Z, W = COORDS = sp.symbols("x y z w", real=True)
EPS = sp.Symbol("eps", positive=True)
DIM = 4
I = sp.I

E1, E2, E3 = (sp.Matrix(m) * I / 2 for m in ([[0, 1], [1, 0]], [[0, -I], [I, 0]], [[1, 0], [0, -1]]))


def _compile(exprs: list, shape: tuple) -> Callable:
    flat = [sp.sympify(e) for e in exprs]
    fn = sp.lambdify((*COORDS, EPS), flat, modules="numpy", cse=True)

    def call(points, eps):
        p = np.asarray(points, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            cols = fn(p[..., 0], p[..., 1], p[..., 2], p[..., 3], eps)
        out = np.empty(p.shape[:-1] + (len(flat),), dtype=complex)
        for i, c in enumerate(cols):
            out[..., i] = c
        return out.reshape(p.shape[:-1] + shape)

    return call


@dataclass
class SymbolicForm:
    """Coefficient matrices of a form, one sympy Matrix per increasing multi-index."""

    degree: int
    tag: AlgebraTag
    comps: list

    def compiled(self, domain=None) -> Callable[[float], KForm]:
        n = self.tag.n
        C = len(self.comps)
        entries = [c[r, s] for c in self.comps for r in range(n) for s in range(n)]
        d1 = [sp.diff(e, v) for v in COORDS for e in entries]
        d2 = [sp.diff(e, v, u) for v in COORDS for u in COORDS for e in entries]
        f0 = _compile(entries, (C, n, n))
        f1 = _compile(d1, (DIM, C, n, n))
        f2 = _compile(d2, (DIM, DIM, C, n, n))
        degree, tag = self.degree, self.tag

        def make(eps: float) -> KForm:
            return KForm(degree, DIM, tag, lambda p: f0(p, eps), lambda p: f1(p, eps),
                         lambda p: f2(p, eps), domain)

        return make


def one_form(dx=0, dy=0, dz=0, dw=0, tag=SCALAR) -> SymbolicForm:
    comps = [sp.Matrix(c) if isinstance(c, sp.MatrixBase) else sp.Matrix([[c]])
             for c in (dx, dy, dz, dw)]
    comps = [c if c.shape == (tag.n, tag.n) else c * sp.eye(tag.n) for c in comps]
    return SymbolicForm(1, tag, comps)


def _zero(n):
    return sp.zeros(n, n)


def two_form(entries: dict, tag=SCALAR) -> SymbolicForm:
    """entries maps increasing index pairs to coefficient matrices (or scalars)."""
    comps = []
    for idx in multi_indices(DIM, 2):
        c = entries.get(idx, 0)
        comps.append(c if isinstance(c, sp.MatrixBase) else sp.Matrix([[c]]) * sp.eye(tag.n))
    return SymbolicForm(2, tag, comps)


def wedge11(a: list, b: list) -> dict:
    """Coefficients (a ^ b)_ij = a_i b_j - a_j b_i for component lists (entrywise product)."""
    out = {}
    for i, j in multi_indices(DIM, 2):
        out[(i, j)] = a[i] * b[j] - a[j] * b[i]
    return out


def symbolic_curvature(a: SymbolicForm) -> SymbolicForm:
    """F_ij = d_i a_j - d_j a_i + [a_i, a_j]."""
    comps = []
    for i, j in multi_indices(DIM, 2):
        ai, aj = a.comps[i], a.comps[j]
        comps.append(sp.simplify(aj.diff(COORDS[i]) - ai.diff(COORDS[j]) + ai * aj - aj * ai))
    return SymbolicForm(2, a.tag, comps)


# -- the catalogue --------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    alpha: float
    potential: GaugePotential
    singular: KForm
    pieces: dict = field(default_factory=dict)
    piece_scale: complex = 1.0
    default_region: CompactRegion | None = None
    default_surface: object = None
    default_loop: ParamCurve | None = None
    description: str = ""
    options: dict = field(default_factory=dict)

    @property
    def tag(self) -> AlgebraTag:
        return self.potential.tag

    def pieces_sum(self) -> EpsilonFamily:
        names = [k for k in self.pieces if k != "total"]

        def make(eps):
            forms = [self.pieces[k].make(eps) for k in names]
            total = forms[0]
            for f in forms[1:]:
                total = total + f
            return total.scaled(self.piece_scale)

        return EpsilonFamily(make, f"{self.piece_scale} x ({' + '.join(names)})")


AXIS_TUBE = 1e-12  # inside this radius the singular coefficients are beyond 1e12


def _off_axis(points):
    p = np.asarray(points)
    return p[..., 0] ** 2 + p[..., 1] ** 2 > AXIS_TUBE**2


RHO2 = X**2 + Y**2


@lru_cache(maxsize=None)
def flat_wire(alpha: float = 1.0) -> Scenario:
    """U(1) potential i alpha dphi around the z-axis, regularised by eps."""
    a = sp.nsimplify(alpha) if float(alpha).is_integer() else sp.Float(alpha, 17)
    pot = one_form(-I * a * Y / (RHO2 + EPS**2), I * a * X / (RHO2 + EPS**2), tag=U1)
    sing = one_form(-I * a * Y / RHO2, I * a * X / RHO2, tag=U1)
    F = two_form({(0, 1): 2 * I * EPS**2 * a / (RHO2 + EPS**2) ** 2})
    make = pot.compiled()
    return Scenario(
        name="flat_wire",
        alpha=alpha,
        potential=GaugePotential(EpsilonFamily(make, "A_eps = i alpha (x dy - y dx)/(x^2+y^2+eps^2)"),
                                 U1, "flat_wire"),
        singular=sing.compiled(_off_axis)(0.0),
        pieces={"F": EpsilonFamily(F.compiled(), "2 i eps^2 alpha dx^dy/(x^2+y^2+eps^2)^2")},
        default_region=CompactRegion((-1, -1, -1, 0), (1, 1, 1, 1)),
        default_surface=disk(1.0),
        default_loop=circle_curve(1.0),
        description="flat U(1) connection with a flux wire on the z-axis",
    )


@lru_cache(maxsize=None)
def dirac_monopole(alpha: float = 1.0) -> Scenario:
    """Dirac potential alpha/2 (cos theta - 1) dphi in Cartesian form, regularised by eps.

    `pieces` are the real 2-forms F1 (monopole), F2 and F3 (wire) whose sum is
    dA_eps; the u(1) connection is i A_eps, so its curvature is i (F1 + F2 + F3).
    The default sphere is oriented so the monopole term carries flux +2 pi alpha
    and the wire term -2 pi alpha.
    """
    a = sp.nsimplify(alpha) if float(alpha).is_integer() else sp.Float(alpha, 17)
    r2 = X**2 + Y**2 + Z**2
    re = sp.sqrt(r2 + EPS**2)
    pref = a / 2 * (Z / re - 1) / (RHO2 + EPS**2)
    real_pot = one_form(-pref * Y, pref * X)
    pot = one_form(-I * pref * Y, I * pref * X, tag=U1)
    pref0 = a / 2 * (Z / sp.sqrt(r2) - 1) / RHO2
    sing = one_form(-I * pref0 * Y, I * pref0 * X, tag=U1)
    # x dz^dy + y dx^dz + z dy^dx on increasing pairs
    denom1 = 2 * (r2 + EPS**2) ** sp.Rational(3, 2)
    F1 = two_form({(0, 1): -a * Z / denom1, (0, 2): a * Y / denom1, (1, 2): -a * X / denom1})
    F2 = two_form({(0, 1): a * EPS**2 * Z / (denom1 * (RHO2 + EPS**2))})
    F3 = two_form({(0, 1): (Z / re - 1) * a * EPS**2 / (RHO2 + EPS**2) ** 2})
    total = two_form({k: F1.comps[c][0, 0] + F2.comps[c][0, 0] + F3.comps[c][0, 0]
                      for c, k in enumerate(multi_indices(DIM, 2))})
    return Scenario(
        name="dirac_monopole",
        alpha=alpha,
        potential=GaugePotential(EpsilonFamily(pot.compiled(), "i A_eps, regularised Dirac potential"),
                                 U1, "dirac_monopole"),
        singular=sing.compiled(_off_axis)(0.0),
        pieces={"F1": EpsilonFamily(F1.compiled(), "monopole term"),
                "F2": EpsilonFamily(F2.compiled(), "vanishing-flux term"),
                "F3": EpsilonFamily(F3.compiled(), "wire term"),
                "total": EpsilonFamily(total.compiled(), "F1 + F2 + F3")},
        piece_scale=1j,
        default_region=CompactRegion((-1, -1, -1, 0), (1, 1, 1, 1)),
        default_surface=sphere(1.0, orientation=-1),
        default_loop=circle_curve(0.5, center=(0, 0, -1, 0)),
        description="Dirac monopole with its Dirac string on the negative z-axis",
        options={"real_potential": EpsilonFamily(real_pot.compiled(), "A_eps (real)")},
    )


def _a_menu(choice: str) -> list:
    e1, e2, e3 = E1, E2, E3
    zero = _zero(2)
    if choice == "zero":
        return [zero] * 4
    if choice == "constant":
        return [sp.Rational(3, 10) * e1, zero, sp.Rational(1, 5) * e2, -sp.Rational(1, 10) * e3]
    if choice == "linear":
        return [sp.Rational(1, 2) * Y * e1 + sp.Rational(1, 10) * e3,
                sp.Rational(2, 5) * Z * e2,
                sp.Rational(1, 5) * W * (e1 + e2),
                sp.Rational(3, 10) * X * e3]
    if choice == "quadratic":
        return [sp.Rational(3, 10) * (X**2 - Y**2) * e1,
                sp.Rational(1, 5) * X * Z * e2,
                sp.Rational(1, 4) * Y * W * e3,
                sp.Rational(1, 10) * (Z**2 + X * Y) * (e1 - e3)]
    raise ValueError(f"unknown regular 1-form {choice!r}; choose from {A_CHOICES}")


A_CHOICES = ("zero", "constant", "linear", "quadratic")


@lru_cache(maxsize=None)
def su2_singular(alpha: float = 0.3, a_choice: str = "linear") -> Scenario:
    """omega_eps = diag(i alpha, -i alpha) A_eps + a, A_eps = (x dy - y dx)/(x^2+y^2+eps^2)."""
    if abs(2 * alpha - round(2 * alpha)) < 1e-9:
        warnings.warn("2 alpha is an integer: the holonomy around the singular set is trivial",
                      stacklevel=2)
    al = sp.Float(alpha, 17) if not float(alpha).is_integer() else sp.nsimplify(alpha)
    H = sp.Matrix([[I * al, 0], [0, -I * al]])
    A_eps = [-Y / (RHO2 + EPS**2), X / (RHO2 + EPS**2), 0, 0]
    A_sing = [-Y / RHO2, X / RHO2, 0, 0]
    a = _a_menu(a_choice)
    omega = SymbolicForm(1, SU2, [H * A_eps[i] + a[i] for i in range(4)])
    sing = SymbolicForm(1, SU2, [H * A_sing[i] + a[i] for i in range(4)])

    # singular piece: diagonal i alpha dA_eps, off-diagonal -2 i alpha a_T ^ A_eps
    aT = [c[0, 1] for c in a]
    t_part = wedge11(aT, A_eps)
    dA = {(0, 1): 2 * EPS**2 / (RHO2 + EPS**2) ** 2}
    F1 = {}
    for idx in multi_indices(DIM, 2):
        d = I * al * dA.get(idx, 0)
        t = -2 * I * al * t_part[idx]
        F1[idx] = sp.Matrix([[d, t], [-sp.conjugate(t), -d]])
    # regular piece: da + [a, a] taken pointwise
    F2 = symbolic_curvature(SymbolicForm(1, SU2, a))
    return Scenario(
        name="su2_singular",
        alpha=alpha,
        potential=GaugePotential(EpsilonFamily(omega.compiled(), f"omega_eps with a = {a_choice}"),
                                 SU2, "su2_singular"),
        singular=sing.compiled(_off_axis)(0.0),
        pieces={"F1": EpsilonFamily(two_form(F1, SU2).compiled(), "singular part"),
                "F2": EpsilonFamily(F2.compiled(), "regular part da + [a, a]")},
        default_region=CompactRegion((-1, -1, -1, -1), (1, 1, 1, 1)),
        default_surface=disk(1.0),
        default_loop=circle_curve(1.0),
        description="singular SU(2) connection with nontrivial limit holonomy",
        options={"a": a_choice},
    )


SCENARIOS = {
    "flat_wire": flat_wire,
    "dirac_monopole": dirac_monopole,
    "su2_singular": su2_singular,
}


def get_scenario(name: str, alpha: float | None = None, **options) -> Scenario:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
    defaults = {"flat_wire": 1.0, "dirac_monopole": 1.0, "su2_singular": 0.3}
    alpha = defaults[name] if alpha is None else float(alpha)
    if name == "su2_singular":
        return su2_singular(alpha, options.get("a_choice") or "linear")
    return SCENARIOS[name](alpha)


def parse_surface(text: str, default: object = None):
    """'disk:R=1', 'sphere:R=1', 'sphere:R=1,orientation=1', 'ball:R=2'."""
    from .quadrature import ball

    if not text:
        return default
    kind, _, rest = text.partition(":")
    params = dict(kv.split("=") for kv in rest.split(",") if kv)
    R = float(params.get("R", 1.0))
    if kind == "disk":
        return disk(R)
    if kind == "sphere":
        orient = int(params.get("orientation", -1))
        return sphere(R, orientation=orient)
    if kind == "ball":
        return ball(R)
    raise ValueError(f"unknown surface {text!r}")


def parse_loop(text: str, default: ParamCurve | None = None) -> ParamCurve | None:
    """'circle:R=1' or 'circle:R=0.5,z=-1' (center offsets by coordinate name)."""
    if not text:
        return default
    kind, _, rest = text.partition(":")
    if kind != "circle":
        raise ValueError(f"unknown loop {text!r}")
    params = dict(kv.split("=") for kv in rest.split(",") if kv)
    center = [float(params.get(c, 0.0)) for c in "xyzw"]
    return circle_curve(float(params.get("R", 1.0)), center=center)


def parse_region(text: str, default: CompactRegion | None) -> CompactRegion | None:
    """'box' (scenario default) or 'box:-1,1,-1,1,-1,1,0,1[,grid=17]'."""
    if not text or text == "box":
        return default
    kind, _, rest = text.partition(":")
    if kind != "box":
        raise ValueError(f"unknown region {text!r}")
    parts = rest.split(",")
    grid = 17
    nums = []
    for p in parts:
        if p.startswith("grid="):
            grid = int(p[5:])
        else:
            nums.append(float(p))
    if len(nums) % 2:
        raise ValueError("box bounds come in (lower, upper) pairs")
    return CompactRegion(tuple(nums[0::2]), tuple(nums[1::2]), grid)


def is_patch(obj) -> bool:
    return isinstance(obj, SurfacePatch)


def pi_multiple(value: complex) -> str:
    return f"{complex(value) / math.pi:.6g} pi"
