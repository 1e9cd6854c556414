"""Matrix Lie algebras and groups of size <= 2: u(1), su(2) and gl(n, C).

Elements are stored as complex matrices so that u(1) and su(2) share one
code path; u(1) values are 1x1 purely imaginary matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

STRUCT_TOL = 1e-12

_PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class LieError(ValueError):
    """Raised for tag mismatches and singular group operations."""


@dataclass(frozen=True)
class AlgebraTag:
    kind: str  # "u1", "su2" or "gl"
    n: int

    def __post_init__(self):
        if self.kind not in ("u1", "su2", "gl"):
            raise ValueError(f"unknown algebra kind {self.kind!r}")
        if not 1 <= self.n <= 2:
            raise ValueError("only matrix sizes 1 and 2 are supported")
        if self.kind == "u1" and self.n != 1 or self.kind == "su2" and self.n != 2:
            raise ValueError(f"{self.kind} requires n={1 if self.kind == 'u1' else 2}")

    @property
    def real_dim(self) -> int:
        return {"u1": 1, "su2": 3}.get(self.kind, 2 * self.n * self.n)

    def __str__(self):
        return self.kind if self.kind != "gl" else f"gl{self.n}"


U1 = AlgebraTag("u1", 1)
SU2 = AlgebraTag("su2", 2)
SCALAR = AlgebraTag("gl", 1)


def gl(n: int) -> AlgebraTag:
    return AlgebraTag("gl", n)


def parse_tag(name: str) -> AlgebraTag:
    if name == "u1":
        return U1
    if name == "su2":
        return SU2
    if name.startswith("gl"):
        return gl(int(name[2:]))
    raise ValueError(f"unknown algebra tag {name!r}")


def algebra_defect(tag: AlgebraTag, m) -> float:
    """Largest violation of the structural constraints of `tag` by `m`."""
    m = np.asarray(m, dtype=complex)
    if tag.kind == "u1":
        return float(np.max(np.abs(m.real)))
    if tag.kind == "su2":
        herm = np.max(np.abs(m + np.conj(np.swapaxes(m, -1, -2))))
        return float(max(herm, np.max(np.abs(np.trace(m, axis1=-2, axis2=-1)))))
    return 0.0


def group_defect(tag: AlgebraTag, g) -> float:
    g = np.asarray(g, dtype=complex)
    if tag.kind == "u1":
        return float(np.max(np.abs(np.abs(g) - 1.0)))
    if tag.kind == "su2":
        eye = np.eye(2)
        unit = np.max(np.abs(np.conj(np.swapaxes(g, -1, -2)) @ g - eye))
        return float(max(unit, np.max(np.abs(np.linalg.det(g) - 1.0))))
    return 0.0


@dataclass(frozen=True, eq=False)
class LieValue:
    """An element of the Lie algebra named by `tag`."""

    tag: AlgebraTag
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex).reshape(self.tag.n, self.tag.n)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if algebra_defect(self.tag, m) > STRUCT_TOL * max(1.0, np.max(np.abs(m))):
            raise LieError(f"entries violate {self.tag} constraints")

    @classmethod
    def zero(cls, tag: AlgebraTag) -> LieValue:
        return cls(tag, np.zeros((tag.n, tag.n)))

    def _check(self, other: LieValue):
        if other.tag != self.tag:
            raise LieError("algebra mismatch")

    def __add__(self, other: LieValue) -> LieValue:
        self._check(other)
        return LieValue(self.tag, self.entries + other.entries)

    def __sub__(self, other: LieValue) -> LieValue:
        self._check(other)
        return LieValue(self.tag, self.entries - other.entries)

    def __neg__(self) -> LieValue:
        return LieValue(self.tag, -self.entries)

    def __mul__(self, s: float) -> LieValue:
        return LieValue(self.tag, s * self.entries)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def allclose(self, other: LieValue, atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.entries - other.entries)) <= atol)

    def __repr__(self):
        return f"LieValue({self.tag}, {self.entries.tolist()})"


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of U(1), SU(2) or GL(n, C)."""

    tag: AlgebraTag
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex).reshape(self.tag.n, self.tag.n)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if group_defect(self.tag, m) > 1e-10:
            raise LieError(f"entries are not an element of the {self.tag} group")

    @classmethod
    def identity(cls, tag: AlgebraTag) -> GroupElement:
        return cls(tag, np.eye(tag.n))

    def __matmul__(self, other: GroupElement) -> GroupElement:
        if other.tag != self.tag:
            raise LieError("algebra mismatch")
        return GroupElement(self.tag, self.entries @ other.entries)

    def inverse(self) -> GroupElement:
        if self.tag.kind in ("u1", "su2"):
            return GroupElement(self.tag, np.conj(self.entries.T))
        return GroupElement(self.tag, np.linalg.inv(self.entries))

    def distance(self, other: GroupElement) -> float:
        """Operator-norm distance between the two matrices."""
        return float(np.linalg.norm(self.entries - other.entries, 2))

    def __repr__(self):
        return f"GroupElement({self.tag}, {self.entries.tolist()})"


def basis(tag: AlgebraTag) -> np.ndarray:
    """Real basis of the algebra, shape (real_dim, n, n).

    For su(2) this is e_k = i sigma_k / 2, so [e1, e2] = -e3.
    """
    if tag.kind == "u1":
        return np.array([[[1j]]])
    if tag.kind == "su2":
        return 0.5j * _PAULI
    n = tag.n
    out = []
    for a in range(n):
        for b in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[a, b] = 1
            out.extend([e, 1j * e])
    return np.array(out)


def to_coords(tag: AlgebraTag, m) -> np.ndarray:
    """Real coordinates of algebra matrices (..., n, n) in `basis(tag)`."""
    m = np.asarray(m, dtype=complex)
    if tag.kind == "u1":
        return m[..., 0, 0].imag[..., None]
    if tag.kind == "su2":
        # e_k = i sigma_k / 2 and tr(sigma_j sigma_k) = 2 delta_jk
        return np.einsum("...ab,kba->...k", m, _PAULI).imag
    flat = m.reshape(m.shape[:-2] + (tag.n * tag.n,))
    return np.stack([flat.real, flat.imag], axis=-1).reshape(m.shape[:-2] + (-1,))


def from_coords(tag: AlgebraTag, c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.einsum("...k,kab->...ab", c, basis(tag))


# -- array kernels, broadcasting over leading axes ------------------------


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def commutator(a, b):
    return a @ b - b @ a


def expm_array(tag: AlgebraTag, a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if tag.kind == "u1":
        return np.exp(a)
    if tag.kind == "su2":
        theta = np.sqrt(np.maximum(np.linalg.det(a).real, 0.0))[..., None, None]
        # sin(theta)/theta written via sinc to stay exact at theta = 0
        return np.cos(theta) * np.eye(2) + np.sinc(theta / np.pi) * a
    if a.ndim == 2:
        return scipy.linalg.expm(a)
    return np.array([scipy.linalg.expm(x) for x in a.reshape(-1, tag.n, tag.n)]).reshape(a.shape)


def inverse_array(tag: AlgebraTag, g):
    if tag.kind in ("u1", "su2"):
        return dagger(g)
    return np.linalg.inv(g)


def project_array(tag: AlgebraTag, g) -> np.ndarray:
    """Nearest group element: phase normalisation for U(1), polar factor for SU(2)."""
    g = np.asarray(g, dtype=complex)
    if tag.kind == "u1":
        return g / np.abs(g)
    if tag.kind == "su2":
        w, _, vh = np.linalg.svd(g)
        u = w @ vh
        det = np.linalg.det(u)[..., None, None]
        return u / np.sqrt(det)
    return g


# -- public operations ------------------------------------------------------


def bracket(a: LieValue, b: LieValue) -> LieValue:
    if a.tag != b.tag:
        raise LieError("algebra mismatch")
    return LieValue(a.tag, commutator(a.entries, b.entries))


def adjoint(g: GroupElement, a: LieValue) -> LieValue:
    """g a g^-1."""
    if g.tag != a.tag:
        raise LieError("algebra mismatch")
    return LieValue(a.tag, g.entries @ a.entries @ inverse_array(g.tag, g.entries))


def exp(a: LieValue) -> GroupElement:
    return GroupElement(a.tag, expm_array(a.tag, a.entries))


def log(g: GroupElement) -> LieValue:
    """Principal logarithm; the U(1) branch is (-pi, pi]."""
    m = g.entries
    if g.tag.kind == "u1":
        return LieValue(g.tag, [[1j * np.angle(m[0, 0])]])
    if g.tag.kind == "su2":
        half_tr = 0.5 * np.trace(m).real
        if half_tr <= -1.0 + 1e-12:
            raise LieError("log branch point")
        skew = 0.5 * (m - dagger(m))
        skew -= 0.5 * np.trace(skew) * np.eye(2)
        s = np.sqrt(max(np.linalg.det(skew).real, 0.0))
        theta = np.arctan2(s, half_tr)
        factor = 1.0 if s == 0.0 else theta / s
        return LieValue(g.tag, factor * skew)
    eig = np.linalg.eigvals(m)
    if np.any(np.abs(eig.imag) < 1e-12) and np.any(eig.real[np.abs(eig.imag) < 1e-12] <= 0):
        raise LieError("log branch point")
    return LieValue(g.tag, scipy.linalg.logm(m))


def project(g: GroupElement | np.ndarray, tag: AlgebraTag | None = None) -> GroupElement:
    if isinstance(g, GroupElement):
        tag, g = g.tag, g.entries
    return GroupElement(tag, project_array(tag, g))
