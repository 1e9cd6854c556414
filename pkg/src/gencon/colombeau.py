"""epsilon-nets of forms and numbers: moderateness, negligibility and association.

Growth and decay rates are read off a geometric epsilon ladder by fitting the
slope of log sup|.| against log eps.  The sup over a compact region is
approximated on a lattice that is then zoomed around the best candidates,
which lets it follow peaks that sharpen with eps.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

from .forms import KForm, partials, second_partials

N_MAX = 40


class NumericalError(RuntimeError):
    """Base class for failures the CLI reports with exit code 3."""


class ClassificationError(NumericalError):
    pass


class ExtrapolationError(NumericalError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ShadowError(NumericalError):
    pass


@dataclass(frozen=True)
class EpsilonLadder:
    eps0: float = 2.0**-4
    ratio: float = 0.5
    count: int = 14

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if self.count < 2:
            raise ValueError("ladder needs at least two entries")

    @property
    def eps(self) -> np.ndarray:
        return self.eps0 * self.ratio ** np.arange(self.count)


@dataclass(frozen=True)
class EpsilonFamily:
    make: Callable[[float], object]
    meta: str = ""

    def __call__(self, eps: float):
        return self.make(eps)

    @classmethod
    def constant(cls, obj, meta: str = "constant net") -> EpsilonFamily:
        return cls(lambda eps: obj, meta)


@dataclass
class GeneralizedNumber:
    ladder: EpsilonLadder
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.ladder.count,):
            raise ValueError("one value per ladder entry is required")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("generalized number has non-finite samples")

    @property
    def eps(self) -> np.ndarray:
        return self.ladder.eps


@dataclass(frozen=True)
class CompactRegion:
    lower: tuple
    upper: tuple
    grid: int = 17

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != hi.shape or not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("region bounds must be finite and of equal length")
        if np.any(lo >= hi):
            raise ValueError("region needs lower < upper on every axis")
        if self.grid < 9:
            raise ValueError("lattice needs at least 9 points per axis")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def lattice(self) -> np.ndarray:
        axes = [np.linspace(a, b, self.grid) for a, b in zip(self.lower, self.upper)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)


# -- sup estimation ---------------------------------------------------------


def _magnitude(form: KForm, deriv_order: int) -> Callable[[np.ndarray], np.ndarray]:
    def mag(points):
        n = points.shape[0]
        parts = [np.abs(form.coefficients(points)).reshape(n, -1)]
        if deriv_order >= 1:
            parts.append(np.abs(partials(form, points)).reshape(n, -1))
        if deriv_order >= 2:
            parts.append(np.abs(second_partials(form, points)).reshape(n, -1))
        with np.errstate(invalid="ignore"):
            return np.concatenate(parts, axis=1).max(axis=1)

    return mag


def lattice_sup(fn: Callable[[np.ndarray], np.ndarray], region: CompactRegion,
                zoom_levels: int = 24, candidates: int = 3, zoom_grid: int = 9) -> float:
    """sup of a non-negative vectorised function over `region`.

    A lattice sup followed by repeated zooms (window of one lattice spacing
    around each of the best points); still an under-approximation of the true sup.
    """
    lo, hi = np.asarray(region.lower, float), np.asarray(region.upper, float)
    pts = region.lattice()
    vals = fn(pts)
    if np.any(np.isnan(vals)):
        raise ClassificationError("family blows up non-polynomially on ladder")
    best = float(np.max(vals))
    spacing = (hi - lo) / (region.grid - 1)
    seeds = pts[np.argsort(-vals, kind="stable")[:candidates]]
    offsets = np.stack(np.meshgrid(*[np.linspace(-1, 1, zoom_grid)] * region.dim,
                                   indexing="ij"), axis=-1).reshape(-1, region.dim)
    for _ in range(zoom_levels):
        if not np.isfinite(best):
            break
        new_seeds = []
        for s in seeds:
            cand = np.clip(s + offsets * spacing, lo, hi)
            v = fn(cand)
            if np.any(np.isnan(v)):
                raise ClassificationError("family blows up non-polynomially on ladder")
            k = int(np.argmax(v))
            best = max(best, float(v[k]))
            new_seeds.append(cand[k])
        seeds = np.unique(np.array(new_seeds), axis=0)
        spacing = spacing * 2.0 / (zoom_grid - 1)
        if np.all(spacing < 1e-13 * np.maximum(1.0, np.abs(hi - lo))):
            break
    return best


def ladder_sups(fam: EpsilonFamily, region: CompactRegion, ladder: EpsilonLadder,
                deriv_order: int = 0) -> np.ndarray:
    if deriv_order > 2:
        raise ValueError("derivative order is capped at 2")
    sups = []
    for eps in ladder.eps:
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            sups.append(lattice_sup(_magnitude(fam.make(eps), deriv_order), region))
    return np.array(sups)


def fit_slope(eps, sups) -> float:
    """Slope of log sup vs log eps over the smaller-eps half of the ladder.

    Vanishing sups count as faster than any power (+inf); overflowing ones as
    slower than any power (-inf).
    """
    eps, sups = np.asarray(eps, float), np.asarray(sups, float)
    half = slice(len(eps) // 2, None)
    e, s = eps[half], sups[half]
    if np.any(np.isinf(s)):
        return -math.inf
    pos = s > 0
    if pos.sum() < 2:
        return math.inf
    if not np.all(pos):
        # underflow in the tail: decays faster than the resolved part can show
        return math.inf
    slope = np.polyfit(np.log(e), np.log(s), 1)[0]
    return float(slope)


@dataclass
class ModerateResult:
    order: float
    verdict: bool
    slope: float
    sups: np.ndarray = field(repr=False)


@dataclass
class NegligibleResult:
    negligible_up_to: int
    verdict: bool
    slope: float
    sups: np.ndarray = field(repr=False)


def moderate_from_sups(eps, sups, n_max: float = N_MAX) -> ModerateResult:
    slope = fit_slope(eps, sups)
    order = max(0.0, -slope)
    return ModerateResult(order, bool(slope >= -n_max), slope, np.asarray(sups))


def negligible_from_sups(eps, sups, max_order: int = 6) -> NegligibleResult:
    if max_order > 8:
        raise ValueError("max_order is capped at 8")
    slope = fit_slope(eps, sups)
    if math.isinf(slope):
        m = max_order if slope > 0 else 0
    else:
        m = int(min(max_order, max(0, math.floor(slope + 0.5))))
    return NegligibleResult(m, bool(slope >= max_order - 0.5), slope, np.asarray(sups))


def classify_moderate(fam: EpsilonFamily, region: CompactRegion, deriv_order: int = 0,
                      ladder: EpsilonLadder | None = None, n_max: float = N_MAX) -> ModerateResult:
    ladder = EpsilonLadder() if ladder is None else ladder
    return moderate_from_sups(ladder.eps, ladder_sups(fam, region, ladder, deriv_order), n_max)


def classify_negligible(fam: EpsilonFamily, region: CompactRegion, max_order: int = 6,
                        ladder: EpsilonLadder | None = None) -> NegligibleResult:
    ladder = EpsilonLadder() if ladder is None else ladder
    return negligible_from_sups(ladder.eps, ladder_sups(fam, region, ladder, 0), max_order)


# -- extrapolation --------------------------------------------------------------


@dataclass
class Extrapolation:
    limit: complex
    order: float
    err_est: float
    extrapolants: np.ndarray = field(default=None, repr=False)


def _is_constant(values) -> bool:
    v = np.asarray(values)
    return bool(np.max(np.abs(v - v[-1])) <= 1e-13 * max(1.0, float(np.max(np.abs(v)))))


def aitken(eps, values, noise: float = 0.0) -> Extrapolation:
    """Richardson extrapolation with the order fitted from consecutive triples.

    On a geometric ladder, I_k = L + c eps_k^p gives D_{k+1}/D_k = ratio^p for
    the differences D_k = I_k - I_{k+1}.  Triples whose differences sit below
    `noise` or are not contracting keep the last value unextrapolated.
    """
    eps, v = np.asarray(eps, float), np.asarray(values, complex)
    if len(v) < 3:
        raise ExtrapolationError("need at least three samples")
    r = eps[1] / eps[0]
    ext, orders = [], []
    for k in range(len(v) - 2):
        d0, d1 = v[k] - v[k + 1], v[k + 1] - v[k + 2]
        if abs(d0) <= noise or abs(d1) <= noise:
            ext.append(v[k + 2])
            continue
        q = (d1 * np.conj(d0)).real / abs(d0) ** 2
        if not 0.0 < q < 0.95:
            ext.append(v[k + 2])
            continue
        ext.append(v[k + 2] - d1 * q / (1.0 - q))
        orders.append(math.log(q) / math.log(r))
    ext = np.array(ext)
    tail = np.abs(np.diff(v[-4:]))
    if len(tail) >= 3 and tail[-1] > max(noise, 1e-300) and tail[-1] > 2.0 * tail[0]:
        raise ShadowError("no distributional shadow detected")
    order = float(np.median(orders[-3:])) if orders else math.nan
    return Extrapolation(complex(ext[-1]), order, float(abs(ext[-1] - ext[-2])), ext)


def extrapolate(gn: GeneralizedNumber, tail: int | None = None) -> Extrapolation:
    """Fit L + c eps^p by nonlinear least squares on the small-eps tail."""
    eps, v = gn.eps, gn.values
    if len(v) < 6:
        raise ExtrapolationError("need at least 6 ladder points")
    if _is_constant(v):
        return Extrapolation(complex(v[-1]), math.nan, 0.0)
    n = max(6, len(v) // 2) if tail is None else tail
    e, y = eps[-n:], v[-n:]
    scale = float(np.max(np.abs(y - y[-1]))) or 1.0
    e_ref = e[0]

    def resid(theta):
        L = theta[0] + 1j * theta[1]
        c = theta[2] + 1j * theta[3]
        model = L + c * (e / e_ref) ** theta[4]
        r = (model - y) / scale
        return np.concatenate([r.real, r.imag])

    # seed the order and limit from the last Aitken triple
    try:
        seed = aitken(eps, v)
        p0 = seed.order if np.isfinite(seed.order) else 1.0
    except NumericalError:
        seed, p0 = None, 1.0
    p0 = float(np.clip(p0, 0.2, 9.0))
    L0 = y[-1] if seed is None else seed.limit
    c0 = (y[0] - L0)
    theta0 = np.array([L0.real, L0.imag, c0.real, c0.imag, p0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = least_squares(resid, theta0, bounds=([-np.inf] * 4 + [0.1], [np.inf] * 4 + [12.0]),
                            x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if not sol.success:
        raise ExtrapolationError("extrapolation fit did not converge", resid(sol.x) * scale)
    res = resid(sol.x) * scale
    L = complex(sol.x[0], sol.x[1])
    dof = max(1, 2 * n - 5)
    sigma2 = float(np.sum(res**2)) / dof
    try:
        cov = np.linalg.pinv(sol.jac.T @ sol.jac) * sigma2 * scale**2
        stderr = math.sqrt(max(cov[0, 0], 0.0) + max(cov[1, 1], 0.0))
    except np.linalg.LinAlgError:
        stderr = math.inf
    err = max(float(np.max(np.abs(res))), stderr)
    return Extrapolation(L, float(sol.x[4]), err)


# -- association ------------------------------------------------------------------


@dataclass
class ShadowResult:
    limit: complex
    err_est: float
    order: float
    net: GeneralizedNumber


def shadow_pairing(fam: EpsilonFamily, test: Callable[[np.ndarray], np.ndarray], region,
                   ladder: EpsilonLadder | None = None, tol: float | None = None) -> ShadowResult:
    """Limit of integral(fam(eps) * test) over `region` as eps -> 0.

    `region` is a patch (or union of patches) whose dimension equals the form
    degree, or a CompactRegion of that dimension in the form's chart.
    """
    from .quadrature import box, default_tol, integrate_form

    ladder = EpsilonLadder() if ladder is None else ladder
    values, qerr = [], []
    for eps in ladder.eps:
        form = fam.make(eps)
        surface = region
        if isinstance(region, CompactRegion):
            if region.dim != form.degree:
                raise ValueError("form degree must equal region dimension")
            surface = box(region.lower, region.upper, dim=form.dim)
        t = default_tol(eps) if tol is None else tol
        res = integrate_form(form, surface, t, weight=test, min_scale=eps)
        values.append(res.value)
        qerr.append(res.error)
    values = np.array(values, dtype=complex)
    net = GeneralizedNumber(ladder, values)
    if _is_constant(values):
        return ShadowResult(complex(values[-1]), float(max(qerr)), math.nan, net)
    fit = aitken(ladder.eps, values, noise=4.0 * max(qerr))
    return ShadowResult(fit.limit, max(fit.err_est, qerr[-1]), fit.order, net)


# -- export ---------------------------------------------------------------------


def write_ladder_csv(path, eps, values) -> None:
    """Columns epsilon,value_re,value_im with one header row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "value_re", "value_im"])
        for e, v in zip(eps, values):
            v = complex(v)
            w.writerow([repr(float(e)), repr(v.real), repr(v.imag)])


def read_ladder_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    eps = np.array([float(r["epsilon"]) for r in rows])
    vals = np.array([complex(float(r["value_re"]), float(r["value_im"])) for r in rows])
    return eps, vals

