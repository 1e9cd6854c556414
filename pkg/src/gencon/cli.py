"""Command-line front end: `gencon <command> --scenario NAME [flags]`.

Every command prints one JSON report with fixed keys; CSV ladders are written
on request.  Exit codes: 0 ok, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .colombeau import (EpsilonFamily, EpsilonLadder, NumericalError, classify_moderate,
                        classify_negligible, shadow_pairing, write_ladder_csv)
from .quadrature import QuadratureError, disk, flux_limit

COMMANDS = ("flux", "holonomy", "classify", "shadow", "chern", "decompose", "axioms",
            "canonicalize", "list-scenarios")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "flux"
    scenario: str = "flat_wire"
    alpha: float | None = None
    eps0: float = 2.0**-4
    ratio: float = 0.5
    count: int = 14
    tol: float | None = None
    step: float | None = None
    out: str | None = None
    trace: bool = False
    patch: str = ""
    loop: str = ""
    region: str = ""
    piece: str = ""
    a: str = "linear"
    csv: str | None = None
    perturb: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha is not None and not math.isfinite(self.alpha):
            raise UsageError("alpha must be finite")
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")

    @property
    def ladder(self) -> EpsilonLadder:
        try:
            return EpsilonLadder(self.eps0, self.ratio, self.count)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {repr(v) if isinstance(v, float) else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, **overrides) -> RunConfig:
        kinds = {f.name: f.type for f in fields(cls)}
        values = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in kinds:
                raise UsageError(f"config line {n}: cannot parse {line!r}")
            values[key] = _convert(kinds[key], raw.strip())
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def _convert(kind: str, raw: str):
    try:
        if "bool" in kind:
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if "float" in kind:
            return float(raw)
        if "int" in kind:
            return int(raw)
    except ValueError:
        raise UsageError(f"bad value {raw!r}") from None
    return raw


# -- reports --------------------------------------------------------------------


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _pair(z) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def report(cfg: RunConfig, ladder=(), limit=None, order=None, err_est=None, verdict=None,
           diagnostics=None) -> dict:
    return {
        "command": cfg.command,
        "scenario": cfg.scenario,
        "params": _params(cfg),
        "ladder": [{"epsilon": _num(e), "value": _pair(v)} for e, v in ladder],
        "limit": None if limit is None else _pair(limit),
        "order": None if order is None else _num(order),
        "err_est": None if err_est is None else _num(err_est),
        "verdict": verdict,
        "diagnostics": diagnostics or {},
    }


def _params(cfg: RunConfig) -> dict:
    out = dataclasses.asdict(cfg)
    for k in ("command", "scenario", "out", "csv"):
        out.pop(k)
    return out


def _mat(m) -> list:
    return [[_pair(z) for z in row] for row in np.asarray(m)]


# -- commands -------------------------------------------------------------------


def _scenario(cfg: RunConfig):
    from .scenarios import A_CHOICES, get_scenario

    if cfg.a not in A_CHOICES:
        raise UsageError(f"unknown --a {cfg.a!r}; choose from {', '.join(A_CHOICES)}")
    try:
        return get_scenario(cfg.scenario, cfg.alpha, a_choice=cfg.a)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _piece(sc, cfg: RunConfig, default: str | None = None) -> tuple[str, EpsilonFamily]:
    name = cfg.piece or default
    if not name:
        return "curvature", sc.pieces_sum()
    if name not in sc.pieces:
        raise UsageError(f"scenario {sc.name} has pieces {', '.join(sc.pieces)}, not {name!r}")
    return name, sc.pieces[name]


def _surface(sc, cfg):
    from .scenarios import parse_surface

    try:
        return parse_surface(cfg.patch, sc.default_surface)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _maybe_csv(cfg, eps, values):
    if cfg.csv:
        write_ladder_csv(cfg.csv, eps, values)


def cmd_flux(cfg: RunConfig) -> dict:
    sc = _scenario(cfg)
    name, fam = _piece(sc, cfg, "total" if "total" in sc.pieces else None)
    res = flux_limit(fam, _surface(sc, cfg), cfg.ladder, cfg.tol)
    _maybe_csv(cfg, res.net.eps, res.net.values)
    return report(cfg, zip(res.net.eps, res.net.values), res.limit, res.order, res.err_est,
                  diagnostics={"piece": name, "max_quad_error": _num(np.max(res.quad_errors))})


def cmd_holonomy(cfg: RunConfig) -> dict:
    from .holonomy import holonomy_net, transport
    from .liealg import GroupElement
    from .scenarios import parse_loop

    sc = _scenario(cfg)
    try:
        loop = parse_loop(cfg.loop, sc.default_loop)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    step = cfg.step
    net = holonomy_net(sc.potential, loop, cfg.ladder, step)
    ident = GroupElement.identity(sc.tag)
    sing = transport(sc.singular, None, loop, ident, step, trace=cfg.trace)
    diag = {
        "g_end": _mat(net.limit.entries),
        "g_end_singular": _mat(sing.g_end.entries),
        "group_defect": _num(sing.max_defect),
        "steps": sing.steps,
    }
    if cfg.trace:
        diag["trace"] = [{"t": _num(t), "g": _mat(g)} for t, g in sing.trace]
    # ladder values report the (0, 0) entry, i.e. the phase for U(1)
    return report(cfg, [(e, g.entries[0, 0]) for e, g in zip(net.eps, net.elements)],
                  net.limit.entries[0, 0], net.order, net.err_est, diagnostics=diag)


def cmd_classify(cfg: RunConfig) -> dict:
    from .scenarios import parse_region

    sc = _scenario(cfg)
    try:
        region = parse_region(cfg.region, sc.default_region)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.piece:
        name, fam = _piece(sc, cfg)
    else:
        name, fam = "potential", sc.potential.family
    res = classify_moderate(fam, region, 0, cfg.ladder)
    neg = classify_negligible(fam, region, 6, cfg.ladder)
    _maybe_csv(cfg, cfg.ladder.eps, res.sups)
    return report(cfg, zip(cfg.ladder.eps, res.sups), None, res.order, None, res.verdict,
                  diagnostics={"target": name, "slope": _num(res.slope),
                               "negligible_up_to": neg.negligible_up_to,
                               "negligible": neg.verdict})


def gaussian(points):
    p = np.asarray(points)
    return np.exp(-p[..., 0] ** 2 - p[..., 1] ** 2)


def cmd_shadow(cfg: RunConfig) -> dict:
    sc = _scenario(cfg)
    name, fam = _piece(sc, cfg, "F" if "F" in sc.pieces else None)
    surface = _surface(sc, cfg) if cfg.patch else disk(2.0)
    res = shadow_pairing(fam, gaussian, surface, cfg.ladder, cfg.tol)
    _maybe_csv(cfg, res.net.eps, res.net.values)
    return report(cfg, zip(res.net.eps, res.net.values), res.limit, res.order, res.err_est,
                  diagnostics={"piece": name, "test": "exp(-x^2-y^2)"})


def cmd_chern(cfg: RunConfig) -> dict:
    from .characteristic import chern_number

    sc = _scenario(cfg)
    surface = _surface(sc, cfg)
    k = 2 if cfg.patch.startswith("ball") else 1
    res = chern_number(sc.potential, surface, cfg.ladder, k, cfg.tol,
                       allow_boundary=cfg.patch.startswith(("ball", "disk")))
    _maybe_csv(cfg, res.net.eps, res.net.values)
    return report(cfg, zip(res.net.eps, res.net.values), res.limit, res.order, res.err_est,
                  diagnostics={"k": k})


def cmd_decompose(cfg: RunConfig) -> dict:
    """Per-piece fluxes plus the pointwise gap between the pieces and the curvature."""
    from .connection import curvature_form

    sc = _scenario(cfg)
    region = sc.default_region
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(region.lower, region.upper, size=(100, len(region.lower)))
    gaps = []
    for eps in cfg.ladder.eps[:3]:
        F = curvature_form(sc.potential.at(eps)).coefficients(pts)
        P = sc.pieces_sum().make(eps).coefficients(pts)
        gaps.append(float(np.max(np.linalg.norm(F - P, ord=2, axis=(-2, -1)))))
    surface = _surface(sc, cfg)
    fluxes = {}
    if sc.tag.n == 1:
        for name, fam in sc.pieces.items():
            res = flux_limit(fam, surface, cfg.ladder, cfg.tol)
            fluxes[name] = {"limit": _pair(res.limit), "err_est": _num(res.err_est)}
    return report(cfg, zip(cfg.ladder.eps[:3], gaps), None, None, max(gaps),
                  verdict=bool(max(gaps) <= 1e-8),
                  diagnostics={"pieces": list(sc.pieces), "fluxes": fluxes})


def _bundle_setup(cfg, sc):
    from .connection import group_lattice, random_samples

    region = sc.default_region
    samples = random_samples(sc.tag, region.lower, region.upper, 20, cfg.seed)
    lattice = group_lattice(sc.tag)[::4]
    return samples, lattice


def cmd_axioms(cfg: RunConfig) -> dict:
    from .connection import check_axioms, reconstruct_bundle_form

    sc = _scenario(cfg)
    samples, lattice = _bundle_setup(cfg, sc)
    fam = EpsilonFamily(lambda eps: reconstruct_bundle_form(sc.potential, eps))
    res = check_axioms(fam, samples, lattice, cfg.ladder)
    worst = np.maximum(res.res_i, res.res_ii)
    return report(cfg, zip(res.eps, worst), None, None, float(np.max(worst)),
                  verdict=bool(np.max(worst) <= 1e-12),
                  diagnostics={"res_i": [_num(r) for r in res.res_i],
                               "res_ii": [_num(r) for r in res.res_ii]})


def perturbed_family(sc, scale: float = 1.0, power: int = 3, seed: int = 0) -> EpsilonFamily:
    """Reconstructed connection plus scale * eps^power * (fixed smooth algebra-valued term)."""
    from .connection import BundleForm, random_algebra, reconstruct_bundle_form

    rng = np.random.default_rng(seed)
    tag = sc.tag
    base_term = random_algebra(tag, rng)
    fib_term = random_algebra(tag, rng)
    fib_map = rng.normal(size=(tag.real_dim, tag.real_dim))

    from .liealg import from_coords, inverse_array, to_coords

    def make(eps):
        om = reconstruct_bundle_form(sc.potential, eps)
        c = scale * eps**power

        def omega(x, g, t):
            v = om(x, g, t)
            gi = inverse_array(tag, g)
            bump = (np.sin(x[0]) * float(np.sum(t.base))) * base_term
            fib = from_coords(tag, fib_map @ to_coords(tag, g @ np.asarray(t.fiber, complex) @ gi))
            return v + c * (gi @ (bump + fib + fib_term * float(t.base[1])) @ g)

        return BundleForm(omega, 1, tag)

    return EpsilonFamily(make, f"reconstructed + {scale} eps^{power} perturbation")


def cmd_canonicalize(cfg: RunConfig) -> dict:
    from .colombeau import negligible_from_sups
    from .connection import (CanonicalizationError, bundle_form_distance, canonical_range,
                             canonicalize, check_axioms, reconstruct_bundle_form)

    sc = _scenario(cfg)
    samples, lattice = _bundle_setup(cfg, sc)
    pert = perturbed_family(sc, cfg.perturb, 3, cfg.seed)
    full = cfg.ladder
    start = canonical_range(pert, samples, full)
    if len(full.eps) - start < 2:
        raise CanonicalizationError("ε too large: canonicalization fails on the ladder")
    # only the entries below the empirical epsilon_0 are canonicalized
    ladder = EpsilonLadder(float(full.eps[start]), full.ratio, len(full.eps) - start)
    canon = EpsilonFamily(lambda eps: canonicalize(pert.make(eps)))
    res = check_axioms(canon, samples, lattice, ladder)
    dist = np.array([bundle_form_distance(pert.make(e), canon.make(e), samples)
                     for e in ladder.eps])
    classical = np.array([bundle_form_distance(canon.make(e), reconstruct_bundle_form(sc.potential, e),
                                               samples) for e in ladder.eps])
    neg = negligible_from_sups(ladder.eps, dist, 6)
    worst = float(max(np.max(res.res_i), np.max(res.res_ii)))
    return report(cfg, zip(ladder.eps, dist), None, neg.slope, worst,
                  verdict=bool(worst <= 1e-12 and neg.slope >= 2.5),
                  diagnostics={"axiom_residual": _num(worst),
                               "eps0_empirical": _num(ladder.eps[0]),
                               "skipped_entries": start,
                               "negligible_up_to": neg.negligible_up_to,
                               "distance_to_classical": [_num(d) for d in classical]})


def cmd_list(cfg: RunConfig) -> dict:
    from .scenarios import SCENARIOS, get_scenario

    info = {}
    for name in SCENARIOS:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sc = get_scenario(name)
        info[name] = {"algebra": sc.tag.kind, "default_alpha": sc.alpha,
                      "pieces": list(sc.pieces), "description": sc.description}
    return report(cfg, diagnostics={"scenarios": info})


DISPATCH = {
    "flux": cmd_flux, "holonomy": cmd_holonomy, "classify": cmd_classify, "shadow": cmd_shadow,
    "chern": cmd_chern, "decompose": cmd_decompose, "axioms": cmd_axioms,
    "canonicalize": cmd_canonicalize, "list-scenarios": cmd_list,
}


def run(cfg: RunConfig) -> dict:
    return DISPATCH[cfg.command](cfg)


# -- entry point ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gencon", description="Generalised gauge connections on an epsilon ladder.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="file of `key = value` lines; flags override it")
    p.add_argument("--scenario")
    p.add_argument("--alpha", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--trace", action="store_true", default=None)
    p.add_argument("--patch", help="disk:R=1 | sphere:R=1[,orientation=1] | ball:R=2")
    p.add_argument("--loop", help="circle:R=1[,x=..,y=..,z=..,w=..]")
    p.add_argument("--region", help="box | box:lo,hi,lo,hi,...[,grid=17]")
    p.add_argument("--piece", help="named curvature piece, e.g. F3")
    p.add_argument("--a", help="regular su(2) 1-form for su2_singular")
    p.add_argument("--csv", help="also write the epsilon ladder as CSV")
    p.add_argument("--perturb", type=float)
    p.add_argument("--seed", type=int)
    return p


def config_from_args(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    path = ns.pop("config")
    text = ""
    if path:
        with open(path) as fh:
            text = fh.read()
    return RunConfig.loads(text, **ns)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _failure_details(exc) -> dict:
    out = {}
    for key in ("estimate", "error", "t"):
        v = getattr(exc, key, None)
        if isinstance(v, (int, float)):
            out[key] = _num(v)
    res = getattr(exc, "residuals", None)
    if res is not None:
        out["residuals"] = [_num(r) for r in np.ravel(np.abs(res))]
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    out = None
    try:
        cfg = config_from_args(argv)
        out = cfg.out
        doc = run(cfg)
    except (UsageError, OSError) as exc:
        sys.stderr.write(f"gencon: error: {exc}\n")
        return 2
    except (NumericalError, QuadratureError, FloatingPointError, np.linalg.LinAlgError) as exc:
        doc = {"command": argv[0] if argv else None, "error": type(exc).__name__,
               "message": str(exc),
               "diagnostics": _failure_details(exc)}
        _emit(doc, out)
        return 3
    _emit(doc, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
