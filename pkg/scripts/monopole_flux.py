"""Sphere fluxes of the Dirac monopole curvature pieces, per ladder entry.

The monopole term F1 and the wire term F3 carry opposite fluxes of size
2 pi alpha; F2 vanishes in the limit, and so does the total (its Chern number).
"""

import argparse
import math
from dataclasses import dataclass

from gencon.characteristic import chern_number
from gencon.colombeau import EpsilonLadder
from gencon.quadrature import flux_limit, sphere
from gencon.scenarios import dirac_monopole


@dataclass
class Config:
    alpha: float = 1.0
    radius: float = 1.0
    orientation: int = -1
    count: int = 14


def main(cfg: Config) -> None:
    sc = dirac_monopole(cfg.alpha)
    surface = sphere(cfg.radius, orientation=cfg.orientation)
    ladder = EpsilonLadder(count=cfg.count)
    print(f"{'piece':>6} {'limit':>16} {'/ 2 pi alpha':>13} {'order':>7} {'err_est':>9}")
    for name, fam in sc.pieces.items():
        res = flux_limit(fam, surface, ladder)
        ratio = res.limit.real / (2 * math.pi * cfg.alpha) if cfg.alpha else float("nan")
        print(f"{name:>6} {res.limit.real:+16.10f} {ratio:+13.6f} {res.order:7.3f} "
              f"{res.err_est:9.1e}")
    c1 = chern_number(sc.potential, surface, ladder)
    print(f"first Chern number: {c1.limit.real:+.3e} (err_est {c1.err_est:.1e})")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in vars(Config()).items():
        p.add_argument(f"--{name}", type=type(default), default=default)
    main(Config(**vars(p.parse_args())))
