"""Holonomy of the singular SU(2) connection around the singular set.

Sweeps alpha, compares the epsilon -> 0 holonomy with diag(exp(-2 pi alpha i),
exp(2 pi alpha i)) and reports how far the curvature split is from the
structure-equation curvature for each regular 1-form in the menu.
"""

import argparse
import warnings
from dataclasses import dataclass

import numpy as np

from gencon.colombeau import EpsilonLadder
from gencon.connection import curvature_form
from gencon.holonomy import circle_curve, holonomy, holonomy_net
from gencon.scenarios import A_CHOICES, su2_singular


@dataclass
class Config:
    alphas: str = "0.1,0.25,0.3,0.45,0.7"
    radius: float = 1.0
    count: int = 10
    seed: int = 0


def main(cfg: Config) -> None:
    loop = circle_curve(cfg.radius)
    ladder = EpsilonLadder(count=cfg.count)
    print("alpha   |hol(eps=0) - diag|   |ladder limit - diag|")
    for alpha in (float(a) for a in cfg.alphas.split(",")):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sc = su2_singular(alpha, "zero")
        want = np.diag([np.exp(-2j * np.pi * alpha), np.exp(2j * np.pi * alpha)])
        sing = holonomy(sc.singular, None, loop).entries
        net = holonomy_net(sc.potential, loop, ladder)
        print(f"{alpha:5.2f}   {np.linalg.norm(sing - want, 2):.2e}             "
              f"{np.linalg.norm(net.limit.entries - want, 2):.2e}")

    rng = np.random.default_rng(cfg.seed)
    print("\nregular 1-form   max |F - (F1 + F2)| over 100 points, 3 ladder entries")
    for choice in A_CHOICES:
        sc = su2_singular(0.3, choice)
        pts = rng.uniform(sc.default_region.lower, sc.default_region.upper, size=(100, 4))
        gap = 0.0
        for eps in ladder.eps[:3]:
            F = curvature_form(sc.potential.at(eps)).coefficients(pts)
            P = sc.pieces_sum().make(eps).coefficients(pts)
            gap = max(gap, float(np.max(np.abs(F - P))))
        print(f"{choice:>14}   {gap:.2e}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in vars(Config()).items():
        p.add_argument(f"--{name}", type=type(default), default=default)
    main(Config(**vars(p.parse_args())))
