"""Distributional shadow of the regularised wire curvature.

Pairs F_eps against a Gaussian over a disk for every ladder entry and
extrapolates; the limit should be 2 pi i alpha times the test function at
the origin.
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np

from gencon.colombeau import EpsilonLadder, shadow_pairing, write_ladder_csv
from gencon.quadrature import disk
from gencon.scenarios import flat_wire


@dataclass
class Config:
    alpha: float = 1.0
    radius: float = 2.0
    width: float = 1.0
    eps0: float = 2**-4
    count: int = 14
    csv: str | None = None


def main(cfg: Config) -> None:
    sc = flat_wire(cfg.alpha)
    test = lambda p: np.exp(-(p[..., 0] ** 2 + p[..., 1] ** 2) / cfg.width**2)  # noqa: E731
    ladder = EpsilonLadder(cfg.eps0, 0.5, cfg.count)
    res = shadow_pairing(sc.pieces["F"], test, disk(cfg.radius), ladder)
    for e, v in zip(res.net.eps, res.net.values):
        print(f"eps = {e:.3e}   <F_eps, phi> = {v.imag:+.12f} i")
    target = 2 * math.pi * cfg.alpha
    print(f"limit {res.limit.imag:+.12f} i, target {target:+.12f} i, "
          f"error {abs(res.limit - 1j * target):.2e}, err_est {res.err_est:.2e}")
    if cfg.csv:
        write_ladder_csv(cfg.csv, res.net.eps, res.net.values)


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in vars(Config()).items():
        p.add_argument(f"--{name}", type=type(default) if default is not None else str,
                       default=default)
    main(Config(**vars(p.parse_args())))
