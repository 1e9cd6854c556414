"""Calibrate the moderateness classifier on pure power families eps^s."""

import argparse
import math
from dataclasses import dataclass

from gencon.colombeau import (CompactRegion, EpsilonFamily, EpsilonLadder, classify_moderate,
                              classify_negligible)
from gencon.forms import constant_form


@dataclass
class Config:
    powers: str = "-3,-2,-1,-0.5,0,0.5,1,2,3"
    count: int = 14


def main(cfg: Config) -> None:
    box = CompactRegion((-1, -1, -1, 0), (1, 1, 1, 1))
    f0 = constant_form(1, 4, [1.0, -2.0, 0.5, 0.25])
    ladder = EpsilonLadder(count=cfg.count)
    print("    s    slope    order  moderate  negligible up to")
    for s in (float(x) for x in cfg.powers.split(",")):
        fam = EpsilonFamily(lambda eps, s=s: f0.scaled(eps**s))
        mod = classify_moderate(fam, box, ladder=ladder)
        neg = classify_negligible(fam, box, 6, ladder)
        print(f"{s:5.1f}  {mod.slope:+7.3f}  {mod.order:7.3f}  {str(mod.verdict):>8}  "
              f"{neg.negligible_up_to:>6}")
    fast = EpsilonFamily(lambda eps: f0.scaled(math.exp(-1 / eps)))
    neg = classify_negligible(fast, box, 6, ladder)
    print(f"exp(-1/eps): negligible up to order {neg.negligible_up_to}, verdict {neg.verdict}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in vars(Config()).items():
        p.add_argument(f"--{name}", type=type(default), default=default)
    main(Config(**vars(p.parse_args())))
