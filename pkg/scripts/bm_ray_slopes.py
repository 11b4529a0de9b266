"""Decay slopes of M_1 - M_0 - f along the default rays for the three
comparison cases (equal, agreement on (0, 1), global shift), scanned over c.

    python3 scripts/bm_ray_slopes.py --cs 0.25,0.5,0.9
"""

import argparse
from dataclasses import dataclass

from singweyl import bm, golden


@dataclass
class Config:
    cs: str = "0.25,0.5,0.9,1.5"
    eps: float = 0.05


def main(cfg: Config) -> None:
    family = golden.bm_family()
    print(f"{'case':>6} {'c':>5} {'threshold':>9} {'verdict':>17}  slopes")
    for c in (float(v) for v in cfg.cs.split(",")):
        for name, (p0, p1, s0, s1, _) in family.items():
            r = bm.compare(p0, p1, s0, s1, c=c, eps=cfg.eps, check_hypothesis=False)
            slopes = ", ".join("floor" if s is None else f"{s:.3f}" for s in r.decay_fit)
            print(f"{name:>6} {c:>5.2f} {r.threshold:>9.3f} {r.verdict:>17}  {slopes}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    for name, val in vars(Config()).items():
        p.add_argument(f"--{name}", type=type(val), default=val)
    main(Config(**vars(p.parse_args())))
