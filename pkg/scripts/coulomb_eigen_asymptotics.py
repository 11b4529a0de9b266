"""Dirichlet eigenvalues of l(l+1)/x^2 + q1/x on (0, c) against the
phase pi (j + l/2) / c from the Bessel asymptotics.

    python3 scripts/coulomb_eigen_asymptotics.py --count 40
"""

import argparse
import math
import time
from dataclasses import dataclass

import numpy as np

from singweyl import eigen, models


@dataclass
class Config:
    l: float = 1.0
    q1: float = 1.0
    c: float = 1.0
    count: int = 40


def main(cfg: Config) -> None:
    t0 = time.perf_counter()
    mu = eigen.dirichlet_eigs(models.coulomb(cfg.l, cfg.q1), cfg.c, cfg.count).zeros
    j = np.arange(1, cfg.count + 1)
    dev = np.abs(np.sqrt(mu) - math.pi * (j + cfg.l / 2) / cfg.c)
    print(f"{'j':>3} {'mu_j':>16} {'|sqrt(mu)-phase|':>18}")
    for jj, m, d in zip(j, mu, dev):
        print(f"{jj:>3} {m:>16.6f} {d:>18.6f}")
    inc = np.flatnonzero(np.diff(dev) >= 0)
    start = int(inc[-1] + 2) if inc.size else 1
    print(f"deviation decreasing from j = {start}; {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    for name, val in vars(Config()).items():
        p.add_argument(f"--{name}", type=type(val), default=val)
    main(Config(**vars(p.parse_args())))
