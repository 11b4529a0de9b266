"""Negative squares of the Nevanlinna kernel of the Bessel m-function over
a range of l, with the minimal k of the spectral measure.

    python3 scripts/nevanlinna_kappa_scan.py --lmax 4 --step 0.25
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np

from singweyl import models, nevanlinna, spectral


@dataclass
class Config:
    lmax: float = 4.0
    step: float = 0.25
    points: int = 30
    trials: int = 20
    seed: int = 1


def main(cfg: Config) -> None:
    grid = np.linspace(0.0, 100.0, 4001)[1:] ** 2
    print(f"{'l':>6} {'kappa':>6} {'floor(l/2+3/4)':>15} {'k_min':>6} {'ceil((l+1)/2)':>14}")
    for l in np.arange(-0.5, cfg.lmax + 1e-9, cfg.step):
        M = lambda z, l=l: models.bessel_M(l, z)
        kappa = nevanlinna.kernel_negative_squares(M, nevanlinna.default_points(cfg.points, cfg.seed),
                                                   cfg.trials)
        rho = spectral.stieltjes_invert(M, grid=grid, atoms=False)
        k = nevanlinna.minimal_k(rho).k
        print(f"{l:>6.2f} {kappa:>6d} {math.floor(l / 2 + 0.75):>15d} {str(k):>6} "
              f"{nevanlinna.bessel_k_bound(l):>14d}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    for name, val in vars(Config()).items():
        p.add_argument(f"--{name}", type=type(val), default=val)
    main(Config(**vars(p.parse_args())))
