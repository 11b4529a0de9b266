"""Parseval norm and round-trip defect of the l = 0 transform of the
indicator of [0, 1] as the spectral cutoff grows.

The truncated inverse is an orthogonal projection, so its L2 defect is
the square root of the discarded tail, sqrt(3 / (pi sqrt(cutoff))) on the
whole half line; the x window [0, 3] sees a little less.

    python3 scripts/parseval_cutoff_study.py
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from singweyl import models, spectral
from singweyl.schrodinger import Potential


@dataclass
class Config:
    wmax: str = "25,50,100,200"
    points_per_unit: int = 40
    x_points: int = 600


def main(cfg: Config) -> None:
    sys0, pot = models.bessel_system(0.0), Potential(l=0.0)
    M = lambda z: models.bessel_M(0.0, z)
    x = np.linspace(3.0 / cfg.x_points, 3.0, cfg.x_points)
    target = (x <= 1.0).astype(float)
    print(f"{'cutoff':>10} {'norm_sq':>12} {'raw':>12} {'L2 defect':>10} {'defect*cutoff^(1/4)':>20}")
    for wmax in (float(v) for v in cfg.wmax.split(",")):
        w = np.linspace(0.01, wmax, int(cfg.points_per_unit * wmax))
        m = spectral.stieltjes_invert(M, grid=w ** 2, eps_schedule=(1e-4, 3e-5, 1e-5, 3e-6, 1e-6),
                                      atoms=False)
        fh = spectral.transform_forward(sys0, pot, lambda t: np.ones_like(t), m, support=(0.0, 1.0))
        par = spectral.parseval_norm(fh, m)
        back = spectral.transform_inverse(sys0, m, fh, x)
        d = math.sqrt(simpson((back - target) ** 2, x=x))
        print(f"{wmax ** 2:>10.0f} {par['norm_sq']:>12.7f} {par['raw']:>12.7f} {d:>10.4f} "
              f"{d * wmax ** 0.5:>20.4f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    for name, val in vars(Config()).items():
        p.add_argument(f"--{name}", type=type(val), default=val)
    main(Config(**vars(p.parse_args())))
