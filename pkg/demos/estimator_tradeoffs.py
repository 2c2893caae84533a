"""Hyperparameter trade-offs of the derivative estimator on one scene.

Reproduces the qualitative trends that guide default settings, using
the harmonic annulus (analytic reference available):

  * termination shell size: bias grows monotonically with epsilon;
  * inward offset of the nested forward walk: RMSE is minimized around
    10x the shell, not at the shell itself and not far inside;
  * backward-difference normal derivative vs. the offset-ball variant
    at equal walk counts.

Run:  python3 demos/estimator_tradeoffs.py [--walks N] [--seeds K]
"""

import argparse
import math

import numpy as np

from diffwos import (BVPSpec, ConstantData, RngStream, Scene, SolverConfig,
                     SphereBoundary, SpherePrimitive, rmse_sweep)


class AnnulusData(ConstantData):
    def __init__(self):
        pass

    def value(self, q, scene):
        return 1.0 if q.primitive == 1 else 0.0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--walks", type=int, default=512)
    ap.add_argument("--seeds", type=int, default=8)
    args = ap.parse_args()

    outer = SpherePrimitive((0.0, 0.0), 2.0, frozen_center=True,
                            frozen_radius=True)
    inner = SpherePrimitive((0.0, 0.0), 1.0, hole=True, frozen_center=True)
    scene = Scene(SphereBoundary([outer, inner]), AnnulusData())
    bvp = BVPSpec(0.0)
    pts = [(1.3, 0.0), (1.5, 0.0), (0.0, 1.7)]
    ref = [math.log(2 / r) / math.log(2) ** 2 for r in (1.3, 1.5, 1.7)]
    cfg = SolverConfig(eps=1e-2)
    rng = RngStream(7)

    def show(title, axis, levels, walks):
        rep = rmse_sweep(scene, bvp, axis, levels, ref, cfg, rng.derive(hash(axis) % 97),
                         pts, weights=np.ones(1), n_seeds=args.seeds,
                         walks=walks)
        print(title)
        for lv in rep.levels:
            print(f"  {axis}={lv.level}: bias={lv.bias:+.4f} "
                  f"var={lv.variance:.5f} rmse={lv.rmse:.4f}")

    show("termination shell (bias should grow):", "eps",
         [1e-3, 1e-2, 1e-1], max(args.walks, 1024))
    show("nested-walk inward offset, in units of eps (min near 10):",
         "offset", [1.0, 10.0, 100.0], args.walks)
    show("normal-derivative method at equal walks:", "nd_method",
         ["backward", "offset_ball"], args.walks // 4)


if __name__ == "__main__":
    main()
