"""Variance of the weak-form residual across ensemble sizes.

For a fixed smooth test function, the martingale decomposition makes
mean(psi) at time t minus its initial mean minus the integrated
generator a centered random variable whose variance decays like 1/n.
This script runs a small seed ensemble per size and fits the log-log
slope; expect a value near -1 (the acceptance battery uses 200 seeds
per size, this demo trades precision for speed).
"""

import argparse

import numpy as np

from enskog.kernels import (
    AngularMeasure,
    KernelSuite,
    SpatialKernel,
    Truncation,
    VelocityKernel,
)
from enskog.meanfield import variance_scaling_fit
from enskog.observables import RadialBump, weak_residual
from enskog.particles import InitialLaw, SimConfig, run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[50, 100, 200])
    parser.add_argument("--seeds", type=int, default=40)
    parser.add_argument("--seed0", type=int, default=100)
    args = parser.parse_args()

    suite = KernelSuite(
        velocity=VelocityKernel(form="maxwellian"),
        angular=AngularMeasure("power-law", nu=0.5, theta_min=0.1),
        spatial=SpatialKernel(rho=4.0),
        truncation=Truncation("pairwise-clip", m=10.0),
    )
    psi = RadialBump(np.zeros(3), np.zeros(3), 4.0)
    checkpoints = tuple(np.linspace(0.0, 1.0, 6))

    points = []
    for n in args.sizes:
        vals = []
        for i in range(args.seeds):
            cfg = SimConfig(
                n=n, t_end=1.0, seed=args.seed0 + 1000 * n + i,
                checkpoints=checkpoints, kernels=suite,
                initial=InitialLaw(kind="gaussian", position_scale=0.8),
            )
            snaps = run(cfg).snapshots
            vals.append(weak_residual(snaps, psi, suite, 0.0, 1.0))
        var = float(np.var(vals, ddof=1))
        points.append((n, var))
        print(f"n = {n:4d}   Var(F) = {var:.3e}")

    slope = variance_scaling_fit(points)
    print(f"fitted slope of log Var against log n: {slope:.3f}")


if __name__ == "__main__":
    main()
