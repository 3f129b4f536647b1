"""
Empirical kernel error
======================

Sample many SUO layers, measure |kappa - kappa~| and compare with the
Gaussian fan-in baseline.  A few thousand trials keeps this under a minute.
"""

import numpy as np

from orthokernel.verify import ExperimentConfig, kernel_error_experiment, mean_bias_experiment

for scheme in ("suo", "gaussian_fanin"):
    print(f"\n{scheme}")
    print("   n    mean error   99% quantile   P(err >= 0.1)")
    for cell, n in enumerate((16, 64, 128)):
        cfg = ExperimentConfig(scheme=scheme, grid=((n, n),), trials=2000, c=0.5, eps=0.1, seed=1)
        b = kernel_error_experiment(cfg, cell)
        print(f"{n:4d}   {b.errors.mean():.5f}      {b.quantiles([0.99])[0]:.5f}        "
              f"{b.tail_frequency(0.1):.4f}")

# SUO layers are slightly biased; the bias is far below its bound.
cfg = ExperimentConfig(grid=((4, 64),), trials=5000, c=0.0, seed=2)
r = mean_bias_experiment(cfg)
print(f"\nbias {r.bias:.2e} +- {r.stderr:.1e}, bound {r.bias_bound:.4f}")

# Orthogonal rows remove some of the row-to-row fluctuation.
suo = kernel_error_experiment(ExperimentConfig(grid=((64, 64),), trials=2000, seed=3))
gau = kernel_error_experiment(ExperimentConfig(scheme="gaussian_fanin", grid=((64, 64),), trials=2000, seed=3))
print("std of kappa, SUO vs Gaussian:", np.std(suo.kappa), np.std(gau.kappa))
