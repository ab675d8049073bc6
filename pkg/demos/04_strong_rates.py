"""
Measured strong rates for the linear model
==========================================

The mean-square error of the scheme has a closed form here, so the rate fits
involve no sampling noise at all. Compare the fitted slopes with the
exponents ``theta1 ^ theta2`` and ``-(theta1 ^ 1/2)`` that appear in the
error bound.
"""
import numpy as np

from eispde import laplacian_space, linear_drift, make_model
from eispde.experiments import ExperimentConfig, run_strong_error

model = make_model(laplacian_space(64), linear_drift(0.5), theta1=0.24, theta2=0.49)
exp = ExperimentConfig(dt_ladder=list(2.0 ** -np.arange(6, 12)), n_ladder=[4, 8, 16, 32, 64])
r = run_strong_error(model, exp)

for label, key in (("temporal", "rate_temporal"), ("spatial", "rate_spatial")):
    header, rows = r.tables[key]
    print(label, header)
    for row in rows:
        print("   ", "  ".join(f"{v:.6g}" for v in row))
    fit = r.details[label]
    print(f"   slope {fit['slope']:.3f} +- {fit['half_width']:.3f}  (bound exponent {fit['expected']})")

# the bound exponents are not sharp. Measured against the full equation
# (Galerkin tail included) the temporal mean-square slope is close to 1/2
print("against the full equation:", round(r.details["temporal_vs_full_equation_slope"], 3))
