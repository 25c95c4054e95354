"""Distinct means change the game: exponential decay past the union rank.

Both classes live on the same rank-2 subspace, so with zero means they would
be indistinguishable at any noise level.  Distinct means rescue the problem,
but only once M exceeds the union rank: then the projected mean difference
escapes the projected covariance image and the bound collapses exponentially
in 1/sigma^2 instead of polynomially.

Run:  python3 demos/04_nonzero_means.py
"""

import numpy as np

from compclass import (
    MEAN_MODE_DISTINCT,
    MeasurementSetup,
    RankSpec,
    image_contains,
    predict_nonzero_mean,
    sigma_grid,
    source_geometry,
    sweep_error_curve,
    synthesize_class_pair,
)

SEED = 20260811

spec = RankSpec((2, 2), {(0, 1): 2}, ambient_dim=6, mean_mode=MEAN_MODE_DISTINCT)
model = synthesize_class_pair(spec, rng_seed=SEED)
src = source_geometry(model)
mu_diff = model.classes[0].mean - model.classes[1].mean
grid = sigma_grid(0, -6, 10)

print("  M | mean diff escapes image? | predicted regime | corr(log bound, 1/sigma^2)")
for m in (1, 2, 3, 4, 5, 6):
    curve = sweep_error_curve(model, m, grid, trials=0, seed=SEED)
    phi = curve.phis[0]
    union = phi @ (model.classes[0].covariance + model.classes[1].covariance) @ phi.T
    escapes = not image_contains(union, phi @ mu_diff)
    pred = predict_nonzero_mean(model, MeasurementSetup(phi, 1.0), src=src)
    mask = (curve.sigma2 >= 1e-4) & (curve.sigma2 <= 1e-2)
    corr = np.corrcoef(1.0 / curve.sigma2[mask], curve.log_bound[mask])[0, 1]
    print(f"  {m} | {str(escapes):>24} | {pred.regime:>16} | {corr:+.6f}")

print("\ncontainment is forced while M <= 2 (the projected image fills the whole")
print("measurement space), giving an error floor; from M = 3 on, the projected")
print("mean separation survives the noise and log(bound) is linear in 1/sigma^2,")
print("the signature of exponential decay.")
