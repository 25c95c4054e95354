"""Four classes: the union bound inherits the worst pair's behavior.

Builds the four-class mixture with ranks (2, 3, 3, 2) and prescribed pairwise
union ranks, evaluates the union misclassification bound, and shows that its
low-noise slope equals the smallest pairwise diversity -- the pair (2, 3),
whose subspaces overlap the most.

Writes demos/output/multiclass.svg.

Run:  python3 demos/05_multiclass_union.py
"""

import math
import os

import numpy as np

from compclass import (
    MeasurementSetup,
    RankSpec,
    fit_diversity,
    pair_exponent,
    pairwise_predictions,
    predict_multiclass,
    sigma_grid,
    sweep_error_curve,
    synthesize_ensemble,
)
from compclass.montecarlo import curve_from_bounds
from compclass.svgplot import render_curves

SEED = 20260811

spec = RankSpec(
    per_class_ranks=(2, 3, 3, 2),
    pairwise_union_ranks={(0, 1): 4, (0, 2): 5, (0, 3): 4, (1, 2): 4, (1, 3): 5, (2, 3): 4},
    ambient_dim=6,
)
model = synthesize_ensemble(spec, rng_seed=SEED)

# --- closed-form pairwise picture at M = 6 --------------------------------------

m = 6
probe = sweep_error_curve(model, m, np.array([1.0]), trials=0, seed=SEED)
setup = MeasurementSetup(probe.phis[0], 1.0)
pairs = pairwise_predictions(model, setup)
print(f"pairwise diversity orders at M = {m}:")
for (i, j), pred in sorted(pairs.items()):
    print(f"  classes ({i + 1},{j + 1}): d = {pred.diversity:.2f}")
overall = predict_multiclass(model, setup)
dom = overall.dominating_pair
print(f"union prediction: d = {overall.diversity:.2f}, dominated by pair "
      f"({dom[0] + 1},{dom[1] + 1})")

# --- fitted union slope vs the worst pair (deep-noise window) --------------------

deep = sigma_grid(-8, -10, 10)
window = (1e-10, 1e-8)
union_curve = sweep_error_curve(model, m, deep, trials=0, seed=SEED)
union_fit = fit_diversity(union_curve, window)
phi = union_curve.phis[0]
worst_logs = [
    0.5 * math.log(model.priors[dom[0]] * model.priors[dom[1]])
    - pair_exponent(model, MeasurementSetup(phi, s2), dom[0], dom[1]).k_value
    for s2 in deep
]
worst_curve = curve_from_bounds(deep, np.exp(np.array(worst_logs) - max(worst_logs)))
worst_fit = fit_diversity(worst_curve, window)
print(f"\nfitted union slope   = {union_fit.slope:.4f} +/- {union_fit.stderr:.4f}")
print(f"fitted worst-pair slope = {worst_fit.slope:.4f}")
print("the union sum is asymptotically a single term: the worst pair's.")

# --- full sweep with Monte Carlo overlay ----------------------------------------

grid = sigma_grid(0, -6, 10)
curves = [sweep_error_curve(model, mm, grid, trials=20_000, seed=SEED) for mm in (2, 4, 6)]
os.makedirs("demos/output", exist_ok=True)
path = "demos/output/multiclass.svg"
with open(path, "w", encoding="utf-8") as fh:
    fh.write(render_curves(curves, title="four classes: union bound and MC vs 1/sigma^2"))
print(f"\nwrote {path}")
