"""The MAP classifier on noisy projections, and the bound that tracks it.

Simulates compressive classification of a two-class Gaussian mixture and
compares the Monte Carlo error rate against the pairwise misclassification
bound sqrt(P1 P2) exp(-K) at several noise levels.

Run:  python3 demos/02_map_vs_bound.py
"""

import numpy as np

from compclass import (
    MeasurementSetup,
    RankSpec,
    build_context,
    draw_measurement_matrix,
    estimate_error,
    log_posteriors,
    map_classify,
    measure,
    pair_exponent,
    sample_source,
    synthesize_class_pair,
    two_class_bound,
)

spec = RankSpec((2, 3), {(0, 1): 4}, ambient_dim=6)
model = synthesize_class_pair(spec, rng_seed=20260811)
phi = draw_measurement_matrix(4, 6, rng_seed=42)

# --- one classified measurement, up close --------------------------------------

setup = MeasurementSetup(phi=phi, noise_variance=0.05)
ctx = build_context(model, setup)
rng = np.random.default_rng(1)
true_class, x = sample_source(model, rng)
y = measure(setup, x, rng)
decided = map_classify(ctx, y)
posteriors = np.exp(log_posteriors(ctx, y))
print(f"one draw: true class {true_class + 1}, MAP decided {decided + 1}, "
      f"posteriors {np.round(posteriors, 4)}")

# --- error rate vs bound across noise levels ------------------------------------

print("\n  sigma^2 |  K(1,2)  |  bound   |  MC estimate (95% CI half-width)")
for sigma2 in (0.5, 0.1, 0.02, 0.004):
    setup = MeasurementSetup(phi=phi, noise_variance=sigma2)
    k = pair_exponent(model, setup, 0, 1)
    bound = two_class_bound(model, setup)
    mc = estimate_error(model, setup, trials=200_000, seed=99)
    print(f"  {sigma2:7.3f} | {k.k_value:8.4f} | {bound:.6f} | "
          f"{mc.p_hat:.6f} (+/- {mc.ci_half_width:.6f})")

print("\nthe simulated rate always sits below the bound, and both fall together")
print("as the noise shrinks: the bound mimics the true error's behavior.")
