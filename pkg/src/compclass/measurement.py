"""Random Gaussian measurement matrices and the noisy projection channel y = Phi x + n."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GaussianClass


@dataclass(frozen=True)
class MeasurementSetup:
    """A fixed measurement matrix plus the additive noise variance.

    ``phi`` has shape (M, N).  M <= N is the compressive regime; larger M is
    allowed but flagged via :attr:`is_compressive`.
    """

    phi: np.ndarray
    noise_variance: float

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 2:
            raise ValueError(f"phi must be a matrix, got shape {phi.shape}")
        if phi.shape[0] < 1:
            raise ValueError("need at least one measurement row")
        if not self.noise_variance > 0.0:
            raise ValueError(f"noise variance must be positive, got {self.noise_variance}")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def m(self) -> int:
        return self.phi.shape[0]

    @property
    def n_ambient(self) -> int:
        return self.phi.shape[1]

    @property
    def is_compressive(self) -> bool:
        return self.m <= self.n_ambient


def draw_measurement_matrix(m: int, n: int, rng_seed: int) -> np.ndarray:
    """M x N matrix with i.i.d. N(0, 1/n) entries, deterministic in the seed.

    The 1/n entry variance makes a square draw approximately norm preserving;
    regime predictions are invariant to this scale, measurement gains are not,
    so the convention is recorded in every CSV header.
    """
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be positive, got ({m}, {n})")
    rng = np.random.default_rng(rng_seed)
    return rng.normal(0.0, np.sqrt(1.0 / n), size=(m, n))


def measure(setup: MeasurementSetup, x, rng: np.random.Generator, noiseless: bool = False):
    """One noisy measurement Phi x + n with n ~ N(0, sigma^2 I).

    ``noiseless=True`` returns Phi x exactly (zero-noise limit path).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (setup.n_ambient,):
        raise ValueError(f"signal shape {x.shape} does not match ambient dimension {setup.n_ambient}")
    y = setup.phi @ x
    if noiseless:
        return y
    return y + rng.normal(0.0, np.sqrt(setup.noise_variance), size=setup.m)


def measure_batch(setup: MeasurementSetup, x, rng: np.random.Generator) -> np.ndarray:
    """Noisy measurements for a batch of signals, shape (count, M)."""
    x = np.asarray(x, dtype=float)
    y = x @ setup.phi.T
    return y + rng.normal(0.0, np.sqrt(setup.noise_variance), size=y.shape)


def induced_class_moments(setup: MeasurementSetup, cls: GaussianClass):
    """Exact measurement-domain moments for one class.

    Returns ``(Phi mu, Phi Sigma Phi^T + sigma^2 I)`` -- the mean and
    covariance of y conditioned on the class.
    """
    if cls.dim != setup.n_ambient:
        raise ValueError(
            f"class dimension {cls.dim} does not match ambient dimension {setup.n_ambient}"
        )
    mean = setup.phi @ cls.mean
    cov = setup.phi @ cls.covariance @ setup.phi.T + setup.noise_variance * np.eye(setup.m)
    return mean, cov
