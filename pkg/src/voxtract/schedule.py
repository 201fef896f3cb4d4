"""Forward-process schedule shared by training and inference.

The forward process interpolates a clean spectrogram toward the mixture
while injecting Gaussian noise:

    mean(x0, y, t) = exp(-gamma*t) * x0 + (1 - exp(-gamma*t)) * y
    var(t) = sigma_min^2 * (r^(2t) - exp(-2*gamma*t)) * log(r) / (gamma + log(r))

with r = sigma_max / sigma_min.  var(t) is the closed-form solution of
dv/dt = 2*log(r)*sigma_min^2*r^(2t) - 2*gamma*v with v(0) = 0, so the
noise standard deviation starts at exactly zero and grows monotonically
on [0, 1] for the default parameters.

All functions are pure; randomness enters only through explicit noise
arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Loss-weight clamp: t ~ U[0,1] may land arbitrarily close to the
# singularity of 1/(e^t - 1) at t=0.
T_MIN = 1e-3


@dataclass(frozen=True)
class ScheduleParams:
    """Stiffness and noise bounds of the forward process."""

    gamma: float = 1.5
    sigma_min: float = 0.05
    sigma_max: float = 0.5

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.sigma_min < self.sigma_max:
            raise ValueError(
                f"need 0 < sigma_min < sigma_max, got "
                f"({self.sigma_min}, {self.sigma_max})"
            )

    @property
    def log_ratio(self) -> float:
        return math.log(self.sigma_max / self.sigma_min)


@dataclass(frozen=True)
class TimestepGrid:
    """Strictly decreasing timesteps from 1 to 0 inclusive."""

    values: tuple[float, ...]

    def __post_init__(self):
        v = self.values
        if len(v) < 2 or v[0] != 1.0 or v[-1] != 0.0:
            raise ValueError("grid must run from 1 to 0 with at least 2 points")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("grid must be strictly decreasing")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def _check_t(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return t


def mean_coeff(t, params: ScheduleParams):
    """Weight exp(-gamma*t) placed on the clean signal at time t."""
    return np.exp(-params.gamma * _check_t(t))


def mean(x0: np.ndarray, y: np.ndarray, t, params: ScheduleParams) -> np.ndarray:
    """Interpolated process mean between clean x0 (t=0) and mixture y."""
    x0 = np.asarray(x0)
    y = np.asarray(y)
    if x0.shape != y.shape:
        raise ValueError(f"shape mismatch: x0 {x0.shape} vs y {y.shape}")
    c = mean_coeff(t, params)
    return c * x0 + (1.0 - c) * y


def variance(t, params: ScheduleParams):
    """Noise variance at time t; exactly 0 at t=0."""
    t = _check_t(t)
    k = params.log_ratio
    ratio = params.sigma_max / params.sigma_min
    growth = ratio ** (2.0 * t) - np.exp(-2.0 * params.gamma * t)
    return params.sigma_min**2 * growth * k / (params.gamma + k)


def std(t, params: ScheduleParams):
    """Noise standard deviation at time t."""
    return np.sqrt(np.maximum(variance(t, params), 0.0))


def sample_forward(
    x0: np.ndarray, y: np.ndarray, t, noise: np.ndarray, params: ScheduleParams
) -> np.ndarray:
    """Draw from the forward process given unit-variance noise.

    ``noise`` must be standard normal per element; for complex arrays the
    real and imaginary planes each carry unit variance.
    """
    noise = np.asarray(noise)
    x0 = np.asarray(x0)
    if noise.shape != x0.shape:
        raise ValueError(f"shape mismatch: noise {noise.shape} vs x0 {x0.shape}")
    return mean(x0, y, t, params) + std(t, params) * noise


def loss_weight(t):
    """Timestep weight 1/(e^t - 1), clamped below at t=T_MIN.

    Strictly positive and strictly decreasing; the clamp keeps draws near
    t=0 finite instead of raising.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0):
        raise ValueError(f"t must be nonnegative, got {t}")
    return 1.0 / np.expm1(np.maximum(t, T_MIN))


def make_grid(steps: int) -> TimestepGrid:
    """Equally spaced timesteps from 1 down to 0; ``steps`` is the number
    of grid points and therefore the number of denoiser evaluations."""
    if steps < 2:
        raise ValueError(f"need at least 2 steps, got {steps}")
    values = np.linspace(1.0, 0.0, steps)
    return TimestepGrid(values=tuple(float(v) for v in values))
