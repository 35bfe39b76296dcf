"""Von Mises-Fisher scatterer field on the sphere around the UE."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import orthonormal_frame, unit_vec3


@dataclass(frozen=True, eq=False)
class VmfField:
    mu: np.ndarray
    rho: float
    radius_m: float

    def __post_init__(self):
        object.__setattr__(self, "mu", unit_vec3(self.mu))
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ValueError(f"concentration must be positive, got {self.rho!r}")
        if not (self.radius_m > 0 and math.isfinite(self.radius_m)):
            raise ValueError(f"radius must be positive, got {self.radius_m!r}")
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "radius_m", float(self.radius_m))

    def __eq__(self, other):
        if not isinstance(other, VmfField):
            return NotImplemented
        return (
            self.rho == other.rho
            and self.radius_m == other.radius_m
            and np.array_equal(self.mu, other.mu)
        )

    def __repr__(self):
        return f"VmfField(mu={self.mu.tolist()}, rho={self.rho!r}, radius_m={self.radius_m!r})"


def _log_normalizer(rho: float) -> float:
    # log of rho / (2 pi (1 - e^{-2 rho})), the density at the mean direction
    return math.log(rho) - math.log(2 * math.pi) - math.log(-math.expm1(-2.0 * rho))


def vmf_pdf(field: VmfField, n) -> np.ndarray:
    """Density per steradian at unit direction(s) ``n``.

    Evaluated as ``rho exp(rho (mu.n - 1)) / (2 pi (1 - e^{-2 rho}))`` so it
    neither overflows at large concentration nor loses the small-rho limit.
    """
    w = np.asarray(n, dtype=float) @ field.mu
    return np.exp(field.rho * (w - 1.0) + _log_normalizer(field.rho))


def mean_resultant_length(rho: float) -> float:
    """E[mu.n] = coth(rho) - 1/rho."""
    if rho < 1e-4:
        return rho / 3.0
    return 1.0 / math.tanh(rho) - 1.0 / rho


def vmf_sample(field: VmfField, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw unit vectors from the field.

    The cosine to the mean is drawn by inverting its CDF,
    ``w = 1 + log(u + (1 - u) e^{-2 rho}) / rho``, and the azimuth about the
    mean is uniform. Returns shape ``(3,)`` when ``size`` is None, otherwise
    ``(size, 3)``.
    """
    count = 1 if size is None else int(size)
    u = rng.random(count)
    az = rng.random(count) * (2 * math.pi)
    rho = field.rho
    # log(u + (1-u) e^{-2 rho}) written with log1p/expm1 for the small-rho limit
    w = 1.0 + np.log1p((1.0 - u) * math.expm1(-2.0 * rho)) / rho
    w = np.clip(w, -1.0, 1.0)
    sin_t = np.sqrt(np.maximum(0.0, (1.0 - w) * (1.0 + w)))
    e1, e2 = orthonormal_frame(field.mu)
    out = (
        w[:, None] * field.mu
        + (sin_t * np.cos(az))[:, None] * e1
        + (sin_t * np.sin(az))[:, None] * e2
    )
    return out[0] if size is None else out
