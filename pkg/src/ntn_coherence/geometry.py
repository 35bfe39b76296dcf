"""Vectors, solid angles and straight-line kinematics.

Vectors are plain ``float64`` numpy arrays with a trailing axis of length 3,
so every helper here broadcasts over stacks of points. Units are SI
throughout: meters, seconds, radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ZeroDistance

MIN_DISTANCE_M = 1e-9
UNIT_TOL = 1e-12


def vec3(v) -> np.ndarray:
    """Validate and return a finite 3-vector as a read-only float array."""
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected 3 components, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite vector component in {arr}")
    arr.setflags(write=False)
    return arr


def unit_vec3(v) -> np.ndarray:
    """Like :func:`vec3` but also requires ``| |v| - 1 | < 1e-12``."""
    arr = vec3(v)
    if abs(np.linalg.norm(arr) - 1.0) >= UNIT_TOL:
        raise ValueError(f"not a unit vector: {arr} (norm {np.linalg.norm(arr)!r})")
    return arr


def normalize(v) -> np.ndarray:
    arr = vec3(v)
    norm = np.linalg.norm(arr)
    if norm < MIN_DISTANCE_M:
        raise ZeroDistance("cannot normalize a zero vector")
    return vec3(arr / norm)


class SolidAngle(NamedTuple):
    """Direction on the sphere.

    ``el`` is the polar angle measured from +z, so ``el = 0`` is the zenith
    and the xy-plane sits at ``el = pi/2``.
    """

    az: float
    el: float

    @classmethod
    def checked(cls, az: float, el: float) -> "SolidAngle":
        if not (0.0 <= az < 2 * math.pi):
            raise ValueError(f"azimuth {az!r} outside [0, 2pi)")
        if not (0.0 <= el <= math.pi):
            raise ValueError(f"polar angle {el!r} outside [0, pi]")
        return cls(float(az), float(el))


def direction_vector(az, el) -> np.ndarray:
    """Unit vector ``[cos az sin el, sin az sin el, cos el]``.

    Accepts scalars or arrays; a :class:`SolidAngle` can be splatted in.
    """
    az = np.asarray(az, dtype=float)
    el = np.asarray(el, dtype=float)
    sin_el = np.sin(el)
    return np.stack([np.cos(az) * sin_el, np.sin(az) * sin_el, np.cos(el)], axis=-1)


def solid_angle_of(n) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`direction_vector` for unit vectors (az in [0, 2pi))."""
    n = np.asarray(n, dtype=float)
    az = np.mod(np.arctan2(n[..., 1], n[..., 0]), 2 * math.pi)
    el = np.arccos(np.clip(n[..., 2], -1.0, 1.0))
    return az, el


@dataclass(frozen=True, eq=False)
class BodyState:
    """Position at t = 0 and constant velocity of a transmitter or receiver."""

    p0: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p0", vec3(self.p0))
        object.__setattr__(self, "v", vec3(self.v))

    def __eq__(self, other):
        if not isinstance(other, BodyState):
            return NotImplemented
        return np.array_equal(self.p0, other.p0) and np.array_equal(self.v, other.v)

    def __repr__(self):
        return f"BodyState(p0={self.p0.tolist()}, v={self.v.tolist()})"


def position_at(body: BodyState, t: float) -> np.ndarray:
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t!r}")
    return body.p0 + body.v * t


def dot(a, b) -> np.ndarray:
    """Row-wise dot product over the trailing axis."""
    return np.einsum("...i,...i->...", a, b)


def norm(a) -> np.ndarray:
    return np.sqrt(dot(a, a))


def unit_between(start, end) -> np.ndarray:
    """Unit vector pointing from ``start`` to ``end`` (broadcasts)."""
    d = np.asarray(end, dtype=float) - np.asarray(start, dtype=float)
    dist = norm(d)
    if np.any(dist < MIN_DISTANCE_M):
        raise ZeroDistance("points closer than 1e-9 m")
    return d / dist[..., None]


def norm_shift(a, d) -> np.ndarray:
    """``|a + d| - |a|`` without cancellation when ``|d| << |a|``.

    Uses ``(2 a.d + |d|^2) / (|a + d| + |a|)``; the phase terms need this
    because positions are ~5e5 m while the quantity of interest is a
    fraction of a centimeter-scale wavelength.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    a, d = np.broadcast_arrays(a, d)
    num = 2.0 * dot(a, d) + dot(d, d)
    den = norm(a + d) + norm(a)
    return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den > 0)


def orthonormal_frame(axis) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing ``axis`` to a right-handed frame.

    The helper axis is the coordinate axis least aligned with ``axis`` so the
    construction never degenerates.
    """
    axis = np.asarray(axis, dtype=float)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(axis)))] = 1.0
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2
