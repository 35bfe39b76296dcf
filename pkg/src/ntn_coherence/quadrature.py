"""Adaptive product quadrature on the unit sphere.

Nodes are Gauss-Legendre in ``cos(theta)`` times a uniform (periodic
trapezoid) rule in azimuth, where ``theta`` is measured from a chosen pole.
With the default pole +z this is exactly the azimuth/polar-angle layout; a
different pole integrates in a rotated frame, and ``cap_cos`` restricts the
polar range to the spherical cap ``cos(theta) >= cap_cos``.

Each level is compared with the same rule at half resolution in both
directions; resolution doubles until the two agree to ``rel_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureNotConverged
from .geometry import orthonormal_frame

MAX_NODES = 8_000_000
NODES_PER_CYCLE = 6


@dataclass(frozen=True)
class QuadSpec:
    base_el_nodes: int = 32
    base_az_nodes: int = 64
    max_refinements: int = 6
    rel_tol: float = 1e-3

    def __post_init__(self):
        if self.base_el_nodes < 8:
            raise ValueError("base_el_nodes must be >= 8")
        if self.base_az_nodes < 16:
            raise ValueError("base_az_nodes must be >= 16")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be >= 0")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


@dataclass
class QuadResult:
    value: complex
    nodes_used: int
    est_error: float
    converged: bool
    # (n_el, n_az, estimate, error estimate) per level, coarsest first
    levels: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class SphereRule:
    n_el: int
    n_az: int
    dirs: np.ndarray      # (n_el, n_az, 3)
    weights: np.ndarray   # (n_el, n_az), solid-angle weights


@lru_cache(maxsize=64)
def _sphere_rule(n_el: int, n_az: int, pole: tuple, cap_cos: float) -> SphereRule:
    x, w = np.polynomial.legendre.leggauss(n_el)
    half = (1.0 - cap_cos) / 2.0
    cos_t = cap_cos + half * (x + 1.0)
    w_t = w * half
    sin_t = np.sqrt(np.maximum(0.0, (1.0 - cos_t) * (1.0 + cos_t)))
    az = np.arange(n_az) * (2 * math.pi / n_az)
    pole_v = np.asarray(pole, dtype=float)
    if pole == (0.0, 0.0, 1.0):
        e1, e2 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    else:
        e1, e2 = orthonormal_frame(pole_v)
    ring = np.cos(az)[:, None] * e1 + np.sin(az)[:, None] * e2      # (n_az, 3)
    dirs = cos_t[:, None, None] * pole_v + sin_t[:, None, None] * ring[None, :, :]
    weights = np.repeat((w_t * (2 * math.pi / n_az))[:, None], n_az, axis=1)
    dirs.setflags(write=False)
    weights.setflags(write=False)
    return SphereRule(n_el, n_az, dirs, weights)


def sphere_rule(n_el: int, n_az: int, pole=(0.0, 0.0, 1.0), cap_cos: float = -1.0) -> SphereRule:
    """Cached node set; identical arguments return the identical object."""
    pole = tuple(float(c) for c in np.asarray(pole, dtype=float).reshape(3))
    return _sphere_rule(int(n_el), int(n_az), pole, float(cap_cos))


def apply_rule(f: Callable, rule: SphereRule) -> complex:
    vals = np.asarray(f(rule.dirs))
    return complex(np.sum(rule.weights * vals))


def start_resolution(spec: QuadSpec, cap_cos: float, cycles_per_rad: float) -> tuple[int, int]:
    """Starting node counts: the configured base, raised so the integrand's
    phase is sampled with at least six nodes per cycle."""
    cap_angle = math.acos(max(-1.0, min(1.0, cap_cos)))
    ring = 2 * math.pi * (1.0 if cap_angle >= math.pi / 2 else math.sin(cap_angle))
    n_el = max(spec.base_el_nodes, math.ceil(NODES_PER_CYCLE * cycles_per_rad * cap_angle))
    n_az = max(spec.base_az_nodes, math.ceil(NODES_PER_CYCLE * cycles_per_rad * ring))
    return n_el, n_az


def sphere_integrate(
    f: Callable,
    spec: QuadSpec = QuadSpec(),
    *,
    pole=(0.0, 0.0, 1.0),
    cap_cos: float = -1.0,
    cycles_per_rad: float = 0.0,
    scale: float | None = None,
    strict: bool = False,
) -> QuadResult:
    """Integrate ``f`` over the sphere (or a cap of it) with respect to solid angle.

    Parameters
    ----------
    f
        Vectorized callable taking an array of unit directions with trailing
        axis 3 and returning values of the leading shape. Use
        :func:`ntn_coherence.geometry.solid_angle_of` to recover (az, el).
    spec
        Resolution and tolerance settings.
    pole, cap_cos
        Frame pole and cap restriction; the default is the whole sphere in
        the azimuth/polar layout about +z.
    cycles_per_rad
        Upper bound on the phase gradient of ``f`` in cycles per radian,
        used to pick a starting resolution that does not alias.
    scale
        Reference magnitude for the convergence test. Defaults to the
        current estimate's magnitude.
    strict
        Raise :class:`QuadratureNotConverged` instead of returning an
        unconverged result.
    """
    n_el, n_az = start_resolution(spec, cap_cos, cycles_per_rad)
    levels = []
    nodes_used = 0
    coarse = apply_rule(f, sphere_rule(max(n_el // 2, 1), max(n_az // 2, 1), pole, cap_cos))
    nodes_used += max(n_el // 2, 1) * max(n_az // 2, 1)
    result = None
    for _ in range(spec.max_refinements + 1):
        if n_el * n_az > MAX_NODES:
            break
        value = apply_rule(f, sphere_rule(n_el, n_az, pole, cap_cos))
        nodes_used += n_el * n_az
        err = abs(value - coarse)
        levels.append((n_el, n_az, value, err))
        ref = abs(value) if scale is None else scale
        result = QuadResult(value, nodes_used, err, err < spec.rel_tol * ref + 1e-30, levels)
        if result.converged:
            break
        coarse = value
        n_el, n_az = 2 * n_el, 2 * n_az
    if result is None:
        result = QuadResult(coarse, nodes_used, math.inf, False, levels)
    if strict and not result.converged:
        raise QuadratureNotConverged(
            f"sphere quadrature not converged after {len(levels)} levels "
            f"(error estimate {result.est_error:.3e})",
            result,
        )
    return result
