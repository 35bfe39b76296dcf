"""cos^q beam patterns and the half-power beamwidth conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDirectivity, InvalidHpbw
from .geometry import position_at, unit_between, unit_vec3

LN2 = math.log(2.0)


def q_to_hpbw(q: float) -> float:
    """Half-power beamwidth (radians) of a ``cos^q`` lobe."""
    if not q > 0 or not math.isfinite(q):
        raise InvalidDirectivity(f"directivity exponent must be positive and finite, got {q!r}")
    # 2 acos(y) with y = 2^(-1/q), written to stay accurate for huge q
    one_minus_y = -math.expm1(-LN2 / q)
    return 4.0 * math.asin(math.sqrt(one_minus_y / 2.0))


def hpbw_to_q(psi: float) -> float:
    """Directivity exponent giving half-power beamwidth ``psi`` (radians)."""
    if not 0.0 < psi < math.pi:
        raise InvalidHpbw(f"HPBW must lie in (0, pi) rad, got {psi!r}")
    # -ln cos(psi/2), with cos(x) - 1 = -2 sin^2(x/2)
    neg_log_cos = -math.log1p(-2.0 * math.sin(psi / 4.0) ** 2)
    return LN2 / neg_log_cos


@dataclass(frozen=True, eq=False)
class BeamConfig:
    pointing: np.ndarray
    q: float

    def __post_init__(self):
        object.__setattr__(self, "pointing", unit_vec3(self.pointing))
        if not self.q > 0 or not math.isfinite(self.q):
            raise InvalidDirectivity(f"directivity exponent must be positive, got {self.q!r}")
        object.__setattr__(self, "q", float(self.q))

    @classmethod
    def from_hpbw(cls, pointing, psi: float) -> "BeamConfig":
        return cls(pointing, hpbw_to_q(psi))

    @property
    def hpbw(self) -> float:
        return q_to_hpbw(self.q)

    def __eq__(self, other):
        if not isinstance(other, BeamConfig):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.pointing, other.pointing)

    def __repr__(self):
        return f"BeamConfig(pointing={self.pointing.tolist()}, q={self.q!r})"


def beam_gain(beam: BeamConfig, dir_to_target) -> np.ndarray:
    """Power gain ``max(0, cos theta)^q`` toward unit direction(s) ``dir_to_target``.

    The backlobe is clamped to zero so that non-integer exponents stay real.
    """
    cos_theta = np.asarray(dir_to_target, dtype=float) @ beam.pointing
    return np.maximum(cos_theta, 0.0) ** beam.q


def los_gains(scn, t: float) -> tuple[float, float]:
    """(G_b, G_u) along the direct path at time ``t``."""
    pb = position_at(scn.bs, t)
    pu = position_at(scn.ue, t)
    g_b = beam_gain(scn.beam_bs, unit_between(pb, pu))
    g_u = beam_gain(scn.beam_ue, unit_between(pu, pb))
    return float(g_b), float(g_u)


def nlos_gains(scn, t: float, dirs) -> tuple[np.ndarray, np.ndarray]:
    """(G_b, G_u) toward the scatterer(s) at unit direction(s) ``dirs``.

    Scatterers sit on the sphere of radius R centered on the UE's t = 0
    position; both ends see them from their current positions.
    """
    points = scn.scatter_points(dirs)
    g_b = beam_gain(scn.beam_bs, unit_between(position_at(scn.bs, t), points))
    g_u = beam_gain(scn.beam_ue, unit_between(position_at(scn.ue, t), points))
    return g_b, g_u
