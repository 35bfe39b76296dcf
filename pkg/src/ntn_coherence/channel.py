"""Doppler phases and the channel autocorrelation of a BS-UE link.

The channel is a Rician mix of a deterministic direct path and a scattered
component from a von Mises-Fisher field of scatterers on a sphere around the
UE. Its autocorrelation splits into a direct-path term and a scattered term
(the cross terms vanish because each scatterer carries an independent
uniform phase):

    A_h(t, tau) = K/(K+1) A_L(t, tau) + 1/(K+1) A_N(t, tau)

``A_L`` is closed form. ``A_N`` is a sphere integral evaluated with
:mod:`ntn_coherence.quadrature`. Phases are carried in cycles; ``2 pi``
enters only inside the complex exponential.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, replace

import numpy as np

from . import antenna
from .antenna import BeamConfig, beam_gain
from .errors import ConfigError, DegenerateNormalizer, QuadratureNotConverged
from .geometry import BodyState, SolidAngle, direction_vector, norm, norm_shift, position_at, unit_between
from .quadrature import QuadResult, QuadSpec, sphere_integrate
from .scatter import VmfField, vmf_pdf

SPEED_OF_LIGHT = 299_792_458.0

# scatter points / beam lobes below this relative level are dropped from the cap
CAP_REL_LEVEL = 1e-12
# caps are only used for concentrations above this
CAP_MIN_CONCENTRATION = 100.0


@dataclass(frozen=True)
class Scenario:
    bs: BodyState
    ue: BodyState
    beam_bs: BeamConfig
    beam_ue: BeamConfig
    field: VmfField
    rician_k: float | None
    fc_hz: float

    def __post_init__(self):
        if not (self.fc_hz > 0 and math.isfinite(self.fc_hz)):
            raise ValueError(f"carrier frequency must be positive, got {self.fc_hz!r}")
        if self.rician_k is not None:
            k = float(self.rician_k)
            if math.isnan(k) or k < 0:
                raise ValueError(f"Rician factor must be in [0, inf], got {self.rician_k!r}")
            object.__setattr__(self, "rician_k", k)
        unit_between(self.ue.p0, self.bs.p0)  # raises ZeroDistance

    @property
    def lambda_m(self) -> float:
        return SPEED_OF_LIGHT / self.fc_hz

    @property
    def p0(self) -> np.ndarray:
        """BS position relative to the UE at t = 0."""
        return self.bs.p0 - self.ue.p0

    @property
    def v(self) -> np.ndarray:
        """BS velocity relative to the UE."""
        return self.bs.v - self.ue.v

    def scatter_points(self, dirs) -> np.ndarray:
        return self.ue.p0 + self.field.radius_m * np.asarray(dirs, dtype=float)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class Autocorr:
    t: float
    tau: float
    value: complex
    los_part: complex | None
    nlos_part: complex | None


def _as_dirs(omega) -> np.ndarray:
    if isinstance(omega, SolidAngle):
        return direction_vector(omega.az, omega.el)
    return np.asarray(omega, dtype=float)


def rician_weights(k: float | None) -> tuple[float, float]:
    """(direct, scattered) mixing weights; K = inf and K = 0 are exact sentinels."""
    if k is None:
        raise ConfigError("scenario.rician_k", "Rician factor must be supplied for this experiment")
    if math.isinf(k):
        return 1.0, 0.0
    return k / (k + 1.0), 1.0 / (k + 1.0)


# --- direct path ------------------------------------------------------------

def los_doppler_freq(scn: Scenario, t: float) -> float:
    d = position_at(scn.bs, t) - position_at(scn.ue, t)
    dist = np.linalg.norm(d)
    unit_between(position_at(scn.ue, t), position_at(scn.bs, t))
    return float((scn.ue.v - scn.bs.v) @ d / (scn.lambda_m * dist))


def los_phase(scn: Scenario, t: float) -> float:
    """Accumulated Doppler phase in cycles, zero at t = 0."""
    return float(-norm_shift(scn.p0, scn.v * t) / scn.lambda_m)


def los_phase_step(scn: Scenario, t: float, tau: float) -> float:
    """``phi(t) - phi(t + tau)`` evaluated without cancellation."""
    return float(norm_shift(scn.p0 + scn.v * t, scn.v * tau) / scn.lambda_m)


def los_autocorr(scn: Scenario, t: float, tau: float) -> complex:
    gb0, gu0 = antenna.los_gains(scn, t)
    gb1, gu1 = antenna.los_gains(scn, t + tau)
    amp = math.sqrt(gb0 * gb1 * gu0 * gu1)
    return amp * complex(np.exp(2j * math.pi * los_phase_step(scn, t, tau)))


# --- scattered paths -----------------------------------------------------------

def nlos_doppler_freq(scn: Scenario, t: float, omega) -> np.ndarray:
    """Doppler frequency (Hz) of the path via the scatterer(s) at ``omega``."""
    pts = scn.scatter_points(_as_dirs(omega))
    to_b = unit_between(position_at(scn.bs, t), pts)
    to_u = unit_between(position_at(scn.ue, t), pts)
    return (to_b @ scn.bs.v + to_u @ scn.ue.v) / scn.lambda_m


def nlos_phase(scn: Scenario, t: float, omega) -> np.ndarray:
    pts = scn.scatter_points(_as_dirs(omega))
    r = pts - scn.bs.p0
    s = pts - scn.ue.p0
    return -(norm_shift(r, -scn.bs.v * t) + norm_shift(s, -scn.ue.v * t)) / scn.lambda_m


def _support_cap(beam: BeamConfig, body: BodyState, scn: Scenario, times) -> float:
    """Min cos about the beam pointing where the clamped gain is non-zero at all ``times``.

    A scatterer at ``p_u(0) + R n`` is in front of the beam at time ``s`` iff
    ``pointing . n > pointing . (p(s) - p_u(0)) / R``: a cap about the
    pointing direction. Its edge is where the gain has a kink, so using it
    as the integration boundary keeps the integrand smooth inside.
    """
    radius = scn.field.radius_m
    return max(float(beam.pointing @ (position_at(body, s) - scn.ue.p0)) / radius for s in times)


def nlos_envelope(scn: Scenario, t: float, tau: float) -> tuple[np.ndarray, float]:
    """Pole and cap (as min cos) outside which the scattered integrand is negligible.

    Candidates are the front half-spaces of both beams (exact: the clamped
    gains vanish outside), the scatter density around its mean and the UE
    lobe around its pointing direction. The last two apply only above
    ``CAP_MIN_CONCENTRATION``. The tightest candidate wins.
    """
    log_level = math.log(CAP_REL_LEVEL)
    best_pole, best_cap = scn.field.mu, -1.0
    for beam, body in ((scn.beam_ue, scn.ue), (scn.beam_bs, scn.bs)):
        cap = min(_support_cap(beam, body, scn, (t, t + tau)), 1.0)
        if cap > best_cap:
            best_pole, best_cap = beam.pointing, cap
    rho = scn.field.rho
    if rho > CAP_MIN_CONCENTRATION:
        cap = 1.0 + log_level / rho
        if cap > best_cap:
            best_pole, best_cap = scn.field.mu, cap
    q = scn.beam_ue.q
    if q > CAP_MIN_CONCENTRATION:
        radius = scn.field.radius_m
        shift = max(
            np.linalg.norm(position_at(scn.ue, t) - scn.ue.p0),
            np.linalg.norm(position_at(scn.ue, t + tau) - scn.ue.p0),
        )
        if shift < 1e-2 * radius:
            # the product sqrt(G(t) G(t+tau)) is below the level where sqrt(G) is
            lobe = math.acos(math.exp(2.0 * log_level / q))
            widened = lobe + 2.0 * math.asin(shift / (radius - shift))
            if widened < math.pi:
                cap = math.cos(widened)
                if cap > best_cap:
                    best_pole, best_cap = scn.beam_ue.pointing, cap
    return best_pole, best_cap


def nlos_cycles_per_rad(scn: Scenario, t: float, tau: float) -> float:
    """Bound on how fast the scattered phase step varies across the sphere."""
    radius = scn.field.radius_m
    centre = scn.ue.p0
    total = 0.0
    for body in (scn.bs, scn.ue):
        step = float(np.linalg.norm(body.v) * abs(tau))
        if step == 0.0:
            continue
        gap = abs(float(np.linalg.norm(position_at(body, t) - centre)) - radius)
        ratio = step / max(gap - step, 1e-12)
        total += radius / scn.lambda_m * min(2.0, ratio)
    return total


class _NlosKernel:
    """Scattered-term integrand at a fixed t, reusable across many lags.

    Everything that depends only on (t, node set) is cached per node set.
    """

    def __init__(self, scn: Scenario, t: float):
        self.scn = scn
        self.t = float(t)
        self.pb = position_at(scn.bs, t)
        self.pu = position_at(scn.ue, t)
        self._cache: OrderedDict = OrderedDict()

    def _static(self, dirs: np.ndarray):
        key = id(dirs)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is dirs:
            return hit[1]
        scn = self.scn
        pts = scn.scatter_points(dirs)
        rb = pts - self.pb
        su = pts - self.pu
        nb = norm(rb)
        nu = norm(su)
        g_b = beam_gain(scn.beam_bs, rb / nb[..., None])
        g_u = beam_gain(scn.beam_ue, su / nu[..., None])
        weight = vmf_pdf(scn.field, dirs) * np.sqrt(g_b * g_u)
        data = (rb, su, weight)
        self._cache[key] = (dirs, data)
        if len(self._cache) > 32:
            self._cache.popitem(last=False)
        return data

    def integrand(self, tau: float):
        scn = self.scn
        db = scn.bs.v * tau
        du = scn.ue.v * tau
        lam = scn.lambda_m

        def f(dirs):
            rb, su, weight = self._static(dirs)
            rb1 = rb - db
            su1 = su - du
            g_b1 = beam_gain(scn.beam_bs, rb1 / norm(rb1)[..., None])
            g_u1 = beam_gain(scn.beam_ue, su1 / norm(su1)[..., None])
            step = (norm_shift(rb, -db) + norm_shift(su, -du)) / lam
            return weight * np.sqrt(g_b1 * g_u1) * np.exp(2j * math.pi * step)

        return f


def nlos_autocorr(
    scn: Scenario,
    t: float,
    tau: float,
    quad: QuadSpec = QuadSpec(),
    *,
    scale: float | None = None,
    strict: bool = True,
) -> QuadResult:
    """Scattered-term autocorrelation ``A_N(t, tau)`` as a quadrature result.

    ``.value`` holds the complex integral. With ``strict`` a non-converged
    integration raises :class:`QuadratureNotConverged`.
    """
    return _integrate_nlos(_NlosKernel(scn, t), tau, quad, scale, strict)


def _integrate_nlos(kernel: _NlosKernel, tau, quad, scale, strict) -> QuadResult:
    pole, cap = nlos_envelope(kernel.scn, kernel.t, tau)
    return sphere_integrate(
        kernel.integrand(tau),
        quad,
        pole=pole,
        cap_cos=cap,
        cycles_per_rad=nlos_cycles_per_rad(kernel.scn, kernel.t, tau),
        scale=scale,
        strict=strict,
    )


class AutocorrEvaluator:
    """Evaluates A_h(t, tau) for one scenario and one t over many lags.

    The direct and scattered parts do not depend on K, so a single evaluator
    serves every Rician factor; pass ``k`` to override the scenario's value.
    The scattered part's convergence test is scaled by ``|A_N(t, 0)|``.
    """

    def __init__(self, scn: Scenario, t: float = 0.0, quad: QuadSpec = QuadSpec(), *, strict: bool = True):
        self.scn = scn
        self.t = float(t)
        self.quad = quad
        self.strict = strict
        self._kernel = _NlosKernel(scn, t)
        self._los: dict = {}
        self._nlos: dict = {}
        self.quad_results: dict = {}

    def los(self, tau: float) -> complex:
        tau = float(tau)
        if tau not in self._los:
            self._los[tau] = los_autocorr(self.scn, self.t, tau)
        return self._los[tau]

    def nlos(self, tau: float) -> complex:
        tau = float(tau)
        if tau not in self._nlos:
            scale = None if tau == 0.0 else abs(self.nlos(0.0))
            res = _integrate_nlos(self._kernel, tau, self.quad, scale, False)
            self.quad_results[tau] = res
            if self.strict and not res.converged:
                raise QuadratureNotConverged(
                    f"scattered term at tau={tau:.3e} s not converged "
                    f"(error estimate {res.est_error:.3e})",
                    res,
                )
            self._nlos[tau] = res.value
        return self._nlos[tau]

    def autocorr(self, tau: float, k: float | None = None) -> Autocorr:
        k = self.scn.rician_k if k is None else k
        w_los, w_nlos = rician_weights(k)
        los = self.los(tau) if w_los > 0 else None
        nlos = self.nlos(tau) if w_nlos > 0 else None
        value = 0j
        if los is not None:
            value += w_los * los
        if nlos is not None:
            value += w_nlos * nlos
        return Autocorr(self.t, float(tau), complex(value), los, nlos)

    def normalizer(self, k: float | None = None) -> float:
        a0 = self.autocorr(0.0, k).value
        if abs(a0) < 1e-30:
            raise DegenerateNormalizer(f"|A_h(t={self.t}, 0)| = {abs(a0):.3e}; beams see no power")
        return a0.real

    def normalized(self, tau: float, k: float | None = None) -> complex:
        a0 = self.normalizer(k)
        if tau == 0.0:
            return 1.0 + 0j
        return self.autocorr(tau, k).value / a0

    def converged(self) -> bool:
        return all(r.converged for r in self.quad_results.values())

    def diagnostics(self) -> dict:
        res = list(self.quad_results.values())
        return {
            "integrals": len(res),
            "nodes_used": int(sum(r.nodes_used for r in res)),
            "max_est_error": max((r.est_error for r in res), default=0.0),
            "all_converged": self.converged(),
        }


def channel_autocorr(scn: Scenario, t: float, tau: float, quad: QuadSpec = QuadSpec()) -> Autocorr:
    return AutocorrEvaluator(scn, t, quad).autocorr(tau)


def normalized_autocorr(scn: Scenario, t: float, tau: float, quad: QuadSpec = QuadSpec()) -> complex:
    """``A_h(t, tau) / A_h(t, 0)``; exactly 1 at tau = 0."""
    return AutocorrEvaluator(scn, t, quad).normalized(tau)
