"""Discrete-scatterer Monte-Carlo channel, an independent check on the
quadrature path.

Each realization draws N scatterer directions from the vMF field, a uniform
phase per scatterer and a delay (zero by default). The channel is

    h(t) = N^{-1/2} sum_i sqrt(G_b G_u)(t, n_i) exp(j 2 pi (phi(t, n_i) + gamma_i - f_c zeta_i))

and the ensemble average of h(t) h*(t + tau) over realizations converges to
the scattered autocorrelation integral.

Seeding: realization ``k`` of a run with root seed ``s`` draws from
``np.random.default_rng(np.random.SeedSequence(s).spawn(M)[k])``, so the
result does not depend on how realizations are split across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .antenna import nlos_gains
from .channel import Scenario, nlos_phase
from .geometry import dot, norm
from .scatter import VmfField, vmf_sample


@dataclass(frozen=True, eq=False)
class Realization:
    dirs: np.ndarray     # (N, 3)
    gammas: np.ndarray   # (N,) in [0, 1)
    zetas: np.ndarray    # (N,) seconds
    seed: object = None

    def __post_init__(self):
        n = len(self.dirs)
        if n < 1 or len(self.gammas) != n or len(self.zetas) != n:
            raise ValueError("dirs, gammas and zetas must have the same non-zero length")


def _realize(field: VmfField, n: int, rng: np.random.Generator, seed, zeta_s: float = 0.0) -> Realization:
    dirs = vmf_sample(field, rng, n)
    gammas = rng.random(n)
    zetas = np.full(n, float(zeta_s))
    return Realization(dirs, gammas, zetas, seed)


def realize(field: VmfField, n: int, seed=0, *, zeta_s: float = 0.0) -> Realization:
    """One realization of ``n`` scatterers, deterministic in ``seed``.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``.
    """
    if n < 1:
        raise ValueError("need at least one scatterer")
    return _realize(field, n, np.random.default_rng(seed), seed, zeta_s)


def _channels(scn: Scenario, t: float, dirs, gammas, zetas) -> np.ndarray:
    """h(t) for a stack of realizations; arrays are shaped (..., N[, 3])."""
    g_b, g_u = nlos_gains(scn, t, dirs)
    phase = nlos_phase(scn, t, dirs) + gammas - scn.fc_hz * zetas
    terms = np.sqrt(g_b * g_u) * np.exp(2j * math.pi * phase)
    return np.sum(terms, axis=-1) / math.sqrt(dirs.shape[-2])


def mc_channel(real: Realization, scn: Scenario, t: float) -> complex:
    return complex(_channels(scn, t, real.dirs, real.gammas, real.zetas))


@dataclass
class McEstimate:
    taus: np.ndarray
    estimates: np.ndarray         # complex, one per tau
    standard_errors: np.ndarray   # complex-magnitude standard error, one per tau
    n_scatterers: int
    m_realizations: int
    seed: int


BLOCK = 64


class _Block:
    """A stack of realizations with the lag-independent geometry precomputed.

    Positions enter the per-time work only through dot products, so each
    evaluation touches (B, N) scalar arrays instead of 3-vectors. The
    arithmetic is the same as :func:`mc_channel`.
    """

    def __init__(self, scn: Scenario, reals):
        self.scn = scn
        dirs = np.stack([r.dirs for r in reals])
        pts = scn.scatter_points(dirs)
        r = pts - scn.bs.p0
        s = pts - scn.ue.p0
        self.r_norm = norm(r)
        self.s_norm = norm(s)
        self.r_vb = dot(r, scn.bs.v)
        self.s_vu = dot(s, scn.ue.v)
        self.r_b = dot(r, scn.beam_bs.pointing)
        self.s_u = dot(s, scn.beam_ue.pointing)
        self.vb_b = float(scn.bs.v @ scn.beam_bs.pointing)
        self.vu_u = float(scn.ue.v @ scn.beam_ue.pointing)
        self.vb2 = float(scn.bs.v @ scn.bs.v)
        self.vu2 = float(scn.ue.v @ scn.ue.v)
        self.offset = np.stack([r.gammas for r in reals]) - scn.fc_hz * np.stack([r.zetas for r in reals])
        self.n = dirs.shape[-2]

    def channels(self, t: float) -> np.ndarray:
        scn = self.scn
        # |r - v_b t| and |s - v_u t| expanded in precomputed dot products
        rb = np.sqrt(np.maximum(self.r_norm**2 - 2 * t * self.r_vb + t * t * self.vb2, 0.0))
        su = np.sqrt(np.maximum(self.s_norm**2 - 2 * t * self.s_vu + t * t * self.vu2, 0.0))
        g_b = np.maximum((self.r_b - t * self.vb_b) / rb, 0.0) ** scn.beam_bs.q
        g_u = np.maximum((self.s_u - t * self.vu_u) / su, 0.0) ** scn.beam_ue.q
        shift_b = (t * t * self.vb2 - 2 * t * self.r_vb) / (rb + self.r_norm)
        shift_u = (t * t * self.vu2 - 2 * t * self.s_vu) / (su + self.s_norm)
        phase = -(shift_b + shift_u) / scn.lambda_m + self.offset
        terms = np.sqrt(g_b * g_u) * np.exp(2j * math.pi * phase)
        return np.sum(terms, axis=-1) / math.sqrt(self.n)


def _products(scn, t, taus, n, children, zeta_s):
    """h(t) conj(h(t + tau)) for each realization (rows) and lag (columns)."""
    out = np.empty((len(children), len(taus)), dtype=complex)
    for start in range(0, len(children), BLOCK):
        reals = [
            _realize(scn.field, n, np.random.default_rng(child), child, zeta_s)
            for child in children[start:start + BLOCK]
        ]
        block = _Block(scn, reals)
        h0 = block.channels(t)
        for col, tau in enumerate(taus):
            out[start:start + len(reals), col] = h0 * np.conj(block.channels(t + tau))
    return out


def mc_autocorr_many(
    scn: Scenario,
    t: float,
    taus,
    n_scatterers: int,
    m_realizations: int,
    seed: int = 0,
    *,
    threads: int = 1,
    zeta_s: float = 0.0,
) -> McEstimate:
    """Ensemble estimates of A_N(t, tau) for several lags from shared realizations.

    Each realization redraws directions and phases. The standard error is
    ``sqrt((var(Re) + var(Im)) / M)`` over the M per-realization products.
    """
    if n_scatterers < 1 or m_realizations < 1:
        raise ValueError("need n_scatterers >= 1 and m_realizations >= 1")
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    children = np.random.SeedSequence(seed).spawn(m_realizations)
    if threads > 1:
        chunks = np.array_split(np.arange(m_realizations), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda idx: _products(scn, t, taus, n_scatterers, [children[i] for i in idx], zeta_s),
                chunks,
            ))
        samples = np.concatenate(parts, axis=0)
    else:
        samples = _products(scn, t, taus, n_scatterers, children, zeta_s)
    est = samples.mean(axis=0)
    if m_realizations > 1:
        var = samples.real.var(axis=0, ddof=1) + samples.imag.var(axis=0, ddof=1)
        se = np.sqrt(var / m_realizations)
    else:
        se = np.full(len(taus), np.inf)
    return McEstimate(taus, est, se, n_scatterers, m_realizations, seed)


def mc_autocorr(
    scn: Scenario,
    t: float,
    tau: float,
    n_scatterers: int,
    m_realizations: int,
    seed: int = 0,
    *,
    threads: int = 1,
) -> tuple[complex, float]:
    """(estimate, standard error) of the scattered autocorrelation at one lag."""
    res = mc_autocorr_many(scn, t, [tau], n_scatterers, m_realizations, seed, threads=threads)
    return complex(res.estimates[0]), float(res.standard_errors[0])
