import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from ntn_coherence.antenna import BeamConfig, los_gains, nlos_gains
from ntn_coherence.channel import (
    SPEED_OF_LIGHT,
    AutocorrEvaluator,
    Scenario,
    channel_autocorr,
    los_autocorr,
    los_doppler_freq,
    los_phase,
    los_phase_step,
    nlos_autocorr,
    nlos_doppler_freq,
    nlos_phase,
    normalized_autocorr,
    rician_weights,
)
from ntn_coherence.errors import ConfigError, DegenerateNormalizer, ZeroDistance
from ntn_coherence.geometry import BodyState, SolidAngle, direction_vector, orthonormal_frame, unit_between
from ntn_coherence.quadrature import QuadSpec, sphere_integrate
from ntn_coherence.scatter import VmfField, vmf_pdf
from ntn_coherence.scenarios import default_scenario

unit_dirs = st.tuples(st.floats(0, 2 * math.pi, exclude_max=True), st.floats(0, math.pi)).map(
    lambda a: direction_vector(*a)
)


def static(scn):
    return scn.with_(bs=BodyState(scn.bs.p0, [0, 0, 0]), ue=BodyState(scn.ue.p0, [0, 0, 0]))


def small_scenario(k=0.0):
    """Short link with modest phase gradients, cheap to integrate."""
    fc = 3e9
    lam = SPEED_OF_LIGHT / fc
    bs = BodyState([30.0, 10.0, 400.0], [15.0, -5.0, 0.0])
    ue = BodyState([0.0, 0.0, 0.0], [1.0, 2.0, 0.0])
    los = unit_between(ue.p0, bs.p0)
    return Scenario(bs, ue, BeamConfig(-los, 20.0), BeamConfig(los, 3.0), VmfField(los, 5.0, 20 * lam), k, fc)


# --- scenario ----------------------------------------------------------------

def test_wavelength():
    scn = default_scenario()
    assert scn.lambda_m * scn.fc_hz == pytest.approx(SPEED_OF_LIGHT, rel=1e-6)
    assert scn.lambda_m == pytest.approx(0.0107069, abs=1e-7)


@pytest.mark.parametrize("k", [-1.0, math.nan])
def test_rician_range(k):
    with pytest.raises(ValueError):
        default_scenario(k)


def test_coincident_bodies():
    scn = default_scenario()
    with pytest.raises(ZeroDistance):
        scn.with_(ue=BodyState(scn.bs.p0, [0, 0, 0]))


def test_missing_k():
    with pytest.raises(ConfigError):
        rician_weights(None)
    assert rician_weights(math.inf) == (1.0, 0.0)
    assert rician_weights(0.0) == (0.0, 1.0)


# --- direct path ----------------------------------------------------------------

def test_los_doppler_examples():
    scn = default_scenario()
    same = scn.with_(ue=BodyState(scn.ue.p0, scn.bs.v))
    assert los_doppler_freq(same, 0.3) == 0.0
    transverse = scn.with_(bs=BodyState([0, 0, 5e5], [7e3, 0, 0]), ue=BodyState([0, 0, 0], [0, 0, 0]))
    assert los_doppler_freq(transverse, 0.0) == 0.0


def test_los_phase_examples():
    scn = default_scenario().with_(bs=BodyState([1000, 0, 0], [7000, 0, 0]), ue=BodyState([0, 0, 0], [0, 0, 0]))
    assert los_phase(scn, 0.0) == 0.0
    assert los_phase(scn, 1e-6) == pytest.approx(-0.007 / scn.lambda_m, rel=1e-12)
    assert los_phase(scn, 1e-6) == pytest.approx(-0.65378, abs=1e-5)


def _fd_check(phase, freq, t, h):
    fd = (phase(t + h) - phase(t - h)) / (2 * h)
    return fd, freq(t)


@pytest.mark.parametrize("t", [0.05, 0.5, 3.0])
def test_los_phase_derivative(t):
    scn = default_scenario()
    # stable steps instead of differencing two large phases
    fd = -los_phase_step(scn, t - 1e-5, 2e-5) / 2e-5
    assert fd == pytest.approx(los_doppler_freq(scn, t), rel=1e-6)


def test_los_phase_step_consistent():
    scn = default_scenario()
    assert los_phase_step(scn, 0.2, 0.01) == pytest.approx(los_phase(scn, 0.2) - los_phase(scn, 0.21), rel=1e-7)


def test_ku_band_doppler_order_of_magnitude():
    # 800 km altitude at 45 degrees elevation, 14 GHz, 7.56 km/s along the ground track
    h = 800e3
    scn = Scenario(
        BodyState([-h, 0, h], [7.56e3, 0, 0]),
        BodyState([0, 0, 0], [0, 0, 0]),
        BeamConfig(unit_between([-h, 0, h], [0, 0, 0]), 10.0),
        BeamConfig(unit_between([0, 0, 0], [-h, 0, h]), 10.0),
        VmfField(unit_between([0, 0, 0], [-h, 0, h]), 30.0, 10.0),
        None,
        14e9,
    )
    assert abs(los_doppler_freq(scn, 0.0)) == pytest.approx(230e3, rel=0.15)


def test_los_autocorr_examples():
    scn = default_scenario()
    assert los_autocorr(scn, 0.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert los_autocorr(static(scn), 0.0, 0.5) == pytest.approx(1.0, rel=1e-14)
    tau = 1e-3
    gb0, gu0 = los_gains(scn, 0.0)
    gb1, gu1 = los_gains(scn, tau)
    a = los_autocorr(scn, 0.0, tau)
    assert abs(a) == pytest.approx(math.sqrt(gb0 * gu0 * gb1 * gu1), rel=1e-12)
    expected_phase = 2 * math.pi * (los_phase(scn, 0.0) - los_phase(scn, tau))
    assert np.angle(a) == pytest.approx(math.remainder(expected_phase, 2 * math.pi), abs=1e-6)


# --- scattered paths --------------------------------------------------------------

def test_nlos_doppler_static_and_orthogonal():
    scn = default_scenario()
    n = scn.field.mu
    assert nlos_doppler_freq(static(scn), 0.2, n) == 0.0
    p = scn.ue.p0 + scn.field.radius_m * n
    r, s = p - scn.bs.p0, p - scn.ue.p0
    vb = np.cross(r, [0, 1, 0])
    vu = np.cross(s, [1, 0, 0])
    ortho = scn.with_(bs=BodyState(scn.bs.p0, vb), ue=BodyState(scn.ue.p0, vu))
    assert nlos_doppler_freq(ortho, 0.0, n) == pytest.approx(0.0, abs=1e-6)


def test_nlos_doppler_raw_recomputation():
    scn = default_scenario()
    omega = SolidAngle(*[float(x) for x in (np.arctan2(scn.field.mu[1], scn.field.mu[0]) % (2 * math.pi), math.acos(scn.field.mu[2]))])
    p = [0.0 + scn.field.radius_m * c for c in scn.field.mu]
    terms = 0.0
    for pos, vel in ((scn.bs.p0, scn.bs.v), (scn.ue.p0, scn.ue.v)):
        d = [p[i] - pos[i] for i in range(3)]
        dist = math.sqrt(sum(x * x for x in d))
        terms += sum(vel[i] * d[i] for i in range(3)) / dist
    assert nlos_doppler_freq(scn, 0.0, omega) == pytest.approx(terms / scn.lambda_m, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(unit_dirs)
def test_nlos_phase_zero_cases(n):
    scn = default_scenario()
    assert nlos_phase(scn, 0.0, n) == 0.0
    assert nlos_phase(static(scn), 0.7, n) == 0.0


@settings(max_examples=30, deadline=None)
@given(unit_dirs, st.floats(0.01, 2.0))
def test_nlos_phase_derivative(n, t):
    scn = default_scenario()
    h = 1e-6
    fd = (nlos_phase(scn, t + h, n) - nlos_phase(scn, t - h, n)) / (2 * h)
    f = nlos_doppler_freq(scn, t, n)
    assert fd == pytest.approx(f, rel=1e-6, abs=1e-6 * np.linalg.norm(scn.v) / scn.lambda_m)


def test_nlos_autocorr_tau0_omni():
    scn = default_scenario()
    omni = scn.with_(beam_bs=BeamConfig(scn.beam_bs.pointing, 1e-4), beam_ue=BeamConfig(scn.beam_ue.pointing, 1e-4))
    val = nlos_autocorr(omni, 0.0, 0.0).value
    # the clamp removes the back half of the UE lobe, where the vMF mass is ~e^-30
    assert val.real == pytest.approx(1.0, rel=1e-3)


def test_nlos_autocorr_tau0_default():
    val = nlos_autocorr(default_scenario(), 0.0, 0.0).value
    assert 0.0 < val.real <= 1.0
    assert abs(val.imag) < 1e-10 * abs(val)


def test_nlos_autocorr_matches_brute_force():
    scn = small_scenario()
    tau = 2e-3
    g = lambda n: vmf_pdf(scn.field, n) * np.sqrt(
        np.prod(nlos_gains(scn, 0.0, n), axis=0) * np.prod(nlos_gains(scn, tau, n), axis=0)
    ) * np.exp(2j * math.pi * (nlos_phase(scn, 0.0, n) - nlos_phase(scn, tau, n)))
    brute = sphere_integrate(g, QuadSpec(128, 256, 2, 1e-9))
    assert nlos_autocorr(scn, 0.0, tau, QuadSpec(rel_tol=1e-8)).value == pytest.approx(brute.value, rel=1e-6)


def test_high_concentration_cap_agrees():
    scn = small_scenario().with_(field=VmfField(small_scenario().field.mu, 400.0, small_scenario().field.radius_m))
    tau = 1e-3
    capped = nlos_autocorr(scn, 0.0, tau, QuadSpec(rel_tol=1e-9)).value
    g = lambda n: vmf_pdf(scn.field, n) * np.sqrt(
        np.prod(nlos_gains(scn, 0.0, n), axis=0) * np.prod(nlos_gains(scn, tau, n), axis=0)
    ) * np.exp(2j * math.pi * (nlos_phase(scn, 0.0, n) - nlos_phase(scn, tau, n)))
    full = sphere_integrate(g, QuadSpec(256, 256, 2, 1e-9), pole=scn.field.mu)
    assert capped == pytest.approx(full.value, rel=1e-7)


# --- mixing and normalization ---------------------------------------------------------

def test_rician_sentinels_and_mix():
    base = default_scenario()
    q = QuadSpec()
    tau = 3e-5
    nlos = nlos_autocorr(base, 0.0, tau, q).value
    los = los_autocorr(base, 0.0, tau)
    a0 = channel_autocorr(base.with_(rician_k=0.0), 0.0, tau, q)
    assert a0.value == nlos and a0.los_part is None
    ainf = channel_autocorr(base.with_(rician_k=math.inf), 0.0, tau, q)
    assert ainf.value == los and ainf.nlos_part is None
    a1 = channel_autocorr(base.with_(rician_k=1.0), 0.0, 0.0, q)
    assert a1.value == pytest.approx(0.5 * 1.0 + 0.5 * nlos_autocorr(base, 0.0, 0.0, q).value, rel=1e-12)
    a3 = channel_autocorr(base.with_(rician_k=3.0), 0.0, tau, q)
    assert a3.value == pytest.approx(0.75 * a3.los_part + 0.25 * a3.nlos_part, rel=1e-14)


def test_normalized_examples():
    scn = default_scenario(0.3)
    assert normalized_autocorr(scn, 0.0, 0.0) == 1.0
    frozen = static(scn).with_(rician_k=math.inf)
    for tau in (1e-9, 1e-3, 1.0):
        assert normalized_autocorr(frozen, 0.0, tau) == pytest.approx(1.0, rel=1e-14)


def test_static_scattered_is_flat():
    ev = AutocorrEvaluator(static(default_scenario(0.5)))
    for tau in (1e-6, 1e-2):
        assert ev.normalized(tau) == pytest.approx(1.0, rel=1e-12)


def test_degenerate_normalizer():
    scn = default_scenario(math.inf)
    away = scn.with_(beam_ue=BeamConfig(-scn.beam_ue.pointing, 10.0))
    with pytest.raises(DegenerateNormalizer):
        normalized_autocorr(away, 0.0, 1e-3)


def test_k_ordering_where_direct_path_dominates():
    ev = AutocorrEvaluator(default_scenario())
    for tau in np.logspace(-6, -2, 9):
        los = abs(ev.normalized(tau, math.inf))
        nlos = abs(ev.normalized(tau, 0.0))
        if los > nlos:
            mags = [abs(ev.normalized(tau, k)) for k in (0.0, 0.1, 0.5, 1.0, 2.0, 10.0)]
            assert all(b >= a - 1e-12 for a, b in zip(mags, mags[1:]))


# --- randomized scenarios ----------------------------------------------------------

@st.composite
def scenarios(draw):
    fc = draw(st.floats(1e9, 30e9))
    lam = SPEED_OF_LIGHT / fc
    ue = BodyState([0, 0, 0], draw(st.tuples(*[st.floats(-3, 3)] * 3)))
    dist = draw(st.floats(50.0, 2000.0))
    bs_dir = draw(unit_dirs)
    bs = BodyState(dist * bs_dir, draw(st.tuples(*[st.floats(-30, 30)] * 3)))
    return Scenario(
        bs,
        ue,
        BeamConfig(draw(unit_dirs), draw(st.floats(0.5, 30.0))),
        BeamConfig(draw(unit_dirs), draw(st.floats(0.5, 10.0))),
        VmfField(draw(unit_dirs), draw(st.floats(0.5, 30.0)), draw(st.floats(3.0, 20.0)) * lam),
        draw(st.sampled_from([0.0, 0.5, 2.0, math.inf])),
        fc,
    )


@settings(max_examples=15, deadline=None)
@given(scenarios(), st.floats(1e-5, 1e-2))
def test_cauchy_schwarz_random(scn, tau):
    a = AutocorrEvaluator(scn, 0.0, strict=False)
    b = AutocorrEvaluator(scn, tau, strict=False)
    lhs = abs(a.autocorr(tau).value) ** 2
    a0, b0 = a.autocorr(0.0).value, b.autocorr(0.0).value
    assert a0.real >= 0 and b0.real >= 0
    assert abs(a0.imag) <= 1e-10 * abs(a0) + 1e-300
    assert lhs <= a0.real * b0.real + 1e-9


def test_wide_beam_facing_away_from_scatter():
    # most scatter mass sits behind a wide UE beam, so the power piles up at the
    # clamp edge; compare against an adaptive reference in the beam's own frame
    scn = small_scenario()
    u = direction_vector(0.4, 2.0)
    mu = direction_vector(3.5, 1.2)
    scn = scn.with_(beam_ue=BeamConfig(u, 0.83), field=VmfField(mu, 20.0, scn.field.radius_m))
    e1, e2 = orthonormal_frame(u)

    def f(phi, c):
        n = c * u + math.sqrt(1 - c * c) * (math.cos(phi) * e1 + math.sin(phi) * e2)
        g_b, g_u = nlos_gains(scn, 0.0, n)
        return float(vmf_pdf(scn.field, n) * g_b * g_u)

    ref, _ = integrate.dblquad(f, 0.0, 1.0, 0.0, 2 * math.pi, epsabs=1e-13, epsrel=1e-10)
    got = nlos_autocorr(scn, 0.0, 0.0).value
    assert got.real == pytest.approx(ref, rel=1e-6)
