import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdcoexist import optics, qkd
from qkdcoexist.errors import DomainError
from qkdcoexist.optics import FiberLink
from qkdcoexist.qkd import ChannelStats, DetectorParams, ProtocolParams

from oracles import mc_gain_qber, poisson_mixture


def test_h2():
    assert qkd.h2(0.5) == 1.0
    assert qkd.h2(0.0) == 0.0
    assert qkd.h2(1.0) == 0.0
    assert qkd.h2(0.11) == pytest.approx(0.499916, abs=1e-6)
    with pytest.raises(DomainError):
        qkd.h2(1.1)


def test_channel_stats_vacuum():
    det = DetectorParams(efficiency=0.2, dark_prob=1e-5, misalignment_error=0.03)
    gain, qber = qkd.channel_stats(0.0, 0.1, det, 2e-5)
    assert gain == pytest.approx(3e-5)
    assert qber == pytest.approx(0.5)


@given(st.floats(0.01, 1.0), st.floats(1e-4, 1.0))
def test_channel_stats_no_background(mu, t):
    det = DetectorParams(efficiency=0.2, dark_prob=0.0, misalignment_error=0.01)
    assert qkd.channel_stats(mu, t, det, 0.0)[1] == pytest.approx(0.01)


def test_channel_stats_worked_example():
    det = DetectorParams(efficiency=0.2, dark_prob=1e-5, misalignment_error=0.03)
    gain, qber = qkd.channel_stats(0.5, 0.1, det, 0.0)
    assert gain == pytest.approx(9.960067e-3, rel=1e-6)
    assert qber == pytest.approx(3.047188e-2, rel=1e-6)


def test_channel_stats_rejects_bad_transmittance():
    with pytest.raises(DomainError):
        qkd.channel_stats(0.5, 0.0, DetectorParams(), 0.0)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_channel_stats_matches_monte_carlo(seed):
    rng = np.random.default_rng(1000 + seed)
    mu = rng.uniform(0.05, 0.8)
    t = 10 ** rng.uniform(-2.5, 0)
    det = DetectorParams(
        efficiency=rng.uniform(0.1, 0.5),
        dark_prob=10 ** rng.uniform(-6, -3.5),
        misalignment_error=rng.uniform(0.005, 0.05),
    )
    noise = 10 ** rng.uniform(-6, -4)
    gain, qber = qkd.channel_stats(mu, t, det, noise)
    y0 = det.dark_prob + noise
    mc_gain, gain_se, mc_qber, qber_se = mc_gain_qber(
        mu, t * det.efficiency, y0, det.misalignment_error, 10**7, rng
    )
    assert abs(gain - mc_gain) < 3 * gain_se
    assert abs(qber - mc_qber) < 3 * qber_se


def _stats_from_yields(mu, nu, yields, errors):
    q_mu, e_mu = poisson_mixture(mu, yields, errors)
    q_nu, e_nu = poisson_mixture(nu, yields, errors)
    return ChannelStats(q_mu, q_nu, e_mu, e_nu, yields[0], 0.0)


def test_decoy_bounds_soundness_random_channels():
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(100):
        mu = rng.uniform(0.1, 0.9)
        nu = rng.uniform(0.01, 0.9 * mu)
        y0 = 10 ** rng.uniform(-7, -2)
        eta = 10 ** rng.uniform(-4, 0)
        n = np.arange(51)
        yields = 1 - (1 - y0) * (1 - eta) ** n
        # arbitrary (still physical) multi-photon yields
        yields[2:] = np.clip(yields[2:] * rng.uniform(0.0, 3.0, size=49), 0.0, 1.0)
        errors = rng.uniform(0.0, 0.5, size=51)
        errors[0] = qkd.E0
        proto = ProtocolParams(mu=mu, nu=nu)
        b = qkd.decoy_bounds(_stats_from_yields(mu, nu, yields, errors), proto)
        if b.y1_lower > yields[1] * (1 + 1e-9) or b.e1_upper < errors[1] * (1 - 1e-9):
            violations += 1
    assert violations == 0


def test_decoy_bounds_saturation():
    # lossless, noiseless: every non-vacuum pulse clicks, misalignment error everywhere
    mu, nu, e_mis = 0.01, 0.001, 0.02
    yields = np.ones(51)
    yields[0] = 0.0
    errors = np.full(51, e_mis)
    errors[0] = qkd.E0
    b = qkd.decoy_bounds(_stats_from_yields(mu, nu, yields, errors), ProtocolParams(mu=mu, nu=nu))
    assert b.y1_lower == pytest.approx(1.0, abs=0.01)
    assert b.e1_upper == pytest.approx(e_mis, rel=0.01)


def test_decoy_bounds_rejects_nu_above_mu():
    stats = ChannelStats(1e-3, 3e-4, 0.03, 0.04, 1e-6, 0.0)
    with pytest.raises(DomainError):
        qkd.decoy_bounds(stats, SimpleNamespace(mu=0.3, nu=0.3))


def test_protocol_rejects_nu_equal_mu():
    with pytest.raises(DomainError):
        ProtocolParams(mu=0.3, nu=0.3)


def test_decoy_zero_yield_is_pessimistic():
    # decoy gain no higher than the background: no single-photon evidence
    stats = ChannelStats(1e-5, 1e-6, 0.5, 0.5, 1e-6, 0.0)
    b = qkd.decoy_bounds(stats, ProtocolParams())
    assert b.y1_lower == 0.0 and b.e1_upper == 0.5
    assert "y1_clamped" in b.flags


def test_key_rate_zero_when_e1_is_half():
    stats = ChannelStats(1e-3, 3e-4, 0.03, 0.03, 1e-6, 0.0)
    key = qkd.secure_key_rate(stats, qkd.DecoyBounds(0.5, 0.5), ProtocolParams())
    assert key.skr == 0.0 and not key.secure


def _point(length=50.0, p_dbm=16.8, n=60, params=None, **det_kw):
    params = params or qkd.ModelParams()
    comb = optics.build_reference_comb(n, p_dbm) if math.isfinite(p_dbm) else None
    det = params.detector if not det_kw else DetectorParams(**{**params.detector.__dict__, **det_kw})
    return qkd.simulate_point(FiberLink(length), comb, params.protocol, det, params.raman)


def test_simulate_point_anchors(fitted):
    off = _point(p_dbm=-math.inf, params=fitted)
    assert off.skr == pytest.approx(169e3, rel=0.10)
    assert off.qber == pytest.approx(0.034, abs=0.004)
    on = _point(params=fitted)
    assert on.skr == pytest.approx(106e3, rel=0.10)
    assert on.qber == pytest.approx(0.054, abs=0.004)


def test_channel_count_invariance(fitted):
    a, b = _point(params=fitted, n=60), _point(params=fitted, n=30)
    assert (a.skr, a.qber, a.noise) == (b.skr, b.qber, b.noise)


@settings(max_examples=50, deadline=None)
@given(st.floats(-10.0, 22.0))
def test_channel_count_invariance_random_power(p):
    params = qkd.ModelParams(raman=qkd.RamanSettings(beta=3e-12))
    a, b = _point(p_dbm=p, n=60, params=params), _point(p_dbm=p, n=30, params=params)
    assert a.skr == pytest.approx(b.skr, rel=1e-12, abs=1e-9)
    assert a.qber == pytest.approx(b.qber, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-9, 1e-2), st.floats(1.0, 10.0))
def test_skr_nonincreasing_in_noise(noise, factor):
    proto, det = ProtocolParams(), DetectorParams()
    t = 10 ** (-19.1 / 10)

    def skr(n):
        q_mu, e_mu = qkd.channel_stats(proto.mu, t, det, n)
        q_nu, e_nu = qkd.channel_stats(proto.nu, t, det, n)
        st_ = ChannelStats(q_mu, q_nu, e_mu, e_nu, qkd.background_yield(det, n), n)
        return qkd.secure_key_rate(st_, qkd.decoy_bounds(st_, proto), proto).skr

    assert skr(noise * factor) <= skr(noise) + 1e-9


def test_monotone_in_length_and_power(fitted):
    lengths = np.linspace(0.0, 120.0, 121)
    skr = [_point(length=L, params=fitted).skr for L in lengths]
    assert all(b <= a for a, b in zip(skr, skr[1:]))
    powers = np.linspace(-10.0, 25.0, 71)
    pts = [_point(p_dbm=p, params=fitted) for p in powers]
    assert all(b.skr <= a.skr for a, b in zip(pts, pts[1:]))
    assert all(b.qber >= a.qber for a, b in zip(pts, pts[1:]))


def test_qber_tends_to_half_when_noise_dominates(fitted):
    pt = _point(p_dbm=60.0, params=fitted)
    assert pt.qber == pytest.approx(0.5, abs=1e-3)
    assert pt.skr == 0.0 and not pt.key.secure


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 200.0), st.floats(-20.0, 40.0))
def test_skr_nonnegative_and_secure_flag(length, p):
    pt = _point(length=length, p_dbm=p)
    assert pt.skr >= 0
    assert (pt.skr == 0) == (not pt.key.secure)


def test_counter_feed_uses_backward_raman(fitted):
    from dataclasses import replace

    counter = replace(fitted.raman, feed="counter")
    comb = optics.build_reference_comb(60, 16.8)
    co = qkd.simulate_point(FiberLink(50.0), comb, fitted.protocol, fitted.detector, fitted.raman)
    ctr = qkd.simulate_point(FiberLink(50.0), comb, fitted.protocol, fitted.detector, counter)
    assert co.noise.forward_raman_mw == ctr.noise.forward_raman_mw
    assert ctr.noise.photon_rate_in_gate > co.noise.photon_rate_in_gate  # backward Raman is the larger at 50 km


def test_leakage_adds_noise(fitted):
    from dataclasses import replace

    leaky = replace(fitted.raman, leakage_extinction=1e-12)
    comb = optics.build_reference_comb(60, 16.8)
    base = qkd.simulate_point(FiberLink(50.0), comb, fitted.protocol, fitted.detector, fitted.raman)
    pt = qkd.simulate_point(FiberLink(50.0), comb, fitted.protocol, fitted.detector, leaky)
    assert pt.noise.leakage_mw > 0 and base.noise.leakage_mw == 0
    assert pt.qber > base.qber
