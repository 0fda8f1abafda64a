import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkdcoexist import optics
from qkdcoexist.errors import DomainError
from qkdcoexist.optics import Channel, FiberLink, WdmComb


def test_dbm_to_mw_values():
    assert optics.dbm_to_mw(0.0) == 1.0
    assert optics.dbm_to_mw(16.8) == pytest.approx(47.863009, rel=1e-7)
    assert optics.dbm_to_mw(15.3) == pytest.approx(33.884416, rel=1e-7)
    assert optics.dbm_to_mw(-math.inf) == 0.0


@given(st.floats(-60.0, 30.0))
def test_dbm_round_trip(p):
    assert abs(optics.mw_to_dbm(optics.dbm_to_mw(p)) - p) < 1e-9


def test_mw_to_dbm_rejects_negative():
    with pytest.raises(DomainError):
        optics.mw_to_dbm(-1.0)


def _comb(powers):
    wl = [optics.ghz_to_wavelength(193_000.0 - 50.0 * i) for i in range(len(powers))]
    return WdmComb(tuple(Channel(w, p) for w, p in zip(wl, powers)), 50.0)


@pytest.mark.parametrize(
    "n, per_channel, expected",
    [(60, -1.0, 16.781513), (30, 2.0, 16.771213), (1, 5.0, 5.0)],
)
def test_aggregate_power(n, per_channel, expected):
    assert optics.aggregate_power(_comb([per_channel] * n)) == pytest.approx(expected, abs=1e-6)


def test_aggregate_power_empty_comb():
    with pytest.raises(DomainError):
        optics.aggregate_power(WdmComb((), 50.0))


@given(st.lists(st.floats(-20.0, 10.0), min_size=1, max_size=20), st.randoms(use_true_random=False))
def test_aggregate_power_permutation_invariant(powers, rnd):
    shuffled = powers[:]
    rnd.shuffle(shuffled)
    assert optics.aggregate_power(_comb(powers)) == pytest.approx(optics.aggregate_power(_comb(shuffled)), abs=1e-12)


@given(st.lists(st.floats(-20.0, 10.0), min_size=1, max_size=20), st.data())
def test_aggregate_power_strictly_increasing(powers, data):
    i = data.draw(st.integers(0, len(powers) - 1))
    bump = data.draw(st.floats(0.01, 5.0))
    raised = powers[:]
    raised[i] += bump
    assert optics.aggregate_power(_comb(raised)) > optics.aggregate_power(_comb(powers))


@pytest.mark.parametrize("n, spacing, per_channel", [(60, 50.0, -0.981513), (30, 100.0, 2.028787)])
def test_reference_comb(n, spacing, per_channel):
    comb = optics.build_reference_comb(n, 16.8)
    assert comb.n_channels == n
    assert comb.grid_spacing_ghz == spacing
    gaps = -np.diff(comb.frequencies_ghz())
    assert np.all(np.abs(gaps - spacing) <= 0.1)
    wl = [ch.wavelength_nm for ch in comb.channels]
    assert all(b > a for a, b in zip(wl, wl[1:]))
    # centred grid overhangs each quoted edge by ~0.05 nm
    assert wl[0] >= optics.COMB_BLUE_EDGE_NM - 0.1 and wl[-1] <= optics.COMB_RED_EDGE_NM + 0.1
    assert all(ch.power_dbm == pytest.approx(per_channel, abs=1e-6) for ch in comb.channels)
    assert optics.aggregate_power(comb) == pytest.approx(16.8, abs=1e-12)


def test_thirty_channel_comb_is_every_other_channel():
    full = optics.build_reference_comb(60, 10.0)
    half = optics.build_reference_comb(30, 10.0)
    assert [c.wavelength_nm for c in half.channels] == [c.wavelength_nm for c in full.channels[::2]]


def test_dark_comb():
    comb = optics.build_reference_comb(60, -math.inf)
    assert optics.dbm_to_mw(optics.aggregate_power(comb)) == 0.0


def test_unsupported_channel_count():
    with pytest.raises(DomainError):
        optics.build_reference_comb(40, 10.0)


def test_service_channels_excluded_by_default():
    off = optics.build_reference_comb(60, 16.8)
    on = optics.build_reference_comb(60, 16.8, include_service_channels=True, service_power_dbm=0.0)
    assert len(off.service_channels) == 2
    assert optics.aggregate_power(off) == pytest.approx(16.8)
    assert optics.dbm_to_mw(optics.aggregate_power(on)) == pytest.approx(optics.dbm_to_mw(16.8) + 2.0)


def test_comb_rejects_irregular_grid():
    chans = (Channel(1550.0, 0.0), Channel(1550.4, 0.0), Channel(1551.0, 0.0))
    with pytest.raises(DomainError):
        WdmComb(chans, 50.0)


def test_attenuation_knots_and_midpoints():
    link = FiberLink(10.0)
    assert optics.attenuation_at(link, 1550.0) == 0.20
    assert optics.attenuation_at(link, 1310.0) == 0.33
    table = dict(optics.DEFAULT_ATTENUATION_TABLE)
    assert optics.attenuation_at(link, 1520.0) == pytest.approx(0.5 * (table[1490.0] + table[1550.0]))


def test_attenuation_out_of_range():
    with pytest.raises(DomainError):
        optics.attenuation_at(FiberLink(10.0), 1700.0)


def test_link_validation():
    with pytest.raises(DomainError):
        FiberLink(-1.0)
    with pytest.raises(DomainError):
        FiberLink(1.0, ((1300.0, 0.3), (1600.0, 0.2)))  # does not cover 1260-1625 nm
    with pytest.raises(DomainError):
        FiberLink(1.0, ((1260.0, 0.3), (1625.0, 1.2)))


def test_end_to_end_loss_70km():
    link = FiberLink(70.0)
    assert optics.end_to_end_loss(link, 1550.0, "classical") == pytest.approx(17.5, abs=1e-12)
    assert optics.end_to_end_loss(link, 1310.0, "quantum") == pytest.approx(25.7, abs=1e-12)


def test_end_to_end_loss_zero():
    link = FiberLink(0.0, fixed_loss_classical_db=0.0, fixed_loss_quantum_db=0.0)
    assert optics.end_to_end_loss(link, 1310.0, "quantum") == 0.0


@given(st.floats(0, 200), st.floats(0, 200), st.sampled_from([(1310.0, "quantum"), (1550.0, "classical")]))
def test_end_to_end_loss_affine(l1, l2, band):
    wl, kind = band
    f = lambda L: optics.end_to_end_loss(FiberLink(L), wl, kind)
    fixed = FiberLink(0.0).fixed_loss_quantum_db if kind == "quantum" else FiberLink(0.0).fixed_loss_classical_db
    assert f(l1 + l2) == pytest.approx(f(l1) + f(l2) - fixed, abs=1e-9)


@pytest.mark.parametrize("aux, loss, expected", [(18.5, 1.7, 16.8), (17.0, 1.7, 15.3), (12.3, 0.0, 12.3)])
def test_fiber_input_power(aux, loss, expected):
    assert optics.fiber_input_power(aux, loss) == pytest.approx(expected, abs=1e-12)
