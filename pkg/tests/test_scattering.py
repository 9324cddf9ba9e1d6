import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIG1_A
from oracles import boundary_match_transmission, phase_derivative, series_by_recursion
from tunneltime.dispersion import Kind, ScatterRegion
from tunneltime.errors import DomainError, UnwrapError
from tunneltime.io import read_table
from tunneltime.scattering import (CoefficientTable, group_delay, hartman_limit, polar_decompose,
                                   series_partial_sum, series_ratio, series_term, tail_bound,
                                   transmission_closed, unwrap_phase)

well = ScatterRegion(Kind.WELL, 1.0, FIG1_A)
sym_barrier = ScatterRegion(Kind.BARRIER, 1.0, 1.0)


# Frozen from oracles.boundary_match_transmission at 40 digits.
@pytest.mark.parametrize("omega, kind, v0, a", [
    (0.01, "well", 1.0, FIG1_A),
    (0.5, "barrier", 1.0, 1.0),
    (0.2, "barrier", 1.0, 3.0),
    (1.7, "barrier", 1.0, 2.0),
    (0.3, "well", 2.5, 0.7),
    (1.0 + 1e-6, "barrier", 1.0, 1.5),
    (0.999, "barrier", 1.0, 1.5),
])
def test_closed_form_matches_boundary_matching(omega, kind, v0, a):
    expected = boundary_match_transmission(omega, kind, v0, a)
    got = transmission_closed(omega, ScatterRegion(kind, v0, a))
    assert abs(got - expected) <= 1e-13 * max(1.0, abs(expected))


def test_free_flight_is_pure_phase():
    free = ScatterRegion(Kind.WELL, 0.0, 2.0)
    ws = np.linspace(0, 3, 301)
    k = np.sqrt(2 * ws)
    np.testing.assert_allclose(transmission_closed(ws, free), np.exp(1j * k * 2.0), atol=1e-14)


def test_resonance_gives_minus_one():
    # k'a = pi with k' = sqrt(2(omega + 1)), a = 1  => omega = pi^2/2 - 1
    region = ScatterRegion(Kind.WELL, 1.0, 1.0)
    t = transmission_closed(math.pi ** 2 / 2 - 1, region)
    assert abs(t + 1) < 1e-12


def test_symmetric_barrier_value():
    t = transmission_closed(0.5, sym_barrier)
    assert t.real == pytest.approx(1 / math.cosh(1.0), rel=1e-15)
    assert t.imag == pytest.approx(0.0, abs=1e-16)
    assert t.real == pytest.approx(0.6480543, abs=5e-8)
    assert series_by_recursion(0.5, "barrier", 1.0, 1.0, 100) == pytest.approx(t, abs=1e-15)


def test_fig1_magnitude():
    # multiprecision value 0.61823076213718...; quoted elsewhere as 0.618230
    assert abs(transmission_closed(0.01, well)) == pytest.approx(0.6182307621371834, rel=1e-14)
    assert abs(transmission_closed(0.01, well)) == pytest.approx(0.618230, abs=1e-6)


def test_zero_frequency_limit():
    assert transmission_closed(0.0, well) == 0
    assert transmission_closed(0.0, ScatterRegion(Kind.BARRIER, 0.0, 1.0)) == 1
    # continuous from above
    assert abs(transmission_closed(1e-14, well)) < 1e-5


def test_barrier_top_is_finite():
    region = ScatterRegion(Kind.BARRIER, 1.0, 2.0)
    k = math.sqrt(2.0)
    # limit of the closed form at k' = 0: 1 / (1 - i k a / 2)
    assert transmission_closed(1.0, region) == pytest.approx(1 / (1 - 1j * k * 2.0 / 2), abs=1e-15)


def test_series_term_examples():
    free = ScatterRegion(Kind.WELL, 0.0, 1.3)
    k = math.sqrt(2 * 0.4)
    assert series_term(1, 0.4, free) == pytest.approx(np.exp(1j * k * 1.3), abs=1e-15)
    assert series_term(2, 0.4, free) == 0
    t1 = series_term(1, 0.5, sym_barrier)
    assert t1.real == pytest.approx(2 * math.exp(-1), rel=1e-15)
    assert abs(t1.imag) < 1e-16
    k, kin = math.sqrt(0.02), math.sqrt(2.02)
    assert abs(series_term(1, 0.01, well)) == pytest.approx(4 * k * kin / (k + kin) ** 2, rel=1e-14)
    assert abs(series_term(1, 0.01, well)) == pytest.approx(0.329233, abs=2e-6)
    assert abs(series_ratio(0.01, well)) == pytest.approx(((kin - k) / (kin + k)) ** 2, rel=1e-14)
    assert abs(series_ratio(0.01, well)) == pytest.approx(0.670769, abs=5e-6)


def test_series_term_rejects_bad_index():
    with pytest.raises(ValueError):
        series_term(0, 0.1, well)
    with pytest.raises(ValueError):
        series_partial_sum(0, 0.1, well)


def test_partial_sum_examples():
    free = ScatterRegion(Kind.WELL, 0.0, 1.3)
    assert abs(series_partial_sum(1, 0.4, free) - transmission_closed(0.4, free)) < 1e-15
    two = series_partial_sum(2, 0.5, sym_barrier)
    assert two == pytest.approx(2 * math.exp(-1) * (1 - math.exp(-2)), abs=1e-15)
    assert two.real == pytest.approx(0.6361847, abs=5e-8)
    assert abs(two - 1 / math.cosh(1)) <= tail_bound(2, 0.5, sym_barrier)
    assert abs(series_partial_sum(100, 0.01, well) - transmission_closed(0.01, well)) < 1e-12


def test_series_matches_reflection_oracle():
    for omega, kind, a in [(0.01, "well", FIG1_A), (0.3, "barrier", 0.8), (2.0, "barrier", 1.1)]:
        region = ScatterRegion(kind, 1.0, a)
        for terms in (1, 3, 10):
            assert series_partial_sum(terms, omega, region) == pytest.approx(
                series_by_recursion(omega, kind, 1.0, a, terms), abs=1e-14)


omegas_well = st.floats(min_value=1e-4, max_value=5.0)
thick = st.floats(min_value=0.05, max_value=8.0)


@given(omegas_well, thick, st.integers(min_value=1, max_value=40))
def test_successive_terms_follow_ratio(omega, a, j):
    for region in (ScatterRegion(Kind.WELL, 1.0, a), ScatterRegion(Kind.BARRIER, 1.0, a)):
        tj = series_term(j, omega, region)
        tn = series_term(j + 1, omega, region)
        if abs(tj) > 1e-250:
            assert abs(tn - tj * series_ratio(omega, region)) <= 1e-14 * abs(tj) + 1e-300


@given(omegas_well, thick)
def test_ratio_below_one(omega, a):
    for kind in Kind:
        region = ScatterRegion(kind, 1.0, a)
        if abs(omega - 1.0) > 1e-9:
            assert abs(series_ratio(omega, region)) < 1


@given(st.floats(min_value=1e-3, max_value=0.999), thick, st.integers(min_value=1, max_value=5))
def test_barrier_decay_ratio(omega, a, j):
    region = ScatterRegion(Kind.BARRIER, 1.0, a)
    kappa = math.sqrt(2 * (1 - omega))
    ratio = abs(series_term(j + 1, omega, region)) / abs(series_term(j, omega, region))
    assert ratio == pytest.approx(math.exp(-2 * kappa * a), rel=1e-13)


@given(st.floats(min_value=1e-3, max_value=0.999), thick, thick, st.integers(min_value=1, max_value=6))
def test_barrier_constituent_phase_thickness_independent(omega, a1, a2, j):
    p1 = np.angle(series_term(j, omega, ScatterRegion(Kind.BARRIER, 1.0, a1)))
    p2 = np.angle(series_term(j, omega, ScatterRegion(Kind.BARRIER, 1.0, a2)))
    d = (p1 - p2 + math.pi) % (2 * math.pi) - math.pi
    assert abs(d) < 1e-14


@given(st.integers(min_value=1, max_value=30), st.floats(min_value=0.1, max_value=4.0))
def test_resonances_have_unit_magnitude(n, v0):
    a = 1.7
    kin = n * math.pi / a
    omega = kin ** 2 / 2 - v0
    if omega > 0:
        assert abs(abs(transmission_closed(omega, ScatterRegion(Kind.WELL, v0, a))) - 1) < 1e-12


@given(st.floats(min_value=0, max_value=10), thick, st.floats(min_value=0, max_value=5))
def test_magnitude_bounded(omega, a, v0):
    for kind in Kind:
        assert abs(transmission_closed(omega, ScatterRegion(kind, v0, a))) <= 1 + 1e-12


@settings(max_examples=50)
@given(omegas_well, thick, st.integers(min_value=1, max_value=60))
def test_tail_bound_holds(omega, a, terms):
    for kind in Kind:
        region = ScatterRegion(kind, 1.0, a)
        if abs(omega - 1.0) < 1e-6:
            continue
        err = abs(transmission_closed(omega, region) - series_partial_sum(terms, omega, region))
        assert err <= tail_bound(terms, omega, region) + 1e-13


def test_unwrap_examples():
    assert np.all(unwrap_phase(np.full(7, np.exp(0.4j))) == 0.4)
    s = 3.0
    ws = np.linspace(0, 10, 200)  # s * dw < pi
    np.testing.assert_allclose(unwrap_phase(np.exp(1j * ws * s)), ws * s, atol=1e-12)
    with pytest.raises(UnwrapError) as err:
        unwrap_phase([1, 1j, 0, 1])
    assert err.value.index == 2


def test_unwrap_first_sample_principal():
    p = unwrap_phase([-1 + 0j, -1 + 1e-3j])
    assert -math.pi < p[0] <= math.pi


def test_unwrap_grid_refinement_across_resonances():
    region = ScatterRegion(Kind.WELL, 1.0, 6.0)  # several resonances in [0.05, 3]
    coarse = np.linspace(0.05, 3.0, 2001)
    fine = np.linspace(0.05, 3.0, 4001)
    pc = unwrap_phase(transmission_closed(coarse, region))
    pf = unwrap_phase(transmission_closed(fine, region))
    np.testing.assert_allclose(pf[::2], pc, atol=1e-9)
    assert np.all(np.abs(np.diff(pc)) < math.pi)


def test_coefficient_table_invariants(tmp_path):
    omegas = np.linspace(0.0, 0.0226, 2049)
    table = CoefficientTable.from_region(omegas, well)
    assert table.magnitude[0] == 0
    assert np.all(table.magnitude[1:] > 0) and np.all(table.magnitude <= 1)
    nz = table.magnitude > 0
    np.testing.assert_allclose(np.exp(1j * table.phase_unwrapped[nz]),
                               table.values[nz] / table.magnitude[nz], atol=1e-12)
    assert np.all(np.abs(np.diff(table.phase_unwrapped)) < math.pi)
    path = tmp_path / "coef.csv"
    table.write_csv(path)
    _, header, cols = read_table(path)
    assert header == ["omega", "re_T", "im_T", "abs_T", "phase_unwrapped"]
    assert cols["omega"] == table.omegas.tolist()
    assert cols["re_T"] == table.values.real.tolist()  # 17 digits round-trip


def test_coefficient_table_zero_frequency_phase_is_continuous():
    omegas = np.linspace(0.0, 0.02, 4001)
    table = CoefficientTable.from_region(omegas, well)
    assert abs(table.phase_unwrapped[0] - table.phase_unwrapped[1]) < 0.05


def test_coefficient_table_rejects_unsorted():
    with pytest.raises(ValueError):
        CoefficientTable(np.array([0.2, 0.1]), np.ones(2), np.zeros(2), np.ones(2))


def test_polar_decompose():
    p = polar_decompose(1.0, 1.0)
    assert p.delta_mag == pytest.approx(math.sqrt(2), rel=1e-15)
    assert p.delta_arg == pytest.approx(math.pi / 4, rel=1e-15)
    assert polar_decompose(1e12, 1.0).delta_arg < 1e-11
    k = math.sqrt(0.02)
    kappa = math.sqrt(2 * (1 - 0.01))
    assert polar_decompose(k, kappa).delta_mag ** 2 == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(DomainError):
        polar_decompose(0.0, 1.0)


@given(st.floats(min_value=1e-3, max_value=0.999), st.floats(min_value=0.1, max_value=5),
       st.floats(min_value=0.2, max_value=5))
def test_polar_identity(omega, v0_scale, mu):
    v0 = v0_scale
    k = math.sqrt(2 * mu * omega * v0)
    kappa = math.sqrt(2 * mu * (v0 - omega * v0))
    p = polar_decompose(k, kappa)
    assert p.delta_mag ** 2 == pytest.approx(2 * mu * v0, rel=1e-13)
    assert 0 < p.delta_arg < math.pi / 2


def test_group_delay_free_flight():
    free = ScatterRegion(Kind.WELL, 0.0, 5.0)
    rep = group_delay(0.5, free)
    assert rep.tau_phi == pytest.approx(5.0 / 1.0, rel=1e-8)
    assert abs(rep.tau_n) < 1e-8
    assert rep.quality_flags == []


def test_group_delay_fig1_negative_and_matches_oracle():
    rep = group_delay(0.01, well, tau_scale=398.0)
    assert rep.tau_phi < 0
    assert rep.tau_phi == pytest.approx(phase_derivative(0.01, "well", 1.0, FIG1_A), rel=1e-7)
    assert rep.constituent_delays == pytest.approx([1.6831683, 5.0495050, 8.4158416], abs=1e-6)
    assert rep.hartman_limit is None


def test_group_delay_opaque_barrier():
    region = ScatterRegion(Kind.BARRIER, 1.0, 10.0)
    rep = group_delay(0.5, region)
    assert rep.hartman_limit == 2.0
    assert rep.tau_phi == pytest.approx(2.0, rel=1e-3)
    assert rep.tau_phi == pytest.approx(phase_derivative(0.5, "barrier", 1.0, 10.0), rel=1e-8)
    assert rep.constituent_delays is None


def test_hartman_limit_general():
    region = ScatterRegion(Kind.BARRIER, 3.0, 1.0, mu=2.0, hbar=0.5)
    k0 = math.sqrt(2 * 2.0 * 0.5 * 1.0) / 0.5
    kappa0 = math.sqrt(2 * 2.0 * (3.0 - 0.5)) / 0.5
    assert hartman_limit(1.0, region) == pytest.approx(2 * 2.0 / (0.5 * k0 * kappa0), rel=1e-14)
    assert hartman_limit(10.0, region) is None


def test_group_delay_step_consistency():
    a = group_delay(0.01, well, step=1e-6)
    b = group_delay(0.01, well, step=5e-7)
    assert abs(a.tau_phi - b.tau_phi) <= max(4 / 3 * a.richardson_rel * abs(a.tau_phi), 1e-9)


def test_group_delay_flags_coarse_step():
    rep = group_delay(0.01, well, step=0.009)
    assert "richardson-disagreement" in rep.quality_flags


def test_group_delay_symmetric_point_finite_positive():
    rep = group_delay(0.5, sym_barrier)
    assert math.isfinite(rep.tau_phi) and rep.tau_phi > 0


def test_log_derivative_definition():
    rep = group_delay(0.01, well)
    h = 1e-7
    t = transmission_closed(np.array([0.01 - h, 0.01 + h]), well)
    ld = (np.log(t[1] / t[0])) / (2 * h)
    assert rep.log_derivative == pytest.approx(ld, rel=1e-6)
