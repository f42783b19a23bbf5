import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from effdyn.effective import (
    EffectiveTable,
    build_effective_table,
    eval_effective,
    second_divided_differences,
    solve_tilt_for_mean,
    symmetry_error,
    table_columns,
    tilted_ground,
)
from effdyn.errors import DomainError, InvalidArgumentError, RangeError
from effdyn.spectral import PotentialSpec, make_grid

LAM6 = PotentialSpec.quartic(6.0)
HARM1 = PotentialSpec.harmonic(1.0)
GRID = make_grid(-8, 8, 4001)
HGRID = make_grid(-10, 10, 4001)


def test_shifted_oscillator():
    r = tilted_ground(HARM1, HGRID, 0.3)
    assert r.E0 == pytest.approx(0.455, abs=1e-4)
    assert r.x_mean == pytest.approx(0.3, abs=1e-4)
    assert r.veff == r.E0 + r.J * r.x_mean
    assert r.chi > 0 and r.chi3 > 0


def test_untilted_symmetric_mean_is_zero():
    assert abs(tilted_ground(LAM6, GRID, 0.0).x_mean) < 1e-10


def test_lam6_tilted_matches_oracle(oracle):
    ref = oracle["lam6_default"]["J0.25"]
    r = tilted_ground(LAM6, GRID, 0.25)
    assert r.E0 == pytest.approx(ref["E0"], abs=1e-10)
    assert r.x_mean == pytest.approx(ref["x_mean"], abs=1e-9)


def test_tilt_for_harmonic_target():
    r = solve_tilt_for_mean(HARM1, HGRID, 0.7)
    assert r.J == pytest.approx(0.7, abs=1e-6)
    assert abs(r.x_mean - 0.7) < 1e-8


def test_tilt_for_zero_target():
    r = solve_tilt_for_mean(LAM6, GRID, 0.0)
    assert abs(r.J) < 1e-10


def test_lam6_tilt_matches_bisection_oracle(oracle):
    ref = oracle["lam6_default"]["x0.7"]
    r = solve_tilt_for_mean(LAM6, GRID, 0.7)
    assert abs(r.x_mean - 0.7) < 1e-8
    assert r.J == pytest.approx(ref["J"], abs=1e-7)
    assert r.veff == pytest.approx(ref["veff"], abs=1e-9)
    assert 1.0 / r.chi == pytest.approx(ref["d2veff"], rel=1e-7)


def test_unreachable_target():
    with pytest.raises(RangeError):
        solve_tilt_for_mean(LAM6, GRID, 7.9)


def test_harmonic_table_is_gaussian_exact():
    tab = build_effective_table(HARM1, HGRID, -1.0, 1.0, 21)
    assert np.max(np.abs(tab.veff - (0.5 * tab.nodes**2 + 0.5))) < 1e-4
    assert np.max(np.abs(tab.zeff - 1.0)) < 1e-4
    assert eval_effective(tab, 0.5, "veff", 1) == pytest.approx(0.5, abs=1e-3)
    assert tab.provenance == "spectral"


@given(st.sampled_from([0.5, 1.0, 2.0]), st.floats(0.2, 1.0))
def test_gaussian_exactness(omega, half):
    tab = build_effective_table(PotentialSpec.harmonic(omega), HGRID, -half, half, 5)
    assert np.max(np.abs(tab.veff - (0.5 * omega**2 * tab.nodes**2 + 0.5 * omega))) < 1e-4
    assert np.max(np.abs(tab.zeff - 1.0)) < 1e-4


def test_lam6_table_invariants(lam6_table, oracle):
    tab = lam6_table
    assert np.min(second_divided_differences(tab)) >= -1e-8
    sv, sz = symmetry_error(tab)
    assert sv < 1e-6 and sz < 1e-6
    assert np.all(tab.zeff > 0)
    i = int(np.argmin(tab.veff))
    assert abs(tab.nodes[i]) <= tab.nodes[1] - tab.nodes[0]
    assert tab.veff[i] == pytest.approx(oracle["lam6_default"]["E0"], abs=1e-8)


def test_gap_identity(lam6_table, oracle):
    gap = oracle["lam6_fine"]["gap"]
    v2 = eval_effective(lam6_table, 0.0, "veff", 2)
    z = eval_effective(lam6_table, 0.0, "zeff", 0)
    assert z == pytest.approx(oracle["lam6_default"]["zeff0"], rel=1e-6)
    assert abs(math.sqrt(v2 / z) - gap) / gap < 0.05


def test_legendre_consistency(lam6_table):
    tab = lam6_table
    # interior nodes: interpolant slope and curvature against the stored J and 1/chi
    x = tab.nodes[1:-1:6]
    slope = eval_effective(tab, x, "veff", 1)
    curv = eval_effective(tab, x, "veff", 2)
    J = tab.dveff[1:-1:6]
    nz = np.abs(J) > 1e-12
    assert np.max(np.abs(slope[nz] - J[nz]) / np.abs(J[nz])) < 1e-5
    assert np.max(np.abs(curv * (1.0 / tab.d2veff[1:-1:6]) - 1.0)) < 1e-3
    # and against fresh tilt solves between nodes
    for J in (-0.3, 0.1, 0.45):
        r = tilted_ground(LAM6, GRID, J)
        assert eval_effective(tab, r.x_mean, "veff", 1) == pytest.approx(J, rel=1e-5)
        assert eval_effective(tab, r.x_mean, "veff", 2) * r.chi == pytest.approx(1.0, rel=1e-3)


def test_curvature_at_packet_centre(lam6_table, oracle):
    ref = oracle["lam6_default"]["x0.7"]
    v2 = eval_effective(lam6_table, 0.7, "veff", 2)
    assert v2 == pytest.approx(ref["d2veff"], rel=1e-3)
    assert math.sqrt(v2) == pytest.approx(ref["omega_w"], rel=1e-3)


def test_node_query_returns_stored_value(lam6_table):
    for i in (0, 17, 60, 120):
        assert eval_effective(lam6_table, lam6_table.nodes[i], "veff") == lam6_table.veff[i]
        assert eval_effective(lam6_table, lam6_table.nodes[i], "zeff") == lam6_table.zeff[i]


def test_no_extrapolation(lam6_table):
    with pytest.raises(DomainError):
        eval_effective(lam6_table, 1.3)
    with pytest.raises(DomainError):
        eval_effective(lam6_table, np.array([0.0, -1.21]), "zeff")
    with pytest.raises(InvalidArgumentError):
        eval_effective(lam6_table, 0.0, "weff")
    with pytest.raises(InvalidArgumentError):
        eval_effective(lam6_table, 0.0, "veff", 3)


def test_first_derivative_continuous(lam6_table):
    tab = lam6_table
    for x in tab.nodes[10:110:25]:
        left = eval_effective(tab, x - 1e-9, "veff", 1)
        right = eval_effective(tab, x + 1e-9, "veff", 1)
        assert abs(left - right) < 1e-7


def test_table_validation():
    x = np.linspace(-1, 1, 5)
    with pytest.raises(InvalidArgumentError):
        EffectiveTable(x[::-1], x**2, np.ones(5), "spectral")
    with pytest.raises(InvalidArgumentError):
        EffectiveTable(x, x**2, np.ones(4), "spectral")
    with pytest.raises(InvalidArgumentError):
        EffectiveTable(x, x**2, np.ones(5), "guess")
    tab = EffectiveTable(x, x**2, np.ones(5), "rgflow")
    with pytest.raises(ValueError):
        tab.veff[0] = 1.0


def test_table_columns(lam6_table):
    cols = table_columns(lam6_table)
    assert list(cols) == ["x", "veff", "zeff", "d2veff"]
    assert all(len(c) == 121 for c in cols.values())
