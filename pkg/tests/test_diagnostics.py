import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import sqrtm

from qubitmaps import core
from qubitmaps import diagnostics as dg
from qubitmaps import dynamical_map as dm
from qubitmaps.presets import FAMILIES, FIGURES
from qubitmaps.two_qubit import BlockParams, TwoQubitParams, derive_block_params

import oracles

comp = st.floats(-0.57, 0.57, allow_nan=False)
vec = st.tuples(comp, comp, comp)


@given(vec, vec)
def test_trace_distance_and_fidelity_formulas(r1, r2):
    rho, sig = oracles.density(r1), oracles.density(r2)
    D = 0.5 * np.abs(np.linalg.eigvalsh(rho - sig)).sum()
    s = sqrtm(rho)
    F = np.trace(sqrtm(s @ sig @ s)).real ** 2
    assert abs(dg.trace_distance(r1, r2) - D) < 1e-12
    assert abs(dg.fidelity(r1, r2) - F) < 1e-7


def test_identical_states():
    b = BlockParams.from_tan(1.0, 2.0)
    ws = dg.witness_series(b, np.zeros(3), [0.3, 0.2, 0.1], [0.3, 0.2, 0.1], np.linspace(0, 5, 50))
    assert np.allclose(ws.D, 0) and np.allclose(ws.F, 1)
    assert ws.backflow == []


def test_fig2_periodicity_and_backflow():
    fig = FIGURES["fig2"]
    ws = dg.witness_series(fig.block, fig.r_E, fig.r1, fig.r2, fig.t_grid)
    step = fig.t_grid[1] - fig.t_grid[0]
    expected = math.pi / fig.omega
    assert abs(ws.period("D") - expected) <= step
    assert abs(ws.period("F") - expected) <= step
    assert len(ws.backflow) > 0
    # memory time of order pi / (2 omega)
    assert 0.25 < ws.tau_nm / (math.pi / (2 * fig.omega)) < 4


def test_markovian_fidelity_plateau():
    p = FAMILIES["M+"]
    t = np.linspace(0, 10, 1001)
    ws = dg.witness_series(p.block, p.r_E, [1, 0, 0], [0, 1, 0], t)
    assert np.abs(ws.dF).max() < 1e-10
    assert ws.backflow == []
    assert ws.plateaus() == [(0, len(t) - 1)]


def test_autocorrelation_period_of_sine():
    t = np.linspace(0, 40, 4001)
    assert abs(dg.autocorrelation_period(t, np.sin(1.7 * t)) - 2 * math.pi / 1.7) < t[1] - t[0]


def test_witness_csv_columns():
    fig = FIGURES["fig2"]
    ws = dg.witness_series(fig.block, fig.r_E, fig.r1, fig.r2, fig.t_grid[:11])
    lines = ws.to_csv(fig.omega).splitlines()
    assert lines[0] == "chi,F,D" and len(lines) == 12


def test_interweave_basic():
    b = BlockParams.from_tan(1.0, 0.5)
    r = [0.2, 0.1, 0.3]
    phi = dg.interweave(b, r, 0.0, 1.3)
    assert np.allclose(phi.L, dm.map_at(b, r, 1.3).L)
    m = FAMILIES["M+"]
    for t1, t2 in [(0.2, 0.9), (1.1, 3.0), (0.5, 0.6)]:
        phi = dg.interweave(m.block, m.r_E, t1, t2)
        assert np.allclose(phi.T @ phi.T.T, np.eye(3), atol=1e-10)
        assert np.allclose(phi.d, 0, atol=1e-12)
        assert phi.is_cp()
    with pytest.raises(ValueError):
        dg.interweave(b, r, 1.0, 0.5)


def test_interweave_singular():
    b = BlockParams.from_tan(math.sqrt(5), 4.0)
    (t_star, *_), _ = dm.find_singular_times(b, np.zeros(3), 1.0)
    with pytest.raises(dg.SingularMapError):
        dg.interweave(b, np.zeros(3), t_star, 1.0)
    # Lambda(1.0) is invertible while Lambda(t*) is not, so no exact Phi
    # exists; the least-squares map reports how far off it is
    phi = dg.interweave(b, np.zeros(3), t_star, 1.0, allow_restricted=True)
    L1 = dm.map_at(b, np.zeros(3), t_star).L
    L2 = dm.map_at(b, np.zeros(3), 1.0).L
    assert phi.restricted_domain
    assert math.isclose(phi.residual, np.abs(phi.L @ L1 - L2).max())
    assert phi.residual > 1e-3


def test_unitary_dynamics_cp_divisible():
    free = derive_block_params(TwoQubitParams(1.0, 0.4, 0, 0))
    rep = dg.divisibility_report(free, [0.3, 0.1, 0.2], 3.0, n_scan=40)
    assert rep.p_divisible and rep.cp_divisible_up_to and rep.violating_intervals == []


def test_weak_phase_damping_fails_cp():
    b = BlockParams.from_tan(1.0, 0.5)
    rep = dg.divisibility_report(b, np.zeros(3), 2.5, n_scan=60)
    assert rep.p_divisible and rep.min_det > 0
    assert not rep.cp_divisible_up_to and rep.violating_intervals


def test_choi_scan_matches_independent_choi():
    b = FAMILIES["N"].block
    r = np.array([0.3, 0.4, 0.0])
    rep = dg.divisibility_report(b, r, 1.7, n_scan=30)
    taus = np.linspace(0, 1.7, 31)[1:-1]
    L2 = oracles.oracle_map_2q(b, r, 1.7)
    failing = [oracles.choi_min_eig(L2 @ np.linalg.inv(oracles.oracle_map_2q(b, r, t))) < -1e-10
               for t in taus]
    assert rep.cp_divisible_up_to == (not any(failing))
    # unital, full Kraus rank and invertible: divisible in the channel sense
    assert rep.unital and rep.kraus_rank == 4 and rep.channel_divisible


def test_normal_form_matches_choi(rng):
    b = BlockParams.from_tan(math.sqrt(5) / 2, 2.0)
    tau2 = 0.4 * math.pi / b.omega_p
    for t1 in rng.uniform(0, tau2, 100):
        out = dg.appendix_b_inequality(b, t1, tau2)
        L1 = oracles.oracle_map_2q(b, np.zeros(3), t1)
        L2 = oracles.oracle_map_2q(b, np.zeros(3), tau2)
        choi_ok = oracles.choi_min_eig(L2 @ np.linalg.inv(L1)) >= -1e-10
        assert out["normal_form_cp"] == choi_ok


@given(st.lists(st.floats(-1, 1), min_size=9, max_size=9))
def test_normal_form_matches_choi_random_unital(entries):
    T = np.array(entries).reshape(3, 3)
    L = core.affine_matrix(T, np.zeros(3))
    choi_ok = oracles.choi_min_eig(L) >= -1e-9
    margin = abs(oracles.choi_min_eig(L))
    if margin > 1e-7:  # stay away from the boundary
        assert dg.unital_cp_normal_form(T) == choi_ok


def test_closed_form_branches():
    b = BlockParams.from_tan(math.sqrt(5) / 2, 2.0)
    out = dg.appendix_b_inequality(b, 0.7, 0.7)
    assert out["lhs"] == pytest.approx(0) and out["rhs"] == pytest.approx(0) and out["cp_ok"]
    w = b.omega_p
    for t1 in np.linspace(0.05, 1.3, 7):
        assert dg.appendix_b_inequality(b, t1, math.pi / (2 * w))["cp_ok"]
    with pytest.raises(ValueError):
        dg.appendix_b_inequality(FAMILIES["N"].block, 0.1, 0.5)


def test_closed_form_minus_branch_is_degenerate(rng):
    # the printed '-' branch holds with equality for every pair in D+, which is
    # why it cannot discriminate CP from non-CP interweaving maps
    b = BlockParams.from_tan(math.sqrt(5) / 2, 2.0)
    for t1, t2 in rng.uniform(0, 5, size=(50, 2)):
        out = dg.appendix_b_inequality(b, t1, t2)
        assert abs(out["lhs"] - out["rhs"]) < 1e-12


def test_report_dict_round_trip():
    rep = dg.divisibility_report(BlockParams.from_tan(1.0, 0.5), np.zeros(3), 1.0, n_scan=20)
    d = rep.to_dict()
    assert set(d) >= {"p_divisible", "cp_divisible_up_to", "violating_intervals", "appendix_b"}
