import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qubitmaps import core
from qubitmaps import dynamical_map as dm
from qubitmaps.presets import FAMILIES
from qubitmaps.two_qubit import BlockParams, TwoQubitParams, derive_block_params

import oracles

coef = st.floats(-3, 3, allow_nan=False)
times = st.floats(0, 20, allow_nan=False)
unit = st.floats(-0.57, 0.57, allow_nan=False)  # inside the ball for any three


@given(coef, coef, coef, coef, unit, unit, unit, times)
def test_map_matches_oracle(a, b_, c, d, x, y, z, t):
    b = derive_block_params(TwoQubitParams(a, b_, c, d))
    L = dm.map_at(b, [x, y, z], t).L
    assert np.abs(L - oracles.oracle_map_2q(b, [x, y, z], t)).max() < 1e-10


def test_map_examples():
    b = BlockParams.from_tan(math.sqrt(5), 4.0)
    assert np.allclose(dm.map_at(b, np.zeros(3), 0.0).L, np.eye(4))
    assert np.abs(dm.map_at(b, np.zeros(3), 0.5).L - oracles.oracle_map_2q(b, np.zeros(3), 0.5)).max() < 1e-10
    # uncoupled: rotation about z by 2 omega_S t
    free = derive_block_params(TwoQubitParams(1.3, 0.4, 0, 0))
    for t in (0.3, 1.7):
        s = dm.map_at(free, [0.1, 0.2, 0.3], t)
        c, sn = math.cos(2.6 * t), math.sin(2.6 * t)
        assert np.allclose(s.T, [[c, -sn, 0], [sn, c, 0], [0, 0, 1]], atol=1e-12)
        assert math.isclose(s.det, 1.0, abs_tol=1e-12)


def test_map_rejects_unphysical_env():
    with pytest.raises(ValueError):
        dm.map_at(BlockParams.from_angles(1, 0.3), [1, 1, 0], 0.2)


@given(coef, coef, coef, coef, times)
def test_partial_components(a, b_, c, d, t):
    b = derive_block_params(TwoQubitParams(a, b_, c, d))
    pc = dm.partial_components(b, t)
    po = dm.partial_components_oracle(b, t)
    assert np.abs(pc.P - po.P).max() < 1e-10
    assert abs(pc[3, 3, 3]) < 1e-12
    assert abs(pc[1, 0, 1]) < 1e-12
    parity = (0, 1, 1, 0)
    for i in range(4):
        for j in range(4):
            for k in range(4):
                if (parity[i] + parity[j] + parity[k]) % 2:
                    assert abs(pc.P[i, j, k]) < 1e-12


@given(coef, coef, coef, coef, unit, unit, unit, times)
def test_partial_reassembly(a, b_, c, d, x, y, z, t):
    b = derive_block_params(TwoQubitParams(a, b_, c, d))
    r = np.array([x, y, z])
    assert np.abs(dm.partial_components(b, t).assemble(r) - dm.map_at(b, r, t).L).max() < 1e-12


@given(coef, coef, coef, coef, unit, unit, unit)
def test_determinant_identity(a, b_, c, d, x, y, z):
    b = derive_block_params(TwoQubitParams(a, b_, c, d))
    _, det, tz2 = dm.determinant_profile(b, [x, y, z], np.linspace(0, 10, 101))
    assert np.abs(det - tz2).max() < 1e-12
    assert det.min() >= -1e-12


def test_determinant_examples():
    b = BlockParams.from_tan(math.sqrt(17) / 4, 0.5)
    _, det, _ = dm.determinant_profile(b, np.zeros(3), np.linspace(0, 2 * math.pi / b.omega_p, 4001))
    assert abs(det.min() - 0.36) < 1e-6
    b = BlockParams.from_tan(math.sqrt(5), 4.0)
    roots, _ = dm.find_singular_times(b, np.zeros(3), 1.0)
    assert abs(roots[0] - math.asin(math.sqrt(17 / 32)) / math.sqrt(5)) < 1e-9
    free = derive_block_params(TwoQubitParams(1.0, 0.3, 0, 0))
    _, det, _ = dm.determinant_profile(free, [0.2, 0.1, 0.5], np.linspace(0, 9, 50))
    assert np.allclose(det, 1.0)


def test_invertibility_weak_and_boundary():
    rep = dm.invertibility_analysis(BlockParams.from_tan(1.0, 0.5), np.zeros(3), 20)
    assert rep.coupling_regime == "weak" and rep.invertible
    b = BlockParams.from_angles(3.0, math.pi / 4, 1.0, math.pi / 4)
    rep = dm.invertibility_analysis(b, np.zeros(3), 10)
    assert rep.coupling_regime == "boundary"
    k, l, nu = rep.commensurate_odd_ratio
    assert (k, l) == (1, 0) and math.isclose(nu, 1.0)
    expect = [(2 * n + 1) * math.pi / (2 * nu) for n in range(4) if (2 * n + 1) * math.pi / (2 * nu) <= 10]
    assert np.allclose(rep.non_invertible_times, expect, atol=1e-9)


def test_phase_damping_kernel_direction():
    b = BlockParams.from_tan(math.sqrt(5), 4.0)
    rep = dm.invertibility_analysis(b, np.zeros(3), 3.0)
    assert len(rep.non_invertible_times) >= 3
    for eta in rep.eta:
        assert abs(abs(eta[1]) - 1) < 1e-9
    assert np.allclose(rep.escape_direction, [1, 0, 0], atol=1e-9)
    shifted = rep.recommended_shift(np.zeros(3), 0.1)
    _, det, _ = dm.determinant_profile(b, shifted, np.linspace(0, 3, 3001))
    assert det.min() > 1e-3
    # moving along eta keeps the singularity
    _, det, _ = dm.determinant_profile(b, [0, 0.3, 0], np.linspace(0, 3, 30001))
    assert det.min() < 1e-6


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_family_presets(name):
    p = FAMILIES[name]
    lab = dm.classify(p.block, np.array(p.r_E))
    assert lab.family.value == name
    s = dm.map_at(p.block, p.r_E, 0.77)
    unital, d = dm.unitality_check(s)
    assert unital == lab.unital
    rank = len(core.kraus_decompose(core.choi_of_map(s.L)))
    if name in ("M+", "M-"):
        assert rank == 1 and lab.markovian
    if name in ("D+", "D-"):
        assert rank == 2


@pytest.mark.parametrize("name", ["A+∩N", "A+∩D", "A-∩N", "A-∩D"])
def test_amplitude_damping_relations(name):
    p = FAMILIES[name]
    z_E = p.r_E[2]
    for t in np.linspace(0.1, 6, 25):
        s = dm.map_at(p.block, p.r_E, t)
        lx, ly = np.linalg.svd(s.T[:2, :2], compute_uv=False)
        lz = s.T[2, 2]
        assert abs(lx - ly) < 1e-12 and abs(abs(lz) - lx * lx) < 1e-12
        assert np.allclose(s.T[:2, 2], 0) and np.allclose(s.T[2, :2], 0)
        if name.startswith("A+"):
            assert abs(s.d[2] - z_E * (1 - lz)) < 1e-12
        else:
            assert abs(s.d[2] + z_E * (1 - lz)) < 1e-12


def test_unitality_examples():
    b = BlockParams.from_angles(1.0, 0.4, 1.3, 0.9)
    assert dm.unitality_check(dm.map_at(b, [0.3, 0.4, 0.0], 1.1))[0]
    dplus = BlockParams.from_angles(1.0, 0.5)
    assert dm.unitality_check(dm.map_at(dplus, [0.1, 0.2, 0.7], 1.1))[0]
    amp = FAMILIES["A+∩D"].block
    s = dm.map_at(amp, [0, 0, 1.0], 0.6)
    assert abs(s.d[2] - (1 - s.T[2, 2])) < 1e-12


def test_snapshot_json():
    s = dm.map_at(BlockParams.from_angles(1.0, 0.5), [0.1, 0, 0], 0.4)
    txt = s.to_json("D+", True)
    assert '"family": "D+"' in txt
