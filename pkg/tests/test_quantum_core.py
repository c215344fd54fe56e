import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from qubitmaps import core
from qubitmaps.core import I2, X, Z
from qubitmaps.two_qubit import BlockParams, propagator

import oracles

finite = st.floats(-3, 3, allow_nan=False)


def test_tensor_trivial_cases():
    assert np.allclose(core.tensor(I2, I2), np.eye(4))
    assert np.allclose(core.tensor(Z, Z), np.diag([1, -1, -1, 1]))
    XX = core.tensor(X, X)
    assert np.allclose(XX @ XX, np.eye(4))


def test_tensor_rejects_bad_input():
    with pytest.raises(core.QuantumCoreError):
        core.tensor(np.ones((3, 3)))
    with pytest.raises(core.QuantumCoreError):
        core.tensor(I2, I2, I2, I2)


def test_expm_trivial():
    assert np.allclose(core.expm_hermitian(np.zeros((2, 2)), 1.3), I2)
    assert np.allclose(core.expm_hermitian(Z, math.pi / 2),
                       np.diag([np.exp(-0.5j * math.pi), np.exp(0.5j * math.pi)]))


def test_expm_rejects_non_hermitian():
    with pytest.raises(core.QuantumCoreError):
        core.expm_hermitian(np.array([[0, 1], [0, 0]]), 1.0)


def test_expm_matches_analytic_propagator():
    # oracle direction: eigendecomposition exponential vs closed-form U(t)
    b = BlockParams.from_tan(math.sqrt(5) / 2, 2.0)
    H = b.hamiltonian()
    err = max(np.abs(core.expm_hermitian(H, t) - propagator(b, t)).max()
              for t in np.linspace(0, 20, 200))
    assert err < 1e-10


@given(st.lists(finite, min_size=16, max_size=16), st.floats(-5, 5))
def test_expm_agrees_with_pade(entries, t):
    A = np.array(entries).reshape(4, 4)
    H = A + A.T
    assert np.abs(core.expm_hermitian(H, t) - expm(-1j * H * t)).max() < 1e-9


def test_partial_trace_cases(rng):
    rs = core.bloch_to_density(core.random_bloch(rng))
    re = core.bloch_to_density(core.random_bloch(rng))
    assert np.allclose(core.partial_trace_env(np.kron(rs, re)), rs)
    # maximally entangled even-block eigenstate at phi = pi/2
    psi = np.array([1, 0, 0, 1j]) / math.sqrt(2)
    assert np.allclose(core.partial_trace_env(np.outer(psi, psi.conj())), 0.5 * I2)
    M = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    assert np.isclose(np.trace(core.partial_trace_env(M)), np.trace(M))


def test_bloch_round_trip(rng):
    assert np.allclose(core.bloch_to_density(np.zeros(3)), 0.5 * I2)
    assert np.allclose(core.bloch_to_density([0, 0, 1]), np.diag([1, 0]))
    for r in core.random_bloch(rng, 20):
        assert np.allclose(core.density_to_bloch(core.bloch_to_density(r)), r)
    with pytest.raises(core.QuantumCoreError):
        core.bloch_to_density([1, 1, 0])


def test_choi_identity_and_transpose():
    C = core.choi_of_map(np.eye(4))
    phi = np.array([1, 0, 0, 1])
    assert np.allclose(C, np.outer(phi, phi))
    assert np.linalg.eigvalsh(C)[0] > -1e-12
    assert core.choi_min_eigenvalue(core.affine_matrix(np.diag([1, 1, -1]), np.zeros(3))) < 0


def test_choi_psd_for_physical_maps(rng):
    for _ in range(20):
        raw = rng.normal(size=4)
        r = core.random_bloch(rng)
        L = oracles.reduced_map(expm(-1j * oracles.hamiltonian_2q(*raw) * rng.uniform(0, 5)),
                                oracles.density(r))
        assert core.choi_min_eigenvalue(L) >= -1e-10


def test_kraus_identity():
    ops = core.kraus_decompose(core.choi_of_map(np.eye(4)))
    assert len(ops) == 1
    assert np.allclose(ops[0] @ ops[0].conj().T, I2)


@pytest.mark.parametrize("x_E", [0.3, -0.6, 1.0])
def test_kraus_phase_damping_rank(x_E):
    # two Kraus operators inside the ball, one (unitary) at x_E = 1
    b = BlockParams.from_angles(1.0, 0.5)
    L = oracles.oracle_map_2q(b, [x_E, 0, 0], 0.9)
    ops = core.kraus_decompose(core.choi_of_map(L))
    assert len(ops) == (1 if x_E == 1.0 else 2)
    assert np.allclose(sum(K.conj().T @ K for K in ops), I2)
    rho = core.bloch_to_density([0.2, -0.3, 0.4])
    assert np.allclose(core.apply_kraus(ops, rho), core.apply_affine(L, rho))


def test_map_from_channel_round_trip(rng):
    L = np.eye(4)
    L[1:, 1:] = rng.normal(size=(3, 3))
    L[1:, 0] = rng.normal(size=3)
    assert np.allclose(core.map_from_channel(lambda m: core.apply_affine(L, m)), L)


@pytest.mark.parametrize("x_E", [0.3, -0.6])
def test_phase_damping_two_term_form(x_E, rng):
    # U is read off the unitary x_E = 1 channel; the general map is the
    # (1 +/- x_E)/2 mixture of U and Z U Z
    b = BlockParams.from_angles(1.0, 0.5)
    t = 0.9
    (U,) = core.kraus_decompose(core.choi_of_map(oracles.oracle_map_2q(b, [1, 0, 0], t)))
    L = oracles.oracle_map_2q(b, [x_E, 0, 0], t)
    V = Z @ U @ Z
    for r in core.random_bloch(rng, 5):
        rho = core.bloch_to_density(r)
        two_term = 0.5 * (1 + x_E) * U @ rho @ U.conj().T + 0.5 * (1 - x_E) * V @ rho @ V.conj().T
        assert np.allclose(two_term, core.apply_affine(L, rho), atol=1e-12)
