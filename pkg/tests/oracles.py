"""Independent reference computations for the tests.

These avoid the package's own linear-algebra helpers: the propagator comes
from scipy's Pade expm and the reduced map from an explicit index-level
partial trace.
"""
import numpy as np
from scipy.linalg import expm

SIGMA = [np.eye(2, dtype=complex),
         np.array([[0, 1], [1, 0]], dtype=complex),
         np.array([[0, -1j], [1j, 0]], dtype=complex),
         np.array([[1, 0], [0, -1]], dtype=complex)]


def hamiltonian_2q(ws, we, kse, kes):
    I, X, Y, Z = SIGMA
    return ws * np.kron(Z, I) + we * np.kron(I, Z) + kse * np.kron(Y, X) + kes * np.kron(X, Y)


def propagator(H, t):
    return expm(-1j * H * t)


def reduce_first(rho, dim_env):
    out = np.zeros((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            out[a, b] = sum(rho[a * dim_env + k, b * dim_env + k] for k in range(dim_env))
    return out


def density(r):
    return 0.5 * (SIGMA[0] + sum(ri * s for ri, s in zip(r, SIGMA[1:])))


def reduced_map(U, rho_env):
    dim_env = rho_env.shape[0]
    L = np.zeros((4, 4))
    for b in range(4):
        out = reduce_first(U @ np.kron(SIGMA[b], rho_env) @ U.conj().T, dim_env)
        for a in range(4):
            L[a, b] = 0.5 * np.trace(SIGMA[a] @ out).real
    return L


def block_params_to_raw(b):
    """(omega_S, omega_E, kappa_SE, kappa_ES) from block parameters."""
    return (b.delta_p + b.delta_m, b.delta_p - b.delta_m,
            b.kappa_p + b.kappa_m, b.kappa_p - b.kappa_m)


def oracle_map_2q(b, r_E, t):
    U = propagator(hamiltonian_2q(*block_params_to_raw(b)), t)
    return reduced_map(U, density(r_E))


def choi_min_eig(L):
    """Choi matrix via the Pauli-basis formula C = 1/2 sum_ab L_ab sigma_b^T (x) sigma_a."""
    C = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for b in range(4):
            C += 0.5 * L[a, b] * np.kron(SIGMA[b].T, SIGMA[a])
    return float(np.linalg.eigvalsh(0.5 * (C + C.conj().T))[0])


def _kron(*m):
    out = m[0]
    for x in m[1:]:
        out = np.kron(out, x)
    return out


def unitary_3q(omega, gamma, tau, t):
    """Switched three-qubit propagator, piecewise expm of the raw Hamiltonians."""
    I, X, Y, Z = SIGMA
    Hpre = omega * (_kron(Z, I, I) + _kron(I, Z, I)) + omega * (_kron(X, Y, I) - _kron(Y, X, I))
    if t < tau:
        return propagator(Hpre, t)
    Hpost = Hpre + gamma * _kron(X, I, X)
    return propagator(Hpost, t - tau) @ propagator(Hpre, tau)


def oracle_map_3q(p, t):
    env = np.kron(density([0, 0, p.z_E]), density(p.r_Ep))
    return reduced_map(unitary_3q(p.omega, p.gamma, p.tau, t), env)
