"""Dense qubit linear algebra: Paulis, Bloch vectors, affine maps, Choi/Kraus.

Conventions used throughout the package:

* the system qubit is always the leftmost tensor factor;
* Pauli-basis index order is (1, x, y, z);
* a qubit map is stored as a real 4x4 matrix ``L`` with
  ``L[a, b] = tr[sigma_a Lambda(sigma_b)] / 2`` so that the first row is
  ``(1, 0, 0, 0)``, the lower-right 3x3 block is ``T`` and the lower-left
  column is the shift ``d``.
"""
from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

# parity under conjugation by Z: pi_0 = pi_z = 0, pi_x = pi_y = 1
PARITY = (0, 1, 1, 0)

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
RANK_TOL = 1e-10


class QuantumCoreError(ValueError):
    """Raised on malformed input to the linear-algebra layer."""


def _square(m, allowed=(2, 4, 8)):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in allowed:
        raise QuantumCoreError(f"expected square matrix of size in {allowed}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise QuantumCoreError("matrix has non-finite entries")
    return m


def tensor(*factors):
    """Kronecker product, leftmost factor is the system qubit."""
    if not factors:
        raise QuantumCoreError("tensor needs at least one factor")
    out = _square(factors[0])
    for f in factors[1:]:
        f = _square(f)
        if out.shape[0] * f.shape[0] > 8:
            raise QuantumCoreError("tensor product larger than three qubits")
        out = np.kron(out, f)
    return out


def pauli_string(*labels):
    """Tensor product of Paulis given as indices 0..3 or letters '0xyz'."""
    lookup = {"0": 0, "i": 0, "x": 1, "y": 2, "z": 3}
    idx = [lookup[str(lab).lower()] if isinstance(lab, str) else int(lab) for lab in labels]
    return tensor(*(PAULIS[i] for i in idx))


def is_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h)
    return bool(np.max(np.abs(h - h.conj().T)) <= tol)


def expm_hermitian(h, t):
    """Return ``exp(-i h t)`` for Hermitian ``h`` via eigendecomposition."""
    h = _square(h)
    if not is_hermitian(h):
        raise QuantumCoreError("expm_hermitian requires a Hermitian generator")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def partial_trace_env(m):
    """Trace out everything but the leftmost (system) qubit."""
    m = _square(m, allowed=(4, 8))
    n_env = m.shape[0] // 2
    return np.trace(m.reshape(2, n_env, 2, n_env), axis1=1, axis2=3)


def bloch_to_density(r, check=True):
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise QuantumCoreError("Bloch vector must have three components")
    if check and np.linalg.norm(r) > 1 + 1e-12:
        raise QuantumCoreError(f"unphysical Bloch vector, |r| = {np.linalg.norm(r):.6g}")
    return 0.5 * (I2 + r[0] * X + r[1] * Y + r[2] * Z)


def density_to_bloch(rho):
    rho = _square(rho, allowed=(2,))
    return np.array([np.trace(rho @ p).real for p in PAULIS[1:]])


def pauli_coefficients(m):
    """Coefficients c_a with m = sum_a c_a sigma_a (complex in general)."""
    m = np.asarray(m, dtype=complex)
    return np.array([0.5 * np.trace(p @ m) for p in PAULIS])


def affine_matrix(T, d):
    """Assemble the 4x4 affine representation from (T, d)."""
    L = np.zeros((4, 4))
    L[0, 0] = 1.0
    L[1:, 0] = np.asarray(d, dtype=float)
    L[1:, 1:] = np.asarray(T, dtype=float)
    return L


def apply_affine(L, m):
    """Apply the map with 4x4 representation ``L`` to an arbitrary 2x2 operator."""
    c = np.asarray(L) @ pauli_coefficients(m)
    return sum(ci * p for ci, p in zip(c, PAULIS))


def map_from_channel(channel):
    """4x4 affine matrix of a linear map given as a callable on 2x2 operators."""
    L = np.zeros((4, 4))
    for b, pb in enumerate(PAULIS):
        out = channel(pb)
        for a, pa in enumerate(PAULIS):
            L[a, b] = 0.5 * np.trace(pa @ out).real
    return L


def oracle_map(U, env_state):
    """Reduced map obtained by brute force from a joint unitary.

    ``U`` acts on system (leftmost) times environment; ``env_state`` is the
    environment density matrix. The map is probed on the four Pauli inputs.
    """
    U = _square(U, allowed=(4, 8))
    env_state = np.asarray(env_state, dtype=complex)
    if env_state.shape[0] * 2 != U.shape[0]:
        raise QuantumCoreError("environment state does not match unitary dimension")
    Ud = U.conj().T

    def channel(op):
        return partial_trace_env(U @ np.kron(op, env_state) @ Ud)

    return map_from_channel(channel)


def choi_of_map(T, d=None):
    """Choi matrix ``sum_ij E_ij (x) Lambda(E_ij)`` of an affine qubit map.

    Accepts either ``(T, d)`` or a single 4x4 affine matrix.
    """
    L = np.asarray(T, dtype=float) if d is None else affine_matrix(T, d)
    if L.shape != (4, 4):
        raise QuantumCoreError("choi_of_map expects a 4x4 affine matrix or (T, d)")
    C = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[i, j] = 1.0
            C += np.kron(E, apply_affine(L, E))
    return C


def choi_min_eigenvalue(L):
    return float(np.linalg.eigvalsh(choi_of_map(L))[0])


def is_cp(L, tol=PSD_TOL):
    return choi_min_eigenvalue(L) >= -tol


def kraus_decompose(C, tol=RANK_TOL):
    """Minimal Kraus operators from a PSD Choi matrix (convention of choi_of_map)."""
    C = np.asarray(C, dtype=complex)
    C = 0.5 * (C + C.conj().T)
    w, v = np.linalg.eigh(C)
    if w[0] < -PSD_TOL:
        raise QuantumCoreError(f"Choi matrix is not PSD (min eigenvalue {w[0]:.3g})")
    ops = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam <= tol:
            continue
        ops.append(np.sqrt(lam) * vec.reshape(2, 2).T)
    return ops


def apply_kraus(ops, rho):
    return sum(K @ rho @ K.conj().T for K in ops)


def random_bloch(rng, size=None, inside=True):
    """Uniform points in the Bloch ball (or on the sphere when ``inside=False``)."""
    n = 1 if size is None else size
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    if inside:
        v *= rng.uniform(size=(n, 1)) ** (1 / 3)
    return v[0] if size is None else v
