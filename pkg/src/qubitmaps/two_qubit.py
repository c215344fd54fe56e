"""Parity-symmetric two-qubit Hamiltonian family.

H = w_S Z(x)1 + w_E 1(x)Z + k_SE Y(x)X + k_ES X(x)Y splits into an even block
on {|00>, |11>} and an odd block on {|01>, |10>}. Each block is a rotation
generator ``w (cos phi sigma_z + sin phi sigma_y)`` so the propagator is known
in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import X, Y, Z, I2
from .kernels import propagator_functions

DEGENERACY_RTOL = 1e-9
PE_TOL = 1e-9


@dataclass(frozen=True)
class TwoQubitParams:
    omega_s: float
    omega_e: float
    kappa_se: float
    kappa_es: float

    def hamiltonian(self):
        return (self.omega_s * np.kron(Z, I2) + self.omega_e * np.kron(I2, Z)
                + self.kappa_se * np.kron(Y, X) + self.kappa_es * np.kron(X, Y))


def _angle(delta, kappa):
    """Mixing angle in (-pi/2, pi/2] plus orientation sign.

    The orientation is -1 when the block's free part is negative (or zero with
    negative coupling); the block generator is then ``-w(cos phi Z + sin phi Y)``.
    """
    if delta > 0:
        return math.atan(kappa / delta), 1
    if delta < 0:
        return math.atan(kappa / delta), -1
    if kappa > 0:
        return math.pi / 2, 1
    if kappa < 0:
        return math.pi / 2, -1
    return 0.0, 1


@dataclass(frozen=True)
class BlockParams:
    """Block quantities (Delta, kappa) of the even (+) and odd (-) sectors."""

    delta_p: float
    delta_m: float
    kappa_p: float
    kappa_m: float
    phi_p: float = field(init=False)
    phi_m: float = field(init=False)
    omega_p: float = field(init=False)
    omega_m: float = field(init=False)
    orient_p: int = field(init=False)
    orient_m: int = field(init=False)

    def __post_init__(self):
        for name in ("delta_p", "delta_m", "kappa_p", "kappa_m"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        phi_p, o_p = _angle(self.delta_p, self.kappa_p)
        phi_m, o_m = _angle(self.delta_m, self.kappa_m)
        object.__setattr__(self, "phi_p", phi_p)
        object.__setattr__(self, "phi_m", phi_m)
        object.__setattr__(self, "orient_p", o_p)
        object.__setattr__(self, "orient_m", o_m)
        object.__setattr__(self, "omega_p", 2 * math.hypot(self.delta_p, self.kappa_p))
        object.__setattr__(self, "omega_m", 2 * math.hypot(self.delta_m, self.kappa_m))

    @classmethod
    def from_angles(cls, omega_p, phi_p, omega_m=None, phi_m=None):
        """Build from eigenfrequencies and mixing angles (figure-caption style)."""
        omega_m = omega_p if omega_m is None else omega_m
        phi_m = phi_p if phi_m is None else phi_m
        return cls(0.5 * omega_p * math.cos(phi_p), 0.5 * omega_m * math.cos(phi_m),
                   0.5 * omega_p * math.sin(phi_p), 0.5 * omega_m * math.sin(phi_m))

    @classmethod
    def from_tan(cls, omega, tan_phi, omega_m=None, tan_phi_m=None):
        """Convenience for captions that quote ``omega`` and ``tan phi``."""
        tan_phi_m = tan_phi if tan_phi_m is None else tan_phi_m
        return cls.from_angles(omega, math.atan(tan_phi), omega_m, math.atan(tan_phi_m))

    @property
    def params(self):
        return derive_raw_params(self)

    def signed_trig(self):
        """(c+, s+, c-, s-): orientation-signed cos/sin of the mixing angles."""
        return (self.orient_p * math.cos(self.phi_p), self.orient_p * math.sin(self.phi_p),
                self.orient_m * math.cos(self.phi_m), self.orient_m * math.sin(self.phi_m))

    @property
    def coupling_strength(self):
        return math.sin(self.phi_p) ** 2 + math.sin(self.phi_m) ** 2

    @property
    def degenerate(self):
        scale = max(abs(self.omega_p), abs(self.omega_m), 1e-300)
        return abs(self.omega_p - self.omega_m) <= DEGENERACY_RTOL * scale

    def hamiltonian(self):
        return derive_raw_params(self).hamiltonian()


def derive_block_params(p: TwoQubitParams) -> BlockParams:
    return BlockParams(0.5 * (p.omega_s + p.omega_e), 0.5 * (p.omega_s - p.omega_e),
                       0.5 * (p.kappa_se + p.kappa_es), 0.5 * (p.kappa_se - p.kappa_es))


def derive_raw_params(b: BlockParams) -> TwoQubitParams:
    return TwoQubitParams(b.delta_p + b.delta_m, b.delta_p - b.delta_m,
                          b.kappa_p + b.kappa_m, b.kappa_p - b.kappa_m)


def block_functions(b: BlockParams, t):
    """alpha_+, alpha_-, beta_+, beta_- at time(s) ``t``."""
    cp, sp, cm, sm = b.signed_trig()
    ap, bp, _, _ = propagator_functions(t, b.omega_p, cp, sp)
    am, bm, _, _ = propagator_functions(t, b.omega_m, cm, sm)
    return ap, am, bp, bm


def propagator(b: BlockParams, t):
    """Closed-form U(t) = exp(-iHt) in the computational basis |SE>."""
    ap, am, bp, bm = block_functions(b, float(t))
    U = np.zeros((4, 4), dtype=complex)
    U[0, 0], U[0, 3], U[3, 0], U[3, 3] = ap, -bp, bp, np.conj(ap)
    U[1, 1], U[1, 2], U[2, 1], U[2, 2] = am, -bm, bm, np.conj(am)
    return U


def eigensystem(b: BlockParams):
    """Stationary states |0+>, |1+>, |0->, |1-> with their energies.

    Returns a list of (energy, state) pairs. With orientation -1 the block's
    energies are swapped in sign relative to the usual +/- omega labelling.
    """
    out = []
    for phi, omega, orient, (lo, hi) in ((b.phi_p, b.omega_p, b.orient_p, (0, 3)),
                                         (b.phi_m, b.omega_m, b.orient_m, (1, 2))):
        v0 = np.zeros(4, dtype=complex)
        v1 = np.zeros(4, dtype=complex)
        v0[lo], v0[hi] = math.cos(phi / 2), 1j * math.sin(phi / 2)
        v1[lo], v1[hi] = math.sin(phi / 2), -1j * math.cos(phi / 2)
        out.append((orient * omega, v0))
        out.append((-orient * omega, v1))
    return out


@dataclass(frozen=True)
class ABFrame:
    omega_a: float
    omega_b: float
    basis_change: np.ndarray = field(repr=False)

    @property
    def degenerate(self):
        return abs(self.omega_b) <= DEGENERACY_RTOL * max(abs(self.omega_a), 1e-300)

    def hamiltonian(self):
        return self.omega_a * np.kron(Z, I2) + self.omega_b * np.kron(I2, Z)


def to_ab_frame(b: BlockParams) -> ABFrame:
    """Change of tensor factorization in which H decouples into two free qubits.

    ``basis_change`` W satisfies W H W^dagger = omega_A Z_A + omega_B Z_B.
    """
    (e0p, v0p), (e1p, v1p), (e0m, v0m), (e1m, v1m) = eigensystem(b)
    # the state with positive energy goes to |0_A 0_B> (even) or |0_A 1_B> (odd)
    plus_hi, plus_lo = (v0p, v1p) if e0p >= e1p else (v1p, v0p)
    minus_hi, minus_lo = (v0m, v1m) if e0m >= e1m else (v1m, v0m)
    W = np.zeros((4, 4), dtype=complex)
    W[0] = plus_hi.conj()
    W[3] = plus_lo.conj()
    W[1] = minus_hi.conj()
    W[2] = minus_lo.conj()
    return ABFrame(0.5 * (b.omega_p + b.omega_m), 0.5 * (b.omega_p - b.omega_m), W)


# Bell-basis change used for local invariants
BELL_Q = np.array([[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]],
                  dtype=complex) / math.sqrt(2)


def makhlin_matrix(U):
    """m(U) = (Q^dag U Q)^T (Q^dag U Q)."""
    UB = BELL_Q.conj().T @ U @ BELL_Q
    return UB.T @ UB


def local_invariant_eigenvalues(b: BlockParams, t):
    """Closed-form eigenvalues u+, u-, v+, v- of m(U(t)).

    Each block contributes a unimodular pair A +/- i sqrt(1 - A^2) with
    A = cos^2(w t) + cos(2 phi) sin^2(w t) = |alpha|^2 - beta^2.
    """
    vals = []
    for omega, phi in ((b.omega_p, b.phi_p), (b.omega_m, b.phi_m)):
        s2 = math.sin(omega * t) ** 2
        a = (1 - s2) + math.cos(2 * phi) * s2
        im = math.sqrt(max(0.0, 1 - a * a))
        vals += [complex(a, im), complex(a, -im)]
    return np.array(vals)


def hull_contains_zero(eigs, tol=1e-12):
    """Zero lies in the convex hull of conjugate-pair eigenvalues iff their
    real parts straddle zero."""
    re = np.real(eigs)
    return bool(re.min() <= tol and re.max() >= -tol)


@dataclass(frozen=True)
class EntanglementReport:
    is_perfect_entangler: bool
    max_beta_sq: float
    witness_time: Optional[float]
    witness_eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)


def perfect_entangler_label(phi_p, phi_m, tol=PE_TOL):
    return max(abs(phi_p), abs(phi_m)) >= math.pi / 4 - tol


def makhlin_analysis(b: BlockParams, t_max: float) -> EntanglementReport:
    """Decide whether U(t) is (periodically) a perfect entangler.

    The convex-hull condition first holds when the larger of beta_+^2,
    beta_-^2 reaches 1/2; that instant is returned as a witness when it lies
    in ``[0, t_max]``.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    is_pe = perfect_entangler_label(b.phi_p, b.phi_m)
    max_beta_sq = max(math.sin(b.phi_p) ** 2 if b.omega_p > 0 else 0.0,
                      math.sin(b.phi_m) ** 2 if b.omega_m > 0 else 0.0)
    witness = None
    eigs = None
    if is_pe:
        times = []
        for omega, phi in ((b.omega_p, b.phi_p), (b.omega_m, b.phi_m)):
            s2 = math.sin(phi) ** 2
            if omega > 0 and s2 >= 0.5 - PE_TOL:
                times.append(math.asin(min(1.0, math.sqrt(0.5 / s2))) / omega)
        if times and min(times) <= t_max:
            witness = min(times)
            eigs = local_invariant_eigenvalues(b, witness)
    return EntanglementReport(is_pe, max_beta_sq, witness, eigs)


# -- numerical perfect-entangler search (independent of the closed form) ------

YY = np.kron(Y, Y)


def _product_states(angles):
    """Product states |a>|b> from Bloch angles, shape (n, 4)."""
    th_a, ph_a, th_b, ph_b = np.moveaxis(np.atleast_2d(angles), -1, 0)
    a = np.stack([np.cos(th_a / 2), np.exp(1j * ph_a) * np.sin(th_a / 2)], axis=-1)
    bb = np.stack([np.cos(th_b / 2), np.exp(1j * ph_b) * np.sin(th_b / 2)], axis=-1)
    return (a[:, :, None] * bb[:, None, :]).reshape(-1, 4)


def concurrence(psi):
    """Wootters concurrence of a normalized two-qubit pure state."""
    psi = np.asarray(psi, dtype=complex)
    return float(abs(psi @ YY @ psi))


def _g_matrix(U):
    return U.T @ YY @ U


def _top_takagi(M):
    """Unit x maximizing |x^T M x| for stacked complex symmetric 2x2 M."""
    u, s, _ = np.linalg.svd(M)
    # for symmetric M = V S V^T the SVD's left vector is V's column up to phase
    return np.conj(u[..., :, 0]), s[..., 0]


def alternating_product_max(G, a, bvec, iters=30):
    """Alternating maximization of |(a(x)b)^T G (a(x)b)| over unit a, b.

    ``G`` has shape (n, 4, 4); ``a``, ``bvec`` shape (n, 2). Each half step is
    solved exactly by the top singular pair of a 2x2 symmetric matrix.
    """
    G4 = G.reshape(-1, 2, 2, 2, 2)
    val = np.zeros(G4.shape[0])
    for _ in range(iters):
        a, _ = _top_takagi(np.einsum("nijkl,nj,nl->nik", G4, bvec, bvec))
        bvec, new = _top_takagi(np.einsum("nijkl,ni,nk->njl", G4, a, a))
        if np.max(np.abs(new - val)) < 1e-15:
            val = new
            break
        val = new
    return val, a, bvec


def max_concurrence_search(b: BlockParams, n_states=1000, n_times=128, t_max=None,
                           rng=None):
    """Numerical maximum of the concurrence of U(t)|a>|b> over product states and t.

    Random product states are screened on a time grid (compiled kernel), the
    best state at every grid time is polished by alternating maximization, and
    the time of the best peak is refined by bounded scalar minimization.
    Returns (max concurrence, time).
    """
    from scipy.optimize import minimize_scalar

    from .kernels import max_product_concurrence

    rng = np.random.default_rng(0) if rng is None else rng
    omegas = [w for w in (b.omega_p, b.omega_m) if w > 0]
    if not omegas:
        return 0.0, 0.0
    if t_max is None:
        t_max = math.pi / min(omegas)
    angles = np.column_stack([np.arccos(rng.uniform(-1, 1, n_states)),
                              rng.uniform(0, 2 * math.pi, n_states),
                              np.arccos(rng.uniform(-1, 1, n_states)),
                              rng.uniform(0, 2 * math.pi, n_states)])
    states = _product_states(angles)
    ts = np.linspace(0, t_max, n_times)
    G = np.array([_g_matrix(propagator(b, t)) for t in ts])
    _, idx = max_product_concurrence(G, states)
    # rank-one split of each winning product state
    u, _, vh = np.linalg.svd(states[idx].reshape(-1, 2, 2))
    val, a_opt, b_opt = alternating_product_max(G, u[:, :, 0], vh[:, 0, :])
    j = int(np.argmax(val))
    top_val, top_t = float(val[j]), float(ts[j])
    a0, b0 = a_opt[j:j + 1], b_opt[j:j + 1]

    def neg(t):
        return -alternating_product_max(_g_matrix(propagator(b, t))[None], a0, b0)[0][0]

    dt = ts[1] - ts[0]
    res = minimize_scalar(neg, bounds=(max(0.0, ts[j] - dt), min(t_max, ts[j] + dt)),
                          method="bounded", options={"xatol": 1e-12})
    if -res.fun > top_val:
        top_val, top_t = float(-res.fun), float(res.x)
    return top_val, top_t
