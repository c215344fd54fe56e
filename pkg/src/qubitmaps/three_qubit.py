"""System qubit with a phase-covariant environment E and a spectator E' that
couples at time tau through gamma X_S X_E'.

Before the switch the S-E pair is the two-qubit model with Delta+ = omega,
kappa- = -omega (energy conserving), so E' is inert. After the switch the
Hamiltonian commutes with Z Z Z and with O2 = Y 1 Y - Z X Y; in the joint
eigenbasis of both ('polarized' basis) it splits into four 2x2 rotation
generators with frequencies Omega+/- and angles psi+/-.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from . import core
from .core import I2, X, Y, Z
from .io import csv_text
from .two_qubit import BlockParams, TwoQubitParams, derive_block_params
from .two_qubit import propagator as propagator_2q

SQRT2 = math.sqrt(2)
CONTINUITY_TOL = 1e-10
SPECIAL_TAU_TOL = 1e-9


def _k(*ops):
    out = ops[0]
    for o in ops[1:]:
        out = np.kron(out, o)
    return out


ZZZ = _k(Z, Z, Z)
O2 = _k(Y, I2, Y) - _k(Z, X, Y)
XIX = _k(X, I2, X)
PZZ = _k(Z, Z, I2)


@dataclass(frozen=True)
class ThreeQubitParams:
    omega: float
    gamma: float
    tau: float
    z_E: float = 0.0
    r_Ep: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.omega, self.gamma, self.tau, self.z_E)):
            raise ValueError("parameters must be finite")
        if self.tau < 0:
            raise ValueError("switch time must be non-negative")
        if abs(self.z_E) > 1 + 1e-12:
            raise ValueError("|z_E| must not exceed 1")
        r = np.asarray(self.r_Ep, dtype=float)
        if r.shape != (3,) or np.linalg.norm(r) > 1 + 1e-12:
            raise ValueError("unphysical E' state")
        object.__setattr__(self, "r_Ep", tuple(float(v) for v in r))

    @property
    def env_state(self):
        """rho_E (x) rho_E' (the E qubit is diagonal in Z, as phase covariance needs)."""
        return np.kron(core.bloch_to_density(np.array([0.0, 0.0, self.z_E])),
                       core.bloch_to_density(np.array(self.r_Ep)))

    @property
    def closed_form_available(self):
        """Closed-form shifts hold for r_E' along x and omega > 0, gamma >= 0."""
        return (abs(self.r_Ep[1]) < 1e-15 and abs(self.r_Ep[2]) < 1e-15
                and self.omega > 0 and self.gamma >= 0)


def pre_block_params(omega) -> BlockParams:
    """Two-qubit block parameters of omega (Z1 + 1Z) + omega (XY - YX)."""
    return derive_block_params(TwoQubitParams(omega, omega, -omega, omega))


def hamiltonian_pre(omega):
    return (omega * (_k(Z, I2, I2) + _k(I2, Z, I2))
            + omega * (_k(X, Y, I2) - _k(Y, X, I2)))


def hamiltonian_post(omega, gamma):
    return hamiltonian_pre(omega) + gamma * XIX


# -- polarized basis -------------------------------------------------------------

def _fix_phase(v):
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def _pauli_vec(A):
    """Traceless Hermitian 2x2 -> real 3-vector of Pauli coefficients."""
    return np.array([0.5 * np.trace(A @ s).real for s in (X, Y, Z)])


def _su2_from_rotation(O):
    """U with U (v.sigma) U^dag = (O v).sigma."""
    qx, qy, qz, qw = Rotation.from_matrix(O).as_quat()
    return qw * I2 - 1j * (qx * X + qy * Y + qz * Z)


def _frame(u, v):
    u = u / np.linalg.norm(u)
    v = v - (v @ u) * u
    v = v / np.linalg.norm(v)
    return np.column_stack([u, v, np.cross(u, v)])


@dataclass(frozen=True)
class PolarizedBasis:
    """Columns of W span the four sectors in the order (+, +, -, -) by Omega label.

    ``signs`` gives the Omega label of each column pair; within each pair the
    post-switch Hamiltonian reads Omega (cos psi Z + sin psi Y).
    """
    W: np.ndarray = field(repr=False)
    signs: tuple


@lru_cache(maxsize=64)
def polarized_basis(omega: float, gamma: float) -> PolarizedBasis:
    # Hpre is linear in omega; use the unit-omega direction so tiny omega cannot underflow
    Hpre = (1.0 if omega >= 0 else -1.0) * hamiltonian_pre(1.0)
    # joint eigenbasis of ZZZ (+/-1) and O2 (+/-sqrt2): distinct eigenvalues of ZZZ + pi O2
    w, V = np.linalg.eigh(ZZZ + math.pi * O2)
    order = np.argsort(np.round(w, 9), kind="stable")
    w, V = w[order], V[:, order]
    sg = 1.0 if gamma >= 0 else -1.0
    cols, signs = [], []
    n_target = np.array([0.0, 1.0, 1.0]) / SQRT2
    for k in range(0, 8, 2):
        Vs = np.column_stack([_fix_phase(V[:, k]), _fix_phase(V[:, k + 1])])
        a = _pauli_vec(Vs.conj().T @ Hpre @ Vs)
        n = sg * _pauli_vec(Vs.conj().T @ XIX @ Vs)
        s = 1 if a @ n > 0 else -1
        a_target = np.array([0.0, s * 2.0, 0.0])
        O = _frame(n_target, a_target) @ _frame(n, a).T
        # R^dag (v.sigma) R = (O v).sigma
        R = _su2_from_rotation(O).conj().T
        cols.append(Vs @ R)
        signs.append(s)
    pairs = sorted(zip(signs, range(4)), key=lambda p: -p[0])
    W = np.column_stack([cols[i] for _, i in pairs])
    return PolarizedBasis(W, tuple(s for s, _ in pairs))


# -- propagator functions -------------------------------------------------------

@dataclass(frozen=True)
class Propagator3Q:
    Omega_p: float
    Omega_m: float
    psi_p: float
    psi_m: float

    @classmethod
    def from_params(cls, omega, gamma):
        g = abs(gamma) / SQRT2
        # tan psi = 1 +/- 2 sqrt2 omega / |gamma|, written with atan2 so gamma = 0 is fine
        psi_p = math.atan2(g + 2 * abs(omega), g)
        psi_m = math.atan2(g - 2 * abs(omega), g)
        Op = math.sqrt(max(0.0, gamma ** 2 + 2 * SQRT2 * abs(gamma * omega) + 4 * omega ** 2))
        Om = math.sqrt(max(0.0, gamma ** 2 - 2 * SQRT2 * abs(gamma * omega) + 4 * omega ** 2))
        return cls(Op, Om, psi_p, psi_m)

    def functions(self, s):
        s = np.asarray(s, dtype=float)
        ap = np.cos(self.Omega_p * s) - 1j * math.cos(self.psi_p) * np.sin(self.Omega_p * s)
        am = np.cos(self.Omega_m * s) - 1j * math.cos(self.psi_m) * np.sin(self.Omega_m * s)
        bp = math.sin(self.psi_p) * np.sin(self.Omega_p * s)
        bm = math.sin(self.psi_m) * np.sin(self.Omega_m * s)
        return ap, am, bp, bm

    def combinations(self, s):
        """a+/-, b+/-, g+/-, h+/- at time s."""
        ap, am, bp, bm = self.functions(s)
        return {"a+": 0.5 * (ap + am).real, "a-": 0.5 * (ap - am).real,
                "b+": 0.5 * (ap + am).imag, "b-": 0.5 * (ap - am).imag,
                "g+": 0.5 * (bp + bm), "g-": 0.5 * (bp - bm),
                "h+": 0.5 * (ap + np.conj(am)), "h-": 0.5 * (ap - np.conj(am))}


def post_propagator(omega, gamma, s):
    """exp(-i H_post s) assembled in the polarized basis."""
    pb = polarized_basis(float(omega), float(gamma))
    pr = Propagator3Q.from_params(omega, gamma)
    ap, am, bp, bm = pr.functions(float(s))
    B = np.zeros((8, 8), dtype=complex)
    for k, sign in enumerate(pb.signs):
        a, b = (ap, bp) if sign > 0 else (am, bm)
        i = 2 * k
        B[i:i + 2, i:i + 2] = [[a, -b], [b, np.conj(a)]]
    return pb.W @ B @ pb.W.conj().T


def propagator_pieces(p: ThreeQubitParams, t):
    """Piecewise U(t, 0) of the switched Hamiltonian."""
    if t < 0:
        raise ValueError("t must be non-negative")
    b = pre_block_params(p.omega)
    if t < p.tau:
        return np.kron(propagator_2q(b, t), I2)
    U_tau = np.kron(propagator_2q(b, p.tau), I2)
    return post_propagator(p.omega, p.gamma, t - p.tau) @ U_tau


def oracle_propagator(p: ThreeQubitParams, t):
    Hpre = hamiltonian_pre(p.omega)
    if t < p.tau:
        return core.expm_hermitian(Hpre, t)
    return (core.expm_hermitian(hamiltonian_post(p.omega, p.gamma), t - p.tau)
            @ core.expm_hermitian(Hpre, p.tau))


# -- reduced maps -----------------------------------------------------------------

def exact_map(p: ThreeQubitParams, t, oracle=False):
    U = oracle_propagator(p, t) if oracle else propagator_pieces(p, t)
    return core.oracle_map(U, p.env_state)


def pre_switch_display(p: ThreeQubitParams, t):
    """Closed-form generalized amplitude damping matrix for t < tau."""
    c, s = math.cos(2 * p.omega * t), math.sin(2 * p.omega * t)
    return np.array([[1, 0, 0, 0],
                     [0, c * c, -c * s, 0],
                     [0, c * s, c * c, 0],
                     [p.z_E * s * s, 0, 0, c * c]])


@dataclass(frozen=True)
class ThreeQubitSnapshot:
    t: float
    L: np.ndarray = field(repr=False)
    phase: str
    d_closed: Optional[np.ndarray] = None
    d_verbatim: Optional[np.ndarray] = None

    @property
    def T(self):
        return self.L[1:, 1:]

    @property
    def d(self):
        return self.L[1:, 0]

    @property
    def det(self):
        return float(np.linalg.det(self.L))

    def closed_form_matrix(self):
        """The swap-like form [[1, 0], [d, 0]] built from the closed-form shift."""
        L = np.zeros((4, 4))
        L[0, 0] = 1.0
        L[1:, 0] = self.d_closed
        return L


def pre_switch_map(p: ThreeQubitParams, t) -> ThreeQubitSnapshot:
    if t >= p.tau:
        raise ValueError("pre-switch map needs t < tau")
    return ThreeQubitSnapshot(float(t), exact_map(p, t), "pre")


def _shift_coefficients(c, variant):
    """Constant, cos(4 w tau) and sin(4 w tau) parts of the post-switch shift.

    ``variant='verbatim'`` reproduces the published x coefficients; the
    'corrected' variant replaces the cos/sin x coefficients with the ones that
    match brute-force evolution.
    """
    ap, bm = c["a+"], c["b-"]
    gp, gm, hp, hm = c["g+"], c["g-"], c["h+"], c["h-"]
    Re, Im = np.real, np.imag
    x0 = gp * gm - Re(bm * gp) - Im(gm * hm) + Re(ap) * Re(hm) - Re(bm) * Im(hm)
    if variant == "verbatim":
        xc = gp * gm - Im(gp * hp + gm * hm) + Re(hp * hm)
        xs = Im(hp * hm) - Re(gp * hp + gm * hm)
    else:
        xc = -2 * gp * gm - Im(gp * hp + gm * hm)
        xs = -Re(gp * hp + gm * hm) - Im(hp * hm)
    y0 = Re(gm * hm) - Re(ap * gp) + Re(bm) * Re(hm) + Re(ap) * Im(hm)
    yc = Re(gp * hp) + Re(gm * hm) + Im(hp * np.conj(hm))
    ys = -gp * gm + Im(gp * np.conj(hp)) + Im(gm * hm) + Re(hp * hm)
    z0 = abs(ap) ** 2 - abs(bm) ** 2 + gm ** 2 + 2 * Im(gp * hm)
    zc = gm ** 2 - abs(hp) ** 2 - 2 * Im(gp * hm)
    zs = 2 * (Re(gm * hp) - Re(hm) * Im(hm))
    return (x0, xc, xs), (y0, yc, ys), (z0, zc, zs)


def closed_form_shift(p: ThreeQubitParams, t, variant="corrected"):
    """Post-switch shift from the propagator combinations at t - tau."""
    if not p.closed_form_available:
        raise ValueError("closed-form shift assumes r_E' = x_E' x-hat, omega > 0 and "
                         "gamma >= 0; use exact_map")
    c = Propagator3Q.from_params(p.omega, p.gamma).combinations(t - p.tau)
    cos4, sin4 = math.cos(4 * p.omega * p.tau), math.sin(4 * p.omega * p.tau)
    (x0, xc, xs), (y0, yc, ys), (z0, zc, zs) = _shift_coefficients(c, variant)
    pref = p.z_E * p.r_Ep[0] / SQRT2
    return np.array([pref * (x0 + xc * cos4 + xs * sin4),
                     pref * (y0 + yc * cos4 + ys * sin4),
                     0.5 * p.z_E * (z0 + zc * cos4 + zs * sin4)], dtype=float)


def post_switch_map(p: ThreeQubitParams, t) -> ThreeQubitSnapshot:
    """Exact reduced map for t >= tau, with the closed-form shifts attached.

    Other E' states are evolved exactly but carry no closed-form shift.
    """
    if t < p.tau:
        raise ValueError("post-switch map needs t >= tau")
    L = exact_map(p, t)
    d_c = d_v = None
    if p.closed_form_available:
        d_c = closed_form_shift(p, t, "corrected")
        d_v = closed_form_shift(p, t, "verbatim")
    return ThreeQubitSnapshot(float(t), L, "post", d_c, d_v)


def map_at(p: ThreeQubitParams, t) -> ThreeQubitSnapshot:
    return pre_switch_map(p, t) if t < p.tau else post_switch_map(p, t)


# -- checks and reports ---------------------------------------------------------

def gadc_residuals(snap: ThreeQubitSnapshot, z_E):
    """(|lambda_z - lambda_x^2|, |lambda_x - lambda_y|, |d_z - z_E (1 - lambda_z)|)."""
    T = snap.T
    lx = np.linalg.svd(T[:2, :2], compute_uv=False)
    lz = abs(T[2, 2])
    return (float(abs(lz - lx[0] ** 2)), float(abs(lx[0] - lx[1])),
            float(abs(snap.d[2] - z_E * (1 - lz))))


def phase_covariance_residual(p: ThreeQubitParams, t, n_states=20, rng=None, angle=None):
    """max over random states of |Lambda(R rho R^dag) - R Lambda(rho) R^dag|, R = exp(-i angle Z)."""
    rng = np.random.default_rng(0) if rng is None else rng
    angle = p.omega * t if angle is None else angle
    L = exact_map(p, t)
    R = np.diag([np.exp(-1j * angle), np.exp(1j * angle)])
    worst = 0.0
    for r in core.random_bloch(rng, n_states):
        rho = core.bloch_to_density(r)
        lhs = core.apply_affine(L, R @ rho @ R.conj().T)
        rhs = R @ core.apply_affine(L, rho) @ R.conj().T
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def symmetry_audit(p: ThreeQubitParams):
    def cnorm(A, B):
        return float(np.abs(A @ B - B @ A).max())

    h_free = p.omega * (_k(Z, I2, I2) + _k(I2, Z, I2))
    h_int = p.omega * (_k(X, Y, I2) - _k(Y, X, I2))
    Hpost = hamiltonian_post(p.omega, p.gamma)
    rho_E = core.bloch_to_density(np.array([0.0, 0.0, p.z_E]))
    return {
        "pre_energy_conservation": cnorm(h_free, h_int),
        "pre_env_commutes_with_free": cnorm(p.omega * Z, rho_E),
        "post_zzz": cnorm(Hpost, ZZZ),
        "post_o2": cnorm(Hpost, O2),
        "post_parity_breaking": cnorm(Hpost, PZZ),
    }


def is_special_tau(omega, tau, tol=SPECIAL_TAU_TOL):
    """tau = (pi / 2 omega)(n + 1/2) for an integer n >= 0."""
    if omega == 0:
        return False
    x = tau * 2 * abs(omega) / math.pi - 0.5
    return bool(x > -tol and abs(x - round(x)) <= tol)


def switch_report(p: ThreeQubitParams):
    """Jump of the reduced map across the switch.

    ``jump_norm`` compares the exact maps just before and at tau;
    ``closed_form_jump_norm`` compares the pre-switch map with the swap-like
    form [[1, 0], [d(tau), 0]].
    """
    b = pre_block_params(p.omega)
    before = core.oracle_map(np.kron(propagator_2q(b, p.tau), I2), p.env_state)
    after = exact_map(p, p.tau)
    jump = float(np.abs(after - before).max())
    closed_jump = None
    if p.closed_form_available:
        closed = np.zeros((4, 4))
        closed[0, 0] = 1.0
        closed[1:, 0] = closed_form_shift(p, p.tau)
        closed_jump = float(np.abs(closed - before).max())
    return {"tau": p.tau, "continuous": jump < CONTINUITY_TOL, "jump_norm": jump,
            "closed_form_jump_norm": closed_jump,
            "special_tau": is_special_tau(p.omega, p.tau)}


def switch_csv(p: ThreeQubitParams, t_grid):
    """Rows (t, d_x, d_y, d_z, Det) across the switch from the exact map."""
    rows = []
    for t in np.atleast_1d(t_grid):
        L = exact_map(p, float(t))
        rows.append((float(t), L[1, 0], L[2, 0], L[3, 0], float(np.linalg.det(L))))
    return csv_text(["t", "d_x", "d_y", "d_z", "det"], rows)
