"""Exact reduced dynamics of the two-qubit model.

The map acts on Bloch vectors as r -> T r + d and is stored as a 4x4 affine
matrix (see :mod:`qubitmaps.core`). Parity symmetry leaves only ten non-zero
entries, all quadratic in the propagator functions of the two blocks.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from . import core, kernels
from .two_qubit import BlockParams, propagator

ROOT_TOL = 1e-12
NEAR_SINGULAR_TOL = 1e-6
REGIME_TOL = 1e-9
CLASSIFY_TOL = 1e-9
ESCAPE_MIN = 1e-6
MAX_DENOMINATOR = 64

_E = np.eye(3)


def _check_env(r_E):
    r = np.asarray(r_E, dtype=float)
    if r.shape != (3,):
        raise ValueError("environment Bloch vector must have three components")
    if not np.all(np.isfinite(r)) or np.linalg.norm(r) > 1 + 1e-12:
        raise ValueError(f"unphysical environment state r_E = {r.tolist()}")
    return r


@dataclass(frozen=True)
class DynamicalMapSnapshot:
    t: float
    L: np.ndarray = field(repr=False)

    @property
    def T(self):
        return self.L[1:, 1:]

    @property
    def d(self):
        return self.L[1:, 0]

    @property
    def T_z(self):
        return self.L[3, 1:]

    @property
    def det(self):
        return float(np.linalg.det(self.L))

    @property
    def det_tz(self):
        return float(self.T_z @ self.T_z)

    def apply(self, r):
        return self.T @ np.asarray(r, dtype=float) + self.d

    def singular_values(self):
        return np.linalg.svd(self.T, compute_uv=False)

    def to_dict(self, family=None, unital=None):
        return {"t": float(self.t), "T": [float(v) for v in self.T.ravel()],
                "d": [float(v) for v in self.d], "det": self.det,
                "family": family, "unital": unital}

    def to_json(self, family=None, unital=None):
        return json.dumps(self.to_dict(family, unital))


def map_series(b: BlockParams, r_E, t):
    """Affine maps and exact time derivatives on a grid: arrays (n, 4, 4)."""
    x, y, z = _check_env(r_E)
    cp, sp, cm, sm = b.signed_trig()
    return kernels.map_grid(t, b.omega_p, cp, sp, b.omega_m, cm, sm, x, y, z)


def map_at(b: BlockParams, r_E, t) -> DynamicalMapSnapshot:
    L, _ = map_series(b, r_E, [float(t)])
    return DynamicalMapSnapshot(float(t), L[0])


def map_derivative(b: BlockParams, r_E, t):
    return map_series(b, r_E, [float(t)])[1][0]


def oracle_map_at(b: BlockParams, r_E, t):
    """Brute-force map: propagate with exp(-iHt) and trace out the environment."""
    rho_E = core.bloch_to_density(_check_env(r_E))
    U = core.expm_hermitian(b.hamiltonian(), float(t))
    return DynamicalMapSnapshot(float(t), core.oracle_map(U, rho_E))


# -- partial components -------------------------------------------------------

@dataclass(frozen=True)
class PartialComponents:
    """P[a, b, c] = tr[(s_a x 1) U (s_b x s_c) U^dag] / 2, with c = 0 the identity slot.

    The map component is recovered as L[a, b] = sum_c P[a, b, c] r^c / 2 with
    r^0 = 1.
    """
    t: float
    P: np.ndarray = field(repr=False)

    def __getitem__(self, key):
        return self.P[key]

    def assemble(self, r_E):
        r = np.concatenate([[1.0], np.asarray(r_E, dtype=float)])
        return 0.5 * np.einsum("abc,c->ab", self.P, r)


def partial_components(b: BlockParams, t) -> PartialComponents:
    """Partial components from the closed form, using linearity in r_E."""
    ts = [float(t)]
    base = map_series(b, np.zeros(3), ts)[0][0]
    P = np.zeros((4, 4, 4))
    P[:, :, 0] = 2 * base
    for c in range(3):
        P[:, :, c + 1] = 2 * (map_series(b, _E[c], ts)[0][0] - base)
    P[np.abs(P) < 1e-300] = 0.0
    return PartialComponents(float(t), P)


def partial_components_oracle(b: BlockParams, t) -> PartialComponents:
    U = propagator(b, float(t))
    Ud = U.conj().T
    P = np.zeros((4, 4, 4))
    for a, sa in enumerate(core.PAULIS):
        left = np.kron(sa, core.I2)
        for bb, sb in enumerate(core.PAULIS):
            for c, sc in enumerate(core.PAULIS):
                P[a, bb, c] = 0.5 * np.trace(left @ U @ np.kron(sb, sc) @ Ud).real
    return PartialComponents(float(t), P)


# -- determinant and invertibility --------------------------------------------

def determinant_profile(b: BlockParams, r_E, t_grid):
    """Return (t, det of the 4x4 map, |T_z|^2) as arrays."""
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    L, _ = map_series(b, r_E, t)
    det = np.linalg.det(L)
    tz2 = np.einsum("ni,ni->n", L[:, 3, 1:], L[:, 3, 1:])
    return t, det, tz2


def coupling_regime(b: BlockParams, tol=REGIME_TOL):
    s = b.coupling_strength
    if abs(s - 1) <= tol:
        return "boundary"
    return "strong" if s > 1 else "weak"


def commensurate_ratio(w1, w2, tol=CLASSIFY_TOL, max_denominator=MAX_DENOMINATOR):
    """Fraction p/q ~ w1/w2 within relative tolerance, or None."""
    if w2 == 0:
        return None
    ratio = w1 / w2
    f = Fraction(ratio).limit_denominator(max_denominator)
    if abs(float(f) - ratio) <= tol * max(1.0, abs(ratio)):
        return f
    return None


def commensurate_odd_ratio(b: BlockParams):
    """(k, l, nu) with w+ = (2k+1) nu and w- = (2l+1) nu, if such exist."""
    f = commensurate_ratio(b.omega_p, b.omega_m)
    if f is None or f.numerator % 2 == 0 or f.denominator % 2 == 0:
        return None
    nu = b.omega_p / f.numerator
    return (f.numerator - 1) // 2, (f.denominator - 1) // 2, nu


def _unit2(v):
    n = math.hypot(v[0], v[1])
    return None if n < 1e-12 else np.array([v[0] / n, v[1] / n])


def kernel_directions(pc: PartialComponents):
    """(eta, eta_perp) as unit vectors in the xy plane at a non-invertible time.

    eta keeps the singularity, eta_perp removes it. Falls back to the second
    row of V when the first one vanishes.
    """
    zxx, zxy = pc[3, 1, 1], pc[3, 1, 2]
    zyx, zyy = pc[3, 2, 1], pc[3, 2, 2]
    eta = _unit2((zyy, -zyx))
    perp = _unit2((zxx, zxy))
    if perp is None and eta is not None:
        perp = np.array([eta[1], -eta[0]])
    if eta is None and perp is not None:
        eta = np.array([-perp[1], perp[0]])
    return eta, perp


@dataclass
class InvertibilityReport:
    coupling_regime: str
    non_invertible_times: List[float]
    eta: List[Optional[np.ndarray]]
    eta_perp: List[Optional[np.ndarray]]
    escape_direction: Optional[np.ndarray]
    escape_margin: float
    commensurate_odd_ratio: Optional[Tuple[int, int, float]]
    near_singular_times: List[float]

    @property
    def invertible(self):
        return not self.non_invertible_times

    def recommended_shift(self, r_E, eps=0.1):
        """r_E + eps * escape direction (None when no escape is needed or possible)."""
        if self.escape_direction is None:
            return None
        return np.asarray(r_E, dtype=float) + eps * self.escape_direction

    def to_dict(self):
        return {
            "coupling_regime": self.coupling_regime,
            "non_invertible_times": [float(t) for t in self.non_invertible_times],
            "eta": [None if e is None else [float(v) for v in e] for e in self.eta],
            "eta_perp": [None if e is None else [float(v) for v in e] for e in self.eta_perp],
            "escape_direction": None if self.escape_direction is None
            else [float(v) for v in self.escape_direction],
            "escape_margin": float(self.escape_margin),
            "commensurate_odd_ratio": None if self.commensurate_odd_ratio is None
            else list(self.commensurate_odd_ratio),
            "near_singular_times": [float(t) for t in self.near_singular_times],
        }


def find_singular_times(b: BlockParams, r_E, t_max, step=None):
    """Local minima of |T_z|^2 on [0, t_max], refined by bounded minimization.

    Returns (roots, near_singular): minima below ROOT_TOL and minima in
    [ROOT_TOL, NEAR_SINGULAR_TOL).
    """
    from scipy.optimize import minimize_scalar

    wmax = max(b.omega_p, b.omega_m)
    if wmax == 0:
        return [], []
    if step is None:
        step = math.pi / (20 * wmax)
    n = int(math.ceil(t_max / step)) + 1
    ts = np.linspace(0, t_max, n)
    _, _, f = determinant_profile(b, r_E, ts)

    def tz2(t):
        return determinant_profile(b, r_E, [t])[2][0]

    def slope(t):
        L, dL = map_series(b, r_E, [t])
        return 2 * float(L[0, 3, 1:] @ dL[0, 3, 1:])

    roots, near = [], []
    h = ts[1] - ts[0]
    for i in range(1, n):
        left = f[i - 1]
        right = f[i + 1] if i + 1 < n else np.inf
        if not (f[i] <= left and f[i] <= right):
            continue
        res = minimize_scalar(tz2, bounds=(max(0.0, ts[i] - h), min(t_max, ts[i] + h)),
                              method="bounded", options={"xatol": 1e-13})
        tm, fm = float(res.x), float(res.fun)
        if f[i] < fm:
            tm, fm = float(ts[i]), float(f[i])
        tm, fm = _polish_minimum(slope, tz2, tm, fm, h, t_max)
        if tm <= 0:
            continue
        bucket = roots if fm < ROOT_TOL else near if fm < NEAR_SINGULAR_TOL else None
        if bucket is not None and not any(abs(tm - s) < 0.5 * h for s in bucket):
            bucket.append(tm)
    return sorted(roots), sorted(near)


def _polish_minimum(slope, f, tm, fm, h, t_max):
    """Sharpen a minimum by root-finding on the exact derivative of |T_z|^2.

    Minimizing a quadratic well directly only resolves t to ~sqrt(eps); the
    derivative has a simple zero there.
    """
    from scipy.optimize import brentq

    for w in (1e-6, 1e-4, h):
        lo, hi = max(0.0, tm - w), min(t_max, tm + w)
        if lo < hi and slope(lo) < 0 < slope(hi):
            t_new = brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            f_new = f(t_new)
            if f_new <= fm + 1e-15:
                return float(t_new), float(f_new)
            break
    return tm, fm


def _escape_direction(perps):
    """theta maximizing min_i |eta_perp_i . v(theta)|, grid plus golden refinement."""
    from scipy.optimize import minimize_scalar

    P = np.array(perps)

    def score(theta):
        return float(np.min(np.abs(P @ np.array([math.cos(theta), math.sin(theta)]))))

    grid = np.linspace(0, 2 * math.pi, 360, endpoint=False)
    vals = [score(th) for th in grid]
    k = int(np.argmax(vals))
    dth = grid[1] - grid[0]
    res = minimize_scalar(lambda th: -score(th), bracket=(grid[k] - dth, grid[k], grid[k] + dth),
                          method="golden", options={"xtol": 1e-10})
    theta, best = (float(res.x), -float(res.fun)) if -res.fun > vals[k] + 1e-12 else (grid[k], vals[k])
    return theta, best


def invertibility_analysis(b: BlockParams, r_E, t_max) -> InvertibilityReport:
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    r = _check_env(r_E)
    roots, near = find_singular_times(b, r, t_max)
    etas, perps = [], []
    for tau in roots:
        e, p = kernel_directions(partial_components(b, tau))
        etas.append(e)
        perps.append(p)
    escape, margin = None, 0.0
    usable = [p for p in perps if p is not None]
    if usable:
        theta, margin = _escape_direction(usable)
        if margin > ESCAPE_MIN:
            escape = np.array([math.cos(theta), math.sin(theta), 0.0])
            # canonical sign: first non-negligible component positive
            if escape[np.argmax(np.abs(escape) > 1e-12)] < 0:
                escape = -escape
            escape[np.abs(escape) < 1e-15] = 0.0
    return InvertibilityReport(coupling_regime(b), roots, etas, perps, escape, margin,
                               commensurate_odd_ratio(b), near)


# -- family classification ----------------------------------------------------

class Family(str, Enum):
    N = "N"
    C = "C"
    D = "D"
    D_PLUS = "D+"
    D_MINUS = "D-"
    M_PLUS = "M+"
    M_MINUS = "M-"
    A_PLUS_N = "A+∩N"
    A_PLUS_D = "A+∩D"
    A_MINUS_N = "A-∩N"
    A_MINUS_D = "A-∩D"


@dataclass(frozen=True)
class FamilyLabel:
    family: Family
    unital: bool
    extra_symmetries: Tuple[str, ...]
    amplitude_damping: Optional[str] = None  # "A+" / "A-" when the flag applies
    periodic: bool = False
    markovian: bool = False

    def __str__(self):
        return self.family.value


def _close(a, b, tol=CLASSIFY_TOL):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def classify(b: BlockParams, r_E, tol=CLASSIFY_TOL) -> FamilyLabel:
    """Family of the map generated by ``b`` from environment state ``r_E``.

    Precedence M > D+/- > D > C > N; the amplitude-damping flag is attached on
    top. A-flagged commensurate cases stay C with the flag set.
    """
    x, y, z = _check_env(r_E)
    degenerate = _close(b.omega_p, b.omega_m, tol)
    ratio = commensurate_ratio(b.omega_p, b.omega_m, tol)
    commensurate = ratio is not None or b.omega_p == 0 or b.omega_m == 0
    phase_p = degenerate and _close(b.phi_p, b.phi_m, tol)
    phase_m = degenerate and _close(b.phi_p, -b.phi_m, tol)
    pure_x = _close(abs(x), 1.0, tol) and abs(y) <= tol and abs(z) <= tol
    pure_y = _close(abs(y), 1.0, tol) and abs(x) <= tol and abs(z) <= tol

    if phase_p and pure_x:
        fam = Family.M_PLUS
    elif phase_m and pure_y:
        fam = Family.M_MINUS
    elif phase_p:
        fam = Family.D_PLUS
    elif phase_m:
        fam = Family.D_MINUS
    elif degenerate:
        fam = Family.D
    elif commensurate:
        fam = Family.C
    else:
        fam = Family.N

    along_z = abs(x) <= tol and abs(y) <= tol
    amp = None
    if along_z and abs(b.delta_m) <= tol and abs(b.kappa_p) <= tol:
        amp = "A+"
    elif along_z and abs(b.delta_p) <= tol and abs(b.kappa_m) <= tol:
        amp = "A-"
    if amp is not None and fam in (Family.N, Family.D):
        fam = Family(f"{amp}∩{fam.value}")

    unital = abs(z) <= tol or fam in (Family.D_PLUS, Family.D_MINUS,
                                      Family.M_PLUS, Family.M_MINUS)
    sym = ("1_A X_B", "1_A Y_B") if degenerate else ()
    periodic = commensurate or degenerate
    return FamilyLabel(fam, bool(unital), sym, amp, bool(periodic),
                       fam in (Family.M_PLUS, Family.M_MINUS))


def unitality_check(snap: DynamicalMapSnapshot, tol=1e-12):
    """(unital, d). Also asserts the shift lies along z as parity requires."""
    d = snap.d.copy()
    if abs(d[0]) > tol or abs(d[1]) > tol:
        raise AssertionError(f"shift has transverse part {d[:2]}")
    return bool(np.linalg.norm(d) < tol), d
