"""Time-local and convolution master equations for the two-qubit reduced dynamics.

* ``generator_tl``: K = dLambda/dt Lambda^-1 from the cross-product inverse.
* ``lindblad_form``: (H_eff, gamma) decomposition of K.
* ``fourier_decompose`` / ``nz_kernel_eval``: exact spectral lines of the map,
  their Laplace transform and the convolution kernel s - Phi(s)^-1.
* ``effective_tl_equation``: generator of a shifted (invertible) environment
  state plus the exact correction linear in the shift.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import core
from .dynamical_map import _check_env, map_series
from .io import csv_text
from .kernels import map_components
from .trigpoly import TrigPoly
from .two_qubit import BlockParams

SINGULAR_TOL = 1e-10
COND_WARN = 1e8
ODE_RTOL = 1e-9
ODE_ATOL = 1e-12
TALBOT_M = 32

_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_i, _k, _j] = -1.0


class SingularGeneratorError(ArithmeticError):
    pass


# -- time-local generator ------------------------------------------------------

@dataclass(frozen=True)
class GeneratorTL:
    t: float
    K: Optional[np.ndarray] = field(repr=False)
    det: float
    singular: bool

    @property
    def trace(self):
        return float(np.trace(self.K)) if self.K is not None else math.nan


def _k_from_maps(L, dL):
    """Cross-product form of dL L^-1 for maps with T_z = T_x x T_y.

    Rows of T are T_x, T_y, T_z; the inverse has columns T_y x T_z, T_z x T_x,
    T_z over |T_z|^2 and shift column -d_z T_z / |T_z|^2.
    """
    T, dT = L[1:, 1:], dL[1:, 1:]
    Tx, Ty, Tz = T
    dz = L[3, 0]
    tz2 = Tz @ Tz
    cols = np.column_stack([np.cross(Ty, Tz), np.cross(Tz, Tx), Tz]) / tz2
    K = np.zeros((4, 4))
    K[1:, 1:] = dT @ cols
    # the shift column also picks up the rate of change of d itself
    K[1:, 0] = dL[1:, 0] - dz * (dT @ Tz) / tz2
    return K


def generator_tl(b: BlockParams, r_E, t) -> GeneratorTL:
    L, dL = map_series(b, r_E, [float(t)])
    L, dL = L[0], dL[0]
    det = float(L[3, 1:] @ L[3, 1:])
    if abs(det) < SINGULAR_TOL:
        return GeneratorTL(float(t), None, det, True)
    return GeneratorTL(float(t), _k_from_maps(L, dL), det, False)


def generator_series(b: BlockParams, r_E, t_grid):
    """Vectorized (t, K, det); K is NaN where the map is singular."""
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    L, dL = map_series(b, r_E, t)
    K = np.full((t.size, 4, 4), np.nan)
    det = np.einsum("ni,ni->n", L[:, 3, 1:], L[:, 3, 1:])
    for i in range(t.size):
        if abs(det[i]) >= SINGULAR_TOL:
            K[i] = _k_from_maps(L[i], dL[i])
    return t, K, det


def generator_numeric(b: BlockParams, r_E, t, h=1e-6):
    """Central-difference dLambda/dt times Lambda^-1 (verification only)."""
    L, _ = map_series(b, r_E, [t - h, t, t + h])
    return (L[2] - L[0]) / (2 * h) @ np.linalg.inv(L[1])


def trace_k_csv(b: BlockParams, r_E, t_grid, scale=None):
    """Rows (t, Tr K scaled by ``scale``, Det Lambda)."""
    t, K, det = generator_series(b, r_E, t_grid)
    tr = np.trace(K, axis1=1, axis2=2)
    if scale is not None:
        tr = tr * scale
    return csv_text(["t", "trK", "det"], zip(t, tr, det))


# -- Lindblad form ---------------------------------------------------------------

def _lindblad_action(H, gamma, rho):
    Hs = sum(h * s for h, s in zip(H, core.PAULIS[1:]))
    out = -1j * (Hs @ rho - rho @ Hs)
    for i, si in enumerate(core.PAULIS[1:]):
        for j, sj in enumerate(core.PAULIS[1:]):
            g = gamma[i, j]
            if g == 0:
                continue
            out = out + g * (sj @ rho @ si - 0.5 * (si @ sj @ rho + rho @ si @ sj))
    return out


def _param_to_gamma(p):
    """Real parameter vector (9) to Hermitian gamma: diag, Re/Im of upper triangle."""
    g = np.zeros((3, 3), dtype=complex)
    g[0, 0], g[1, 1], g[2, 2] = p[0], p[1], p[2]
    for n, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
        g[i, j] = p[3 + 2 * n] + 1j * p[4 + 2 * n]
        g[j, i] = np.conj(g[i, j])
    return g


@lru_cache(maxsize=1)
def _lindblad_design():
    """12x12 matrix mapping (H, gamma params) to the free entries K[1:, :]."""
    A = np.zeros((12, 12))
    for k in range(12):
        p = np.zeros(12)
        p[k] = 1.0
        L = core.map_from_channel(lambda r, p=p: _lindblad_action(p[:3], _param_to_gamma(p[3:]), r))
        A[:, k] = L[1:, :].ravel()
    return A


def lindblad_matrix(H, gamma):
    """4x4 affine generator of the Lindblad equation with (H, gamma)."""
    return core.map_from_channel(lambda r: _lindblad_action(H, gamma, r))


@dataclass(frozen=True)
class LindbladForm:
    t: float
    H_eff: np.ndarray
    gamma: np.ndarray

    def generator(self):
        return lindblad_matrix(self.H_eff, self.gamma)


def lindblad_form(g: GeneratorTL) -> LindbladForm:
    """Solve -i[H.sigma, .] + sum gamma_ij (s_j . s_i - {s_i s_j, .}/2) = K.

    The twelve free entries of K fix H (3) and the Hermitian gamma (9)
    uniquely. With this convention H_i = -eps_ijk K_jk / 4.
    """
    if g.singular or g.K is None:
        raise SingularGeneratorError(f"generator is singular at t = {g.t}")
    p = np.linalg.solve(_lindblad_design(), g.K[1:, :].ravel())
    return LindbladForm(g.t, p[:3].copy(), _param_to_gamma(p[3:]))


def h_eff_from_k(K):
    """Antisymmetric part of the T-block as a vector, in the Lindblad normalization."""
    return -0.25 * np.einsum("ijk,jk->i", _EPS3, np.asarray(K)[1:, 1:])


def gamma_csv(b: BlockParams, r_E, t_grid, r1, r2):
    """Rows (t, Re gamma_xy, Im gamma_xy, D) for the off-diagonal rates."""
    from .diagnostics import witness_series

    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    ws = witness_series(b, r_E, r1, r2, t)
    rows = []
    for ti, Di in zip(t, ws.D):
        g = generator_tl(b, r_E, ti)
        if g.singular:
            rows.append((ti, math.nan, math.nan, Di))
            continue
        gam = lindblad_form(g).gamma
        rows.append((ti, gam[0, 1].real, gam[0, 1].imag, Di))
    return csv_text(["t", "re_gamma_xy", "im_gamma_xy", "D"], rows)


# -- Fourier / Laplace -------------------------------------------------------------

@dataclass(frozen=True)
class FourierDecomposition:
    """Lambda^{ab}(t) = sum over lines (nu, c) of c exp(i nu t)."""
    omega_p: float
    omega_m: float
    lines: Dict[Tuple[int, int], List[Tuple[float, complex]]]

    def constant(self, a, b):
        return sum((c for nu, c in self.lines.get((a, b), []) if nu == 0.0), 0j)

    def coefficient(self, a, b, nu, tol=1e-9):
        """Coefficient of exp(i nu t); the F_k of the e^{-i...} form is nu < 0."""
        return sum((c for v, c in self.lines.get((a, b), []) if abs(v - nu) <= tol), 0j)

    def frequencies(self):
        return sorted({nu for ls in self.lines.values() for nu, _ in ls})

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        L = np.zeros((t.size, 4, 4), dtype=complex)
        L[:, 0, 0] = 1.0
        for (a, b), ls in self.lines.items():
            for nu, c in ls:
                L[:, a, b] += c * np.exp(1j * nu * t)
        return L

    def derivative_at_zero(self, order=1):
        """d^n Lambda / dt^n at t = 0 from the line spectrum."""
        D = np.zeros((4, 4), dtype=complex)
        for (a, b), ls in self.lines.items():
            for nu, c in ls:
                D[a, b] += c * (1j * nu) ** order
        return D.real

    def laplace(self, s):
        """Phi(s) = integral_0^inf Lambda(t) e^{-st} dt, valid for Re s > 0."""
        s = complex(s)
        P = np.zeros((4, 4), dtype=complex)
        P[0, 0] = 1.0 / s
        for (a, b), ls in self.lines.items():
            for nu, c in ls:
                P[a, b] += c / (s - 1j * nu)
        return P

    def laplace_many(self, s):
        """Vectorized Phi over an array of s: shape (n, 4, 4)."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        P = np.zeros((s.size, 4, 4), dtype=complex)
        P[:, 0, 0] = 1.0 / s
        for (a, b), ls in self.lines.items():
            for nu, c in ls:
                P[:, a, b] += c / (s - 1j * nu)
        return P

    def to_dict(self):
        return {f"{a}{b}": [[nu, c.real, c.imag] for nu, c in ls]
                for (a, b), ls in sorted(self.lines.items())}


def fourier_decompose(b: BlockParams, r_E) -> FourierDecomposition:
    """Exact spectral lines of every map component.

    The closed-form components are evaluated on exponential polynomials, so
    product-to-sum reduction is exact; coinciding frequencies (degenerate
    blocks) are merged.
    """
    x, y, z = _check_env(r_E)
    cp, sp, cm, sm = b.signed_trig()
    comps = map_components(TrigPoly.alpha(0, cp), TrigPoly.alpha(1, cm),
                           TrigPoly.beta(0, sp), TrigPoly.beta(1, sm), x, y, z)
    lines = {}
    for key, poly in comps.items():
        if not isinstance(poly, TrigPoly):
            poly = TrigPoly.const(poly)
        ls = poly.lines(b.omega_p, b.omega_m)
        if ls:
            lines[key] = ls
    return FourierDecomposition(b.omega_p, b.omega_m, lines)


def fourier_project(b: BlockParams, r_E, nu, window, n=200001):
    """Numerical inner product (1/W) int_0^W Lambda(t) e^{-i nu t} dt (verification)."""
    t = np.linspace(0, window, n)
    L, _ = map_series(b, r_E, t)
    w = np.exp(-1j * nu * t)
    return np.trapezoid(L * w[:, None, None], t, axis=0) / window


@dataclass(frozen=True)
class NZKernelEval:
    s: complex
    Phi: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    cond: float


def nz_kernel_eval(f: FourierDecomposition, s) -> NZKernelEval:
    s = complex(s)
    if s.real <= 0:
        raise ValueError("Laplace transform needs Re s > 0")
    P = f.laplace(s)
    cond = float(np.linalg.cond(P))
    if not np.isfinite(cond) or cond > 1e15:
        raise np.linalg.LinAlgError(f"Phi(s) is singular at s = {s}")
    if cond > COND_WARN:
        warnings.warn(f"Phi(s) ill-conditioned at s = {s} (cond {cond:.3g})", RuntimeWarning)
    return NZKernelEval(s, P, s * np.eye(4) - np.linalg.inv(P), cond)


def talbot_nodes(t, M=TALBOT_M):
    """Fixed-Talbot nodes s_k and weights w_k: f(t) ~ sum_k Re(w_k F(s_k))."""
    r = 2 * M / (5 * t)
    theta = np.arange(1, M) * math.pi / M
    cot = 1 / np.tan(theta)
    s = np.concatenate([[r], r * theta * (cot + 1j)])
    sigma = theta + (theta * cot - 1) * cot
    w = np.concatenate([[0.5 * np.exp(r * t)], np.exp(t * s[1:]) * (1 + 1j * sigma)]) * r / M
    return s, w


def nz_kernel_time(f: FourierDecomposition, t_grid, M=TALBOT_M):
    """Regular part of the convolution kernel in the time domain.

    K_NZ(t) = K_inf delta(t) + K_reg(t); K_inf = dLambda/dt(0) is the large-s
    limit of s - Phi^-1, K_reg is the Talbot inverse of the remainder, and
    K_reg(0) = Lambda''(0) - Lambda'(0)^2 from the next term of the expansion.
    """
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    d1 = f.derivative_at_zero(1)
    d2 = f.derivative_at_zero(2)
    out = np.zeros((t.size, 4, 4))
    for i, ti in enumerate(t):
        if ti <= 0:
            out[i] = d2 - d1 @ d1
            continue
        s, w = talbot_nodes(ti, M)
        P = f.laplace_many(s)
        Kt = s[:, None, None] * np.eye(4) - np.linalg.inv(P) - d1
        out[i] = np.real(np.einsum("k,kab->ab", w, Kt))
    return d1, out


def volterra_residual(b: BlockParams, r_E, t_max=2.0, h=0.0025, M=TALBOT_M):
    """max |dLambda/dt - K_inf Lambda - int_0^t K_reg(t - s) Lambda(s) ds| on [0, t_max].

    Trapezoidal convolution of the Talbot-inverted kernel against the exact map.
    """
    f = fourier_decompose(b, r_E)
    n = int(round(t_max / h)) + 1
    t = np.linspace(0, t_max, n)
    h = t[1] - t[0]
    L, dL = map_series(b, r_E, t)
    k_inf, K = nz_kernel_time(f, t, M)
    res = np.zeros(n)
    for i in range(n):
        if i == 0:
            conv = np.zeros((4, 4))
        else:
            # K(t_i - t_j) L(t_j), j = 0..i
            prod = np.einsum("jab,jbc->jac", K[i::-1], L[:i + 1])
            conv = h * (prod.sum(axis=0) - 0.5 * (prod[0] + prod[-1]))
        res[i] = np.abs(dL[i] - k_inf @ L[i] - conv).max()
    return t, res


# -- effective time-local equation -----------------------------------------------

@dataclass(frozen=True)
class EffectiveTLSetup:
    r_ntl: np.ndarray
    r_shifted: np.ndarray

    @property
    def delta(self):
        return np.asarray(self.r_ntl, dtype=float) - np.asarray(self.r_shifted, dtype=float)

    @property
    def eps(self):
        return float(np.linalg.norm(self.delta))

    @classmethod
    def from_escape(cls, b: BlockParams, r_ntl, eps, t_max, direction=None):
        """Shift ``r_ntl`` by ``eps`` along ``direction`` (default: the escape direction)."""
        from .dynamical_map import invertibility_analysis

        r = _check_env(r_ntl)
        if direction is None:
            rep = invertibility_analysis(b, r, t_max)
            direction = rep.escape_direction
            if direction is None:
                direction = np.array([1.0, 0.0, 0.0])
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        return cls(r, r + eps * direction)

    def validate(self, b: BlockParams, t_max):
        from .dynamical_map import invertibility_analysis

        rep = invertibility_analysis(b, self.r_shifted, t_max)
        if rep.non_invertible_times:
            raise SingularGeneratorError(
                f"shifted state still singular at {rep.non_invertible_times}")
        return rep


def effective_tl_equation(setup: EffectiveTLSetup, b: BlockParams, t):
    """K_TL(t; r') and the exact correction operator.

    The correction acts on the initial system state (1, r_S(0)):
    sum_c dr_c [dLambda_c/dt - K Lambda_c] with Lambda_c = dLambda/dr_c,
    which equals dr . [dK/dr' Lambda(r')].
    """
    rp = _check_env(setup.r_shifted)
    g = generator_tl(b, rp, t)
    if g.singular:
        raise SingularGeneratorError(f"shifted generator singular at t = {t}")
    ts = [float(t)]
    L0, dL0 = map_series(b, np.zeros(3), ts)
    corr = np.zeros((4, 4))
    for c, dr in enumerate(setup.delta):
        if dr == 0:
            continue
        e = np.zeros(3)
        e[c] = 1.0
        Lc, dLc = map_series(b, e, ts)
        corr += dr * ((dLc[0] - dL0[0]) - g.K @ (Lc[0] - L0[0]))
    return {"K": g.K, "correction": corr}


# -- ODE propagation ---------------------------------------------------------------

def propagate_ode(K: Callable[[float], np.ndarray], r0, t_span, t_eval=None,
                  source: Optional[Callable[[float], np.ndarray]] = None,
                  singular_times: Sequence[float] = ()):
    """Integrate d(1, r)/dt = K(t) (1, r) [+ source(t)] with RK45.

    ``source`` returns a 4-vector added to the right-hand side. Raises if a
    known singular time lies inside the span.
    """
    from scipy.integrate import solve_ivp

    t0, t1 = float(t_span[0]), float(t_span[1])
    for tau in singular_times:
        if t0 <= tau <= t1:
            raise SingularGeneratorError(f"integration span crosses singular time {tau}")
    v0 = np.concatenate([[1.0], np.asarray(r0, dtype=float)])

    def rhs(t, v):
        Kt = K(t)
        if Kt is None or not np.all(np.isfinite(Kt)):
            raise SingularGeneratorError(f"generator undefined at t = {t}")
        out = Kt @ v
        if source is not None:
            out = out + source(t)
        return out

    sol = solve_ivp(rhs, (t0, t1), v0, method="RK45", rtol=ODE_RTOL, atol=ODE_ATOL,
                    t_eval=t_eval)
    if not sol.success:
        raise SingularGeneratorError(f"integration failed: {sol.message}")
    return sol.t, sol.y[1:].T


def tl_generator_callable(b: BlockParams, r_E):
    def K(t):
        g = generator_tl(b, r_E, t)
        return None if g.singular else g.K
    return K


def effective_propagation(setup: EffectiveTLSetup, b: BlockParams, r_S0, T, with_correction):
    """Terminal Bloch vector from the effective equation, with or without correction."""
    r_S0 = np.asarray(r_S0, dtype=float)
    v0 = np.concatenate([[1.0], r_S0])
    K = tl_generator_callable(b, setup.r_shifted)
    def correction(t):
        return effective_tl_equation(setup, b, t)["correction"] @ v0

    src = correction if with_correction else None
    _, traj = propagate_ode(K, r_S0, (0.0, T), t_eval=[T], source=src)
    return traj[-1]
