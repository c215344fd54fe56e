"""Non-Markovianity witnesses and divisibility of the two-qubit reduced dynamics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import core
from .dynamical_map import (Family, _check_env, classify, determinant_profile, map_at,
                            map_series)
from .io import csv_text
from .two_qubit import BlockParams

BACKFLOW_TOL = 1e-10
INVERTIBLE_TOL = 1e-12
CP_TOL = core.PSD_TOL
SATURATION_TOL = 1e-10


def trace_distance(r1, r2):
    return 0.5 * np.linalg.norm(np.asarray(r1) - np.asarray(r2), axis=-1)


def fidelity(r1, r2):
    r1, r2 = np.asarray(r1), np.asarray(r2)
    p1 = np.clip(1 - np.einsum("...i,...i->...", r1, r1), 0, None)
    p2 = np.clip(1 - np.einsum("...i,...i->...", r2, r2), 0, None)
    return 0.5 * (1 + np.einsum("...i,...i->...", r1, r2) + np.sqrt(p1 * p2))


def _runs(mask):
    """Index ranges [i, j] of consecutive True entries."""
    out = []
    start = None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(mask) - 1))
    return out


@dataclass
class WitnessSeries:
    t: np.ndarray
    D: np.ndarray
    F: np.ndarray
    dD: np.ndarray = field(repr=False)
    dF: np.ndarray = field(repr=False)
    backflow: List[Tuple[float, float]]

    @property
    def tau_nm(self):
        """Mean backflow interval length; a crude memory time."""
        if not self.backflow:
            return 0.0
        return float(np.mean([b - a for a, b in self.backflow]))

    def plateaus(self, tol=BACKFLOW_TOL, min_len=3):
        """Sample-index runs where |dF/dt| <= tol."""
        return [(i, j) for i, j in _runs(np.abs(self.dF) <= tol) if j - i + 1 >= min_len]

    def period(self, which="D"):
        return autocorrelation_period(self.t, self.D if which == "D" else self.F)

    def to_csv(self, omega=None):
        """Rows (t, D, F); with ``omega`` the time column is chi = omega t / pi."""
        tt = self.t if omega is None else self.t * omega / math.pi
        head = ["t" if omega is None else "chi", "F", "D"]
        return csv_text(head, zip(tt, self.F, self.D))


def witness_series(b: BlockParams, r_E, r1, r2, t_grid) -> WitnessSeries:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    for r in (r1, r2):
        if np.linalg.norm(r) > 1 + 1e-12:
            raise ValueError("initial system states must lie in the Bloch ball")
    L, _ = map_series(b, r_E, t)
    s1 = L[:, 1:, 1:] @ r1 + L[:, 1:, 0]
    s2 = L[:, 1:, 1:] @ r2 + L[:, 1:, 0]
    D = trace_distance(s1, s2)
    F = fidelity(s1, s2)
    if t.size > 1:
        dD = np.gradient(D, t)
        dF = np.gradient(F, t)
    else:
        dD = dF = np.zeros_like(D)
    back = [(float(t[i]), float(t[j])) for i, j in _runs(dD > BACKFLOW_TOL)]
    return WitnessSeries(t, D, F, dD, dF, back)


def autocorrelation_period(t, x, rel_height=0.9):
    """Lag of the first autocorrelation peak after the first zero crossing.

    Candidate peaks are local maxima; the first one reaching ``rel_height`` of
    the tallest in the window wins, so equal-height repeats (pure tones) and
    small sub-harmonic bumps are both handled.
    """
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = x.size
    ac = np.correlate(x, x, mode="full")[n - 1:]
    ac = ac / np.arange(n, 0, -1)  # unbiased: undo the shrinking overlap
    if ac[0] == 0:
        return None
    ac = ac / ac[0]
    neg = np.nonzero(ac < 0)[0]
    if neg.size == 0:
        return None
    start = neg[0]
    stop = max(start + 3, (2 * n) // 3)  # avoid the noisy tail
    seg = ac[start:stop]
    peaks = [i for i in range(1, seg.size - 1) if seg[i - 1] < seg[i] >= seg[i + 1]]
    if not peaks:
        return None
    top = max(seg[i] for i in peaks)
    k = start + next(i for i in peaks if seg[i] >= rel_height * top)
    # parabolic interpolation of the peak
    a, c, e = ac[k - 1], ac[k], ac[k + 1]
    den = a - 2 * c + e
    shift = 0.5 * (a - e) / den if den < 0 else 0.0
    return float((k + shift) * (t[1] - t[0]))


# -- interweaving maps and divisibility ---------------------------------------

class SingularMapError(ArithmeticError):
    pass


@dataclass(frozen=True)
class InterweavingMap:
    tau1: float
    tau2: float
    L: np.ndarray = field(repr=False)
    restricted_domain: bool = False
    residual: float = 0.0

    @property
    def T(self):
        return self.L[1:, 1:]

    @property
    def d(self):
        return self.L[1:, 0]

    def choi_min_eigenvalue(self):
        return core.choi_min_eigenvalue(self.L)

    def is_cp(self, tol=CP_TOL):
        return self.choi_min_eigenvalue() >= -tol


def interweave(b: BlockParams, r_E, tau1, tau2, allow_restricted=False) -> InterweavingMap:
    """Phi(tau2, tau1) with Lambda(tau2) = Phi Lambda(tau1)."""
    if not 0 <= tau1 < tau2:
        raise ValueError("need 0 <= tau1 < tau2")
    L1 = map_at(b, r_E, tau1).L
    L2 = map_at(b, r_E, tau2).L
    if abs(np.linalg.det(L1)) > INVERTIBLE_TOL:
        Phi = L2 @ np.linalg.inv(L1)
        return InterweavingMap(tau1, tau2, Phi, False, float(np.abs(Phi @ L1 - L2).max()))
    if not allow_restricted:
        raise SingularMapError(f"Lambda({tau1}) is singular; request the restricted-domain map")
    # least squares on the image of Lambda(tau1)
    Phi = L2 @ np.linalg.pinv(L1, rcond=1e-10)
    Phi[0] = (1, 0, 0, 0)
    return InterweavingMap(tau1, tau2, Phi, True, float(np.abs(Phi @ L1 - L2).max()))


def signed_singular_values(T):
    """Singular values of T = R1 diag(s) R2 with proper rotations R1, R2."""
    U, s, Vh = np.linalg.svd(np.asarray(T, dtype=float))
    if np.linalg.det(U) * np.linalg.det(Vh) < 0:
        s = s.copy()
        s[-1] = -s[-1]
    return s


def unital_cp_normal_form(T, tol=CP_TOL):
    """CP test for a unital qubit map from its signed singular values.

    The signed triple must lie in the tetrahedron 1 + s3 >= |s1 + s2|,
    1 - s3 >= |s1 - s2|. The tetrahedron is invariant under permutations and
    paired sign flips, so any proper-rotation SVD works.
    """
    s1, s2, s3 = signed_singular_values(T)
    return bool(1 + s3 >= abs(s1 + s2) - tol and 1 - s3 >= abs(s1 - s2) - tol)


def _is_d_plus(b: BlockParams):
    lab = classify(b, np.zeros(3))
    return lab.family == Family.D_PLUS


def appendix_b_inequality(b: BlockParams, tau1, tau2, r_E=None):
    """Closed-form divisibility test for phase-damping maps of the D+ family.

    Evaluates the '+' saturation identity and the '-' branch inequality
    exactly as written for the block-diagonal xy/z structure. The block
    entries do not depend on the environment state, so they are read from the
    r_E = 0 map. ``normal_form_cp`` is the tetrahedron test on the signed
    singular values of Phi, for comparison.
    """
    if not _is_d_plus(b):
        raise ValueError("closed-form test applies to the D+ family only")
    if r_E is not None:
        r = _check_env(r_E)
        if abs(r[1]) > 1e-12 or abs(r[2]) > 1e-12:
            raise ValueError("closed-form test needs r_E = x_E x-hat")
    L1 = map_at(b, np.zeros(3), tau1).L
    L2 = map_at(b, np.zeros(3), tau2).L
    xx1, xy1, yy1, zz1 = L1[1, 1], L1[1, 2], L1[2, 2], L1[3, 3]
    xx2, xy2, yy2, zz2 = L2[1, 1], L2[1, 2], L2[2, 2], L2[3, 3]
    residual = xx2 * yy1 + 2 * xy2 * xy1 + yy2 * xx1 - (zz2 + zz1)
    lhs = (xx2 * yy1 - yy2 * xx1) ** 2
    rhs = (zz2 - zz1) ** 2
    out = {"saturation_residual": float(residual),
           "saturated_plus": bool(abs(residual) <= SATURATION_TOL),
           "lhs": float(lhs), "rhs": float(rhs),
           "cp_ok": bool(lhs <= rhs + SATURATION_TOL),
           "normal_form_cp": None}
    if abs(np.linalg.det(L1)) > INVERTIBLE_TOL:
        out["normal_form_cp"] = unital_cp_normal_form((L2 @ np.linalg.inv(L1))[1:, 1:])
    return out


@dataclass
class DivisibilityReport:
    tau2: float
    p_divisible: bool
    min_det: float
    cp_divisible_up_to: bool
    violating_intervals: List[Tuple[float, float]]
    skipped_singular: List[float]
    unital: bool
    kraus_rank: int
    channel_divisible: Optional[bool]
    appendix_b: Optional[dict] = None

    def to_dict(self):
        return {
            "tau2": self.tau2, "p_divisible": self.p_divisible, "min_det": self.min_det,
            "cp_divisible_up_to": self.cp_divisible_up_to,
            "violating_intervals": [list(v) for v in self.violating_intervals],
            "skipped_singular": self.skipped_singular, "unital": self.unital,
            "kraus_rank": self.kraus_rank, "channel_divisible": self.channel_divisible,
            "appendix_b": self.appendix_b,
        }


def divisibility_report(b: BlockParams, r_E, tau2, n_scan=200) -> DivisibilityReport:
    """P- and CP-divisibility of the dynamics up to ``tau2``.

    CP-divisibility is holistic: every Phi(tau2, tau1), tau1 in (0, tau2), must
    pass the Choi test. ``channel_divisible`` is the separate criterion for
    unital full-Kraus-rank channels (divisible iff Det > 0), None otherwise.
    """
    if tau2 <= 0:
        raise ValueError("tau2 must be positive")
    r = _check_env(r_E)
    n_det = max(200, int(20 * tau2 * max(b.omega_p, b.omega_m, 1.0)))
    _, det, _ = determinant_profile(b, r, np.linspace(0, tau2, n_det))
    min_det = float(det.min())
    taus = np.linspace(0, tau2, n_scan + 1)[1:-1]
    L2 = map_at(b, r, tau2).L
    fails, skipped = [], []
    for tau1 in taus:
        L1 = map_at(b, r, tau1).L
        if abs(np.linalg.det(L1)) <= INVERTIBLE_TOL:
            skipped.append(float(tau1))
            fails.append(False)
            continue
        fails.append(core.choi_min_eigenvalue(L2 @ np.linalg.inv(L1)) < -CP_TOL)
    intervals = [(float(taus[i]), float(taus[j])) for i, j in _runs(fails)]
    snap = map_at(b, r, tau2)
    unital = bool(np.linalg.norm(snap.d) < 1e-12)
    rank = len(core.kraus_decompose(core.choi_of_map(snap.L)))
    channel_div = None
    if unital and rank == 4:
        channel_div = bool(snap.det > 0)
    extra = None
    if _is_d_plus(b) and abs(r[1]) < 1e-12 and abs(r[2]) < 1e-12:
        agree = disagree = 0
        for tau1, failed in zip(taus, fails):
            if tau1 in skipped:
                continue
            verdict = appendix_b_inequality(b, tau1, tau2)["cp_ok"]
            if verdict == (not failed):
                agree += 1
            else:
                disagree += 1
        extra = {"agree_with_choi": agree, "disagree_with_choi": disagree}
    return DivisibilityReport(float(tau2), bool(min_det >= -1e-12), min_det, not any(fails),
                              intervals, skipped, unital, rank, channel_div, extra)
