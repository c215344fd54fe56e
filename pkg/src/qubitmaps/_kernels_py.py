"""Pure numpy implementation of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them loop for
loop. ``map_components`` is written against duck-typed values (numpy arrays or
:class:`qubitmaps.trigpoly.TrigPoly`) so the same closed form feeds the
numeric, derivative and Fourier paths.
"""
import numpy as np


def _abs2(a):
    return (a * a.conj()).real


def map_components(ap, am, bp, bm, x, y, z):
    """Non-zero entries of the two-qubit reduced map from the propagator functions.

    ``ap, am`` are alpha_+/-, ``bp, bm`` beta_+/- (real); ``x, y, z`` the
    environment Bloch vector. Returns a dict keyed by (row, col) of the 4x4
    affine matrix.
    """
    A = ap * am
    B = bp * bm
    p = ap * bm + am * bp
    m = ap * bm - am * bp
    q = ap * bp + am * bm
    n = ap * bp - am * bm
    blk_p = _abs2(ap) - bp * bp
    blk_m = _abs2(am) - bm * bm
    return {
        (3, 0): 0.5 * (blk_p - blk_m) * z,
        (1, 1): A.real - B,
        (1, 2): A.imag,
        (1, 3): p.real * x + m.imag * y,
        (2, 1): -A.imag,
        (2, 2): A.real + B,
        (2, 3): -p.imag * x + m.real * y,
        (3, 1): -q.real * x - n.imag * y,
        (3, 2): -q.imag * x + n.real * y,
        (3, 3): 0.5 * (blk_p + blk_m),
    }


def propagator_functions(t, omega, c, s):
    """alpha(t), beta(t) and their time derivatives for one parity block."""
    t = np.asarray(t, dtype=float)
    co, si = np.cos(omega * t), np.sin(omega * t)
    alpha = co - 1j * c * si
    beta = s * si
    dalpha = -omega * si - 1j * c * omega * co
    dbeta = s * omega * co
    return alpha, beta, dalpha, dbeta


def map_grid(t, wp, cp, sp, wm, cm, sm, x, y, z):
    """Affine maps and their time derivatives on a time grid.

    Returns ``(L, dL)`` each of shape (len(t), 4, 4). The derivative uses the
    polarization identity for homogeneous quadratic forms, which is exact.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ap, bp, dap, dbp = propagator_functions(t, wp, cp, sp)
    am, bm, dam, dbm = propagator_functions(t, wm, cm, sm)
    L = np.zeros((t.size, 4, 4))
    dL = np.zeros((t.size, 4, 4))
    L[:, 0, 0] = 1.0
    comps = map_components(ap, am, bp, bm, x, y, z)
    plus = map_components(ap + dap, am + dam, bp + dbp, bm + dbm, x, y, z)
    minus = map_components(ap - dap, am - dam, bp - dbp, bm - dbm, x, y, z)
    for key, val in comps.items():
        L[:, key[0], key[1]] = val
        dL[:, key[0], key[1]] = 0.5 * (plus[key] - minus[key])
    return L, dL


def max_product_concurrence(G, states):
    """For each stacked symmetric 4x4 ``G`` return max_k |p_k^T G p_k| and argmax k."""
    G = np.asarray(G, dtype=complex)
    states = np.asarray(states, dtype=complex)
    vals = np.abs(np.einsum("ki,tij,kj->tk", states, G, states, optimize=True))
    idx = np.argmax(vals, axis=1)
    return vals[np.arange(vals.shape[0]), idx], idx
