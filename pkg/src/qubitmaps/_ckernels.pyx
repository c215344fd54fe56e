# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos

cnp.import_array()


cdef inline double abs2(double complex a) nogil:
    return a.real * a.real + a.imag * a.imag


cdef void _components(double complex ap, double complex am, double bp, double bm,
                      double x, double y, double z, double* out) noexcept nogil:
    # out is a row-major 4x4 block; entries not touched here stay as given
    cdef double complex A = ap * am
    cdef double B = bp * bm
    cdef double complex p = ap * bm + am * bp
    cdef double complex m = ap * bm - am * bp
    cdef double complex q = ap * bp + am * bm
    cdef double complex n = ap * bp - am * bm
    cdef double blk_p = abs2(ap) - bp * bp
    cdef double blk_m = abs2(am) - bm * bm
    out[12] = 0.5 * (blk_p - blk_m) * z
    out[5] = A.real - B
    out[6] = A.imag
    out[7] = p.real * x + m.imag * y
    out[9] = -A.imag
    out[10] = A.real + B
    out[11] = -p.imag * x + m.real * y
    out[13] = -q.real * x - n.imag * y
    out[14] = -q.imag * x + n.real * y
    out[15] = 0.5 * (blk_p + blk_m)


def map_grid(double[::1] t, double wp, double cp, double sp,
             double wm, double cm, double sm, double x, double y, double z):
    cdef Py_ssize_t nt = t.shape[0], i, k
    L_arr = np.zeros((nt, 4, 4))
    dL_arr = np.zeros((nt, 4, 4))
    cdef double[:, :, ::1] L = L_arr
    cdef double[:, :, ::1] dL = dL_arr
    cdef double cop, sip, com, sim
    cdef double complex ap, am, dap, dam
    cdef double bp, bm, dbp, dbm
    cdef double plus[16]
    cdef double minus[16]
    with nogil:
        for i in range(nt):
            cop = cos(wp * t[i]); sip = sin(wp * t[i])
            com = cos(wm * t[i]); sim = sin(wm * t[i])
            ap = cop - 1j * cp * sip
            am = com - 1j * cm * sim
            bp = sp * sip
            bm = sm * sim
            dap = -wp * sip - 1j * cp * wp * cop
            dam = -wm * sim - 1j * cm * wm * com
            dbp = sp * wp * cop
            dbm = sm * wm * com
            L[i, 0, 0] = 1.0
            _components(ap, am, bp, bm, x, y, z, &L[i, 0, 0])
            for k in range(16):
                plus[k] = 0.0
                minus[k] = 0.0
            _components(ap + dap, am + dam, bp + dbp, bm + dbm, x, y, z, plus)
            _components(ap - dap, am - dam, bp - dbp, bm - dbm, x, y, z, minus)
            for k in range(16):
                (&dL[i, 0, 0])[k] = 0.5 * (plus[k] - minus[k])
    return L_arr, dL_arr


def max_product_concurrence(G_in, states_in):
    # G is complex symmetric, so p^T G p only needs the 10 products p_i p_j (i <= j)
    G_c = np.ascontiguousarray(G_in, dtype=np.complex128)
    s_c = np.ascontiguousarray(states_in, dtype=np.complex128)
    cdef Py_ssize_t nt = G_c.shape[0], ns = s_c.shape[0], it, k, i, j, u
    gr_arr = np.empty((nt, 10))
    gi_arr = np.empty((nt, 10))
    pr_arr = np.empty((ns, 10))
    pi_arr = np.empty((ns, 10))
    u = 0
    for i in range(4):
        for j in range(i, 4):
            w = 1.0 if i == j else 2.0
            gr_arr[:, u] = w * G_c[:, i, j].real
            gi_arr[:, u] = w * G_c[:, i, j].imag
            pp = s_c[:, i] * s_c[:, j]
            pr_arr[:, u] = pp.real
            pi_arr[:, u] = pp.imag
            u += 1
    cdef double[:, ::1] gr = gr_arr
    cdef double[:, ::1] gi = gi_arr
    cdef double[:, ::1] pr = pr_arr
    cdef double[:, ::1] pim = pi_arr
    best_arr = np.full(nt, -1.0)
    idx_arr = np.zeros(nt, dtype=np.intp)
    cdef double[::1] best = best_arr
    cdef Py_ssize_t[::1] idx = idx_arr
    cdef double re, im, val
    with nogil:
        for it in range(nt):
            for k in range(ns):
                re = 0.0
                im = 0.0
                for u in range(10):
                    re = re + gr[it, u] * pr[k, u] - gi[it, u] * pim[k, u]
                    im = im + gr[it, u] * pim[k, u] + gi[it, u] * pr[k, u]
                val = re * re + im * im
                if val > best[it]:
                    best[it] = val
                    idx[it] = k
    return np.sqrt(best_arr), idx_arr
