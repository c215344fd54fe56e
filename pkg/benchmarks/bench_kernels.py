"""Compiled vs numpy kernels: map grid evaluation and product-state concurrence screening.

The concurrence screen is a small dense contraction that numpy hands to BLAS,
so the library dispatches it to numpy on both backends; it is timed here to
keep that choice honest.

Run: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import math
import timeit

import numpy as np

from qubitmaps import _kernels_py as py
from qubitmaps.kernels import compiled_backend
from qubitmaps.two_qubit import BlockParams, _g_matrix, _product_states, propagator


def cases():
    b = BlockParams.from_angles(1.0, 0.6, 0.7, -0.3)
    cp, sp, cm, sm = b.signed_trig()
    t = np.linspace(0, 50, 20001)
    grid_args = (t, b.omega_p, cp, sp, b.omega_m, cm, sm, 0.3, -0.2, 0.5)
    rng = np.random.default_rng(0)
    ang = np.column_stack([np.arccos(rng.uniform(-1, 1, 1000)), rng.uniform(0, 2 * math.pi, 1000),
                           np.arccos(rng.uniform(-1, 1, 1000)), rng.uniform(0, 2 * math.pi, 1000)])
    states = _product_states(ang)
    G = np.array([_g_matrix(propagator(b, s)) for s in np.linspace(0, 5, 128)])
    return {"map_grid (20001 times)": ("map_grid", grid_args),
            "max_product_concurrence (128 x 1000)": ("max_product_concurrence", (G, states))}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled_backend is None:
        print("compiled kernels not built; only the numpy backend is timed")
    for label, (name, fargs) in cases().items():
        t_py = min(timeit.repeat(lambda: getattr(py, name)(*fargs), number=1, repeat=args.repeat))
        line = f"{label:40s} numpy {t_py * 1e3:9.2f} ms"
        if compiled_backend is not None:
            t_c = min(timeit.repeat(lambda: getattr(compiled_backend, name)(*fargs),
                                    number=1, repeat=args.repeat))
            out_py = getattr(py, name)(*fargs)
            out_c = getattr(compiled_backend, name)(*fargs)
            # compare the float outputs (maps / maxima), not argmax indices
            diff = float(np.max(np.abs(np.asarray(out_py[0]) - np.asarray(out_c[0]))))
            line += f"  cython {t_c * 1e3:9.2f} ms  speedup {t_py / t_c:6.1f}x  max diff {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
