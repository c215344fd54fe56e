"""Exponential polynomials sum_k c_k exp(i (n_k+ w_+ + n_k- w_-) t).

Terms are keyed by the integer pair (n+, n-), so products and conjugates stay
exact and frequencies are only merged numerically at the end. The class
supports just enough arithmetic for ``map_components`` to run on it.
"""
from __future__ import annotations

import numpy as np

_ZERO = 1e-15


class TrigPoly:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for k, v in (terms or {}).items():
            if abs(v) > _ZERO:
                self.terms[tuple(k)] = complex(v)

    @classmethod
    def const(cls, c):
        return cls({(0, 0): c})

    @classmethod
    def alpha(cls, block, c):
        """cos(wt) - i c sin(wt) for block 0 (+) or 1 (-)."""
        k = (1, 0) if block == 0 else (0, 1)
        mk = (-k[0], -k[1])
        return cls({k: 0.5 * (1 - c), mk: 0.5 * (1 + c)})

    @classmethod
    def beta(cls, block, s):
        """s sin(wt) for block 0 (+) or 1 (-)."""
        k = (1, 0) if block == 0 else (0, 1)
        mk = (-k[0], -k[1])
        return cls({k: s / 2j, mk: -s / 2j})

    def _coerce(self, other):
        return other if isinstance(other, TrigPoly) else TrigPoly.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return TrigPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TrigPoly):
            return TrigPoly({k: v * other for k, v in self.terms.items()})
        out = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = (k1[0] + k2[0], k1[1] + k2[1])
                out[k] = out.get(k, 0) + v1 * v2
        return TrigPoly(out)

    __rmul__ = __mul__

    def conj(self):
        return TrigPoly({(-k[0], -k[1]): np.conj(v) for k, v in self.terms.items()})

    @property
    def real(self):
        return (self + self.conj()) * 0.5

    @property
    def imag(self):
        return (self - self.conj()) * (-0.5j)

    def __call__(self, t, omega_p, omega_m):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for (n1, n2), c in self.terms.items():
            out = out + c * np.exp(1j * (n1 * omega_p + n2 * omega_m) * t)
        return out

    def lines(self, omega_p, omega_m, tol=1e-9):
        """Merge terms with numerically equal frequency; returns sorted (nu, c) pairs."""
        merged = []
        for (n1, n2), c in sorted(self.terms.items()):
            nu = n1 * omega_p + n2 * omega_m
            for item in merged:
                if abs(item[0] - nu) <= tol * max(1.0, abs(nu)):
                    item[1] += c
                    break
            else:
                merged.append([nu, c])
        return sorted((float(nu), complex(c)) for nu, c in merged if abs(c) > 1e-14)

    def __repr__(self):
        return f"TrigPoly({self.terms!r})"
