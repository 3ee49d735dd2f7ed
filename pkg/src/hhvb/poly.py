"""Vector-valued polynomials in n complex variables."""
from __future__ import annotations

import itertools
from math import comb

import numpy as np


def monomials(n, degree):
    """All exponent tuples of total degree exactly ``degree``, in a fixed order."""
    if n == 1:
        return [(degree,)]
    out = []
    for first in range(degree, -1, -1):
        for rest in monomials(n - 1, degree - first):
            out.append((first,) + rest)
    return out


def monomials_upto(n, degree):
    return [m for d in range(degree + 1) for m in monomials(n, d)]


class Poly:
    """Polynomial with coefficients in C^dim, stored as {exponent: vector}."""

    def __init__(self, n, dim, terms=None):
        self.n = n
        self.dim = dim
        self.terms = {}
        for k, v in (terms or {}).items():
            v = np.asarray(v, dtype=complex).reshape(dim)
            if np.any(v != 0):
                self.terms[tuple(k)] = v

    @classmethod
    def random(cls, n, dim, degree, rng):
        terms = {m: rng.normal(size=dim) + 1j * rng.normal(size=dim)
                 for m in monomials_upto(n, degree)}
        return cls(n, dim, terms)

    def copy(self):
        return Poly(self.n, self.dim, {k: v.copy() for k, v in self.terms.items()})

    @property
    def degree(self):
        return max((sum(k) for k in self.terms), default=-1)

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return Poly(self.n, self.dim, out)

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, c):
        return Poly(self.n, self.dim, {k: c * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def map(self, M, dim=None):
        """Apply a linear map to every coefficient."""
        M = np.asarray(M)
        return Poly(self.n, M.shape[0] if dim is None else dim,
                    {k: M @ v for k, v in self.terms.items()})

    def deriv(self, i):
        out = {}
        for k, v in self.terms.items():
            if k[i] > 0:
                kk = list(k)
                kk[i] -= 1
                out[tuple(kk)] = k[i] * v
        return Poly(self.n, self.dim, out)

    def times_variable(self, i):
        out = {}
        for k, v in self.terms.items():
            kk = list(k)
            kk[i] += 1
            out[tuple(kk)] = v
        return Poly(self.n, self.dim, out)

    def __call__(self, Z):
        """Evaluate at the rows of Z (shape (M, n)) or at a single point."""
        Z = np.asarray(Z, dtype=complex)
        single = Z.ndim == 1
        Z = np.atleast_2d(Z)
        out = np.zeros((Z.shape[0], self.dim), dtype=complex)
        for k, v in self.terms.items():
            out += np.prod(Z ** np.array(k), axis=1)[:, None] * v[None, :]
        return out[0] if single else out

    def max_abs_diff(self, other):
        keys = set(self.terms) | set(other.terms)
        zero = np.zeros(self.dim)
        return max((np.abs(self.terms.get(k, zero) - other.terms.get(k, zero)).max()
                    for k in keys), default=0.0)

    def shifted(self, z0):
        """The polynomial ζ ↦ self(z0 + ζ)."""
        z0 = np.asarray(z0, dtype=complex)
        out = {}
        for k, v in self.terms.items():
            ranges = [range(e + 1) for e in k]
            for j in itertools.product(*ranges):
                c = 1.0 + 0j
                for e, jj, a in zip(k, j, z0):
                    c *= comb(e, jj) * a ** (e - jj)
                out[j] = out.get(j, 0) + c * v
        return Poly(self.n, self.dim, out)

