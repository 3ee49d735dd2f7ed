"""Taylor coefficients of holomorphic maps by contour sampling.

The trapezoid rule on a polycircle is spectrally accurate for holomorphic
integrands, so Cauchy's formula gives derivatives to near machine precision
without symbolic work. Used as an independent oracle against the symbolic
derivatives elsewhere in the package.
"""
from __future__ import annotations

import itertools

import numpy as np


def taylor_coefficients(F, z0, order, radius=0.1, nodes=24):
    """Taylor coefficients of F about z0 up to total degree ``order``.

    ``F`` maps an ``(M, n)`` array of points to an ``(M, ...)`` array.
    Returns a dict from exponent tuples to coefficient arrays.
    """
    z0 = np.asarray(z0, dtype=complex).ravel()
    n = z0.size
    if nodes <= order:
        raise ValueError("need more nodes than the requested order")
    roots = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    grid = np.array(list(itertools.product(roots, repeat=n)))
    vals = np.asarray(F(z0[None, :] + grid))
    tail = vals.shape[1:]
    vals = vals.reshape((nodes,) * n + tail)
    spec = np.fft.fftn(vals, axes=tuple(range(n))) / nodes**n
    out = {}
    for k in itertools.product(range(order + 1), repeat=n):
        if sum(k) <= order:
            out[k] = spec[k] / radius ** sum(k)
    return out


def derivative(F, z0, direction, radius=0.1, nodes=24):
    """Holomorphic directional derivative d/dt F(z0 + t·direction) at t=0."""
    z0 = np.asarray(z0, dtype=complex).ravel()
    d = np.asarray(direction, dtype=complex).ravel()

    def G(t):
        return F(z0[None, :] + t[:, :1] * d[None, :])

    return taylor_coefficients(G, [0.0], 1, radius, nodes)[(1,)]


def jacobian(F, z0, radius=0.1, nodes=24):
    """Matrix of first partials of a vector-valued holomorphic F."""
    coeffs = taylor_coefficients(F, z0, 1, radius, nodes)
    n = len(np.asarray(z0).ravel())
    cols = []
    for i in range(n):
        k = tuple(1 if j == i else 0 for j in range(n))
        cols.append(coeffs[k])
    return np.stack(cols, axis=-1)
