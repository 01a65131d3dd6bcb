"""Differentiation and quadrature on doubly periodic N x N grids.

Grids sample the parameter square [0, 2pi)^2 at u_a = 2pi a / N, with
axis 0 = u and axis 1 = v.  Fields may carry trailing component axes
(scalars (N,N), one-forms (N,N,2), ambient vectors (N,N,6)).

Three schemes are supported: second- and fourth-order central
differences ("fd2", "fd4") and Fourier spectral differentiation
("spectral").  First-derivative stencils are antisymmetric circulants,
so summation by parts sum (D f) g = -sum f (D g) holds exactly on the
grid for every scheme; divergence-form quantities therefore integrate
to zero to rounding.
"""

from __future__ import annotations

import numpy as np

SCHEMES = ("fd2", "fd4", "spectral")
LENGTH = 2.0 * np.pi


def check_scheme(scheme):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def _shift(f, s, axis):
    """f shifted so output[i] = f[i+s] (periodic)."""
    return np.roll(f, -s, axis=axis)


def _spectral_deriv(f, axis, order):
    n = f.shape[axis]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if order % 2 == 1:
        k = k.copy()
        k[n // 2] = 0.0  # Nyquist mode has no well-defined odd derivative
    mult = (1j * k) ** order
    shape = [1] * f.ndim
    shape[axis] = n
    return np.fft.ifft(np.fft.fft(f, axis=axis) * mult.reshape(shape), axis=axis).real


def deriv(f, axis, scheme, order=1):
    """Periodic derivative of the given order (1 or 2) along axis 0 or 1."""
    check_scheme(scheme)
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    h = LENGTH / n
    if scheme == "spectral":
        return _spectral_deriv(f, axis, order)
    if order == 1:
        if scheme == "fd2":
            return (_shift(f, 1, axis) - _shift(f, -1, axis)) / (2 * h)
        return (
            -_shift(f, 2, axis)
            + 8 * _shift(f, 1, axis)
            - 8 * _shift(f, -1, axis)
            + _shift(f, -2, axis)
        ) / (12 * h)
    if order == 2:
        if scheme == "fd2":
            return (_shift(f, 1, axis) - 2 * f + _shift(f, -1, axis)) / h**2
        return (
            -_shift(f, 2, axis)
            + 16 * _shift(f, 1, axis)
            - 30 * f
            + 16 * _shift(f, -1, axis)
            - _shift(f, -2, axis)
        ) / (12 * h**2)
    raise ValueError(f"unsupported derivative order {order}")


def deriv_mixed(f, scheme):
    """d^2 f / du dv as composition of first derivatives (order-preserving)."""
    return deriv(deriv(f, 0, scheme), 1, scheme)


def grid_nodes(n):
    """Node coordinates (U, V), each (n, n), u-major."""
    t = LENGTH * np.arange(n) / n
    return np.meshgrid(t, t, indexing="ij")


def cell_area(n):
    return (LENGTH / n) ** 2


def trapezoid(f, n=None):
    """Periodic trapezoid rule = uniform weight sum (spectrally accurate)."""
    f = np.asarray(f, dtype=float)
    if n is None:
        n = f.shape[0]
    return float(np.sum(f) * cell_area(n))


def fit_convergence_order(ns, residuals):
    """Least-squares slope of log(residual) against log(1/N).

    Returns the fitted order p such that residual ~ C N^-p.
    """
    ns = np.asarray(ns, dtype=float)
    res = np.asarray(residuals, dtype=float)
    if np.any(res <= 0):
        raise ValueError("residuals must be positive for an order fit")
    slope = np.polyfit(np.log(ns), np.log(res), 1)[0]
    return float(-slope)
