"""Modified Bessel functions of the first kind, orders 0 and 1.

Both are returned exponentially scaled, ``e^{-x} I_nu(x)``, so large
arguments do not overflow. A power series covers ``x < 15`` and the
Hankel asymptotic expansion covers the rest.
"""

import math

import numpy as np

SERIES_LIMIT = 15.0


def _series(x: float, nu: int) -> float:
    # sum_k (x/2)^{2k+nu} / (k! (k+nu)!), all terms positive
    h = 0.5 * x
    term = h**nu / math.factorial(nu)
    total = term
    q = h * h
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if term <= 1e-17 * total:
            break
    return total * math.exp(-x)


def _asymptotic(x: float, nu: int) -> float:
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-17 * abs(total):
            if abs(nxt) < abs(term):
                total += nxt
            break
        term = nxt
        total += term
    return total / math.sqrt(2.0 * math.pi * x)


def _scaled(x, nu):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("only nonnegative arguments are supported")
    flat = [(_series(v, nu) if v < SERIES_LIMIT else _asymptotic(v, nu)) for v in x.ravel()]
    out = np.array(flat, dtype=float).reshape(x.shape)
    return out if out.ndim else float(out)


def i0e(x):
    """``exp(-x) * I0(x)`` for ``x >= 0``."""
    return _scaled(x, 0)


def i1e(x):
    """``exp(-x) * I1(x)`` for ``x >= 0``."""
    return _scaled(x, 1)


def bessel_ratio(x):
    """``A(x) = I1(x) / I0(x)``, the mean resultant length of a von Mises law."""
    return np.asarray(i1e(x)) / np.asarray(i0e(x)) if np.ndim(x) else i1e(x) / i0e(x)


def log_i0(x):
    return np.log(i0e(x)) + np.asarray(x, dtype=float)
