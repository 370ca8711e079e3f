"""Tiny exact univariate polynomial arithmetic over the rationals.

Polynomials are tuples of Fractions indexed by degree.  Everything the
region certification needs: ring operations, composition, derivative,
exact evaluation, and a float Horner for grid scans.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np

Poly = tuple  # tuple[Fraction, ...]


def as_fraction(v) -> Fraction:
    if isinstance(v, Rational):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v)  # exact binary value
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"cannot interpret {v!r} as an exact rational")


def poly(*coeffs) -> Poly:
    """Polynomial from low-order-first coefficients."""
    return trim(tuple(as_fraction(c) for c in coeffs))


def trim(p: Poly) -> Poly:
    i = len(p)
    while i > 1 and p[i - 1] == 0:
        i -= 1
    return tuple(p[:i])


def padd(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return trim(
        tuple(
            (p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0)
            for i in range(n)
        )
    )


def pscale(p: Poly, c) -> Poly:
    c = as_fraction(c)
    return trim(tuple(c * ci for ci in p))


def psub(p: Poly, q: Poly) -> Poly:
    return padd(p, pscale(q, -1))


def pmul(p: Poly, q: Poly) -> Poly:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return trim(tuple(out))


def pcompose(p: Poly, inner: Poly) -> Poly:
    """p(inner(x)) by Horner over the polynomial ring."""
    out: Poly = (p[-1],)
    for c in reversed(p[:-1]):
        out = padd(pmul(out, inner), (c,))
    return out


def pderiv(p: Poly) -> Poly:
    if len(p) == 1:
        return (Fraction(0),)
    return trim(tuple(Fraction(i) * p[i] for i in range(1, len(p))))


def peval(p: Poly, x):
    """Exact evaluation when x is rational; plain Horner otherwise."""
    if isinstance(x, (Rational, int)):
        x = Fraction(x)
    acc = p[-1]
    for c in reversed(p[:-1]):
        acc = acc * x + c
    return acc


def peval_float(p: Poly, x: np.ndarray) -> np.ndarray:
    acc = np.full_like(x, float(p[-1]), dtype=np.float64)
    for c in reversed(p[:-1]):
        acc = acc * x + float(c)
    return acc


def degree(p: Poly) -> int:
    return len(trim(p)) - 1


def coeff_strings(p: Poly) -> list[str]:
    return [str(c) for c in p]
