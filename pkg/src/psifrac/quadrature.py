"""Composite Gauss rules for weakly singular integrals.

All integrals are computed in the substituted variable ``u = Psi(s)``, where
the only singularity is the algebraic kernel ``(X - u)^(beta-1)`` at the right
end and, possibly, an integrable power-type singularity of the integrand at
the left end.  The right end is handled exactly by a Gauss-Jacobi panel; the
left end by geometric grading.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import InvalidParameter, ToleranceNotMet

__all__ = ["QuadratureSpec", "fractional_integral", "convolution_integral", "laplace_integral"]


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature controls.

    Attributes
    ----------
    nodes : int
        Gauss nodes per panel. The error estimate compares against a rule
        with ``nodes + nodes // 2`` nodes on the same panels.
    panels : int
        Uniform panels before grading.
    atol, rtol : float
        Accept when the estimated error is at most ``atol + rtol*|value|``.
    levels : int
        Geometric refinement levels toward a singular endpoint.
    ratio : float
        Width ratio between successive graded panels.
    """

    nodes: int = 20
    panels: int = 4
    atol: float = 1e-12
    rtol: float = 1e-10
    levels: int = 40
    ratio: float = 0.15

    def __post_init__(self):
        if self.nodes < 2:
            raise InvalidParameter("nodes must be at least 2")
        if self.panels < 1:
            raise InvalidParameter("panels must be at least 1")
        if not (self.atol > 0 and self.rtol > 0):
            raise InvalidParameter("tolerances must be positive")
        if self.levels < 0 or not 0 < self.ratio < 1:
            raise InvalidParameter("grading needs levels >= 0 and 0 < ratio < 1")

    def accept(self, value, error):
        return error <= self.atol + self.rtol * abs(value)


@lru_cache(maxsize=64)
def _legendre(n):
    x, w = special.roots_legendre(n)
    return (x + 1) / 2, w / 2


@lru_cache(maxsize=256)
def _jacobi(n, alpha):
    """Rule for ``int_0^1 (1-w)^alpha h(w) dw``."""
    x, w = special.roots_jacobi(n, alpha, 0.0)
    return (x + 1) / 2, w / 2 ** (alpha + 1)


def _graded(a, b, levels, ratio, side):
    """Breakpoints of ``[a, b]`` refined geometrically toward ``side``."""
    frac = ratio ** np.arange(levels, 0, -1)
    if side == "left":
        return np.concatenate(([a], a + (b - a) * frac, [b]))
    return np.concatenate(([a], b - (b - a) * frac[::-1], [b]))


def _composite(edges, n):
    x, w = _legendre(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = a + (b - a) * x
    weights = (b - a) * w
    return nodes.ravel(), weights.ravel()


def _check(spec, fine, coarse, what):
    err = abs(fine - coarse)
    if not np.isfinite(fine) or not spec.accept(fine, err):
        raise ToleranceNotMet(f"{what}: estimated error {err:.3g} for value {fine:.6g}")
    return fine, err


def fractional_integral(h, lower, X, beta, spec=QuadratureSpec(), *, grade_left=True):
    """``(1/Gamma(beta)) int_lower^X (X-u)^(beta-1) h(u) du`` and an error estimate.

    Parameters
    ----------
    h : callable
        Vectorised integrand in the substituted variable.
    lower, X : float
        Limits, ``lower <= X``.
    beta : float
        Positive order.

    Returns
    -------
    value, error : float
    """
    length = X - lower
    if length <= 0:
        return 0.0, 0.0
    P = max(spec.panels, 2)
    cut = X - length / P
    left = np.linspace(lower, cut, P)
    if grade_left and spec.levels:
        left = np.concatenate((_graded(lower, left[1], spec.levels, spec.ratio, "left"), left[2:]))
    small = beta < 0.1

    def rule(n):
        u, w = _composite(left, n)
        total = np.dot(w * (X - u) ** (beta - 1.0), _eval(h, u))
        if small:
            # peel h(X) off the last panel so only a bounded quotient meets the weight
            hX = _eval(h, np.array([X]))[0]
            wj, Wj = _jacobi(n, beta)
            uj = cut + (X - cut) * wj
            q = (_eval(h, uj) - hX) / (X - uj)
            tail = (X - cut) ** (beta + 1) * np.dot(Wj, q)
            total += tail + hX * (X - cut) ** beta / beta
        else:
            wj, Wj = _jacobi(n, beta - 1.0)
            uj = cut + (X - cut) * wj
            total += (X - cut) ** beta * np.dot(Wj, _eval(h, uj))
        return total * special.rgamma(beta)

    coarse = rule(spec.nodes)
    fine = rule(spec.nodes + spec.nodes // 2)
    return _check(spec, fine, coarse, "fractional integral")


def convolution_integral(F, G, X, spec=QuadratureSpec()):
    """``int_0^X F(X-u) G(u) du`` graded toward both ends.

    The halves ``[0, X/2]`` and ``[X/2, X]`` are integrated in their own
    distance from the nearer end, so grading never loses resolution to
    rounding near ``X``.
    """
    if X <= 0:
        return 0.0, 0.0
    half = X / 2
    P = max(spec.panels // 2, 1)
    edges = np.linspace(0.0, half, P + 1)
    if spec.levels:
        edges = np.concatenate((_graded(0.0, edges[1], spec.levels, spec.ratio, "left"), edges[2:]))

    def rule(n):
        v, w = _composite(edges, n)
        near_zero = np.dot(w, _eval(F, X - v) * _eval(G, v))
        near_end = np.dot(w, _eval(F, v) * _eval(G, X - v))
        return near_zero + near_end

    coarse = rule(spec.nodes)
    fine = rule(spec.nodes + spec.nodes // 2)
    return _check(spec, fine, coarse, "convolution")


def laplace_integral(g, s, U, panels, spec=QuadratureSpec()):
    """``int_0^U e^{-s u} g(u) du`` on ``panels`` panels graded toward zero."""
    edges = np.linspace(0.0, U, panels + 1)
    if spec.levels:
        edges = np.concatenate((_graded(0.0, edges[1], spec.levels, spec.ratio, "left"), edges[2:]))

    def rule(n):
        u, w = _composite(edges, n)
        return np.dot(w * np.exp(-s * u), _eval(g, u))

    coarse = rule(spec.nodes)
    fine = rule(spec.nodes + spec.nodes // 2)
    err = abs(fine - coarse)
    if not np.isfinite(fine) or not spec.accept(abs(fine), err):
        raise ToleranceNotMet(f"Laplace integral: estimated error {err:.3g} for value {abs(fine):.6g}")
    return fine, err


def _eval(h, u):
    y = np.asarray(h(u), dtype=float)
    if y.shape != u.shape:
        y = np.broadcast_to(y, u.shape)
    return y
