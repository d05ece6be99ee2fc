"""Fractional integrals and derivatives with respect to a function.

All operators are evaluated in the substituted variable ``x = Psi(t)``: with
``g = f o Psi^-1`` and ``A = Psi(a)``,

* ``I^mu_Psi f(t) = I^mu g(Psi(t))`` (classical Riemann-Liouville integral from ``A``),
* ``D^mu_Psi f(t) = (d/dx)^m I^(m-mu) g(Psi(t))``,
* ``C D^mu_Psi f(t) = I^(m-mu) g^(m)(Psi(t))``,
* ``D^(mu,nu)_Psi f(t) = I^(nu(1-mu)) d/dx I^((1-nu)(1-mu)) g(Psi(t))``.

Working in ``x`` means ``Psi'`` is never evaluated, so substitutions with an
infinite slope at the origin (``sqrt``) need no special care.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .errors import DomainMismatch, InvalidParameter, NeedsSmoothness
from .psi_kernel import PsiFunction, RealFunction, conjugate_out
from .quadrature import QuadratureSpec, fractional_integral

__all__ = [
    "FracOrder",
    "QuadratureSpec",
    "psi_integral",
    "psi_rl_derivative",
    "psi_caputo_derivative",
    "psi_hilfer_derivative",
]

_MAX_DERIVATIVE_ORDER = 2.0
_FD_RTOL = 1e-6


@dataclass(frozen=True)
class FracOrder:
    """Order ``mu`` and, for Hilfer derivatives, type ``nu``.

    ``m = floor(mu) + 1`` is derived.
    """

    mu: float
    nu: Optional[float] = None
    m: int = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise InvalidParameter(f"order must be positive, got {self.mu}")
        if self.nu is not None and not 0.0 <= self.nu <= 1.0:
            raise InvalidParameter(f"type must lie in [0, 1], got {self.nu}")
        object.__setattr__(self, "m", int(math.floor(self.mu)) + 1)


def _prepare(psi, f, a, t):
    psi.require(a)
    t_arr = np.asarray(t, dtype=float)
    psi.require(t_arr)
    if np.any(t_arr < a):
        raise DomainMismatch(f"evaluation point below the base point a = {a}")
    return conjugate_out(psi, f), float(psi(a)), t_arr


def _map(fn, t_arr, psi):
    X = np.atleast_1d(psi(t_arr))
    out = np.array([fn(float(x)) for x in X.ravel()]).reshape(X.shape)
    return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)


def _power(c, A, X, e):
    """``c (X-A)^e / Gamma(e+1)`` with ``1/Gamma(pole) = 0``."""
    if c == 0:
        return 0.0
    r = special.rgamma(e + 1.0)
    if r == 0:
        return 0.0
    return c * (X - A) ** e * r


def _richardson(phi, X, A, k):
    """``k``-th derivative (k = 1 or 2) of ``phi`` at ``X`` by central differences
    with two Richardson levels.  The step stays inside ``(A, inf)``."""
    h = (1e-3 if k == 1 else 1e-2) * max(1.0, abs(X))
    h = min(h, (X - A) / 4.0)
    if h <= 0:
        raise DomainMismatch("derivative requested at the base point")

    def central(step):
        if k == 1:
            return (phi(X + step) - phi(X - step)) / (2 * step)
        return (phi(X + step) - 2 * phi(X) + phi(X - step)) / step ** 2

    d = [central(h / 2 ** i) for i in range(3)]
    r1 = [(4 * d[i + 1] - d[i]) / 3 for i in range(2)]
    r2 = (16 * r1[1] - r1[0]) / 15
    err = abs(r2 - r1[1])
    if not np.isfinite(r2) or err > _FD_RTOL * max(1.0, abs(r2)):
        raise NeedsSmoothness(f"finite differences did not settle (change {err:.3g})")
    return r2


def _check_derivative_order(order):
    if order.mu >= _MAX_DERIVATIVE_ORDER:
        raise InvalidParameter(f"derivatives are supported for 0 < mu < 2, got {order.mu}")


def psi_integral(psi: PsiFunction, order: FracOrder, f: RealFunction, a: float, t, q=QuadratureSpec()):
    """Fractional integral of ``f`` with respect to ``Psi``.

    .. math:: I^{\\mu}_{a+;\\Psi} f(t) = \\frac{1}{\\Gamma(\\mu)}
       \\int_a^t \\Psi'(s) (\\Psi(t)-\\Psi(s))^{\\mu-1} f(s)\\, ds

    Parameters
    ----------
    psi : PsiFunction
    order : FracOrder
        Any ``mu > 0``.
    f : RealFunction
    a : float
        Base point inside ``psi.domain``.
    t : float or array_like
        Evaluation point(s), ``t >= a``.
    q : QuadratureSpec, optional

    Returns
    -------
    float or ndarray

    Raises
    ------
    DomainMismatch
        If ``a`` or ``t`` fall outside the domain, or ``t < a``.
    ToleranceNotMet
        If the quadrature error estimate exceeds the tolerance.
    """
    g, A, t_arr = _prepare(psi, f, a, t)
    return _map(lambda X: fractional_integral(g, A, X, order.mu, q)[0], t_arr, psi)


def _rl_in_x(g, A, X, mu, q):
    """Riemann-Liouville derivative of ``g`` at ``X`` in the classical variable."""
    m = int(math.floor(mu)) + 1
    alpha = m - mu
    if g.order >= m:
        total = fractional_integral(g.derivative(m), A, X, alpha, q)[0]
        for k in range(m):
            total += _power(float(g.derivative(k)(A)), A, X, alpha - m + k)
        return total
    return _richardson(lambda x: fractional_integral(g, A, x, alpha, q)[0], X, A, m)


def _initial_terms(g, A, X, mu):
    """``sum_k g^(k)(A) (X-A)^(k-mu) / Gamma(k-mu+1)`` for ``k < m``."""
    m = int(math.floor(mu)) + 1
    total = 0.0
    for k in range(m):
        if k == 0:
            gk = float(g(A))
        elif g.order >= k:
            gk = float(g.derivative(k)(A))
        else:
            gk = _one_sided_derivative(g, A)
        total += _power(gk, A, X, k - mu)
    return total


def _one_sided_derivative(g, A):
    h = 1e-3 * max(1.0, abs(A))
    # second-order forward differences with one Richardson step
    d = [(-3 * g(A) + 4 * g(A + s) - g(A + 2 * s)) / (2 * s) for s in (h, h / 2)]
    return (4 * d[1] - d[0]) / 3


def psi_rl_derivative(psi: PsiFunction, order: FracOrder, f: RealFunction, a: float, t, q=QuadratureSpec()):
    """Riemann-Liouville derivative with respect to ``Psi``, ``0 < mu < 2``.

    When ``f`` carries ``m`` derivatives the outer derivative is taken under
    the integral sign; otherwise by Richardson-extrapolated central
    differences in ``x = Psi(t)`` (raising
    :class:`~psifrac.errors.NeedsSmoothness` if the extrapolation does not
    settle).
    """
    _check_derivative_order(order)
    g, A, t_arr = _prepare(psi, f, a, t)
    return _map(lambda X: _rl_in_x(g, A, X, order.mu, q), t_arr, psi)


def psi_caputo_derivative(psi: PsiFunction, order: FracOrder, f: RealFunction, a: float, t, q=QuadratureSpec()):
    """Caputo derivative with respect to ``Psi``, ``0 < mu < 2``.

    Uses ``I^(m-mu)`` of the ``m``-th ``Psi``-derivative when available and
    otherwise the Riemann-Liouville value minus its initial terms.
    """
    _check_derivative_order(order)
    g, A, t_arr = _prepare(psi, f, a, t)
    m = order.m
    alpha = m - order.mu

    def at(X):
        if g.order >= m:
            return fractional_integral(g.derivative(m), A, X, alpha, q)[0]
        return _rl_in_x(g, A, X, order.mu, q) - _initial_terms(g, A, X, order.mu)

    return _map(at, t_arr, psi)


def psi_hilfer_derivative(psi: PsiFunction, order: FracOrder, f: RealFunction, a: float, t,
                          q=QuadratureSpec(), *, initial_value: Optional[float] = None):
    """Hilfer derivative of order ``0 < mu < 1`` and type ``0 <= nu <= 1``.

    Evaluated through the identity

    .. math:: D^{\\mu,\\nu} g = D^{\\mu} g - \\phi(A^+)
       \\frac{(x-A)^{\\nu(1-\\mu)-1}}{\\Gamma(\\nu(1-\\mu))},
       \\qquad \\phi = I^{(1-\\nu)(1-\\mu)} g,

    which follows from integrating the inner derivative by parts.

    Parameters
    ----------
    initial_value : float, optional
        ``phi(A+)``, the weighted initial value. When omitted it is ``f(a)``
        for ``nu = 1`` and zero otherwise, provided ``f(a)`` is finite; if
        ``f`` is singular at ``a`` the nested definition is evaluated
        literally instead.
    """
    if order.nu is None:
        raise InvalidParameter("Hilfer derivative needs a type nu")
    if not 0 < order.mu < 1:
        raise InvalidParameter(f"Hilfer derivative needs 0 < mu < 1, got {order.mu}")
    mu, nu = order.mu, order.nu
    g, A, t_arr = _prepare(psi, f, a, t)
    beta = (1 - nu) * (1 - mu)
    outer = nu * (1 - mu)
    phi0 = initial_value
    nested = False
    if phi0 is None:
        with np.errstate(all="ignore"):
            ga = float(g(A))
        if np.isfinite(ga):
            phi0 = ga if beta == 0 else 0.0
        else:
            nested = True

    def at(X):
        if nested:
            return _hilfer_nested(g, A, X, beta, outer, q)
        return _rl_in_x(g, A, X, mu, q) - _power(phi0, A, X, outer - 1.0)

    return _map(at, t_arr, psi)


def _hilfer_nested(g, A, X, beta, outer, q):
    """Literal ``I^outer d/dx I^beta g``; slow, used only for singular ``g``."""
    inner_q = QuadratureSpec(nodes=q.nodes, panels=q.panels, atol=q.atol, rtol=q.rtol, levels=20)

    def inner(u):
        u = np.atleast_1d(u)
        return np.array([_richardson(lambda x: fractional_integral(g, A, x, beta, inner_q)[0], float(x), A, 1)
                         if beta > 0 else float(g.derivative(1)(x)) if g.order else
                         _richardson(lambda y: float(g(y)), float(x), A, 1) for x in u])

    if outer == 0:
        return float(inner(X)[0])
    return fractional_integral(inner, A, X, outer, inner_q)[0]
