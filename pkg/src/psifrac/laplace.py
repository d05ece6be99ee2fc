"""Laplace transform with respect to a function, its inverse, and convolution.

The transform factorises as ``L_Psi = L o Q^-1``: the forward transform of
``f`` is the classical transform of ``f o Psi^-1``, and the inverse is the
classical inverse evaluated at ``x = Psi(t)``.  Likewise the
``Psi``-convolution is the classical convolution of ``f o Psi^-1`` and
``g o Psi^-1`` evaluated at ``Psi(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special, stats

from .errors import (
    AbscissaViolation,
    ContourFailure,
    DomainMismatch,
    InvalidParameter,
    TransformIneligible,
    UnboundedGrowth,
    UnknownKind,
)
from .frac_operators import FracOrder
from .psi_kernel import PsiFunction, RealFunction, conjugate_out
from .quadrature import QuadratureSpec, convolution_integral, laplace_integral
from .special_functions import ml2, ml3

__all__ = [
    "TransformImage",
    "ExponentialOrder",
    "ContourSpec",
    "glt_forward",
    "glt_inverse",
    "psi_convolve",
    "reference_image",
    "reference_original",
    "estimate_exponential_order",
    "REFERENCE_KINDS",
]

REFERENCE_KINDS = (
    "power",
    "exp",
    "ml2",
    "ml3",
    "ml-kernel",
    "rl-integral-of",
    "rl-derivative-of",
    "caputo-derivative-of",
    "hilfer-derivative-of",
)


@dataclass(frozen=True)
class TransformImage:
    """Image ``F(s)`` analytic for ``Re s > abscissa``."""

    F: Callable
    abscissa: float
    label: str = "F"

    def __post_init__(self):
        if not np.isfinite(self.abscissa):
            raise InvalidParameter("abscissa must be finite")

    def __call__(self, s):
        return self.F(np.asarray(s, dtype=complex))


@dataclass(frozen=True)
class ExponentialOrder:
    """Certified bound ``|f(t)| <= M exp(c Psi(t))`` for ``t > T``."""

    c: float = 0.0
    M: float = 1.0
    T: float = 0.0

    def __post_init__(self):
        if not (self.M > 0 and self.T >= 0 and np.isfinite(self.c)):
            raise InvalidParameter("exponential order needs M > 0, T >= 0 and finite c")


@dataclass(frozen=True)
class ContourSpec:
    """Fixed Talbot contour controls.

    Attributes
    ----------
    nodes : int
        Number of contour nodes ``M``.
    shift : float
        Distance kept to the right of the image abscissa.
    imag_rtol : float
        Largest tolerated ``|Im| / |Re|`` of the contour sum.
    """

    nodes: int = 32
    shift: float = 0.5
    imag_rtol: float = 1e-6

    def __post_init__(self):
        if self.nodes < 4 or self.shift <= 0:
            raise InvalidParameter("contour needs nodes >= 4 and a positive shift")


def _require_eligible(psi):
    if not psi.zero_at_origin:
        raise TransformIneligible(f"{psi.name} does not satisfy Psi(0) = 0 on [0, b]")


# -- forward ------------------------------------------------------------------

def glt_forward(psi: PsiFunction, f: RealFunction, s, order: Optional[ExponentialOrder] = None,
                q: QuadratureSpec = QuadratureSpec()) -> complex:
    """``int_0^inf exp(-s Psi(t)) Psi'(t) f(t) dt``.

    Computed as the classical transform of ``f o Psi^-1`` truncated at the
    ``U`` where the exponential-order tail bound
    ``M exp(-(Re s - c) U) / (Re s - c)`` reaches ``q.atol``.

    Parameters
    ----------
    s : complex
    order : ExponentialOrder, optional
        Growth bound of ``f``; estimated from samples when omitted.

    Raises
    ------
    TransformIneligible
        If ``Psi(0) != 0``.
    AbscissaViolation
        If ``Re s <= order.c``.
    ToleranceNotMet
    """
    _require_eligible(psi)
    s = complex(s)
    if order is None:
        order = estimate_exponential_order(psi, f, float(psi.inverse(min(20.0, psi.range[1]))))
    gap = s.real - order.c
    if gap <= 0:
        raise AbscissaViolation(f"Re s = {s.real:g} is not right of the growth rate c = {order.c:g}")
    U = max(math.log(max(order.M / (q.atol * gap), math.e)) / gap, float(psi(order.T)))
    U = min(U, psi.range[1])
    scale = max(abs(s), 1.0, abs(order.c))
    panels = int(min(4000, max(q.panels, math.ceil(U * scale / 2.0) + 1)))
    g = conjugate_out(psi, f)
    return complex(laplace_integral(g, s, U, panels, q)[0])


# -- inverse ------------------------------------------------------------------

def _talbot(F, x, spec):
    """Fixed Talbot sum for ``f(x)``; returns the complex total and a term scale."""
    M = spec.nodes
    r = 2.0 * M / (5.0 * x)
    theta = np.arange(1, M) * np.pi / M
    cot = 1.0 / np.tan(theta)
    s = r * theta * (cot + 1j)
    sigma = theta + (theta * cot - 1.0) * cot
    with np.errstate(all="ignore"):
        Fr = complex(np.atleast_1d(F(np.array([r + 0j])))[0])
        up = np.exp(x * s) * F(s) * (1 + 1j * sigma)
        down = np.exp(x * np.conj(s)) * F(np.conj(s)) * (1 - 1j * sigma)
    terms = np.concatenate(([0.5 * Fr * math.exp(r * x)], 0.5 * up, 0.5 * down))
    total = (r / M) * np.sum(terms)
    scale = (r / M) * np.max(np.abs(terms))
    return total, scale


def glt_inverse(psi: PsiFunction, image: TransformImage, t, contour: ContourSpec = ContourSpec()):
    """Inverse transform evaluated at ``t`` (scalar or array).

    Uses the fixed Talbot contour in the classical variable ``x = Psi(t)``
    applied to ``F(s + sigma0)`` with ``sigma0 = abscissa + shift``, then
    multiplies by ``exp(sigma0 x)``.

    Raises
    ------
    ContourFailure
        Non-finite values, overflow, or an imaginary residue above
        ``contour.imag_rtol`` relative to the real part.
    """
    _require_eligible(psi)
    t_arr = np.asarray(t, dtype=float)
    psi.require(t_arr)
    X = np.atleast_1d(psi(t_arr)).astype(float)
    if np.any(X <= 0):
        raise DomainMismatch("inversion needs Psi(t) > 0")
    sigma0 = max(image.abscissa, 0.0) + contour.shift
    shifted = lambda s: image.F(s + sigma0)  # noqa: E731
    out = np.empty(X.shape)
    for i, x in enumerate(X):
        if sigma0 * x > 700:
            raise ContourFailure(f"exp({sigma0 * x:.3g}) overflows at Psi(t) = {x:g}")
        total, scale = _talbot(shifted, float(x), contour)
        if not np.isfinite(total):
            raise ContourFailure(f"contour sum is not finite at Psi(t) = {x:g}")
        if abs(total.imag) > contour.imag_rtol * abs(total.real) + 1e-13 * scale:
            raise ContourFailure(f"imaginary residue {total.imag:.3g} against real part {total.real:.3g}")
        out[i] = math.exp(sigma0 * x) * total.real
    return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)


# -- convolution --------------------------------------------------------------

def psi_convolve(psi: PsiFunction, f: RealFunction, g: RealFunction, t, q: QuadratureSpec = QuadratureSpec()):
    """``Psi``-convolution ``int_0^t f(Psi^-1(Psi(t)-Psi(tau))) g(tau) Psi'(tau) dtau``.

    Raises
    ------
    TransformIneligible, DomainMismatch
    """
    _require_eligible(psi)
    t_arr = np.asarray(t, dtype=float)
    psi.require(t_arr)
    F, G = conjugate_out(psi, f), conjugate_out(psi, g)
    X = np.atleast_1d(psi(t_arr))
    out = np.array([convolution_integral(F, G, float(x), q)[0] for x in X.ravel()])
    return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)


def convolution_function(psi: PsiFunction, f: RealFunction, g: RealFunction,
                         q: QuadratureSpec = QuadratureSpec()) -> RealFunction:
    """``t -> (f *_Psi g)(t)`` as a :class:`RealFunction`."""
    return RealFunction(lambda t: psi_convolve(psi, f, g, t, q), (), f"({f.label})*({g.label})", psi.domain)


# -- reference table ----------------------------------------------------------

def _pow(s, p):
    return np.power(s, p)


def reference_image(kind: str, **params) -> TransformImage:
    """Closed-form images of the transform table.

    Parameters
    ----------
    kind : str
        ``power`` (``Psi^mu``, params ``mu``), ``exp`` (``exp(a Psi)``,
        ``a``), ``ml2`` (``E_mu(lam Psi^mu)``, ``mu, lam``), ``ml-kernel``
        (``Psi^(mu-1) E_{mu,mu}(lam Psi^mu)``, ``mu, lam``), ``ml3``
        (``Psi^(nu-1) E^gamma_{mu,nu}(lam Psi^mu)``, ``mu, nu, gamma, lam``),
        or one of the operator kinds, which take ``base`` (a
        :class:`TransformImage`), ``mu`` and initial data:

        * ``rl-integral-of``: ``s^-mu F``;
        * ``rl-derivative-of``: ``s^mu F - sum_k s^(m-k-1) init[k]`` where
          ``init[k]`` is ``(d/dx)^(m-k-1) I^(m-mu) f (0)`` listed for
          ``k = 0..m-1``;
        * ``caputo-derivative-of``: ``s^mu F - sum_k s^(mu-k-1) init[k]`` with
          ``init[k]`` the ``k``-th ``Psi``-derivative at zero;
        * ``hilfer-derivative-of`` (``0 < mu < 1``, type ``nu``):
          ``s^mu F - s^(-nu(1-mu)) init[0]`` with ``init[0] =
          I^((1-nu)(1-mu)) f (0)``.

    Raises
    ------
    UnknownKind
    """
    if kind == "power":
        mu = float(params["mu"])
        return TransformImage(lambda s: special.gamma(mu + 1) / _pow(s, mu + 1), 0.0, f"Gamma({mu + 1:g})/s^{mu + 1:g}")
    if kind == "exp":
        a = float(params["a"])
        return TransformImage(lambda s: 1.0 / (s - a), a, f"1/(s-{a:g})")
    if kind in ("ml2", "ml-kernel", "ml3"):
        mu, lam = float(params["mu"]), float(params.get("lam", params.get("lambda")))
        nu = {"ml2": 1.0, "ml-kernel": mu}.get(kind, params.get("nu"))
        gam = 1.0 if kind != "ml3" else float(params["gamma"])
        nu = float(nu)
        absc = abs(lam) ** (1.0 / mu)
        return TransformImage(lambda s: _pow(s, mu * gam - nu) / _pow(_pow(s, mu) - lam, gam), absc,
                              f"s^{mu * gam - nu:g}/(s^{mu:g}-{lam:g})^{gam:g}")
    if kind in ("rl-integral-of", "rl-derivative-of", "caputo-derivative-of", "hilfer-derivative-of"):
        base: TransformImage = params["base"]
        order = params.get("order") or FracOrder(float(params["mu"]), params.get("nu"))
        mu, m = order.mu, order.m
        init: Sequence[float] = tuple(params.get("initial", ()))
        F = base.F
        if kind == "rl-integral-of":
            return TransformImage(lambda s: _pow(s, -mu) * F(s), base.abscissa, f"s^-{mu:g} {base.label}")
        if kind == "hilfer-derivative-of":
            if order.nu is None or not 0 < mu < 1:
                raise InvalidParameter("Hilfer image needs 0 < mu < 1 and a type nu")
            nu = order.nu
            b = init[0] if init else 0.0
            return TransformImage(lambda s: _pow(s, mu) * F(s) - b * _pow(s, -nu * (1 - mu)), base.abscissa,
                                  f"Hilfer({mu:g},{nu:g}) {base.label}")
        init = tuple(init) + (0.0,) * (m - len(init))
        if kind == "rl-derivative-of":
            def image(s):
                return _pow(s, mu) * F(s) - sum(init[k] * _pow(s, m - k - 1) for k in range(m))
        else:
            def image(s):
                return _pow(s, mu) * F(s) - sum(init[k] * _pow(s, mu - k - 1) for k in range(m))
        return TransformImage(image, base.abscissa, f"{kind}({mu:g}) {base.label}")
    raise UnknownKind(f"unknown image kind {kind!r}; expected one of {', '.join(REFERENCE_KINDS)}")


def reference_original(kind: str, psi: PsiFunction, **params) -> RealFunction:
    """Original functions matching the non-operator kinds of :func:`reference_image`."""
    P = psi.psi
    if kind == "power":
        mu = float(params["mu"])
        return RealFunction(lambda t: P(t) ** mu, label=f"Psi^{mu:g}")
    if kind == "exp":
        a = float(params["a"])
        return RealFunction(lambda t: np.exp(a * P(t)), label=f"exp({a:g} Psi)")
    mu, lam = float(params["mu"]), float(params.get("lam", params.get("lambda")))
    if kind == "ml2":
        return RealFunction(lambda t: ml2(mu, 1.0, lam * P(t) ** mu), label=f"E_{mu:g}({lam:g} Psi^{mu:g})")
    if kind == "ml-kernel":
        return RealFunction(lambda t: P(t) ** (mu - 1) * ml2(mu, mu, lam * P(t) ** mu), label="ML kernel")
    if kind == "ml3":
        nu, gam = float(params["nu"]), float(params["gamma"])
        return RealFunction(lambda t: P(t) ** (nu - 1) * ml3(mu, nu, gam, lam * P(t) ** mu), label="Prabhakar")
    raise UnknownKind(f"no closed-form original for {kind!r}")


# -- growth estimate ----------------------------------------------------------

def estimate_exponential_order(psi: PsiFunction, f: RealFunction, horizon: float, points: int = 200) -> ExponentialOrder:
    """Fit ``log|f|`` against ``Psi`` on a log-spaced grid up to ``horizon``.

    The rate ``c`` is the least-squares slope of the running maximum of
    ``log|f|`` over the second half of the grid (clipped at zero); ``M`` is
    then chosen so that every sample satisfies the bound.

    Raises
    ------
    UnboundedGrowth
        If the fitted slope keeps increasing across the grid, which
        indicates super-exponential growth in ``Psi``.
    """
    if not horizon > 0:
        raise InvalidParameter("horizon must be positive")
    a = psi.domain[0]
    lo = a + max(1e-3 * (horizon - a), 1e-6)
    t = np.unique(np.concatenate((np.geomspace(lo, horizon, points // 2), np.linspace(lo, horizon, points // 2))))
    x = np.asarray(psi(t), dtype=float)
    with np.errstate(all="ignore"):
        y = np.log(np.maximum(np.abs(np.asarray(f(t), dtype=float)), 1e-300))
    if not np.all(np.isfinite(y)):
        raise UnboundedGrowth("f is not finite on the sampling grid")
    env = np.maximum.accumulate(y)
    half = x >= x[-1] / 2
    slope_half = stats.linregress(x[half], env[half]).slope if half.sum() > 2 else 0.0
    if half.sum() > 3:
        # a quadratic fit over the second half exposes a rising rate
        c2, c1, _ = np.polyfit(x[half], env[half], 2)
        slope_mid, slope_end = c1 + c2 * x[-1], c1 + 2 * c2 * x[-1]
        if slope_end > 1.5 * max(slope_mid, 0.0) + 1.0:
            raise UnboundedGrowth(f"growth rate rises from {slope_mid:.3g} to {slope_end:.3g}")
    c = max(0.0, float(slope_half))
    M = float(np.exp(np.max(y - c * x))) * (1 + 1e-9)
    return ExponentialOrder(c=c, M=max(M, 1e-300), T=0.0)
