"""Substitution functions and the conjugation operator.

Every operator in the package is written as ``Q o (classical operator) o Q^-1``
with ``(Q f)(t) = f(Psi(t))``.  This module holds the two objects that make
that possible: :class:`PsiFunction` and :class:`RealFunction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import DomainMismatch, InvalidParameter, UnknownKind

__all__ = [
    "PsiFunction",
    "RealFunction",
    "conjugate_in",
    "conjugate_out",
    "builtin_psi",
    "BUILTIN_KINDS",
]

BUILTIN_KINDS = ("identity", "power", "sqrt", "square", "log1p", "shifted-log")

_SCAN_POINTS = 1000


def _as_array(y, shape):
    y = np.asarray(y, dtype=float)
    if y.shape != shape:
        y = np.broadcast_to(y, shape).copy()
    return y


def _scan_grid(a, b, n=_SCAN_POINTS):
    """Interior sample points of ``[a, b]``; infinite ``b`` is sampled log-wise."""
    if math.isinf(b):
        lo = a + 1e-6 * max(1.0, abs(a))
        return np.unique(np.concatenate((np.linspace(lo, a + 10.0, n // 2), a + np.geomspace(10.0, 1e4, n // 2))))
    h = b - a
    return np.linspace(a + 1e-6 * h, b - 1e-6 * h, n)


@dataclass(frozen=True)
class PsiFunction:
    """Strictly increasing substitution ``Psi`` on ``[a, b]``.

    Parameters
    ----------
    psi, dpsi : callable
        ``Psi`` and ``Psi'``, vectorised over numpy arrays.
    inv : callable or None
        ``Psi^-1``. When omitted a bracketing root-finder is used.
    domain : tuple of float
        ``(a, b)`` with ``b`` possibly ``inf``.
    d2psi : callable, optional
        ``Psi''``; enables second-derivative chain rules.
    name : str
        Label used in reports and CSV metadata.
    validate : bool
        Run the monotonicity, positivity and inverse audits on construction.

    Attributes
    ----------
    zero_at_origin : bool
        True when ``a == 0`` and ``Psi(0) == 0``; required by the transform
        and convolution routines.
    """

    psi: Callable
    dpsi: Callable
    inv: Optional[Callable] = None
    domain: tuple = (0.0, math.inf)
    d2psi: Optional[Callable] = None
    name: str = "custom"
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        a, b = (float(v) for v in self.domain)
        if not (a < b) or math.isinf(a):
            raise InvalidParameter(f"domain must be [a, b) with finite a < b, got {self.domain}")
        object.__setattr__(self, "domain", (a, b))
        if self.inv is None:
            object.__setattr__(self, "inv", self._root_inverse)
        if self.validate:
            self.audit()

    # -- evaluation ------------------------------------------------------------
    def __call__(self, t):
        return self.value(t)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = _as_array(self.psi(t), t.shape)
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = _as_array(self.dpsi(t), t.shape)
        return float(out) if out.ndim == 0 else out

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        out = _as_array(self.inv(u), u.shape)
        return float(out) if out.ndim == 0 else out

    @property
    def zero_at_origin(self) -> bool:
        a = self.domain[0]
        return a == 0.0 and abs(float(self.psi(np.asarray(0.0)))) <= 1e-14

    @property
    def range(self):
        a, b = self.domain
        hi = math.inf if math.isinf(b) else float(self.psi(np.asarray(b)))
        return float(self.psi(np.asarray(a))), hi

    def contains(self, t) -> bool:
        a, b = self.domain
        t = np.asarray(t, dtype=float)
        return bool(np.all((t >= a) & (t <= b)))

    def require(self, *ts):
        for t in ts:
            if not self.contains(t):
                raise DomainMismatch(f"t = {t} outside the domain {self.domain} of {self.name}")

    # -- audits ----------------------------------------------------------------
    def audit(self):
        """Check monotonicity, positivity of ``Psi'`` and the inverse round trip."""
        a, b = self.domain
        t = _scan_grid(a, b)
        with np.errstate(all="ignore"):
            p = _as_array(self.psi(t), t.shape)
            d = _as_array(self.dpsi(t), t.shape)
        if not np.all(np.isfinite(p)) or np.any(np.diff(p) <= 0):
            raise InvalidParameter(f"{self.name}: Psi is not strictly increasing on {self.domain}")
        if not np.all(d > 0):
            raise InvalidParameter(f"{self.name}: Psi' is not positive on {self.domain}")
        back = _as_array(self.inv(p), t.shape)
        if np.any(np.abs(back - t) > 1e-10 * np.maximum(1.0, np.abs(t))):
            raise InvalidParameter(f"{self.name}: inverse does not round-trip to 1e-10")

    def _root_inverse(self, u):
        u = np.asarray(u, dtype=float)
        a, b = self.domain
        out = np.empty(u.shape)
        for idx, target in np.ndenumerate(u):
            out[idx] = self._solve(target, a, b)
        return out

    def _solve(self, target, a, b):
        def g(t):
            return float(self.psi(np.asarray(t))) - target

        lo = a
        if g(lo) == 0:
            return lo
        hi = b
        if math.isinf(b):
            hi = a + 1.0
            while g(hi) < 0:
                hi = a + 2 * (hi - a)
                if hi > 1e300:
                    raise DomainMismatch(f"{target} is outside the range of {self.name}")
        if g(lo) > 0 or g(hi) < 0:
            raise DomainMismatch(f"{target} is outside the range of {self.name}")
        # brentq combines bisection with secant/inverse-quadratic steps
        return optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)


@dataclass(frozen=True)
class RealFunction:
    """Real function of one real variable, optionally with analytic derivatives.

    Parameters
    ----------
    f : callable
        Vectorised callable. A scalar return value is broadcast.
    derivatives : sequence of callable
        ``(f', f'', ...)`` when known.
    label : str
    domain : tuple of float
        Interval on which ``f`` may be evaluated.
    breakpoints : sequence of float
        Points where ``f`` or a derivative jumps; quadratures split there.
    """

    f: Callable
    derivatives: Sequence[Callable] = ()
    label: str = "f"
    domain: tuple = (-math.inf, math.inf)
    breakpoints: Sequence[float] = ()

    def __post_init__(self):
        object.__setattr__(self, "derivatives", tuple(self.derivatives))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = _as_array(self.f(x), x.shape)
        return float(out) if out.ndim == 0 else out

    def derivative(self, k: int):
        """Callable for the ``k``-th derivative (``k = 0`` is ``f`` itself) or None."""
        if k == 0:
            return self
        if k <= len(self.derivatives):
            d = self.derivatives[k - 1]
            return RealFunction(d, self.derivatives[k:], f"{self.label}^({k})", self.domain)
        return None

    @property
    def order(self) -> int:
        return len(self.derivatives)

    def verify_derivatives(self, points, rtol=1e-5):
        """Compare each supplied derivative with central differences of its predecessor.

        Returns
        -------
        float
            Largest relative discrepancy.

        Raises
        ------
        InvalidParameter
            If any discrepancy exceeds ``rtol``.
        """
        x = np.asarray(points, dtype=float)
        chain = [self.f, *self.derivatives]
        worst = 0.0
        for lower, upper in zip(chain, chain[1:]):
            h = 1e-4 * np.maximum(1.0, np.abs(x))
            fd = (_as_array(lower(x + h), x.shape) - _as_array(lower(x - h), x.shape)) / (2 * h)
            exact = _as_array(upper(x), x.shape)
            rel = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
            worst = max(worst, float(np.max(rel)))
        if worst > rtol:
            raise InvalidParameter(f"{self.label}: derivative mismatch {worst:.3g} > {rtol:g}")
        return worst


def _compose(outer, inner):
    return lambda t: outer(inner(t))


def conjugate_in(psi: PsiFunction, f: RealFunction) -> RealFunction:
    """``t -> f(Psi(t))``, carrying up to two derivatives through the chain rule."""
    lo, hi = psi.range
    flo, fhi = f.domain
    if lo < flo or hi > fhi:
        raise DomainMismatch(f"{f.label} is not defined on the range {psi.range} of {psi.name}")
    P, dP, d2P = psi.psi, psi.dpsi, psi.d2psi
    derivs = []
    if f.order >= 1:
        f1 = f.derivatives[0]
        derivs.append(lambda t: f1(P(t)) * dP(t))
        if f.order >= 2 and d2P is not None:
            f2 = f.derivatives[1]
            derivs.append(lambda t: f2(P(t)) * dP(t) ** 2 + f1(P(t)) * d2P(t))
    return RealFunction(_compose(f.f, P), derivs, f"{f.label}∘{psi.name}", psi.domain)


def conjugate_out(psi: PsiFunction, f: RealFunction) -> RealFunction:
    """``u -> f(Psi^-1(u))``, carrying up to two derivatives through the chain rule."""
    a, b = psi.domain
    flo, fhi = f.domain
    if a < flo or b > fhi:
        raise DomainMismatch(f"{f.label} is not defined on the domain {psi.domain} of {psi.name}")
    inv, dP, d2P = psi.inv, psi.dpsi, psi.d2psi
    derivs = []
    if f.order >= 1:
        f1 = f.derivatives[0]

        def g1(u):
            s = inv(u)
            return f1(s) / dP(s)

        derivs.append(g1)
        if f.order >= 2 and d2P is not None:
            f2 = f.derivatives[1]

            def g2(u):
                s = inv(u)
                d = dP(s)
                return (f2(s) * d - f1(s) * d2P(s)) / d ** 3

            derivs.append(g2)
    return RealFunction(_compose(f.f, inv), derivs, f"{f.label}∘{psi.name}⁻¹", psi.range)


def builtin_psi(kind: str, parameter: Optional[float] = None) -> PsiFunction:
    """Construct one of the standard substitutions.

    Parameters
    ----------
    kind : {"identity", "power", "sqrt", "square", "log1p", "shifted-log"}
        ``power`` is ``t**p`` (``parameter = p > 0``); ``shifted-log`` is
        ``log t`` on ``[a, inf)`` with ``parameter = a > 0`` (default 1).

    Raises
    ------
    UnknownKind, InvalidParameter
    """
    if kind == "identity":
        return PsiFunction(lambda t: t * 1.0, lambda t: np.ones_like(t), lambda u: u * 1.0,
                           (0.0, math.inf), lambda t: np.zeros_like(t), "identity")
    if kind in ("power", "sqrt", "square"):
        p = {"sqrt": 0.5, "square": 2.0}.get(kind, parameter)
        if p is None or not np.isfinite(p) or p <= 0:
            raise InvalidParameter(f"power needs a positive exponent, got {parameter}")
        p = float(p)
        if p == 1.0:
            return builtin_psi("identity")
        name = kind if kind != "power" else f"power:{p:g}"
        if p == 0.5:
            return PsiFunction(np.sqrt, lambda t: 0.5 / np.sqrt(t), np.square, (0.0, math.inf),
                               lambda t: -0.25 * t ** -1.5, name)
        if p == 2.0:
            return PsiFunction(np.square, lambda t: 2.0 * t, np.sqrt, (0.0, math.inf),
                               lambda t: np.full_like(t, 2.0), name)
        return PsiFunction(lambda t: t ** p, lambda t: p * t ** (p - 1), lambda u: u ** (1.0 / p),
                           (0.0, math.inf), lambda t: p * (p - 1) * t ** (p - 2), name)
    if kind == "log1p":
        return PsiFunction(np.log1p, lambda t: 1.0 / (1.0 + t), np.expm1, (0.0, math.inf),
                           lambda t: -1.0 / (1.0 + t) ** 2, "log1p")
    if kind == "shifted-log":
        a = 1.0 if parameter is None else float(parameter)
        if not np.isfinite(a) or a <= 0:
            raise InvalidParameter(f"shifted-log needs a positive left end, got {parameter}")
        return PsiFunction(np.log, lambda t: 1.0 / t, np.exp, (a, math.inf),
                           lambda t: -1.0 / t ** 2, f"shifted-log:{a:g}")
    raise UnknownKind(f"unknown Psi kind {kind!r}; expected one of {', '.join(BUILTIN_KINDS)}")
