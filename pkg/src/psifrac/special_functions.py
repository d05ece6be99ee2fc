"""Mittag-Leffler, Prabhakar and Wright functions on the real line.

Every evaluator is vectorised over ``z`` and returns a float for scalar input.
Evaluation proceeds through three schemes, each used only when it can certify
the requested accuracy:

1. the defining power series in double precision, with terms formed in log
   space and a rounding-error estimate that accounts for cancellation;
2. the same series in ``mpmath`` with the working precision raised to cover
   the largest term;
3. for negative arguments, a real-axis integral obtained by collapsing the
   Hankel contour of the Laplace inversion onto the branch cut.

If none applies an :class:`~psifrac.errors.AccuracyLoss` is raised.

Notes
-----
The coefficient convention ``1/Γ(n) = 0`` for non-positive integers ``n``
is used throughout, so negative second parameters are allowed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import AccuracyLoss, InvalidParameter

__all__ = [
    "DEFAULT_ATOL",
    "DEFAULT_RTOL",
    "SUPPORTED_RADIUS",
    "MlParams",
    "WrightParams",
    "ml2",
    "ml3",
    "wright",
]

DEFAULT_ATOL = 1e-12
DEFAULT_RTOL = 1e-12
#: Largest |z| on the negative axis accepted by the series based schemes.
SUPPORTED_RADIUS = 50.0

_EPS = np.finfo(float).eps
_MAX_TERMS = 8192
_MAX_DPS = 400
_MP_FAST_DPS = 60
_CHUNK = 1 << 21
_LOG_HUGE = 700.0


@dataclass(frozen=True)
class MlParams:
    """Parameters of the Prabhakar function ``E^gamma_{mu,nu}``."""

    mu: float
    nu: float
    gamma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise InvalidParameter(f"mu must be positive, got {self.mu}")
        if not np.isfinite(self.nu):
            raise InvalidParameter(f"nu must be finite, got {self.nu}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidParameter(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class WrightParams:
    """Parameters of the Wright function ``W(z; mu, nu)``."""

    mu: float
    nu: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > -1):
            raise InvalidParameter(f"mu must exceed -1, got {self.mu}")
        if not np.isfinite(self.nu):
            raise InvalidParameter(f"nu must be finite, got {self.nu}")


# -- coefficients -------------------------------------------------------------

@lru_cache(maxsize=256)
def _coefficients(kind: str, mu: float, nu: float, gamma: float, n: int):
    """Log-magnitudes and signs of the first ``n`` series coefficients."""
    j = np.arange(n, dtype=float)
    arg = mu * j + nu
    with np.errstate(divide="ignore", invalid="ignore"):
        logc = -special.gammaln(arg)
        sign = special.gammasgn(arg)
    pole = (arg <= 0) & (arg == np.round(arg))
    logc[pole] = -np.inf
    sign[pole] = 0.0
    if kind == "wright":
        logc -= special.gammaln(j + 1)
    elif gamma != 1.0:
        logc += special.gammaln(gamma + j) - special.gammaln(gamma) - special.gammaln(j + 1)
    logc.flags.writeable = False
    sign.flags.writeable = False
    return logc, sign


@lru_cache(maxsize=256)
def _direct_coefficients(kind: str, mu: float, nu: float, gamma: float, n: int):
    """Coefficient magnitudes from ``rgamma`` directly, NaN where that would over- or underflow.

    Avoiding ``exp(-gammaln)`` saves the last few bits in the common range.
    """
    logc, _ = _coefficients(kind, mu, nu, gamma, n)
    j = np.arange(n, dtype=float)
    with np.errstate(all="ignore"):
        c = np.abs(special.rgamma(mu * j + nu))
        if kind == "wright":
            c = c * special.rgamma(j + 1)
        elif gamma != 1.0:
            c = c * special.poch(gamma, j) * special.rgamma(j + 1)
    safe = np.isfinite(c) & (np.abs(logc) < 600.0)
    c = np.where(safe, c, np.nan)
    c.flags.writeable = False
    return c


def _term_count(kind, mu, nu, gamma, zmax):
    """Number of terms after which the series tail is negligible at ``|z| = zmax``.

    Returns ``None`` when no such count exists below the internal cap.
    """
    if zmax == 0.0:
        return 1
    logz = math.log(zmax)
    n = 64
    while n <= _MAX_TERMS:
        logc, _ = _coefficients(kind, mu, nu, gamma, n)
        lt = logc + np.arange(n) * logz
        finite = np.flatnonzero(np.isfinite(lt))
        if finite.size >= 2:
            # tail must be negligible against both the largest term and one
            floor = min(lt[finite].max(), 0.0) - 40.0
            a, b = finite[-1], finite[-2]
            step = (lt[a] - lt[b]) / (a - b)
            if step < -0.05 and lt[a] < floor:
                rho = math.exp(step)
                if lt[a] + math.log(rho / (1.0 - rho)) < floor:
                    return n
        n *= 2
    return None


# -- scheme 1: double precision series ----------------------------------------

def _series_float(logc, sign, z, direct=None):
    """Sum the series for an array ``z``; also returns an error estimate."""
    n = logc.size
    out = np.empty_like(z)
    err = np.empty_like(z)
    peak = np.empty_like(z)
    step = max(1, _CHUNK // n)
    j = np.arange(n, dtype=float)
    for lo in range(0, z.size, step):
        zc = z[lo:lo + step]
        with np.errstate(divide="ignore", invalid="ignore"):
            lz = np.log(np.abs(zc))
            jl = j[None, :] * lz[:, None]
        jl[:, 0] = 0.0
        L = logc[None, :] + jl
        with np.errstate(over="ignore", invalid="ignore"):
            T = np.exp(L)
            if direct is not None:
                Td = direct[None, :] * np.power(np.abs(zc)[:, None], j[None, :])
                T = np.where(np.isfinite(Td) & (np.abs(L) < 600.0), Td, T)
        sgn = sign[None, :] * np.where(zc[:, None] < 0, (-1.0) ** j[None, :], 1.0)
        with np.errstate(over="ignore", invalid="ignore"):
            out[lo:lo + step] = np.sum(sgn * T, axis=1)
        Lfin = np.where(np.isfinite(L), np.abs(L), 0.0)
        jfin = np.where(np.isfinite(jl), np.abs(jl), 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            err[lo:lo + step] = _EPS * np.sum(T * (4.0 + Lfin + jfin), axis=1)
        peak[lo:lo + step] = np.max(np.where(np.isfinite(L), L, -np.inf), axis=1)
    return out, err, peak


# -- scheme 2: extended precision series --------------------------------------

def _series_mp(kind, mu, nu, gamma, z, nterms, dps):
    with mpmath.workdps(dps):
        mu_, nu_, g_, z_ = (mpmath.mpf(v) for v in (mu, nu, gamma, z))
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        ratio = mpmath.mpf(1)
        for j in range(nterms):
            total += ratio * power * mpmath.rgamma(mu_ * j + nu_)
            power *= z_
            if kind == "wright":
                ratio /= j + 1
            elif gamma != 1.0:
                ratio = ratio * (g_ + j) / (j + 1)
        return float(total)


def _mp_digits(peak, nterms, atol):
    """Decimal digits needed so that rounding stays below ``atol / 10``."""
    return int(math.ceil((peak + math.log(nterms) - math.log(0.1 * atol)) / math.log(10))) + 8


# -- scheme 3: branch cut integrals -------------------------------------------

def _ml_cut_applicable(mu, nu, gamma):
    return mu < 1.0 and (mu * gamma - nu > -1.0 or gamma == 1.0)


def _ml_cut(mu, nu, gamma, x):
    """Negative-axis value, lowering ``nu`` by the recurrence when needed.

    ``E_{mu,nu}(z) = (E_{mu,nu-mu}(z) - 1/Gamma(nu-mu)) / z`` moves the
    second parameter into the range where the cut integral converges.
    """
    if mu * gamma - nu > -1.0:
        return _ml_cut_direct(mu, nu, gamma, x)
    lower = _ml_cut(mu, nu - mu, gamma, x)
    return (lower - special.rgamma(nu - mu)) / (-x)


def _ml_cut_direct(mu, nu, gamma, x):
    """``E^gamma_{mu,nu}(-x)`` for ``x > 0`` and ``0 < mu < 1``.

    With ``p = mu*gamma - nu`` the image ``s^p / (s^mu + x)^gamma`` has no
    singularity off the negative axis, so inversion at time one collapses to
    ``(1/pi) int_0^inf e^{-r} Im F(r e^{-i pi}) dr``.  Substituting
    ``r = v^{1/mu}`` leaves an algebraic weight ``v^q`` at the origin.
    """
    p = mu * gamma - nu
    q = (p + 1.0) / mu - 1.0
    rot = np.exp(-1j * np.pi * mu)
    phase = np.exp(-1j * np.pi * p)

    def smooth(v):
        w = (v * rot + x) ** gamma
        return np.exp(-v ** (1.0 / mu)) * (phase / w).imag

    def full(v):
        return v ** q * smooth(v)

    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=400)
    vmax = 60.0 ** mu
    v1 = min(0.5, 0.5 * x, 0.5 * vmax)
    head = integrate.quad(smooth, 0.0, v1, weight="alg", wvar=(q, 0.0), **opts)[0]
    pts = [x] if v1 < x < vmax else None
    tail = integrate.quad(full, v1, vmax, points=pts, **opts)[0]
    return (head + tail) / (np.pi * mu)


@lru_cache(maxsize=64)
def _wright_cut_rule(alpha, beta):
    """Composite nodes and weights for the Wright branch-cut integral."""
    c = (1.0 - beta) / alpha - 1.0
    vmax = 45.0 ** alpha
    n = 24
    x0, w0 = special.roots_legendre(n)
    # geometric grading toward the origin where the weight v^c lives, with
    # every panel capped so the oscillation stays resolved
    hmax = vmax / 32
    graded = [vmax * 0.2 * 0.25 ** k for k in range(8, -1, -1)] + [vmax]
    edges = [0.0, graded[0]]
    for a, b in zip(graded[:-1], graded[1:]):
        edges += list(np.linspace(a, b, max(1, math.ceil((b - a) / hmax)) + 1)[1:])
    nodes, weights = [], []
    xj, wj = special.roots_jacobi(n, 0.0, c)
    nodes.append(edges[1] * (xj + 1) / 2)
    weights.append(wj * (edges[1] / 2) ** (c + 1))
    for a, b in zip(edges[1:-1], edges[2:]):
        v = a + (b - a) * (x0 + 1) / 2
        nodes.append(v)
        weights.append(w0 * (b - a) / 2 * v ** c)
    return np.concatenate(nodes), np.concatenate(weights)


def _wright_cut(alpha, beta, x):
    """``W(-x; -alpha, beta)`` for ``0 < alpha <= 1/2``, ``beta < 1``, ``x >= 0``.

    Uses ``W = (1/(pi alpha)) int_0^inf v^{(1-beta)/alpha - 1} e^{-v^{1/alpha}}
    e^{-x v cos(pi alpha)} sin(pi beta + x v sin(pi alpha)) dv``.
    """
    v, w = _wright_cut_rule(alpha, beta)
    base = w * np.exp(-v ** (1.0 / alpha))
    ca, sa = math.cos(math.pi * alpha), math.sin(math.pi * alpha)
    out = np.empty_like(x)
    step = max(1, _CHUNK // v.size)
    for lo in range(0, x.size, step):
        xc = x[lo:lo + step, None]
        kern = np.exp(-xc * v * ca) * np.sin(math.pi * beta + xc * v * sa)
        out[lo:lo + step] = kern @ base
    return out / (math.pi * alpha)


def _wright_negligible(alpha, beta, x, atol):
    """True when ``|W(-x; -alpha, beta)|`` is certainly below ``atol``.

    For ``0 < alpha < 1`` the function decays like ``Y^(1/2-beta) exp(-Y)``
    with ``Y = (1-alpha) (alpha^alpha x)^(1/(1-alpha))``.
    """
    if not 0.0 < alpha < 1.0 or x <= 0:
        return False
    Y = (1.0 - alpha) * (alpha ** alpha * x) ** (1.0 / (1.0 - alpha))
    log_bound = -Y + abs(0.5 - beta) * math.log(max(Y, 1.0)) + 10.0
    return log_bound < math.log(atol) - 10.0


def _wright_cut_ok(alpha, beta, x):
    # oscillation frequency must stay resolved by the fixed panels
    return 0.0 < alpha <= 0.5 and beta < 1.0 and x * 45.0 ** alpha * math.sin(math.pi * alpha) < 400.0


# -- driver -------------------------------------------------------------------

def _evaluate(kind, mu, nu, gamma, z, atol, rtol):
    zin = np.asarray(z, dtype=float)
    flat = zin.ravel()
    if not np.all(np.isfinite(flat)):
        raise InvalidParameter("argument must be finite")
    out = np.full(flat.shape, np.nan)
    cut_ok = np.zeros(flat.shape, bool)
    if kind == "wright":
        alpha = -mu
        cut_ok = (flat < 0) & np.array([_wright_cut_ok(alpha, nu, -v) if v < 0 else False for v in flat])
    else:
        cut_ok = (flat < 0) & _ml_cut_applicable(mu, nu, gamma)
    # positive arguments give same-signed terms, so only the negative axis is limited
    too_far = (flat < -SUPPORTED_RADIUS) & ~cut_ok
    if kind == "wright" and np.any(too_far):
        # deep in the decaying tail the value is below atol
        tiny = np.array([bool(far) and _wright_negligible(-mu, nu, -v, atol) for v, far in zip(flat, too_far)])
        out[tiny] = 0.0
        too_far &= ~tiny
    if np.any(too_far):
        bad = flat[too_far][0]
        raise AccuracyLoss(f"|z| = {abs(bad):g} exceeds the supported radius {SUPPORTED_RADIUS:g}")

    todo = np.isnan(out)
    series_ok = flat >= -SUPPORTED_RADIUS
    if kind == "wright":
        series_ok &= ~(cut_ok & (flat < -4.0))
    # each binary order of magnitude of |z| gets its own truncation
    peak = np.full(flat.shape, np.inf)
    nterms = np.zeros(flat.shape, dtype=int)
    mag = np.abs(flat)
    with np.errstate(divide="ignore"):
        bucket = np.maximum(np.ceil(np.log2(mag)), -4.0)
    groups = []
    for b in np.unique(bucket[series_ok]):
        idx = np.flatnonzero(series_ok & (bucket == b))
        n = _term_count(kind, mu, nu, gamma, float(mag[idx].max()))
        if n is not None:
            groups.append((idx, n))
        elif idx.size > 1:
            # the bucket's largest |z| is out of reach, smaller ones may not be
            for i in idx:
                m = _term_count(kind, mu, nu, gamma, float(mag[i]))
                if m is not None:
                    groups.append((np.array([i]), m))
    for idx, n in groups:
        logc, sign = _coefficients(kind, mu, nu, gamma, n)
        direct = _direct_coefficients(kind, mu, nu, gamma, n)
        val, err, pk = _series_float(logc, sign, flat[idx], direct)
        good = np.isfinite(val) & (err <= 0.5 * np.maximum(atol, rtol * np.abs(val)))
        out[idx[good]] = val[good]
        todo[idx[good]] = False
        peak[idx] = pk
        nterms[idx] = n

    if kind == "wright":
        # the cut integral is vectorised, so it beats per-element extended precision
        batch = np.flatnonzero(todo & cut_ok)
        if batch.size:
            out[batch] = _wright_cut(-mu, nu, -flat[batch])
            todo[batch] = False
    for i in np.flatnonzero(todo):
        zi = float(flat[i])
        if zi > 0 and peak[i] > _LOG_HUGE:
            raise AccuracyLoss(f"value at z = {zi:g} overflows double precision")
        n = int(nterms[i])
        dps = _mp_digits(peak[i], n, atol) if n and np.isfinite(peak[i]) else None
        if dps is not None and dps <= _MP_FAST_DPS:
            out[i] = _series_mp(kind, mu, nu, gamma, zi, n, dps)
        elif cut_ok[i]:
            out[i] = _ml_cut(mu, nu, gamma, -zi)
        elif dps is not None and dps <= _MAX_DPS:
            out[i] = _series_mp(kind, mu, nu, gamma, zi, n, dps)
        else:
            raise AccuracyLoss(f"no convergent scheme for z = {zi:g} with mu = {mu:g}")
    if not np.all(np.isfinite(out)):
        raise AccuracyLoss("result overflows double precision")
    if zin.ndim == 0:
        return float(out[0])
    return out.reshape(zin.shape)


def ml2(mu, nu, z, *, atol=DEFAULT_ATOL, rtol=DEFAULT_RTOL):
    """Two-parameter Mittag-Leffler function.

    .. math:: E_{\\mu,\\nu}(z) = \\sum_{j\\ge 0} \\frac{z^j}{\\Gamma(\\mu j + \\nu)}

    Parameters
    ----------
    mu : float
        Positive order.
    nu : float
        Second parameter, any real.
    z : float or array_like
        Real argument(s), ``|z| <= 50`` unless a negative-axis integral
        applies (``mu < 1``).
    atol, rtol : float, optional
        Target accuracy; the result satisfies
        ``|error| <= max(atol, rtol*|value|)``.

    Returns
    -------
    float or ndarray

    Raises
    ------
    InvalidParameter
        If ``mu <= 0``.
    AccuracyLoss
        If no scheme certifies the target accuracy.

    Examples
    --------
    >>> ml2(1, 1, 1.0)
    2.718281828459045
    """
    p = MlParams(float(mu), float(nu))
    return _evaluate("ml", p.mu, p.nu, 1.0, z, atol, rtol)


def ml3(mu, nu, gamma, z, *, atol=DEFAULT_ATOL, rtol=DEFAULT_RTOL):
    """Three-parameter (Prabhakar) Mittag-Leffler function.

    .. math:: E^{\\gamma}_{\\mu,\\nu}(z) = \\sum_{j\\ge 0}
       \\frac{(\\gamma)_j}{j!\\,\\Gamma(\\mu j + \\nu)} z^j

    ``gamma = 1`` recovers :func:`ml2`. See :func:`ml2` for the accuracy
    contract.
    """
    p = MlParams(float(mu), float(nu), float(gamma))
    return _evaluate("ml", p.mu, p.nu, p.gamma, z, atol, rtol)


def wright(z, mu, nu, *, atol=DEFAULT_ATOL, rtol=DEFAULT_RTOL):
    """Wright function.

    .. math:: W(z; \\mu, \\nu) = \\sum_{j\\ge 0} \\frac{z^j}{j!\\,\\Gamma(\\mu j + \\nu)}

    Parameters
    ----------
    z : float or array_like
        Real argument(s). For ``-1/2 <= mu < 0`` and ``nu < 1`` a branch-cut
        integral covers ``x = -z`` with ``x 45^(-mu) sin(-pi mu) < 400``;
        otherwise ``|z| <= 50``. For ``-1 < mu < 0`` arguments further out on
        the negative axis return 0 once the tail bound is below ``atol``.
    mu : float
        First parameter, ``mu > -1``.
    nu : float
        Second parameter.
    """
    p = WrightParams(float(mu), float(nu))
    return _evaluate("wright", p.mu, p.nu, 1.0, z, atol, rtol)
