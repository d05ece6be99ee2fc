import math

import numpy as np
import pytest
from scipy import integrate

from psifrac.errors import AbscissaViolation, ContourFailure, TransformIneligible, UnboundedGrowth, UnknownKind
from psifrac.frac_operators import FracOrder, psi_caputo_derivative, psi_integral
from psifrac.laplace import (
    ContourSpec,
    ExponentialOrder,
    TransformImage,
    convolution_function,
    estimate_exponential_order,
    glt_forward,
    glt_inverse,
    psi_convolve,
    reference_image,
    reference_original,
)
from psifrac.psi_kernel import RealFunction, builtin_psi
from psifrac.special_functions import ml2, ml3

ELIGIBLE = [builtin_psi(k) for k in ("identity", "square", "sqrt", "log1p")]
IDENTITY = ELIGIBLE[0]


def by_name(p):
    return p.name


def rel(a, b):
    return abs(a - b) / abs(b)


class TestForward:
    @pytest.mark.parametrize("psi", ELIGIBLE, ids=by_name)
    def test_power_example(self, psi):
        f = RealFunction(lambda t: psi(t) ** 2, label="Psi^2")
        assert rel(glt_forward(psi, f, 1.0), 2.0) <= 1e-8

    @pytest.mark.parametrize("psi", ELIGIBLE, ids=by_name)
    def test_exponential_example(self, psi):
        f = RealFunction(lambda t: np.exp(psi(t)), label="exp Psi")
        assert rel(glt_forward(psi, f, 2.0), 1.0) <= 1e-8

    @pytest.mark.parametrize("psi", ELIGIBLE, ids=by_name)
    def test_mittag_leffler_example(self, psi):
        f = reference_original("ml2", psi, mu=0.5, lam=0.25)
        assert rel(glt_forward(psi, f, 1.0), 1 / 0.75) <= 1e-8

    def test_complex_argument(self):
        psi = builtin_psi("square")
        f = reference_original("exp", psi, a=0.5)
        s = 1.5 + 2.0j
        assert rel(glt_forward(psi, f, s), 1 / (s - 0.5)) <= 1e-8

    @pytest.mark.parametrize("psi", ELIGIBLE, ids=by_name)
    def test_factorisation(self, psi):
        # the Psi transform of f is the classical transform of f o Psi^-1
        f = RealFunction(lambda t: np.cos(psi(t)) * np.exp(-0.5 * psi(t)), label="f")
        s = 1.3
        classical, _ = integrate.quad(lambda u: math.exp(-s * u) * math.cos(u) * math.exp(-0.5 * u), 0, np.inf,
                                      epsabs=1e-14, epsrel=1e-13, limit=200)
        assert rel(glt_forward(psi, f, s), classical) <= 1e-8

    def test_limiting_property(self):
        psi = builtin_psi("square")
        f = RealFunction(lambda t: 1 + psi(t), label="f")
        values = [abs(glt_forward(psi, f, s)) for s in (10.0, 1e2, 1e3, 1e4)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] <= 1.01e-4

    def test_abscissa_violation(self):
        f = RealFunction(lambda t: np.exp(2 * t), label="e2t")
        with pytest.raises(AbscissaViolation):
            glt_forward(IDENTITY, f, 1.5, ExponentialOrder(c=2.0))

    def test_ineligible_psi(self):
        f = RealFunction(lambda t: np.ones_like(t), label="one")
        with pytest.raises(TransformIneligible):
            glt_forward(builtin_psi("shifted-log", 1.0), f, 1.0)


class TestInverse:
    def test_exponential_under_square(self):
        value = glt_inverse(builtin_psi("square"), reference_image("exp", a=1.0), 0.8)
        assert value == pytest.approx(math.exp(0.64), abs=1e-8)

    @pytest.mark.parametrize("psi", ELIGIBLE, ids=by_name)
    def test_power_image(self, psi):
        t = np.linspace(0.1, 2, 9)
        values = glt_inverse(psi, reference_image("power", mu=2.0), t)
        assert np.max(np.abs(values - psi(t) ** 2)) <= 1e-6

    def test_prabhakar_image(self):
        mu, nu, gam, lam = 0.6, 0.6, 2.0, 0.3
        value = glt_inverse(IDENTITY, reference_image("ml3", mu=mu, nu=nu, gamma=gam, lam=lam), 1.0)
        assert value == pytest.approx(ml3(mu, nu, gam, lam), abs=1e-6)

    @pytest.mark.parametrize("kind,params", [
        ("power", {"mu": 0.7}),
        ("exp", {"a": -0.5}),
        ("ml2", {"mu": 0.7, "lam": -1.0}),
        ("ml-kernel", {"mu": 0.4, "lam": 0.5}),
    ])
    @pytest.mark.parametrize("psi", ELIGIBLE[:2], ids=by_name)
    def test_roundtrip(self, psi, kind, params):
        t = np.linspace(0.1, 2, 12)
        values = glt_inverse(psi, reference_image(kind, **params), t)
        exact = reference_original(kind, psi, **params)(t)
        assert np.max(np.abs(values - exact)) <= 1e-6

    def test_real_valued_diagnostic(self):
        # a non-conjugate-symmetric image has no real original
        image = TransformImage(lambda s: 1.0 / (s - 1j), 1.0, "complex pole")
        with pytest.raises(ContourFailure):
            glt_inverse(IDENTITY, image, 1.0)

    def test_overflow_detected(self):
        with pytest.raises(ContourFailure):
            glt_inverse(IDENTITY, reference_image("exp", a=800.0), 1.0)

    def test_node_count_configurable(self):
        coarse = glt_inverse(IDENTITY, reference_image("exp", a=1.0), 1.0, ContourSpec(nodes=12))
        fine = glt_inverse(IDENTITY, reference_image("exp", a=1.0), 1.0, ContourSpec(nodes=24))
        assert abs(fine - math.e) <= 1e-10
        assert abs(coarse - math.e) > abs(fine - math.e)


class TestConvolution:
    @pytest.mark.parametrize("psi", ELIGIBLE, ids=by_name)
    def test_one_with_one(self, psi):
        one = RealFunction(lambda t: np.ones_like(t), label="one")
        t = np.array([0.2, 0.9, 1.7])
        assert np.max(np.abs(psi_convolve(psi, one, one, t) - psi(t))) <= 1e-12

    def test_zero_factor(self):
        f = RealFunction(np.cos, label="cos")
        zero = RealFunction(lambda t: np.zeros_like(t), label="zero")
        assert psi_convolve(IDENTITY, f, zero, 1.3) == 0.0

    def test_linear_with_linear(self):
        lin = RealFunction(lambda t: t, label="t")
        assert psi_convolve(IDENTITY, lin, lin, 1.0) == pytest.approx(1 / 6, abs=1e-14)

    @pytest.mark.parametrize("psi", ELIGIBLE, ids=by_name)
    def test_algebraic_laws(self, psi):
        P = psi.psi
        f = RealFunction(lambda t: np.exp(-P(t)), label="f")
        g = RealFunction(lambda t: np.sin(P(t)) + 1, label="g")
        h = RealFunction(lambda t: P(t) ** 0.5, label="h")
        t = np.array([0.4, 1.2])
        fg = psi_convolve(psi, f, g, t)
        assert np.max(np.abs(fg - psi_convolve(psi, g, f, t))) <= 1e-8
        left = psi_convolve(psi, convolution_function(psi, f, g), h, t)
        right = psi_convolve(psi, f, convolution_function(psi, g, h), t)
        assert np.max(np.abs(left - right)) <= 1e-8
        mix = RealFunction(lambda t: 2.0 * g(t) - 3.0 * h(t), label="mix")
        lin = psi_convolve(psi, f, mix, t) - 2.0 * fg + 3.0 * psi_convolve(psi, f, h, t)
        assert np.max(np.abs(lin)) <= 1e-8

    @pytest.mark.parametrize("psi", ELIGIBLE[:2], ids=by_name)
    def test_product_theorem(self, psi):
        P = psi.psi
        f = RealFunction(lambda t: np.exp(-P(t)) * np.cos(P(t)), label="f")
        g = RealFunction(lambda t: np.sin(P(t)), label="g")
        s = 2.0
        lhs = glt_forward(psi, convolution_function(psi, f, g), s, ExponentialOrder(0.0, 2.0))
        rhs = glt_forward(psi, f, s) * glt_forward(psi, g, s)
        assert rel(lhs, rhs) <= 1e-6


class TestReferenceImages:
    def test_mittag_leffler_image(self):
        image = reference_image("ml2", mu=0.5, lam=0.25)
        assert image.abscissa == pytest.approx(0.0625, abs=1e-15)
        s = 1.7
        assert image(s) == pytest.approx(s ** -0.5 / (s ** 0.5 - 0.25), rel=1e-14)

    def test_integral_of(self):
        base = reference_image("exp", a=1.0)
        image = reference_image("rl-integral-of", base=base, mu=0.4)
        s = 3.0
        assert image(s) == pytest.approx(s ** -0.4 / (s - 1), rel=1e-14)
        assert image.abscissa == base.abscissa

    def test_caputo_of(self):
        base = reference_image("exp", a=1.0)
        image = reference_image("caputo-derivative-of", base=base, mu=0.7, initial=[2.0])
        s = 3.0
        assert image(s) == pytest.approx(s ** 0.7 / (s - 1) - 2.0 * s ** -0.3, rel=1e-14)

    def test_unknown_kind(self):
        with pytest.raises(UnknownKind):
            reference_image("bessel", mu=1.0)


class TestOperatorTheorems:
    @pytest.mark.parametrize("psi", ELIGIBLE, ids=by_name)
    def test_integral(self, psi):
        P = psi.psi
        f = RealFunction(lambda t: np.exp(-P(t)) * np.cos(P(t)), label="f")
        If = RealFunction(lambda t: psi_integral(psi, FracOrder(0.6), f, 0.0, t), label="If")
        s = 2.0
        lhs = glt_forward(psi, If, s, ExponentialOrder(0.0, 2.0))
        assert rel(lhs, s ** -0.6 * glt_forward(psi, f, s)) <= 1e-6

    def test_caputo_with_initial_value(self):
        psi = builtin_psi("square")
        P = psi.psi
        dP = psi.dpsi
        f = RealFunction(lambda t: 1 + np.sin(P(t)), (lambda t: np.cos(P(t)) * dP(t),), "f")
        D = RealFunction(lambda t: psi_caputo_derivative(psi, FracOrder(0.7), f, 0.0, t), label="Df")
        s = 2.5
        lhs = glt_forward(psi, D, s, ExponentialOrder(0.0, 2.0))
        image = reference_image("caputo-derivative-of", base=TransformImage(lambda z: 1 / z + 1 / (z * z + 1), 0.0),
                                mu=0.7, initial=[1.0])
        assert rel(lhs, image(s)) <= 1e-6


class TestExponentialOrder:
    def test_exponential(self):
        psi = builtin_psi("square")
        order = estimate_exponential_order(psi, RealFunction(lambda t: np.exp(2 * psi(t)), label="e2"), 3.0)
        assert order.c == pytest.approx(2.0, abs=0.05)

    def test_bounded(self):
        psi = IDENTITY
        order = estimate_exponential_order(psi, RealFunction(lambda t: np.sin(t), label="sin"), 40.0)
        assert order.c == pytest.approx(0.0, abs=0.05)
        assert order.M == pytest.approx(1.0, abs=0.05)

    def test_mittag_leffler(self):
        psi = IDENTITY
        f = RealFunction(lambda t: ml2(0.5, 1.0, np.sqrt(t)), label="E_half")
        order = estimate_exponential_order(psi, f, 30.0)
        assert order.c == pytest.approx(1.0, abs=0.1)

    def test_certified_bound_holds(self):
        psi = builtin_psi("log1p")
        f = RealFunction(lambda t: (1 + t) ** 1.5 * (2 + np.cos(t)), label="f")
        order = estimate_exponential_order(psi, f, 20.0)
        # the bound is certified on the sampling range, which starts at 1e-3 horizon
        t = np.linspace(0.02, 20, 301)
        assert np.all(np.abs(f(t)) <= 1.05 * order.M * np.exp(order.c * psi(t)))

    def test_super_exponential_growth(self):
        with pytest.raises(UnboundedGrowth):
            estimate_exponential_order(IDENTITY, RealFunction(lambda t: np.exp(t ** 2), label="gauss"), 20.0)
