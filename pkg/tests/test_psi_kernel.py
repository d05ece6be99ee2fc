import math

import numpy as np
import pytest

from psifrac.errors import DomainMismatch, InvalidParameter, UnknownKind
from psifrac.psi_kernel import BUILTIN_KINDS, PsiFunction, RealFunction, builtin_psi, conjugate_in, conjugate_out

ELIGIBLE = ["identity", "sqrt", "square", "log1p"]


def all_builtins():
    return [builtin_psi(k) for k in ELIGIBLE] + [builtin_psi("power", 1.5), builtin_psi("shifted-log", 1.0)]


def sample_grid(psi, n=41):
    a = psi.domain[0]
    return np.linspace(a + 0.01, a + 3.0, n)


class TestBuiltins:
    def test_identity(self):
        psi = builtin_psi("identity")
        t = np.linspace(0, 4, 9)
        assert np.array_equal(psi(t), t)
        assert np.array_equal(psi.derivative(t), np.ones_like(t))
        assert np.array_equal(psi.inverse(t), t)

    def test_power_two(self):
        psi = builtin_psi("power", 2)
        t = np.linspace(0.1, 3, 7)
        assert np.allclose(psi(t), t ** 2, rtol=0, atol=1e-15)
        assert np.allclose(psi.derivative(t), 2 * t, rtol=0, atol=1e-15)
        assert np.allclose(psi.inverse(t), np.sqrt(t), rtol=0, atol=1e-15)

    def test_log1p(self):
        psi = builtin_psi("log1p")
        assert psi(0.0) == 0.0
        t = np.linspace(0, 5, 11)
        assert np.allclose(psi.derivative(t), 1 / (1 + t), rtol=0, atol=1e-15)

    @pytest.mark.parametrize("kind", ["identity", "power", "sqrt", "square", "log1p"])
    def test_zero_at_origin(self, kind):
        assert builtin_psi(kind, 3.0 if kind == "power" else None).zero_at_origin

    def test_shifted_log_not_at_origin(self):
        psi = builtin_psi("shifted-log", 2.0)
        assert not psi.zero_at_origin
        assert psi.domain[0] == 2.0

    def test_unknown_kind(self):
        with pytest.raises(UnknownKind):
            builtin_psi("cubic")

    @pytest.mark.parametrize("p", [0.0, -1.0, math.nan, None])
    def test_power_needs_positive_exponent(self, p):
        with pytest.raises(InvalidParameter):
            builtin_psi("power", p)

    def test_kinds_catalogue(self):
        assert set(BUILTIN_KINDS) == {"identity", "power", "sqrt", "square", "log1p", "shifted-log"}


class TestAudit:
    @pytest.mark.parametrize("psi", all_builtins(), ids=lambda p: p.name)
    def test_builtins_pass_audit(self, psi):
        psi.audit()

    @pytest.mark.parametrize("psi", all_builtins(), ids=lambda p: p.name)
    def test_inverse_roundtrip(self, psi):
        t = sample_grid(psi)
        assert np.max(np.abs(psi.inverse(psi(t)) - t) / t) <= 1e-10

    def test_decreasing_function_rejected(self):
        with pytest.raises(InvalidParameter):
            PsiFunction(lambda t: -t, lambda t: -np.ones_like(t), lambda u: -u, (0.0, 1.0))

    def test_vanishing_derivative_rejected(self):
        # t^3 is increasing but Psi'(0) = 0 breaks the positivity scan
        with pytest.raises(InvalidParameter):
            PsiFunction(lambda t: t ** 3, lambda t: 3 * t ** 2 - 0.1, np.cbrt, (0.0, 1.0))

    def test_root_finding_inverse(self):
        psi = PsiFunction(lambda t: t + t ** 3, lambda t: 1 + 3 * t ** 2, domain=(0.0, 4.0), name="cubic")
        t = np.linspace(0, 4, 17)
        assert np.max(np.abs(psi.inverse(psi(t)) - t)) <= 1e-11

    def test_require_outside_domain(self):
        with pytest.raises(DomainMismatch):
            builtin_psi("shifted-log", 1.0).require(0.5)


class TestConjugation:
    def test_identity_is_neutral(self):
        f = RealFunction(np.sin, (np.cos,), "sin")
        g = conjugate_in(builtin_psi("identity"), f)
        t = np.linspace(0, 3, 13)
        assert np.max(np.abs(g(t) - np.sin(t))) == 0.0

    def test_square_of_identity(self):
        g = conjugate_in(builtin_psi("square"), RealFunction(lambda u: u, label="u"))
        t = np.linspace(0, 3, 13)
        assert np.allclose(g(t), t ** 2, rtol=0, atol=1e-15)

    def test_sqrt_exp_at_four(self):
        g = conjugate_in(builtin_psi("sqrt"), RealFunction(np.exp, label="exp"))
        assert g(4.0) == pytest.approx(math.exp(2), rel=1e-15)

    def test_out_of_square(self):
        f = RealFunction(lambda t: t ** 4, label="t4")
        g = conjugate_out(builtin_psi("square"), f)
        u = np.linspace(0, 4, 9)
        assert np.allclose(g(u), u ** 2, rtol=1e-14, atol=1e-14)

    def test_out_of_log1p(self):
        g = conjugate_out(builtin_psi("log1p"), RealFunction(lambda t: t, label="t"))
        u = np.linspace(0, 2, 9)
        assert np.allclose(g(u), np.expm1(u), rtol=1e-14, atol=0)

    @pytest.mark.parametrize("psi", all_builtins(), ids=lambda p: p.name)
    def test_roundtrip(self, psi):
        f = RealFunction(lambda t: np.cos(t) + t ** 2, label="f")
        back = conjugate_out(psi, conjugate_in(psi, f))
        t = sample_grid(psi)
        assert np.max(np.abs(back(t) - f(t))) <= 1e-10

    @pytest.mark.parametrize("psi", all_builtins(), ids=lambda p: p.name)
    def test_chain_rule(self, psi):
        f = RealFunction(lambda u: np.sin(u) + u ** 3, (lambda u: np.cos(u) + 3 * u ** 2,), "f")
        g = conjugate_in(psi, f)
        t = sample_grid(psi, 11)
        h = 1e-6
        fd = (g(t + h) - g(t - h)) / (2 * h)
        exact = g.derivative(1)(t)
        assert np.max(np.abs(fd - exact) / np.maximum(1, np.abs(exact))) <= 1e-5

    @pytest.mark.parametrize("psi", all_builtins(), ids=lambda p: p.name)
    def test_second_derivatives_consistent(self, psi):
        f = RealFunction(np.exp, (np.exp, np.exp), "exp")
        g = conjugate_in(psi, f)
        assert g.order == 2
        a = psi.domain[0]
        # central differences with step 1e-4 need moderate third derivatives
        assert g.verify_derivatives(np.linspace(a + 0.2, a + 1.5, 11)) <= 1e-5


class TestRealFunction:
    def test_scalar_broadcast(self):
        one = RealFunction(lambda x: 1.0, label="one")
        assert np.array_equal(one(np.zeros(3)), np.ones(3))
        assert one(0.5) == 1.0

    def test_inconsistent_derivative_flagged(self):
        f = RealFunction(np.sin, (np.sin,), "bad")
        with pytest.raises(InvalidParameter):
            f.verify_derivatives(np.linspace(0.1, 1, 5))
