"""Parameter matrix shared by the solver tests and the acceptance suite."""

import numpy as np

from psifrac.psi_kernel import RealFunction, builtin_psi
from psifrac.solvers import FdeProblem, default_grid


def forcing(name, psi):
    """Forcing ``f(t) = g(Psi(t))`` for a named ``g``."""
    P = psi.psi
    table = {
        "none": None,
        "one": lambda t: np.ones_like(t),
        "exp": lambda t: np.exp(-P(t)),
        "lin": lambda t: P(t),
        "sin": lambda t: np.sin(2 * P(t)),
    }
    fn = table[name]
    return None if fn is None else RealFunction(fn, label=name)


# (mu, lam, c, forcing, psi)
RL = [
    (0.5, 0.0, 1.0, "none", "identity"),
    (0.7, 0.3, 1.0, "none", "square"),
    (0.9, -1.0, 1.0, "none", "identity"),
    (0.6, 1.0, 0.5, "one", "identity"),
    (0.4, -0.5, 1.0, "exp", "sqrt"),
    (0.8, 0.3, 2.0, "lin", "log1p"),
]

CAPUTO = [
    (0.6, 1.0, 1.0, "one", "identity"),
    (0.6, 1.0, 1.0, "one", "sqrt"),
    (0.6, 1.0, 1.0, "one", "square"),
    (0.3, -2.0, 1.0, "none", "identity"),
    (0.9, 0.5, -1.0, "sin", "log1p"),
    (0.5, -1.0, 0.0, "exp", "identity"),
]

# (mus, nus, coefficients, initial data, forcing, psi)
HILFER2 = [
    ((0.3, 0.7), (0.5, 0.5), (1, 1, 1), (1, 1), "none", "identity"),
    ((0.3, 0.7), (0.5, 0.5), (1, 1, 1), (1, 1), "one", "identity"),
    ((0.2, 0.6), (0.0, 1.0), (0.5, 1, -1), (0, 1), "one", "identity"),
    ((0.4, 0.8), (1.0, 0.3), (-1, 2, 0.5), (1, -1), "none", "square"),
    ((0.5, 0.9), (0.5, 0.0), (0.3, 1, 0), (0.5, 1), "exp", "log1p"),
    ((0.3, 0.6), (0.2, 0.8), (2, 1, 1), (0.5, 0.5), "lin", "sqrt"),
]

HILFER3 = [
    ((0.2, 0.4, 0.6), (0.0, 0.5, 1.0), (0.1, 0.1, 1, 1), (0, 0, 1), "none", "identity"),
    ((0.2, 0.4, 0.6), (0.0, 0.5, 1.0), (0.1, 0.1, 1, 1), (0.5, 0.5, 1), "none", "identity"),
    ((0.3, 0.5, 0.8), (0.5, 0.5, 0.5), (0.5, -0.5, 1, 1), (1, 1, 1), "one", "identity"),
    ((0.2, 0.5, 0.7), (1.0, 0.0, 1.0), (1, 1, 2, -1), (0, 1, 1), "exp", "square"),
    ((0.1, 0.3, 0.9), (0.3, 0.6, 0.9), (0.2, 0.4, 1, 0.5), (1, 0, 1), "lin", "log1p"),
    ((0.4, 0.6, 0.8), (0.0, 0.0, 0.0), (-0.3, 0.5, 1, 0), (0.2, 0.2, 0.2), "sin", "sqrt"),
]


def build(kind, row):
    if kind in ("rl-ivp", "caputo-ivp"):
        mu, lam, c, f, name = row
        psi = builtin_psi(name)
        make = FdeProblem.rl if kind == "rl-ivp" else FdeProblem.caputo
        return make(psi, mu, lam, c, forcing(f, psi))
    mus, nus, a, b, f, name = row
    psi = builtin_psi(name)
    return FdeProblem.hilfer(psi, mus, nus, a, b, forcing(f, psi))


MATRIX = {"rl-ivp": RL, "caputo-ivp": CAPUTO, "hilfer2": HILFER2, "hilfer3": HILFER3}


def cases():
    return [(kind, row) for kind, rows in MATRIX.items() for row in rows]


def case_id(case):
    kind, row = case
    return f"{kind}-{MATRIX[kind].index(row)}"


def grid_for(p, points=11):
    """Grid on ``(0, 1]``, starting at ``Psi^-1(1e-4)`` for kinds singular at the origin."""
    return default_grid(p.psi, p.kind, 1.0, points)
