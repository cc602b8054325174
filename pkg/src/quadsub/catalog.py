"""Worked quadratic symbols used by the tests and the command line."""

from dataclasses import dataclass

import numpy as np

from .symbols import QuadraticSymbol


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    symbol: QuadraticSymbol
    expected_k0: object
    notes: str


def harmonic(n=1):
    """q = |x|^2 + |xi|^2."""
    return QuadraticSymbol(n, np.eye(2 * n))


def davies():
    """q = xi^2 + i x^2, the complex harmonic oscillator D^2 + i x^2."""
    return QuadraticSymbol(1, np.diag([0.0, 1.0]), np.diag([1.0, 0.0]))


def kfp():
    """Quadratic Kramers-Fokker-Planck symbol eta^2 + v^2/4 + i(v xi - x eta).

    Coordinates are (x, v, xi, eta).
    """
    Q_re = np.diag([0.0, 0.25, 0.0, 1.0])
    Q_im = np.zeros((4, 4))
    Q_im[1, 2] = Q_im[2, 1] = 0.5
    Q_im[0, 3] = Q_im[3, 0] = -0.5
    return QuadraticSymbol(2, Q_re, Q_im)


def degenerate():
    """q = i xi^2: Re q vanishes identically, so S = R^2."""
    return QuadraticSymbol(1, np.zeros((2, 2)), np.diag([0.0, 1.0]))


def chain():
    """Two degrees of freedom with k0 = 3, the largest value allowed for n = 2.

    q = xi_2^2 + i(x_1^2 + x_2 xi_1).  Along the Im q flow, xi_2 is driven by
    xi_1, xi_1 by x_1 and x_1 by x_2, so Re q sees x_2 only at third order.
    """
    Q_re = np.diag([0.0, 0.0, 0.0, 1.0])
    Q_im = np.zeros((4, 4))
    Q_im[0, 0] = 1.0
    Q_im[1, 2] = Q_im[2, 1] = 0.5
    return QuadraticSymbol(2, Q_re, Q_im)


ENTRIES = {
    "harmonic": CatalogEntry("harmonic", harmonic(), 0,
                             "elliptic reference case, Re q positive definite"),
    "davies": CatalogEntry("davies", davies(), 1,
                           "complex harmonic oscillator; rank of the stack jumps 1 -> 2 at j = 1"),
    "kfp": CatalogEntry("kfp", kfp(), 1,
                        "quadratic Kramers-Fokker-Planck model with unit parameters; "
                        "symbol written out here, k0 confirmed by a hand rank computation"),
    "degenerate": CatalogEntry("degenerate", degenerate(), "undefined",
                               "negative test: Re q = 0 so the singular space is everything"),
}


# Not part of catalog(): lambda_min ~ t^7 sinks below double precision on the
# default small-t windows, so the standard sweeps cannot resolve it.
EXTRA = {
    "chain": CatalogEntry("chain", chain(), 3,
                          "constructed k0 = 3 example on R^4; stack ranks 1, 2, 3, 4"),
}


def catalog(include_extra=False):
    entries = list(ENTRIES.values())
    if include_extra:
        entries += list(EXTRA.values())
    return entries


def get(name):
    try:
        return ENTRIES[name] if name in ENTRIES else EXTRA[name]
    except KeyError:
        known = sorted(ENTRIES) + sorted(EXTRA)
        raise KeyError(f"unknown catalog entry {name!r}; choose from {known}") from None
