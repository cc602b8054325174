"""Averaged form of Re q along the Im q flow and its small-time lower bound."""

from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from .errors import NoOrderFound, QuadratureNotConverged
from .fitting import fit_power_law
from .singular import iterated_poisson_forms, k0_index
from .symbols import RealQuadForm, hamilton_map

GAUSS_ORDER = 10
MAX_DOUBLINGS = 16
QUAD_RTOL = 1e-11
TAYLOR_TOL = 1e-10

_NODES, _WEIGHTS = leggauss(GAUSS_ORDER)


@dataclass
class AveragedForm:
    t: float
    G: RealQuadForm

    @property
    def lambda_min(self):
        return float(np.linalg.eigvalsh(self.G.G)[0])


def _composite_gauss(integrand, t, panels):
    edges = np.linspace(0.0, t, panels + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        for node, weight in zip(_NODES, _WEIGHTS):
            total = total + weight * half * integrand(mid + half * node)
    return total


def averaged_form_matrix(Q_re, F_im, t, reverse=False):
    """int_0^t exp(2sF)^T Q_re exp(2sF) ds, with F -> -F when ``reverse``."""
    if t == 0:
        return np.zeros_like(Q_re)
    gen = -2.0 * F_im if reverse else 2.0 * F_im

    def integrand(s):
        flow = expm(s * gen)
        return flow.T @ Q_re @ flow

    panels = 1
    prev = _composite_gauss(integrand, t, panels)
    for _ in range(MAX_DOUBLINGS):
        panels *= 2
        cur = _composite_gauss(integrand, t, panels)
        scale = np.linalg.norm(cur)
        change = np.linalg.norm(cur - prev)
        if change <= QUAD_RTOL * scale or scale == 0.0:
            return 0.5 * (cur + cur.T)
        prev = cur
    raise QuadratureNotConverged(f"averaged form at t={t} did not converge in "
                                 f"{MAX_DOUBLINGS} panel doublings")


def averaged_form(q, t, reverse=False):
    """J(t, .) = int_0^t Re q(exp(s H_{Im q}) X) ds as a quadratic form.

    ``reverse=True`` integrates along exp(-s H_{Im q}) instead.
    """
    if not 0 <= t <= 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    G = averaged_form_matrix(q.Q_re, hamilton_map(q).F_im, t, reverse)
    return AveragedForm(t, RealQuadForm(G))


def lambda_min_curve(q, t_grid, reverse=False):
    """Power-law fit of lambda_min(J(t)) over ``t_grid``; expected slope 2k0+1."""
    k0_index(q)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size and (t_grid[0] <= 0 or t_grid[-1] > 0.1):
        raise ValueError("t_grid must lie in (0, 0.1]")
    values = np.array([averaged_form(q, t, reverse).lambda_min for t in t_grid])
    return fit_power_law(t_grid, values)


def taylor_order(q, X, tol=TAYLOR_TOL):
    """Leading even order of t -> Re q(exp(t H_{Im q}) X) at a unit vector X.

    Returns ``(j, a)`` where a = (H_{Im q}^{2j} Re q)(X) / (2j)! is the first
    coefficient above ``tol``; every lower coefficient must vanish.
    """
    X = np.asarray(X, dtype=float)
    if abs(np.linalg.norm(X) - 1.0) > 1e-12:
        raise ValueError("X must be a unit vector")
    k0 = k0_index(q)
    forms = iterated_poisson_forms(q, 2 * k0)
    for m, g in enumerate(forms):
        c = g(X) / factorial(m)
        if abs(c) <= tol:
            continue
        if m % 2 or c < 0:
            raise NoOrderFound(f"first non-vanishing coefficient has order {m} and value {c}")
        return m // 2, float(c)
    raise NoOrderFound(f"all Taylor coefficients through order {2 * k0} vanish below {tol}")
