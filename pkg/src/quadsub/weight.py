"""Evolution of the real weight G_t and of the Bargmann-side weight Phi_t.

G_t is represented by a symmetric matrix Gamma with G_t(X) = X^T Gamma X and
is computed three ways: RK4 on the matrix Riccati equation, the closed form
1/2 sigma(X, tan(2tF) X) for real symbols, and by reading off the plane
exp(2itF)(R^{2n}) as a graph X + i K X with K = 2 J^{-1} Gamma.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import kernels
from .errors import (DegenerateCriticalPoint, NotConvergedError, PlaneNotGraph,
                     TanSingular, WeightBlowup)
from .fitting import fit_power_law
from .singular import k0_index
from .symbols import (bargmann_phase, conjugate_by_bargmann, evaluate_form,
                      hamilton_map, inverse_symplectic_matrix, symplectic_matrix)

DEFAULT_STEP = 1e-4
MAX_T = 0.3
BLOWUP_NORM = 1e6
STEP_HALVING_TOL = 1e-10
GRAPH_COND_LIMIT = 1e12
TAN_INV_LIMIT = 1e8
CRITICAL_COND_LIMIT = 1e10


class StepNotCertified(NotConvergedError):
    """Halving the RK4 step changed the solution by more than the tolerance."""


@dataclass
class WeightForm:
    t: float
    Gamma: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def lambda_min(self):
        return float(np.linalg.eigvalsh(self.Gamma)[0])


@dataclass
class PhiForm:
    """Phi_t(x) = w^T P w with w = (Re x, Im x)."""

    t: float
    P: np.ndarray

    @property
    def n(self):
        return self.P.shape[0] // 2

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        w = np.concatenate([x.real, x.imag])
        return float(w @ self.P @ w)

    def gap(self):
        """P - I/2, the matrix of Phi_t - Phi_0."""
        return self.P - 0.5 * np.eye(self.P.shape[0])


def _sym(M):
    return 0.5 * (M + M.T)


def _output_times(t_end, times):
    if times is None:
        times = np.linspace(0.0, t_end, 101)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or times.size and times[0] < 0:
        raise ValueError("times must be a non-decreasing array of non-negative values")
    if times.size and times[-1] > t_end + 1e-15:
        raise ValueError("requested times extend beyond t_end")
    return times


def riccati_matrices(Q_re, F_im, times, h=DEFAULT_STEP, check_step=False):
    """Integrate the weight Riccati equation for raw matrices.

    Signs of ``Q_re``/``F_im`` are unrestricted so that -q (the backward
    evolution) runs through the same code.
    """
    snaps, done = kernels.riccati_rk4(Q_re, F_im, times, h, BLOWUP_NORM)
    if done < len(times):
        t_bad = times[done]
        raise WeightBlowup(f"|Gamma| exceeded {BLOWUP_NORM:g} before t={t_bad:g}")
    snaps = 0.5 * (snaps + np.transpose(snaps, (0, 2, 1)))
    if check_step:
        fine, _ = kernels.riccati_rk4(Q_re, F_im, times, 0.5 * h, BLOWUP_NORM)
        fine = 0.5 * (fine + np.transpose(fine, (0, 2, 1)))
        diff = float(np.max(np.abs(fine - snaps))) if len(times) else 0.0
        if diff >= STEP_HALVING_TOL:
            raise StepNotCertified(f"step halving changed Gamma by {diff:.3g}")
    return snaps


def weight_riccati(q, t_end, h=DEFAULT_STEP, times=None, check_step=False):
    """RK4 solution of the weight equation, G(0) = 0, sampled at ``times``.

    dGamma/dt = Q_re + 2(Gamma F_im + F_im^T Gamma) - 4 F_G^T Q_re F_G with
    F_G = J^{-1} Gamma.  ``times`` defaults to 101 equispaced points on
    [0, t_end].
    """
    if not 0 < t_end <= MAX_T:
        raise ValueError(f"t_end must lie in (0, {MAX_T}], got {t_end}")
    if not 0 < h <= 1e-3:
        raise ValueError(f"step must lie in (0, 1e-3], got {h}")
    times = _output_times(t_end, times)
    snaps = riccati_matrices(q.Q_re, hamilton_map(q).F_im, times, h, check_step)
    return [WeightForm(float(t), G) for t, G in zip(times, snaps)]


def tan_matrix(M):
    """tan(M) = -i (e^{2iM} - I)(e^{2iM} + I)^{-1}; returns (tan, ||(e^{2iM}+I)^{-1}||)."""
    E = expm(2j * np.asarray(M))
    eye = np.eye(E.shape[0])
    inv = np.linalg.inv(E + eye)
    return -1j * (E - eye) @ inv, float(np.linalg.norm(inv, 2))


def weight_closed_form_real(q, t):
    """Gamma = sym(1/2 J tan(2tF)) for a real symbol (Im q = 0)."""
    if np.any(q.Q_im != 0):
        raise ValueError("closed form applies to real symbols only")
    F = hamilton_map(q).F_re
    T, inv_norm = tan_matrix(2.0 * t * F)
    if inv_norm > TAN_INV_LIMIT:
        raise TanSingular(f"cos(2tF) nearly singular at t={t} (inverse norm {inv_norm:.3g})")
    Gamma = _sym(0.5 * symplectic_matrix(q.n) @ T.real)
    return WeightForm(float(t), Gamma, {"inverse_norm": inv_norm})


def lagrangian_gamma(F, t):
    """Gamma with exp(2itF)(R^{2n}) = {X + 2i J^{-1} Gamma X}.

    ``F`` is a complex Hamilton map.  Returns ``(Gamma, info)``.
    """
    n = F.shape[0] // 2
    U = expm(2j * t * F)
    A, B = U.real, U.imag
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > GRAPH_COND_LIMIT:
        raise PlaneNotGraph(f"Re exp(2itF) is singular at t={t} (cond {cond:.3g})")
    K = np.linalg.solve(A.T, B.T).T
    Gamma = _sym(0.5 * symplectic_matrix(n) @ K)
    residual = float(np.max(np.abs(K - 2.0 * inverse_symplectic_matrix(n) @ Gamma)))
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(K)))):
        raise PlaneNotGraph(f"plane is not Lagrangian to tolerance (residual {residual:.3g})")
    return Gamma, {"cond_A": cond, "residual": residual}


def lagrangian_weight(q, t):
    Gamma, info = lagrangian_gamma(hamilton_map(q).F, t)
    return WeightForm(float(t), Gamma, info)


def _critical_function(Gamma, n):
    """f(w, z) = -Im phi(x, y) - eta.Im y + G(Re y, eta) on R^{2n} x R^{3n}."""

    def f(v):
        x = v[:n] + 1j * v[n:2 * n]
        re_y, im_y, eta = v[2 * n:3 * n], v[3 * n:4 * n], v[4 * n:5 * n]
        Y = np.concatenate([re_y, eta])
        return -bargmann_phase(x, re_y + 1j * im_y).imag - eta @ im_y + Y @ Gamma @ Y

    return f


def _hessian(f, dim):
    """Exact Hessian of a homogeneous quadratic f(v) = v^T M v / 2."""
    eye = np.eye(dim)
    diag = np.array([f(eye[i]) for i in range(dim)])
    H = np.empty((dim, dim))
    for i in range(dim):
        H[i, i] = 2.0 * diag[i]
        for j in range(i + 1, dim):
            H[i, j] = H[j, i] = f(eye[i] + eye[j]) - diag[i] - diag[j]
    return H


def phi_from_weight(w):
    """Critical value over (y, eta) in C^n x R^n that turns G_t into Phi_t.

    The stationarity equations are linear in (Re y, Im y, eta); they are
    solved for each basis vector w = (Re x, Im x) and the critical values are
    polarized into the matrix P.
    """
    Gamma = np.asarray(w.Gamma, dtype=float)
    n = Gamma.shape[0] // 2
    f = _critical_function(Gamma, n)
    H = _hessian(f, 5 * n)
    Hzz = H[2 * n:, 2 * n:]
    Hzw = H[2 * n:, :2 * n]
    cond = float(np.linalg.cond(Hzz))
    if not np.isfinite(cond) or cond > CRITICAL_COND_LIMIT:
        raise DegenerateCriticalPoint(f"stationarity system condition number {cond:.3g}")

    def critical_value(wvec):
        z = np.linalg.solve(Hzz, -Hzw @ wvec)
        return f(np.concatenate([wvec, z]))

    eye = np.eye(2 * n)
    vals = [critical_value(eye[i]) for i in range(2 * n)]
    P = np.empty((2 * n, 2 * n))
    for i in range(2 * n):
        P[i, i] = vals[i]
        for j in range(i + 1, 2 * n):
            P[i, j] = P[j, i] = 0.5 * (critical_value(eye[i] + eye[j]) - vals[i] - vals[j])
    return PhiForm(w.t, P)


def phi0_by_maximization(x, grid=None):
    """Phi0(x) = sup over real y of -Im phi(x, y), by brute force on a grid (n = 1)."""
    if grid is None:
        grid = np.linspace(-20.0, 20.0, 400001)
    x = complex(x)
    vals = -(0.5j * (x * x + grid * grid) - 1j * np.sqrt(2.0) * x * grid).imag
    return float(np.max(vals))


def hamilton_jacobi_residual(q, t, xs, h=1e-4):
    """d/dt Phi_t(x) - Re q~(x, (2/i) d_x Phi_t(x)) at the points ``xs``.

    The time derivative is a central difference; the holomorphic derivative
    d_x = (d_Re - i d_Im)/2 is exact for quadratic Phi.
    """
    if t - h < 0:
        raise ValueError("need t >= h for the central difference")
    F = hamilton_map(q).F
    P_plus = phi_from_weight(WeightForm(t + h, lagrangian_gamma(F, t + h)[0])).P
    P_minus = phi_from_weight(WeightForm(t - h, lagrangian_gamma(F, t - h)[0])).P
    P = phi_from_weight(WeightForm(t, lagrangian_gamma(F, t)[0])).P
    Qt = conjugate_by_bargmann(q)
    n = q.n
    out = []
    for x in np.atleast_2d(np.asarray(xs, dtype=complex)):
        w = np.concatenate([x.real, x.imag])
        dphi_dt = (w @ P_plus @ w - w @ P_minus @ w) / (2.0 * h)
        g = 2.0 * P @ w
        xi = -g[n:] - 1j * g[:n]
        out.append(dphi_dt - evaluate_form(Qt, np.concatenate([x, xi])).real)
    return np.array(out)


def gamma_curve(q, t_grid, h=DEFAULT_STEP):
    """Fit of lambda_min(Gamma_t) from the Riccati route; expected slope 2k0+1."""
    k0_index(q)
    t_grid = np.asarray(t_grid, dtype=float)
    snaps = riccati_matrices(q.Q_re, hamilton_map(q).F_im, t_grid, h)
    values = np.array([np.linalg.eigvalsh(G)[0] for G in snaps])
    return fit_power_law(t_grid, values)


def phi_gap_curve(q, t_grid, h=DEFAULT_STEP):
    """Fit of lambda_min(P(t) - I/2) for the forward evolution."""
    k0_index(q)
    t_grid = np.asarray(t_grid, dtype=float)
    snaps = riccati_matrices(q.Q_re, hamilton_map(q).F_im, t_grid, h)
    values = np.array([np.linalg.eigvalsh(phi_from_weight(WeightForm(t, G)).gap())[0]
                       for t, G in zip(t_grid, snaps)])
    return fit_power_law(t_grid, values)


def backward_gammas(q, t_grid, h=DEFAULT_STEP):
    """Weights of the backward evolution, i.e. the forward evolution of -q."""
    return riccati_matrices(-q.Q_re, -hamilton_map(q).F_im, np.asarray(t_grid, float), h)


def phi_decay_check(q, t_grid, h=DEFAULT_STEP):
    """Fit of lambda_min(I/2 - P~(t)) for the backward evolution; expected slope 2k0+1."""
    k0_index(q)
    t_grid = np.asarray(t_grid, dtype=float)
    snaps = backward_gammas(q, t_grid, h)
    values = np.array([-np.linalg.eigvalsh(phi_from_weight(WeightForm(t, G)).gap())[-1]
                       for t, G in zip(t_grid, snaps)])
    return fit_power_law(t_grid, values)


def route_agreement(q, times, h=DEFAULT_STEP):
    """Max entrywise differences between the weight routes on ``times``.

    Returns a dict with key ``lagrangian`` and, for real symbols, ``closed_form``.
    """
    times = np.asarray(times, dtype=float)
    snaps = riccati_matrices(q.Q_re, hamilton_map(q).F_im, times, h)
    F = hamilton_map(q).F
    out = {"lagrangian": max(float(np.max(np.abs(G - lagrangian_gamma(F, t)[0])))
                             for t, G in zip(times, snaps))}
    if not np.any(q.Q_im):
        out["closed_form"] = max(float(np.max(np.abs(G - weight_closed_form_real(q, t).Gamma)))
                                 for t, G in zip(times, snaps))
    return out
