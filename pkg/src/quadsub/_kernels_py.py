"""Pure-Python/numpy versions of the hot loops (fallback for ``_kernels``)."""

import math

import numpy as np


def _riccati_rhs(G, Q_re, F_im, Jinv):
    FG = Jinv @ G
    return Q_re + 2.0 * (G @ F_im + F_im.T @ G) - 4.0 * (FG.T @ Q_re @ FG)


def riccati_rk4(Q_re, F_im, times, h, blowup):
    """Classical RK4 for dG/dt = Q_re + 2(G F + F^T G) - 4 F_G^T Q_re F_G, G(0) = 0.

    Between consecutive output times the interval is split into
    ceil(dt / h) equal steps.  Returns ``(snapshots, completed)``; when the
    max-abs norm of G exceeds ``blowup`` integration stops and ``completed``
    counts the snapshots actually written.
    """
    Q_re = np.asarray(Q_re, dtype=float)
    F_im = np.asarray(F_im, dtype=float)
    m = Q_re.shape[0]
    n = m // 2
    Jinv = np.zeros((m, m))
    Jinv[:n, n:] = np.eye(n)
    Jinv[n:, :n] = -np.eye(n)
    times = np.asarray(times, dtype=float)
    out = np.zeros((times.size, m, m))
    G = np.zeros((m, m))
    t = 0.0
    for k, target in enumerate(times):
        span = target - t
        steps = int(math.ceil(span / h - 1e-12)) if span > 0 else 0
        if steps:
            dt = span / steps
            for _ in range(steps):
                k1 = _riccati_rhs(G, Q_re, F_im, Jinv)
                k2 = _riccati_rhs(G + 0.5 * dt * k1, Q_re, F_im, Jinv)
                k3 = _riccati_rhs(G + 0.5 * dt * k2, Q_re, F_im, Jinv)
                k4 = _riccati_rhs(G + dt * k3, Q_re, F_im, Jinv)
                G = G + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not np.all(np.abs(G) <= blowup):
                    return out, k
        t = target
        out[k] = G
    return out, times.size


def hermite_functions(x, nmax):
    """Orthonormal Hermite functions psi_0..psi_nmax evaluated at the points ``x``.

    Uses psi_{k+1} = sqrt(2/(k+1)) x psi_k - sqrt(k/(k+1)) psi_{k-1}, which
    stays bounded where the raw polynomials would overflow.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((nmax + 1, x.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, nmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out
