"""Weyl quantization of quadratic symbols on truncated Hermite bases.

The basis {psi_alpha : |alpha| <= N} is ordered by |alpha| and then
lexicographically, so every smaller cutoff is a leading principal block.
With x_j = (a_j + a_j^*)/sqrt2 and D_j = (a_j - a_j^*)/(i sqrt2) a quadratic
symbol quantizes to

    q^w = sum A_jk a_j a_k + sum B_jk a_j^* a_k^* + sum C_jk a_j^* a_k + c0,

and the matrix elements of these normal-ordered monomials are computed
directly, so a truncation at |alpha| <= N is exact (no products of truncated
ladder matrices are formed).
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement
from math import comb, sqrt

import numpy as np
from scipy.linalg import eigh, expm
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import (CutoffTooSmall, ExpmNotConverged, InsufficientDecayRange,
                     NoStableC0)
from .fitting import SlopeFitReport, fit_power_law
from .singular import k0_index

MAX_BASIS = 200_000
CONTRACTION_SLACK = 1e-8
HALVING_TOL = 1e-10
STABILITY_RTOL = 0.10


def basis_size(n, N):
    return comb(N + n, n)


def multi_indices(n, N):
    """Multi-indices with |alpha| <= N, graded by |alpha| then lexicographic."""
    out = []
    for total in range(N + 1):
        layer = []
        # compositions of total into n parts
        for bars in combinations_with_replacement(range(n), total):
            alpha = [0] * n
            for b in bars:
                alpha[b] += 1
            layer.append(tuple(alpha))
        out.extend(sorted(layer))
    return out


@dataclass(frozen=True)
class HermiteBasis:
    n: int
    N: int

    def __post_init__(self):
        if self.n < 1 or self.N < 0:
            raise ValueError(f"invalid basis n={self.n}, N={self.N}")
        if basis_size(self.n, self.N) > MAX_BASIS:
            raise ValueError(f"basis with n={self.n}, N={self.N} has "
                             f"{basis_size(self.n, self.N)} elements (limit {MAX_BASIS})")

    @cached_property
    def indices(self):
        return multi_indices(self.n, self.N)

    @cached_property
    def position(self):
        return {alpha: i for i, alpha in enumerate(self.indices)}

    @cached_property
    def layers(self):
        return np.array([sum(a) for a in self.indices])

    @cached_property
    def eigenvalues(self):
        """Harmonic oscillator eigenvalues 2|alpha| + n."""
        return 2.0 * self.layers + self.n

    def __len__(self):
        return len(self.indices)

    def block(self, N_obs):
        """Number of leading basis elements with |alpha| <= N_obs."""
        return basis_size(self.n, N_obs)

    def metadata(self):
        return {"n": self.n, "N": self.N, "size": len(self),
                "ordering": "graded by |alpha|, then lexicographic"}


@dataclass
class GalerkinOperator:
    basis: HermiteBasis
    matrix: np.ndarray

    @property
    def n(self):
        return self.basis.n

    @property
    def N_build(self):
        return self.basis.N


@dataclass
class HermiteVector:
    basis: HermiteBasis
    coefficients: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.coefficients))


def ladder_coefficients(q):
    """(A, B, C, c0) of the normal-ordered form of q^w.

    Real and imaginary parts are written out separately so that q and its
    conjugate produce exactly conjugate coefficients.
    """
    n = q.n
    R, I = q.Q_re, q.Q_im
    Rxx, Rxk, Rkx, Rkk = R[:n, :n], R[:n, n:], R[n:, :n], R[n:, n:]
    Ixx, Ixk, Ikx, Ikk = I[:n, :n], I[:n, n:], I[n:, :n], I[n:, n:]
    A = 0.5 * (Rxx - Rkk + Ixk + Ikx) + 0.5j * (Ixx - Ikk - Rxk - Rkx)
    B = 0.5 * (Rxx - Rkk - Ixk - Ikx) + 0.5j * (Ixx - Ikk + Rxk + Rkx)
    C = (Rxx + Rkk - Ikx + Ixk) + 1j * (Ixx + Ikk + Rkx - Rxk)
    c0 = 0.5 * (np.trace(Rxx) + np.trace(Rkk)) + 0.5j * (np.trace(Ixx) + np.trace(Ikk))
    return A, B, C, c0


def quantize(q, N_build):
    """Matrix of q^w on {psi_alpha : |alpha| <= N_build}."""
    if N_build < 4:
        raise ValueError("N_build must be >= 4")
    basis = HermiteBasis(q.n, N_build)
    n = q.n
    A, B, C, c0 = ladder_coefficients(q)
    pos = basis.position
    size = len(basis)
    M = np.zeros((size, size), dtype=complex)
    pairs = [(j, k) for j in range(n) for k in range(n)]
    for col, alpha in enumerate(basis.indices):
        M[col, col] += c0
        for j, k in pairs:
            e_jk = 1 if j == k else 0
            if A[j, k] != 0 and alpha[k] > 0 and alpha[j] - e_jk > 0:
                beta = list(alpha)
                beta[k] -= 1
                beta[j] -= 1
                M[pos[tuple(beta)], col] += A[j, k] * sqrt(alpha[k] * (alpha[j] - e_jk))
            if B[j, k] != 0 and sum(alpha) + 2 <= N_build:
                beta = list(alpha)
                beta[k] += 1
                beta[j] += 1
                M[pos[tuple(beta)], col] += B[j, k] * sqrt((alpha[k] + 1) * (alpha[j] + 1 + e_jk))
            if C[j, k] != 0 and alpha[k] > 0:
                if j == k:
                    M[col, col] += C[j, k] * alpha[k]
                else:
                    beta = list(alpha)
                    beta[k] -= 1
                    beta[j] += 1
                    M[pos[tuple(beta)], col] += C[j, k] * sqrt(alpha[k] * (alpha[j] + 1))
    return GalerkinOperator(basis, M)


def semigroup_matrix(op, t):
    """exp(-t M) by scaling and squaring, with a halving self-check."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return np.eye(len(op.basis), dtype=complex)
    E = expm(-t * op.matrix)
    if not np.all(np.isfinite(E)):
        raise ExpmNotConverged(f"non-finite exponential at t={t}")
    half = expm(-0.5 * t * op.matrix)
    err = float(np.linalg.norm(E - half @ half, 2))
    if err > HALVING_TOL * max(1.0, float(np.linalg.norm(E, 2))):
        raise ExpmNotConverged(f"halving check failed at t={t}: {err:.3g}")
    return E


def semigroup_apply(op, t, u):
    """exp(-t q^w) u on the truncated basis; ``u`` is a HermiteVector or array."""
    coeffs = u.coefficients if isinstance(u, HermiteVector) else np.asarray(u)
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return HermiteVector(op.basis, coeffs.astype(complex))
    v = expm(-t * op.matrix) @ coeffs
    half = expm(-0.5 * t * op.matrix)
    v2 = half @ (half @ coeffs)
    unorm = float(np.linalg.norm(coeffs))
    if not np.all(np.isfinite(v)) or np.linalg.norm(v - v2) > HALVING_TOL * max(unorm, 1e-300):
        raise ExpmNotConverged(f"halving check failed at t={t}")
    if np.linalg.norm(v) > unorm * (1 + CONTRACTION_SLACK):
        raise ExpmNotConverged(f"semigroup failed to contract at t={t}")
    return HermiteVector(op.basis, v)


def hermite_state(basis, alpha):
    c = np.zeros(len(basis), dtype=complex)
    c[basis.position[tuple(alpha)]] = 1.0
    return HermiteVector(basis, c)


def flat_state(basis, N):
    """Normalized sum of all psi_alpha with |alpha| <= N."""
    c = np.zeros(len(basis), dtype=complex)
    c[: basis.block(N)] = 1.0
    return HermiteVector(basis, c / np.linalg.norm(c))


def _max_singular(M):
    return float(np.linalg.norm(M, 2))


def _check_obs(N_build, N_obs):
    if N_obs > N_build // 2:
        raise ValueError(f"N_obs={N_obs} exceeds the guard band N_build/2={N_build // 2}")


def smoothing_norms(q, N_build, N_obs, k_list, t_grid):
    """||P^k exp(-t q^w)|| on inputs with |alpha| <= N_obs; array of shape (len(k_list), len(t_grid))."""
    _check_obs(N_build, N_obs)
    op = quantize(q, N_build)
    lam = op.basis.eigenvalues
    s_obs = op.basis.block(N_obs)
    out = np.zeros((len(k_list), len(t_grid)))
    for j, t in enumerate(t_grid):
        E = semigroup_matrix(op, t)[:, :s_obs]
        for i, k in enumerate(k_list):
            out[i, j] = _max_singular((lam ** k)[:, None] * E)
    return out


def smoothing_norm_report(q, N_build, N_obs, k_list, t_grid, check_stability=True):
    """Power-law fits of ||P^k e^{-t q^w}|| against t for each k.

    The expected slope is -(2 k0 + 1) k.  With ``check_stability`` the sweep
    is repeated at 2 N_build and ``unstable[k]`` is set when any value moves
    by more than 10 %.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    vals = smoothing_norms(q, N_build, N_obs, k_list, t_grid)
    reports = {k: fit_power_law(t_grid, vals[i]) for i, k in enumerate(k_list)}
    unstable = {}
    if check_stability:
        vals2 = smoothing_norms(q, 2 * N_build, N_obs, k_list, t_grid)
        for i, k in enumerate(k_list):
            change = float(np.max(np.abs(vals2[i] - vals[i]) / vals[i]))
            unstable[k] = change > STABILITY_RTOL
            reports[k].stability_change = change
    return reports, unstable


def decay_rate(coefficients, layers, floor=1e-13):
    """Rate r >= 0 of a fit log|a_alpha| ~ c - r |alpha| over coefficients above ``floor``."""
    mag = np.abs(coefficients)
    usable = mag > floor
    if np.count_nonzero(usable) < 5:
        raise InsufficientDecayRange(f"only {np.count_nonzero(usable)} coefficients above {floor}")
    slope = np.polyfit(layers[usable].astype(float), np.log(mag[usable]), 1)[0]
    return max(0.0, -float(slope))


def coefficient_decay(q, u, t_grid, N_build, fit_layers=None):
    """Hermite-coefficient decay rates r(t) of exp(-t q^w) u and the fit of r against t.

    ``fit_layers`` restricts the per-time fit to |alpha| <= fit_layers.
    Returns ``(rates, report)``; the expected slope is 2 k0 + 1.
    """
    op = quantize(q, N_build)
    coeffs = u.coefficients if isinstance(u, HermiteVector) else np.asarray(u)
    if coeffs.shape[0] != len(op.basis):
        raise ValueError("u does not live on the N_build basis")
    layers = op.basis.layers
    mask = slice(None) if fit_layers is None else slice(0, op.basis.block(fit_layers))
    t_grid = np.asarray(t_grid, dtype=float)
    rates = []
    for t in t_grid:
        a = semigroup_apply(op, t, coeffs).coefficients
        rates.append(decay_rate(a[mask], layers[mask]))
    rates = np.array(rates)
    return rates, fit_power_law(t_grid, rates)


def _max_generalized(W, G):
    """Largest sup_u (u* W u)/(||A u|| + ||u||)^2 with G = A* A.

    Uses (a + b)^2 = min_s a^2/s + b^2/(1-s) over s in (0, 1), which turns
    the ratio into a one-parameter family of generalized eigenproblems.
    """
    eye = np.eye(G.shape[0])

    def top(logit):
        s = 1.0 / (1.0 + np.exp(-logit))
        return float(eigh(W, G / s + eye / (1.0 - s), eigvals_only=True)[-1])

    grid = np.linspace(-20.0, 20.0, 81)
    vals = [top(g) for g in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda g: -top(g), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6})
    return max(vals[i], -float(res.fun))


def subelliptic_constant(q, N_build, N_obs, lam, k0=None):
    """max over u in the N_obs block of ||L u|| / (||(q^w - i lam) u|| + ||u||).

    L = diag((1 + lambda_alpha)^delta) with delta = 1/(2 k0 + 1).  The
    columns of q^w restricted to |alpha| <= N_obs are exact as long as
    N_build >= N_obs + 2, since q^w shifts |alpha| by at most 2.
    """
    if N_build < N_obs + 2:
        raise ValueError("N_build must be at least N_obs + 2")
    if k0 is None:
        k0 = k0_index(q)
    delta = 1.0 / (2 * k0 + 1)
    op = quantize(q, N_build)
    s_obs = op.basis.block(N_obs)
    A = op.matrix[:, :s_obs] - 1j * lam * np.eye(len(op.basis))[:, :s_obs]
    G = A.conj().T @ A
    G = 0.5 * (G + G.conj().T)
    W = np.diag((1.0 + op.basis.eigenvalues[:s_obs]) ** (2 * delta))
    return float(np.sqrt(_max_generalized(W, G)))


def subelliptic_ratio(q, N_build, lam, u, k0=None):
    """||L u|| / (||(q^w - i lam) u|| + ||u||) for a single vector u."""
    if k0 is None:
        k0 = k0_index(q)
    delta = 1.0 / (2 * k0 + 1)
    op = quantize(q, N_build)
    u = u.coefficients if isinstance(u, HermiteVector) else np.asarray(u)
    Lu = (1.0 + op.basis.eigenvalues) ** delta * u
    Au = op.matrix @ u - 1j * lam * u
    return float(np.linalg.norm(Lu) / (np.linalg.norm(Au) + np.linalg.norm(u)))


def hermite_tail_sum(y, n):
    """F(y) = sum over alpha in N^n of exp(-y |alpha|) = (1 - e^{-y})^{-n}."""
    if y <= 0:
        raise ValueError("y must be positive")
    return float((-np.expm1(-y)) ** (-n))


def hermite_tail_sum_direct(y, n, tol=1e-16):
    """Truncated direct sum of exp(-y|alpha|) over alpha, grouped by |alpha| = m."""
    total = 0.0
    m = 0
    while True:
        term = comb(m + n - 1, n - 1) * np.exp(-y * m)
        total += term
        if m > 10 and term < tol * total:
            return float(total)
        m += 1


def calibrate_c0(q, N_build, N_obs, t_grid, max_power=30):
    """Smallest C0 = 2^m such that ||exp(s(t) P) exp(-t q^w)|| <= 2 on the grid.

    s(t) = t^{2k0+1}/C0, inputs restricted to |alpha| <= N_obs.  The bound
    must hold at N_build and at 2 N_build, and the two sweeps must agree to
    10 %.  Raises NoStableC0 when no m <= ``max_power`` works.
    """
    _check_obs(N_build, N_obs)
    k0 = k0_index(q)
    t_grid = np.asarray(t_grid, dtype=float)
    sweeps = []
    for N in (N_build, 2 * N_build):
        op = quantize(q, N)
        s_obs = op.basis.block(N_obs)
        sweeps.append((op.basis.eigenvalues,
                       [semigroup_matrix(op, t)[:, :s_obs] for t in t_grid]))

    def norms(C0, sweep):
        lam, mats = sweep
        return np.array([_max_singular(np.exp(t ** (2 * k0 + 1) / C0 * lam)[:, None] * E)
                         for t, E in zip(t_grid, mats)])

    for m in range(max_power + 1):
        C0 = 2.0 ** m
        a, b = norms(C0, sweeps[0]), norms(C0, sweeps[1])
        if np.all(a <= 2.0) and np.all(b <= 2.0) and np.all(np.abs(b - a) <= STABILITY_RTOL * a):
            return C0
    raise NoStableC0(f"no C0 = 2^m with m <= {max_power} keeps the norm below 2")


def _position_matrix(basis, j, derivative):
    """x_j (or d/dx_j when ``derivative``) from cutoff N to N + 1, as a dense matrix."""
    big = HermiteBasis(basis.n, basis.N + 1)
    M = np.zeros((len(big), len(basis)))
    sign = -1.0 if derivative else 1.0
    for col, alpha in enumerate(basis.indices):
        up = list(alpha)
        up[j] += 1
        M[big.position[tuple(up)], col] += sign * sqrt((alpha[j] + 1) / 2.0)
        if alpha[j] > 0:
            down = list(alpha)
            down[j] -= 1
            M[big.position[tuple(down)], col] += sqrt(alpha[j] / 2.0)
    return big, M


def apply_monomial(basis, coeffs, mu, nu):
    """Coefficients of x^mu d^nu u on the enlarged basis of cutoff N + |mu| + |nu|.

    Derivatives act first, then multiplications.
    """
    coeffs = np.asarray(coeffs)
    ops = [(j, True) for j in range(basis.n) for _ in range(nu[j])]
    ops += [(j, False) for j in range(basis.n) for _ in range(mu[j])]
    for j, derivative in ops:
        basis, M = _position_matrix(basis, j, derivative)
        coeffs = M @ coeffs
    return basis, coeffs


def evaluate_on_grid(basis, coeffs, points=400, L=None):
    """Evaluate sum c_alpha psi_alpha on the uniform grid [-L, L]^n."""
    n = basis.n
    if L is None:
        L = np.sqrt(2.0 * basis.N) + 4.0
    x = np.linspace(-L, L, points)
    H = kernels.hermite_functions(x, basis.N)
    tensor = np.zeros((basis.N + 1,) * n, dtype=complex)
    for c, alpha in zip(coeffs, basis.indices):
        tensor[alpha] = c
    vals = tensor
    for _ in range(n):
        # contract the leading axis with H and rotate it to the back
        vals = np.tensordot(vals, H, axes=([0], [0]))
    return x, vals


def weighted_seminorm(u, mu, nu, points=400, layer_tol=1e-8):
    """(L2 norm, grid sup-norm) of x^mu d^nu u for a HermiteVector ``u``.

    Raises CutoffTooSmall when the two top layers of the input basis and
    everything above carry more than ``layer_tol`` of the result's norm.
    """
    mu = tuple(mu)
    nu = tuple(nu)
    basis = u.basis
    if len(mu) != basis.n or len(nu) != basis.n:
        raise ValueError("multi-index length must equal n")
    if sum(mu) + sum(nu) > 6:
        raise ValueError("|mu| + |nu| <= 6 at desk scale")
    big, c = apply_monomial(basis, u.coefficients, mu, nu)
    l2 = float(np.linalg.norm(c))
    top = big.layers > basis.N - 2
    if l2 > 0 and np.linalg.norm(c[top]) > layer_tol * l2:
        raise CutoffTooSmall("result carries weight in the top layers; raise N_build")
    L = np.sqrt(2.0 * basis.N) + 4.0
    _, vals = evaluate_on_grid(big, c, points, L)
    return l2, float(np.max(np.abs(vals)))


def weighted_operator_norm(q, N_build, N_obs, mu, nu, t):
    """||x^mu d^nu exp(-t q^w)|| on inputs with |alpha| <= N_obs."""
    _check_obs(N_build, N_obs)
    op = quantize(q, N_build)
    E = semigroup_matrix(op, t)[:, : op.basis.block(N_obs)]
    _, out = apply_monomial(op.basis, E, mu, nu)
    return _max_singular(out)
