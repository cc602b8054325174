"""Singular space and the index k0 via the stacked Kalman-type rank test."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import subspace_angles

from .errors import SingularSpaceNonTrivial
from .symbols import RealQuadForm, hamilton_map, poisson_derivative

DEFAULT_TOL = 1e-10


@dataclass
class SubspaceBasis:
    columns: np.ndarray

    @property
    def dim(self):
        return self.columns.shape[1]


@dataclass
class SingularReport:
    dim_S: int
    k0: object
    ranks: list = field(default_factory=list)

    def to_json(self):
        return {"dim_S": int(self.dim_S), "k0": self.k0, "ranks": [int(r) for r in self.ranks]}


def _check_tol(tol):
    if not 0 < tol <= 1e-4:
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")


def kalman_blocks(q):
    """Q_re (Im F)^j for j = 0..2n-1.

    Ker[Re F M] = Ker[Q_re M] because J is invertible, so the real part of
    the symbol stands in for Re F.
    """
    Fim = hamilton_map(q).F_im
    blocks = []
    M = np.eye(2 * q.n)
    for _ in range(2 * q.n):
        blocks.append(q.Q_re @ M)
        M = Fim @ M
    return blocks


def _null_space(A, tol):
    _, s, vh = np.linalg.svd(A)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(A.shape[1]), 0
    rank = int(np.sum(s > tol * smax))
    return vh[rank:].T.copy(), rank


def _rank(A, tol, scale):
    if scale == 0.0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > tol * scale))


def stacked_ranks(q, tol=DEFAULT_TOL):
    """Rank of the stacked blocks after including powers j = 0..2n-1.

    The threshold is relative to the largest singular value of the full
    stack, so the rank sequence is measured on one fixed scale.
    """
    blocks = kalman_blocks(q)
    full = np.vstack(blocks)
    scale = np.linalg.norm(full, 2)
    return [_rank(np.vstack(blocks[: j + 1]), tol, scale) for j in range(len(blocks))]


def singular_space(q, tol=DEFAULT_TOL):
    """Orthonormal basis of the singular space S of ``q``."""
    _check_tol(tol)
    basis, _ = _null_space(np.vstack(kalman_blocks(q)), tol)
    return SubspaceBasis(basis)


def singular_report(q, tol=DEFAULT_TOL):
    _check_tol(tol)
    ranks = stacked_ranks(q, tol)
    size = 2 * q.n
    dim_S = size - ranks[-1]
    k0 = next((j for j, r in enumerate(ranks) if r == size), "undefined")
    return SingularReport(dim_S, k0, ranks)


def k0_index(q, tol=DEFAULT_TOL):
    """Smallest j such that the stack through power j has full rank 2n.

    Raises
    ------
    SingularSpaceNonTrivial
        If S != {0}; k0 is then undefined.
    """
    report = singular_report(q, tol)
    if report.dim_S > 0:
        raise SingularSpaceNonTrivial(report.dim_S)
    return report.k0


def iterated_poisson_forms(q, k_max):
    """G_0 = Re q, G_{k+1} = H_{Im q} G_k for k < k_max."""
    forms = [RealQuadForm(q.Q_re)]
    im = RealQuadForm(q.Q_im)
    for _ in range(k_max):
        forms.append(poisson_derivative(forms[-1], im))
    return forms


def singular_space_dynamic(q, tol=DEFAULT_TOL, k_max=None):
    """Singular space from the vanishing of H_{Im q}^k Re q, k = 0..k_max.

    Truncation at k_max = 2n - 1 suffices by Cayley-Hamilton applied to Im F.
    """
    _check_tol(tol)
    if k_max is None:
        k_max = 2 * q.n - 1
    if k_max < 2 * q.n - 1:
        raise ValueError(f"k_max must be >= 2n-1 = {2 * q.n - 1}")
    stack = np.vstack([g.G for g in iterated_poisson_forms(q, k_max)])
    basis, _ = _null_space(stack, tol)
    return SubspaceBasis(basis)


def same_span(a, b, tol=1e-8):
    """True when two subspace bases span the same space (principal angles < tol)."""
    if a.dim != b.dim:
        return False
    if a.dim == 0:
        return True
    return bool(np.max(subspace_angles(a.columns, b.columns)) < tol)
