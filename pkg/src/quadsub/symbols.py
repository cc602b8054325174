"""Phase-space conventions, quadratic symbols and Hamilton maps.

Coordinates are X = (x, xi) with the position block first.  The symplectic
form is sigma(X, Y) = xi.y - x.eta = X^T J Y with J = [[0, -I], [I, 0]].
A quadratic symbol q(X) = X^T Q X has Hamilton map F = J^{-1} Q, so that
q(X, Y) = sigma(X, F Y), and the Hamilton field of a real form f is
H_f = 2 F_f.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import SymbolError

PSD_TOL = 1e-10
SQRT2 = np.sqrt(2.0)


def symplectic_matrix(n):
    """Return J = [[0, -I], [I, 0]] of size 2n."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def inverse_symplectic_matrix(n):
    """Return J^{-1} = [[0, I], [-I, 0]]."""
    return -symplectic_matrix(n)


def sigma(X, Y):
    """Complex symplectic form sigma(X, Y) = X^T J Y (bilinear, no conjugation)."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    n = X.shape[0] // 2
    return X[n:] @ Y[:n] - X[:n] @ Y[n:]


def _sym(M):
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class QuadraticSymbol:
    """Complex quadratic form q(X) = X^T (Q_re + i Q_im) X on R^{2n}.

    Both matrices are symmetrized on construction.  ``Q_re`` must be positive
    semi-definite up to ``-1e-10 * ||Q_re||``.
    """

    n: int
    Q_re: np.ndarray
    Q_im: np.ndarray = None

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise SymbolError(f"n must be positive, got {self.n}")
        size = 2 * n
        Q_re = np.array(self.Q_re, dtype=float)
        Q_im = np.zeros((size, size)) if self.Q_im is None else np.array(self.Q_im, dtype=float)
        for name, M in (("Q_re", Q_re), ("Q_im", Q_im)):
            if M.shape != (size, size):
                raise SymbolError(f"{name} must be {size}x{size}, got shape {M.shape}")
            if not np.all(np.isfinite(M)):
                raise SymbolError(f"{name} has non-finite entries")
        Q_re = _sym(Q_re)
        Q_im = _sym(Q_im)
        scale = np.linalg.norm(Q_re, 2)
        if scale > 0 and np.linalg.eigvalsh(Q_re)[0] < -PSD_TOL * scale:
            raise SymbolError("Re q is not positive semi-definite")
        Q_re.setflags(write=False)
        Q_im.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "Q_re", Q_re)
        object.__setattr__(self, "Q_im", Q_im)

    @property
    def Q(self):
        return self.Q_re + 1j * self.Q_im

    def __call__(self, X, Y=None):
        """Evaluate q(X), or the polarization q(X, Y) when Y is given."""
        X = np.asarray(X)
        Y = X if Y is None else np.asarray(Y)
        return X @ self.Q @ Y

    def conjugate(self):
        return QuadraticSymbol(self.n, self.Q_re, -self.Q_im)

    def scaled(self, c):
        if c < 0:
            raise SymbolError("scaling by a negative factor breaks Re q >= 0")
        return QuadraticSymbol(self.n, c * self.Q_re, c * self.Q_im)

    def real_part(self):
        return RealQuadForm(self.Q_re)

    def imag_part(self):
        return RealQuadForm(self.Q_im)

    def to_json(self):
        return {"n": self.n, "Q_re": self.Q_re.tolist(), "Q_im": self.Q_im.tolist()}

    @classmethod
    def from_json(cls, obj):
        """Build from ``{"n": int, "Q_re": [[...]], "Q_im": [[...]]}`` (Q_im optional)."""
        if not isinstance(obj, dict) or "n" not in obj or "Q_re" not in obj:
            raise SymbolError("symbol JSON needs keys 'n' and 'Q_re'")
        n = obj["n"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise SymbolError("'n' must be an integer")
        mats = []
        for key in ("Q_re", "Q_im"):
            rows = obj.get(key)
            if rows is None:
                mats.append(None)
                continue
            if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
                raise SymbolError(f"{key} must be a list of rows")
            if len(rows) != 2 * n or any(len(r) != 2 * n for r in rows):
                raise SymbolError(f"{key} must be {2 * n}x{2 * n}")
            try:
                mats.append(np.array(rows, dtype=float))
            except (TypeError, ValueError) as exc:
                raise SymbolError(f"{key} has non-numeric entries") from exc
        return cls(n, mats[0], mats[1])


@dataclass(frozen=True)
class RealQuadForm:
    """Real quadratic form X -> X^T G X with symmetric G."""

    G: np.ndarray

    def __post_init__(self):
        G = _sym(np.array(self.G, dtype=float))
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] % 2:
            raise SymbolError(f"quadratic form matrix must be 2n x 2n, got {G.shape}")
        G.setflags(write=False)
        object.__setattr__(self, "G", G)

    @property
    def n(self):
        return self.G.shape[0] // 2

    def __call__(self, X):
        X = np.asarray(X)
        return X @ self.G @ X

    def hamilton_matrix(self):
        """F_f = J^{-1} G, so that H_f = 2 F_f."""
        return inverse_symplectic_matrix(self.n) @ self.G


@dataclass(frozen=True)
class HamiltonMap:
    F_re: np.ndarray
    F_im: np.ndarray

    @property
    def F(self):
        return self.F_re + 1j * self.F_im


@dataclass(frozen=True)
class CanonicalTransform:
    """Complex linear map A : (y, eta) -> (x, xi)."""

    A: np.ndarray

    def __call__(self, X):
        return self.A @ np.asarray(X)

    def inverse(self):
        return CanonicalTransform(np.linalg.inv(self.A))

    def is_symplectic(self, tol=1e-12):
        n = self.A.shape[0] // 2
        J = symplectic_matrix(n)
        return np.max(np.abs(self.A.T @ J @ self.A - J)) <= tol


def hamilton_map(q):
    """Hamilton map F = J^{-1}(Q_re + i Q_im) of the symbol ``q``."""
    Jinv = inverse_symplectic_matrix(q.n)
    return HamiltonMap(Jinv @ q.Q_re, Jinv @ q.Q_im)


def poisson_derivative(g, f):
    """Quadratic form H_f g, whose matrix is 2 (G F_f + F_f^T G).

    Parameters
    ----------
    g, f : RealQuadForm
        ``g`` is differentiated along the Hamilton field of ``f``.
    """
    if g.G.shape != f.G.shape:
        raise SymbolError(f"dimension mismatch: {g.G.shape} vs {f.G.shape}")
    Ff = f.hamilton_matrix()
    return RealQuadForm(2.0 * (g.G @ Ff + Ff.T @ g.G))


def hamiltonian_flow(f, t):
    """Time-t flow exp(t H_f) = exp(2 t F_f) of the real quadratic form ``f``."""
    return expm(2.0 * t * f.hamilton_matrix())


def bargmann_transform(n):
    """kappa_T(y, eta) = ((y - i eta)/sqrt2, (eta - i y)/sqrt2).

    This is the canonical map of the phase
    phi(x, y) = (i/2)(x^2 + y^2) - i sqrt2 x.y, for which Phi0(x) = |x|^2 / 2.
    """
    eye = np.eye(n)
    A = np.block([[eye, -1j * eye], [-1j * eye, eye]]) / SQRT2
    return CanonicalTransform(A)


def bargmann_phase(x, y):
    """phi(x, y) = (i/2)(x.x + y.y) - i sqrt2 x.y for complex vectors x, y."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return 0.5j * (x @ x + y @ y) - 1j * SQRT2 * (x @ y)


def conjugate_by_bargmann(q):
    """Complex symmetric matrix of q~ = q o kappa_T^{-1} on C^{2n}."""
    Ainv = np.linalg.inv(bargmann_transform(q.n).A)
    Qt = Ainv.T @ q.Q @ Ainv
    return 0.5 * (Qt + Qt.T)


def evaluate_form(M, Z):
    """Bilinear evaluation Z^T M Z (no complex conjugation)."""
    Z = np.asarray(Z)
    return Z @ M @ Z
