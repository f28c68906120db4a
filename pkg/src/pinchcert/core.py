"""Dense complex matrix kernel.

Matrices are plain ``numpy`` complex arrays. Structural properties
(Hermitian, unitary, projection) are checked at function entry rather than
encoded in wrapper classes; the checks share one :class:`Tolerance`.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import NotPSDError, RankError, ShapeError, StructureError


@dataclass(frozen=True)
class Tolerance:
    """Tolerances threaded through every operation.

    A structural residual passes when it is at most
    ``abs_tol + rel_scale * n * norm``. Eigenvalues count as nonzero when they
    exceed ``rank_cutoff * lambda_max``.
    """

    abs_tol: float = 1e-12
    rel_scale: float = 1e-12
    rank_cutoff: float = 1e-10

    def __post_init__(self):
        for name in ("abs_tol", "rel_scale", "rank_cutoff"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def bound(self, n, norm=1.0):
        return self.abs_tol + self.rel_scale * n * norm


DEFAULT_TOL = Tolerance()

# Loose structural checks for matrices that come out of long rotation chains.
UNITARY_SCALE = 1e-10
IDEMPOTENT_SCALE = 1e-9


def as_square(X):
    """Return ``X`` as a complex square array, rejecting NaN/Inf."""
    A = np.asarray(X, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ShapeError(f"expected a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def fro(X):
    return float(np.linalg.norm(X))


def dagger(X):
    return np.conj(X).T


def normalized_trace(X):
    """Tr(X)/n; a real float when ``X`` is Hermitian."""
    A = as_square(X)
    t = np.trace(A) / A.shape[0]
    if np.allclose(A, dagger(A), rtol=0, atol=DEFAULT_TOL.bound(A.shape[0], fro(A))):
        return float(t.real)
    return complex(t)


def is_hermitian(X, tol=DEFAULT_TOL):
    A = as_square(X)
    return fro(A - dagger(A)) <= tol.bound(A.shape[0], fro(A))


def hermitian(X, tol=DEFAULT_TOL):
    """Validate and symmetrize a Hermitian matrix."""
    A = as_square(X)
    if fro(A - dagger(A)) > tol.bound(A.shape[0], fro(A)):
        raise StructureError("matrix is not Hermitian within tolerance")
    return (A + dagger(A)) / 2


def unitarity_residual(U):
    U = np.asarray(U)
    return fro(dagger(U) @ U - np.eye(U.shape[0]))


def is_unitary(U, scale=UNITARY_SCALE):
    U = as_square(U)
    return unitarity_residual(U) <= scale * U.shape[0]


def unitary(U, scale=UNITARY_SCALE):
    U = as_square(U)
    if unitarity_residual(U) > scale * U.shape[0]:
        raise StructureError("matrix is not unitary within tolerance")
    return U


def idempotency_residual(P):
    P = np.asarray(P)
    return fro(P @ P - P)


def is_projection(P, scale=IDEMPOTENT_SCALE):
    P = as_square(P)
    n = P.shape[0]
    return idempotency_residual(P) <= scale * n and fro(P - dagger(P)) <= scale * n


def projection_rank(P):
    """Number of eigenvalues above 1/2."""
    P = as_square(P)
    w = np.linalg.eigvalsh((P + dagger(P)) / 2)
    return int(np.sum(w > 0.5))


def projection(P, scale=IDEMPOTENT_SCALE):
    P = as_square(P)
    if not is_projection(P, scale):
        raise StructureError("matrix is not an orthogonal projection within tolerance")
    return (P + dagger(P)) / 2


# ---------------------------------------------------------------------------
# Eigendecomposition


def _normalize_phases(V):
    """Make the largest-magnitude entry of every column real positive."""
    idx = np.argmax(np.abs(V), axis=0)
    lead = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(lead) / lead)


def jacobi_eigh(X, max_sweeps=30, threshold=1e-14):
    """Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Sweeps all (p, q) planes in row order. Each plane is reduced to the real
    symmetric case by a phase on column q, then annihilated by a classical
    Jacobi rotation. Stops once the off-diagonal Frobenius norm drops below
    ``threshold * ||X||_F`` or after ``max_sweeps`` sweeps.

    Returns unsorted eigenvalues and the accumulated unitary.
    """
    H = np.array(as_square(X), dtype=complex)
    n = H.shape[0]
    V = np.eye(n, dtype=complex)
    stop = threshold * fro(H)
    for _ in range(max_sweeps):
        off = fro(H - np.diag(np.diag(H)))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                h = H[p, q]
                mag = abs(h)
                if mag == 0.0:
                    continue
                phase = h / mag
                a = H[p, p].real
                b = H[q, q].real
                zeta = (b - a) / (2.0 * mag)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on columns p, q
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                cols = H[:, [p, q]] @ g
                H[:, [p, q]] = cols
                H[[p, q], :] = dagger(g) @ H[[p, q], :]
                H[q, p] = 0.0
                H[p, q] = 0.0
                V[:, [p, q]] = V[:, [p, q]] @ g
    return np.real(np.diag(H)).copy(), V


def hermitian_eig(X, tol=DEFAULT_TOL, method="lapack"):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, V)`` with ``w`` ascending and ``X V = V diag(w)``. Ties keep
    the solver's column order; every eigenvector is phase-fixed so its
    largest-magnitude entry is real positive. ``method="jacobi"`` uses the
    self-contained :func:`jacobi_eigh`.
    """
    A = hermitian(X, tol)
    if method == "lapack":
        w, V = np.linalg.eigh(A)
    elif method == "jacobi":
        w, V = jacobi_eigh(A)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(w, kind="stable")
    return w[order], _normalize_phases(V[:, order])


def _cutoff(w, tol):
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    return tol.rank_cutoff * scale


def sqrt_psd(A, tol=DEFAULT_TOL):
    """Positive square root; eigenvalues in [-cutoff, 0) are clamped to zero."""
    w, V = hermitian_eig(A, tol)
    neg = max(_cutoff(w, tol), tol.abs_tol)
    if w.size and w[0] < -neg:
        raise NotPSDError(f"minimum eigenvalue {w[0]:.3e} is negative")
    root = np.sqrt(np.clip(w, 0.0, None))
    S = (V * root) @ dagger(V)
    return (S + dagger(S)) / 2


def is_psd(A, tol=DEFAULT_TOL):
    w = np.linalg.eigvalsh(hermitian(A, tol))
    return not (w.size and w[0] < -max(_cutoff(w, tol), tol.abs_tol))


def psd(A, tol=DEFAULT_TOL):
    A = hermitian(A, tol)
    if not is_psd(A, tol):
        raise NotPSDError("matrix is not positive semidefinite")
    return A


def complete_basis(Q, n):
    """Extend orthonormal columns ``Q`` to a basis of C^n.

    At each step the standard basis vector with the largest residual after
    projecting out the current basis is added (ties go to the lowest index),
    so the choice is deterministic and never ill-conditioned. Returns only
    the new columns.
    """
    Q = np.asarray(Q, dtype=complex).reshape(n, -1)
    basis = Q.copy()
    new = []
    for _ in range(n - Q.shape[1]):
        R = np.eye(n, dtype=complex)
        for _ in range(2):
            R = R - basis @ (dagger(basis) @ R)
        norms = np.linalg.norm(R, axis=0)
        j = int(np.argmax(norms))
        v = R[:, j] / norms[j]
        new.append(v)
        basis = np.column_stack([basis, v])
    return np.array(new, dtype=complex).T.reshape(n, len(new))


def canonical_basis(P):
    """Orthonormal basis of the range of a projection, basis-independent.

    Gram-Schmidt over P e_1, P e_2, ... in index order.
    """
    P = np.asarray(P, dtype=complex)
    n = P.shape[0]
    r = projection_rank(P)
    cols = []
    for j in range(n):
        if len(cols) == r:
            break
        v = P[:, j].copy()
        for _ in range(2):
            for u in cols:
                v = v - u * np.vdot(u, v)
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            cols.append(v / norm)
    return np.array(cols, dtype=complex).T.reshape(n, len(cols))


def polar(M, tol=DEFAULT_TOL):
    """Polar decomposition ``M = V P`` with ``V`` unitary and ``P = (M*M)^(1/2)``.

    On singular input the isometry between the ranges is completed on the
    kernels with :func:`complete_basis`, pairing left and right completion
    vectors in order.
    """
    M = as_square(M)
    n = M.shape[0]
    W, s, Yh = np.linalg.svd(M)
    r = int(np.sum(s > tol.rank_cutoff * s[0])) if s[0] > 0 else 0
    Y = dagger(Yh)
    V = W[:, :r] @ Yh[:r]
    if r < n:
        left = complete_basis(W[:, :r], n)
        right = complete_basis(Y[:, :r], n)
        V = V + left @ dagger(right)
    P = (Y[:, :r] * s[:r]) @ Yh[:r]
    return V, (P + dagger(P)) / 2


# ---------------------------------------------------------------------------
# Spectral and range projections


@dataclass(frozen=True)
class Interval:
    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, x, snap=0.0):
        if abs(x - self.lo) <= snap:
            below = self.lo_closed
        else:
            below = x > self.lo
        if abs(x - self.hi) <= snap:
            above = self.hi_closed
        else:
            above = x < self.hi
        return below and above


def spectral_projection(A, interval, tol=DEFAULT_TOL):
    """Projection onto the eigenvectors of ``A`` with eigenvalue in ``interval``.

    Eigenvalues within ``rank_cutoff * ||A||`` of an endpoint are snapped to it
    and then included according to the endpoint's closed flag.
    """
    w, V = hermitian_eig(A, tol)
    snap = _cutoff(w, tol)
    mask = np.array([interval.contains(x, snap) for x in w], dtype=bool)
    B = V[:, mask]
    return B @ dagger(B)


def range_projection(A, tol=DEFAULT_TOL):
    w, V = hermitian_eig(A, tol)
    mask = w > _cutoff(w, tol)
    B = V[:, mask]
    return B @ dagger(B)


def matrix_rank_psd(A, tol=DEFAULT_TOL):
    w = np.linalg.eigvalsh(hermitian(A, tol))
    return int(np.sum(w > _cutoff(w, tol)))


def range_basis(P):
    """Orthonormal basis of the range of a projection from :func:`hermitian_eig`."""
    w, V = hermitian_eig(P, DEFAULT_TOL)
    return V[:, w > 0.5]


@dataclass
class PartialIsometry:
    matrix: np.ndarray
    initial: np.ndarray
    final: np.ndarray


def partial_isometry(P, Q):
    """A partial isometry with initial projection P and final projection below Q.

    Eigenvectors of P and Q (from :func:`hermitian_eig`) are paired in order.
    """
    P = projection(P)
    Q = projection(Q)
    if P.shape != Q.shape:
        raise ShapeError("projections have different sizes")
    bp = range_basis(P)
    bq = range_basis(Q)
    if bp.shape[1] > bq.shape[1]:
        raise RankError(f"rank(P)={bp.shape[1]} exceeds rank(Q)={bq.shape[1]}")
    bq = bq[:, : bp.shape[1]]
    V = bq @ dagger(bp)
    return PartialIsometry(V, P, V @ dagger(V))
