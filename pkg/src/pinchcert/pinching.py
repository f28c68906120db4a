"""Trace-constant pinchings and the order-N unitaries that average to the trace.

A pinching certificate for ``X`` is an orthogonal decomposition of the
identity ``I = sum_j E_j`` with ``E_j X E_j = t E_j`` where ``t = tau(X)``.
From it, ``W = sum_k exp(2 pi i k / N) E_k`` satisfies ``W^N = I`` and
``(1/N) sum_j W^-j X W^j = t I``; :func:`pinching_from_averaging_unitary`
goes back the other way.
"""

from dataclasses import dataclass, field
import cmath
import math

import numpy as np
import scipy.linalg
import scipy.optimize

from .core import (
    DEFAULT_TOL,
    dagger,
    fro,
    hermitian,
    hermitian_eig,
    is_projection,
    normalized_trace,
    projection_rank,
    unitary,
)
from .errors import BranchError, CertificateError, InfeasibleError, NotAveragingError

# Entries closer than this (relative to 1 + ||X||_F) count as already on target.
_SETTLED = 1e-15


@dataclass
class PinchingCertificate:
    matrix: np.ndarray
    projections: list
    target: float
    residual: float
    basis: np.ndarray
    certified: bool = True
    rotations: int = 0

    @property
    def order(self):
        return len(self.projections)


@dataclass
class AveragingUnitary:
    W: np.ndarray
    order: int
    target: float
    residual: float = field(default=math.nan)


def pinching_residual(X, projections, target):
    return max(fro(E @ X @ E - target * E) for E in projections)


def check_pinching(cert, tol=1e-8):
    """Validate the structural invariants of a certificate; raise CertificateError."""
    if not cert.projections:
        raise CertificateError("certificate has no projections")
    n = cert.projections[0].shape[0]
    total = np.zeros((n, n), dtype=complex)
    for E in cert.projections:
        if E.shape != (n, n) or not is_projection(E):
            raise CertificateError("certificate member is not a projection")
        if projection_rank(E) == 0:
            raise CertificateError("certificate member is the zero projection")
        total += E
    if fro(total - np.eye(n)) > tol * n:
        raise CertificateError("certificate projections do not sum to the identity")
    for j, E in enumerate(cert.projections):
        for F in cert.projections[j + 1 :]:
            if fro(E @ F) > tol * n:
                raise CertificateError("certificate projections are not orthogonal")


def _certificate_from_basis(X, U, blocks, target, rotations=0, certified=True):
    projections = []
    for idx in blocks:
        B = U[:, idx]
        projections.append(B @ dagger(B))
    res = pinching_residual(X, projections, target)
    return PinchingCertificate(X, projections, target, res, U, certified, rotations)


# ---------------------------------------------------------------------------
# Givens machinery


def _rotate_to_value(H, U, i, j, t):
    """Rotate in the (i, j) plane so that the new H[i, i] equals ``t``.

    ``t`` must lie in the spectrum range of the 2x2 block at (i, j). Updates
    ``H`` and ``U`` in place.
    """
    a = H[i, i].real
    b = H[j, j].real
    h = H[i, j]
    mag = abs(h)
    w = np.conj(h) / mag if mag > 0 else 1.0
    mean = 0.5 * (a + b)
    half = 0.5 * (a - b)
    radius = math.hypot(half, mag)
    if radius == 0.0:
        return
    psi = math.atan2(mag, half)
    gamma = math.acos(min(1.0, max(-1.0, (t - mean) / radius)))
    candidates = [(psi + gamma), (psi - gamma)]
    candidates = [math.remainder(x, 2 * math.pi) for x in candidates]
    two_theta = min(candidates, key=abs)
    c = math.cos(0.5 * two_theta)
    s = math.sin(0.5 * two_theta)
    g = np.array([[c, -s], [s * w, c * w]], dtype=complex)
    H[:, [i, j]] = H[:, [i, j]] @ g
    H[[i, j], :] = dagger(g) @ H[[i, j], :]
    U[:, [i, j]] = U[:, [i, j]] @ g


def constant_diagonal_unitary(X, tol=DEFAULT_TOL):
    """Unitary ``U`` with every diagonal entry of ``U* X U`` equal to tau(X).

    Repeatedly pairs the smallest remaining diagonal entry with the largest
    (lowest index on ties) and rotates the smaller one onto the trace.
    Each settled entry is frozen, so at most n - 1 rotations are used.
    """
    X = hermitian(X, tol)
    n = X.shape[0]
    t = normalized_trace(X)
    H = X.copy()
    U = np.eye(n, dtype=complex)
    settle = _SETTLED * (1.0 + fro(X))
    active = list(range(n))
    rotations = 0
    while len(active) > 1:
        diag = H[active, active].real
        i = active[int(np.argmin(diag))]
        j = active[int(np.argmax(diag))]
        if H[j, j].real - H[i, i].real <= settle:
            break
        # the trace is the mean of the active entries, so it is bracketed by them
        assert H[i, i].real - settle <= t <= H[j, j].real + settle
        if abs(H[i, i].real - t) > settle:
            _rotate_to_value(H, U, i, j, t)
            rotations += 1
        active.remove(i)
    blocks = [[k] for k in range(n)]
    return U, _certificate_from_basis(X, U, blocks, t, rotations)


def schur_horn_diagonal(X, d, tol=DEFAULT_TOL):
    """Unitary ``U`` with ``diag(U* X U) = d``.

    Requires ``d`` to be majorized by the spectrum of ``X``. Starting from the
    eigenbasis, each step is a T-transform realized by one plane rotation:
    take the last position whose diagonal exceeds its target and the first
    later position that falls short, and move the smaller gap across.
    """
    X = hermitian(X, tol)
    n = X.shape[0]
    d = np.asarray(d, dtype=float)
    if d.shape != (n,):
        raise ValueError(f"target diagonal must have length {n}")
    w, V = hermitian_eig(X, tol)
    w = w[::-1]
    V = V[:, ::-1]
    perm = np.argsort(-d, kind="stable")
    ds = d[perm]
    slack = 1e-9 * (1.0 + fro(X))
    gaps = np.cumsum(w) - np.cumsum(ds)
    for k in range(n):
        if gaps[k] < -slack or (k == n - 1 and abs(gaps[k]) > slack):
            raise InfeasibleError(
                f"diagonal is not majorized by the spectrum (prefix {k + 1})", index=k + 1
            )
    H = np.diag(w).astype(complex)
    U = V.astype(complex).copy()
    settle = 1e-13 * (1.0 + fro(X))
    for _ in range(n):
        a = H.diagonal().real
        over = np.nonzero(a - ds > settle)[0]
        if over.size == 0:
            break
        j = int(over[-1])
        under = [k for k in range(j + 1, n) if ds[k] - a[k] > settle]
        if not under:
            under = [k for k in range(n) if ds[k] - a[k] > settle]
        if not under:
            break
        k = under[0]
        delta = min(a[j] - ds[j], ds[k] - a[k])
        _rotate_to_value(H, U, j, k, a[j] - delta)
    out = np.empty_like(U)
    out[:, perm] = U
    return out


# ---------------------------------------------------------------------------
# Averaging unitaries


def _roots(N):
    return np.exp(2j * np.pi * np.arange(1, N + 1) / N)


def averaging_residual(X, W, N, target):
    n = X.shape[0]
    total = np.zeros((n, n), dtype=complex)
    P = np.eye(n, dtype=complex)
    for _ in range(N):
        total += dagger(P) @ X @ P
        P = P @ W
    return fro(total / N - target * np.eye(n))


def dixmier_unitary_from_pinching(cert):
    """``W = sum_k exp(2 pi i k / N) E_k`` for the certificate's N projections."""
    check_pinching(cert)
    N = cert.order
    n = cert.projections[0].shape[0]
    W = np.zeros((n, n), dtype=complex)
    for z, E in zip(_roots(N), cert.projections):
        W += z * E
    res = averaging_residual(cert.matrix, W, N, cert.target)
    return AveragingUnitary(W, N, cert.target, res)


def _unitary_eig(U):
    """Eigenvalues and orthonormal eigenvectors of a normal matrix via complex Schur."""
    T, Z = scipy.linalg.schur(U, output="complex")
    return np.diag(T).copy(), Z


def pinching_from_averaging_unitary(X, U, N, tol=DEFAULT_TOL, averaging_tol=None):
    """Recover a trace-constant pinching from an averaging unitary.

    Forms ``W = f(U^N)^-1 U`` with ``f(e^{i theta}) = e^{i theta / N}`` on the
    branch theta in [0, 2 pi) and groups the eigenvectors of ``W`` by nearest
    N-th root of unity.
    """
    X = hermitian(X, tol)
    U = unitary(U)
    n = X.shape[0]
    if N < 1:
        raise ValueError("order must be positive")
    t = normalized_trace(X)
    if averaging_tol is None:
        averaging_tol = 1e-8 * n * (1.0 + fro(X))
    res = averaging_residual(X, U, N, t)
    if res > averaging_tol:
        raise NotAveragingError(f"averaging residual {res:.3e} exceeds {averaging_tol:.3e}")

    lam, Q = _unitary_eig(np.linalg.matrix_power(U, N))
    theta = np.mod(np.angle(lam), 2 * np.pi)
    theta[2 * np.pi - theta < 1e-8] = 0.0
    f_inv = (Q * np.exp(-1j * theta / N)) @ dagger(Q)
    W = f_inv @ U

    mu, Z = _unitary_eig(W)
    roots = _roots(N)
    limit = 2 * np.pi / (4 * N)
    groups = [[] for _ in range(N)]
    for col, z in enumerate(mu):
        dist = np.abs(np.angle(z / roots))
        k = int(np.argmin(dist))
        if dist[k] >= limit:
            raise BranchError(f"eigenvalue {z:.6f} is not near an {N}-th root of unity")
        groups[k].append(col)
    projections = []
    for idx in groups:
        if idx:
            B = Z[:, idx]
            projections.append(B @ dagger(B))
    res = pinching_residual(X, projections, t)
    return PinchingCertificate(X, projections, t, res, Z)


# ---------------------------------------------------------------------------
# Coarse blocks


def _block_indices(ranks):
    out, start = [], 0
    for r in ranks:
        out.append(list(range(start, start + r)))
        start += r
    return out


def _block_cost(Y, blocks, t):
    return sum(fro(Y[np.ix_(b, b)] - t * np.eye(len(b))) ** 2 for b in blocks)


def _plane_cost(Y, p, q, bp, bq, t):
    """Local cost of rotating the (p, q) plane, as a function of (theta, phi)."""
    rest_p = [i for i in bp if i != p]
    rest_q = [i for i in bq if i != q]
    yp_p, yq_p = Y[rest_p, p], Y[rest_p, q]
    yp_q, yq_q = Y[rest_q, p], Y[rest_q, q]
    a, b, h = Y[p, p].real, Y[q, q].real, Y[p, q]

    def cost(theta, phi):
        c, s = np.cos(theta), np.sin(theta)
        e = np.exp(1j * phi)
        col_p = c[..., None] * yp_p + (s * e)[..., None] * yq_p
        col_q = -(s * np.conj(e))[..., None] * yp_q + c[..., None] * yq_q
        # new diagonal entries of G* Y G with G = [[c, -s conj(e)], [s e, c]]
        new_p = c * c * a + s * s * b + 2 * c * s * np.real(h * e)
        new_q = s * s * a + c * c * b - 2 * c * s * np.real(h * e)
        return (
            2 * np.sum(np.abs(col_p) ** 2, axis=-1)
            + (new_p - t) ** 2
            + 2 * np.sum(np.abs(col_q) ** 2, axis=-1)
            + (new_q - t) ** 2
        )

    return cost


_THETA, _PHI = np.meshgrid(
    np.linspace(0, np.pi, 48, endpoint=False), np.linspace(0, 2 * np.pi, 24, endpoint=False)
)


def _apply_plane(Y, U, p, q, theta, phi):
    c, s, e = math.cos(theta), math.sin(theta), cmath.exp(1j * phi)
    g = np.array([[c, -s * np.conj(e)], [s * e, c]], dtype=complex)
    Y[:, [p, q]] = Y[:, [p, q]] @ g
    Y[[p, q], :] = dagger(g) @ Y[[p, q], :]
    U[:, [p, q]] = U[:, [p, q]] @ g


def _descend(X, U, blocks, t, maxiter, tol):
    Y = dagger(U) @ X @ U
    owner = {i: bi for bi, b in enumerate(blocks) for i in b}
    n = X.shape[0]
    f = _block_cost(Y, blocks, t)
    for _ in range(maxiter):
        start = f
        for p in range(n - 1):
            for q in range(p + 1, n):
                if owner[p] == owner[q]:
                    continue
                cost = _plane_cost(Y, p, q, blocks[owner[p]], blocks[owner[q]], t)
                before = float(cost(np.array(0.0), np.array(0.0)))
                grid = cost(_THETA, _PHI)
                k = np.unravel_index(np.argmin(grid), grid.shape)
                x0 = [_THETA[k], _PHI[k]]
                opt = scipy.optimize.minimize(
                    lambda v: float(cost(np.array(v[0]), np.array(v[1]))), x0, method="BFGS"
                )
                if opt.fun < before:
                    _apply_plane(Y, U, p, q, opt.x[0], opt.x[1])
        Y = (Y + dagger(Y)) / 2
        f = _block_cost(Y, blocks, t)
        if start - f < tol * tol:
            break
    return U, f


def _hermitian_from_params(v, n):
    H = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    k = len(iu[0])
    H[iu] = v[:k] + 1j * v[k : 2 * k]
    H = H + dagger(H)
    H[np.diag_indices(n)] = v[2 * k :]
    return H


def _block_mask(n, blocks):
    mask = np.zeros((n, n), dtype=bool)
    for b in blocks:
        mask[np.ix_(b, b)] = True
    return mask


def _masked_residual(Y, mask, t):
    r = (Y - t * np.eye(Y.shape[0]))[mask]
    return np.concatenate([r.real, r.imag])


def _polish(X, U, blocks, t, iters=60):
    """Gauss-Newton on the unitary group, re-centered at every step.

    Near ``U`` the compressed blocks of ``expm(-iH) Y expm(iH)`` move by
    ``i[Y, H]`` to first order; each step takes the minimum-norm Hermitian
    ``H`` solving the linearized block equations, halving it until the cost
    decreases. Coordinate sweeps converge slowly near a zero-residual
    optimum; this finishes the descent from the swept basis.
    """
    n = X.shape[0]
    mask = _block_mask(n, blocks)
    eye = np.eye(n)
    floor = 1e-15 * (1.0 + fro(X))
    Y = dagger(U) @ X @ U
    r = _masked_residual(Y, mask, t)
    cost = float(r @ r)
    for _ in range(iters):
        if math.sqrt(cost) <= floor:
            break
        cols = []
        for p in range(n):
            for q in range(p, n):
                for phase in ((1.0,) if p == q else (1.0, 1j)):
                    B = np.zeros((n, n), dtype=complex)
                    B[p, q] = phase
                    B[q, p] = np.conj(phase)
                    cols.append(_masked_residual(1j * (Y @ B - B @ Y) + t * eye, mask, t))
        J = np.array(cols).T
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        H = np.zeros((n, n), dtype=complex)
        k = 0
        for p in range(n):
            for q in range(p, n):
                if p == q:
                    H[p, p] = step[k]
                    k += 1
                else:
                    H[p, q] = step[k] + 1j * step[k + 1]
                    H[q, p] = np.conj(H[p, q])
                    k += 2
        improved = False
        for _ in range(30):
            V = U @ scipy.linalg.expm(1j * H)
            Yn = dagger(V) @ X @ V
            rn = _masked_residual(Yn, mask, t)
            cn = float(rn @ rn)
            if cn < cost:
                U, Y, r, cost, improved = V, Yn, rn, cn, True
                break
            H = H / 2
        if not improved:
            break
    # re-unitarize against drift from the matrix exponentials
    Q, R = np.linalg.qr(U)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _random_unitary(n, rng):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def optimize_block_pinching(X, ranks, maxiter=200, tol=1e-10, seed=0, restarts=4):
    """Best-effort search for a pinching with blocks of the given ranks.

    Minimizes ``sum_j ||E_j U* X U E_j - tau(X) E_j||_F^2`` by cyclic plane
    rotations, each minimized over its angle and phase (grid then BFGS),
    followed by a Gauss-Newton polish on the unitary group.
    Starts from the constant-diagonal basis, then from ``restarts`` seeded
    random unitaries while the residual is above ``tol``. The returned
    certificate is flagged ``certified=False`` when the residual stays above
    ``tol``.
    """
    X = hermitian(X)
    n = X.shape[0]
    ranks = [int(r) for r in ranks]
    if any(r <= 0 for r in ranks) or sum(ranks) != n:
        raise ValueError(f"ranks {ranks} must be positive and sum to {n}")
    if all(r == 1 for r in ranks):
        return constant_diagonal_unitary(X)[1]
    t = normalized_trace(X)
    blocks = _block_indices(ranks)
    rng = np.random.default_rng(seed)
    best = None
    starts = [constant_diagonal_unitary(X)[0]]
    for attempt in range(restarts + 1):
        if attempt >= len(starts):
            starts.append(_random_unitary(n, rng))
        U, _ = _descend(X, starts[attempt].copy(), blocks, t, maxiter, tol)
        U = _polish(X, U, blocks, t)
        cert = _certificate_from_basis(X, U, blocks, t)
        if best is None or cert.residual < best.residual:
            best = cert
        if best.residual <= tol:
            break
    best.certified = best.residual <= tol
    return best
