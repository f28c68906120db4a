"""Finite sums of projections, positive combinations and projection-pair geometry."""

from dataclasses import dataclass
import math

import numpy as np

from .core import (
    DEFAULT_TOL,
    Interval,
    as_square,
    canonical_basis,
    dagger,
    fro,
    hermitian_eig,
    matrix_rank_psd,
    normalized_trace,
    partial_isometry,
    polar,
    projection,
    projection_rank,
    psd,
    range_projection,
    spectral_projection,
    sqrt_psd,
)
from .errors import (
    CertificateError,
    DomainError,
    InfeasibleError,
    ParityError,
    RankError,
    StructureError,
)
from .pinching import PinchingCertificate, check_pinching, pinching_residual, schur_horn_diagonal


@dataclass
class ProjectionSumCertificate:
    matrix: np.ndarray
    projections: list
    sum_residual: float

    @property
    def count(self):
        return len(self.projections)


@dataclass
class ExcessDefect:
    A_plus: np.ndarray
    A_minus: np.ndarray
    R_A: np.ndarray
    tau_plus: float
    tau_minus: float
    tau_A: float
    tau_RA: float


@dataclass
class Feasibility:
    tau_condition: bool
    integer_trace: bool
    fillmore: bool
    trace: float
    rank: int

    def failed_flag(self):
        for name in ("integer_trace", "tau_condition"):
            if not getattr(self, name):
                return name
        return None if self.fillmore else "fillmore"


@dataclass
class PositiveCombination:
    matrix: np.ndarray
    coefficients: list
    projections: list
    residual: float


@dataclass
class TwoProjectionForm:
    """Relative position of two projections.

    Columns of ``basis`` are ordered as E^F, E^F', E'^F, E'^F' (primes are
    complements), then the E-side vectors of the generic pairs, then their
    E'-side partners. On the generic part, E is [[I, 0], [0, 0]] and F is
    [[h^2, hk], [hk, k^2]] with h = cos(angles), k = sin(angles).
    """

    E: np.ndarray
    F: np.ndarray
    basis: np.ndarray
    ranks: tuple
    angles: np.ndarray
    reconstruction_residual: float

    @property
    def h(self):
        return np.diag(np.cos(self.angles))

    @property
    def k(self):
        return np.diag(np.sin(self.angles))

    def blocks(self):
        """E and F written in the returned basis."""
        a, b, c, d, m = self.ranks
        n = self.basis.shape[0]
        Eb = np.zeros((n, n))
        Fb = np.zeros((n, n))
        Eb[: a + b, : a + b] = np.eye(a + b)
        Fb[:a, :a] = np.eye(a)
        Fb[a + b : a + b + c, a + b : a + b + c] = np.eye(c)
        g = a + b + c + d
        Eb[g : g + m, g : g + m] = np.eye(m)
        h, k = np.cos(self.angles), np.sin(self.angles)
        Fb[g : g + m, g : g + m] = np.diag(h * h)
        Fb[g : g + m, g + m :] = np.diag(h * k)
        Fb[g + m :, g : g + m] = np.diag(h * k)
        Fb[g + m :, g + m :] = np.diag(k * k)
        return Eb, Fb


def _trace_slack(n):
    return 1e-8 * n


# ---------------------------------------------------------------------------
# Excess/defect split and feasibility


def excess_defect(A, tol=DEFAULT_TOL):
    """Split off ``A_+ = (A - I) chi(1, ||A||]`` and ``A_- = (I - A) chi(0, 1)``.

    The eigenvalue 1 belongs to neither part.
    """
    A = psd(A, tol)
    n = A.shape[0]
    I = np.eye(n)
    w = np.linalg.eigvalsh(A)
    top = max(float(w[-1]), 1.0)
    above = spectral_projection(A, Interval(1.0, top, False, True), tol)
    below = spectral_projection(A, Interval(0.0, 1.0, False, False), tol)
    R = range_projection(A, tol)
    A_plus = (A - I) @ above
    A_minus = (I - A) @ below
    A_plus = (A_plus + dagger(A_plus)) / 2
    A_minus = (A_minus + dagger(A_minus)) / 2
    return ExcessDefect(
        A_plus,
        A_minus,
        R,
        normalized_trace(A_plus),
        normalized_trace(A_minus),
        normalized_trace(A),
        normalized_trace(R),
    )


def feasibility(A, tol=DEFAULT_TOL):
    """Decomposability flags for a psd matrix.

    ``tau_condition`` is tau(A) >= tau(R_A); ``fillmore`` adds integer trace and
    trace >= rank, which is exact in finite dimension.
    """
    A = psd(A, tol)
    n = A.shape[0]
    tr = float(np.trace(A).real)
    rank = matrix_rank_psd(A, tol)
    slack = _trace_slack(n)
    integer = abs(tr - round(tr)) <= slack
    tau_ok = tr >= rank - slack
    return Feasibility(tau_ok, integer, integer and tau_ok and round(tr) >= rank, tr, rank)


# ---------------------------------------------------------------------------
# Decompositions


def fillmore_decompose(A, tol=DEFAULT_TOL):
    """Write ``A`` as a sum of exactly round(Tr A) rank-1 projections.

    Peels top eigenprojections while the trace exceeds n, rotates the rest to
    a 0/1 diagonal, and splits the unit-diagonal corner ``B`` into the
    projections ``B^(1/2) e_j e_j* B^(1/2)``.
    """
    A = psd(A, tol)
    n = A.shape[0]
    flags = feasibility(A, tol)
    if not flags.fillmore:
        flag = flags.failed_flag()
        raise InfeasibleError(f"matrix is not a finite sum of projections ({flag} fails)", flag=flag)
    m = int(round(flags.trace))
    parts = []
    rest = A.copy()
    while m > n:
        w, V = hermitian_eig(rest, tol)
        top = np.nonzero(w >= w[-1])[0][0]
        v = V[:, top]
        P = np.outer(v, np.conj(v))
        parts.append(P)
        rest = rest - P
        rest = (rest + dagger(rest)) / 2
        m -= 1
    if m > 0:
        d = np.r_[np.ones(m), np.zeros(n - m)]
        U = schur_horn_diagonal(rest, d, tol)
        Y = dagger(U) @ rest @ U
        tail = Y[m:, :]
        if np.any(np.abs(tail) >= 1e-8 * fro(A)):
            raise InfeasibleError("zero-diagonal rows are not numerically zero", flag="fillmore")
        B = (Y[:m, :m] + dagger(Y[:m, :m])) / 2
        S = sqrt_psd(B, tol)
        for j in range(m):
            x = S[:, j]
            x = x / np.linalg.norm(x)
            v = U[:, :m] @ x
            parts.append(np.outer(v, np.conj(v)))
    res = fro(sum(parts) - A) if parts else fro(A)
    return ProjectionSumCertificate(A, parts, res)


def projections_from_pinching(A, cert, tol=1e-8):
    """``P_j = A^(1/2) E_j A^(1/2)`` for a pinching with ``E_j A E_j = E_j``."""
    A = psd(A)
    n = A.shape[0]
    check_pinching(cert)
    if abs(cert.target - 1.0) > tol:
        raise CertificateError(f"pinching target is {cert.target}, expected 1")
    res = pinching_residual(A, cert.projections, 1.0)
    if res > tol * n * (1.0 + fro(A)):
        raise CertificateError(f"pinching residual {res:.3e} too large for A")
    S = sqrt_psd(A)
    parts = []
    for E in cert.projections:
        P = S @ E @ S
        parts.append((P + dagger(P)) / 2)
    return ProjectionSumCertificate(A, parts, fro(sum(parts) - A))


def pinching_from_projections(A, parts, tol=1e-8):
    """Pinching ``E_j = V* F_j V`` built from a decomposition ``A = sum P_j``.

    ``F_j`` are consecutive coordinate blocks with rank F_j = rank P_j, ``W_j``
    partial isometries from ``P_j`` onto ``F_j``, and ``V`` the unitary polar
    factor of ``B = sum W_j``.
    """
    A = psd(A)
    n = A.shape[0]
    parts = [projection(P) for P in parts]
    if not parts:
        raise CertificateError("no projections given")
    if fro(sum(parts) - A) > tol * n * (1.0 + fro(A)):
        raise CertificateError("projections do not sum to A")
    ranks = [projection_rank(P) for P in parts]
    if sum(ranks) != n:
        raise RankError(f"ranks of the parts sum to {sum(ranks)}, need exactly {n}")
    B = np.zeros((n, n), dtype=complex)
    blocks = []
    start = 0
    for P, r in zip(parts, ranks):
        F = np.zeros((n, n), dtype=complex)
        F[range(start, start + r), range(start, start + r)] = 1.0
        start += r
        blocks.append(F)
        B += partial_isometry(P, F).matrix
    V, _ = polar(B)
    projections = [dagger(V) @ F @ V for F in blocks]
    projections = [(E + dagger(E)) / 2 for E in projections]
    res = pinching_residual(A, projections, 1.0)
    cert = PinchingCertificate(A, projections, 1.0, res, dagger(V))
    check_pinching(cert)
    return cert


def positive_combination(A, tol=DEFAULT_TOL):
    """Spectral telescoping ``A = sum_i (l_i - l_{i+1}) Q_i``.

    ``Q_i`` projects onto the top-i eigenvectors; terms with zero coefficient
    are dropped, so repeated eigenvalues share one term.
    """
    A = psd(A, tol)
    n = A.shape[0]
    w, V = hermitian_eig(A, tol)
    w, V = w[::-1], V[:, ::-1]
    cutoff = tol.rank_cutoff * max(float(w[0]), 0.0)
    r = int(np.sum(w > cutoff))
    coefficients, projections = [], []
    for i in range(r):
        nxt = w[i + 1] if i + 1 < r else 0.0
        alpha = float(w[i] - nxt)
        if alpha <= cutoff:
            continue
        Q = V[:, : i + 1] @ dagger(V[:, : i + 1])
        coefficients.append(alpha)
        projections.append(Q)
    recon = sum((a * Q for a, Q in zip(coefficients, projections)), np.zeros((n, n)))
    return PositiveCombination(A, coefficients, projections, fro(recon - A))


def _ceil(x):
    near = round(x)
    if abs(x - near) <= 1e-12 * max(1.0, abs(x)):
        return int(near)
    return math.ceil(x)


def gp_bound(norm, inv_norm):
    """Projection count ``12 + ceil(14 (||a|| ||a^-1|| - 1)) + 1`` for positive combinations."""
    kappa = norm * inv_norm
    if kappa < 1.0 - 1e-12:
        raise DomainError(f"norm * inverse norm = {kappa} is below 1")
    return 12 + _ceil(14 * max(kappa - 1.0, 0.0)) + 1


def mu_bound(mu):
    """Term count ``15 + ceil(28 / mu)`` of the q-plus/minus construction."""
    if not mu > 0:
        raise DomainError("mu must be positive")
    return 15 + _ceil(28.0 / mu)


# ---------------------------------------------------------------------------
# q-plus/minus projections


def build_q_pm(b, V, tol=1e-10):
    """Projections ``q_-`` and ``q_+`` assembled from ``b`` and a partial isometry.

    ``S = V*V`` must carry ``b`` and be orthogonal to ``E' = VV*``. With
    ``x = b/||b||`` and ``r = (x - x^2)^(1/2)``, in the S/E' block picture

        q_-+ = [[x, -+ r V*], [-+ V r, E' - V x V*]].

    Returns ``(q_minus, q_plus, identity_residual)`` where the residual measures
    ``q_- + q_+ = 2b/||b|| + 2E' - (2/||b||) V b V*``.
    """
    b = psd(b)
    V = as_square(V)
    n = b.shape[0]
    if V.shape != b.shape:
        raise StructureError("b and V have different sizes")
    S = dagger(V) @ V
    E1 = V @ dagger(V)
    slack = tol * n * (1.0 + fro(b))
    if fro(S @ S - S) > slack or fro(E1 @ E1 - E1) > slack:
        raise StructureError("V is not a partial isometry")
    if fro(S @ E1) > slack:
        raise StructureError("initial and final projections of V are not orthogonal")
    if fro(S @ b @ S - b) > slack:
        raise StructureError("b is not supported on the initial projection of V")
    beta = float(np.linalg.eigvalsh(b)[-1])
    if beta <= slack:
        raise StructureError("b must be nonzero")
    if beta > 1.0 + tol:
        raise StructureError(f"||b|| = {beta} exceeds 1")
    # x and r share one eigenbasis; eigenvalues within the rank cutoff of 0 or 1
    # are snapped so that r = (x - x^2)^(1/2) does not amplify their rounding
    mu, U = hermitian_eig(b / beta)
    cut = DEFAULT_TOL.rank_cutoff
    mu = np.clip(mu, 0.0, 1.0)
    mu[mu <= cut] = 0.0
    mu[mu >= 1.0 - cut] = 1.0
    x = (U * mu) @ dagger(U)
    r = (U * np.sqrt(mu - mu * mu)) @ dagger(U)
    off = r @ dagger(V) + V @ r
    corner = E1 - V @ x @ dagger(V)
    q_minus = x - off + corner
    q_plus = x + off + corner
    q_minus = (q_minus + dagger(q_minus)) / 2
    q_plus = (q_plus + dagger(q_plus)) / 2
    expected = (2 / beta) * b + 2 * E1 - (2 / beta) * V @ b @ dagger(V)
    return q_minus, q_plus, fro(q_minus + q_plus - expected)


# ---------------------------------------------------------------------------
# Two projections


def two_projection_form(E, F, tol=DEFAULT_TOL):
    """Relative position of two projections.

    Eigenvalues of E F E compressed to the range of E separate E^F (near 1),
    E^F' (near 0) and the generic pairs in between, whose principal angles
    are arccos of the square roots.
    """
    E = projection(E)
    F = projection(F)
    n = E.shape[0]
    if F.shape != E.shape:
        raise StructureError("projections have different sizes")
    cut = tol.rank_cutoff
    I = np.eye(n)

    def split(P, Q):
        """Eigen-split of P Q P on the range of P: (near 1, near 0, generic)."""
        w, Vp = hermitian_eig(P, tol)
        Bp = Vp[:, w > 0.5]
        if Bp.shape[1] == 0:
            return Bp, Bp, Bp, np.zeros(0)
        mu, Y = hermitian_eig(dagger(Bp) @ Q @ Bp, tol)
        vecs = Bp @ Y
        one = mu >= 1 - cut
        zero = mu <= cut
        gen = ~(one | zero)
        return vecs[:, one], vecs[:, zero], vecs[:, gen], mu[gen]

    ef, efp, gen_e, cos2 = split(E, F)
    _, epf, _, _ = split(F, E)

    def proj(B):
        return B @ dagger(B)

    ef = canonical_basis(proj(ef))
    efp = canonical_basis(proj(efp))
    epf = canonical_basis(proj(epf))

    # generic pairs sorted by angle ascending, i.e. cos^2 descending
    order = np.argsort(-cos2, kind="stable")
    cos2 = cos2[order]
    gen_e = gen_e[:, order]
    h = np.sqrt(cos2)
    k = np.sqrt(1 - cos2)
    f_vecs = (F @ gen_e) / h
    g_vecs = (f_vecs - gen_e * h) / k

    used = proj(ef) + proj(efp) + proj(epf) + proj(gen_e) + proj(g_vecs)
    rest = I - used
    eppf = canonical_basis((rest + dagger(rest)) / 2)

    basis = np.hstack([ef, efp, epf, eppf, gen_e, g_vecs])
    ranks = (ef.shape[1], efp.shape[1], epf.shape[1], eppf.shape[1], gen_e.shape[1])
    angles = np.arccos(np.clip(h, 0.0, 1.0))
    form = TwoProjectionForm(E, F, basis, ranks, angles, math.nan)
    Eb, Fb = form.blocks()
    res = max(fro(basis @ Eb @ dagger(basis) - E), fro(basis @ Fb @ dagger(basis) - F))
    form.reconstruction_residual = res
    return form


def halve_two_projections(E, F, tol=DEFAULT_TOL):
    """Split ``E = E1 + E2`` and ``F = F1 + F2`` into halves with E1 _|_ F1, E2 _|_ F2.

    Works in the relative-position basis: the E^F part is halved into P1, P2
    with F1 taking P2 and F2 taking P1; E^F', E'^F are halved in order; the
    generic pairs are split into the first and second half of the
    angle-ordered list. All parts must have even dimension.
    """
    form = two_projection_form(E, F, tol)
    a, b, c, d, m = form.ranks
    odd = [name for name, r in (("E^F", a), ("E^F'", b), ("E'^F", c), ("generic", m)) if r % 2]
    if odd:
        raise ParityError(f"odd-dimensional parts: {', '.join(odd)}", odd)
    Q = form.basis
    g = a + b + c + d

    def span(cols):
        B = Q[:, cols]
        P = B @ dagger(B)
        return (P + dagger(P)) / 2

    P1 = list(range(0, a // 2))
    P2 = list(range(a // 2, a))
    Q1 = list(range(a, a + b // 2))
    Q2 = list(range(a + b // 2, a + b))
    R1 = list(range(a + b, a + b + c // 2))
    R2 = list(range(a + b + c // 2, a + b + c))
    e_half = list(range(g, g + m // 2))
    e_rest = list(range(g + m // 2, g + m))

    def f_generic(idx):
        # rank-1 pieces of F on each generic pair: (h e_i + k g_i)(h e_i + k g_i)*
        out = np.zeros_like(E, dtype=complex)
        for i in idx:
            j = i - g
            v = np.cos(form.angles[j]) * Q[:, i] + np.sin(form.angles[j]) * Q[:, i + m]
            out += np.outer(v, np.conj(v))
        return out

    E1 = span(P1 + Q1 + e_half)
    E2 = span(P2 + Q2 + e_rest)
    F1 = span(P2 + R1) + f_generic(e_rest)
    F2 = span(P1 + R2) + f_generic(e_half)
    return E1, E2, F1, F2
