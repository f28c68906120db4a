"""Equal-weight unitary majorization ``A < B`` with explicit certificates.

A certificate lists unitaries ``U_1, ..., U_N`` with
``A = (1/N) sum_i U_i* B U_i``; ``source`` is B and ``target`` is A.
"""

from collections.abc import Sequence
from dataclasses import dataclass
import itertools

import numpy as np

from .averaging import average_single, conjugate_mean
from .core import (
    DEFAULT_TOL,
    as_square,
    dagger,
    fro,
    hermitian,
    normalized_trace,
    polar,
    psd,
    sqrt_psd,
    unitarity_residual,
    unitary,
)
from .errors import CertificateError, NotPSDError, ShapeError, SizeError, StructureError

MAX_SIGN_BLOCKS = 14


@dataclass
class MajorizationCertificate:
    unitaries: Sequence
    source: np.ndarray
    target: np.ndarray
    residual: float

    @property
    def size(self):
        return len(self.unitaries)


@dataclass
class MajorizationReport:
    residual: float
    unitarity: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class BlockPartition:
    ranks: tuple

    def __post_init__(self):
        if not self.ranks or any(int(r) <= 0 for r in self.ranks):
            raise ValueError("block ranks must be positive")
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))

    @property
    def n(self):
        return sum(self.ranks)

    @property
    def offsets(self):
        return tuple(itertools.accumulate((0,) + self.ranks[:-1]))

    def slices(self):
        return [slice(o, o + r) for o, r in zip(self.offsets, self.ranks)]


class ProductFamily(Sequence):
    """Lazy family ``outer[j] @ inner[i]`` indexed with ``i`` varying fastest."""

    def __init__(self, outer, inner):
        self.outer = outer
        self.inner = inner

    def __len__(self):
        return len(self.outer) * len(self.inner)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return [self[i] for i in range(*idx.indices(len(self)))]
        if idx < 0:
            idx += len(self)
        if not 0 <= idx < len(self):
            raise IndexError(idx)
        j, i = divmod(idx, len(self.inner))
        return self.outer[j] @ self.inner[i]


def _certificate(unitaries, source, target):
    res = fro(conjugate_mean(source, unitaries) - target)
    return MajorizationCertificate(unitaries, source, target, res)


def block_diagonal(blocks):
    sizes = [b.shape[0] for b in blocks]
    n = sum(sizes)
    out = np.zeros((n, n), dtype=complex)
    start = 0
    for b, s in zip(blocks, sizes):
        out[start : start + s, start : start + s] = b
        start += s
    return out


def block_pinch(B, part):
    out = np.zeros_like(B, dtype=complex)
    for s in part.slices():
        out[s, s] = B[s, s]
    return out


def sign_pinch_certificate(B, part):
    """``sum_j E_j B E_j < B`` through the 2^(b-1) diagonal sign unitaries."""
    B = hermitian(B)
    if not isinstance(part, BlockPartition):
        part = BlockPartition(tuple(part))
    if part.n != B.shape[0]:
        raise ShapeError(f"partition covers {part.n} rows, matrix has {B.shape[0]}")
    b = len(part.ranks)
    if b > MAX_SIGN_BLOCKS:
        raise SizeError(f"{b} blocks exceed the sign-family cap of {MAX_SIGN_BLOCKS}")
    family = []
    for signs in itertools.product((1.0, -1.0), repeat=b - 1):
        d = np.repeat((1.0,) + signs, part.ranks)
        family.append(np.diag(d).astype(complex))
    return _certificate(family, B, block_pinch(B, part))


def _cyclic_shift(n_blocks, m, shift):
    n = n_blocks * m
    U = np.zeros((n, n), dtype=complex)
    I = np.eye(m)
    for r in range(n_blocks):
        c = (r + shift) % n_blocks
        U[r * m : (r + 1) * m, c * m : (c + 1) * m] = I
    return U


def cyclic_mean_certificate(blocks):
    """``diag(mean, ..., mean) < diag(A_1, ..., A_n)`` via the n block cyclic shifts."""
    blocks = [hermitian(A) for A in blocks]
    m = blocks[0].shape[0]
    if any(A.shape != (m, m) for A in blocks):
        raise ShapeError("blocks must all have the same size")
    n_blocks = len(blocks)
    B = block_diagonal(blocks)
    mean = sum(blocks) / n_blocks
    A = block_diagonal([mean] * n_blocks)
    family = [_cyclic_shift(n_blocks, m, i) for i in range(n_blocks)]
    return _certificate(family, B, A)


def _merge_step(current, blocks, k, m):
    """Certificate ``D_k < D_{k+1}``: block k merged into block 0.

    With ``s = S^(1/2)`` (S the accumulated block 0) and ``a = A_k^(1/2)``,
    ``M = [[s, 0], [a, 0]]`` on blocks (0, k) gives ``M*M = diag(S + A_k, 0)``
    and ``MM*`` equal to D_{k+1} on those blocks apart from the cross terms
    ``s a``. The sign flip on block k removes the cross terms, and the polar
    factor of ``M`` carries ``M*M`` to ``MM*``.
    """
    n_blocks = len(blocks)
    n = n_blocks * m
    idx = np.r_[0:m, k * m : (k + 1) * m]
    M = np.zeros((2 * m, 2 * m), dtype=complex)
    M[:m, :m] = sqrt_psd(current)
    M[m:, :m] = sqrt_psd(blocks[k])
    V2, _ = polar(M)
    V = np.eye(n, dtype=complex)
    V[np.ix_(idx, idx)] = V2
    merged = current + blocks[k]
    before = block_diagonal([current] + [np.zeros((m, m))] * (k - 1) + list(blocks[k:]))
    after = block_diagonal([merged] + [np.zeros((m, m))] * k + list(blocks[k + 1 :]))
    S = np.eye(n, dtype=complex)
    S[k * m : (k + 1) * m, k * m : (k + 1) * m] *= -1
    # G = V D_{k+1} V*; D_k = (G + S G S) / 2 = avg over {V* I, V* S}
    family = [dagger(V), dagger(V) @ S]
    return _certificate(family, after, before), merged


def corner_sum_certificate(blocks):
    """``diag(A_1, ..., A_n) < diag(A_1 + ... + A_n, 0, ..., 0)`` for psd blocks."""
    try:
        blocks = [psd(A) for A in blocks]
    except NotPSDError as exc:
        raise NotPSDError(f"corner blocks must be psd: {exc}") from exc
    m = blocks[0].shape[0]
    if any(A.shape != (m, m) for A in blocks):
        raise ShapeError("blocks must all have the same size")
    n = len(blocks) * m
    source = block_diagonal(blocks)
    if len(blocks) == 1:
        return _certificate([np.eye(n, dtype=complex)], source, source)
    cert = None
    current = blocks[0]
    for k in range(1, len(blocks)):
        if fro(blocks[k]) == 0.0:
            continue
        step, current = _merge_step(current, blocks, k, m)
        cert = step if cert is None else compose_certificates(cert, step)
    target = block_diagonal([sum(blocks)] + [np.zeros((m, m))] * (len(blocks) - 1))
    if cert is None:
        return _certificate([np.eye(n, dtype=complex)], target, source)
    return cert


def compose_certificates(c1, c2, tol=1e-8):
    """From ``A < B`` (c1) and ``B < C`` (c2), certify ``A < C`` with ``V_j U_i``."""
    if c1.source.shape != c2.target.shape:
        raise CertificateError("certificates act on different sizes")
    n = c1.source.shape[0]
    if fro(c1.source - c2.target) > tol * n * (1.0 + fro(c1.source)):
        raise CertificateError("middle matrices of the certificates differ")
    family = ProductFamily(list(c2.unitaries), list(c1.unitaries))
    if len(c2.unitaries) == 1 and fro(c2.unitaries[0] - np.eye(n)) == 0.0:
        family = list(c1.unitaries)
    return _certificate(family, c2.source, c1.target)


def conjugate_certificate(c, V, B2, tol=1e-8):
    """Move ``A < B1`` to ``A < B2`` when ``B1 = V* B2 V``; members become ``V U_i``."""
    V = unitary(V)
    B2 = as_square(B2)
    n = B2.shape[0]
    if fro(dagger(V) @ B2 @ V - c.source) > tol * n * (1.0 + fro(B2)):
        raise CertificateError("V* B2 V does not match the certificate source")
    family = [V @ U for U in c.unitaries]
    return _certificate(family, B2, c.target)


def pad_certificate(c, extra):
    """Embed ``A < B`` as ``diag(A, 0) < diag(B, 0)`` with members ``diag(U_i, I)``."""
    Z = np.zeros((extra, extra))
    family = []
    for U in c.unitaries:
        family.append(block_diagonal([U, np.eye(extra)]))
    return _certificate(family, block_diagonal([c.source, Z]), block_diagonal([c.target, Z]))


def corner_reduction(c, A, tol=DEFAULT_TOL):
    """Reduce ``diag(B, 0) < diag(A, 0)`` to ``B < A`` for injective psd ``A``.

    Each member must be block diagonal up to a residual-derived slack; the
    corner blocks are re-unitarized by their polar factors.
    """
    A = psd(A, tol)
    m = A.shape[0]
    n = c.source.shape[0]
    w = np.linalg.eigvalsh(A)
    if not w[0] > tol.rank_cutoff * w[-1] or w[-1] <= 0:
        raise StructureError("A is not injective")
    if n <= m:
        raise ShapeError("certificate is not larger than A")
    scale = 1e-8 * n * (1.0 + fro(A))
    if fro(c.source[:m, :m] - A) > scale or fro(c.source[m:, :]) > scale or fro(c.source[:, m:]) > scale:
        raise CertificateError("certificate source is not diag(A, 0)")
    if fro(c.target[m:, :]) > scale or fro(c.target[:, m:]) > scale:
        raise CertificateError("certificate target is not diag(B, 0)")
    N = len(c.unitaries)
    slack = np.sqrt(N * (c.residual + 1e-12 * (1.0 + fro(A))) / w[0]) + 1e-8
    reduced = []
    for U in c.unitaries:
        upper, lower = U[:m, m:], U[m:, :m]
        if fro(upper) > slack or fro(lower) > slack:
            raise StructureError(
                f"member has off-diagonal blocks of size {max(fro(upper), fro(lower)):.3e} > {slack:.3e}"
            )
        V, _ = polar(U[:m, :m])
        reduced.append(V)
    return _certificate(reduced, A, c.target[:m, :m])


def tau_scalar_certificate(A, tol=DEFAULT_TOL):
    """``tau(A) I < A`` from the Dixmier family of ``A``."""
    A = hermitian(A, tol)
    cert = average_single(A, tol)
    n = A.shape[0]
    return _certificate(cert.unitaries, A, normalized_trace(A) * np.eye(n))


def verify_majorization(A, B, cert, scale=1e-9):
    """Recompute ``||(1/N) sum U_i* B U_i - A||_F`` and check member unitarity."""
    A = as_square(A)
    B = as_square(B)
    if A.shape != B.shape or not len(cert.unitaries):
        raise ShapeError("shape mismatch or empty certificate")
    n = A.shape[0]
    if any(np.shape(U) != (n, n) for U in cert.unitaries):
        raise ShapeError("certificate members have the wrong size")
    residual = fro(conjugate_mean(B, cert.unitaries) - A)
    unitarity = max(unitarity_residual(U) for U in cert.unitaries)
    threshold = scale * n * (1.0 + fro(B))
    return MajorizationReport(residual, unitarity, threshold, residual <= threshold and unitarity <= 1e-10 * n)


def eigen_majorization_check(A, B, tol=1e-8):
    """Eigenvalues of A majorized by those of B (top-k sums, equal traces)."""
    A = hermitian(A)
    B = hermitian(B)
    if A.shape != B.shape:
        raise ShapeError("shape mismatch")
    la = np.sort(np.linalg.eigvalsh(A))[::-1]
    lb = np.sort(np.linalg.eigvalsh(B))[::-1]
    slack = tol * (1.0 + fro(A) + fro(B))
    gaps = np.cumsum(lb) - np.cumsum(la)
    return bool(np.all(gaps[:-1] >= -slack) and abs(gaps[-1]) <= slack)
