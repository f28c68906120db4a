"""Averaging matrices to scalars with finite, equally weighted unitary families."""

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, as_square, dagger, fro, hermitian, normalized_trace, unitarity_residual
from .errors import ShapeError, SizeError
from .pinching import constant_diagonal_unitary, dixmier_unitary_from_pinching


@dataclass
class DixmierCertificate:
    """``(1/k) sum_i U_i* X_j U_i = t_j I`` for every certified ``X_j``."""

    matrices: list
    unitaries: list
    targets: list
    residuals: list

    @property
    def k(self):
        return len(self.unitaries)


@dataclass
class AverageReport:
    residuals: list
    trace_errors: list
    unitarity: float
    thresholds: list
    passed: bool


def conjugate_mean(X, unitaries):
    """``(1/k) sum_i U_i* X U_i`` accumulated in list order."""
    n = X.shape[0]
    total = np.zeros((n, n), dtype=complex)
    for U in unitaries:
        total += dagger(U) @ X @ U
    return total / len(unitaries)


def _residual(X, unitaries, target):
    return fro(conjugate_mean(X, unitaries) - target * np.eye(X.shape[0]))


def _is_scalar(X):
    n = X.shape[0]
    return fro(X - normalized_trace(X) * np.eye(n)) <= 1e-14 * n * (1.0 + fro(X))


def _averaging_family(X, tol):
    """Powers ``W^0, ..., W^(n-1)`` of the order-n unitary from the rank-1 pinching."""
    n = X.shape[0]
    if _is_scalar(X):
        return [np.eye(n, dtype=complex)]
    _, cert = constant_diagonal_unitary(X, tol)
    W = dixmier_unitary_from_pinching(cert).W
    family = [np.eye(n, dtype=complex)]
    for _ in range(n - 1):
        family.append(family[-1] @ W)
    return family


def average_single(X, tol=DEFAULT_TOL):
    X = hermitian(X, tol)
    family = _averaging_family(X, tol)
    t = normalized_trace(X)
    return DixmierCertificate([X], family, [t], [_residual(X, family, t)])


def hermitian_parts(X, tol=DEFAULT_TOL):
    """``[X]`` for Hermitian input, otherwise its real and imaginary Hermitian parts."""
    X = as_square(X)
    if fro(X - dagger(X)) <= tol.bound(X.shape[0], fro(X)):
        return [(X + dagger(X)) / 2]
    return [(X + dagger(X)) / 2, (X - dagger(X)) / 2j]


def average_simultaneous(Xs, tol=DEFAULT_TOL, max_k=None):
    """One unitary family averaging every matrix in ``Xs`` to its trace.

    Stages run in input order: the current family's average of the next
    matrix is averaged by its own order-n family, and the new family is all
    products ``V_j W_i`` (earlier family on the left).
    """
    Xs = [as_square(X) for X in Xs]
    if not Xs:
        raise ShapeError("no matrices given")
    n = Xs[0].shape[0]
    if any(X.shape != (n, n) for X in Xs):
        raise ShapeError("matrices have different sizes")
    parts = [P for X in Xs for P in hermitian_parts(X, tol)]
    family = [np.eye(n, dtype=complex)]
    for X in parts:
        A = conjugate_mean(X, family)
        A = (A + dagger(A)) / 2
        stage = _averaging_family(A, tol)
        if len(stage) > 1:
            if max_k is not None and len(family) * len(stage) > max_k:
                raise SizeError(f"family size {len(family) * len(stage)} exceeds cap {max_k}")
            family = [V @ W for W in stage for V in family]
    targets = [normalized_trace(X) for X in parts]
    residuals = [_residual(X, family, t) for X, t in zip(parts, targets)]
    return DixmierCertificate(parts, family, targets, residuals)


def verify_average(Xs, cert, scale=1e-9):
    """Recompute every residual of ``cert`` against ``Xs``.

    A residual passes when it is at most ``scale * n * (1 + ||X||_F)``.
    Non-Hermitian matrices are checked against their complex trace.
    """
    if not cert.unitaries:
        raise ShapeError("certificate has no unitaries")
    Xs = [as_square(X) for X in Xs]
    n = cert.unitaries[0].shape[0]
    if any(X.shape != (n, n) for X in Xs) or any(U.shape != (n, n) for U in cert.unitaries):
        raise ShapeError("certificate and matrices have different sizes")
    residuals, trace_errors, thresholds = [], [], []
    for X in Xs:
        t = np.trace(X) / n
        mean = conjugate_mean(X, cert.unitaries)
        residuals.append(fro(mean - t * np.eye(n)))
        trace_errors.append(abs(np.trace(mean) / n - t))
        thresholds.append(scale * n * (1.0 + fro(X)))
    unitarity = max(unitarity_residual(U) for U in cert.unitaries)
    passed = all(r <= th for r, th in zip(residuals, thresholds)) and unitarity <= 1e-10 * n
    return AverageReport(residuals, trace_errors, unitarity, thresholds, passed)
