"""Traceless Hermitian matrices as real parts of nilpotents."""

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, dagger, fro, hermitian, normalized_trace
from .errors import TraceError
from .pinching import constant_diagonal_unitary


@dataclass
class NilpotentRealization:
    """``X = Z + Z*`` with ``Z = V upper V*`` and ``upper`` strictly upper triangular."""

    Z: np.ndarray
    basis: np.ndarray
    upper: np.ndarray
    reconstruction_residual: float


def nilpotent_realization(X, tol=DEFAULT_TOL):
    X = hermitian(X, tol)
    tau = normalized_trace(X)
    if abs(tau) > 1e-10 * (1.0 + fro(X)):
        raise TraceError(f"tau(X) = {tau:.3e} is not zero", tau)
    V, _ = constant_diagonal_unitary(X, tol)
    upper = np.triu(dagger(V) @ X @ V, k=1)
    Z = V @ upper @ dagger(V)
    return NilpotentRealization(Z, V, upper, fro(Z + dagger(Z) - X))


def shift_trace(X, tol=DEFAULT_TOL):
    """``X - tau(X) I``."""
    X = hermitian(X, tol)
    return X - normalized_trace(X) * np.eye(X.shape[0])
