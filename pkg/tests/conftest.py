import numpy as np
import pytest


def rand_herm(rng, n, scale=1.0):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (G + G.conj().T) / 2


def rand_unitary(rng, n):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def rand_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    G = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    return G @ G.conj().T


def rand_projection(rng, n, rank):
    Q = rand_unitary(rng, n)[:, :rank]
    return Q @ Q.conj().T


def fro(X):
    return float(np.linalg.norm(X))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
