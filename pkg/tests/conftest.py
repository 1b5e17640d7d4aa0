"""Shared oracles: dense full-Hilbert-space collective operators and the
embedding of symmetric-sector states into the 2^N qubit space."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2


def _kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def full_collective_ops(n: int):
    """Dense (Jx, Jy, Jz) acting on (C^2)^{tensor n}."""
    dim = 2**n
    jx = np.zeros((dim, dim), dtype=complex)
    jy = np.zeros_like(jx)
    jz = np.zeros_like(jx)
    for i in range(n):
        for total, single in ((jx, _SX), (jy, _SY), (jz, _SZ)):
            mats = [np.eye(2, dtype=complex)] * n
            mats[i] = single
            total += _kron_all(mats)
    return jx, jy, jz


def symmetric_embedding(k: int) -> np.ndarray:
    """Matrix mapping sector amplitudes (m = k/2 .. -k/2) to 2^k vectors.

    Column i is the normalized equal superposition of all bitstrings with
    i ones (a Dicke basis state), so sector states map to their symmetric
    qubit-space representatives.
    """
    dim = 2**k
    out = np.zeros((dim, k + 1), dtype=complex)
    for bits in itertools.product((0, 1), repeat=k):
        ones = sum(bits)
        index = int("".join(map(str, bits)), 2)
        out[index, ones] = 1.0
    for col in range(k + 1):
        out[:, col] /= np.linalg.norm(out[:, col])
    return out


def full_space_moments(n: int, psi: np.ndarray):
    """Exact collective moments of an arbitrary 2^n state vector."""
    jx, jy, jz = full_collective_ops(n)

    def ev(op):
        return float(np.real(np.conj(psi) @ op @ psi))

    perp = ev(jx @ jx) + ev(jy @ jy)
    return {
        "mean_x": ev(jx),
        "mean_y": ev(jy),
        "mean_z": ev(jz),
        "second_perp": perp,
        "second_z": ev(jz @ jz),
    }


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
