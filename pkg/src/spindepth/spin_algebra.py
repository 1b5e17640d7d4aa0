"""Exact collective-spin algebra in a single symmetric spin-j sector.

Everything here works in the |j,m> basis with amplitudes indexed by
m = j, j-1, ..., -j (descending).  The three operators that matter for the
rest of the package (jz, jz^2 and jx) are real tridiagonal matrices in this
basis, so ground states of the squeezing Hamiltonian

    h(lambda) = jz^2 - lambda * jx

are obtained from a symmetric tridiagonal eigensolver (bisection plus
inverse iteration, lowest pair only).  All state values are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError

__all__ = [
    "SpinSector",
    "StateVector",
    "TridiagonalOperator",
    "CollectiveMoments",
    "build_operator",
    "ground_state",
    "moments_of_state",
    "rotated_dicke_distribution",
    "dicke_moments",
    "coherent_moments",
]

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class SpinSector:
    """A single spin-j sector; 2j must be a non-negative integer."""

    j: float

    def __post_init__(self) -> None:
        two_j = 2 * self.j
        if two_j < 0 or abs(two_j - round(two_j)) > 1e-9:
            raise ValueError(f"2j must be a non-negative integer, got j={self.j}")
        object.__setattr__(self, "j", round(two_j) / 2.0)

    @property
    def dim(self) -> int:
        return int(round(2 * self.j)) + 1

    @property
    def is_half_integer(self) -> bool:
        return int(round(2 * self.j)) % 2 == 1

    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers, descending from +j to -j."""
        return self.j - np.arange(self.dim, dtype=float)

    def ladder_coefficients(self) -> np.ndarray:
        """c[i] = sqrt(j(j+1) - m_i m_{i+1}) coupling index i to i+1."""
        m = self.m_values()
        return np.sqrt(self.j * (self.j + 1) - m[1:] * (m[1:] + 1))


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitudes over |j,m>, m descending."""

    sector: SpinSector
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.sector.dim,):
            raise ValueError(
                f"amplitude length {amp.shape} does not match dim {self.sector.dim}"
            )
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state not normalized: sum |a|^2 = {norm!r}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal operator in the |j,m> basis."""

    sector: SpinSector
    diagonal: np.ndarray
    offdiagonal: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.diagonal, dtype=float)
        e = np.asarray(self.offdiagonal, dtype=float)
        if d.shape != (self.sector.dim,) or e.shape != (max(self.sector.dim - 1, 0),):
            raise ValueError("diagonal/offdiagonal lengths inconsistent with sector")
        d.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "offdiagonal", e)

    def to_dense(self) -> np.ndarray:
        mat = np.diag(self.diagonal)
        if self.sector.dim > 1:
            mat += np.diag(self.offdiagonal, 1) + np.diag(self.offdiagonal, -1)
        return mat


@dataclass(frozen=True)
class CollectiveMoments:
    """First and second moments of the collective spin of N particles.

    ``second_perp`` is <Jx^2+Jy^2> and ``second_z`` is <Jz^2> (raw, not
    central).  The variance (Delta Jz)^2 is exposed as :meth:`var_z`.
    Estimated moments can exceed the symmetric-sector cap
    (N/2)(N/2+1); use :meth:`exceeds_sector_cap` to detect that.
    """

    n_particles: int
    mean_x: float
    mean_y: float
    mean_z: float
    second_perp: float
    second_z: float

    def __post_init__(self) -> None:
        if self.n_particles < 1:
            raise ValueError("n_particles must be positive")
        scale = max(1.0, self.n_particles**2)
        if self.second_z < self.mean_z**2 - 1e-9 * scale:
            raise ValueError("second_z < mean_z^2: not a valid second moment")
        if self.second_perp < self.mean_x**2 + self.mean_y**2 - 1e-9 * scale:
            raise ValueError("second_perp < mean_x^2 + mean_y^2")

    @property
    def var_z(self) -> float:
        return self.second_z - self.mean_z**2

    @property
    def j_max(self) -> float:
        return self.n_particles / 2.0

    def exceeds_sector_cap(self, tol: float = 1e-9) -> bool:
        cap = self.j_max * (self.j_max + 1)
        return self.second_perp + self.second_z > cap * (1 + tol) + tol


def build_operator(sector: SpinSector, kind: str) -> TridiagonalOperator:
    """Collective operator in the |j,m> basis.

    kind 'z' has diagonal m, 'z_squared' has diagonal m^2, and 'x' has
    off-diagonal entries c/2 from the ladder coefficients.
    """
    m = sector.m_values()
    zeros_off = np.zeros(max(sector.dim - 1, 0))
    if kind == "z":
        return TridiagonalOperator(sector, m, zeros_off)
    if kind == "z_squared":
        return TridiagonalOperator(sector, m * m, zeros_off)
    if kind == "x":
        return TridiagonalOperator(sector, np.zeros(sector.dim), sector.ladder_coefficients() / 2.0)
    raise ValueError(f"unknown operator kind {kind!r}")


def _lowest_eigenpair(diag: np.ndarray, offdiag: np.ndarray) -> tuple[float, np.ndarray]:
    if diag.size == 1:
        return float(diag[0]), np.ones(1)
    w, v = eigh_tridiagonal(
        diag, offdiag, select="i", select_range=(0, 0), check_finite=False
    )
    return float(w[0]), v[:, 0]


def ground_state(sector: SpinSector, lam: float) -> tuple[StateVector, float]:
    """Lowest eigenpair of h(lambda) = jz^2 - lambda*jx.

    At lambda=0 the ground space is degenerate for half-integer j; the
    symmetric combination of m=+-1/2 (the lambda->0+ limit) is returned,
    which callers should treat as the odd-k heuristic choice.  Integer j
    gives the m=0 Dicke state.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    dim = sector.dim
    if lam == 0.0:
        amp = np.zeros(dim, dtype=complex)
        if sector.is_half_integer:
            i = int(sector.j - 0.5)
            amp[i] = amp[i + 1] = math.sqrt(0.5)
            return StateVector(sector, amp), 0.25
        amp[int(round(sector.j))] = 1.0
        return StateVector(sector, amp), 0.0

    m = sector.m_values()
    offdiag = -lam * sector.ladder_coefficients() / 2.0
    try:
        energy, vec = _lowest_eigenpair(m * m, offdiag)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare LAPACK failure
        raise NumericalError(
            f"tridiagonal eigensolve failed for j={sector.j}, lambda={lam}"
        ) from exc
    # off-diagonals are strictly negative, so the ground vector has a fixed
    # sign pattern; normalize the global sign to make amplitudes positive
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return StateVector(sector, vec.astype(complex)), energy


def moments_of_state(state: StateVector, n_particles: int) -> CollectiveMoments:
    """Collective moments of a symmetric N-particle state with j = N/2.

    Uses Jx^2+Jy^2 = j(j+1) - Jz^2, exact within a fixed-j sector.
    """
    sector = state.sector
    if n_particles != int(round(2 * sector.j)):
        raise ValueError(
            f"n_particles={n_particles} inconsistent with sector j={sector.j}"
        )
    amp = state.amplitudes
    prob = np.abs(amp) ** 2
    m = sector.m_values()
    c = sector.ladder_coefficients()
    mean_z = float(prob @ m)
    second_z = float(prob @ (m * m))
    ladder = complex(np.sum(np.conj(amp[:-1]) * c * amp[1:])) if sector.dim > 1 else 0j
    second_perp = sector.j * (sector.j + 1) - second_z
    return CollectiveMoments(
        n_particles=n_particles,
        mean_x=ladder.real,
        mean_y=ladder.imag,
        mean_z=mean_z,
        second_perp=second_perp,
        second_z=second_z,
    )


def rotated_dicke_distribution(sector: SpinSector, beta: float) -> np.ndarray:
    """P(m) = |<j,m| R_y(beta) |j,0>|^2, indexed by m descending.

    Evaluated by the three-term recurrence that follows from
    (cos(beta) jz + sin(beta) jx) R_y(beta)|j,0> = 0, run upward from
    m=-j through the classically allowed region and mirrored with
    P(m)=P(-m).  Stable up to j of several thousand.
    """
    if sector.is_half_integer:
        raise ValueError("rotated Dicke distribution needs integer j (no m=0 level otherwise)")
    j = sector.j
    jj = int(round(j))
    dim = sector.dim
    out = np.zeros(dim)
    if jj == 0:
        out[0] = 1.0
        return out
    sin_b = math.sin(beta)
    if abs(sin_b) < 1e-12:
        out[jj] = 1.0  # identity (or pi) rotation leaves |j,0> in place
        return out
    cot_b = math.cos(beta) / sin_b

    def coupling(m: float) -> float:
        return math.sqrt(j * (j + 1) - m * (m + 1))

    # ascending index i <-> m = -j + i, filled up to m = 0
    v = np.zeros(jj + 1)
    v[0] = 1.0
    prev = 0.0
    for i in range(jj):
        m = -j + i
        nxt = -(2.0 * m * cot_b * v[i] + (coupling(m - 1) * prev if i else 0.0)) / coupling(m)
        v[i + 1] = nxt
        prev = v[i]
        if abs(nxt) > 1e250:
            v[: i + 2] /= 1e250
            prev /= 1e250
    half = v * v
    asc = np.concatenate((half, half[-2::-1]))
    asc /= asc.sum()
    return asc[::-1].copy()  # descending m, matching amplitude convention


def dicke_moments(n_particles: int) -> CollectiveMoments:
    """Exact moments of the symmetric |J=N/2, M=0> state."""
    if n_particles % 2:
        raise ValueError("the M=0 Dicke state needs even N")
    j = n_particles / 2.0
    return CollectiveMoments(n_particles, 0.0, 0.0, 0.0, j * (j + 1), 0.0)


def coherent_moments(n_particles: int, direction: str = "x") -> CollectiveMoments:
    """Exact moments of a coherent (fully polarized) state along an axis."""
    n = n_particles
    j = n / 2.0
    if direction in ("x", "y"):
        mean = {"x": (j, 0.0), "y": (0.0, j)}[direction]
        return CollectiveMoments(n, mean[0], mean[1], 0.0, j * j + j / 2.0, n / 4.0)
    if direction == "z":
        return CollectiveMoments(n, 0.0, 0.0, j, n / 2.0, j * j)
    raise ValueError(f"unknown direction {direction!r}")
