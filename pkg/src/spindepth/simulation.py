"""Monte Carlo generation of measurement records and state families.

Shot records mimic the experiment: every repetition counts atoms in two
levels (n_plus, n_minus with n_plus+n_minus = N) in either the z basis or
a randomly phased transverse basis.  Detection noise is applied to the
count difference and re-rounded, so totals are preserved exactly.

State families cover the certification cross-checks: products of random
group states at or inside the k-producibility boundary, and noisy
squeezed ground states for the criterion-comparison sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .producibility import aggregate_product, depth_bound, GroupMoments
from .spin_algebra import (
    CollectiveMoments,
    SpinSector,
    ground_state,
    moments_of_state,
    rotated_dicke_distribution,
)

__all__ = [
    "NoiseModel",
    "ShotRecord",
    "SweepResult",
    "sample_dicke_shots",
    "sample_coherent_shots",
    "random_producible_moments",
    "noisy_squeezed_moments",
    "compare_criteria_sweep",
]

# exact transverse sampling uses the full rotated distribution up to this
# spin; larger systems switch to the arcsine asymptotic form
EXACT_SAMPLING_MAX_J = 4000.0


@dataclass(frozen=True)
class NoiseModel:
    """Detection/state noise: std sqrt(sigma0^2 + trend^2 N) atoms plus an
    optional white-noise admixture p_white for state-level mixing."""

    sigma0: float = 0.0
    trend_coeff: float = 0.0
    p_white: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma0 < 0 or self.trend_coeff < 0:
            raise ValueError("noise stds must be >= 0")
        if not 0.0 <= self.p_white <= 1.0:
            raise ValueError("p_white must lie in [0, 1]")

    def detection_std(self, n_particles: int) -> float:
        return math.hypot(self.sigma0, self.trend_coeff * math.sqrt(n_particles))


@dataclass(frozen=True)
class ShotRecord:
    """One measurement: basis tag plus the two population counts."""

    shot_id: int
    basis: str
    n_plus: int
    n_minus: int

    def __post_init__(self) -> None:
        if self.basis not in ("z", "alpha"):
            raise ValueError(f"basis must be 'z' or 'alpha', got {self.basis!r}")
        if self.n_plus < 0 or self.n_minus < 0:
            raise ValueError("counts must be non-negative")

    @property
    def value(self) -> float:
        """The spin projection (n_plus - n_minus)/2 realized by the shot."""
        return (self.n_plus - self.n_minus) / 2.0

    @property
    def total(self) -> int:
        return self.n_plus + self.n_minus


@dataclass(frozen=True)
class SweepResult:
    """Detected depths of both criteria at one squeezing strength."""

    Lambda: float
    moments: CollectiveMoments
    depth_new: int
    depth_sm: int


def _noisy_counts(n_particles: int, values: np.ndarray, std: float, rng) -> np.ndarray:
    """Counts n_plus from spin values, with detection noise and rounding."""
    n_plus = n_particles / 2.0 + values
    if std > 0:
        n_plus = n_plus + rng.normal(0.0, std, size=n_plus.shape)
    return np.clip(np.rint(n_plus), 0, n_particles).astype(int)


def _records(n_particles: int, basis: str, n_plus: np.ndarray, start_id: int) -> list[ShotRecord]:
    return [
        ShotRecord(start_id + i, basis, int(c), n_particles - int(c))
        for i, c in enumerate(n_plus)
    ]


def sample_dicke_shots(
    n_particles: int,
    n_shots: int,
    basis_mix: float = 0.5,
    noise: NoiseModel | None = None,
    seed: int = 0,
) -> list[ShotRecord]:
    """Shots of the ideal |J=N/2, M=0> state.

    z-basis outcomes are exactly zero before detection noise; transverse
    outcomes follow the rotated distribution at polar angle pi/2 (the
    azimuth is irrelevant by symmetry), sampled exactly up to
    J <= EXACT_SAMPLING_MAX_J and from the arcsine asymptotic beyond.
    Deterministic for a given seed.
    """
    if n_particles % 2 or n_particles < 2:
        raise ValueError("the M=0 Dicke state needs even N >= 2")
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if not 0.0 <= basis_mix <= 1.0:
        raise ValueError("basis_mix must lie in [0, 1]")
    noise = noise or NoiseModel()
    rng_z, rng_a = _streams(seed, 2)
    n_alpha = int(round(n_shots * basis_mix))
    n_z = n_shots - n_alpha
    std = noise.detection_std(n_particles)
    j = n_particles / 2.0

    records: list[ShotRecord] = []
    if n_z:
        zvals = np.zeros(n_z)
        records += _records(n_particles, "z", _noisy_counts(n_particles, zvals, std, rng_z), 1)
    if n_alpha:
        if j <= EXACT_SAMPLING_MAX_J:
            probs = rotated_dicke_distribution(SpinSector(j), math.pi / 2.0)
            m_vals = SpinSector(j).m_values()
            avals = rng_a.choice(m_vals, size=n_alpha, p=probs)
        else:
            avals = np.rint(j * np.sin(rng_a.uniform(-math.pi / 2, math.pi / 2, n_alpha)))
        records += _records(
            n_particles, "alpha", _noisy_counts(n_particles, avals, std, rng_a), n_z + 1
        )
    return records


def sample_coherent_shots(
    n_particles: int,
    n_shots: int,
    noise: NoiseModel | None = None,
    seed: int = 0,
    basis_mix: float = 0.0,
) -> list[ShotRecord]:
    """Shots of a transversely polarized coherent state with random phase.

    z-basis counts are Binomial(N, 1/2), giving Var(Jz) = N/4 before
    detection noise.  Transverse shots draw a uniform phase phi per shot
    and count Binomial(N, (1+cos phi)/2).
    """
    if n_particles < 1 or n_shots < 1:
        raise ValueError("need N >= 1 and n_shots >= 1")
    if not 0.0 <= basis_mix <= 1.0:
        raise ValueError("basis_mix must lie in [0, 1]")
    noise = noise or NoiseModel()
    rng_z, rng_a = _streams(seed, 2)
    n_alpha = int(round(n_shots * basis_mix))
    n_z = n_shots - n_alpha
    std = noise.detection_std(n_particles)

    records: list[ShotRecord] = []
    if n_z:
        vals = rng_z.binomial(n_particles, 0.5, n_z) - n_particles / 2.0
        records += _records(n_particles, "z", _noisy_counts(n_particles, vals, std, rng_z), 1)
    if n_alpha:
        phi = rng_a.uniform(0.0, 2.0 * math.pi, n_alpha)
        vals = rng_a.binomial(n_particles, (1.0 + np.cos(phi)) / 2.0) - n_particles / 2.0
        records += _records(
            n_particles, "alpha", _noisy_counts(n_particles, vals, std, rng_a), n_z + 1
        )
    return records


def _streams(seed: int, count: int):
    children = np.random.SeedSequence(seed).spawn(count)
    return tuple(np.random.default_rng(c) for c in children)


def _group_sizes(n_particles: int, k: int) -> list[int]:
    sizes = [k] * (n_particles // k)
    if n_particles % k:
        sizes.append(n_particles % k)
    return sizes


def random_producible_moments(
    n_particles: int,
    k: int,
    n_states: int,
    mode: str = "haar_symmetric",
    seed: int = 0,
) -> list[CollectiveMoments]:
    """Moments of random k-producible product states.

    haar_symmetric draws every group state uniformly in its symmetric
    sector (volume coverage of the allowed region); squeezed_rotated uses
    identical squeezing-Hamiltonian ground states at a random strength
    with one random collective rotation (coverage near the boundary).
    Aggregation follows the product rule of aggregate_product.
    """
    if not 1 <= k <= n_particles:
        raise ValueError("need 1 <= k <= N")
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if mode not in ("haar_symmetric", "squeezed_rotated"):
        raise ValueError(f"unknown mode {mode!r}")
    sizes = _group_sizes(n_particles, k)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if mode == "haar_symmetric":
        return _haar_states(n_particles, sizes, n_states, rng)
    return _squeezed_states(n_particles, sizes, n_states, rng, k)


def _haar_group_arrays(k_n: int, n_draws: int, rng) -> tuple[np.ndarray, ...]:
    """Vectorized per-group moments for n_draws Haar-random sector states."""
    j = k_n / 2.0
    dim = k_n + 1
    m = j - np.arange(dim, dtype=float)
    c = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    amp = rng.normal(size=(n_draws, dim)) + 1j * rng.normal(size=(n_draws, dim))
    amp /= np.linalg.norm(amp, axis=1, keepdims=True)
    prob = np.abs(amp) ** 2
    mz = prob @ m
    mz2 = prob @ (m * m)
    ladder = np.sum(np.conj(amp[:, :-1]) * c * amp[:, 1:], axis=1)
    q = j * (j + 1) - mz2
    return ladder.real, ladder.imag, mz, q, mz2


def _haar_states(n_particles, sizes, n_states, rng) -> list[CollectiveMoments]:
    out: list[CollectiveMoments] = []
    chunk = max(1, min(n_states, int(2e6 / (len(sizes) * (max(sizes) + 1)))))
    done = 0
    while done < n_states:
        batch = min(chunk, n_states - done)
        sum_mx = np.zeros(batch)
        sum_my = np.zeros(batch)
        sum_mz = np.zeros(batch)
        sum_mx2 = np.zeros(batch)
        sum_my2 = np.zeros(batch)
        sum_mz2 = np.zeros(batch)
        sum_q = np.zeros(batch)
        sum_z2 = np.zeros(batch)
        for k_n in sizes:
            mx, my, mz, q, mz2 = _haar_group_arrays(k_n, batch, rng)
            sum_mx += mx
            sum_my += my
            sum_mz += mz
            sum_mx2 += mx * mx
            sum_my2 += my * my
            sum_mz2 += mz * mz
            sum_q += q
            sum_z2 += mz2
        perp = sum_q + sum_mx**2 - sum_mx2 + sum_my**2 - sum_my2
        zz = sum_z2 + sum_mz**2 - sum_mz2
        for i in range(batch):
            out.append(
                CollectiveMoments(
                    n_particles,
                    float(sum_mx[i]),
                    float(sum_my[i]),
                    float(sum_mz[i]),
                    float(perp[i]),
                    float(zz[i]),
                )
            )
        done += batch
    return out


def _ground_tensor(k_n: int, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """First-moment vector and diagonal second-moment tensor of the
    squeezing ground state (real amplitudes make the tensor diagonal)."""
    state, _ = ground_state(SpinSector(k_n / 2.0), lam)
    v = state.amplitudes.real
    j = k_n / 2.0
    dim = k_n + 1
    m = j - np.arange(dim, dtype=float)
    c = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    p = v * v
    mz = float(p @ m)
    mz2 = float(p @ (m * m))
    mx = float(np.sum(c * v[:-1] * v[1:]))
    # <jx^2 - jy^2> = Re <j+^2>
    d2 = float(np.sum(c[:-1] * c[1:] * v[:-2] * v[2:])) if dim > 2 else 0.0
    q = j * (j + 1) - mz2
    jx2 = (q + d2) / 2.0
    jy2 = (q - d2) / 2.0
    vec = np.array([mx, 0.0, mz])
    tensor = np.diag([jx2, jy2, mz2])
    return vec, tensor


def _rotation(beta: float, phi: float) -> np.ndarray:
    cb, sb = math.cos(beta), math.sin(beta)
    cp, sp = math.cos(phi), math.sin(phi)
    ry = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry


def _squeezed_states(n_particles, sizes, n_states, rng, k) -> list[CollectiveMoments]:
    j = k / 2.0
    log_lo = math.log10(2e-4 / max(j, 1.0))
    log_hi = math.log10(100.0 * math.sqrt(j) + 100.0)
    out: list[CollectiveMoments] = []
    distinct = sorted(set(sizes))
    counts = {s: sizes.count(s) for s in distinct}
    for _ in range(n_states):
        lam = 10.0 ** rng.uniform(log_lo, log_hi)
        rot = _rotation(rng.normal(0.0, 0.4), rng.uniform(0.0, 2.0 * math.pi))
        groups: list[GroupMoments] = []
        for k_n in distinct:
            vec, tensor = _ground_tensor(k_n, lam)
            v = rot @ vec
            t = rot @ tensor @ rot.T
            q = float(np.trace(t) - t[2, 2])
            gm = GroupMoments(k_n, float(v[0]), float(v[1]), float(v[2]), q, float(t[2, 2]))
            groups.extend([gm] * counts[k_n])
        out.append(aggregate_product(groups))
    return out


def noisy_squeezed_moments(n_particles: int, Lambda: float, p: float) -> CollectiveMoments:
    """Moments of (1-p) |ground(Lambda)><...| + p (white noise).

    The white state is a product of maximally mixed atoms, so it carries
    <Jz^2> = N/4, <Jx^2+Jy^2> = N/2 and no first moments; all fields are
    affine in p.
    """
    if n_particles % 2 or n_particles < 2:
        raise ValueError("the symmetric-sector ground state needs even N >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    n = n_particles
    state, _ = ground_state(SpinSector(n / 2.0), Lambda)
    ideal = moments_of_state(state, n)
    return CollectiveMoments(
        n,
        (1 - p) * ideal.mean_x,
        (1 - p) * ideal.mean_y,
        (1 - p) * ideal.mean_z,
        (1 - p) * ideal.second_perp + p * n / 2.0,
        (1 - p) * ideal.second_z + p * n / 4.0,
    )


def compare_criteria_sweep(n_particles: int, lambda_grid, p: float) -> list[SweepResult]:
    """Detected depth of both criteria across squeezing strengths."""
    out = []
    for lam in np.asarray(lambda_grid, dtype=float):
        moments = noisy_squeezed_moments(n_particles, float(lam), p)
        depth_new = depth_bound(n_particles, moments, "closed_form").depth_lower_bound
        depth_sm = depth_bound(n_particles, moments, "sorensen_molmer").depth_lower_bound
        out.append(SweepResult(float(lam), moments, depth_new, depth_sm))
    return out
