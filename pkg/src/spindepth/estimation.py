"""Unbiased moment estimation from finite samples.

The workhorse is the unbiased estimator of the second central moment,
mu2_hat = n/(n-1) m2, together with an unbiased estimator of its own
variance built from the second and fourth sample moments:

    var(mu2_hat) = n/((n-3)(n-2)) m4
                   - n(n^2-3)/((n-3)(n-2)(n-1)^2) m2^2

valid for n >= 4 and requiring no assumption on the sampled distribution.
On top of that sit the two measured quantities of the analysis pipeline
(the Jz variance after detection-noise subtraction and the effective
squared spin length from randomly rotated shots) and the worst-case depth
certification over a confidence ellipse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .producibility import DepthVerdict, depth_bound
from .spin_algebra import CollectiveMoments

__all__ = [
    "SampleMoments",
    "MomentEstimate",
    "EllipsePoint",
    "sample_moments",
    "unbiased_second_moment",
    "smve",
    "estimate_jz_variance",
    "estimate_jeff_sq",
    "depth_with_confidence",
    "to_decibels",
]


@dataclass(frozen=True)
class SampleMoments:
    """Size and central sample moments (m1, m2, m4) of one sample."""

    n: int
    m1: float
    m2: float
    m4: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("sample size must be >= 1")
        if self.m2 < 0:
            raise ValueError("m2 must be non-negative")
        if self.m4 < self.m2**2 * (1 - 1e-12) - 1e-300:
            raise ValueError("m4 < m2^2 violates Cauchy-Schwarz")


@dataclass(frozen=True)
class MomentEstimate:
    """A point estimate with the estimated variance of the estimator."""

    value: float
    variance_of_estimate: float
    n: int
    clamped: bool = False
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.variance_of_estimate < 0:
            raise ValueError("variance_of_estimate must be >= 0")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance_of_estimate)


@dataclass(frozen=True)
class EllipsePoint:
    """Measured (x_norm, var_z) point with marginal stds and correlation."""

    x_norm: float
    x_std: float
    var_z: float
    var_std: float
    correlation: float = 0.0

    def __post_init__(self) -> None:
        if self.x_std < 0 or self.var_std < 0:
            raise ValueError("stds must be >= 0")
        if not -1.0 <= self.correlation <= 1.0:
            raise ValueError("correlation must lie in [-1, 1]")


def sample_moments(data) -> SampleMoments:
    """m1, m2, m4 of a sample (plain 1/n normalization, deviations from m1)."""
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DataError("empty sample")
    m1 = float(x.mean())
    d = x - m1
    d2 = d * d
    return SampleMoments(int(x.size), m1, float(d2.mean()), float((d2 * d2).mean()))


def unbiased_second_moment(s: SampleMoments) -> float:
    """mu2_hat = n/(n-1) m2; unbiased for the population second moment."""
    if s.n < 2:
        raise DataError("unbiased second moment needs n >= 2")
    return s.n / (s.n - 1) * s.m2


def smve(s: SampleMoments, *, clamp: bool = True, with_flag: bool = False):
    """Unbiased estimate of var(mu2_hat) from m2 and m4 (n >= 4).

    The raw estimator can come out negative on small samples; by default
    the returned value is clamped at zero (pass with_flag=True to learn
    whether that happened).  clamp=False returns the raw value, which is
    what stays unbiased when averaging many samples.
    """
    if s.n <= 3:
        raise DataError("the variance estimator needs n >= 4 (poles at n=2,3)")
    n = s.n
    raw = (
        n / ((n - 3) * (n - 2)) * s.m4
        - n * (n * n - 3) / ((n - 3) * (n - 2) * (n - 1) ** 2) * s.m2**2
    )
    clamped = clamp and raw < 0.0
    value = 0.0 if clamped else raw
    return (value, clamped) if with_flag else value


def estimate_jz_variance(shots, sigma_det: float) -> MomentEstimate:
    """Atomic Jz variance: unbiased sample variance minus detection noise.

    The subtraction treats sigma_det^2 as a constant shift, so the
    uncertainty is the plain variance estimate of mu2_hat.  Negative
    results are clamped at zero and flagged.
    """
    if sigma_det < 0:
        raise ValueError("sigma_det must be >= 0")
    s = sample_moments(shots)
    if s.n < 4:
        raise DataError(f"need at least 4 z-basis shots, got {s.n}")
    var_est, var_clamped = smve(s, with_flag=True)
    value = unbiased_second_moment(s) - sigma_det**2
    notes = []
    clamped = False
    if value < 0:
        value = 0.0
        clamped = True
        notes.append("variance_clamped_after_noise_subtraction")
    if var_clamped:
        notes.append("smve_clamped")
    return MomentEstimate(value, var_est, s.n, clamped, tuple(notes))


def estimate_jeff_sq(shots) -> tuple[MomentEstimate, float]:
    """<Jx^2+Jy^2> and the effective spin length from rotated shots.

    Randomly phased transverse shots average <J_alpha^2> to half of
    <Jx^2+Jy^2>, so the estimate is twice the mean of the squared shot
    values.  Its variance comes from the sample variance of the squares
    (delta method).  Also returns J_eff solving J_eff(J_eff+1) = value.
    """
    x = np.asarray(shots, dtype=float).ravel()
    if x.size <= 3:
        raise DataError(f"need at least 4 rotated-basis shots, got {x.size}")
    n = int(x.size)
    q = x * x
    value = 2.0 * float(q.mean())
    var_of_mean_q = float(q.var(ddof=1)) / n
    variance = 4.0 * var_of_mean_q
    notes = []
    mean_shot = float(x.mean())
    sd_mean = math.sqrt(float(x.var(ddof=1)) / n) if n > 1 else 0.0
    if sd_mean > 0 and abs(mean_shot) > 3.0 * sd_mean:
        notes.append("nonzero_mean_in_rotated_basis")
    j_eff = 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * value)) if value > 0 else 0.0
    return MomentEstimate(value, variance, n, False, tuple(notes)), j_eff


def _moments_at(n_particles: int, x_norm: float, var_z: float) -> CollectiveMoments:
    j_max = n_particles / 2.0
    cap = j_max * (j_max + 1.0)
    x_abs = min(max(x_norm, 0.0) * j_max**2, cap)
    return CollectiveMoments(n_particles, 0.0, 0.0, 0.0, x_abs, max(var_z, 0.0))


def depth_with_confidence(
    point: EllipsePoint,
    n_sigma: float,
    n_particles: int,
    criterion: str = "closed_form",
    n_points: int = 256,
) -> DepthVerdict:
    """Worst-case depth verdict over the n_sigma confidence ellipse.

    The two estimators get a Gaussian model with the given marginal stds
    and correlation; the certified depth is the minimum of depth_bound
    over n_points on the ellipse boundary.  n_sigma=0 (or a degenerate
    ellipse) reduces to the center point.
    """
    if n_sigma < 0:
        raise ValueError("n_sigma must be >= 0")
    center = depth_bound(n_particles, _moments_at(n_particles, point.x_norm, point.var_z), criterion)
    if n_sigma == 0 or (point.x_std == 0 and point.var_std == 0):
        return center
    rho = point.correlation
    # Cholesky factor of the covariance, valid for degenerate stds too
    l11 = point.x_std
    l21 = rho * point.var_std
    l22 = point.var_std * math.sqrt(max(1.0 - rho * rho, 0.0))
    worst = center
    theta = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    for t in theta:
        dx = n_sigma * l11 * math.cos(t)
        dv = n_sigma * (l21 * math.cos(t) + l22 * math.sin(t))
        verdict = depth_bound(
            n_particles,
            _moments_at(n_particles, point.x_norm + dx, point.var_z + dv),
            criterion,
        )
        if verdict.depth_lower_bound < worst.depth_lower_bound:
            worst = verdict
    return worst


def to_decibels(ratio: float) -> float:
    """10 log10 of a positive ratio."""
    if ratio <= 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    return 10.0 * math.log10(ratio)
