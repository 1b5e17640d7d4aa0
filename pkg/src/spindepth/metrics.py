"""Squeezing figures of merit computed from collective moments."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .spin_algebra import CollectiveMoments

__all__ = ["SqueezingReport", "xi_squared", "xi_gen", "number_squeezing_db", "squeezing_report"]


@dataclass(frozen=True)
class SqueezingReport:
    """Linear and dB squeezing parameters; NaN/-inf mark undefined cases."""

    xi2: float
    xi2_gen: float
    xi2_db: float
    xi2_gen_db: float
    number_squeezing_db: float
    flags: tuple[str, ...] = ()


def xi_squared(moments: CollectiveMoments) -> float:
    """N (Delta Jz)^2 / (<Jx>^2 + <Jy>^2); NaN when unpolarized.

    Values below one witness entanglement; unpolarized states (Dicke in
    particular) make the denominator vanish, which is reported as NaN
    rather than an error so sweeps never abort.
    """
    denom = moments.mean_x**2 + moments.mean_y**2
    if denom <= 0:
        return math.nan
    return moments.n_particles * moments.var_z / denom


def xi_gen(moments: CollectiveMoments) -> float:
    """(N-1) (Delta Jz)^2 / (<Jx^2+Jy^2> - N/2); NaN when the denominator
    is not positive.  Remains meaningful for unpolarized states."""
    denom = moments.second_perp - moments.n_particles / 2.0
    if denom <= 0:
        return math.nan
    return (moments.n_particles - 1) * moments.var_z / denom


def number_squeezing_db(moments: CollectiveMoments) -> float:
    """Variance relative to the shot-noise value N/4, in dB (-inf at zero)."""
    ratio = moments.var_z / (moments.n_particles / 4.0)
    if ratio <= 0:
        return -math.inf
    return 10.0 * math.log10(ratio)


def _to_db(value: float) -> float:
    if math.isnan(value):
        return math.nan
    if value <= 0:
        return -math.inf
    return 10.0 * math.log10(value)


def squeezing_report(moments: CollectiveMoments) -> SqueezingReport:
    x2 = xi_squared(moments)
    xg = xi_gen(moments)
    flags = []
    if math.isnan(x2):
        flags.append("xi2_undefined")
    if math.isnan(xg):
        flags.append("xi2_gen_undefined")
    ns_db = number_squeezing_db(moments)
    if math.isinf(ns_db):
        flags.append("zero_variance")
    return SqueezingReport(x2, xg, _to_db(x2), _to_db(xg), ns_db, tuple(flags))
