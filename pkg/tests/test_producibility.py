import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spindepth.producibility import (
    GroupMoments,
    aggregate_product,
    boundary_curve,
    criterion_closed_form,
    criterion_sorensen_molmer,
    depth_bound,
    f_function,
    tangent_criterion,
)
from spindepth.simulation import noisy_squeezed_moments, random_producible_moments
from spindepth.spin_algebra import (
    CollectiveMoments,
    SpinSector,
    coherent_moments,
    dicke_moments,
    ground_state,
    moments_of_state,
)


def group_from_state(state, k_n):
    m = moments_of_state(state, k_n)
    return GroupMoments(k_n, m.mean_x, m.mean_y, m.mean_z, m.second_perp, m.second_z)


# ---------------------------------------------------------------------------
# F function
# ---------------------------------------------------------------------------


def test_f_qubit_matches_analytic():
    for x in np.linspace(0, 1, 101):
        assert f_function(0.5, float(x)) == pytest.approx(x * x / 2, abs=1e-12)


def test_f_spin_one_matches_analytic():
    # minimizing over the (a, b, a) manifold gives V = (1 - sqrt(1-X^2))/2
    for x in np.linspace(0.01, 0.999, 37):
        expected = (1 - math.sqrt(1 - x * x)) / 2
        assert f_function(1.0, float(x)) == pytest.approx(expected, abs=1e-9)


def test_f_examples_and_range():
    assert f_function(0.5, 1.0) == pytest.approx(0.5)
    assert f_function(0.5, 0.6) == pytest.approx(0.18)
    assert f_function(3.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        f_function(1.0, 1.5)
    with pytest.raises(ValueError):
        f_function(1.0, -0.2)


@pytest.mark.parametrize("two_j", [1, 2, 3, 4, 5, 8, 13])
def test_f_monotone_and_bounded(two_j):
    j = two_j / 2.0
    xs = np.linspace(0, 1, 41)
    vals = [f_function(j, float(x)) for x in xs]
    assert all(0.0 <= v <= 0.5 + 1e-12 for v in vals)
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    if two_j % 2 == 0:
        assert vals[-1] == pytest.approx(0.5, abs=1e-6)
    else:
        # half-integer values are certified lower bounds (dual envelope)
        assert 0.49 <= vals[-1] <= 0.5


@pytest.mark.parametrize("x", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_f_nonincreasing_in_j(x):
    vals = [f_function(two_j / 2.0, x) for two_j in range(1, 12)]
    assert all(b <= a + 1e-7 for a, b in zip(vals, vals[1:]))


@settings(max_examples=60, deadline=None)
@given(
    two_j=st.integers(min_value=1, max_value=9),
    lam=st.floats(min_value=1e-3, max_value=1e3),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_f_sound_against_random_states(two_j, lam, seed):
    # F_j evaluated at a state's own polarization never exceeds its variance
    j = two_j / 2.0
    sector = SpinSector(j)
    rng = np.random.default_rng(seed)
    amp = rng.normal(size=sector.dim) + 1j * rng.normal(size=sector.dim)
    amp /= np.linalg.norm(amp)
    from spindepth.spin_algebra import StateVector

    m = moments_of_state(StateVector(sector, amp), two_j)
    x = math.hypot(m.mean_x, m.mean_y) / j
    if x > 1.0:
        x = 1.0
    assert f_function(j, x) <= m.var_z / j + 1e-7


def test_f_half_integer_below_sweep_values():
    # half-integer optima tilt out of the <jz>=0 manifold: the certified
    # value at the lambda->0+ entry point must undercut the symmetric combo
    for two_j in (3, 5, 7):
        j = two_j / 2.0
        x0 = (j + 0.5) / (2 * j)
        assert f_function(j, x0) < 0.25


# ---------------------------------------------------------------------------
# boundary curve
# ---------------------------------------------------------------------------


def test_boundary_dicke_endpoint():
    curve = boundary_curve(8000, 28)
    assert curve.lam[0] == 0.0
    assert curve.x_norm[0] == pytest.approx((28 + 2) / 8000, abs=1e-9)
    assert curve.var_z[0] == 0.0


def test_boundary_coherent_endpoint():
    curve = boundary_curve(8000, 28, np.array([0.0, 1e9]))
    assert curve.x_norm[-1] == pytest.approx(1 + 1 / 8000, rel=1e-9)
    assert curve.var_z[-1] == pytest.approx(2000.0, rel=1e-6)


@pytest.mark.parametrize("n,k", [(8, 2), (40, 4), (120, 6)])
def test_boundary_lambda0_general(n, k):
    curve = boundary_curve(n, k, np.array([0.0]))
    assert curve.var_z[0] == 0.0
    assert curve.x_norm[0] == pytest.approx((k + 2) / n, abs=1e-9)


def test_boundary_rejects_odd_k():
    with pytest.raises(ValueError, match="closed_form"):
        boundary_curve(100, 3)
    with pytest.raises(ValueError):
        boundary_curve(10, 12)


def test_boundary_matches_two_qubit_brute_force():
    # frozen values from an SLSQP optimization over arbitrary two-qubit
    # product pairs psi1 x psi2 at fixed <Jx^2+Jy^2>
    frozen = {
        0.2: (4.204338759850777, 0.071523309114741),
        0.5: (4.707106781186548, 0.292893218813453),
        1.0: (5.047213595499959, 0.552786404500042),
    }
    curve = boundary_curve(4, 2, np.array([0.0] + list(frozen)))
    j_max_sq = 4.0
    for lam, x, v in zip(curve.lam[1:], curve.x_norm[1:], curve.var_z[1:]):
        x_ref, v_ref = frozen[float(lam)]
        assert x * j_max_sq == pytest.approx(x_ref, abs=1e-9)
        assert v == pytest.approx(v_ref, abs=1e-6)


def test_boundary_saturated_by_identical_groups():
    # aggregating N/k identical ground-state groups reproduces the curve
    for n, k in ((40, 4), (112, 28)):
        lams = np.array([0.0, 0.3, 2.0, 50.0])
        curve = boundary_curve(n, k, lams)
        sector = SpinSector(k / 2.0)
        for lam, x_norm, var in zip(curve.lam, curve.x_norm, curve.var_z):
            state, _ = ground_state(sector, float(lam))
            groups = [group_from_state(state, k)] * (n // k)
            agg = aggregate_product(groups)
            assert agg.second_perp / (n / 2) ** 2 == pytest.approx(x_norm, abs=1e-9)
            assert agg.var_z == pytest.approx(var, abs=1e-9)


def test_closed_form_never_above_curve():
    # the closed-form bound is sound: at every curve point it stays at or
    # below the parametric variance (the transverse bound has O(N) slack)
    for n, k in ((8, 2), (200, 4), (8000, 28)):
        curve = boundary_curve(n, k)
        j_max_sq = (n / 2) ** 2
        for x_norm, var in zip(curve.x_norm, curve.var_z):
            moments = CollectiveMoments(n, 0, 0, 0, x_norm * j_max_sq, var)
            violated, bound = criterion_closed_form(n, k, moments)
            assert bound <= var + 1e-9 * max(var, 1.0)
            assert not violated


def test_closed_form_matches_curve_at_large_n():
    # the two constructions describe the same boundary as N grows: the
    # relative gap in var_z at matching x_norm falls below 1e-6 by N=1e7
    n, k = 10_000_000, 2
    lams = np.array([0.0, 0.3, 1.0, 3.0])
    curve = boundary_curve(n, k, lams)
    j_max_sq = (n / 2) ** 2
    for x_norm, var in zip(curve.x_norm[1:], curve.var_z[1:]):
        moments = CollectiveMoments(n, 0, 0, 0, x_norm * j_max_sq, var)
        _, bound = criterion_closed_form(n, k, moments)
        assert bound == pytest.approx(var, rel=2e-6)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def test_closed_form_examples():
    dicke = dicke_moments(8000)
    violated, bound = criterion_closed_form(8000, 1, dicke)
    assert violated
    assert bound == pytest.approx(1999.75, abs=1e-6)

    violated, bound = criterion_closed_form(8000, 1, coherent_moments(8000))
    assert not violated
    assert bound == pytest.approx(1999.5, abs=1e-6)

    violated, _ = criterion_closed_form(8000, 7999, dicke)
    assert violated


def test_closed_form_trivial_zero_bound():
    dicke = dicke_moments(8000)
    violated, bound = criterion_closed_form(8000, 8000, dicke)
    assert bound == 0.0 and not violated


def test_sorensen_molmer_examples():
    violated, bound = criterion_sorensen_molmer(8000, 28, dicke_moments(8000))
    assert bound == 0.0 and not violated

    violated, bound = criterion_sorensen_molmer(8000, 28, coherent_moments(8000))
    assert bound == pytest.approx(2000.0, abs=1e-9)
    assert not violated  # equality is not a violation

    moments = noisy_squeezed_moments(4000, 0.5, 0.0)
    violated, _ = criterion_sorensen_molmer(4000, 3800, moments)
    assert violated


def test_criteria_reject_bad_k():
    with pytest.raises(ValueError):
        criterion_closed_form(10, 0, dicke_moments(10))
    with pytest.raises(ValueError):
        criterion_sorensen_molmer(10, 11, dicke_moments(10))


# ---------------------------------------------------------------------------
# depth scan
# ---------------------------------------------------------------------------


def test_depth_ideal_dicke_full():
    verdict = depth_bound(8000, dicke_moments(8000))
    assert verdict.depth_lower_bound == 8000
    assert verdict.violated_k == 7999
    assert "odd_k_heuristic" in verdict.notes


def test_depth_coherent_is_separable():
    verdict = depth_bound(8000, coherent_moments(8000))
    assert verdict.depth_lower_bound == 1
    assert verdict.violated_k == 0
    assert verdict.margin == 0.0


def test_depth_paper_scale_point():
    moments = CollectiveMoments(8000, 0, 0, 0, 1.0005 * 4000**2, 180.0)
    verdict = depth_bound(8000, moments)
    assert verdict.depth_lower_bound >= 29
    assert verdict.margin > 0


def test_depth_verdict_consistency():
    moments = CollectiveMoments(1000, 0, 0, 0, 1.0002 * 500**2, 30.0)
    verdict = depth_bound(1000, moments)
    assert verdict.depth_lower_bound == verdict.violated_k + 1
    # nesting: every k below the verdict is violated too
    for k in range(1, verdict.violated_k + 1):
        assert criterion_closed_form(1000, k, moments)[0]
    for k in range(verdict.violated_k + 1, min(verdict.violated_k + 40, 1000)):
        assert not criterion_closed_form(1000, k, moments)[0]


def test_depth_sorensen_molmer_pure_squeezed():
    moments = noisy_squeezed_moments(400, 0.05, 0.0)
    verdict = depth_bound(400, moments, "sorensen_molmer")
    assert verdict.depth_lower_bound >= 398


def test_depth_rejects_unknown_criterion():
    with pytest.raises(ValueError):
        depth_bound(100, dicke_moments(100), "bogus")


# ---------------------------------------------------------------------------
# tangent criterion
# ---------------------------------------------------------------------------


def test_tangent_touches_curve():
    n, k = 8000, 28
    curve = boundary_curve(n, k)
    i = np.searchsorted(curve.x_norm, 0.5)
    x0, v0 = float(curve.x_norm[i]), float(curve.var_z[i])
    slope, intercept = tangent_criterion(n, k, x0)
    assert slope * x0 + intercept == pytest.approx(v0, abs=1e-8 * max(v0, 1.0))


def test_tangent_at_dicke_endpoint():
    n, k = 200, 4
    x0 = (k + 2) / n
    slope, intercept = tangent_criterion(n, k, x0)
    assert slope >= 0
    assert slope * x0 + intercept == pytest.approx(0.0, abs=1e-8)


def test_tangent_supports_boundary():
    # convexity: the whole curve stays on or above any tangent line
    n, k = 400, 4
    curve = boundary_curve(n, k)
    for x0 in (0.1, 0.4, 0.8):
        slope, intercept = tangent_criterion(n, k, x0)
        i_max = int(np.argmax(curve.x_norm))
        line = slope * curve.x_norm[: i_max + 1] + intercept
        assert np.all(curve.var_z[: i_max + 1] >= line - 1e-7)


def test_tangent_rejects_out_of_range():
    with pytest.raises(ValueError):
        tangent_criterion(8000, 28, 2.5)


def test_random_producible_stay_above_tangent():
    n, k = 16, 4
    slope, intercept = tangent_criterion(n, k, 0.6)
    states = random_producible_moments(n, k, 10_000, "haar_symmetric", seed=7)
    states += random_producible_moments(n, k, 10_000, "squeezed_rotated", seed=8)
    j_max_sq = (n / 2) ** 2
    for m in states:
        line = slope * m.second_perp / j_max_sq + intercept
        assert m.var_z >= line - 1e-9


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


def test_aggregate_two_coherent_qubits():
    qubit = GroupMoments(1, 0.5, 0.0, 0.0, 0.5, 0.25)
    agg = aggregate_product([qubit, qubit])
    assert agg.second_perp == pytest.approx(1.5, abs=1e-12)
    direct = coherent_moments(2)
    assert agg.second_perp == pytest.approx(direct.second_perp, abs=1e-12)
    assert agg.var_z == pytest.approx(direct.var_z, abs=1e-12)


def test_aggregate_dicke_groups():
    n, k = 112, 28
    state, _ = ground_state(SpinSector(k / 2.0), 0.0)
    groups = [group_from_state(state, k)] * (n // k)
    agg = aggregate_product(groups)
    assert agg.second_perp == pytest.approx(n * (k + 2) / 4, abs=1e-9)
    assert agg.var_z == 0.0


def test_aggregate_identical_coherent_groups():
    n, k = 40, 8
    j = k / 2.0
    coherent_group = GroupMoments(k, j, 0.0, 0.0, j * j + j / 2, k / 4.0)
    agg = aggregate_product([coherent_group] * (n // k))
    assert agg.second_perp == pytest.approx(n * n / 4 + n / 4, abs=1e-9)


def test_aggregate_empty_errors():
    with pytest.raises(ValueError):
        aggregate_product([])
