import math

import numpy as np
import pytest
from scipy import stats

from conftest import full_space_moments, symmetric_embedding
from spindepth.producibility import aggregate_product, criterion_closed_form, GroupMoments
from spindepth.simulation import (
    NoiseModel,
    ShotRecord,
    compare_criteria_sweep,
    noisy_squeezed_moments,
    random_producible_moments,
    sample_coherent_shots,
    sample_dicke_shots,
)
from spindepth.spin_algebra import (
    SpinSector,
    StateVector,
    dicke_moments,
    ground_state,
    moments_of_state,
)


def values(records, basis):
    return np.array([r.value for r in records if r.basis == basis])


def test_shot_record_validation():
    r = ShotRecord(1, "z", 4005, 3995)
    assert r.value == 5.0 and r.total == 8000
    with pytest.raises(ValueError):
        ShotRecord(1, "q", 1, 1)
    with pytest.raises(ValueError):
        ShotRecord(1, "z", -1, 1)


def test_noise_model():
    nm = NoiseModel(sigma0=10.9, trend_coeff=0.15)
    assert nm.detection_std(8000) == pytest.approx(math.sqrt(10.9**2 + 0.15**2 * 8000))
    with pytest.raises(ValueError):
        NoiseModel(sigma0=-1)
    with pytest.raises(ValueError):
        NoiseModel(p_white=1.5)


def test_dicke_z_shots_noiseless_are_zero():
    records = sample_dicke_shots(800, 200, basis_mix=0.25, seed=3)
    z = values(records, "z")
    assert z.size == 150
    assert np.all(z == 0.0)
    assert all(r.total == 800 for r in records)


def test_determinism_and_seed_sensitivity():
    a = sample_dicke_shots(100, 50, 0.5, NoiseModel(sigma0=3.0), seed=9)
    b = sample_dicke_shots(100, 50, 0.5, NoiseModel(sigma0=3.0), seed=9)
    c = sample_dicke_shots(100, 50, 0.5, NoiseModel(sigma0=3.0), seed=10)
    assert a == b
    assert a != c


def test_noise_preserves_totals():
    records = sample_dicke_shots(500, 300, 0.5, NoiseModel(sigma0=12.0, trend_coeff=0.2), seed=1)
    assert all(r.total == 500 for r in records)
    assert all(r.n_plus >= 0 and r.n_minus >= 0 for r in records)


def test_dicke_alpha_distribution_is_arcsine():
    n = 8000
    records = sample_dicke_shots(n, 10_000, basis_mix=1.0, seed=42)
    x = 2.0 * values(records, "alpha") / n
    d, p_value = stats.kstest(x, stats.arcsine(loc=-1, scale=2).cdf)
    assert p_value > 0.01


def test_dicke_alpha_second_moment():
    n = 2000
    j = n / 2
    records = sample_dicke_shots(n, 4000, basis_mix=1.0, seed=5)
    q = values(records, "alpha") ** 2
    target = j * (j + 1) / 2
    se = q.std(ddof=1) / math.sqrt(q.size)
    assert abs(q.mean() - target) < 3 * se


def test_dicke_large_j_asymptotic_branch():
    # beyond the exact-sampling cutoff the arcsine fallback kicks in
    n = 10_000
    records = sample_dicke_shots(n, 4000, basis_mix=1.0, seed=8)
    x = 2.0 * values(records, "alpha") / n
    d, p_value = stats.kstest(x, stats.arcsine(loc=-1, scale=2).cdf)
    assert p_value > 0.01


def test_coherent_variance():
    n = 400
    records = sample_coherent_shots(n, 10_000, seed=12)
    z = values(records, "z")
    var = z.var(ddof=1)
    se = var * math.sqrt(2.0 / (z.size - 1))
    assert abs(var - n / 4) < 3 * se


def test_coherent_single_atom():
    records = sample_coherent_shots(1, 2000, seed=2)
    z = values(records, "z")
    assert set(np.unique(z)) == {-0.5, 0.5}
    assert abs(z.mean()) < 0.05


def test_coherent_with_detection_noise():
    n, sigma0 = 400, 7.0
    records = sample_coherent_shots(n, 10_000, NoiseModel(sigma0=sigma0), seed=13)
    z = values(records, "z")
    target = n / 4 + sigma0**2
    var = z.var(ddof=1)
    se = var * math.sqrt(2.0 / (z.size - 1))
    assert abs(var - target) < 3 * se + 1 / 12  # rounding to counts adds ~1/12


def test_coherent_alpha_basis_mean_square():
    n = 1000
    records = sample_coherent_shots(n, 8000, seed=14, basis_mix=1.0)
    a = values(records, "alpha")
    estimate = 2.0 * np.mean(a**2)
    target = n * n / 4 + n / 4  # <Jx^2 + Jy^2> of a coherent state
    se = 2.0 * np.std(a**2, ddof=1) / math.sqrt(a.size)
    assert abs(estimate - target) < 3 * se


def test_random_producible_group_partition():
    states = random_producible_moments(10, 4, 3, "haar_symmetric", seed=0)
    assert all(m.n_particles == 10 for m in states)
    states = random_producible_moments(8, 8, 2, "squeezed_rotated", seed=1)
    assert all(m.n_particles == 8 for m in states)


def test_random_producible_matches_full_hilbert_oracle(rng):
    # product of random sector group states, aggregated, versus the exact
    # 2^N computation via the symmetric embedding
    for sizes in ([2, 2], [3, 2], [4, 2, 2], [5, 3]):
        n = sum(sizes)
        groups = []
        psi = np.array([1.0 + 0j])
        for k_n in sizes:
            sector = SpinSector(k_n / 2.0)
            amp = rng.normal(size=sector.dim) + 1j * rng.normal(size=sector.dim)
            amp /= np.linalg.norm(amp)
            state = StateVector(sector, amp)
            m = moments_of_state(state, k_n)
            groups.append(GroupMoments(k_n, m.mean_x, m.mean_y, m.mean_z, m.second_perp, m.second_z))
            # embedding columns are ordered by number of ones = j - m index
            psi = np.kron(psi, symmetric_embedding(k_n) @ amp)
        agg = aggregate_product(groups)
        exact = full_space_moments(n, psi)
        assert agg.mean_x == pytest.approx(exact["mean_x"], abs=1e-10)
        assert agg.mean_y == pytest.approx(exact["mean_y"], abs=1e-10)
        assert agg.mean_z == pytest.approx(exact["mean_z"], abs=1e-10)
        assert agg.second_perp == pytest.approx(exact["second_perp"], abs=1e-10)
        assert agg.second_z == pytest.approx(exact["second_z"], abs=1e-10)


def test_single_group_dicke_point():
    n = 20
    state, _ = ground_state(SpinSector(n / 2.0), 0.0)
    m = moments_of_state(state, n)
    agg = aggregate_product([GroupMoments(n, m.mean_x, m.mean_y, m.mean_z, m.second_perp, m.second_z)])
    assert agg.second_perp / (n / 2) ** 2 == pytest.approx((n + 2) / n)
    assert agg.var_z == 0.0


def test_producible_soundness_smoke():
    for mode in ("haar_symmetric", "squeezed_rotated"):
        for n, k in ((100, 2), (100, 4)):
            for m in random_producible_moments(n, k, 500, mode, seed=21):
                violated, _ = criterion_closed_form(n, k, m)
                assert not violated


def test_noisy_squeezed_endpoints():
    n = 100
    m = noisy_squeezed_moments(n, 0.7, 1.0)
    assert (m.second_z, m.second_perp) == (n / 4, n / 2)
    assert m.mean_x == m.mean_y == m.mean_z == 0.0

    m = noisy_squeezed_moments(n, 0.0, 0.0)
    ref = dicke_moments(n)
    assert m.second_perp == pytest.approx(ref.second_perp)
    assert m.var_z == 0.0

    m = noisy_squeezed_moments(n, 1e8, 0.0)
    assert m.mean_x == pytest.approx(n / 2, rel=1e-4)
    assert m.var_z == pytest.approx(n / 4, rel=1e-3)


def test_noisy_squeezed_affine_in_p():
    n, lam = 60, 2.5
    probes = {p: noisy_squeezed_moments(n, lam, p) for p in (0.0, 0.3, 0.7, 1.0)}
    for fld in ("mean_x", "mean_y", "mean_z", "second_perp", "second_z"):
        v0 = getattr(probes[0.0], fld)
        v1 = getattr(probes[1.0], fld)
        for p in (0.3, 0.7):
            expected = (1 - p) * v0 + p * v1
            assert getattr(probes[p], fld) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_noisy_squeezed_validation():
    with pytest.raises(ValueError):
        noisy_squeezed_moments(99, 1.0, 0.0)
    with pytest.raises(ValueError):
        noisy_squeezed_moments(100, 1.0, 1.5)


def test_compare_sweep_small_system():
    results = compare_criteria_sweep(100, np.logspace(-1, 1, 7), 0.0)
    assert all(r.depth_new >= 2 and r.depth_sm >= 2 for r in results)
    assert all(r.moments.n_particles == 100 for r in results)
