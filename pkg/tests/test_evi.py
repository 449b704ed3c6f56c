import numpy as np
import pytest

from hjflow.evi import (
    contraction_violation,
    damped_distance_bound_violation,
    distance_growth_violation,
    energy_identity_residual,
    evi_residual,
    run_evi_suite,
    slope_decay_violation,
)


def test_evi_residual_quadratic_equality(ou):
    res = evi_residual(ou, ou.point([1]), ou.point([0.5]), 0.2, 1e-4)
    assert abs(res) <= 1e-3


def test_evi_residual_stationary(ou):
    crit = ou.rest_point()
    assert evi_residual(ou, crit, crit, 0.7, 1e-4) == 0.0


def test_evi_residual_quartic(quartic, rng):
    for _ in range(20):
        x, rho = quartic.sample(rng), quartic.sample(rng)
        res = evi_residual(quartic, x, rho, float(rng.uniform(0, 2)), 1e-4)
        assert res <= 1e-3


def test_evi_residual_rejects_bad_delta(ou):
    with pytest.raises(ValueError):
        evi_residual(ou, ou.point([1]), ou.point([0]), 0.1, 0.0)


def test_contraction_quadratic_exact(ou):
    v = contraction_violation(ou, ou.point([1]), ou.point([-1]), [0.1, 0.5, 2.0, 5.0])
    assert abs(v) <= 1e-9  # exact equality for the linear drift
    x = ou.point([0.3])
    assert contraction_violation(ou, x, x, [0.5, 1.0]) <= 1e-15


def test_contraction_quartic(quartic, rng):
    for _ in range(10):
        x, y = quartic.sample(rng), quartic.sample(rng)
        assert contraction_violation(quartic, x, y, [0.2, 1.0, 3.0]) <= 1e-6


def test_energy_identity_stationary(ou):
    crit = ou.rest_point()
    traj = ou.flow_trajectory(crit, np.linspace(0, 1, 11))
    assert energy_identity_residual(ou, traj) == 0.0


def test_energy_identity_quadratic(ou):
    traj = ou.flow_trajectory(ou.point([1]), np.linspace(0, 1, 1001))
    # closed forms: E = exp(-2t)/2, I = exp(-2t), integral (1 - e^-2)/2
    assert energy_identity_residual(ou, traj) <= 1e-6


def test_energy_identity_quartic(quartic):
    traj = quartic.flow_trajectory(quartic.point([1.2]), np.linspace(0, 1, 2001))
    assert energy_identity_residual(quartic, traj) <= 1e-4


def test_energy_identity_needs_two_samples(ou):
    traj = ou.flow_trajectory(ou.point([1]), [0.0])
    with pytest.raises(ValueError):
        energy_identity_residual(ou, traj)


def test_slope_decay_quadratic_exact(ou):
    assert abs(slope_decay_violation(ou, ou.point([1]), [0.3, 1.0, 4.0])) <= 1e-9
    crit = ou.rest_point()
    assert slope_decay_violation(ou, crit, [1.0]) == 0.0


def test_slope_decay_quartic(quartic, rng):
    for _ in range(10):
        assert slope_decay_violation(quartic, quartic.sample(rng), [0.5, 2.0]) <= 1e-6


def test_distance_growth_trivial(ou):
    crit = ou.rest_point()
    assert distance_growth_violation(ou, crit, crit, [0.5, 1.0]) == 0.0


def test_distance_growth_quadratic(ou):
    v = distance_growth_violation(ou, ou.point([0]), ou.point([1]),
                                  np.linspace(0.1, 5.0, 25))
    assert v <= 1e-6


def test_distance_growth_quartic(quartic, rng):
    for _ in range(10):
        pi, mu = quartic.sample(rng), quartic.sample(rng)
        assert distance_growth_violation(quartic, pi, mu, np.linspace(0.1, 4, 20)) <= 1e-4


def test_distance_growth_negative_kappa(double_well, rng):
    for _ in range(10):
        pi, mu = double_well.sample(rng), double_well.sample(rng)
        assert distance_growth_violation(double_well, pi, mu,
                                         np.linspace(0.1, 4, 20)) <= 1e-4


def test_damped_distance_bound(ou, double_well, rng):
    for space in (ou, double_well):
        for _ in range(10):
            pi, mu = space.sample(rng), space.sample(rng)
            v = damped_distance_bound_violation(space, pi, mu, np.linspace(0.1, 3, 15))
            assert v <= 1e-6


def test_suite_all_pass(ou, quartic, double_well, rng):
    for space in (ou, quartic, double_well):
        rep = run_evi_suite(space, rng, instances=15)
        assert all(r[5] for r in rep.rows), [r for r in rep.rows if not r[5]][:3]
        assert rep.max_residual <= 10 * 1e-4


def test_suite_on_quantile_space(quantile_ou, rng):
    rep = run_evi_suite(quantile_ou, rng, instances=10)
    assert all(r[5] for r in rep.rows)
