"""Chaining machinery: moment distances, coverings, and the entropy functional."""

import math
import warnings

import numpy as np
import pytest

from lilbound import (
    AnalyticCovering,
    ChainedEnvelope,
    EmpiricalCovering,
    GridMeasureSpace,
    IndexedField,
    covering_from_json,
    covering_to_json,
    distance_r,
    distance_r_matrix,
    field_W,
    holder_example_envelope,
    moment_distance_rho,
    nu_envelope,
    nu_p,
    nu_p_detail,
    sigma_bar,
    sigma_hat,
    rosenthal_upper,
)


def _random_field(rng, nx=3, nt=4, amplitude=0.3) -> IndexedField:
    # Two-outcome Omega with q vs 1-q; the second value is chosen so every
    # slice is exactly centered.
    q = 0.4
    xw = rng.uniform(0.2, 1.0, nx)
    xw = xw / xw.sum()
    v1 = rng.uniform(-1.0, 1.0, (nx, nt)) * amplitude
    vals = np.stack([v1, -v1 * q / (1.0 - q)], axis=-1)
    return IndexedField(GridMeasureSpace(xw), np.array([q, 1.0 - q]), vals)


def test_field_requires_centered_slices():
    x = GridMeasureSpace(np.array([1.0]))
    with pytest.raises(ValueError):
        IndexedField(x, np.array([0.5, 0.5]), np.ones((1, 1, 2)))


def test_field_requires_probability_weights():
    x = GridMeasureSpace(np.array([1.0]))
    vals = np.array([[[1.0, -1.0]]])
    with pytest.raises(ValueError):
        IndexedField(x, np.array([0.7, 0.7]), vals)


def test_moment_distance_vanishes_on_diagonal_and_is_symmetric():
    rng = np.random.default_rng(20260840)
    field = _random_field(rng)
    for v in (1.0, 2.0, 3.5):
        assert np.all(moment_distance_rho(field, 2, 2, v) == 0.0)
        d01 = moment_distance_rho(field, 0, 1, v)
        d10 = moment_distance_rho(field, 1, 0, v)
        assert np.allclose(d01, d10)
        assert np.all(d01 >= 0.0)


def test_moment_distance_triangle_inequality():
    rng = np.random.default_rng(20260841)
    field = _random_field(rng, nt=5)
    for v in (1.0, 2.0, 4.0):
        for t, s, m in ((0, 1, 2), (1, 3, 4), (0, 4, 2)):
            lhs = moment_distance_rho(field, t, s, v)
            rhs = moment_distance_rho(field, t, m, v) + moment_distance_rho(field, m, s, v)
            assert np.all(lhs <= rhs + 1e-12)


def test_field_W_is_sup_of_moment_roots():
    rng = np.random.default_rng(20260842)
    field = _random_field(rng)
    gamma = 3.0
    w = field_W(field, gamma)
    direct = (np.abs(field.values) ** gamma @ field.omega_weights) ** (1.0 / gamma)
    assert np.allclose(w, direct.max(axis=1))


def test_distance_matrix_matches_pairwise_entries():
    rng = np.random.default_rng(20260843)
    field = _random_field(rng, nt=4)
    mat = distance_r_matrix(field, 2.0, 1.5)
    assert np.allclose(mat, mat.T)
    assert np.all(np.diagonal(mat) == 0.0)
    for t in range(4):
        for s in range(4):
            if t != s:
                assert mat[t, s] == pytest.approx(distance_r(field, t, s, 2.0, 1.5), rel=1e-12)


def test_empirical_covering_counts_greedy_centers():
    # Three distinct points on a line at 0, 1, 10 (counting metric).
    dist = np.array([[0.0, 1.0, 10.0], [1.0, 0.0, 9.0], [10.0, 9.0, 0.0]])
    cov = EmpiricalCovering.from_distance_matrix(dist)
    assert cov.n_sat == 3.0
    assert cov.n(11.0) == 1.0
    assert cov.n(5.0) == 2.0
    assert cov.n(0.5) == 3.0


def test_empirical_covering_collapses_duplicates():
    dist = np.zeros((4, 4))
    cov = EmpiricalCovering.from_distance_matrix(dist)
    assert cov.n_sat == 1.0
    assert cov.n(1e-30) == 1.0


def test_analytic_covering_power_law():
    cov = AnalyticCovering(D=2.0, dim=3, l=0.5, C_cov=1.0)
    eps = 0.7
    expected = max(1.0, 2.0 / eps**2.0) ** 3
    assert cov.n(eps) == pytest.approx(expected, rel=1e-12)
    assert cov.n(cov.eps_one * 1.01) == 1.0
    assert AnalyticCovering(D=0.0, dim=2).n(1e-9) == 1.0


def test_covering_json_round_trip():
    analytic = AnalyticCovering(D=1.5, dim=2, l=0.8, C_cov=2.0)
    back = covering_from_json(covering_to_json(analytic))
    assert back == analytic
    empirical = EmpiricalCovering(np.array([3.0, 1.0, 0.5]))
    back = covering_from_json(covering_to_json(empirical))
    assert np.array_equal(back.thresholds, empirical.thresholds)
    with pytest.raises(ValueError):
        covering_from_json({"kind": "exotic"})


def test_single_point_parameter_set_has_geometric_series_value():
    # One t: the covering is a single ball at every radius, so the inner sum
    # is exactly 1 / (1 - theta) at every theta.
    rng = np.random.default_rng(20260844)
    field = _random_field(rng, nt=1)
    p, Z = 2.0, 1.5
    detail = nu_p_detail(field, p, Z)
    expected_sums = 1.0 / (1.0 - detail.thetas)
    assert np.allclose(detail.inner_sums, expected_sums, rtol=1e-12)
    sig = sigma_hat(field, p, Z)
    expected_value = (sig * expected_sums.min()) ** (1.0 / p)
    assert detail.value == pytest.approx(expected_value, rel=1e-12)


def test_sigma_bar_closed_form():
    rng = np.random.default_rng(20260845)
    field = _random_field(rng)
    p, Z = 2.0, 2.0
    moments = np.abs(field.values) ** (p * Z) @ field.omega_weights
    expected = ((moments ** (1.0 / Z)).T @ field.x_space.weights).max()
    assert sigma_bar(field, p, Z) == pytest.approx(expected, rel=1e-12)
    assert sigma_hat(field, p, Z) == pytest.approx(
        rosenthal_upper(p * Z) ** p * expected, rel=1e-12
    )


def test_nu_accepts_scalar_sigma_with_covering():
    cov = AnalyticCovering(D=1.0, dim=1)
    value = nu_p(0.25, 2.0, 2.0, covering=cov)
    assert 0.0 < value < math.inf
    with pytest.raises(ValueError):
        nu_p(0.25, 2.0, 2.0)  # covering required for a scalar source


def test_nu_rescales_theta_grid_when_sigma_hat_large(recwarn):
    rng = np.random.default_rng(20260846)
    field = _random_field(rng, amplitude=0.9)
    p, Z = 2.0, 3.0
    assert sigma_hat(field, p, Z) >= 1.0
    with pytest.warns(UserWarning, match="rescaled"):
        detail = nu_p_detail(field, p, Z)
    assert detail.rescaled
    assert np.all(detail.thetas * detail.sigma_hat < 1.0)
    assert math.isfinite(detail.value)


def test_nu_explicit_theta_grid_used_verbatim():
    rng = np.random.default_rng(20260847)
    field = _random_field(rng, nt=1)
    detail = nu_p_detail(field, 2.0, 1.5, theta_grid=(0.1, 0.2))
    assert detail.thetas.tolist() == [0.1, 0.2]
    assert detail.best_theta == 0.1  # smaller theta wins the geometric series
    with pytest.raises(ValueError):
        nu_p_detail(field, 2.0, 1.5, theta_grid=(0.0, 0.5))


def test_nu_closed_form_across_Z_for_degenerate_parameter_set():
    # With one t the optimizer always picks the smallest theta in the grid.
    rng = np.random.default_rng(20260848)
    field = _random_field(rng, nt=1)
    for Z in (1.0, 1.5, 2.0, 3.0):
        sig = sigma_hat(field, 2.0, Z)
        expected = (sig / (1.0 - 0.05)) ** 0.5
        assert nu_p(field, 2.0, Z) == pytest.approx(expected, rel=1e-12)


def test_nu_validation():
    rng = np.random.default_rng(20260849)
    field = _random_field(rng)
    with pytest.raises(ValueError):
        nu_p(field, 1.5, 2.0)  # p below 2
    with pytest.raises(ValueError):
        nu_p(field, 2.0, 0.5)  # Z below 1


def test_chained_envelope_bundles_field_quantities():
    rng = np.random.default_rng(20260850)
    field = _random_field(rng)
    chained = ChainedEnvelope(field, 2.0)
    Z = 1.5
    assert chained.sigma_bar(Z) == pytest.approx(sigma_bar(field, 2.0, Z))
    assert chained.sigma_hat(Z) == pytest.approx(sigma_hat(field, 2.0, Z))
    mat = chained.r_hat_matrix(Z)
    assert mat.shape == (field.n_t, field.n_t)
    assert chained.nu(Z) == pytest.approx(nu_p(field, 2.0, Z), rel=1e-12)
    cov = chained.covering(Z)
    assert cov.n_sat <= field.n_t


def test_nu_envelope_is_a_moment_envelope():
    rng = np.random.default_rng(20260851)
    field = _random_field(rng)
    Z_grid = np.linspace(1.0, 3.0, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        env = nu_envelope(field, 2.0, Z_grid)
    assert env.domain_low == 2.0
    assert env.L_grid.tolist() == (2.0 * Z_grid).tolist()
    assert np.all(env.g_values > 0.0)


def test_nu_envelope_validation():
    rng = np.random.default_rng(20260852)
    field = _random_field(rng)
    with pytest.raises(ValueError):
        nu_envelope(field, 2.0, [2.0])  # needs at least two grid points
    with pytest.raises(ValueError):
        nu_envelope(field, 2.0, [0.5, 2.0])  # Z below 1


def test_holder_example_envelope_shape():
    # dim = 1, l = 1/2 requires Z > 2 dim / l = 4.  sigma_hat exceeds 1 on
    # this grid, so the theta rescaling warning is expected.
    with pytest.warns(UserWarning, match="rescaled"):
        env = holder_example_envelope(
            C_rho=0.5, l=0.5, b=1.0, p=2.0, dim=1, D=1.0, Z_grid=np.linspace(4.5, 8.0, 8)
        )
    assert env.domain_low == 9.0  # p * Z_grid[0]
    assert np.all(np.isfinite(env.g_values))
    assert np.all(env.g_values > 0.0)


def test_holder_example_envelope_rejects_small_Z():
    with pytest.raises(ValueError):
        holder_example_envelope(
            C_rho=0.5, l=0.5, b=1.0, p=2.0, dim=1, D=1.0, Z_grid=np.linspace(1.0, 4.0, 7)
        )
