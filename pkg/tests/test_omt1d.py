import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schrodinger_interp.fixtures import bimodal_cdf, bimodal_pair, gaussian_mass
from schrodinger_interp.grid import Grid, MassVector, discretize, normalize
from schrodinger_interp.omt1d import (
    cdf, cdf_at, displacement_marginal, optimal_map, push_forward, quantile, wasserstein2,
)


def box(grid, lo, hi):
    x = grid.axis_points(0)
    return normalize(discretize(((x > lo) & (x < hi)).astype(float), grid))


def test_uniform_cdf():
    g = Grid.line(0.0, 1.0, 4)
    np.testing.assert_allclose(cdf(normalize(MassVector(g, np.ones(4)))), [0.25, 0.5, 0.75, 1.0])


def test_point_mass_cdf_is_a_step():
    g = Grid.line(0.0, 1.0, 6)
    v = np.zeros(6)
    v[2] = 1.0
    np.testing.assert_array_equal(cdf(MassVector(g, v)), [0, 0, 1, 1, 1, 1])


def test_bimodal_cdf_at_two_thirds(oracle):
    r0, _ = bimodal_pair(1200)
    assert cdf_at(r0, 2 / 3) == pytest.approx(oracle["bimodal_cdf_two_thirds_normalized"], rel=1e-5)
    # the analytic antiderivative used by the scripts agrees too
    assert bimodal_cdf(2 / 3) / bimodal_cdf(1.0) == pytest.approx(oracle["bimodal_cdf_two_thirds_normalized"], rel=1e-12)


def test_quantile_inverts_cdf():
    r0, _ = bimodal_pair(300)
    u = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(cdf_at(r0, quantile(r0, u)), u, atol=1e-12)


def test_identity_map():
    r0, _ = bimodal_pair(200)
    T = optimal_map(r0, r0)
    assert np.max(np.abs(T.map_values - r0.grid.axis_points(0))) <= r0.grid.spacing[0]


def test_uniform_shift():
    g = Grid.line(0.0, 4.0, 400)
    a, b = box(g, 0.0, 1.0), box(g, 2.0, 3.0)
    T = optimal_map(a, b)
    x = g.axis_points(0)
    inside = a.mass > 0
    assert np.max(np.abs(T.map_values[inside] - (x[inside] + 2.0))) <= g.spacing[0]


def test_gaussian_translation_is_a_constant_shift():
    g = Grid.line(-4.0, 6.0, 1000)
    a, b = gaussian_mass(g, 0.0, 0.7), gaussian_mass(g, 1.3, 0.7)
    T = optimal_map(a, b)
    F = cdf(a)
    bulk = (F > 1e-6) & (F < 1 - 1e-6)
    shift = T.map_values[bulk] - g.axis_points(0)[bulk]
    assert np.ptp(shift) <= g.spacing[0]
    assert np.mean(shift) == pytest.approx(1.3, abs=g.spacing[0])


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 60), st.integers(0, 2**32 - 1))
def test_map_is_monotone(n, seed):
    rng = np.random.default_rng(seed)
    g = Grid.line(0.0, 1.0, n)
    a = rng.random(n) * (rng.random(n) > 0.2)
    b = rng.random(n) * (rng.random(n) > 0.2)
    a[0] += 0.1
    b[-1] += 0.1
    T = optimal_map(normalize(MassVector(g, a)), normalize(MassVector(g, b)))
    assert np.all(np.diff(T.map_values) >= 0)
    assert np.all(np.diff(T.boundary_values) >= 0)
    assert np.all(np.diff(T(np.linspace(0, 1, 97))) >= 0)


def test_push_forward_converges_at_least_linearly():
    errs = []
    for n in (500, 1000):
        r0, r1 = bimodal_pair(n)
        errs.append(np.abs(push_forward(optimal_map(r0, r1), r0).mass - r1.mass).sum())
    assert errs[0] / errs[1] >= 2.0


def test_push_forward_of_shift():
    g = Grid.line(-4.0, 6.0, 1000)
    a, b = gaussian_mass(g, 0.0, 0.7), gaussian_mass(g, 1.3, 0.7)
    assert np.abs(push_forward(optimal_map(a, b), a).mass - b.mass).sum() < 1e-3


def test_displacement_endpoints():
    r0, r1 = bimodal_pair(400)
    assert np.abs(displacement_marginal(r0, r1, 0.0).mass - r0.mass).sum() < 1e-6
    assert np.abs(displacement_marginal(r0, r1, 1.0).mass - r1.mass).sum() < 1e-6


def test_displacement_endpoints_with_interior_gap():
    g = Grid.line(0.0, 4.0, 400)
    x = g.axis_points(0)
    a = normalize(discretize((((x > 0) & (x < 1)) | ((x > 2) & (x < 3))).astype(float), g))
    b = box(g, 1.5, 3.5)
    assert np.abs(displacement_marginal(a, b, 0.0).mass - a.mass).sum() < 1e-12


def test_displacement_of_gaussians():
    g = Grid.line(-4.0, 6.0, 1000)
    a, b = gaussian_mass(g, 0.0, 0.7), gaussian_mass(g, 1.3, 0.7)
    for t in (0.25, 0.5, 0.75):
        ref = gaussian_mass(g, 1.3 * t, 0.7)
        assert np.abs(displacement_marginal(a, b, t).mass - ref.mass).sum() < 2e-2


def test_identical_marginals_interpolate_to_themselves():
    r0, _ = bimodal_pair(200)
    for t in (0.2, 0.5, 0.9):
        assert np.abs(displacement_marginal(r0, r0, t).mass - r0.mass).sum() < 1e-12


def test_wasserstein2():
    g = Grid.line(0.0, 4.0, 400)
    assert wasserstein2(box(g, 0, 1), box(g, 2, 3)) == pytest.approx(2.0, rel=1e-12)
    h = Grid.line(-4.0, 6.0, 1000)
    a, b = gaussian_mass(h, 0.0, 0.7), gaussian_mass(h, 1.3, 0.7)
    assert wasserstein2(a, b) == pytest.approx(1.3, rel=1e-6)
    assert wasserstein2(a, a) == 0.0


def test_wasserstein2_along_the_geodesic():
    r0, r1 = bimodal_pair(400)
    total = wasserstein2(r0, r1)
    mid = displacement_marginal(r0, r1, 0.5)
    assert wasserstein2(r0, mid) == pytest.approx(total / 2, rel=1e-2)


def test_degenerate_target():
    g = Grid.line(0.0, 1.0, 10)
    v = np.zeros(10)
    v[6] = 1.0
    T = optimal_map(normalize(MassVector(g, np.ones(10))), MassVector(g, v))
    assert T.degenerate
    assert np.ptp(T.map_values) <= g.spacing[0]


def test_rejects_2d():
    g = Grid.square(0.0, 1.0, 3)
    m = normalize(MassVector(g, np.ones(9)))
    with pytest.raises(ValueError):
        optimal_map(m, m)
    r0, r1 = bimodal_pair(10)
    with pytest.raises(ValueError):
        displacement_marginal(r0, r1, 1.2)
