import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schrodinger_interp.fixtures import bimodal_density, bimodal_pair, gaussian_mass
from schrodinger_interp.grid import (
    Grid, MassVector, bridge_domain, discretize, embed, l1_distance, normalize, restrict_support,
    support_box,
)


def test_cell_centers():
    g = Grid.line(0.0, 1.0, 5)
    np.testing.assert_allclose(g.axis_points(0), [0.1, 0.3, 0.5, 0.7, 0.9])
    assert g.cell_volume == pytest.approx(0.2)


def test_square_grid_layout():
    g = Grid.square(0.0, 1.0, 4)
    assert g.shape == (4, 4) and g.size == 16
    # row-major: the column (x) coordinate varies fastest
    np.testing.assert_allclose(g.points[1], [0.125, 0.375])
    assert g.cell_volume == pytest.approx(1 / 16)


@pytest.mark.parametrize("args", [((0.0,), (1.0,), (1,)), ((1.0,), (0.0,), (5,)), ((0, 0, 0), (1, 1, 1), (2, 2, 2))])
def test_grid_rejects_bad_shapes(args):
    with pytest.raises(ValueError):
        Grid(*args)


def test_constant_density_masses():
    g = Grid.line(0.0, 1.0, 5)
    m = discretize(np.ones(5), g)
    np.testing.assert_allclose(m.mass, [0.2] * 5, rtol=1e-15)


def test_single_sample():
    g = Grid.line(0.0, 1.0, 10)
    v = np.zeros(10)
    v[3] = 7.0
    m = discretize(v, g)
    assert m.total == pytest.approx(7.0 * g.cell_volume)
    assert np.count_nonzero(m.mass) == 1


def test_discretize_rejects_negative_sample_with_index():
    g = Grid.line(0.0, 1.0, 4)
    with pytest.raises(ValueError, match="2"):
        discretize([1.0, 1.0, -0.5, 1.0], g)


def test_discretize_rejects_all_zero():
    with pytest.raises(ValueError):
        discretize(np.zeros(4), Grid.line(0.0, 1.0, 4))


def test_mass_vector_is_read_only():
    m = discretize(np.ones(4), Grid.line(0.0, 1.0, 4))
    with pytest.raises(ValueError):
        m.mass[0] = 3.0


def test_bimodal_sample_value(oracle):
    assert bimodal_density(1 / 3) == pytest.approx(oracle["bimodal_at_third"], rel=1e-14)


def test_bimodal_raw_total(oracle):
    g = Grid.line(0.0, 1.0, 1000)
    raw = discretize(bimodal_density(g.axis_points(0)), g)
    assert raw.total == pytest.approx(oracle["bimodal_total"], rel=1e-4)
    half = normalize(raw)
    np.testing.assert_allclose(half.mass, raw.mass / raw.total, rtol=1e-14)


def test_normalize_basic():
    g = Grid.line(0.0, 1.0, 2)
    np.testing.assert_allclose(normalize(MassVector(g, np.array([2.0, 2.0]))).mass, [0.5, 0.5])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1e6), min_size=2, max_size=40).filter(lambda v: sum(v) > 1e-6))
def test_normalize_is_idempotent(values):
    g = Grid.line(0.0, 1.0, len(values))
    once = normalize(MassVector(g, np.array(values)))
    assert abs(once.total - 1.0) < 1e-14
    twice = normalize(once)
    np.testing.assert_allclose(twice.mass, once.mass, rtol=0, atol=1e-15)


def test_support_box_delta_zero_encloses_positive_cells():
    g = Grid.line(0.0, 1.0, 10)
    v = np.zeros(10)
    v[[2, 3, 7]] = 1.0
    assert support_box(MassVector(g, v), 0.0) == ((2,), (8,))


def test_point_mass_restricts_to_two_cells():
    g = Grid.line(0.0, 1.0, 10)
    v = np.zeros(10)
    v[4] = 1.0
    for delta in (0.0, 0.3):
        sub, m = restrict_support(MassVector(g, v), delta)
        assert sub.shape == (2,)
        assert m.total == pytest.approx(1.0)


def test_gaussian_support_box(oracle):
    g = Grid.line(-5.0, 5.0, 1000)
    m = gaussian_mass(g, 0.0, 1.0)
    (i0,), (i1,) = support_box(m, 0.05)
    assert m.mass[i0:i1].sum() >= 0.95
    half = oracle["normal_central_95_halfwidth"]
    x = g.axis_points(0)
    assert abs(x[i0] + half) < 2 * g.spacing[0]
    assert abs(x[i1 - 1] - half) < 2 * g.spacing[0]


def test_support_box_2d_is_smallest():
    g = Grid.square(0.0, 1.0, 6)
    img = np.zeros((6, 6))
    img[1, 1] = 0.49
    img[4, 4] = 0.49
    img[1, 4] = 0.02
    m = MassVector(g, img.ravel())
    start, stop = support_box(m, 0.03)
    assert start == (1, 1) and stop == (5, 5)
    start, stop = support_box(m, 0.6)
    assert start == (1, 1)
    assert (stop[0] - start[0]) * (stop[1] - start[1]) == 1


def test_bridge_domain_pads_past_input():
    rho0, rho1 = bimodal_pair(100)
    grid, a, b = bridge_domain(rho0, rho1, 1e-4, 0.3)
    assert grid.lower[0] < 0 and grid.upper[0] > 1
    assert a.total == pytest.approx(1.0) and b.total == pytest.approx(1.0)
    back = embed(rho0, grid)
    assert l1_distance(back, a) < 1e-3


def test_bridge_domain_clip_stays_in_frame():
    g = Grid.square(0.0, 1.0, 8)
    rng = np.random.default_rng(0)
    m = normalize(MassVector(g, rng.random(64)))
    grid, _, _ = bridge_domain(m, m, 0.0, 0.5, clip=True)
    assert grid.same_as(g)


def test_l1_distance_examples():
    g = Grid.line(0.0, 1.0, 2)
    a = MassVector(g, np.array([1.0, 0.0]))
    b = MassVector(g, np.array([0.0, 1.0]))
    assert l1_distance(a, a) == 0.0
    assert l1_distance(a, b) == 2.0
    with pytest.raises(ValueError):
        l1_distance(a, MassVector(Grid.line(0.0, 2.0, 2), np.array([1.0, 1.0])))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_l1_of_normalized_vectors_is_bounded(n, seed):
    rng = np.random.default_rng(seed)
    g = Grid.line(0.0, 1.0, n)
    a = normalize(MassVector(g, rng.random(n) + 1e-3))
    b = normalize(MassVector(g, rng.random(n) + 1e-3))
    assert 0.0 <= l1_distance(a, b) <= 2.0 + 1e-15


def test_embed_requires_alignment():
    g = Grid.line(0.0, 1.0, 10)
    m = normalize(MassVector(g, np.ones(10)))
    with pytest.raises(ValueError):
        embed(m, Grid.line(0.05, 2.05, 20))
    big = embed(m, g.sub_grid((-3,), (12,)))
    assert big.grid.shape == (15,)
    assert math.isclose(big.total, 1.0)
