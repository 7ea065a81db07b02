"""Budget grids and simplex covers."""

import math

import numpy as np
import pytest

import pipeopt as po
from pipeopt.errors import CapacityError
from pipeopt.netgrid import population_net_size, simplex_grid_size

rng = np.random.default_rng(11)


class TestBudgetGrid:
    def test_exact_division(self):
        g = po.build_budget_grid(1.0, 0.25)
        np.testing.assert_allclose(g.points, [0, 0.25, 0.5, 0.75, 1.0])
        assert g.top == 1.0

    def test_floor(self):
        g = po.build_budget_grid(1.0, 0.3)
        np.testing.assert_allclose(g.points, [0, 0.3, 0.6, 0.9])
        assert g.top == pytest.approx(0.9)

    def test_degenerate(self):
        g = po.build_budget_grid(0.0, 0.5)
        np.testing.assert_allclose(g.points, [0.0])

    def test_binary_rounding_does_not_drop_top(self):
        # 1.0 / 0.1 is 9.999... in floats; the top point must still be 1.0.
        g = po.build_budget_grid(1.0, 0.1)
        assert len(g) == 11
        assert g.top == pytest.approx(1.0, abs=1e-12)

    def test_bad_step(self):
        with pytest.raises(ValueError):
            po.build_budget_grid(1.0, 0.0)


class TestSimplexNet:
    def test_point_simplex(self):
        net = po.build_simplex_net(1, 0.3)
        np.testing.assert_allclose(net.points, [[1.0]])

    def test_dim2_half_radius(self):
        net = po.build_simplex_net(2, 0.5)
        assert net.delta == pytest.approx(0.25)
        np.testing.assert_allclose(
            net.points,
            [[0.0, 1.0], [0.25, 0.75], [0.5, 0.5], [0.75, 0.25], [1.0, 0.0]],
        )

    def test_dim3_spacing(self):
        net = po.build_simplex_net(3, 0.5)
        assert net.delta == pytest.approx(0.125)
        assert len(net) == simplex_grid_size(3, 8)

    def test_every_point_is_a_distribution(self):
        net = po.build_simplex_net(4, 0.6)
        assert np.all(net.points >= 0)
        np.testing.assert_allclose(net.points.sum(axis=1), 1.0, atol=1e-9)

    def test_size_formula(self):
        for d, radius in [(2, 0.4), (3, 0.3), (4, 0.8)]:
            net = po.build_simplex_net(d, radius)
            units = math.ceil(2 * (d - 1) / radius - 1e-9)
            assert len(net) == math.comb(units + d - 1, d - 1)

    def test_cap_refusal(self):
        with pytest.raises(CapacityError):
            po.build_simplex_net(6, 0.01)

    @pytest.mark.parametrize("dim,radius", [(2, 0.5), (3, 0.5), (3, 0.3), (4, 0.7)])
    def test_cover_radius(self, dim, radius):
        net = po.build_simplex_net(dim, radius)
        for _ in range(2000):
            d = rng.dirichlet(np.ones(dim))
            _, dist = po.nearest_net_point(net, d)
            assert dist <= radius + 1e-12


class TestNearest:
    def test_net_point_maps_to_itself(self):
        net = po.build_simplex_net(3, 0.4)
        idx, dist = po.nearest_net_point(net, net.points[7])
        assert idx == 7
        assert dist <= 1e-12

    def test_floor_rounding_rule(self):
        net = po.build_simplex_net(2, 0.5)
        idx, dist = po.nearest_net_point(net, np.array([0.6, 0.4]))
        np.testing.assert_allclose(net.points[idx], [0.5, 0.5])
        assert dist == pytest.approx(0.2, abs=1e-12)

    def test_dimension_mismatch(self):
        net = po.build_simplex_net(2, 0.5)
        with pytest.raises(ValueError):
            po.nearest_net_point(net, np.array([1.0, 0.0, 0.0]))


class TestPopulationNet:
    def test_counts(self):
        net = po.build_simplex_net(2, 1.0)  # 3 points
        assert len(net) == 3
        assert len(list(po.enumerate_population_net(net, 1))) == 3
        tuples = list(po.enumerate_population_net(net, 2))
        assert len(tuples) == 9
        assert tuples == sorted(tuples)  # lexicographic
        assert len(set(tuples)) == 9

    def test_no_duplicates_5_choose_2(self):
        net = po.build_simplex_net(2, 0.5)  # 5 points
        tuples = list(po.enumerate_population_net(net, 2))
        assert len(tuples) == 25
        assert len(set(tuples)) == 25
        assert population_net_size(net, 2) == 25

    def test_cap(self):
        net = po.build_simplex_net(2, 0.1)
        with pytest.raises(CapacityError):
            list(po.enumerate_population_net(net, 6, cap=1000))
