import math

import numpy as np
import pytest

from sobex.distance import distance_field, ridge_set
from sobex.errors import BadNode, InvalidParams, NoConvergence
from sobex.geometry import ScalarField, make_domain, rasterize
from sobex.inflap import (InfProblem, comparison_check, cone, inf_residual, inf_solve,
                          lipschitz_estimate, stencil)

DISK = make_domain("disk", {"R": 1})
DIAMOND = make_domain("diamond", {"s": 1})


@pytest.fixture(scope="module")
def disk41():
    return rasterize(DISK, 41)


@pytest.fixture(scope="module")
def disk_solution(disk41):
    return inf_solve(InfProblem(disk41, disk41.nearest_node((0, 0))))


@pytest.fixture(scope="module")
def diamond41():
    return rasterize(DIAMOND, 41)


@pytest.fixture(scope="module")
def diamond_solution(diamond41):
    return inf_solve(InfProblem(diamond41, diamond41.nearest_node((0, 0))))


def _normalized_distance(spec, grid):
    d = distance_field(spec, grid)
    return ScalarField(grid, d.rho.values / d.sup_norm)


def test_stencil_sizes():
    assert len(stencil(1)[0]) == 8
    assert len(stencil(2)[0]) == 16
    offs, w = stencil(2)
    np.testing.assert_allclose(w, 1 / np.hypot(offs[:, 0], offs[:, 1]))
    with pytest.raises(InvalidParams):
        stencil(0)


def test_cone_examples(disk41):
    g = disk41
    x = g.nearest_node((0, 0))
    c = cone(g, x, 1.0)
    X, Y = g.coords()
    np.testing.assert_allclose(c.values[g.mask], 1 - np.hypot(X, Y)[g.mask], atol=1e-14)
    assert c.values[x] == 1.0
    assert np.all(c.values[~g.mask] == 0)
    assert cone(g, x).values[x] == 1.0
    with pytest.raises(InvalidParams):
        cone(g, x, 0.0)


def test_cone_residual_is_second_order(disk41):
    g = disk41
    x = g.nearest_node((0, 0))
    res = inf_residual(cone(g, x, 1.0), [x])
    assert res.values.max() < 5 * g.h ** 2 / 1.0


def test_disk_solution_properties(disk41, disk_solution):
    g, r = disk41, disk_solution
    x = g.nearest_node((0, 0))
    v = r.field.values
    assert v[x] == 1.0
    assert np.all(v >= 0) and np.all(v <= 1)
    assert np.sum(v > 1 - 1e-9) == 1
    assert np.all(v[g.mask] > 0)
    assert r.final_update < 1e-8
    assert inf_residual(r.field, [x]).values.max() < 10 * 1e-8


def test_disk_solution_is_radial_cone(disk41, disk_solution):
    X, Y = disk41.coords()
    err = np.abs(disk_solution.field.values - np.where(disk41.mask, 1 - np.hypot(X, Y), 0))
    assert err.max() < 0.01


def test_disk_comparisons(disk41, disk_solution):
    x = disk41.nearest_node((0, 0))
    assert comparison_check(disk_solution.field, cone(disk41, x), 1e-3)
    assert comparison_check(disk_solution.field, _normalized_distance(DISK, disk41), 0.01)
    assert comparison_check(disk_solution.field, disk_solution.field, 0.0)


def test_lipschitz_of_disk_solution(disk_solution):
    assert abs(disk_solution.lipschitz_estimate - 1.0) < 0.1


def test_diamond_departs_from_distance_on_axes(diamond41, diamond_solution):
    g = diamond41
    rn = _normalized_distance(DIAMOND, g)
    assert comparison_check(diamond_solution.field, rn, 0.01)
    X, Y = g.coords()
    axis = g.mask & ((np.abs(X) < 1e-12) | (np.abs(Y) < 1e-12))
    gap = (rn.values - diamond_solution.field.values)[axis]
    assert gap.max() > 0.02
    assert comparison_check(diamond_solution.field, cone(g, g.nearest_node((0, 0))), 1e-3)


def test_distance_residual_concentrates_on_ridge(diamond41):
    g = diamond41
    res = inf_residual(_normalized_distance(DIAMOND, g)).values
    ridge = ridge_set(DIAMOND, g).mask(g)
    off = g.mask & ~ridge
    assert res[ridge].mean() > 10 * np.median(res[off])


def test_zero_data_gives_zero(disk41):
    r = inf_solve(InfProblem(disk41, None))
    assert np.all(r.field.values == 0) and r.iterations == 1


def test_round_ellipse_matches_distance():
    # an ellipse with equal axes has a one-point ridge
    d = make_domain("ellipse", {"a": 1, "b": 1})
    g = rasterize(d, 41)
    assert ridge_set(d, g).ridge_nodes == [g.nearest_node((0, 0))]
    r = inf_solve(InfProblem(g, g.nearest_node((0, 0))))
    assert r.field.sup_distance(_normalized_distance(d, g)) < 0.02


def test_elongated_ellipse_departs_from_distance():
    # the ridge of a genuine ellipse is a segment
    d = make_domain("ellipse", {"a": 1, "b": 0.8})
    g = rasterize(d, 41)
    r = inf_solve(InfProblem(g, g.nearest_node((0, 0))))
    assert r.field.sup_distance(_normalized_distance(d, g)) > 0.02


def test_diamond_sup_gap(diamond41, diamond_solution):
    assert diamond_solution.field.sup_distance(_normalized_distance(DIAMOND, diamond41)) > 0.02


def test_errors(disk41):
    with pytest.raises(BadNode):
        InfProblem(disk41, (0, 0))
    prob = InfProblem(disk41, disk41.nearest_node((0.3, 0.0)))
    with pytest.raises(InvalidParams):
        inf_solve(prob, tol=0)
    with pytest.raises(InvalidParams):
        InfProblem(disk41, disk41.nearest_node((0, 0)), stencil_radius=0)
    with pytest.raises(NoConvergence) as exc:
        inf_solve(prob, max_sweeps=2)
    assert exc.value.report.iterations == 2


def test_eight_neighbour_option():
    g = rasterize(DISK, 21)
    x = g.nearest_node((0, 0))
    r = inf_solve(InfProblem(g, x, stencil_radius=1))
    assert r.field.values[x] == 1.0
    assert comparison_check(r.field, cone(g, x), 1e-3)
    assert inf_residual(r.field, [x], stencil_radius=1).values.max() < 1e-7


def test_off_centre_puncture_lipschitz_and_max():
    g = rasterize(DISK, 31)
    x = g.nearest_node((0.4, 0.2))
    r = inf_solve(InfProblem(g, x))
    assert np.sum(r.field.values > 1 - 1e-9) == 1
    assert comparison_check(r.field, cone(g, x), 1e-3)
    assert r.lipschitz_estimate == pytest.approx(lipschitz_estimate(r.field))
    assert r.lipschitz_estimate >= 1.0 / (1.0 - math.hypot(0.4, 0.2)) * 0.9
