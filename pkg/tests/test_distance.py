import math

import numpy as np
import pytest

from sobex.distance import (DistanceResult, distance_field, eikonal_residual, exact_distance,
                            ridge_set)
from sobex.errors import InvalidParams
from sobex.geometry import ScalarField, make_domain, rasterize

DISK = make_domain("disk", {"R": 1})
SQUARE = make_domain("rectangle", {"w": 1, "h": 1})
DIAMOND = make_domain("diamond", {"s": 1})
ANNULUS = make_domain("annulus", {"a": 1, "b": 2})


def test_disk_distance():
    g = rasterize(DISK, 41)
    res = distance_field(DISK, g)
    assert res.used_exact_formula
    assert res.sup_norm == pytest.approx(1.0, abs=1e-14)
    assert res.rho.values[g.nearest_node((0, 0))] == pytest.approx(1.0, abs=1e-14)
    assert res.maxima == [pytest.approx((0.0, 0.0), abs=1e-14)]


def test_annulus_distance():
    g = rasterize(ANNULUS, 41)
    res = distance_field(ANNULUS, g)
    assert res.sup_norm == pytest.approx(0.5, abs=1e-12)
    for x, y in res.maxima:
        assert abs(math.hypot(x, y) - 1.5) <= g.h


def test_square_distance():
    g = rasterize(SQUARE, 41)
    res = distance_field(SQUARE, g)
    assert res.sup_norm == pytest.approx(0.5, abs=1e-12)
    assert res.maxima == [pytest.approx((0.5, 0.5), abs=1e-12)]


def test_distance_invariants():
    for d in (DISK, SQUARE, DIAMOND, ANNULUS, make_domain("ellipse", {"a": 1, "b": 0.5})):
        g = rasterize(d, 41)
        res = distance_field(d, g)
        v = res.rho.values
        assert np.all(v >= 0) and np.all(v[~g.mask] == 0)
        assert res.sup_norm == v[g.mask].max()


@pytest.mark.parametrize("d", [DISK, SQUARE, DIAMOND, ANNULUS])
def test_fast_marching_close_to_exact(d):
    g = rasterize(d, 41)
    ex = distance_field(d, g, "exact")
    fm = distance_field(d, g, "fmm")
    assert not fm.used_exact_formula
    assert abs(ex.sup_norm - fm.sup_norm) <= 2 * g.h


@pytest.mark.parametrize("d,method", [
    (DISK, "exact"), (DISK, "fmm"), (DIAMOND, "exact"), (DIAMOND, "fmm"),
    (make_domain("ellipse", {"a": 1, "b": 0.6}), "fmm"),
    (make_domain("polygon", {"vertices": [[0, 0], [1, 0], [0.3, 0.9]]}), "fmm"),
])
def test_one_lipschitz_on_grid_graph(d, method):
    g = rasterize(d, 41)
    v = distance_field(d, g, method).rho.values
    h = g.h
    assert np.abs(np.diff(v, axis=0)).max() <= h + 2 * h
    assert np.abs(np.diff(v, axis=1)).max() <= h + 2 * h
    assert np.abs(v[1:, 1:] - v[:-1, :-1]).max() <= math.sqrt(2) * h + 2 * h


def test_ellipse_fast_marching_against_dense_boundary():
    # oracle: brute-force distance to a densely sampled boundary
    d = make_domain("ellipse", {"a": 1, "b": 0.6})
    g = rasterize(d, 41)
    fm = distance_field(d, g)
    t = np.linspace(0, 2 * np.pi, 20000, endpoint=False)
    bx, by = np.cos(t), 0.6 * np.sin(t)
    X, Y = g.coords()
    m = g.mask
    ref = np.min(np.hypot(X[m][:, None] - bx, Y[m][:, None] - by), axis=1)
    assert np.max(np.abs(fm.rho.values[m] - ref)) < 4 * g.h


def test_eikonal_residual_exact_disk():
    g = rasterize(DISK, 41)
    res = distance_field(DISK, g)
    r = eikonal_residual(res).values
    keep = g.mask & ~g.boundary_band
    keep[g.nearest_node((0, 0))] = False  # the ridge
    assert r[keep].max() < 10 * g.h


def test_eikonal_residual_diamond_off_axes():
    g = rasterize(DIAMOND, 41)
    res = distance_field(DIAMOND, g)
    r = eikonal_residual(res).values
    X, Y = g.coords()
    keep = g.mask & ~g.boundary_band & (np.abs(X) > 0.5 * g.h) & (np.abs(Y) > 0.5 * g.h)
    assert r[keep].max() < 10 * g.h


def test_eikonal_residual_of_zero_field():
    g = rasterize(DISK, 21)
    res = DistanceResult(g.zeros(), 0.0, [], True)
    np.testing.assert_array_equal(eikonal_residual(res).values, 1.0)


def test_ridge_disk_is_centre():
    g = rasterize(DISK, 41)
    assert ridge_set(DISK, g).ridge_nodes == [g.nearest_node((0, 0))]


def test_ridge_diamond_is_axes():
    g = rasterize(DIAMOND, 41)
    rs = ridge_set(DIAMOND, g)
    rho = distance_field(DIAMOND, g).rho.values
    for node in rs.ridge_nodes:
        x, y = g.node_xy(node)
        assert min(abs(x), abs(y)) <= g.h + 1e-12
    X, Y = g.coords()
    on_axis = g.mask & ((np.abs(X) < 1e-12) | (np.abs(Y) < 1e-12)) & (rho > 4 * g.h)
    assert on_axis.sum() > 0
    assert np.all(rs.mask(g)[on_axis])


def test_ridge_annulus_is_midcircle():
    g = rasterize(ANNULUS, 41)
    rs = ridge_set(ANNULUS, g)
    assert len(rs.ridge_nodes) > 0
    for node in rs.ridge_nodes:
        assert abs(math.hypot(*g.node_xy(node)) - 1.5) <= g.h + 1e-12


def test_ridge_witness_invariants():
    g = rasterize(DIAMOND, 41)
    eps, sep = 2 * g.h, 5 * g.h
    rs = ridge_set(DIAMOND, g, eps, sep)
    rho = distance_field(DIAMOND, g).rho.values
    for node, (y1, y2) in rs.witnesses.items():
        x = np.array(g.node_xy(node))
        for y in (y1, y2):
            assert abs(np.hypot(*(x - y)) - rho[node]) < eps
        assert np.hypot(*(np.array(y1) - np.array(y2))) > sep


def test_maxima_in_ridge():
    for d in (DISK, SQUARE, DIAMOND):
        g = rasterize(d, 41)
        rs = ridge_set(d, g)
        res = distance_field(d, g)
        assert set(res.maxima_nodes) <= set(rs.ridge_nodes)


def test_ridge_parameter_validation():
    g = rasterize(DISK, 21)
    with pytest.raises(InvalidParams):
        ridge_set(DISK, g, eps_near=g.h)
    with pytest.raises(InvalidParams):
        ridge_set(DISK, g, delta_sep=4 * g.h)


def test_exact_distance_diamond_formula():
    assert exact_distance(DIAMOND, np.array(0.0), np.array(0.0)) == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(InvalidParams):
        exact_distance(make_domain("ellipse", {"a": 1, "b": 1}), 0.0, 0.0)
