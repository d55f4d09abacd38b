import math

import numpy as np
import pytest

from sobex.errors import InvalidParams, ResolutionTooCoarse
from sobex.geometry import DomainSpec, ScalarField, inside, make_domain, rasterize


def test_make_domain_disk_and_annulus():
    d = make_domain("disk", {"R": 1})
    assert d.kind == "disk" and d.params["R"] == 1.0
    a = make_domain("annulus", {"a": 1, "b": 2})
    assert (a.params["a"], a.params["b"]) == (1.0, 2.0)


@pytest.mark.parametrize("kind,params,fld", [
    ("annulus", {"a": 2, "b": 1}, "a"),
    ("disk", {"R": -1}, "R"),
    ("disk", {}, "R"),
    ("rectangle", {"w": 1, "h": 0}, "h"),
    ("diamond", {"s": 0}, "s"),
    ("ellipse", {"a": 1, "b": -2}, "b"),
    ("polygon", {"vertices": [[0, 0], [0, 1], [1, 0]]}, "vertices"),  # clockwise
    ("polygon", {"vertices": [[0, 0], [1, 1], [1, 0], [0, 1]]}, "vertices"),  # bow tie
    ("hexagon", {}, "kind"),
])
def test_make_domain_rejects(kind, params, fld):
    with pytest.raises(InvalidParams) as exc:
        make_domain(kind, params)
    assert exc.value.field == fld


def test_domain_json_roundtrip():
    for d in (make_domain("disk", {"R": 0.7, "center": (0.1, -0.2)}),
              make_domain("polygon", {"vertices": [[0, 0], [2, 0], [1, 1.5]]}),
              make_domain("rectangle", {"w": 2, "h": 1, "x0": -1})):
        back = DomainSpec.from_json(d.to_json())
        assert back.kind == d.kind and back.to_json() == d.to_json()


def test_inside_examples():
    disk = make_domain("disk", {"R": 1})
    assert inside(disk, (0.0, 0.0))
    assert not inside(disk, (1.0, 0.0))
    assert not inside(make_domain("diamond", {"s": 1}), (0.5, 0.6))
    tri = make_domain("polygon", {"vertices": [[0, 0], [1, 0], [0, 1]]})
    assert inside(tri, (0.2, 0.2)) and not inside(tri, (0.5, 0.0))


@pytest.mark.parametrize("kind,params,area", [
    ("disk", {"R": 1}, math.pi),
    ("rectangle", {"w": 1, "h": 1}, 1.0),
])
def test_rasterized_area_within_2pct(kind, params, area):
    g = rasterize(make_domain(kind, params), 80)
    assert abs(g.area - area) / area < 0.02


def test_area_error_decreases_under_refinement():
    for kind, params in [("disk", {"R": 1}), ("annulus", {"a": 0.5, "b": 1}),
                         ("diamond", {"s": 1}), ("ellipse", {"a": 1, "b": 0.6})]:
        d = make_domain(kind, params)
        errs = [abs(rasterize(d, n).area - d.area()) for n in (21, 41, 81)]
        assert errs[2] < errs[0]


def test_grid_invariants():
    for kind, params in [("disk", {"R": 1}), ("diamond", {"s": 1}),
                         ("polygon", {"vertices": [[0, 0], [1, 0], [0.5, 0.8]]})]:
        d = make_domain(kind, params)
        g = rasterize(d, 33)
        assert g.nx % 2 == 1 and g.ny % 2 == 1
        X, Y = g.coords()
        assert np.all(inside(d, (X[g.mask], Y[g.mask])))
        assert not np.any(inside(d, (X[~g.mask], Y[~g.mask])))


def test_symmetric_domain_has_centre_node():
    g = rasterize(make_domain("disk", {"R": 1}), 41)
    node = g.nearest_node((0.0, 0.0))
    assert g.node_xy(node) == pytest.approx((0.0, 0.0), abs=1e-14)


def test_too_coarse():
    with pytest.raises(ResolutionTooCoarse):
        rasterize(make_domain("disk", {"R": 0.01}), 8)
    with pytest.raises(InvalidParams):
        rasterize(make_domain("disk", {"R": 1}), 5)


def test_disconnected_mask_rejected():
    # two blocks joined by a corridor thinner than one lattice row
    verts = [[0, 0], [0.6, 0], [0.6, 0.63], [1.4, 0.63], [1.4, 0], [2, 0], [2, 1],
             [1.4, 1], [1.4, 0.7], [0.6, 0.7], [0.6, 1], [0, 1]]
    d = make_domain("polygon", {"vertices": verts})
    with pytest.raises(ResolutionTooCoarse):
        rasterize(d, 10)
    assert rasterize(d, 200).n_interior > 0


def test_scalar_field_validation_and_argmax_tiebreak():
    g = rasterize(make_domain("rectangle", {"w": 1, "h": 1}), 9)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        ScalarField(g, np.full(g.shape, np.nan))
    v = np.where(g.mask, 1.0, 0.0)
    f = ScalarField(g, v)
    ii, jj = np.nonzero(g.mask)
    assert f.argmax() == (ii[0], jj[0])
    assert f.values.flags.writeable is False
