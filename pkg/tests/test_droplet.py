import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from inkjetid import droplet as dr
from oracles import flood_fill_components


def _pairs(mask):
    return [(d.area, d.perimeter) for d in dr.find_droplets(mask)]


def test_single_pixel():
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    d = dr.find_droplets(m)
    assert len(d) == 1 and (d[0].area, d[0].perimeter) == (1, 4)
    assert d[0].centroid == (2.0, 2.0)


def test_square_two_by_two():
    m = np.zeros((6, 6), bool)
    m[1:3, 1:3] = True
    assert _pairs(m) == [(4, 8)]


def test_diagonal_pixels_join_under_8_connectivity():
    m = np.eye(4, dtype=bool)
    assert _pairs(m) == [(4, 16)]
    assert len(dr.find_droplets(m, connectivity=4)) == 4


def test_border_edges_count():
    assert _pairs(np.ones((3, 3), bool)) == [(9, 12)]


def test_ring_keeps_hole_edges():
    m = np.ones((3, 3), bool)
    m[1, 1] = False
    assert _pairs(m) == [(8, 16)]


def test_empty_mask_stats_are_zero():
    s = dr.droplet_stats(dr.find_droplets(np.zeros((8, 8), bool)))
    assert s.droplet_count == 0 and not s.values.any()
    assert len(s.values) == len(dr.DROPLET_STAT_NAMES) == 10


def test_translation_invariance():
    rng = np.random.default_rng(2)
    blob = rng.random((10, 10)) < 0.5
    a = np.zeros((40, 40), bool)
    b = np.zeros((40, 40), bool)
    a[2:12, 3:13] = blob
    b[25:35, 20:30] = blob
    assert sorted(_pairs(a)) == sorted(_pairs(b))


def test_matches_flood_fill_on_large_mask():
    m = np.random.default_rng(9).random((128, 128)) < 0.45
    assert _pairs(m) == flood_fill_components(m)


@settings(max_examples=60, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 24), st.integers(1, 24))))
def test_matches_flood_fill(mask):
    assert _pairs(mask) == flood_fill_components(mask)


def test_stats_values():
    s = dr.stats_from_arrays(np.array([1, 3]), np.array([4, 8]))
    np.testing.assert_allclose(s.values, [2, 1, 1.5, 2, 2.5, 6, 2, 5, 6, 7])


@pytest.mark.parametrize("n,passes", [(9, False), (10, True), (11, True)])
def test_filter_boundary(n, passes):
    drops = [dr.Droplet(1, 4, (0.0, 0.0))] * n
    assert dr.passes_filter(drops, dr.CropFilter(10)) is passes


def test_filter_rejects_negative():
    with pytest.raises(ValueError):
        dr.CropFilter(-1)
