import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvbf.mesh import (BOUNDARY_TAGS, CHANNEL, DEFAULT_CHANNELS, MATRIX, Mesh, build_structured,
                       mesh_size, rectangles_indicator, tag_channel)

UNIT = (0.0, 1.0, 0.0, 1.0)


@pytest.mark.parametrize("n, nv, nc, h", [
    (1, 4, 2, math.sqrt(2)),
    (4, 25, 32, math.sqrt(2) / 4),
])
def test_counts_and_size(n, nv, nc, h):
    mesh = build_structured(UNIT, n)
    assert mesh.n_vertices == nv
    assert mesh.n_cells == nc
    assert mesh_size(mesh) == pytest.approx(h, rel=1e-14)


def test_size_of_square_minus_one_one():
    assert mesh_size(build_structured((-1, 1, -1, 1), 2)) == pytest.approx(math.sqrt(2), rel=1e-14)


def test_empty_mesh_size_raises():
    empty = Mesh(np.zeros((0, 2)), np.zeros((0, 3), int), np.zeros((0, 2), int), np.array([], dtype=str))
    with pytest.raises(ValueError):
        mesh_size(empty)


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_bad_subdivision_raises(n):
    with pytest.raises(ValueError):
        build_structured(UNIT, n)


def test_degenerate_rectangle_raises():
    with pytest.raises(ValueError):
        build_structured((0, 0, 0, 1), 3)


def test_diagonal_convention():
    mesh = build_structured(UNIT, 1)
    # both cells contain the lower-left to upper-right diagonal
    for cell in mesh.cells:
        assert {0, 3} <= set(cell.tolist())


@given(st.integers(1, 12), st.floats(-5, 5), st.floats(0.1, 4), st.floats(-5, 5), st.floats(0.1, 4))
@settings(max_examples=30, deadline=None)
def test_area_edges_orientation(n, x0, lx, y0, ly):
    mesh = build_structured((x0, x0 + lx, y0, y0 + ly), n)
    assert np.all(mesh.signed_areas > 0)
    assert mesh.signed_areas.sum() == pytest.approx(lx * ly, rel=1e-12)
    counts = np.bincount(mesh.cell_edges.ravel(), minlength=mesh.n_edges)
    assert mesh.n_edges == 3 * n * n + 2 * n
    assert np.sum(counts == 1) == 4 * n == len(mesh.boundary_edges)
    assert np.all((counts == 1) | (counts == 2))
    mesh.validate()


@given(st.integers(1, 16))
@settings(max_examples=16, deadline=None)
def test_refinement_halves_size(n):
    assert mesh_size(build_structured(UNIT, 2 * n)) == pytest.approx(mesh_size(build_structured(UNIT, n)) / 2,
                                                                     rel=1e-14)


def test_boundary_tags_cover_sides():
    n = 5
    mesh = build_structured(UNIT, n)
    x, y = mesh.vertices.T
    expected = {"left": x == 0, "right": x == 1, "bottom": y == 0, "top": y == 1}
    for tag in BOUNDARY_TAGS:
        got = mesh.boundary_vertices([tag])
        assert np.array_equal(got, np.flatnonzero(expected[tag]))
        assert np.sum(mesh.boundary_tags == tag) == n


def test_local_edge_opposite_vertex(unit_mesh4):
    edges = unit_mesh4.edges[unit_mesh4.cell_edges]  # (n_c, 3, 2)
    for k in range(3):
        assert not np.any(edges[:, k, :] == unit_mesh4.cells[:, k, None])


def test_validate_rejects_clockwise():
    mesh = build_structured(UNIT, 2)
    flipped = Mesh(mesh.vertices, mesh.cells[:, [0, 2, 1]], mesh.boundary_edges, mesh.boundary_tags)
    with pytest.raises(ValueError, match="counter-clockwise"):
        flipped.validate()


def test_validate_rejects_missing_boundary():
    mesh = build_structured(UNIT, 2)
    broken = Mesh(mesh.vertices, mesh.cells, mesh.boundary_edges[1:], mesh.boundary_tags[1:])
    with pytest.raises(ValueError, match="boundary"):
        broken.validate()


def test_tag_all_false_and_true(unit_mesh4):
    assert np.all(tag_channel(unit_mesh4, lambda x, y: False).cell_region == MATRIX)
    assert np.all(tag_channel(unit_mesh4, lambda x, y: True).cell_region == CHANNEL)


def test_tag_strip_matches_enumeration():
    mesh = build_structured((-1, 1, -1, 1), 20)
    tagged = tag_channel(mesh, lambda x, y: np.abs(y) < 0.1)
    expected = [CHANNEL if abs(c[1]) < 0.1 else MATRIX for c in mesh.centroids.tolist()]
    assert tagged.cell_region.tolist() == expected
    assert np.array_equal(tagged.cells, mesh.cells)
    assert np.all(mesh.cell_region == MATRIX)  # original untouched


def test_default_channels_on_aligned_grid():
    mesh = tag_channel(build_structured((-1, 1, -1, 1), 40), rectangles_indicator(DEFAULT_CHANNELS))
    area = np.abs(mesh.signed_areas)
    channel_area = area[mesh.cell_region == CHANNEL].sum()
    # strip 2 x 0.2 plus two branches 0.1 x 2, minus the two 0.1 x 0.2 overlaps
    assert channel_area == pytest.approx(0.4 + 0.4 - 0.04, rel=1e-12)
