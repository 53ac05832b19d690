import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvbf.assembly import ERROR_DEGREE, cell_quadrature
from kvbf.mesh import build_structured
from kvbf.spaces import ElementFamily, build_spaces, dirichlet_dofs, interpolate, tabulate

UNIT = (0.0, 1.0, 0.0, 1.0)
ALL = ("left", "right", "top", "bottom")


def test_counts_taylor_hood_n1():
    s = build_spaces(build_structured(UNIT, 1), "taylor_hood")
    assert (s.n_u, s.n_p, s.n_w) == (18, 4, 4)
    assert s.n_dofs == 26


def test_counts_mini_n1():
    s = build_spaces(build_structured(UNIT, 1), ElementFamily.MINI)
    assert (s.n_u, s.n_p, s.n_w) == (12, 4, 4)


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_count_formulas(n):
    mesh = build_structured(UNIT, n)
    th = build_spaces(mesh, "taylor_hood")
    mini = build_spaces(mesh, "mini")
    assert th.n_u == 2 * (mesh.n_vertices + mesh.n_edges)
    assert mini.n_u == 2 * (mesh.n_vertices + mesh.n_cells)
    assert th.n_p == th.n_w == mini.n_p == mesh.n_vertices


def test_unknown_family():
    with pytest.raises(ValueError):
        build_spaces(build_structured(UNIT, 1), "crouzeix_raviart")


def test_dirichlet_all_sides_n1():
    s = build_spaces(build_structured(UNIT, 1), "taylor_hood")
    dofs = dirichlet_dofs(s, ALL)
    assert len(dofs) == 16
    assert len(np.unique(dofs)) == 16


def test_dirichlet_empty():
    s = build_spaces(build_structured(UNIT, 2), "taylor_hood")
    assert dirichlet_dofs(s, []).size == 0


@pytest.mark.parametrize("family", ["taylor_hood", "mini"])
def test_dirichlet_left_matches_coordinate_filter(family):
    s = build_spaces(build_structured(UNIT, 2), family)
    coords = s.velocity.coords
    expected = np.flatnonzero(s.velocity.nodal & (coords[:, 0] == 0.0))
    ns = s.velocity.n_dofs
    assert np.array_equal(dirichlet_dofs(s, ["left"]), np.concatenate([expected, expected + ns]))


def test_interpolate_constant(spaces3):
    u = interpolate(spaces3, lambda x, y: (np.ones_like(x), np.zeros_like(x)), "velocity")
    ns = spaces3.velocity.n_dofs
    assert np.array_equal(u[ns:], np.zeros(ns))
    assert np.array_equal(u[:ns], spaces3.velocity.nodal.astype(float))


def _l2_error(spaces, which, coeffs, exact):
    cq = cell_quadrature(spaces, ERROR_DEGREE)
    x, y = cq.points[..., 0], cq.points[..., 1]
    if which == "velocity":
        vals, _ = cq.velocity_at_points(coeffs)
        ex = np.stack(np.broadcast_arrays(*exact(x, y)), axis=-1)
        return np.sqrt(np.sum(cq.weights[..., None] * (vals - ex) ** 2))
    vals, _ = cq.scalar_at_points(which, coeffs)
    return np.sqrt(np.sum(cq.weights * (vals - exact(x, y)) ** 2))


def test_p1_reproduction(spaces3):
    f = lambda x, y: x  # noqa: E731
    assert _l2_error(spaces3, "pressure", interpolate(spaces3, f, "pressure"), f) < 1e-13


def test_p2_reproduction():
    s = build_spaces(build_structured(UNIT, 3), "taylor_hood")
    f = lambda x, y: (x**2, 0 * x)  # noqa: E731
    assert _l2_error(s, "velocity", interpolate(s, f, "velocity"), f) < 1e-13


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.sampled_from(["taylor_hood", "mini"]))
@settings(max_examples=25, deadline=None)
def test_polynomial_reproduction(c, family):
    s = build_spaces(build_structured((-1.0, 2.0, 0.5, 1.5), 3), family)
    if family == "taylor_hood":
        f = lambda x, y: (c[0] + c[1] * x * y + c[2] * y**2, c[3] * x**2 - c[4] * x + c[5])  # noqa: E731
    else:
        f = lambda x, y: (c[0] + c[1] * x + c[2] * y, c[3] - c[4] * x + c[5] * y)  # noqa: E731
    assert _l2_error(s, "velocity", interpolate(s, f, "velocity"), f) < 1e-12


def test_bubble_vanishes_on_edges():
    s = np.linspace(0, 1, 10)
    edges = [np.column_stack([s, 0 * s]), np.column_stack([0 * s, s]), np.column_stack([s, 1 - s])]
    for pts in edges:
        vals, _ = tabulate("P1B", pts)
        assert np.max(np.abs(vals[:, 3])) <= 1e-14
    centroid, _ = tabulate("P1B", [[1 / 3, 1 / 3]])
    assert centroid[0, 3] == pytest.approx(1.0)


@pytest.mark.parametrize("element", ["P1", "P2", "P1B"])
def test_partition_of_unity_and_gradients(element):
    pts = np.random.default_rng(0).dirichlet([1, 1, 1], 20)[:, 1:]
    vals, grads = tabulate(element, pts)
    nodal = slice(0, 3) if element == "P1B" else slice(None)
    assert np.allclose(vals[:, nodal].sum(axis=1), 1.0, atol=1e-14)
    h = 1e-6
    for d in range(2):
        shift = np.zeros(2)
        shift[d] = h
        fd = (tabulate(element, pts + shift)[0] - tabulate(element, pts - shift)[0]) / (2 * h)
        assert np.allclose(grads[..., d], fd, atol=1e-8)


def test_unknown_element():
    with pytest.raises(ValueError):
        tabulate("P3", [[0.2, 0.2]])


@pytest.mark.parametrize("family", ["taylor_hood", "mini"])
def test_shared_edge_consistency(family):
    mesh = build_structured(UNIT, 4)
    s = build_spaces(mesh, family)
    dm = s.velocity.dofmap
    # nodal coordinates of each local DOF agree with the physical location of its global DOF
    for c in range(mesh.n_cells):
        p = mesh.cell_coords[c]
        ref = [[0, 0], [1, 0], [0, 1]]
        if s.velocity.element == "P2":
            ref += [[0.5, 0.5], [0, 0.5], [0.5, 0]]
        else:
            ref += [[1 / 3, 1 / 3]]
        ref = np.array(ref, float)
        phys = p[0] + ref @ np.stack([p[1] - p[0], p[2] - p[0]])
        assert np.allclose(s.velocity.coords[dm[c]], phys, atol=1e-14)
    # each interior edge DOF is referenced by exactly two cells
    if family == "taylor_hood":
        counts = np.bincount(dm[:, 3:].ravel())
        assert set(np.unique(counts[mesh.n_vertices:]).tolist()) == {1, 2}
