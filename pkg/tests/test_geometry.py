import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import exitspec as es
from exitspec.geometry import shoelace_area


UNIT_SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


class TestSpecs:
    def test_interval_measures(self):
        iv = es.Interval(0.25, 1.75)
        assert iv.volume() == 1.5
        assert iv.boundary_measure() == 2.0

    def test_interval_rejects_empty(self):
        with pytest.raises(es.GeometryError):
            es.Interval(1.0, 1.0)

    def test_rectangle_measures(self):
        r = es.Rectangle(2.0, 0.5)
        assert r.volume() == 1.0
        assert r.boundary_measure() == 5.0

    def test_disk_measures(self):
        d = es.Disk(2.0)
        assert d.volume() == pytest.approx(4 * math.pi, rel=1e-15)
        assert d.boundary_measure() == pytest.approx(4 * math.pi, rel=1e-15)

    def test_polygon_square_measures(self):
        p = es.Polygon(UNIT_SQUARE)
        assert p.volume() == pytest.approx(1.0, abs=1e-15)
        assert p.boundary_measure() == pytest.approx(4.0, abs=1e-14)

    def test_contains(self):
        iv = es.Interval(0, 1)
        inside = iv.contains(np.array([0.5, 0.0, 1.0, -0.1]))
        # open domain: boundary points are out
        assert inside.tolist() == [True, False, False, False]

        d = es.Disk(1.0)
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.7, 0.7], [0.7, 0.75]])
        assert d.contains(pts).tolist() == [True, False, True, False]

    def test_polygon_contains_nonconvex(self):
        # L-shape: the notch corner region is outside
        ell = es.Polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
        pts = np.array([[0.5, 0.5], [1.5, 0.5], [1.5, 1.5], [0.5, 1.5]])
        assert ell.contains(pts).tolist() == [True, True, False, True]
        assert ell.volume() == pytest.approx(3.0, abs=1e-14)

    def test_crossing_parity_matches_contains(self):
        ell = es.Polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
        rng = np.random.default_rng(3)
        pts = rng.uniform(-0.2, 2.2, size=(200, 2))
        par = ell.crossing_parity(pts)
        assert np.array_equal(par, ell.contains(pts, boundary_eps=0.0))

    def test_self_intersecting_rejected(self):
        with pytest.raises(es.GeometryError):
            es.Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])

    def test_degenerate_rejected(self):
        with pytest.raises(es.GeometryError):
            es.Polygon([(0, 0), (1, 0)])


def test_shoelace_orientation_and_value():
    assert shoelace_area(UNIT_SQUARE) == pytest.approx(1.0)
    tri = [(0, 0), (1, 0), (0, 2)]
    assert shoelace_area(tri) == pytest.approx(1.0)


def test_vertex_normals_unit_and_outward():
    p = es.Polygon(UNIT_SQUARE)
    normals = p.vertex_normals()
    cx = sum(v[0] for v in p.vertices) / 4
    cy = sum(v[1] for v in p.vertices) / 4
    for (vx, vy), (nx, ny) in zip(p.vertices, normals):
        assert math.hypot(nx, ny) == pytest.approx(1.0, abs=1e-12)
        # bisector normal points away from the centroid on a convex polygon
        assert (vx - cx) * nx + (vy - cy) * ny > 0


class TestPerturb:
    def test_eps_zero_is_identity(self):
        p = es.Polygon(UNIT_SQUARE)
        q = es.perturb_polygon(p, [1.0, -0.5, 0.3, 0.7], 0.0)
        assert q.vertices == p.vertices

    def test_moves_along_bisectors(self):
        p = es.Polygon(UNIT_SQUARE)
        q = es.perturb_polygon(p, [1.0, 0.0, 0.0, 0.0], 0.1)
        # only the first vertex moves, by eps along its outward bisector
        assert q.vertices[1:] == p.vertices[1:]
        dx = q.vertices[0][0] - p.vertices[0][0]
        dy = q.vertices[0][1] - p.vertices[0][1]
        assert math.hypot(dx, dy) == pytest.approx(0.1, rel=1e-12)
        assert dx == pytest.approx(-0.1 / math.sqrt(2), rel=1e-12)

    def test_f_length_mismatch(self):
        p = es.Polygon(UNIT_SQUARE)
        with pytest.raises(es.GeometryError):
            es.perturb_polygon(p, [1.0, 2.0], 0.1)

    @given(
        f=st.lists(st.floats(-1, 1), min_size=4, max_size=4),
        eps=st.floats(0.0, 0.08),
    )
    @settings(max_examples=40, deadline=None)
    def test_small_perturbations_stay_simple(self, f, eps):
        p = es.Polygon(UNIT_SQUARE)
        q = es.perturb_polygon(p, f, eps)
        # construction re-validates; area stays near 1 for small eps
        assert abs(q.volume() - 1.0) < 4 * eps + 1e-12


class TestGrids:
    def test_interval_lattice(self):
        g = es.build_grid(es.Interval(0, 1), 1 / 128)
        assert g.kind == "lattice"
        assert g.n == 127
        assert math.fsum(g.weights) == pytest.approx(1.0 - 1 / 128, rel=1e-14)
        assert np.all(g.spec.contains(np.asarray(g.nodes)))

    def test_lattice_weight_sum_converges_to_volume(self):
        errs = []
        for h in (1 / 16, 1 / 32, 1 / 64):
            g = es.build_grid(es.Disk(1.0), h)
            errs.append(abs(math.fsum(g.weights) - math.pi))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 0.02

    def test_radial_grid_cell_sum(self):
        h = 1 / 256
        g = es.build_radial_grid(es.Disk(1.0), h)
        assert g.kind == "radial"
        # finite-volume cells tile the disk of radius R - h/2 exactly
        assert math.fsum(g.weights) == pytest.approx(
            math.pi * (1.0 - h / 2) ** 2, rel=1e-12)

    def test_radial_requires_disk(self):
        with pytest.raises((es.GeometryError, TypeError, AttributeError)):
            es.build_radial_grid(es.Rectangle(1, 1), 1 / 32)

    def test_neighbors_interior(self):
        g = es.build_grid(es.Rectangle(1, 1), 1 / 8)
        center = g.lattice[g.n // 2]
        nbrs = g.neighbors(center)
        assert len(nbrs) == 4

    def test_h_must_be_positive(self):
        with pytest.raises((es.GeometryError, ValueError)):
            es.build_grid(es.Interval(0, 1), 0.0)

    def test_dump_csv(self, tmp_path):
        g = es.build_grid(es.Interval(0, 1), 1 / 8)
        path = tmp_path / "grid.csv"
        g.dump_csv(path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == g.n + 1
