"""Domain descriptions, lattice grids, quadrature weights, and the boundary
normal-flow perturbation for polygons.

Domains are analytic objects (exact volume and boundary measure); grids are
stair-step lattices h*Z^d restricted to the strict interior, with Dirichlet
zero on everything outside. Disks additionally get a 1D radial grid with
finite-volume weights, which restores second-order accuracy that the
stair-step boundary lacks.
"""

from __future__ import annotations

import math

import numpy as np


class GeometryError(ValueError):
    pass


class DomainSpec:
    """Base class for analytic domain descriptions."""

    dim = None
    kind = None

    def volume(self):
        raise NotImplementedError

    def boundary_measure(self):
        raise NotImplementedError

    def contains(self, points):
        """Strict-interior test; points is (n, dim) or (dim,)."""
        raise NotImplementedError


class Interval(DomainSpec):
    dim = 1
    kind = "interval"

    def __init__(self, a, b):
        if not (a < b):
            raise GeometryError(f"interval needs a < b, got [{a}, {b}]")
        self.a = float(a)
        self.b = float(b)

    def volume(self):
        return self.b - self.a

    def boundary_measure(self):
        # counting measure on the two endpoints
        return 2.0

    def contains(self, points):
        x = np.asarray(points, dtype=float)
        return (x > self.a) & (x < self.b)

    def __repr__(self):
        return f"Interval({self.a}, {self.b})"


class Rectangle(DomainSpec):
    """(0, Lx) x (0, Ly)."""

    dim = 2
    kind = "rectangle"

    def __init__(self, Lx, Ly):
        if Lx <= 0 or Ly <= 0:
            raise GeometryError(f"rectangle needs positive sides, got {Lx} x {Ly}")
        self.Lx = float(Lx)
        self.Ly = float(Ly)

    def volume(self):
        return self.Lx * self.Ly

    def boundary_measure(self):
        return 2.0 * (self.Lx + self.Ly)

    def contains(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (p[:, 0] > 0) & (p[:, 0] < self.Lx) & (p[:, 1] > 0) & (p[:, 1] < self.Ly)

    def __repr__(self):
        return f"Rectangle({self.Lx}, {self.Ly})"


class Disk(DomainSpec):
    """Centered at the origin."""

    dim = 2
    kind = "disk"

    def __init__(self, R):
        if R <= 0:
            raise GeometryError(f"disk needs positive radius, got {R}")
        self.R = float(R)

    def volume(self):
        return math.pi * self.R ** 2

    def boundary_measure(self):
        return 2.0 * math.pi * self.R

    def contains(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return p[:, 0] ** 2 + p[:, 1] ** 2 < self.R ** 2

    def __repr__(self):
        return f"Disk({self.R})"


def shoelace_area(vertices):
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p1, p2, q1, q2):
    """Proper or improper intersection of closed segments."""

    def orient(a, b, c):
        d = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(d) < 1e-14:
            return 0
        return 1 if d > 0 else -1

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - 1e-14 <= c[0] <= max(a[0], b[0]) + 1e-14 and
                min(a[1], b[1]) - 1e-14 <= c[1] <= max(a[1], b[1]) + 1e-14)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def _is_simple(vertices):
    n = len(vertices)
    for i in range(n):
        a1, a2 = vertices[i], vertices[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared endpoint with a neighbor
            b1, b2 = vertices[j], vertices[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                return False
    return True


class Polygon(DomainSpec):
    """Simple polygon; orientation is normalized to counterclockwise."""

    dim = 2
    kind = "polygon"

    def __init__(self, vertices):
        v = [tuple(map(float, p)) for p in vertices]
        if len(v) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        area = shoelace_area(v)
        if abs(area) < 1e-14:
            raise GeometryError("polygon has (near) zero area")
        if area < 0:
            v = v[::-1]
        if not _is_simple(v):
            raise GeometryError("polygon is self-intersecting")
        self.vertices = tuple(v)

    def volume(self):
        return shoelace_area(self.vertices)

    def boundary_measure(self):
        v = np.asarray(self.vertices)
        d = np.roll(v, -1, axis=0) - v
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))

    def contains(self, points, boundary_eps=None):
        """Strict interior: odd crossing parity and not within eps of an edge."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        inside = self.crossing_parity(p)
        if boundary_eps is None:
            v = np.asarray(self.vertices)
            scale = max(v.max() - v.min(), 1.0)
            boundary_eps = 1e-12 * scale
        near = self._near_boundary(p, boundary_eps)
        return inside & ~near

    def crossing_parity(self, p):
        """Vectorized even-odd ray casting (no boundary guard); p is (n,2)."""
        v = np.asarray(self.vertices)
        x, y = p[:, 0], p[:, 1]
        inside = np.zeros(len(p), dtype=bool)
        n = len(v)
        for i in range(n):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % n]
            cond = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= cond & (x < xc)
        return inside

    def _near_boundary(self, p, eps):
        v = np.asarray(self.vertices)
        near = np.zeros(len(p), dtype=bool)
        n = len(v)
        for i in range(n):
            a = v[i]
            b = v[(i + 1) % n]
            ab = b - a
            denom = float(ab @ ab)
            t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
            proj = a + t[:, None] * ab
            d2 = np.sum((p - proj) ** 2, axis=1)
            near |= d2 <= eps * eps
        return near

    def vertex_normals(self):
        """Outward unit normals at vertices (angle bisector of edge normals)."""
        v = np.asarray(self.vertices)
        n = len(v)
        edges = np.roll(v, -1, axis=0) - v
        lens = np.hypot(edges[:, 0], edges[:, 1])
        # CCW polygon: outward edge normal is (dy, -dx)
        en = np.stack([edges[:, 1], -edges[:, 0]], axis=1) / lens[:, None]
        normals = np.empty_like(v)
        for i in range(n):
            s = en[i - 1] + en[i]
            norm = math.hypot(s[0], s[1])
            if norm < 1e-12:
                raise GeometryError(f"degenerate corner at vertex {i}")
            normals[i] = s / norm
        return normals

    def __repr__(self):
        return f"Polygon({list(self.vertices)})"


def volume(spec: DomainSpec) -> float:
    return spec.volume()


def boundary_measure(spec: DomainSpec) -> float:
    return spec.boundary_measure()


def perturb_polygon(poly: Polygon, f, eps: float) -> Polygon:
    """Move each vertex along its outward normal: v -> v + eps * f_i * nu_i.

    eps = 0 returns a polygon with the identical vertex list. The result must
    stay simple; otherwise GeometryError.
    """
    if not isinstance(poly, Polygon):
        raise GeometryError("perturb_polygon needs a Polygon")
    f = [float(c) for c in f]
    if len(f) != len(poly.vertices):
        raise GeometryError(f"need one flow value per vertex "
                            f"({len(poly.vertices)}), got {len(f)}")
    if eps == 0.0:
        return Polygon(poly.vertices)
    nu = poly.vertex_normals()
    moved = [(vx + eps * fi * nx, vy + eps * fi * ny)
             for (vx, vy), fi, (nx, ny) in zip(poly.vertices, f, nu)]
    try:
        out = Polygon(moved)
    except GeometryError as e:
        raise GeometryError(f"perturbation eps={eps} breaks the polygon: {e}") from e
    return out


class Grid:
    """Interior nodes of a lattice (or radial) discretization.

    nodes: (n, dim) coordinates; weights: per-node quadrature weight;
    lattice: integer lattice coordinates (lexicographic order, which is
    also the node ordering); index: dict lattice tuple -> node index.
    kind: "lattice" or "radial".
    """

    def __init__(self, spec, h, nodes, lattice, weights, kind="lattice"):
        self.spec = spec
        self.h = float(h)
        self.nodes = np.asarray(nodes, dtype=float)
        self.lattice = [tuple(c) for c in lattice]
        self.weights = np.asarray(weights, dtype=float)
        self.index = {c: i for i, c in enumerate(self.lattice)}
        self.kind = kind

    @property
    def n(self):
        return len(self.weights)

    @property
    def dim(self):
        return self.spec.dim

    def neighbors(self, coord):
        """Lattice neighbor indices (or None where the neighbor is exterior)."""
        out = []
        for axis in range(len(coord)):
            for step in (-1, 1):
                c = list(coord)
                c[axis] += step
                out.append(self.index.get(tuple(c)))
        return out

    def dump_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x,y,index,weight\n")
            for i, c in enumerate(self.nodes):
                x = c[0] if self.nodes.ndim == 2 else c
                y = c[1] if self.nodes.ndim == 2 and len(c) > 1 else 0.0
                fh.write(f"{x:.17g},{y:.17g},{i},{self.weights[i]:.17g}\n")


def build_grid(spec: DomainSpec, h: float) -> Grid:
    """Stair-step lattice grid: the points of h*Z^d strictly inside spec.

    Nodes are ordered lexicographically by lattice coordinates. Raises
    GeometryError when some axis has fewer than 3 interior nodes.
    """
    if h <= 0:
        raise GeometryError("h must be positive")
    if isinstance(spec, Interval):
        eps = 1e-12 * max(1.0, abs(spec.a), abs(spec.b))
        i_lo = math.floor(spec.a / h) - 1
        i_hi = math.ceil(spec.b / h) + 1
        idx = [i for i in range(i_lo, i_hi + 1)
               if spec.a + eps < i * h < spec.b - eps]
        if len(idx) < 3:
            raise GeometryError(f"h={h} leaves {len(idx)} interior nodes (need 3)")
        nodes = np.array([i * h for i in idx])
        lattice = [(i,) for i in idx]
        weights = np.full(len(idx), h)
        return Grid(spec, h, nodes, lattice, weights)

    if isinstance(spec, (Rectangle, Disk, Polygon)):
        if isinstance(spec, Rectangle):
            xlo, xhi, ylo, yhi = 0.0, spec.Lx, 0.0, spec.Ly
        elif isinstance(spec, Disk):
            xlo = ylo = -spec.R
            xhi = yhi = spec.R
        else:
            v = np.asarray(spec.vertices)
            xlo, xhi = v[:, 0].min(), v[:, 0].max()
            ylo, yhi = v[:, 1].min(), v[:, 1].max()
        i_range = range(math.floor(xlo / h) - 1, math.ceil(xhi / h) + 2)
        j_range = range(math.floor(ylo / h) - 1, math.ceil(yhi / h) + 2)
        cand = [(i, j) for i in i_range for j in j_range]
        pts = np.array([(i * h, j * h) for i, j in cand])
        if isinstance(spec, Rectangle):
            eps = 1e-12 * max(1.0, spec.Lx, spec.Ly)
            mask = ((pts[:, 0] > eps) & (pts[:, 0] < spec.Lx - eps) &
                    (pts[:, 1] > eps) & (pts[:, 1] < spec.Ly - eps))
        elif isinstance(spec, Disk):
            mask = pts[:, 0] ** 2 + pts[:, 1] ** 2 < spec.R ** 2
        else:
            mask = spec.contains(pts)
        lattice = [c for c, m in zip(cand, mask) if m]
        nodes = pts[mask]
        if len(lattice) == 0:
            raise GeometryError(f"h={h} leaves no interior nodes")
        xs = {c[0] for c in lattice}
        ys = {c[1] for c in lattice}
        if len(xs) < 3 or len(ys) < 3:
            raise GeometryError(f"h={h} leaves fewer than 3 interior nodes per axis")
        weights = np.full(len(lattice), h * h)
        return Grid(spec, h, nodes, lattice, weights)

    raise GeometryError(f"unsupported domain spec {spec!r}")


def build_radial_grid(spec: Disk, h: float) -> Grid:
    """1D radial reduction of the disk: nodes r_i = i*h', i = 0..M.

    h is snapped to h' = R/(M+1) so the Dirichlet ghost node lands exactly
    on r = R. Weights are finite-volume cell areas: pi h'^2/4 for the center
    cell, 2 pi r_i h' for the annuli; they make the radial operator exactly
    symmetrizable.
    """
    if not isinstance(spec, Disk):
        raise GeometryError("radial grids only apply to disks")
    if h <= 0 or h >= spec.R:
        raise GeometryError(f"radial spacing h={h} incompatible with R={spec.R}")
    M = max(int(round(spec.R / h)) - 1, 2)
    hh = spec.R / (M + 1)
    r = np.arange(M + 1) * hh
    weights = np.empty(M + 1)
    weights[0] = math.pi * hh * hh / 4.0
    weights[1:] = 2.0 * math.pi * r[1:] * hh
    lattice = [(i,) for i in range(M + 1)]
    return Grid(spec, hh, r, lattice, weights, kind="radial")
