"""Linear triangle meshes: generation, text I/O and point location.

Meshes are generated by force-based node smoothing on repeated Delaunay
triangulations (the DistMesh scheme of Persson and Strang) driven by the
domain's signed distance and a size field that refines near dislocations.

Text format (zero-based indices, one record per line, ``#`` comments
allowed)::

    <n_vertices>
    x y                    (n_vertices lines)
    <n_triangles>
    i j k                  (n_triangles lines, counterclockwise)
    <n_boundary_edges>
    i j                    (outward normal on the right of i -> j)
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import MeshFailure


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2 or t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise MeshFailure("mesh needs (n, 2) vertices and a nonempty (m, 3) triangle list")
        if t.min() < 0 or t.max() >= len(v):
            raise MeshFailure("triangle index out of range")
        p = v[t]
        det = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
               - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        if np.any(det <= 0):
            raise MeshFailure(f"{int(np.sum(det <= 0))} triangle(s) are degenerate or clockwise")
        be = self.boundary_edges
        be = boundary_edges_of(t) if be is None else np.ascontiguousarray(be, dtype=np.int64)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary_edges", be)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @cached_property
    def areas(self):
        p = self.vertices[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def edge_normals(self):
        """Outward unit normals and lengths of the boundary edges."""
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        e = b - a
        length = np.hypot(e[:, 0], e[:, 1])
        return np.stack([e[:, 1], -e[:, 0]], axis=-1) / length[:, None], length

    def h_max(self):
        p = self.vertices[self.triangles]
        e = p - np.roll(p, 1, axis=1)
        return float(np.hypot(e[..., 0], e[..., 1]).max())

    @cached_property
    def locator(self):
        return TriangleLocator(self)


def boundary_edges_of(triangles):
    """Directed edges used by exactly one triangle (interior on the left)."""
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return e[counts[inv.ravel()] == 1]


class TriangleLocator:
    """Find containing triangles and barycentric coordinates."""

    def __init__(self, mesh, k=12):
        self.mesh = mesh
        p = mesh.vertices[mesh.triangles]
        self.tree = cKDTree(p.mean(axis=1))
        self.k = min(k, len(mesh.triangles))
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self._origin = p[:, 0]
        self._inv = np.stack([np.stack([e2[:, 1], -e2[:, 0]], -1),
                              np.stack([-e1[:, 1], e1[:, 0]], -1)], axis=1) / det[:, None, None]

    def _bary(self, x, tri):
        st = np.einsum("mab,mb->ma", self._inv[tri], x - self._origin[tri])
        return np.stack([1.0 - st[:, 0] - st[:, 1], st[:, 0], st[:, 1]], axis=-1)

    def locate(self, x, tol=1e-10):
        """Triangle index (-1 when outside) and barycentric coordinates."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tri = np.full(len(x), -1, dtype=np.int64)
        bary = np.zeros((len(x), 3))
        _, cand = self.tree.query(x, k=self.k)
        cand = cand.reshape(len(x), -1)
        for c in range(cand.shape[1]):
            todo = tri < 0
            if not np.any(todo):
                break
            t = cand[todo, c]
            b = self._bary(x[todo], t)
            hit = np.all(b >= -tol, axis=1)
            idx = np.flatnonzero(todo)[hit]
            tri[idx] = t[hit]
            bary[idx] = b[hit]
        for m in np.flatnonzero(tri < 0):
            b = self._bary(np.repeat(x[m][None], len(self._origin), 0), np.arange(len(self._origin)))
            best = int(np.argmax(b.min(axis=1)))
            if b[best].min() >= -tol:
                tri[m] = best
                bary[m] = b[best]
        return tri, bary


# ---------------------------------------------------------------------------
# generation


def size_field(h, sources, epsilon0, grade=4.0, growth=0.3):
    """Target edge length: ``h / grade`` within ``3 epsilon0`` of a source, then
    growing linearly (rate ``growth``) back to ``h``."""
    sources = np.asarray(sources, dtype=float).reshape(-1, 2)
    fine = h / grade

    def fh(p):
        if len(sources) == 0:
            return np.full(len(p), h)
        d = np.hypot(p[:, None, 0] - sources[None, :, 0], p[:, None, 1] - sources[None, :, 1]).min(1)
        return np.minimum(h, fine + growth * np.maximum(d - 3.0 * epsilon0, 0.0))

    return fh


def _unique_edges(tri, n):
    e = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    key = np.unique(e[:, 0] * n + e[:, 1])
    return np.stack([key // n, key % n], axis=-1)


def distmesh(fd, fh, h0, bbox, pfix=None, max_iter=100, seed=0):
    """Return (vertices, triangles) for the region ``fd < 0``."""
    geps = 1e-3 * h0
    deps = np.sqrt(np.finfo(float).eps) * h0
    (x0, y0), (x1, y1) = bbox
    xs = np.arange(x0, x1 + h0, h0)
    ys = np.arange(y0, y1 + h0 * np.sqrt(3) / 2, h0 * np.sqrt(3) / 2)
    gx, gy = np.meshgrid(xs, ys)
    gx[1::2] += h0 / 2
    p = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    p = p[fd(p) < geps]
    r0 = 1.0 / fh(p) ** 2
    rng = np.random.default_rng(seed)
    p = p[rng.random(len(p)) < r0 / r0.max()]
    pfix = np.zeros((0, 2)) if pfix is None else np.asarray(pfix, dtype=float)
    if len(pfix):
        keep = np.hypot(*(p[:, None] - pfix[None]).transpose(2, 0, 1)).min(1) > 0.5 * h0
        p = np.vstack([pfix, p[keep]])
    nfix = len(pfix)
    if len(p) < 3:
        raise MeshFailure("too few mesh nodes; resolution is coarser than the domain")
    pold = np.full_like(p, np.inf)
    tri = bars = None
    for _ in range(max_iter):
        if np.max(np.hypot(*(p - pold).T) / fh(p)) > 0.2:
            pold = p.copy()
            tri = Delaunay(p).simplices
            cen = p[tri].mean(axis=1)
            tri = tri[fd(cen) < -geps]
            bars = _unique_edges(tri, len(p))
        vec = p[bars[:, 0]] - p[bars[:, 1]]
        length = np.hypot(vec[:, 0], vec[:, 1])
        hbars = fh((p[bars[:, 0]] + p[bars[:, 1]]) / 2)
        l0 = hbars * 1.2 * np.sqrt(np.sum(length ** 2) / np.sum(hbars ** 2))
        f = np.maximum(l0 - length, 0.0)
        fv = (f / length)[:, None] * vec
        ftot = np.zeros_like(p)
        np.add.at(ftot, bars[:, 0], fv)
        np.add.at(ftot, bars[:, 1], -fv)
        ftot[:nfix] = 0.0
        p = p + 0.2 * ftot
        d = fd(p)
        out = d > 0
        if np.any(out):
            q = p[out]
            gx = (fd(q + [deps, 0.0]) - d[out]) / deps
            gy = (fd(q + [0.0, deps]) - d[out]) / deps
            p[out] = q - (d[out] / (gx ** 2 + gy ** 2))[:, None] * np.stack([gx, gy], -1)
        inner = d < -geps
        move = np.hypot(*(0.2 * ftot[inner]).T) / fh(p[inner])
        if move.size == 0 or np.max(move) < 2e-3:
            break
    # snap nodes hugging the boundary onto it before the final triangulation
    d = fd(p)
    near = (d < 0) & (d > -0.15 * fh(p))
    near[:nfix] = False
    if np.any(near):
        q = p[near]
        gx = (fd(q + [deps, 0.0]) - d[near]) / deps
        gy = (fd(q + [0.0, deps]) - d[near]) / deps
        p[near] = q - (d[near] / (gx ** 2 + gy ** 2))[:, None] * np.stack([gx, gy], -1)
    tri = Delaunay(p).simplices
    tri = tri[fd(p[tri].mean(axis=1)) < -geps]
    # slivers spanning three boundary nodes only shave the polygonal boundary
    on_bdry = np.abs(fd(p)) < 10 * geps
    sliver = np.all(on_bdry[tri], axis=1) & (triangle_quality(p, tri) < 0.3)
    tri = tri[~sliver]
    used = np.unique(tri)
    remap = -np.ones(len(p), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return p[used], remap[tri]


def triangle_quality(vertices, triangles):
    """``4 sqrt(3) area / sum(edge^2)``: 1 for equilateral, 0 for degenerate."""
    p = vertices[triangles]
    e = p - np.roll(p, 1, axis=1)
    area = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    return 4.0 * np.sqrt(3.0) * area / np.sum(e ** 2, axis=(1, 2))


def _orient(vertices, triangles):
    p = vertices[triangles]
    det = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
           - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    t = triangles.copy()
    flip = det < 0
    t[flip] = t[flip][:, [0, 2, 1]]
    return t[np.abs(det) > 1e-14 * np.abs(det).max()]


def generate_mesh(geom, resolution, sources=(), epsilon0=0.0, grade=4.0, seed=0):
    """Boundary-conforming mesh of ``geom`` with target edge length
    ``resolution``, ``grade`` times finer within ``3 epsilon0`` of each source."""
    if not resolution > 0:
        raise MeshFailure("mesh resolution must be positive")
    fh = size_field(resolution, sources, epsilon0, grade=grade)
    h0 = resolution / grade if len(sources) else resolution
    if geom.kind == "disk":
        bbox = ((-1.0, -1.0), (1.0, 1.0))
        pfix = None
    else:
        v = geom.vertices
        bbox = (tuple(v.min(axis=0)), tuple(v.max(axis=0)))
        pfix = _sample_polygon(v, fh)
    fd = geom.signed_distance
    vertices, triangles = distmesh(
        lambda p: fd(p), fh, h0, bbox, pfix=pfix, seed=seed)
    triangles = _orient(vertices, triangles)
    mesh = Mesh(vertices, triangles, None)
    if not _closed_loops(mesh.boundary_edges):
        raise MeshFailure("boundary edges do not form closed loops")
    return mesh


def _sample_polygon(v, fh):
    pts = []
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        length = float(np.hypot(*(b - a)))
        s = fh(np.array([(a + b) / 2]))[0]
        n = max(1, int(np.ceil(length / s)))
        t = np.arange(n) / n
        pts.append(a + t[:, None] * (b - a))
    return np.vstack(pts)


def _closed_loops(edges):
    if len(edges) == 0:
        return False
    out_deg = np.bincount(edges[:, 0], minlength=edges.max() + 1)
    in_deg = np.bincount(edges[:, 1], minlength=edges.max() + 1)
    return bool(np.all(out_deg == in_deg))


# ---------------------------------------------------------------------------
# text I/O


def write_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write("# dislab mesh: vertices, triangles, boundary edges (zero-based)\n")
        fh.write(f"{mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"{len(mesh.triangles)}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        fh.write(f"{len(mesh.boundary_edges)}\n")
        for i, j in mesh.boundary_edges:
            fh.write(f"{i} {j}\n")


def read_mesh(path):
    with open(path) as fh:
        lines = [(n, ln.split("#", 1)[0].split()) for n, ln in enumerate(fh, 1)]
    lines = [(n, tok) for n, tok in lines if tok]
    pos = 0

    def block(width, conv):
        nonlocal pos
        if pos >= len(lines):
            raise MeshFailure(f"{path}: unexpected end of file")
        n, tok = lines[pos]
        if len(tok) != 1:
            raise MeshFailure(f"{path}:{n}: expected a count")
        try:
            count = int(tok[0])
        except ValueError:
            raise MeshFailure(f"{path}:{n}: expected a count, got {tok[0]!r}") from None
        rows = []
        for n, tok in lines[pos + 1:pos + 1 + count]:
            if len(tok) != width:
                raise MeshFailure(f"{path}:{n}: expected {width} fields, got {len(tok)}")
            try:
                rows.append([conv(t) for t in tok])
            except ValueError:
                raise MeshFailure(f"{path}:{n}: malformed record {' '.join(tok)!r}") from None
        if len(rows) != count:
            raise MeshFailure(f"{path}: truncated block of {count} records")
        pos += 1 + count
        return np.array(rows, dtype=float if conv is float else np.int64).reshape(count, width)

    vertices = block(2, float)
    triangles = block(3, int)
    edges = block(2, int)
    return Mesh(vertices, triangles, edges)
