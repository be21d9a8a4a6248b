"""Hot numeric kernels.

Each kernel exists twice: a numba ``@njit`` loop version and a vectorized
numpy version.  The public names (``strain_sum``, ``partition_weight``,
``p1_element_matrices``, ``vertex_average``) are bound at import time to the
numba versions unless ``DISLAB_NUMBA=0`` is set in the environment or numba
cannot be imported.  Both variants stay importable as ``*_nb`` / ``*_np`` so
tests and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

import os

import numpy as np

try:
    import numba
    from numba import njit, prange
    HAVE_NUMBA = True
    # skip the TBB probe unless the user picked a layer explicitly
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and os.environ.get("DISLAB_NUMBA", "1").strip().lower() not in (
    "0", "false", "no", "off")

# distance below which a field point counts as sitting on its source
SINGULAR_RTOL = 1e-14

TWO_PI = 2.0 * np.pi


def set_threads(n):
    """Set the numba worker count (no-op on the numpy path)."""
    if HAVE_NUMBA and n and n > 0:
        numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# superposed singular strains


def strain_sum_np(points, sources, burgers, lam):
    """Sum of singular strains of all ``sources`` at ``points``.

    Returns ``(out, n_singular)`` where ``n_singular`` counts points that lie
    within the singular tolerance of some source (their entries are garbage).
    """
    points = np.asarray(points, dtype=float)
    out = np.zeros_like(points)
    if len(sources) == 0:
        return out, 0
    y1 = points[:, None, 0] - sources[None, :, 0]
    y2 = points[:, None, 1] - sources[None, :, 1]
    tol = SINGULAR_RTOL * np.maximum(1.0, np.hypot(sources[:, 0], sources[:, 1]))
    bad = (y1 * y1 + y2 * y2) < (tol * tol)[None, :]
    q = lam * lam * y1 * y1 + y2 * y2
    q = np.where(bad, 1.0, q)
    c = (burgers * lam / TWO_PI)[None, :] / q
    out[:, 0] = np.sum(-c * y2, axis=1)
    out[:, 1] = np.sum(c * y1, axis=1)
    return out, int(np.count_nonzero(np.any(bad, axis=1)))


@njit(cache=True, parallel=True)
def _strain_sum_kernel(points, sources, burgers, lam, out, flags):
    m = points.shape[0]
    n = sources.shape[0]
    for p in prange(m):
        x1 = points[p, 0]
        x2 = points[p, 1]
        a1 = 0.0
        a2 = 0.0
        for s in range(n):
            y1 = x1 - sources[s, 0]
            y2 = x2 - sources[s, 1]
            z1 = sources[s, 0]
            z2 = sources[s, 1]
            tol = SINGULAR_RTOL * max(1.0, np.sqrt(z1 * z1 + z2 * z2))
            if y1 * y1 + y2 * y2 < tol * tol:
                flags[p] = 1
                continue
            c = burgers[s] * lam / (TWO_PI * (lam * lam * y1 * y1 + y2 * y2))
            a1 -= c * y2
            a2 += c * y1
        out[p, 0] = a1
        out[p, 1] = a2


def strain_sum_nb(points, sources, burgers, lam):
    points = np.ascontiguousarray(points, dtype=float)
    out = np.zeros_like(points)
    if len(sources) == 0:
        return out, 0
    flags = np.zeros(points.shape[0], dtype=np.int8)
    _strain_sum_kernel(points, np.ascontiguousarray(sources, dtype=float),
                       np.ascontiguousarray(burgers, dtype=float), float(lam), out, flags)
    return out, int(flags.sum())


# ---------------------------------------------------------------------------
# partition of unity used by the star quadrature


def partition_weight_np(points, centers, lam, i):
    """Weight of center ``i`` in the partition ``w_i / sum_j w_j``.

    ``w_j = 1 / rho_j**4`` with ``rho_j`` the elliptic radius about center j.
    The weights are rational in the coordinates, hence smooth, and each one
    vanishes like ``rho_j**4`` at every other center.
    """
    points = np.asarray(points, dtype=float)
    if len(centers) == 1:
        return np.ones(points.shape[0])
    d1 = points[:, None, 0] - centers[None, :, 0]
    d2 = (points[:, None, 1] - centers[None, :, 1]) / lam
    q = d1 * d1 + d2 * d2
    qmin = q.min(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (qmin / q) ** 2
    w = np.where(q == 0.0, 1.0, w)
    w = np.where((qmin == 0.0) & (q > 0.0), 0.0, w)
    return w[:, i] / w.sum(axis=1)


@njit(cache=True, parallel=True)
def _partition_kernel(points, centers, lam, i, out):
    m = points.shape[0]
    n = centers.shape[0]
    for p in prange(m):
        qmin = np.inf
        for j in range(n):
            d1 = points[p, 0] - centers[j, 0]
            d2 = (points[p, 1] - centers[j, 1]) / lam
            q = d1 * d1 + d2 * d2
            if q < qmin:
                qmin = q
        total = 0.0
        wi = 0.0
        for j in range(n):
            d1 = points[p, 0] - centers[j, 0]
            d2 = (points[p, 1] - centers[j, 1]) / lam
            q = d1 * d1 + d2 * d2
            if q == 0.0:
                w = 1.0
            elif qmin == 0.0:
                w = 0.0
            else:
                r = qmin / q
                w = r * r
            total += w
            if j == i:
                wi = w
        out[p] = wi / total


def partition_weight_nb(points, centers, lam, i):
    points = np.ascontiguousarray(points, dtype=float)
    if len(centers) == 1:
        return np.ones(points.shape[0])
    out = np.empty(points.shape[0])
    _partition_kernel(points, np.ascontiguousarray(centers, dtype=float), float(lam), int(i), out)
    return out


# ---------------------------------------------------------------------------
# linear triangle elements


def p1_element_matrices_np(vertices, triangles, l11, l22):
    """Areas, basis gradients ``(T, 3, 2)`` and element stiffness ``(T, 3, 3)``
    for the operator ``div(diag(l11, l22) grad u)``."""
    p = vertices[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * det
    # gradient of barycentric coordinate a is rot(opposite edge) / det
    g = np.empty((len(triangles), 3, 2))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        edge = p[:, c] - p[:, b]
        g[:, a, 0] = -edge[:, 1] / det
        g[:, a, 1] = edge[:, 0] / det
    ke = area[:, None, None] * (
        l11 * g[:, :, None, 0] * g[:, None, :, 0] + l22 * g[:, :, None, 1] * g[:, None, :, 1])
    return area, g, ke


@njit(cache=True)
def _p1_kernel(vertices, triangles, l11, l22, area, g, ke):
    for t in range(triangles.shape[0]):
        i0 = triangles[t, 0]
        i1 = triangles[t, 1]
        i2 = triangles[t, 2]
        x0 = vertices[i0, 0]
        y0 = vertices[i0, 1]
        x1 = vertices[i1, 0]
        y1 = vertices[i1, 1]
        x2 = vertices[i2, 0]
        y2 = vertices[i2, 1]
        det = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        area[t] = 0.5 * det
        g[t, 0, 0] = -(y2 - y1) / det
        g[t, 0, 1] = (x2 - x1) / det
        g[t, 1, 0] = -(y0 - y2) / det
        g[t, 1, 1] = (x0 - x2) / det
        g[t, 2, 0] = -(y1 - y0) / det
        g[t, 2, 1] = (x1 - x0) / det
        for a in range(3):
            for b in range(3):
                ke[t, a, b] = area[t] * (l11 * g[t, a, 0] * g[t, b, 0] + l22 * g[t, a, 1] * g[t, b, 1])


def p1_element_matrices_nb(vertices, triangles, l11, l22):
    nt = len(triangles)
    area = np.empty(nt)
    g = np.empty((nt, 3, 2))
    ke = np.empty((nt, 3, 3))
    _p1_kernel(np.ascontiguousarray(vertices, dtype=float),
               np.ascontiguousarray(triangles, dtype=np.int64), float(l11), float(l22), area, g, ke)
    return area, g, ke


def vertex_average_np(triangles, area, elem_values, n_vertices):
    """Area-weighted average of element values at the vertices (lumped L2
    projection of a piecewise-constant field)."""
    k = elem_values.shape[1]
    acc = np.zeros((n_vertices, k))
    wsum = np.zeros(n_vertices)
    for a in range(3):
        np.add.at(acc, triangles[:, a], area[:, None] * elem_values)
        np.add.at(wsum, triangles[:, a], area)
    return acc / wsum[:, None]


@njit(cache=True)
def _vertex_average_kernel(triangles, area, vals, acc, wsum):
    for t in range(triangles.shape[0]):
        for a in range(3):
            v = triangles[t, a]
            wsum[v] += area[t]
            for c in range(vals.shape[1]):
                acc[v, c] += area[t] * vals[t, c]
    for v in range(acc.shape[0]):
        for c in range(acc.shape[1]):
            acc[v, c] /= wsum[v]


def vertex_average_nb(triangles, area, elem_values, n_vertices):
    acc = np.zeros((n_vertices, elem_values.shape[1]))
    wsum = np.zeros(n_vertices)
    _vertex_average_kernel(np.ascontiguousarray(triangles, dtype=np.int64),
                           np.ascontiguousarray(area, dtype=float),
                           np.ascontiguousarray(elem_values, dtype=float), acc, wsum)
    return acc


if USE_NUMBA:
    strain_sum = strain_sum_nb
    partition_weight = partition_weight_nb
    p1_element_matrices = p1_element_matrices_nb
    vertex_average = vertex_average_nb
else:
    strain_sum = strain_sum_np
    partition_weight = partition_weight_np
    p1_element_matrices = p1_element_matrices_np
    vertex_average = vertex_average_np
