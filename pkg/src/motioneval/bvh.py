"""AABB bounding-volume hierarchy with exact triangle-triangle tests.

Median-split tree over the longest box axis, at most 4 triangles per leaf.
Intersection uses a Moller-style interval test (coplanar overlap included)
with a 1e-9 m tolerance; touching at a single point does not count.

Pairs sharing a vertex index are never counted -- adjacent faces of any
closed mesh would otherwise self-collide at their common edges.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMesh

LEAF_SIZE = 4
TOUCH_TOL = 1e-9          # meters: required interior overlap along the crossing line
DEGENERATE_NORMAL = 1e-14  # cross-product norm below this = zero-area triangle
DEGENERATE_FRACTION = 0.01  # reject meshes with more degenerate faces than this


@dataclass
class TriangleBVH:
    node_min: np.ndarray    # (n, 3)
    node_max: np.ndarray    # (n, 3)
    node_left: np.ndarray   # (n,) child index, -1 at leaves
    node_right: np.ndarray  # (n,)
    node_start: np.ndarray  # (n,) leaf range into tri_order
    node_count: np.ndarray  # (n,)
    tri_order: np.ndarray   # (F,) permutation, leaf-contiguous
    tri_verts: np.ndarray   # (F, 3, 3) original index space
    tri_min: np.ndarray     # (F, 3)
    tri_max: np.ndarray     # (F, 3)
    faces: np.ndarray       # (F, 3)

    @property
    def num_nodes(self):
        return self.node_min.shape[0]

    @property
    def num_triangles(self):
        return self.faces.shape[0]

    def depth(self):
        best = 0
        stack = [(0, 1)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.node_left[node] >= 0:
                stack.append((self.node_left[node], d + 1))
                stack.append((self.node_right[node], d + 1))
        return best


def _check_mesh(vertices, faces):
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    if faces.ndim != 2 or faces.shape[1] != 3 or faces.shape[0] == 0:
        raise DegenerateMesh(f"faces shape {faces.shape}")
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise DegenerateMesh(f"vertices shape {vertices.shape}")
    if not np.all(np.isfinite(vertices)):
        raise DegenerateMesh("non-finite vertex coordinates")
    if faces.min() < 0 or faces.max() >= vertices.shape[0]:
        raise DegenerateMesh("face indices out of vertex range")
    tri = vertices[faces]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    degenerate = np.linalg.norm(normals, axis=1) < DEGENERATE_NORMAL
    if degenerate.mean() > DEGENERATE_FRACTION:
        raise DegenerateMesh(f"{int(degenerate.sum())}/{len(faces)} zero-area faces")
    return vertices, faces, tri


def build(vertices, faces, leaf_size=LEAF_SIZE) -> TriangleBVH:
    """Deterministic median-split construction over the longest box axis."""
    vertices, faces, tri = _check_mesh(vertices, faces)
    num_tris = faces.shape[0]
    tri_min = tri.min(axis=1)
    tri_max = tri.max(axis=1)
    centroid = (tri_min + tri_max) * 0.5
    order = np.arange(num_tris)

    node_min, node_max = [], []
    node_left, node_right = [], []
    node_start, node_count = [], []

    def _node(lo, hi):
        idx = len(node_min)
        seg = order[lo:hi]
        node_min.append(tri_min[seg].min(axis=0))
        node_max.append(tri_max[seg].max(axis=0))
        node_left.append(-1)
        node_right.append(-1)
        node_start.append(lo)
        node_count.append(hi - lo)
        if hi - lo > leaf_size:
            axis = int(np.argmax(node_max[idx] - node_min[idx]))
            perm = np.argsort(centroid[seg, axis], kind="stable")
            order[lo:hi] = seg[perm]
            mid = lo + (hi - lo) // 2
            node_left[idx] = _node(lo, mid)
            node_right[idx] = _node(mid, hi)
        return idx

    _node(0, num_tris)
    return TriangleBVH(
        node_min=np.array(node_min),
        node_max=np.array(node_max),
        node_left=np.array(node_left),
        node_right=np.array(node_right),
        node_start=np.array(node_start),
        node_count=np.array(node_count),
        tri_order=order,
        tri_verts=tri,
        tri_min=tri_min,
        tri_max=tri_max,
        faces=faces,
    )


# ---------------------------------------------------------------------------
# Exact triangle-triangle predicate (vectorized over pair batches)
# ---------------------------------------------------------------------------

_EDGES = ((0, 1), (1, 2), (2, 0))


def _plane_distances(tri, origin, normal, tol):
    """Signed distances of tri's vertices to the plane (origin, unit normal)."""
    d = np.einsum("pkj,pj->pk", tri - origin[:, None, :], normal)
    d[np.abs(d) <= tol] = 0.0
    return d


def _line_interval(tri, dist, direction):
    """Projection interval of (triangle intersect plane) onto `direction`.

    Candidate points: vertices lying on the plane, and crossing points of
    edges whose endpoints sit strictly on opposite sides.
    """
    n = tri.shape[0]
    tvals = np.full((n, 6), np.nan)
    valid = np.zeros((n, 6), dtype=bool)

    proj = np.einsum("pkj,pj->pk", tri, direction)  # (n, 3) vertex projections
    for k in range(3):
        on_plane = dist[:, k] == 0.0
        tvals[:, k] = proj[:, k]
        valid[:, k] = on_plane

    for e, (i, j) in enumerate(_EDGES):
        di, dj = dist[:, i], dist[:, j]
        crossing = di * dj < 0.0
        denom = np.where(crossing, di - dj, 1.0)
        frac = np.where(crossing, di / denom, 0.0)
        point = tri[:, i, :] + (tri[:, j, :] - tri[:, i, :]) * frac[:, None]
        tvals[:, 3 + e] = np.einsum("pj,pj->p", point, direction)
        valid[:, 3 + e] = crossing

    lo = np.min(np.where(valid, tvals, np.inf), axis=1)
    hi = np.max(np.where(valid, tvals, -np.inf), axis=1)
    return lo, hi, valid.any(axis=1)


def _coplanar_overlap_2d(tri_a, tri_b, axis_weight, tol):
    """Strict 2D overlap of coplanar triangles, projected along the dominant normal axis."""
    n = tri_a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=bool)
    drop = np.argmax(axis_weight, axis=1)
    keep = np.array([[1, 2], [0, 2], [0, 1]])[drop]  # (n, 2)
    rows = np.arange(n)[:, None, None]
    a2 = tri_a[rows, np.arange(3)[None, :, None], keep[:, None, :]]  # (n, 3, 2)
    b2 = tri_b[rows, np.arange(3)[None, :, None], keep[:, None, :]]

    overlapping = np.ones(n, dtype=bool)
    for tri in (a2, b2):
        for i, j in _EDGES:
            edge = tri[:, j, :] - tri[:, i, :]
            axis = np.stack([-edge[:, 1], edge[:, 0]], axis=1)
            # normalize so the touch tolerance stays metric
            length = np.linalg.norm(axis, axis=1)
            axis = axis / np.where(length < 1e-300, 1.0, length)[:, None]
            pa = np.einsum("pkj,pj->pk", a2, axis)
            pb = np.einsum("pkj,pj->pk", b2, axis)
            strict = (pa.max(axis=1) > pb.min(axis=1) + tol) & (pb.max(axis=1) > pa.min(axis=1) + tol)
            overlapping &= strict | (length < 1e-300)
    return overlapping


def triangles_intersect(tri_a, tri_b, tol=TOUCH_TOL):
    """Exact intersection test for batches of triangle pairs.

    tri_a, tri_b: (N, 3, 3). Returns (N,) bool. Symmetric in its arguments;
    zero-area triangles never intersect anything.
    """
    tri_a = np.asarray(tri_a, dtype=np.float64)
    tri_b = np.asarray(tri_b, dtype=np.float64)
    n = tri_a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=bool)

    n1 = np.cross(tri_a[:, 1] - tri_a[:, 0], tri_a[:, 2] - tri_a[:, 0])
    n2 = np.cross(tri_b[:, 1] - tri_b[:, 0], tri_b[:, 2] - tri_b[:, 0])
    len1 = np.linalg.norm(n1, axis=1)
    len2 = np.linalg.norm(n2, axis=1)
    degenerate = (len1 < DEGENERATE_NORMAL) | (len2 < DEGENERATE_NORMAL)
    n1u = n1 / np.where(degenerate, 1.0, len1)[:, None]
    n2u = n2 / np.where(degenerate, 1.0, len2)[:, None]

    dist_a = _plane_distances(tri_a, tri_b[:, 0, :], n2u, tol)  # A verts vs plane B
    dist_b = _plane_distances(tri_b, tri_a[:, 0, :], n1u, tol)  # B verts vs plane A

    separated = ((dist_a > 0).all(axis=1) | (dist_a < 0).all(axis=1)
                 | (dist_b > 0).all(axis=1) | (dist_b < 0).all(axis=1))
    coplanar = ((dist_a == 0).all(axis=1) | (dist_b == 0).all(axis=1)) & ~degenerate

    result = np.zeros(n, dtype=bool)

    crossing = ~degenerate & ~coplanar & ~separated
    if crossing.any():
        direction = np.cross(n1u[crossing], n2u[crossing])
        dlen = np.linalg.norm(direction, axis=1)
        usable = dlen > 1e-15
        direction = direction / np.where(usable, dlen, 1.0)[:, None]
        lo_a, hi_a, ok_a = _line_interval(tri_a[crossing], dist_a[crossing], direction)
        lo_b, hi_b, ok_b = _line_interval(tri_b[crossing], dist_b[crossing], direction)
        overlap = np.minimum(hi_a, hi_b) - np.maximum(lo_a, lo_b)
        result[crossing] = usable & ok_a & ok_b & (overlap > tol)

    if coplanar.any():
        weight = np.abs(n1u[coplanar]) + np.abs(n2u[coplanar])
        result[coplanar] = _coplanar_overlap_2d(tri_a[coplanar], tri_b[coplanar], weight, tol)

    return result


# ---------------------------------------------------------------------------
# Pair counting
# ---------------------------------------------------------------------------

def _shares_vertex(faces, ii, jj):
    fa = faces[ii]  # (P, 3)
    fb = faces[jj]
    return (fa[:, :, None] == fb[:, None, :]).any(axis=(1, 2))


def _count_exact(faces, tri, ii, jj):
    if ii.size == 0:
        return 0
    keep = ~_shares_vertex(faces, ii, jj)
    ii, jj = ii[keep], jj[keep]
    if ii.size == 0:
        return 0
    hits = triangles_intersect(tri[ii], tri[jj])
    return int(np.count_nonzero(hits))


def count_colliding_pairs(bvh: TriangleBVH) -> int:
    """Unordered intersecting pairs (i < j, no shared vertex index), box-pruned."""
    node_min, node_max = bvh.node_min, bvh.node_max
    left, right = bvh.node_left, bvh.node_right
    start, count = bvh.node_start, bvh.node_count
    order = bvh.tri_order
    tri_min, tri_max = bvh.tri_min, bvh.tri_max

    cand_i, cand_j = [], []
    stack = [(0, 0)]
    while stack:
        a, b = stack.pop()
        if a == b:
            if left[a] < 0:
                seg = order[start[a]:start[a] + count[a]]
                for x in range(len(seg)):
                    for y in range(x + 1, len(seg)):
                        cand_i.append(seg[x])
                        cand_j.append(seg[y])
            else:
                stack.append((left[a], left[a]))
                stack.append((right[a], right[a]))
                stack.append((left[a], right[a]))
            continue

        if (node_min[a][0] > node_max[b][0] or node_min[b][0] > node_max[a][0]
                or node_min[a][1] > node_max[b][1] or node_min[b][1] > node_max[a][1]
                or node_min[a][2] > node_max[b][2] or node_min[b][2] > node_max[a][2]):
            continue

        a_leaf = left[a] < 0
        b_leaf = left[b] < 0
        if a_leaf and b_leaf:
            seg_a = order[start[a]:start[a] + count[a]]
            seg_b = order[start[b]:start[b] + count[b]]
            for x in seg_a:
                for y in seg_b:
                    cand_i.append(x)
                    cand_j.append(y)
        elif a_leaf:
            stack.append((a, left[b]))
            stack.append((a, right[b]))
        else:
            stack.append((left[a], b))
            stack.append((right[a], b))

    if not cand_i:
        return 0
    ii = np.array(cand_i, dtype=np.int64)
    jj = np.array(cand_j, dtype=np.int64)
    ii, jj = np.minimum(ii, jj), np.maximum(ii, jj)

    # cheap per-triangle AABB rejection before the exact test
    boxed = np.all(tri_min[ii] <= tri_max[jj], axis=1) & np.all(tri_min[jj] <= tri_max[ii], axis=1)
    return _count_exact(bvh.faces, bvh.tri_verts, ii[boxed], jj[boxed])


def count_colliding_pairs_bruteforce(vertices, faces) -> int:
    """O(F^2) reference: every i < j pair goes through the exact test."""
    vertices, faces, tri = _check_mesh(vertices, faces)
    ii, jj = np.triu_indices(faces.shape[0], k=1)
    return _count_exact(faces, tri, ii, jj)
