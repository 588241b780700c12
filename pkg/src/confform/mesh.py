"""Triangle meshes of compact orientable surfaces with a single boundary loop.

A :class:`TriangleMesh` stores connectivity and the base edge lengths. Vertex
positions are kept only when the mesh came from an embedding (OFF files and the
procedural generators); every downstream computation uses edge lengths alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class MeshError(ValueError):
    """Invalid mesh input (malformed file, bad topology, degenerate geometry)."""


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertex_count: int
    triangles: np.ndarray  # (F, 3) int, consistently oriented
    edges: np.ndarray  # (E, 2) int, sorted rows, i < j
    edge_lengths: np.ndarray  # (E,)
    face_edges: np.ndarray  # (F, 3): edge opposite corner 0, 1, 2
    boundary_loop: np.ndarray  # cyclically ordered boundary vertices
    positions: np.ndarray | None = field(default=None, repr=False)

    @property
    def face_count(self) -> int:
        return len(self.triangles)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.vertex_count, dtype=bool)
        mask[self.boundary_loop] = True
        return mask

    @property
    def corner_lengths(self) -> np.ndarray:
        """(F, 3) lengths of the edge opposite each corner."""
        return self.edge_lengths[self.face_edges]

    def boundary_edge_lengths(self) -> np.ndarray:
        """Length of boundary edge (loop[i], loop[i+1]) for each i."""
        loop = self.boundary_loop
        nxt = np.roll(loop, -1)
        return self.edge_lengths[self._edge_ids(loop, nxt)]

    def _edge_ids(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        lo = np.minimum(a, b).astype(np.int64)
        hi = np.maximum(a, b).astype(np.int64)
        keys = lo * self.vertex_count + hi
        table = self.edges[:, 0].astype(np.int64) * self.vertex_count + self.edges[:, 1]
        idx = np.searchsorted(table, keys)
        return idx

    # -- construction ---------------------------------------------------

    @classmethod
    def from_positions(cls, positions, triangles) -> "TriangleMesh":
        positions = np.asarray(positions, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        edges, face_edges = _edge_table(triangles, len(positions))
        lengths = np.linalg.norm(positions[edges[:, 0]] - positions[edges[:, 1]], axis=1)
        return cls._build(len(positions), triangles, edges, face_edges, lengths, positions)

    @classmethod
    def from_lengths(cls, vertex_count: int, triangles, length_of) -> "TriangleMesh":
        """Build from an intrinsic metric; ``length_of(i, j)`` gives edge lengths."""
        triangles = np.asarray(triangles, dtype=np.int64)
        edges, face_edges = _edge_table(triangles, vertex_count)
        lengths = np.array([length_of(int(i), int(j)) for i, j in edges], dtype=float)
        return cls._build(vertex_count, triangles, edges, face_edges, lengths, None)

    @classmethod
    def _build(cls, nv, triangles, edges, face_edges, lengths, positions):
        if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
            raise MeshError("mesh needs at least one triangle given as index triples")
        if triangles.min() < 0 or triangles.max() >= nv:
            raise MeshError("triangle references a vertex index out of range")
        if np.any(triangles[:, 0] == triangles[:, 1]) or np.any(triangles[:, 1] == triangles[:, 2]) \
                or np.any(triangles[:, 0] == triangles[:, 2]):
            raise MeshError("triangle with repeated vertex")
        used = np.zeros(nv, dtype=bool)
        used[triangles.ravel()] = True
        if not used.all():
            raise MeshError(f"isolated vertex {int(np.flatnonzero(~used)[0])}")
        if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
            raise MeshError("edge lengths must be positive and finite")

        loop = _boundary_loop(triangles, edges, face_edges, nv)

        graph = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(nv, nv))
        ncomp, _ = connected_components(graph, directed=False)
        if ncomp != 1:
            raise MeshError(f"mesh is not connected ({ncomp} components)")

        mesh = cls(nv, triangles, edges, lengths, face_edges, loop,
                   None if positions is None else np.asarray(positions, dtype=float))
        _check_triangle_inequalities(mesh)
        return mesh


def _edge_table(triangles: np.ndarray, nv: int):
    # corner k is opposite the edge (t[k+1], t[k+2])
    a = triangles[:, [1, 2, 0]].ravel()
    b = triangles[:, [2, 0, 1]].ravel()
    lo = np.minimum(a, b).astype(np.int64)
    hi = np.maximum(a, b).astype(np.int64)
    keys = lo * nv + hi
    uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    if np.any(counts > 2):
        bad = uniq[counts > 2][0]
        raise MeshError(f"non-manifold edge ({bad // nv}, {bad % nv}) has more than 2 incident faces")
    edges = np.stack([uniq // nv, uniq % nv], axis=1)
    face_edges = inverse.reshape(-1, 3)
    return edges, face_edges


def _boundary_loop(triangles, edges, face_edges, nv) -> np.ndarray:
    a = triangles.ravel()
    b = triangles[:, [1, 2, 0]].ravel()
    directed = a.astype(np.int64) * nv + b
    if len(np.unique(directed)) != len(directed):
        raise MeshError("faces are not consistently oriented (duplicate half-edge)")
    dset = set(directed.tolist())
    out: dict[int, int] = {}
    for i, j in zip(a.tolist(), b.tolist()):
        if j * nv + i in dset:
            continue
        if i in out:
            raise MeshError(f"non-manifold boundary vertex {i}")
        out[i] = j
    if not out:
        raise MeshError("zero boundary components")

    loops = []
    remaining = dict(out)
    while remaining:
        start = min(remaining)
        loop = [start]
        cur = remaining.pop(start)
        while cur != start:
            loop.append(cur)
            cur = remaining.pop(cur)
        loops.append(loop)
    if len(loops) > 1:
        raise MeshError(f"more than one boundary component ({len(loops)} loops)")
    return np.array(loops[0], dtype=np.int64)


def _check_triangle_inequalities(mesh: TriangleMesh) -> None:
    la, lb, lc = mesh.corner_lengths.T
    ok = (la < lb + lc) & (lb < la + lc) & (lc < la + lb)
    if not ok.all():
        f = int(np.flatnonzero(~ok)[0])
        raise MeshError(f"triangle {f} violates the strict triangle inequality")


def euler_characteristic(mesh: TriangleMesh) -> int:
    return mesh.vertex_count - mesh.edge_count + mesh.face_count


def genus(mesh: TriangleMesh) -> int:
    """Genus of a surface with one boundary loop, from chi = 2 - 2g - 1."""
    return (1 - euler_characteristic(mesh)) // 2


# -- OFF I/O ---------------------------------------------------------------

def _off_tokens(text: str) -> list[str]:
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    return tokens


def load_mesh(path) -> TriangleMesh:
    """Read an ASCII OFF file of triangles; edge lengths come from coordinates."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshError(f"cannot read {path}: {exc}") from exc
    tokens = _off_tokens(text)
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4
        coords = np.array(tokens[pos:pos + 3 * nv], dtype=float)
        if len(coords) != 3 * nv:
            raise MeshError(f"{path}: truncated vertex block")
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            n = int(tokens[pos])
            if n != 3:
                raise MeshError(f"{path}: only triangular faces are supported (got {n}-gon)")
            faces.append([int(t) for t in tokens[pos + 1:pos + 4]])
            if len(faces[-1]) != 3:
                raise MeshError(f"{path}: truncated face block")
            pos += 4
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: malformed OFF file ({exc})") from exc
    return TriangleMesh.from_positions(coords.reshape(nv, 3), np.array(faces, dtype=np.int64))


def write_off(mesh: TriangleMesh, path) -> None:
    if mesh.positions is None:
        raise MeshError("mesh has no embedding; OFF output needs vertex coordinates")
    lines = ["OFF", f"{mesh.vertex_count} {mesh.face_count} {mesh.edge_count}"]
    lines += [" ".join(f"{x:.9g}" for x in p) for p in mesh.positions]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


# -- procedural surfaces ------------------------------------------------------

def _torus_grid(major_radius, minor_radius, nu, nv, center=(0.0, 0.0, 0.0)):
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    theta = 2 * np.pi * i / nu
    phi = 2 * np.pi * j / nv
    ring = major_radius + minor_radius * np.cos(phi)
    pos = np.stack([ring * np.cos(theta), ring * np.sin(theta), minor_radius * np.sin(phi)], axis=-1)
    pos = pos.reshape(-1, 3) + np.asarray(center, dtype=float)

    def vid(a, b):
        return (a % nu) * nv + (b % nv)

    tris, cells = [], []
    for a in range(nu):
        for b in range(nv):
            v00, v10, v11, v01 = vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
            cells += [(a + 2 / 3, b + 1 / 3), (a + 1 / 3, b + 2 / 3)]
    return pos, np.array(tris, dtype=np.int64), np.array(cells)


def _hole_order(centroids: np.ndarray, nu: int, nv: int) -> np.ndarray:
    """Triangles sorted by grid distance from vertex (0, 0).

    Chebyshev distance first, so that 8*m**2 faces is exactly a 2m x 2m block of
    cells; Euclidean distance breaks ties, so the first 6 faces are the star.
    """
    du = (centroids[:, 0] + nu / 2) % nu - nu / 2
    dv = (centroids[:, 1] + nv / 2) % nv - nv / 2
    cheb = np.maximum(np.abs(du), np.abs(dv))
    eucl = np.hypot(du, dv)
    return np.lexsort((np.arange(len(centroids)), np.round(eucl, 12), np.round(cheb, 12)))


def _compact(positions, triangles):
    used = np.unique(triangles)
    remap = -np.ones(len(positions), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return positions[used], remap[triangles]


def _remove_faces(positions, triangles, drop) -> TriangleMesh:
    keep = np.ones(len(triangles), dtype=bool)
    keep[drop] = False
    if not keep.any():
        raise MeshError("hole removal disconnects mesh (no faces left)")
    pos, tris = _compact(positions, triangles[keep])
    try:
        return TriangleMesh.from_positions(pos, tris)
    except MeshError as exc:
        msg = str(exc)
        if "not connected" in msg:
            raise MeshError(f"hole removal disconnects mesh: {msg}") from exc
        if "boundary" in msg:
            raise MeshError(f"hole removal creates second boundary loop: {msg}") from exc
        raise


def generate_torus_with_hole(major_radius: float = 2.0, minor_radius: float = 0.7,
                             nu: int = 24, nv: int = 12, hole_faces: int = 6) -> TriangleMesh:
    """Grid torus in 3-space with a patch of ``hole_faces`` triangles cut out.

    The patch grows outward from vertex (0, 0): 6 faces remove one vertex star,
    ``8*m**2`` faces remove a 2m x 2m block of grid cells, which keeps the hole's
    shape fixed under refinement when m scales with the grid.
    """
    if not (major_radius > minor_radius > 0):
        raise MeshError("need major_radius > minor_radius > 0")
    if nu < 8 or nv < 8:
        raise MeshError("nu and nv must be at least 8")
    if hole_faces < 1:
        raise MeshError("hole_faces must be at least 1")
    pos, tris, cells = _torus_grid(major_radius, minor_radius, nu, nv)
    if hole_faces >= len(tris):
        raise MeshError("hole removal disconnects mesh (hole covers the whole torus)")
    order = _hole_order(cells, nu, nv)
    mesh = _remove_faces(pos, tris, order[:hole_faces])
    if euler_characteristic(mesh) != -1:
        raise MeshError(f"hole removal changed topology (chi = {euler_characteristic(mesh)})")
    return mesh


def generate_torus_with_round_hole(major_radius: float = 2.0, minor_radius: float = 0.7,
                                   n: int = 24, hole_radius: float = 2.0,
                                   layers: int | None = None) -> TriangleMesh:
    """Torus minus a disk of fixed angular radius, with a smooth polygonal boundary.

    The angle square [-pi, pi)^2 minus the disk is meshed by an O-grid: 4n
    rays from the hole circle to the square (n segments per side, so opposite
    sides match under the torus identification) and ``layers`` rings (default
    n). Refining n leaves the hole shape unchanged, unlike removing a fixed
    number of faces, and the boundary has no corners.
    """
    if not (major_radius > minor_radius > 0):
        raise MeshError("need major_radius > minor_radius > 0")
    if n < 4:
        raise MeshError("n must be at least 4")
    if not 0 < hole_radius < math.pi * 0.9:
        raise MeshError("hole_radius must lie in (0, 0.9 pi)")
    nt = layers if layers is not None else n
    # square perimeter, counter-clockwise from corner (pi, -pi), n segments per side
    s = -math.pi + 2 * math.pi * np.arange(n) / n
    square = np.concatenate([
        np.stack([np.full(n, math.pi), s], 1),
        np.stack([-s, np.full(n, math.pi)], 1),
        np.stack([np.full(n, -math.pi), -s], 1),
        np.stack([s, np.full(n, -math.pi)], 1),
    ])
    ang = np.arctan2(square[:, 1], square[:, 0])
    circle = hole_radius * np.stack([np.cos(ang), np.sin(ang)], 1)
    m = len(square)

    t = np.arange(nt + 1) / nt
    param = (1 - t)[:, None, None] * circle[None] + t[:, None, None] * square[None]  # (nt+1, m, 2)
    param = param.reshape(-1, 2)

    # the outer ring lies on the square and is glued by periodicity
    key = {}
    ids = np.empty(len(param), dtype=np.int64)
    for idx, (x, y) in enumerate(param):
        if idx >= nt * m:
            kx = round(((x + math.pi) % (2 * math.pi)) / (2 * math.pi) * n) % n
            ky = round(((y + math.pi) % (2 * math.pi)) / (2 * math.pi) * n) % n
            k = ("edge", kx, ky)
        else:
            k = ("in", idx)
        ids[idx] = key.setdefault(k, len(key))
    first = {}
    for idx, v in enumerate(ids):
        first.setdefault(v, idx)
    th, ph = param[[first[v] for v in range(len(key))]].T
    ring = major_radius + minor_radius * np.cos(ph)
    pos = np.stack([ring * np.cos(th), ring * np.sin(th), minor_radius * np.sin(ph)], 1)

    def node(i, j):
        return i * m + (j % m)

    tris = []
    for i in range(nt):
        for j in range(m):
            a, b, c, d = node(i, j), node(i, j + 1), node(i + 1, j + 1), node(i + 1, j)
            pa, pc = pos[ids[a]], pos[ids[c]]
            pb, pd = pos[ids[b]], pos[ids[d]]
            pair = [(a, b, c), (a, c, d)] if np.linalg.norm(pa - pc) <= np.linalg.norm(pb - pd) \
                else [(a, b, d), (b, c, d)]
            for tri in pair:
                p = param[list(tri)]
                area2 = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
                tri = tri if area2 > 0 else (tri[0], tri[2], tri[1])
                tris.append([ids[v] for v in tri])
    mesh = TriangleMesh.from_positions(pos, np.array(tris, dtype=np.int64))
    if euler_characteristic(mesh) != -1:
        raise MeshError("round-hole torus construction failed")
    return mesh


def generate_double_torus_with_hole(major_radius: float = 2.0, minor_radius: float = 0.7,
                                    nu: int = 16, nv: int = 8, separation: float = 0.6) -> TriangleMesh:
    """Genus-2 surface with one boundary loop (chi = -3).

    Two grid tori face each other along the x-axis; a vertex star is removed from
    each facing side and the two hexagonal holes are joined by a ring of
    triangles. A third star is removed elsewhere to make the boundary.
    """
    if nu < 8 or nv < 8 or nu % 2:
        raise MeshError("need even nu >= 8 and nv >= 8")
    offset = major_radius + minor_radius + separation / 2
    pa, ta, ca = _torus_grid(major_radius, minor_radius, nu, nv, center=(-offset, 0, 0))
    pb, tb, cb = _torus_grid(major_radius, minor_radius, nu, nv, center=(offset, 0, 0))
    # torus A faces +x at theta = 0; torus B faces -x at theta = pi
    star_a = _hole_order(ca, nu, nv)[:6]
    shifted = cb.copy()
    shifted[:, 0] -= nu // 2
    star_b = _hole_order(shifted, nu, nv)[:6]
    # boundary hole on torus A, opposite side (theta = pi)
    shifted_a = ca.copy()
    shifted_a[:, 0] -= nu // 2
    hole = _hole_order(shifted_a, nu, nv)[:6]

    keep_a = np.ones(len(ta), dtype=bool)
    keep_a[np.concatenate([star_a, hole])] = False
    keep_b = np.ones(len(tb), dtype=bool)
    keep_b[star_b] = False
    na = len(pa)
    tris = np.concatenate([ta[keep_a], tb[keep_b] + na])
    pos = np.concatenate([pa, pb])

    loop_a = _hex_loop(ta[star_a])
    loop_b = _hex_loop(tb[star_b]) + na
    tube = _tube(loop_a, loop_b, pos)
    pos, tris = _compact(pos, np.concatenate([tris, tube]))
    mesh = TriangleMesh.from_positions(pos, tris)
    if euler_characteristic(mesh) != -3:
        raise MeshError("double torus construction failed")
    return mesh


def _hex_loop(star: np.ndarray) -> np.ndarray:
    """Outer cycle of a vertex star, in the direction the removed faces ran."""
    center = np.bincount(star.ravel()).argmax()
    nxt = {}
    for t in star:
        k = int(np.flatnonzero(t == center)[0])
        nxt[int(t[(k + 1) % 3])] = int(t[(k + 2) % 3])
    start = min(nxt)
    loop = [start]
    while nxt[loop[-1]] != start:
        loop.append(nxt[loop[-1]])
    return np.array(loop, dtype=np.int64)


def _tube(loop_a: np.ndarray, loop_b: np.ndarray, pos: np.ndarray) -> np.ndarray:
    # the hole in A is bounded by half-edges running opposite to loop_a; the tube
    # must use loop_a's direction, and the reverse of loop_b's direction
    n = len(loop_a)
    rb = loop_b[::-1]
    # align rb to loop_a by minimal total connection length
    best = min(range(n), key=lambda s: sum(
        np.linalg.norm(pos[loop_a[i]] - pos[rb[(i + s) % n]]) for i in range(n)))
    rb = np.roll(rb, -best)
    tris = []
    for i in range(n):
        a0, a1 = loop_a[i], loop_a[(i + 1) % n]
        b0, b1 = rb[i], rb[(i + 1) % n]
        tris.append((a0, a1, b1))
        tris.append((a0, b1, b0))
    return np.array(tris, dtype=np.int64)


def generate_flat_square() -> TriangleMesh:
    pos = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    return TriangleMesh.from_positions(pos, [[0, 1, 2], [0, 2, 3]])


def generate_flat_disk(n_rings: int = 4, n_sectors: int = 12, radius: float = 1.0) -> TriangleMesh:
    """Polar-grid triangulation of a flat disk (chi = 1)."""
    pos = [[0.0, 0.0, 0.0]]
    for r in range(1, n_rings + 1):
        for s in range(n_sectors * r):
            ang = 2 * math.pi * s / (n_sectors * r)
            pos.append([radius * r / n_rings * math.cos(ang), radius * r / n_rings * math.sin(ang), 0.0])
    pos = np.array(pos)
    # Delaunay is exact enough for this convex point set
    from scipy.spatial import Delaunay

    tri = Delaunay(pos[:, :2]).simplices
    a, b, c = pos[tri[:, 0], :2], pos[tri[:, 1], :2], pos[tri[:, 2], :2]
    cross = (b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0]
    tri = np.where((cross < 0)[:, None], tri[:, [0, 2, 1]], tri)
    return TriangleMesh.from_positions(pos, tri)
