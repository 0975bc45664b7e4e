"""Closed triangulated surfaces: loading, generation, validation, topology.

A :class:`TriMesh` is a closed (boundaryless), consistently oriented,
connected triangle mesh.  All invariants are checked at construction time,
so downstream modules can rely on them without re-validating.

Geometry may come from the embedded vertex positions or from explicitly
stored per-face edge lengths (used by the flat torus, whose quotient metric
has no isometric 3D embedding on a coarse grid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError


class TriMesh:
    """Closed oriented triangle mesh.

    Parameters
    ----------
    vertices : array_like, shape (V, 3)
        Vertex positions.
    faces : array_like, shape (F, 3)
        Vertex index triples with globally consistent winding.
    face_lengths : array_like, shape (F, 3), optional
        Edge lengths per face, entry ``k`` holding the length of the edge
        opposite corner ``k``.  When given, all metric quantities are taken
        from these lengths instead of the embedding (the positions then only
        serve as a placeholder for visualization).  Length positivity and
        triangle inequalities are validated when a metric is built, not here.

    Raises
    ------
    ValidationError
        If the mesh has a boundary edge, a non-manifold edge, inconsistent
        face orientation, a degenerate face, or is disconnected.
    """

    def __init__(self, vertices, faces, face_lengths=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = np.asarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValidationError("vertices must have shape (V, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValidationError("faces must have shape (F, 3)")
        if not np.isfinite(self.vertices).all():
            raise ValidationError("non-finite vertex position")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValidationError("face index out of range")
        if face_lengths is not None:
            face_lengths = np.asarray(face_lengths, dtype=float)
            if face_lengths.shape != self.faces.shape:
                raise ValidationError("face_lengths must have shape (F, 3)")
        self._face_lengths = face_lengths

        self._validate_topology()
        if face_lengths is None:
            self._validate_embedded_areas()

        self.edges = self._build_edges()
        self.vertices.flags.writeable = False
        self.faces.flags.writeable = False
        if self._face_lengths is not None:
            self._face_lengths.flags.writeable = False

    # -- validation -------------------------------------------------------

    def _validate_topology(self):
        directed = {}
        undirected = {}
        for fi, (a, b, c) in enumerate(self.faces):
            if a == b or b == c or a == c:
                raise ValidationError("degenerate face with repeated vertex", index=fi)
            for u, v in ((a, b), (b, c), (c, a)):
                if (u, v) in directed:
                    raise ValidationError(
                        "directed edge used twice: inconsistent orientation or "
                        "non-manifold edge", index=fi)
                directed[(u, v)] = fi
                key = (u, v) if u < v else (v, u)
                undirected[key] = undirected.get(key, 0) + 1
        for (u, v), count in undirected.items():
            if count == 1:
                raise ValidationError(f"boundary edge ({u},{v}): surface is not closed",
                                      index=(int(u), int(v)))
            if count > 2:
                raise ValidationError(f"non-manifold edge ({u},{v}) shared by {count} faces",
                                      index=(int(u), int(v)))
        # connectivity over the vertex graph
        nv = len(self.vertices)
        if nv:
            adj = [[] for _ in range(nv)]
            for u, v in undirected:
                adj[u].append(v)
                adj[v].append(u)
            seen = np.zeros(nv, dtype=bool)
            stack = [0]
            seen[0] = True
            while stack:
                w = stack.pop()
                for x in adj[w]:
                    if not seen[x]:
                        seen[x] = True
                        stack.append(x)
            if not seen.all():
                raise ValidationError("mesh is disconnected", index=int(np.flatnonzero(~seen)[0]))

    def _validate_embedded_areas(self):
        p = self.vertices[self.faces]
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        lmax = np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2).max(axis=1)
        bad = np.flatnonzero(areas <= 1e-12 * lmax**2)
        if bad.size:
            raise ValidationError("degenerate face with (near-)zero area", index=int(bad[0]))

    def _build_edges(self):
        f = self.faces
        pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        pairs.sort(axis=1)
        edges = np.unique(pairs, axis=0)
        edges.flags.writeable = False
        return edges

    # -- basic counts -----------------------------------------------------

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @property
    def face_lengths(self) -> np.ndarray:
        """Per-face edge lengths, entry k opposite corner k; shape (F, 3)."""
        if self._face_lengths is not None:
            return self._face_lengths
        p = self.vertices[self.faces]
        lengths = np.stack([
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
        ], axis=1)
        lengths.flags.writeable = False
        return lengths

    @property
    def has_length_metric(self) -> bool:
        return self._face_lengths is not None


@dataclass(frozen=True)
class Topology:
    """Simplex counts and derived topological invariants."""

    V: int
    E: int
    F: int
    chi: int
    genus: int


def topology(mesh: TriMesh) -> Topology:
    """Euler characteristic and genus of a closed oriented mesh."""
    V, E, F = mesh.vertex_count, mesh.edge_count, mesh.face_count
    chi = V - E + F
    if chi % 2:
        raise ValidationError(f"odd Euler characteristic {chi} on a closed oriented surface")
    return Topology(V=V, E=E, F=F, chi=chi, genus=(2 - chi) // 2)


# -- OFF interchange -------------------------------------------------------

def load_off(path) -> TriMesh:
    """Load a closed triangle mesh from an ASCII OFF file.

    Format: a line ``OFF``, a counts line ``V F E`` (E may be 0; it is
    recomputed), V vertex lines ``x y z``, then F face lines ``3 i j k``.
    """
    with open(path) as fh:
        raw = fh.readlines()
    lines = []
    for lineno, text in enumerate(raw, start=1):
        stripped = text.split("#", 1)[0].strip()
        if stripped:
            lines.append((lineno, stripped))
    if not lines:
        raise ParseError("empty OFF file")
    lineno, header = lines[0]
    if header != "OFF":
        raise ParseError(f"expected 'OFF' header, got {header!r}", line=lineno)
    if len(lines) < 2:
        raise ParseError("missing counts line")
    lineno, counts = lines[1]
    parts = counts.split()
    if len(parts) != 3:
        raise ParseError("counts line must be 'V F E'", line=lineno)
    try:
        nv, nf, _ = (int(p) for p in parts)
    except ValueError:
        raise ParseError("non-integer count", line=lineno) from None
    if len(lines) < 2 + nv + nf:
        raise ParseError(f"truncated file: expected {nv} vertex and {nf} face lines")

    vertices = np.empty((nv, 3))
    for i in range(nv):
        lineno, text = lines[2 + i]
        parts = text.split()
        if len(parts) != 3:
            raise ParseError("vertex line must have 3 coordinates", line=lineno)
        try:
            vertices[i] = [float(p) for p in parts]
        except ValueError:
            raise ParseError("non-numeric vertex coordinate", line=lineno) from None

    faces = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        lineno, text = lines[2 + nv + i]
        parts = text.split()
        if len(parts) != 4 or parts[0] != "3":
            raise ParseError("face line must be '3 i j k' (triangles only)", line=lineno)
        try:
            faces[i] = [int(p) for p in parts[1:]]
        except ValueError:
            raise ParseError("non-integer face index", line=lineno) from None

    return TriMesh(vertices, faces)


def write_off(mesh: TriMesh, path) -> None:
    """Write a mesh to an ASCII OFF file (positions only, 17 digits)."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.vertex_count} {mesh.face_count} {mesh.edge_count}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.faces:
            fh.write(f"3 {a} {b} {c}\n")


# -- generators ------------------------------------------------------------

_MAX_SUBDIVISIONS = 7

_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def _icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    return verts, np.array(_ICO_FACES, dtype=np.int64)


def generate_icosphere(subdivisions: int) -> TriMesh:
    """Icosahedron subdivided ``subdivisions`` times, projected to the unit
    sphere.  Each subdivision splits every face into 4 (V' = V + E, F' = 4F).
    """
    if not 0 <= subdivisions <= _MAX_SUBDIVISIONS:
        raise ValidationError(
            f"subdivisions must be in [0, {_MAX_SUBDIVISIONS}], got {subdivisions}")
    verts, faces = _icosahedron()
    points = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        midpoint = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in midpoint:
                p = np.asarray(points[i]) + np.asarray(points[j])
                p /= np.linalg.norm(p)
                midpoint[key] = len(points)
                points.append(tuple(p))
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.array(new_faces, dtype=np.int64)
    return TriMesh(np.array(points), faces)


def generate_flat_torus(m: int, n: int, aspect: float = 1.0) -> TriMesh:
    """Flat torus: an m-by-n grid on the unit-area rectangle with opposite
    sides identified, each cell split into two triangles.

    The flat quotient metric is stored as per-face edge lengths; the 3D
    positions lay the grid out in the plane and are not an isometric
    embedding (wrap-around edges are wrong in the embedding, right in the
    stored lengths).
    """
    if m < 3 or n < 3:
        raise ValidationError(f"grid too small: need m, n >= 3, got {m}x{n}")
    if not aspect > 0:
        raise ValidationError(f"aspect must be positive, got {aspect}")
    a = np.sqrt(aspect)
    b = 1.0 / a
    dx, dy = a / m, b / n
    diag = np.hypot(dx, dy)

    xs, ys = np.meshgrid(np.arange(m) * dx, np.arange(n) * dy, indexing="ij")
    vertices = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(m * n)])

    def vid(i, j):
        return (i % m) * n + (j % n)

    faces = []
    lengths = []
    for i in range(m):
        for j in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            faces.append((v00, v10, v11))
            lengths.append((dy, diag, dx))
            faces.append((v00, v11, v01))
            lengths.append((dx, dy, diag))
    return TriMesh(vertices, np.array(faces, dtype=np.int64),
                   face_lengths=np.array(lengths))
