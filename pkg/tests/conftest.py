import numpy as np
import pytest

from zetaflow import TriMesh, generate_flat_torus, generate_icosphere

# Quad tables per outward direction: corner offsets in cyclic CCW order as
# seen from outside the solid.
_DIRECTIONS = {
    (1, 0, 0): [(1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)],
    (-1, 0, 0): [(0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)],
    (0, 1, 0): [(0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)],
    (0, -1, 0): [(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)],
    (0, 0, 1): [(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)],
    (0, 0, -1): [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)],
}


def voxel_boundary_mesh(solid):
    """Triangulated boundary surface of a set of unit voxels.

    ``solid`` is a set of integer (i, j, k) cells.  Boundary quads are
    oriented outward and split into two triangles.  For a solid slab with
    isolated through-holes this yields a closed oriented manifold.
    """
    point_index = {}
    vertices = []
    faces = []

    def vid(p):
        if p not in point_index:
            point_index[p] = len(vertices)
            vertices.append(p)
        return point_index[p]

    for (i, j, k) in sorted(solid):
        for (dx, dy, dz), offsets in _DIRECTIONS.items():
            if (i + dx, j + dy, k + dz) in solid:
                continue
            quad = [vid((i + ox, j + oy, k + oz)) for ox, oy, oz in offsets]
            faces.append((quad[0], quad[1], quad[2]))
            faces.append((quad[0], quad[2], quad[3]))
    return TriMesh(np.array(vertices, dtype=float), np.array(faces))


def genus2_solid():
    """A 5x3x1 slab with two separated through-holes: boundary genus 2."""
    solid = {(i, j, 0) for i in range(5) for j in range(3)}
    solid -= {(1, 1, 0), (3, 1, 0)}
    return solid


@pytest.fixture(scope="session")
def icosphere2():
    return generate_icosphere(2)


@pytest.fixture(scope="session")
def icosphere3():
    return generate_icosphere(3)


@pytest.fixture(scope="session")
def icosphere4():
    return generate_icosphere(4)


@pytest.fixture(scope="session")
def icosphere5():
    return generate_icosphere(5)


@pytest.fixture(scope="session")
def torus88():
    return generate_flat_torus(8, 8)


@pytest.fixture(scope="session")
def genus2_mesh():
    return voxel_boundary_mesh(genus2_solid())
