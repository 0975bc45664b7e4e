import numpy as np
import pytest

from zetaflow import (
    ParseError,
    TriMesh,
    ValidationError,
    generate_flat_torus,
    generate_icosphere,
    load_off,
    topology,
    write_off,
)

from conftest import genus2_solid, voxel_boundary_mesh


def heron_areas(face_lengths):
    a, b, c = face_lengths.T
    s = 0.5 * (a + b + c)
    return np.sqrt(s * (s - a) * (s - b) * (s - c))


# octahedron with outward-oriented faces; vertices: +-x, +-y, +-z
OCTA_VERTS = np.array([
    [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
], dtype=float)
OCTA_FACES = np.array([
    [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
    [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
])


class TestLoadOff:
    def test_icosahedron_roundtrip(self, tmp_path):
        path = tmp_path / "ico.off"
        write_off(generate_icosphere(0), path)
        mesh = load_off(path)
        assert mesh.vertex_count == 12
        assert mesh.face_count == 20
        assert mesh.edge_count == 30  # Euler: E = V + F - chi

    def test_octahedron(self, tmp_path):
        path = tmp_path / "octa.off"
        write_off(TriMesh(OCTA_VERTS, OCTA_FACES), path)
        mesh = load_off(path)
        assert mesh.edge_count == 12
        assert topology(mesh).chi == 2

    def test_nonmanifold_edge_rejected(self, tmp_path):
        path = tmp_path / "bad.off"
        path.write_text(
            "OFF\n5 3 0\n"
            "0 0 0\n1 0 0\n0 1 0\n0 -1 0\n0 0 1\n"
            "3 0 1 2\n3 1 0 3\n3 0 1 4\n")
        with pytest.raises(ValidationError, match="non-manifold|orientation"):
            load_off(path)

    def test_boundary_rejected(self, tmp_path):
        path = tmp_path / "tri.off"
        path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        with pytest.raises(ValidationError, match="not closed"):
            load_off(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "nope.off"
        path.write_text("PLY\n3 1 0\n")
        with pytest.raises(ParseError, match="OFF"):
            load_off(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.off"
        path.write_text("OFF\n4 4 0\n0 0 0\n1 0 0\n")
        with pytest.raises(ParseError, match="truncated"):
            load_off(path)

    def test_degenerate_face(self, tmp_path):
        path = tmp_path / "degen.off"
        path.write_text("OFF\n3 2 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n3 0 0 1\n")
        with pytest.raises(ValidationError, match="repeated vertex"):
            load_off(path)


class TestValidation:
    def test_flipped_face_rejected(self):
        verts, faces = generate_icosphere(0).vertices, generate_icosphere(0).faces.copy()
        faces[0] = faces[0, ::-1]
        with pytest.raises(ValidationError, match="orientation|non-manifold"):
            TriMesh(verts, faces)

    def test_disconnected_rejected(self):
        v = np.vstack([OCTA_VERTS, OCTA_VERTS + 10.0])
        f = np.vstack([OCTA_FACES, OCTA_FACES + 6])
        with pytest.raises(ValidationError, match="disconnected"):
            TriMesh(v, f)

    def test_index_out_of_range(self):
        with pytest.raises(ValidationError, match="out of range"):
            TriMesh(OCTA_VERTS, [[0, 1, 99]])


class TestIcosphere:
    @pytest.mark.parametrize("k,V,F", [(0, 12, 20), (1, 42, 80)])
    def test_small_counts(self, k, V, F):
        mesh = generate_icosphere(k)
        assert (mesh.vertex_count, mesh.face_count) == (V, F)

    def test_subdivision_recurrence(self):
        # oracle: iterate V' = V + E, E' = 2E + 3F, F' = 4F from (12, 30, 20)
        V, E, F = 12, 30, 20
        for _ in range(4):
            V, E, F = V + E, 2 * E + 3 * F, 4 * F
        assert (V, F) == (2562, 5120)
        mesh = generate_icosphere(4)
        assert (mesh.vertex_count, mesh.edge_count, mesh.face_count) == (V, E, F)

    def test_subdivision_law_on_meshes(self):
        prev = generate_icosphere(0)
        for k in range(1, 4):
            cur = generate_icosphere(k)
            assert cur.vertex_count == prev.vertex_count + prev.edge_count
            assert cur.face_count == 4 * prev.face_count
            prev = cur

    def test_unit_radius(self):
        mesh = generate_icosphere(2)
        np.testing.assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-14)

    def test_cap(self):
        with pytest.raises(ValidationError, match="subdivisions"):
            generate_icosphere(8)


class TestFlatTorus:
    def test_counts_8x8(self):
        mesh = generate_flat_torus(8, 8)
        assert (mesh.vertex_count, mesh.face_count) == (64, 128)
        assert topology(mesh).chi == 0

    def test_counts_3x3(self):
        mesh = generate_flat_torus(3, 3)
        assert (mesh.vertex_count, mesh.face_count, mesh.edge_count) == (9, 18, 27)
        assert topology(mesh).chi == 0

    def test_unit_area(self):
        mesh = generate_flat_torus(16, 16)
        assert abs(heron_areas(mesh.face_lengths).sum() - 1.0) < 1e-12

    def test_aspect_unit_area(self):
        mesh = generate_flat_torus(8, 12, aspect=2.5)
        assert abs(heron_areas(mesh.face_lengths).sum() - 1.0) < 1e-12

    def test_too_small(self):
        with pytest.raises(ValidationError, match="grid too small"):
            generate_flat_torus(2, 8)


class TestTopology:
    def test_icosphere(self, icosphere2):
        top = topology(icosphere2)
        assert (top.chi, top.genus) == (2, 0)
        assert top.V - top.E + top.F == top.chi

    def test_torus(self, torus88):
        top = topology(torus88)
        assert (top.chi, top.genus) == (0, 1)

    def test_genus2_fixture(self, tmp_path, genus2_mesh):
        # round-trip the fixture through OFF and count simplices from the file
        path = tmp_path / "genus2.off"
        write_off(genus2_mesh, path)
        mesh = load_off(path)

        lines = [ln.split() for ln in path.read_text().splitlines()[1:]]
        nv, nf = int(lines[0][0]), int(lines[0][1])
        face_rows = [tuple(int(x) for x in row[1:]) for row in lines[1 + nv:1 + nv + nf]]
        edges = set()
        for a, b, c in face_rows:
            edges |= {tuple(sorted(e)) for e in ((a, b), (b, c), (c, a))}
        chi = nv - len(edges) + nf
        assert chi == -2

        top = topology(mesh)
        assert (top.chi, top.genus) == (-2, 2)

    def test_two_edge_incidence_everywhere(self, icosphere2):
        counts = {}
        for a, b, c in icosphere2.faces:
            for e in ((a, b), (b, c), (c, a)):
                counts[tuple(sorted(e))] = counts.get(tuple(sorted(e)), 0) + 1
        assert set(counts.values()) == {2}


def test_voxel_builder_simple_cube():
    mesh = voxel_boundary_mesh({(0, 0, 0)})
    assert topology(mesh).chi == 2


def test_voxel_builder_one_hole():
    solid = {(i, j, 0) for i in range(3) for j in range(3)} - {(1, 1, 0)}
    assert topology(voxel_boundary_mesh(solid)).genus == 1


def test_genus2_solid_builds(genus2_mesh):
    assert topology(genus2_mesh).genus == 2
