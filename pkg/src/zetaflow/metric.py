"""Metrics within a conformal class: areas, discrete curvature, Gauss-Bonnet.

A metric is represented as a fixed base mesh plus a per-vertex log-conformal
factor u, i.e. g = e^{2u} g0.  Keeping the base mesh fixed makes the
cotangent stiffness form independent of u, so the 2D conformal invariance of
the Dirichlet energy holds exactly in the discretization rather than up to
mesh error.

Quadrature conventions (fixed once, used everywhere):

* per-triangle rule: integral of a vertex field over a face uses the mean of
  the field over the face's three corners times the base face area;
* lumped vertex areas: one third of each incident base face area.

Curvature of a conformal metric is computed through the smooth 2D identity
R_u = e^{-2u} (R0 - 2*Lap0 u) with the discrete base Laplacian, which keeps
the discrete Gauss-Bonnet sum exact (up to rounding) for every u.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ValidationError
from .mesh import TriMesh

_geometry_cache: "weakref.WeakKeyDictionary[TriMesh, _BaseGeometry]" = weakref.WeakKeyDictionary()


class _BaseGeometry:
    """Per-face/per-vertex quantities of the base metric, cached per mesh."""

    def __init__(self, mesh: TriMesh):
        lengths = mesh.face_lengths
        if not np.isfinite(lengths).all() or (lengths <= 0).any():
            bad = int(np.flatnonzero(~(np.isfinite(lengths).all(axis=1)
                                       & (lengths > 0).all(axis=1)))[0])
            raise ValidationError("non-positive or non-finite edge length", index=bad)
        a, b, c = lengths[:, 0], lengths[:, 1], lengths[:, 2]
        s = 0.5 * (a + b + c)
        heron = s * (s - a) * (s - b) * (s - c)
        bad = np.flatnonzero(heron <= 0)
        if bad.size:
            raise ValidationError("triangle inequality violated", index=int(bad[0]))
        self.mesh = mesh
        self.lengths = lengths
        self.areas = np.sqrt(heron)

        sq = lengths**2
        # law of cosines at corner k; cot_k = cos_k / sin_k = num_k / (4 * area)
        num = np.stack([
            sq[:, 1] + sq[:, 2] - sq[:, 0],
            sq[:, 2] + sq[:, 0] - sq[:, 1],
            sq[:, 0] + sq[:, 1] - sq[:, 2],
        ], axis=1)
        self.cot = num / (4.0 * self.areas[:, None])
        cos = np.clip(num / (2.0 * np.stack([b * c, c * a, a * b], axis=1)), -1.0, 1.0)
        self.angles = np.arccos(cos)

        nv = mesh.vertex_count
        self.vertex_areas = np.zeros(nv)
        np.add.at(self.vertex_areas, mesh.faces, self.areas[:, None] / 3.0)
        angle_sums = np.zeros(nv)
        np.add.at(angle_sums, mesh.faces, self.angles)
        self.angle_defects = 2.0 * np.pi - angle_sums

        # COO triples of the per-face cotangent form, kept for weighted assembly
        f = mesh.faces
        i = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
        j = np.concatenate([f[:, 2], f[:, 0], f[:, 1]])
        w = 0.5 * np.concatenate([self.cot[:, 0], self.cot[:, 1], self.cot[:, 2]])
        self._rows = np.concatenate([i, j, i, j])
        self._cols = np.concatenate([j, i, i, j])
        self._vals = np.concatenate([-w, -w, w, w])
        # face index of each triple, for per-face weights
        fidx = np.concatenate([np.arange(len(f))] * 3)
        self._face_of_triple = np.concatenate([fidx] * 4)
        self.stiffness = self.weighted_stiffness(None)

    def weighted_stiffness(self, face_weights) -> sparse.csr_matrix:
        """Assemble sum_T w_T S_T with per-face scalar weights (w == 1 if None)."""
        vals = self._vals
        if face_weights is not None:
            vals = vals * np.asarray(face_weights)[self._face_of_triple]
        nv = self.mesh.vertex_count
        return sparse.coo_matrix((vals, (self._rows, self._cols)), shape=(nv, nv)).tocsr()

    def face_energies(self, phi: np.ndarray) -> np.ndarray:
        """Per-face cotangent quadratic form phi^T S_T phi, shape (F,)."""
        f = self.mesh.faces
        d0 = phi[f[:, 1]] - phi[f[:, 2]]
        d1 = phi[f[:, 2]] - phi[f[:, 0]]
        d2 = phi[f[:, 0]] - phi[f[:, 1]]
        return 0.5 * (self.cot[:, 0] * d0**2 + self.cot[:, 1] * d1**2 + self.cot[:, 2] * d2**2)


def base_geometry(mesh: TriMesh) -> _BaseGeometry:
    geom = _geometry_cache.get(mesh)
    if geom is None:
        geom = _BaseGeometry(mesh)
        _geometry_cache[mesh] = geom
    return geom


def face_vertex_mean(mesh: TriMesh, values: np.ndarray) -> np.ndarray:
    """Mean of a per-vertex field over each face's corners, shape (F,)."""
    return values[mesh.faces].mean(axis=1)


class ConformalMetric:
    """A metric g = e^{2u} g0 on a fixed base mesh.

    Immutable; all operations return new instances.
    """

    def __init__(self, base: TriMesh, u=None):
        self.base = base
        if u is None:
            u = np.zeros(base.vertex_count)
        else:
            u = np.array(u, dtype=float)  # copy: instances own a frozen u
            if u.shape != (base.vertex_count,):
                raise ValidationError(f"u must have shape ({base.vertex_count},)")
            if not np.isfinite(u).all():
                raise ValidationError("non-finite conformal factor",
                                      index=int(np.flatnonzero(~np.isfinite(u))[0]))
        self.u = u
        self.u.flags.writeable = False
        self.geometry = base_geometry(base)

    def face_conformal_factors(self) -> np.ndarray:
        """Per-face one-point quadrature weight: mean of e^{2u} over corners."""
        return face_vertex_mean(self.base, np.exp(2.0 * self.u))

    def face_areas(self) -> np.ndarray:
        return self.geometry.areas * self.face_conformal_factors()

    def total_area(self) -> float:
        return float(self.face_areas().sum())

    def vertex_areas(self) -> np.ndarray:
        """Lumped vertex areas of this metric: e^{2u_i} times the base third."""
        return np.exp(2.0 * self.u) * self.geometry.vertex_areas


@dataclass(frozen=True)
class CurvatureField:
    """Per-vertex Gauss curvature K, scalar curvature R = 2K, lumped areas."""

    K: np.ndarray
    R: np.ndarray
    vertex_areas: np.ndarray

    def gauss_bonnet_total(self) -> float:
        """Discrete integral of K, equal to 2*pi*chi up to rounding."""
        return float(self.K @ self.vertex_areas)


def base_metric(mesh: TriMesh) -> ConformalMetric:
    """The base metric (u = 0) of a mesh; validates triangle inequalities."""
    base_geometry(mesh)  # raises on a violated triangle inequality
    return ConformalMetric(mesh)


def scale_conformal(metric: ConformalMetric, du) -> ConformalMetric:
    """Return the metric with log-conformal factor u + du (base unchanged)."""
    du = np.asarray(du, dtype=float)
    if du.shape == ():
        du = np.full(metric.base.vertex_count, float(du))
    return ConformalMetric(metric.base, metric.u + du)


def curvature(metric: ConformalMetric) -> CurvatureField:
    """Curvature of the metric.

    For u = 0 this reduces to angle defects over lumped areas; for general u
    the conformal transformation rule is applied with the base Laplacian, so
    the total curvature stays exactly 2*pi*chi.
    """
    geom = metric.geometry
    K0 = geom.angle_defects / geom.vertex_areas
    minus_lap_u = geom.stiffness @ metric.u / geom.vertex_areas
    K = np.exp(-2.0 * metric.u) * (K0 + minus_lap_u)
    return CurvatureField(K=K, R=2.0 * K, vertex_areas=metric.vertex_areas())


def gauss_bonnet_residual(metric: ConformalMetric, chi: int) -> float:
    """Absolute deviation of the discrete total curvature from 2*pi*chi."""
    return abs(curvature(metric).gauss_bonnet_total() - 2.0 * np.pi * chi)


def write_vertex_field(path, values) -> None:
    """Serialize a per-vertex field as CSV rows ``vertex_index,value``."""
    values = np.asarray(values)
    with open(path, "w") as fh:
        fh.write("vertex_index,value\n")
        for i, v in enumerate(values):
            fh.write(f"{i},{v:.17g}\n")
