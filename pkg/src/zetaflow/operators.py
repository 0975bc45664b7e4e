"""Discrete Laplace-type operators on conformal metrics.

Three operator kinds are assembled against the weighted measure
e^{-f} e^{2u} dA0:

* ``laplacian``   -- minus the Laplace-Beltrami operator;
* ``drifted``     -- the drifted Laplacian, self-adjoint w.r.t. e^{-f} dv;
* ``schrodinger`` -- drifted plus a multiplication potential V.

The stiffness form uses base cotangent weights scaled per face by the mean
of e^{-f} over the face corners, so for the laplacian and drifted kinds the
Dirichlet energy has no dependence on the conformal factor u at all: the 2D
conformal invariance is exact in floating point, not merely approximate.

``energy_variation`` evaluates the exact time derivative of the assembled
discrete energy along (psi, df/dt, dV/dt), grouped as
``int(-psi |grad phi|^2 + V' phi^2) du + int(|grad phi|^2 + V phi^2)(psi - f') du``
(the n = 2 form), with the same quadrature rules as the assembly.  Central
finite differences of the reassembled energy therefore converge to it at
second order down to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ValidationError
from .metric import ConformalMetric, face_vertex_mean

KINDS = ("laplacian", "drifted", "schrodinger")


@dataclass(frozen=True)
class OperatorSpec:
    """Which operator to assemble, with its per-vertex data.

    ``f`` is the drift/weight field (absent for the plain laplacian) and
    ``V`` the potential (schrodinger only).
    """

    kind: str
    f: np.ndarray | None = None
    V: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown operator kind {self.kind!r}")
        if self.kind == "laplacian" and (self.f is not None or self.V is not None):
            raise ValidationError("laplacian takes no f or V field")
        if self.kind == "schrodinger" and self.V is None:
            raise ValidationError("schrodinger requires a potential V")
        if self.kind == "drifted" and self.V is not None:
            raise ValidationError("drifted takes no potential V")
        for name in ("f", "V"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=float)
                if not np.isfinite(value).all():
                    raise ValidationError(f"non-finite {name} field")
                object.__setattr__(self, name, value)

    @classmethod
    def laplacian(cls) -> "OperatorSpec":
        return cls("laplacian")

    @classmethod
    def drifted(cls, f) -> "OperatorSpec":
        return cls("drifted", f=np.asarray(f, dtype=float))

    @classmethod
    def schrodinger(cls, f, V) -> "OperatorSpec":
        return cls("schrodinger", f=np.asarray(f, dtype=float), V=np.asarray(V, dtype=float))


@dataclass(frozen=True)
class OperatorAssembly:
    """Assembled matrices of one operator over one metric.

    ``stiffness`` is the weighted cotangent form, ``mass`` the diagonal of
    the lumped weighted mass matrix, ``potential`` the diagonal of the
    potential term (zero unless schrodinger).
    """

    metric: ConformalMetric
    spec: OperatorSpec
    stiffness: sparse.csr_matrix
    mass: np.ndarray
    potential: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.mass)

    @property
    def weighted_area(self) -> float:
        """Total weighted measure, int e^{-f} dv."""
        return float(self.mass.sum())


def _fields(metric: ConformalMetric, spec: OperatorSpec):
    nv = metric.base.vertex_count
    f = spec.f if spec.f is not None else np.zeros(nv)
    V = spec.V if spec.V is not None else np.zeros(nv)
    if f.shape != (nv,) or V.shape != (nv,):
        raise ValidationError(f"operator fields must have shape ({nv},)")
    return f, V


def assemble(metric: ConformalMetric, spec: OperatorSpec) -> OperatorAssembly:
    """Assemble stiffness, mass and potential for the operator."""
    f, V = _fields(metric, spec)
    geom = metric.geometry
    if spec.kind == "laplacian":
        stiffness = geom.stiffness
    else:
        stiffness = geom.weighted_stiffness(face_vertex_mean(metric.base, np.exp(-f)))
    mass = np.exp(2.0 * metric.u - f) * geom.vertex_areas
    if not (mass > 0).all():
        raise ValidationError("mass matrix not strictly positive")
    potential = V * mass
    return OperatorAssembly(metric=metric, spec=spec, stiffness=stiffness,
                            mass=mass, potential=potential)


def dirichlet_energy(assembly: OperatorAssembly, phi) -> float:
    """Quadratic form phi^T (S_w + P) phi."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (assembly.dim,):
        raise ValidationError(f"phi must have shape ({assembly.dim},)")
    return float(phi @ (assembly.stiffness @ phi) + assembly.potential @ phi**2)


def energy_variation(metric: ConformalMetric, spec: OperatorSpec, phi,
                     psi=None, f_dot=None, V_dot=None) -> float:
    """Exact derivative of the discrete Dirichlet energy along a conformal
    variation dg/dt = psi g with rates df/dt and dV/dt.

    Only conformal metric variations are supported; an anisotropic variation
    has no representation here.
    """
    nv = metric.base.vertex_count
    phi = np.asarray(phi, dtype=float)
    zeros = np.zeros(nv)
    psi = zeros if psi is None else np.asarray(psi, dtype=float)
    f_dot = zeros if f_dot is None else np.asarray(f_dot, dtype=float)
    V_dot = zeros if V_dot is None else np.asarray(V_dot, dtype=float)
    for name, field in (("phi", phi), ("psi", psi), ("f_dot", f_dot), ("V_dot", V_dot)):
        if field.shape != (nv,):
            raise ValidationError(f"{name} must have shape ({nv},)")
        if not np.isfinite(field).all():
            raise ValidationError(f"non-finite {name}")
    f, V = _fields(metric, spec)
    if spec.kind == "laplacian" and (f_dot.any() or V_dot.any()):
        raise ValidationError("laplacian admits no f or V rates")
    if spec.kind == "drifted" and V_dot.any():
        raise ValidationError("drifted admits no V rate")

    weight = np.exp(-f)
    mesh = metric.base
    face_q = metric.geometry.face_energies(phi)
    mass = np.exp(2.0 * metric.u) * weight * metric.geometry.vertex_areas
    phi_sq_mass = phi**2 * mass

    first = (face_vertex_mean(mesh, -psi * weight) @ face_q
             + V_dot @ phi_sq_mass)
    second = (face_vertex_mean(mesh, (psi - f_dot) * weight) @ face_q
              + (V * (psi - f_dot)) @ phi_sq_mass)
    return float(first + second)


def export_matrix_coo(matrix, path) -> None:
    """Write a (sparse or dense) matrix as ``row col value`` triplets."""
    coo = sparse.coo_matrix(matrix)
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")
