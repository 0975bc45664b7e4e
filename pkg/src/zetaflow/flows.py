"""Conformal flow integration and its verification harnesses.

The integrated system, for a conformal velocity psi (prescribed or the 2D
Ricci choice psi = -R):

    du/dt = psi / 2          (since g = e^{2u} g0 and dg/dt = psi g)
    df/dt = (n/2 - 1) psi    (frozen at the surface dimension n = 2)
    dV/dt = -psi V
    dtau/dt = -1             (when temperature coupling is on)

Explicit RK4 with a fixed step and a curvature-based stability guard; no
volume normalization (runs stop at the guard or before tau reaches 0).  The
factor of 2 in du/dt is pinned by the constant-psi area test: the area of
the flowed metric grows as e^{psi t}.

Along any such flow the entropy closed form depends only on (tau, chi), so
the trace records it recomputed, never integrated, and the harnesses check
probe-energy invariance (exact for u-independent stiffness), Gauss-Bonnet
conservation, and the sign and rate of dS/dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError, ValidationError
from .mesh import topology
from .metric import ConformalMetric, curvature, gauss_bonnet_residual
from .operators import OperatorSpec, assemble, dirichlet_energy
from . import thermo

PROBE_KINDS = ("laplacian", "drifted", "schrodinger")


@dataclass(frozen=True)
class FlowState:
    """Instantaneous flow data; immutable, advanced by :func:`step`."""

    metric: ConformalMetric
    f: np.ndarray
    V: np.ndarray
    tau: float
    t: float = 0.0
    n: int = 2

    def __post_init__(self):
        nv = self.metric.base.vertex_count
        for name in ("f", "V"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (nv,):
                raise ValidationError(f"{name} must have shape ({nv},)")
            if not np.isfinite(arr).all():
                raise ValidationError(f"non-finite {name}")
            object.__setattr__(self, name, arr)
        if not self.tau > 0:
            raise ValidationError(f"tau must stay positive, got {self.tau}")


def make_state(metric: ConformalMetric, tau: float, f=None, V=None,
               t: float = 0.0, n: int = 2) -> FlowState:
    nv = metric.base.vertex_count
    return FlowState(metric=metric,
                     f=np.zeros(nv) if f is None else f,
                     V=np.zeros(nv) if V is None else V,
                     tau=tau, t=t, n=n)


def _psi_of(state: FlowState, psi_source) -> np.ndarray:
    if psi_source == "ricci2d":
        return -curvature(state.metric).R
    if callable(psi_source):
        return np.asarray(psi_source(state), dtype=float)
    raise ValidationError(f"psi_source must be 'ricci2d' or a callable, got {psi_source!r}")


def step(state: FlowState, psi_source, dt: float, couple_tau: bool = True) -> FlowState:
    """One RK4 step; psi is re-evaluated at every stage."""
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if psi_source == "ricci2d":
        r_max = np.abs(curvature(state.metric).R).max()
        if r_max > 0 and dt > 0.5 / r_max:
            raise NumericalError(
                f"stability guard: dt = {dt:g} exceeds 0.5/max|R| = {0.5 / r_max:g}")

    base = state.metric.base
    coeff_f = 0.5 * state.n - 1.0

    def rates(s: FlowState):
        psi = _psi_of(s, psi_source)
        return 0.5 * psi, coeff_f * psi, -psi * s.V

    def moved(c, du, df, dV):
        return FlowState(metric=ConformalMetric(base, state.metric.u + c * du),
                         f=state.f + c * df, V=state.V + c * dV,
                         tau=state.tau - c * dt if couple_tau else state.tau,
                         t=state.t + c * dt, n=state.n)

    k1 = rates(state)
    k2 = rates(moved(0.5 * dt, *k1))
    k3 = rates(moved(0.5 * dt, *k2))
    k4 = rates(moved(dt, *k3))
    du, df, dV = ((a + 2 * b + 2 * c + d) / 6.0
                  for a, b, c, d in zip(k1, k2, k3, k4))
    new = FlowState(metric=ConformalMetric(base, state.metric.u + dt * du),
                    f=state.f + dt * df, V=state.V + dt * dV,
                    tau=state.tau - dt if couple_tau else state.tau,
                    t=state.t + dt, n=state.n)
    if not (np.isfinite(new.metric.u).all() and np.isfinite(new.f).all()
            and np.isfinite(new.V).all()):
        raise NumericalError("flow state became non-finite")
    return new


@dataclass(frozen=True)
class FlowRecord:
    t: float
    tau: float
    S: float
    dS_dtau: float
    area: float
    gauss_bonnet_residual: float
    probe_energies: dict
    log_det: float | None = None


@dataclass
class FlowTrace:
    """Sampled records of one flow run."""

    chi: int
    records: list = field(default_factory=list)

    def append(self, record: FlowRecord):
        if self.records:
            last = self.records[-1]
            if record.t <= last.t:
                raise ValidationError("trace timestamps must strictly increase")
            if record.tau > last.tau:
                raise ValidationError("tau must not increase along a coupled trace")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def probe_ids(self):
        return sorted(self.records[0].probe_energies) if self.records else []

    def to_csv(self, path) -> None:
        ids = self.probe_ids()
        with open(path, "w") as fh:
            fh.write("t,tau,S,dS_dtau,area,gb_residual"
                     + "".join(f",probe_{p}" for p in ids) + "\n")
            for r in self.records:
                row = (f"{r.t:.17g},{r.tau:.17g},{r.S:.17g},{r.dS_dtau:.17g},"
                       f"{r.area:.17g},{r.gauss_bonnet_residual:.17g}")
                row += "".join(f",{r.probe_energies[p]:.17g}" for p in ids)
                fh.write(row + "\n")


def _probe_spec(kind: str, state: FlowState) -> OperatorSpec:
    if kind == "laplacian":
        return OperatorSpec.laplacian()
    if kind == "drifted":
        return OperatorSpec.drifted(state.f)
    if kind == "schrodinger":
        return OperatorSpec.schrodinger(state.f, state.V)
    raise ValidationError(f"unknown probe kind {kind!r}")


def _sample(trace: FlowTrace, state: FlowState, probes, probe_kind) -> None:
    chi = trace.chi
    asm = assemble(state.metric, _probe_spec(probe_kind, state)) if probes else None
    energies = {pid: dirichlet_energy(asm, phi) for pid, phi in probes.items()}
    trace.append(FlowRecord(
        t=state.t, tau=state.tau,
        S=thermo.entropy_conformal(1.0 / state.tau, chi),
        dS_dtau=thermo.entropy_rate_tau(state.tau, chi),
        area=state.metric.total_area(),
        gauss_bonnet_residual=gauss_bonnet_residual(state.metric, chi),
        probe_energies=energies))


def run_flow(initial: FlowState, psi_source, t_end: float, dt: float,
             probes=None, sample_every: int = 1,
             probe_kind: str = "laplacian", couple_tau: bool = True) -> FlowTrace:
    """Integrate from ``initial`` to ``t_end`` sampling every ``sample_every``
    steps (the initial and final states are always sampled).

    When temperature coupling is on, integration halts before tau would
    reach 0; the returned trace simply ends there.
    """
    if probes is None:
        probes = {}
    probes = {str(k): np.asarray(v, dtype=float) for k, v in probes.items()}
    for pid, phi in probes.items():
        if phi.shape != (initial.metric.base.vertex_count,):
            raise ValidationError(f"probe {pid!r} has wrong size")
    if sample_every < 1:
        raise ValidationError("sample_every must be >= 1")
    n_steps = int(round((t_end - initial.t) / dt))
    if n_steps < 1:
        raise ValidationError("t_end must lie at least one step beyond the state")

    chi = topology(initial.metric.base).chi
    trace = FlowTrace(chi=chi)
    state = initial
    _sample(trace, state, probes, probe_kind)
    for k in range(n_steps):
        if couple_tau and state.tau - dt <= 0:
            break  # halt before tau crosses 0
        state = step(state, psi_source, dt, couple_tau=couple_tau)
        if k == n_steps - 1 or (k + 1) % sample_every == 0:
            _sample(trace, state, probes, probe_kind)
    return trace


def invariance_report(trace: FlowTrace) -> dict:
    """Maximum relative drift of each probe's Dirichlet energy."""
    if len(trace) < 2:
        raise ValidationError("trace needs at least 2 samples")
    per_probe = {}
    for pid in trace.probe_ids():
        values = np.array([r.probe_energies[pid] for r in trace.records])
        scale = max(abs(values[0]), 1e-300)
        per_probe[pid] = float(np.abs(values - values[0]).max() / scale)
    overall = max(per_probe.values()) if per_probe else 0.0
    return {"max_rel_energy_drift": overall, "per_probe": per_probe}


def monotonicity_report(trace: FlowTrace) -> dict:
    """Finite-difference dS/dt against the closed-form rate (1/2 - chi/12)/tau.

    The closed form is compared through its exact mean over each sampling
    interval, (1/2 - chi/12) ln(tau_k/tau_{k+1}) / dt, so the discrepancy
    measures trace consistency rather than sampling resolution.
    """
    if len(trace) < 3:
        raise ValidationError("trace needs at least 3 samples")
    records = trace.records
    coeff = 0.5 - trace.chi / 12.0
    fd_rates, closed_rates = [], []
    for a, b in zip(records, records[1:]):
        h = b.t - a.t
        fd_rates.append((b.S - a.S) / h)
        if b.tau < a.tau:
            closed_rates.append(coeff * np.log(a.tau / b.tau) / h)
        else:  # uncoupled run: tau frozen, S frozen
            closed_rates.append(0.0)
    fd = np.array(fd_rates)
    closed = np.array(closed_rates)
    if coeff == 0.0:
        is_monotone = bool(np.all(fd == 0.0))
        max_violation = float(np.abs(fd).max())
    else:
        signed = np.sign(coeff) * fd
        is_monotone = bool(np.all(signed > 0.0)) if np.any(closed) else True
        max_violation = float(max(0.0, -(signed.min())))
    return {"is_monotone": is_monotone,
            "max_violation": max_violation,
            "numeric_vs_closed_form": float(np.abs(fd - closed).max())}


def with_tau(state: FlowState, tau: float) -> FlowState:
    return replace(state, tau=tau)
