"""Observer-side restricted states and the indistinguishability test.

The observer's self-description of the composite state is its reduction onto
the observer subsystem. Two composite states whose restrictions coincide are
indistinguishable "from inside": this module computes the restrictions,
their pointer weights, and the trace-distance verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DensityMatrix,
    InvariantError,
    LayoutError,
    StateVector,
    partial_trace,
    trace_distance,
)
from .dynamics import O_LABEL, MeasurementModel, run_premeasurement

# Default operational threshold for "these restrictions coincide".
DISTINGUISH_TOL = 1e-9

SOURCE_KINDS = ("pure_ensemble", "mixed_ensemble", "individual_event")


@dataclass(frozen=True)
class RestrictedState:
    """Observer reduction tagged with the provenance of the composite state.

    Identical matrices can arise from a pure ensemble, a matched mixture, or
    a single event; the tag keeps that provenance explicit because the three
    readings are interpreted differently even when the numbers agree.
    """

    o_density: DensityMatrix
    source_kind: str

    def __post_init__(self):
        if self.source_kind not in SOURCE_KINDS:
            raise InvariantError(f"source_kind must be one of {SOURCE_KINDS}")
        if self.source_kind == "individual_event":
            m = self.o_density.entries
            diag = np.real(np.diag(m))
            j = int(np.argmax(diag))
            target = np.zeros_like(m)
            target[j, j] = 1.0
            if np.max(np.abs(m - target)) > 1e-12:
                raise InvariantError(
                    "individual_event restriction must be a rank-1 pointer projector"
                )

    @property
    def dim(self) -> int:
        return self.o_density.layout.total_dim


def restricted_state(rho_ms: DensityMatrix, o_label=O_LABEL, source_kind="pure_ensemble") -> RestrictedState:
    """Partial trace over everything except the observer subsystem."""
    if o_label not in rho_ms.layout.labels:
        raise LayoutError(f"unknown observer label {o_label!r}")
    reduced = partial_trace(rho_ms, {o_label})
    return RestrictedState(o_density=reduced, source_kind=source_kind)


def pointer_weights(r: RestrictedState) -> np.ndarray:
    """Diagonal pointer weights w_j = Tr(P_j rho_O); nonnegative, sum 1."""
    w = np.real(np.diag(r.o_density.entries)).copy()
    w[np.abs(w) < 1e-15] = 0.0
    return w


def breuer_distinguishable(a: RestrictedState, b: RestrictedState, tol=DISTINGUISH_TOL):
    """Trace-distance verdict on whether the observer can tell a from b.

    Returns ``(verdict, distance)``; a False verdict means the two composite
    states look identical from inside the observer.
    """
    if a.dim != b.dim:
        raise LayoutError(f"observer dimensions differ: {a.dim} vs {b.dim}")
    d = trace_distance(a.o_density, b.o_density)
    return d > tol, d


def phase_class_check(psi_a: StateVector, psi_b: StateVector, model: MeasurementModel) -> bool:
    """True iff the two system states are observer-equivalent after measurement.

    Holds whenever the amplitude moduli agree: the restriction only ever sees
    |a_i|^2, never relative phases.
    """
    ra = restricted_state(run_premeasurement(psi_a, model).to_density())
    rb = restricted_state(run_premeasurement(psi_b, model).to_density())
    verdict, _ = breuer_distinguishable(ra, rb, tol=1e-12)
    return not verdict
