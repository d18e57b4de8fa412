"""Dense complex linear algebra over labeled composite Hilbert spaces.

States and operators carry a :class:`CompositeLayout` describing the ordered
tensor factors (system, observer, environment atoms, ...). All values are
immutable after construction and every constructor validates the physical
invariants (normalization, Hermiticity, unit trace, positivity) up front, so
downstream code never has to re-check them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np

# Algebraic identities (Hermiticity, trace, idempotence, ...).
TOL_ALGEBRAIC = 1e-12
# Round trips through eigendecompositions (evolve forward then back).
TOL_ROUNDTRIP = 1e-10
# Dense storage cap; exceeding it is an error, never silent truncation.
MAX_TOTAL_DIM = 4096


class LayoutError(ValueError):
    """Raised for malformed layouts or label/dimension mismatches."""


class InvariantError(ValueError):
    """Raised when a state or operator violates its defining invariants."""


@dataclass(frozen=True)
class CompositeLayout:
    """Ordered registry of tensor factors, e.g. (("S", 2), ("O", 3)).

    Index 0 of every subsystem is by convention the "ready"/ground label
    (observer ready state, environment initial state). Kronecker ordering is
    row-major in the listed order.
    """

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.subsystems:
            raise LayoutError("layout needs at least one subsystem")
        object.__setattr__(self, "subsystems", tuple((str(l), int(d)) for l, d in self.subsystems))
        labels = [l for l, _ in self.subsystems]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate subsystem labels in {labels}")
        for label, dim in self.subsystems:
            if dim < 1:
                raise LayoutError(f"subsystem {label!r} has dimension {dim} < 1")
        if self.total_dim > MAX_TOTAL_DIM:
            raise LayoutError(
                f"total dimension {self.total_dim} exceeds cap {MAX_TOTAL_DIM}"
            )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.subsystems)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def axis(self, label: str) -> int:
        """Position of *label* in the tensor ordering."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem label {label!r}; have {self.labels}")

    def dim(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def flat_index(self, indices: dict[str, int]) -> int:
        """Row-major flat index of a product basis state, missing labels -> 0."""
        idx = 0
        for label, d in self.subsystems:
            i = indices.get(label, 0)
            if not 0 <= i < d:
                raise LayoutError(f"basis index {i} out of range for {label!r} (dim {d})")
            idx = idx * d + i
        return idx

    def restrict(self, keep: tuple[str, ...]) -> "CompositeLayout":
        """Sub-layout of the kept labels, in original order."""
        return CompositeLayout(tuple(p for p in self.subsystems if p[0] in keep))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state over a composite layout."""

    layout: CompositeLayout
    amplitudes: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        amps = _readonly(np.asarray(self.amplitudes).reshape(-1))
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.layout.total_dim,):
            raise LayoutError(
                f"amplitude length {amps.shape[0]} != layout dimension {self.layout.total_dim}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > TOL_ALGEBRAIC:
            raise InvariantError(f"state norm {norm} deviates from 1 beyond {TOL_ALGEBRAIC}")

    @classmethod
    def basis(cls, layout: CompositeLayout, indices: dict[str, int]) -> "StateVector":
        """Product basis state |i_1 i_2 ...>; unspecified labels sit at index 0."""
        amps = np.zeros(layout.total_dim, dtype=complex)
        amps[layout.flat_index(indices)] = 1.0
        return cls(layout, amps)

    @classmethod
    def from_amplitudes(cls, layout: CompositeLayout, amps, normalize=False) -> "StateVector":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if normalize:
            n = np.linalg.norm(amps)
            if n == 0:
                raise InvariantError("cannot normalize the zero vector")
            amps = amps / n
        return cls(layout, amps)

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite statistical state."""

    layout: CompositeLayout
    entries: np.ndarray

    def __post_init__(self):
        m = _readonly(np.asarray(self.entries))
        object.__setattr__(self, "entries", m)
        n = self.layout.total_dim
        if m.shape != (n, n):
            raise LayoutError(f"matrix shape {m.shape} != ({n}, {n})")
        if np.max(np.abs(m - m.conj().T)) > TOL_ALGEBRAIC:
            raise InvariantError("density matrix is not Hermitian within tolerance")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TOL_ALGEBRAIC:
            raise InvariantError(f"trace {tr} deviates from 1 beyond {TOL_ALGEBRAIC}")
        if float(np.min(np.linalg.eigvalsh(m))) < -TOL_ALGEBRAIC:
            raise InvariantError("density matrix has a negative eigenvalue beyond tolerance")

    @classmethod
    def mixture(cls, weights, states) -> "DensityMatrix":
        """Convex mixture sum_k w_k |psi_k><psi_k| (or of density matrices)."""
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < -TOL_ALGEBRAIC) or abs(weights.sum() - 1.0) > TOL_ALGEBRAIC:
            raise InvariantError("mixture weights must be nonnegative and sum to 1")
        parts = [
            s.to_density() if isinstance(s, StateVector) else s for s in states
        ]
        layout = parts[0].layout
        m = sum(w * p.entries for w, p in zip(weights, parts))
        return cls(layout, m)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


@dataclass(frozen=True)
class LinearOperator:
    """Square operator over a composite layout.

    Hermitian operators cache their eigendecomposition (values are immutable,
    so the cache is safe to share); repeated time evolution under one
    generator costs a single diagonalization.
    """

    layout: CompositeLayout
    entries: np.ndarray
    hermitian_flag: bool = False

    def __post_init__(self):
        m = _readonly(np.asarray(self.entries))
        object.__setattr__(self, "entries", m)
        n = self.layout.total_dim
        if m.shape != (n, n):
            raise LayoutError(f"matrix shape {m.shape} != ({n}, {n})")
        if self.hermitian_flag and np.max(np.abs(m - m.conj().T)) > TOL_ALGEBRAIC:
            raise InvariantError("operator flagged Hermitian fails the Hermiticity check")

    @classmethod
    def from_matrix(cls, layout, m) -> "LinearOperator":
        m = np.asarray(m, dtype=complex)
        herm = bool(np.max(np.abs(m - m.conj().T)) <= TOL_ALGEBRAIC) if m.size else True
        return cls(layout, m, hermitian_flag=herm)

    @cached_property
    def _eigh(self):
        if not self.hermitian_flag:
            raise InvariantError("eigendecomposition requested for non-Hermitian operator")
        # Diagonal generators (e.g. pointer-environment dephasing) are common
        # and large; skip the O(n^3) solve for them.
        if np.count_nonzero(self.entries - np.diag(np.diag(self.entries))) == 0:
            return np.real(np.diag(self.entries)).copy(), None
        w, v = np.linalg.eigh(self.entries)
        return w, v

    def unitary_at(self, t: float) -> np.ndarray:
        """exp(-i * self * t) via the cached Hermitian eigendecomposition."""
        w, v = self._eigh
        phases = np.exp(-1j * w * t)
        if v is None:  # generator diagonal in the computational basis
            return np.diag(phases)
        return (v * phases) @ v.conj().T


def embed(layout: CompositeLayout, factors: dict[str, np.ndarray]) -> np.ndarray:
    """Kronecker-extend per-subsystem matrices by identities on the rest."""
    mats = []
    for label, d in layout.subsystems:
        if label in factors:
            f = np.asarray(factors[label], dtype=complex)
            if f.shape != (d, d):
                raise LayoutError(f"factor for {label!r} has shape {f.shape}, expected ({d}, {d})")
            mats.append(f)
        else:
            mats.append(np.eye(d, dtype=complex))
    return reduce(np.kron, mats)


def tensor_compose(parts):
    """Kronecker product of states or of operators, in the listed order.

    The result layout is the concatenation of the part layouts; kinds must be
    homogeneous (all states or all operators).
    """
    parts = list(parts)
    if not parts:
        raise ValueError("tensor_compose needs at least one part")
    kinds = {type(p) for p in parts}
    if kinds == {StateVector}:
        layout = CompositeLayout(tuple(sum((p.layout.subsystems for p in parts), ())))
        amps = reduce(np.kron, [p.amplitudes for p in parts])
        return StateVector(layout, amps)
    if kinds == {LinearOperator}:
        layout = CompositeLayout(tuple(sum((p.layout.subsystems for p in parts), ())))
        m = reduce(np.kron, [p.entries for p in parts])
        herm = all(p.hermitian_flag for p in parts)
        return LinearOperator(layout, m, hermitian_flag=herm)
    raise TypeError(f"tensor_compose parts must be all states or all operators, got {kinds}")


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced density matrix on the kept subsystem labels (trace preserved)."""
    keep = set(keep) if not isinstance(keep, (set, frozenset)) else keep
    labels = rho.layout.labels
    unknown = keep - set(labels)
    if unknown:
        raise LayoutError(f"unknown labels {sorted(unknown)}; have {labels}")
    if not keep:
        raise LayoutError("must keep at least one subsystem")
    dims = rho.layout.dims
    n_sub = len(dims)
    m = rho.entries.reshape(dims + dims)
    # Trace out dropped axes from the back so earlier axis numbers stay valid.
    for ax in sorted((i for i, l in enumerate(labels) if l not in keep), reverse=True):
        m = np.trace(m, axis1=ax, axis2=ax + n_sub)
        n_sub -= 1
    kept_layout = rho.layout.restrict(tuple(keep))
    d = kept_layout.total_dim
    return DensityMatrix(kept_layout, m.reshape(d, d))


def evolve_unitary(state, H: LinearOperator, t: float):
    """Closed-system evolution by U = exp(-iHt); preserves norm and trace."""
    if not H.hermitian_flag:
        raise InvariantError("evolution generator must be Hermitian")
    if H.layout != state.layout:
        raise LayoutError("generator and state layouts differ")
    u = H.unitary_at(t)
    if isinstance(state, StateVector):
        return StateVector(state.layout, u @ state.amplitudes, metadata=dict(state.metadata))
    if isinstance(state, DensityMatrix):
        m = u @ state.entries @ u.conj().T
        # Re-symmetrize round-off so the constructor invariants hold exactly.
        m = 0.5 * (m + m.conj().T)
        return DensityMatrix(state.layout, m)
    raise TypeError(f"cannot evolve {type(state)}")


def projector(layout: CompositeLayout, subsystem: str, basis_index: int) -> LinearOperator:
    """|j><j| on the named subsystem, identity elsewhere."""
    d = layout.dim(subsystem)
    if not 0 <= basis_index < d:
        raise LayoutError(f"basis index {basis_index} out of range for {subsystem!r} (dim {d})")
    p = np.zeros((d, d), dtype=complex)
    p[basis_index, basis_index] = 1.0
    return LinearOperator(layout, embed(layout, {subsystem: p}), hermitian_flag=True)


def expectation(rho, A: LinearOperator) -> float:
    """Tr(rho A) for Hermitian A; works on StateVector or DensityMatrix."""
    if not A.hermitian_flag:
        raise InvariantError("expectation requires a Hermitian observable")
    if A.layout != rho.layout:
        raise LayoutError("observable and state layouts differ")
    if isinstance(rho, StateVector):
        val = complex(np.vdot(rho.amplitudes, A.entries @ rho.amplitudes))
    else:
        val = complex(np.trace(rho.entries @ A.entries))
    if abs(val.imag) > 1e-9:
        raise InvariantError(f"expectation of Hermitian observable has imaginary part {val.imag}")
    return float(val.real)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2) * sum |eigenvalues(a - b)|, in [0, 1]."""
    if a.layout != b.layout:
        raise LayoutError("trace distance needs matching layouts")
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a.entries - b.entries))))
