"""Dense linear algebra over multi-site tensor-product spaces.

States and operators carry an explicit tuple of per-site dimensions.  The
computational basis is row-major with site 0 as the most significant digit,
so ``kron(a, b)`` agrees with ``numpy.kron`` and the basis index of
``|b0 b1 ... bk>`` is the mixed-radix integer with ``b0`` leading.

Everything here is pure: inputs are never mutated and stored arrays are
marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

DEFAULT_ZERO_TOL = 1e-8
HERMITIAN_TOL = 1e-10


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def _check_dims(dims: Sequence[int], total: int) -> tuple[int, ...]:
    t = tuple(int(d) for d in dims)
    if not t or any(d < 1 for d in t):
        raise ValueError(f"site dimensions must be positive, got {t}")
    if int(np.prod(t)) != total:
        raise ValueError(f"site dimensions {t} do not multiply out to {total}")
    return t


@dataclass(frozen=True)
class StateVector:
    """Pure state on an ordered list of sites."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        amps = _freeze(np.asarray(self.amplitudes).reshape(-1))
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", _check_dims(self.dims, amps.size))

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm() - 1.0) <= tol


@dataclass(frozen=True)
class Operator:
    """Square operator on an ordered list of sites."""

    entries: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        m = np.asarray(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be a square matrix, got shape {m.shape}")
        object.__setattr__(self, "entries", _freeze(m))
        object.__setattr__(self, "dims", _check_dims(self.dims, m.shape[0]))

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T, self.dims)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= tol)

    def is_unitary(self, tol: float = HERMITIAN_TOL) -> bool:
        d = self.dim
        return bool(np.max(np.abs(self.entries.conj().T @ self.entries - np.eye(d))) <= tol)

    def is_projector(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.is_hermitian(tol) and bool(
            np.max(np.abs(self.entries @ self.entries - self.entries)) <= tol
        )


def kron(factors: Iterable[StateVector] | Iterable[Operator]):
    """Tensor product of states or of operators, site lists concatenated."""
    items = list(factors)
    if not items:
        raise ValueError("kron of an empty factor list")
    if all(isinstance(f, StateVector) for f in items):
        amps = reduce(np.kron, [f.amplitudes for f in items])
        dims = sum((f.dims for f in items), ())
        return StateVector(amps, dims)
    if all(isinstance(f, Operator) for f in items):
        m = reduce(np.kron, [f.entries for f in items])
        dims = sum((f.dims for f in items), ())
        return Operator(m, dims)
    raise ValueError("kron factors must be all StateVector or all Operator")


def _normalize_keep(keep: Sequence[int], n_sites: int) -> list[int]:
    keep = list(dict.fromkeys(int(k) for k in keep))
    if not keep:
        raise ValueError("must keep at least one site")
    for k in keep:
        if k < 0 or k >= n_sites:
            raise ValueError(f"site index {k} out of range for {n_sites} sites")
    return keep


def partial_trace(op: Operator, keep: Sequence[int]) -> Operator:
    """Trace out all sites not listed in ``keep`` (result keeps their order)."""
    keep = _normalize_keep(keep, op.n_sites)
    drop = [s for s in range(op.n_sites) if s not in keep]
    dims = op.dims
    t = op.entries.reshape(dims + dims)
    n = len(dims)
    # move kept row/col axes first, then collapse the dropped pairs
    order = keep + [n + k for k in keep] + drop + [n + d for d in drop]
    t = t.transpose(order)
    dk = int(np.prod([dims[k] for k in keep]))
    dd = int(np.prod([dims[d] for d in drop])) if drop else 1
    t = t.reshape(dk, dk, dd, dd)
    out = np.einsum("abtt->ab", t)
    return Operator(out, tuple(dims[k] for k in keep))


def reduced_density(state: StateVector, keep: Sequence[int]) -> Operator:
    """Reduced density matrix of a pure state on the kept sites."""
    keep = _normalize_keep(keep, state.n_sites)
    drop = [s for s in range(state.n_sites) if s not in keep]
    t = state.amplitudes.reshape(state.dims)
    t = t.transpose(keep + drop)
    dk = int(np.prod([state.dims[k] for k in keep]))
    m = t.reshape(dk, -1)
    return Operator(m @ m.conj().T, tuple(state.dims[k] for k in keep))


def polar_unitary(op: Operator, zero_tol: float = DEFAULT_ZERO_TOL) -> Operator:
    """Unitary factor of the polar decomposition.

    Hermitian inputs are resolved by eigendecomposition; eigendirections with
    magnitude below ``zero_tol`` are sent to +1 so the result is total.
    """
    m = op.entries
    if np.max(np.abs(m - m.conj().T)) <= HERMITIAN_TOL:
        vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
        signs = np.where(np.abs(vals) < zero_tol, 1.0, np.sign(vals))
        return Operator((vecs * signs) @ vecs.conj().T, op.dims)
    u, _, vh = np.linalg.svd(m)
    return Operator(u @ vh, op.dims)


def fidelity(a: StateVector | Operator, b: StateVector | Operator) -> float:
    """Squared overlap; density-matrix arguments use Tr[rho sigma] on the pure side."""
    if a.dim != b.dim:
        raise ValueError(f"total dimensions differ: {a.dim} vs {b.dim}")
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    if isinstance(a, StateVector) and isinstance(b, Operator):
        return float(np.real(np.vdot(a.amplitudes, b.entries @ a.amplitudes)))
    if isinstance(a, Operator) and isinstance(b, StateVector):
        return fidelity(b, a)
    raise ValueError("fidelity of two density operators is not supported")


# --- raw ndarray plumbing used by the simulator ---------------------------


def apply_raw(vec: np.ndarray, dims: Sequence[int], mat: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """Apply ``mat`` to the listed sites (in the listed order) of a flat vector."""
    dims = tuple(dims)
    sites = list(sites)
    t = vec.reshape(dims)
    t = np.moveaxis(t, sites, range(len(sites)))
    d = int(np.prod([dims[s] for s in sites]))
    rest = t.shape[len(sites):]
    t = mat @ t.reshape(d, -1)
    t = t.reshape(tuple(dims[s] for s in sites) + rest)
    t = np.moveaxis(t, range(len(sites)), sites)
    return t.reshape(-1)


def apply_raw_batch(block: np.ndarray, dims: Sequence[int], mats: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """Apply a stack of k operators to every row of ``block``.

    Returns a ``(k * rows, dim)`` block whose row index is ``outcome * rows + row``,
    i.e. the new outcome digit is prepended as the most significant digit.
    """
    dims = tuple(dims)
    sites = list(sites)
    rows = block.shape[0]
    t = block.reshape((rows,) + dims)
    t = np.moveaxis(t, [s + 1 for s in sites], range(1, 1 + len(sites)))
    d = int(np.prod([dims[s] for s in sites]))
    rest = t.shape[1 + len(sites):]
    t = t.reshape(rows, d, -1)
    out = np.einsum("kde,bef->kbdf", mats.reshape(len(mats), d, d), t)
    out = out.reshape((len(mats) * rows, d) + rest)
    out = out.reshape((len(mats) * rows,) + tuple(dims[s] for s in sites) + rest)
    out = np.moveaxis(out, range(1, 1 + len(sites)), [s + 1 for s in sites])
    return out.reshape(len(mats) * rows, -1)


def apply_to_sites(state: StateVector, op: Operator, sites: Sequence[int]) -> StateVector:
    """Apply an operator to the given sites of a state."""
    sites = list(sites)
    want = tuple(state.dims[s] for s in sites)
    if want != op.dims:
        raise ValueError(f"operator dims {op.dims} do not match sites {sites} with dims {want}")
    return StateVector(apply_raw(state.amplitudes, state.dims, op.entries, sites), state.dims)


def permute_sites(state: StateVector, order: Sequence[int]) -> StateVector:
    """Reorder sites so that new site ``i`` is old site ``order[i]``."""
    order = list(order)
    if sorted(order) != list(range(state.n_sites)):
        raise ValueError(f"{order} is not a permutation of {state.n_sites} sites")
    t = state.amplitudes.reshape(state.dims).transpose(order)
    return StateVector(t.reshape(-1), tuple(state.dims[i] for i in order))


def expectation_value(state: StateVector, factors: Sequence[tuple[Operator, Sequence[int]]]) -> complex:
    """<psi| prod_j O_j |psi> for operators on pairwise disjoint site sets."""
    seen: set[int] = set()
    vec = state.amplitudes
    for op, sites in factors:
        s = set(sites)
        if s & seen:
            raise ValueError("operator site sets must be pairwise disjoint")
        seen |= s
        vec = apply_raw(vec, state.dims, op.entries, list(sites))
    return complex(np.vdot(state.amplitudes, vec))
