"""Qubit primitives: Pauli basis, GHZ-like states, reference boxes, gates.

Index conventions used throughout the package:

* Pauli index order is ``0 -> Z, 1 -> X, 2 -> Y, 3 -> identity``.
* A GHZ index is a tuple of bits ``(l1, ..., lN)``; its integer form reads
  the bits big-endian, so ``l1`` is the most significant bit.
* ``|phi_l> = (|l1...lN> + (-1)^l1 |~l1...~lN>) / sqrt(2)``; all amplitudes
  are real and the ``2^N`` vectors form an orthonormal basis.
"""

from __future__ import annotations

from enum import Enum
from typing import Sequence

import numpy as np

from .tensor import Operator, StateVector

SQ2 = np.sqrt(2.0)

_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_I = np.eye(2, dtype=complex)
_PAULI = (_Z, _X, _Y, _I)


class SettingSymbol(Enum):
    """Symbolic measurement label: plain settings S0..S2, rotated combinations T0..T2, identity."""

    S0 = "S0"
    S1 = "S1"
    S2 = "S2"
    T0 = "T0"
    T1 = "T1"
    T2 = "T2"
    ID = "ID"


def pauli(idx: int) -> Operator:
    """Single-qubit operator for a Pauli index (0=Z, 1=X, 2=Y, 3=identity)."""
    if idx not in (0, 1, 2, 3):
        raise ValueError(f"Pauli index must be 0..3, got {idx}")
    return Operator(_PAULI[idx], (2,))


def ghz_bits(l: int, n: int) -> tuple[int, ...]:
    """Bits (l1..lN) of an integer GHZ index, big-endian."""
    if not 0 <= l < 2**n:
        raise ValueError(f"GHZ index {l} out of range for n={n}")
    return tuple((l >> (n - 1 - i)) & 1 for i in range(n))


def ghz_int(bits: Sequence[int]) -> int:
    """Integer form of a GHZ bit tuple, big-endian."""
    out = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"GHZ bits must be 0/1, got {tuple(bits)}")
        out = (out << 1) | b
    return out


def ghz_state(bits: Sequence[int]) -> StateVector:
    """GHZ-like basis vector |phi_l> for the given bit tuple."""
    bits = tuple(int(b) for b in bits)
    n = len(bits)
    if n < 1:
        raise ValueError("GHZ index needs at least one bit")
    v = np.zeros(2**n, dtype=complex)
    idx = ghz_int(bits)
    v[idx] += 1.0
    v[idx ^ (2**n - 1)] += (-1.0) ** bits[0]
    return StateVector(v / SQ2, (2,) * n)


def ghz_basis(n: int) -> np.ndarray:
    """Matrix whose columns are |phi_l> for l = 0 .. 2^n - 1."""
    return np.column_stack([ghz_state(ghz_bits(l, n)).amplitudes for l in range(2**n)])


def phi_plus() -> StateVector:
    """Two-qubit maximally entangled state (|00> + |11>)/sqrt(2)."""
    return ghz_state((0, 0))


def _plain_observable(party: int, setting: int, branch: int) -> np.ndarray:
    if party == 1:
        table = ((_X + _Z) / SQ2, (_X - _Z) / SQ2, branch * _Y)
    else:
        table = (_Z, _X, branch * _Y)
    return table[setting]


def ref_observable(party: int, setting: int | SettingSymbol, branch: int = +1) -> Operator:
    """Reference observable of external party ``party`` (1-based).

    Party 1 uses the rotated pair ((X+Z)/sqrt2, (X-Z)/sqrt2, branch*Y); every
    other party uses (Z, X, branch*Y).  ``T0``/``T1`` are the inverse-rotated
    combinations of party 1's first two settings and evaluate to Z and X;
    they are defined for party 1 only.  ``T2`` is an alias for setting 2 and
    ``ID`` is the identity.
    """
    if party < 1:
        raise ValueError(f"party index is 1-based, got {party}")
    if branch not in (+1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch}")
    if isinstance(setting, SettingSymbol):
        sym = setting
        if sym is SettingSymbol.ID:
            return Operator(_I, (2,))
        if sym in (SettingSymbol.T0, SettingSymbol.T1):
            if party != 1:
                raise ValueError(f"{sym.value} is only defined for party 1")
            a0 = _plain_observable(1, 0, branch)
            a1 = _plain_observable(1, 1, branch)
            m = (a0 - a1) / SQ2 if sym is SettingSymbol.T0 else (a0 + a1) / SQ2
            return Operator(m, (2,))
        setting = {SettingSymbol.S0: 0, SettingSymbol.S1: 1, SettingSymbol.S2: 2, SettingSymbol.T2: 2}[sym]
    if setting not in (0, 1, 2):
        raise ValueError(f"setting must be 0..2, got {setting}")
    return Operator(_plain_observable(party, setting, branch), (2,))


def ref_b_observable(subnet: int, setting: int | SettingSymbol) -> Operator:
    """Reference binary observable of the final party's box for one subnet.

    Subnet 1 uses (Z, X); every other subnet uses the rotated pair, whose
    ``T0``/``T1`` combinations evaluate to Z and X.
    """
    if subnet < 1:
        raise ValueError(f"subnet index is 1-based, got {subnet}")
    if isinstance(setting, SettingSymbol):
        sym = setting
        if sym is SettingSymbol.ID:
            return Operator(_I, (2,))
        if sym in (SettingSymbol.T0, SettingSymbol.T1):
            if subnet == 1:
                raise ValueError(f"{sym.value} is only defined for subnets >= 2")
            b0 = (_X + _Z) / SQ2
            b1 = (_X - _Z) / SQ2
            m = (b0 - b1) / SQ2 if sym is SettingSymbol.T0 else (b0 + b1) / SQ2
            return Operator(m, (2,))
        try:
            setting = {SettingSymbol.S0: 0, SettingSymbol.S1: 1}[sym]
        except KeyError:
            raise ValueError(f"{sym.value} is not a valid box setting") from None
    if setting not in (0, 1):
        raise ValueError(f"box setting must be 0 or 1, got {setting}")
    if subnet == 1:
        return Operator((_Z, _X)[setting], (2,))
    return Operator(((_X + _Z) / SQ2, (_X - _Z) / SQ2)[setting], (2,))


_NAMED_GATES = {
    "identity": None,  # any n
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "cnot": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
    "toffoli": None,  # built below, n=3
}
_GATE_QUBITS = {"cz": 2, "cnot": 2, "swap": 2, "toffoli": 3}

UNITARY_TOL = 1e-10


def _toffoli() -> np.ndarray:
    m = np.eye(8, dtype=complex)
    m[[6, 7]] = m[[7, 6]]
    return m


def haar_unitary(dim: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from a seeded complex Gaussian, via QR with phase fix."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def gate(spec: str | np.ndarray | Sequence[Sequence[complex]], n: int = 2, seed: int | None = None) -> Operator:
    """N-qubit gate from a name, an explicit matrix, or a seeded random draw.

    Names: identity (any n), cz, cnot, swap (n=2), toffoli (n=3), random
    (requires ``seed``).  Explicit matrices must be unitary 2^n x 2^n.
    """
    dim = 2**n
    if isinstance(spec, str):
        name = spec.strip().lower()
        if name == "identity":
            return Operator(np.eye(dim, dtype=complex), (2,) * n)
        if name == "random":
            if seed is None:
                raise ValueError("random gate requires a seed")
            return Operator(haar_unitary(dim, seed), (2,) * n)
        if name == "toffoli":
            if n != 3:
                raise ValueError("toffoli is a 3-qubit gate")
            return Operator(_toffoli(), (2,) * n)
        if name in _NAMED_GATES and _NAMED_GATES[name] is not None:
            if n != _GATE_QUBITS[name]:
                raise ValueError(f"{name} is a {_GATE_QUBITS[name]}-qubit gate")
            return Operator(_NAMED_GATES[name], (2,) * n)
        raise ValueError(f"unknown gate name {spec!r}")
    m = np.asarray(spec, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"gate matrix must be {dim}x{dim} for n={n}, got {m.shape}")
    dev = float(np.max(np.abs(m.conj().T @ m - np.eye(dim))))
    if dev > UNITARY_TOL:
        raise ValueError(f"gate matrix is not unitary (deviation {dev:.3e})")
    return Operator(m, (2,) * n)


def gate_from_record(record: dict, n: int) -> Operator:
    """Gate from a parsed file record: {'name': ...}, {'matrix': ...} or {'random': ..., 'seed': ...}."""
    if not isinstance(record, dict):
        raise ValueError("gate record must be a mapping")
    keys = {"name", "matrix", "random", "seed"} & set(record)
    if "name" in keys:
        return gate(str(record["name"]), n)
    if "matrix" in keys:
        rows = record["matrix"]
        try:
            m = np.array([[complex(re, im) for re, im in row] for row in rows])
        except (TypeError, ValueError) as exc:
            raise ValueError("matrix entries must be [re, im] pairs") from exc
        return gate(m, n)
    if "random" in keys:
        seed = record.get("seed")
        if seed is None:
            raise ValueError("random gate record requires a seed")
        return gate("random", n, seed=int(seed))
    raise ValueError("gate record needs one of: name, matrix, random")
