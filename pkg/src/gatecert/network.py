"""Exact Born-rule simulation of the two certification network scenarios.

Two scenarios are supported:

* ``almost_di``: N external parties A_1..A_N each share a bipartite source
  with a central party, who may apply a unitary V (input e=1) before the
  final party L measures all of its sites jointly with a 2^N-outcome box.
* ``di``: each subnet i has two sources, A_i -- R_{i,1} and R_{i,2} -- L_i.
  The central party applies V to the collected R_{*,1} wires (input e=1),
  then each subnet's repeater performs a four-outcome joint measurement on
  (R_{i,1}, R_{i,2}).  L either measures one binary box per site (setting
  y in {0,1}^N) or the joint 2^N-outcome box (setting ``perp``).

Canonical site order: A_1..A_N, then (di only) R_{1,1}..R_{N,1},
R_{1,2}..R_{N,2}, then L_1..L_N.  Probability arrays are indexed by
(a_1..a_N, (r_1..r_N,) l) with the joint L outcome l as a single axis.

All probabilities are exact Born values; tables carry every setting row,
including rows no verification step consumes.
"""

from __future__ import annotations

import io
import json
import os
import re
from dataclasses import dataclass, replace
from itertools import product
from typing import Iterator, Mapping, Sequence

import numpy as np

from .primitives import SettingSymbol, ghz_bits, ghz_state, phi_plus, ref_b_observable, ref_observable
from .tensor import (
    Operator,
    StateVector,
    apply_raw,
    apply_raw_batch,
    kron,
    permute_sites,
)

ALMOST_DI = "almost_di"
DI = "di"
PERP = "perp"

SCHEMES = (ALMOST_DI, DI)

VALIDATE_TOL = 1e-10
PROB_IMAG_TOL = 1e-12
PROB_NEG_TOL = -1e-14
SUM_TOL = 1e-12


@dataclass(frozen=True)
class ScenarioSpec:
    """Settings and outcome structure of one scenario."""

    scheme: str
    n: int

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n < 2:
            raise ValueError("at least two subnets are required")

    def x_settings(self) -> Iterator[tuple[int, ...]]:
        return product(range(3), repeat=self.n)

    def y_settings(self) -> list:
        if self.scheme == ALMOST_DI:
            return []
        return [bits for bits in product(range(2), repeat=self.n)] + [PERP]

    def settings(self) -> Iterator[tuple]:
        for x in self.x_settings():
            for e in (0, 1):
                if self.scheme == ALMOST_DI:
                    yield (x, e)
                else:
                    for y in self.y_settings():
                        yield (x, e, y)

    def outcome_shape(self) -> tuple[int, ...]:
        if self.scheme == ALMOST_DI:
            return (2,) * self.n + (2**self.n,)
        return (2,) * self.n + (4,) * self.n + (2**self.n,)


@dataclass(frozen=True)
class SiteLayout:
    """Site bookkeeping for the canonical ordering."""

    scheme: str
    n: int
    dims: tuple[int, ...]

    def a_site(self, i: int) -> int:
        return i - 1

    def r1_site(self, i: int) -> int:
        if self.scheme != DI:
            raise ValueError("repeater sites exist only in the di scheme")
        return self.n + i - 1

    def r2_site(self, i: int) -> int:
        if self.scheme != DI:
            raise ValueError("repeater sites exist only in the di scheme")
        return 2 * self.n + i - 1

    def l_site(self, i: int) -> int:
        return (self.n if self.scheme == ALMOST_DI else 3 * self.n) + i - 1

    def l_sites(self) -> list[int]:
        return [self.l_site(i) for i in range(1, self.n + 1)]

    def r1_sites(self) -> list[int]:
        return [self.r1_site(i) for i in range(1, self.n + 1)]

    def v_sites(self) -> list[int]:
        return self.l_sites() if self.scheme == ALMOST_DI else self.r1_sites()

    def label(self, site: int) -> str:
        n = self.n
        if site < n:
            return f"A{site + 1}"
        if self.scheme == ALMOST_DI:
            return f"L{site - n + 1}"
        if site < 2 * n:
            return f"R{site - n + 1},1"
        if site < 3 * n:
            return f"R{site - 2 * n + 1},2"
        return f"L{site - 3 * n + 1}"


@dataclass(frozen=True)
class Realization:
    """Concrete states and measurement operators for one scenario.

    ``sources`` lists two-site pure states: for ``almost_di`` the i-th state
    lives on (A_i, L_i); for ``di`` the first N live on (A_i, R_{i,1}) and
    the next N on (R_{i,2}, L_i).  ``eve`` acts on the L collective
    (``almost_di``) or the R_{*,1} collective (``di``).  ``branch`` records
    the sign of the third reference setting this realization is built for.
    """

    scheme: str
    n: int
    sources: tuple[StateVector, ...]
    a_obs: tuple[tuple[Operator, Operator, Operator], ...]
    l_meas: tuple[Operator, ...]
    eve: Operator
    branch: int = +1
    b_obs: tuple[tuple[Operator, Operator], ...] | None = None
    repeaters: tuple[tuple[Operator, Operator, Operator, Operator], ...] | None = None

    def scenario(self) -> ScenarioSpec:
        return ScenarioSpec(self.scheme, self.n)

    def a_dims(self) -> tuple[int, ...]:
        return tuple(src.dims[0] for src in self.sources[: self.n])

    def l_dims(self) -> tuple[int, ...]:
        if self.scheme == ALMOST_DI:
            return tuple(src.dims[1] for src in self.sources[: self.n])
        return tuple(src.dims[1] for src in self.sources[self.n :])

    def r1_dims(self) -> tuple[int, ...]:
        return tuple(src.dims[1] for src in self.sources[: self.n])

    def r2_dims(self) -> tuple[int, ...]:
        return tuple(src.dims[0] for src in self.sources[self.n :])

    def layout(self) -> SiteLayout:
        if self.scheme == ALMOST_DI:
            dims = self.a_dims() + self.l_dims()
        else:
            dims = self.a_dims() + self.r1_dims() + self.r2_dims() + self.l_dims()
        return SiteLayout(self.scheme, self.n, dims)


def validate_realization(real: Realization, tol: float = VALIDATE_TOL) -> None:
    """Check structural and operator invariants; raises ValueError on failure."""
    n = real.n
    if real.scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {real.scheme!r}")
    if real.branch not in (+1, -1):
        raise ValueError(f"branch must be +1 or -1, got {real.branch}")
    want_sources = n if real.scheme == ALMOST_DI else 2 * n
    if len(real.sources) != want_sources:
        raise ValueError(f"expected {want_sources} sources, got {len(real.sources)}")
    for k, src in enumerate(real.sources):
        if src.n_sites != 2:
            raise ValueError(f"source {k} must be bipartite, has {src.n_sites} sites")
        if abs(src.norm() - 1.0) > 1e-12:
            raise ValueError(f"source {k} is not normalized (norm {src.norm():.2e})")
    if len(real.a_obs) != n:
        raise ValueError(f"expected observables for {n} parties, got {len(real.a_obs)}")
    a_dims = real.a_dims()
    for i, triple in enumerate(real.a_obs, start=1):
        if len(triple) != 3:
            raise ValueError(f"party {i} needs 3 observables, got {len(triple)}")
        for x, obs in enumerate(triple):
            if obs.dims != (a_dims[i - 1],):
                raise ValueError(f"observable A[{i},{x}] has dims {obs.dims}, site needs {(a_dims[i-1],)}")
            if not obs.is_hermitian(tol):
                raise ValueError(f"observable A[{i},{x}] is not Hermitian")
            dev = np.max(np.abs(obs.entries @ obs.entries - np.eye(obs.dim)))
            if dev > tol:
                raise ValueError(f"observable A[{i},{x}] does not square to identity (dev {dev:.2e})")
    l_dims = real.l_dims()
    dl = int(np.prod(l_dims))
    if len(real.l_meas) != 2**n:
        raise ValueError(f"joint box needs {2**n} elements, got {len(real.l_meas)}")
    _check_povm(real.l_meas, dl, "joint box", tol)
    v_dims = real.l_dims() if real.scheme == ALMOST_DI else real.r1_dims()
    if real.eve.dims != v_dims:
        raise ValueError(f"eve operation has dims {real.eve.dims}, expected {v_dims}")
    if not real.eve.is_unitary(tol):
        raise ValueError("eve operation is not unitary")
    if real.scheme == ALMOST_DI:
        if real.b_obs is not None or real.repeaters is not None:
            raise ValueError("almost_di realizations carry no box observables or repeaters")
        return
    if real.b_obs is None or len(real.b_obs) != n:
        raise ValueError(f"di realization needs binary boxes for {n} subnets")
    for i, pair in enumerate(real.b_obs, start=1):
        if len(pair) != 2:
            raise ValueError(f"subnet {i} needs 2 box observables")
        for y, obs in enumerate(pair):
            if obs.dims != (l_dims[i - 1],):
                raise ValueError(f"box B[{i},{y}] has dims {obs.dims}, site needs {(l_dims[i-1],)}")
            if not obs.is_hermitian(tol):
                raise ValueError(f"box B[{i},{y}] is not Hermitian")
            dev = np.max(np.abs(obs.entries @ obs.entries - np.eye(obs.dim)))
            if dev > tol:
                raise ValueError(f"box B[{i},{y}] does not square to identity (dev {dev:.2e})")
    if real.repeaters is None or len(real.repeaters) != n:
        raise ValueError(f"di realization needs repeaters for {n} subnets")
    r1_dims, r2_dims = real.r1_dims(), real.r2_dims()
    for i, quad in enumerate(real.repeaters, start=1):
        if len(quad) != 4:
            raise ValueError(f"repeater {i} needs 4 elements")
        pair_dims = (r1_dims[i - 1], r2_dims[i - 1])
        for k, el in enumerate(quad):
            if el.dims != pair_dims:
                raise ValueError(f"repeater element R[{i},{k}] has dims {el.dims}, expected {pair_dims}")
        _check_povm(quad, int(np.prod(pair_dims)), f"repeater {i}", tol)


def _check_povm(elements: Sequence[Operator], dim: int, what: str, tol: float) -> None:
    total = np.zeros((dim, dim), dtype=complex)
    for k, el in enumerate(elements):
        if el.dim != dim:
            raise ValueError(f"{what} element {k} has dimension {el.dim}, expected {dim}")
        if not el.is_hermitian(tol):
            raise ValueError(f"{what} element {k} is not Hermitian")
        low = np.linalg.eigvalsh(el.entries)[0]
        if low < -tol:
            raise ValueError(f"{what} element {k} is not positive (min eig {low:.2e})")
        total += el.entries
    if np.max(np.abs(total - np.eye(dim))) > tol:
        raise ValueError(f"{what} elements do not sum to identity")


def reference_realization(n: int, u: Operator, branch: int = +1, scheme: str = ALMOST_DI) -> Realization:
    """Ideal realization for the target gate: maximally entangled sources,
    reference observables, GHZ-basis boxes, Bell-basis repeaters, and
    V = conj(U) for branch +1 (V = U for branch -1)."""
    if u.dims != (2,) * n:
        raise ValueError(f"target gate must act on {n} qubits, got dims {u.dims}")
    if not u.is_unitary():
        raise ValueError("target gate is not unitary")
    if branch not in (+1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch}")
    a_obs = tuple(
        tuple(ref_observable(i, x, branch) for x in range(3)) for i in range(1, n + 1)
    )
    l_meas = tuple(
        _projector(ghz_state(ghz_bits(l, n))) for l in range(2**n)
    )
    v = Operator(u.entries.conj() if branch == +1 else u.entries, (2,) * n)
    if scheme == ALMOST_DI:
        sources = tuple(phi_plus() for _ in range(n))
        return Realization(ALMOST_DI, n, sources, a_obs, l_meas, v, branch)
    if scheme != DI:
        raise ValueError(f"unknown scheme {scheme!r}")
    sources = tuple(phi_plus() for _ in range(2 * n))
    b_obs = tuple(
        tuple(ref_b_observable(i, y) for y in range(2)) for i in range(1, n + 1)
    )
    bell = tuple(_projector(ghz_state(ghz_bits(r, 2))) for r in range(4))
    repeaters = tuple(bell for _ in range(n))
    return Realization(DI, n, sources, a_obs, l_meas, v, branch, b_obs, repeaters)


def _projector(state: StateVector) -> Operator:
    return Operator(np.outer(state.amplitudes, state.amplitudes.conj()), state.dims)


def assemble_state(real: Realization) -> StateVector:
    """Tensor product of all sources, permuted into the canonical site order."""
    joint = kron(list(real.sources))
    n = real.n
    if real.scheme == ALMOST_DI:
        # source order A1 L1 A2 L2 ... -> A1..AN L1..LN
        order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    else:
        # source order A1 R11 A2 R21 ... R12 L1 R22 L2 ... -> canonical
        order = (
            [2 * i for i in range(n)]
            + [2 * i + 1 for i in range(n)]
            + [2 * n + 2 * i for i in range(n)]
            + [2 * n + 2 * i + 1 for i in range(n)]
        )
    return permute_sites(joint, order)


def _binary_elements(obs: Operator) -> np.ndarray:
    eye = np.eye(obs.dim)
    return np.stack([(eye + obs.entries) / 2, (eye - obs.entries) / 2])


def _state_with_eve(real: Realization, e: int) -> np.ndarray:
    psi = assemble_state(real)
    if e == 0:
        return psi.amplitudes
    lay = real.layout()
    return apply_raw(psi.amplitudes, psi.dims, real.eve.entries, lay.v_sites())


def born_table(real: Realization) -> "ProbabilityTable":
    """Exact probability table over every setting row of the scenario."""
    validate_realization(real)
    lay = real.layout()
    dims = lay.dims
    n = real.n
    scen = real.scenario()
    a_stacks = [
        [_binary_elements(real.a_obs[i - 1][x]) for x in range(3)] for i in range(1, n + 1)
    ]
    entries: dict = {}
    for e in (0, 1):
        base = _state_with_eve(real, e)
        joint_bras = np.stack(
            [apply_raw(base, dims, m.entries, lay.l_sites()) for m in real.l_meas]
        )
        if real.scheme == DI:
            rep_stacks = [
                np.stack([el.entries for el in real.repeaters[i - 1]]) for i in range(1, n + 1)
            ]
            box_bras: dict[tuple, np.ndarray] = {}
            for y in product(range(2), repeat=n):
                vecs = [base]
                for i in range(1, n + 1):
                    els = _binary_elements(real.b_obs[i - 1][y[i - 1]])
                    vecs = [
                        apply_raw(v, dims, els[bit], [lay.l_site(i)])
                        for v in vecs
                        for bit in (0, 1)
                    ]
                box_bras[y] = np.stack(vecs)
        for x in scen.x_settings():
            block = base[None, :]
            if real.scheme == DI:
                for i in range(n, 0, -1):
                    block = apply_raw_batch(
                        block, dims, rep_stacks[i - 1], [lay.r1_site(i), lay.r2_site(i)]
                    )
            for i in range(n, 0, -1):
                block = apply_raw_batch(block, dims, a_stacks[i - 1][x[i - 1]], [lay.a_site(i)])
            if real.scheme == ALMOST_DI:
                entries[(x, e)] = _finish_probs(block, joint_bras, scen, (x, e))
            else:
                for y in scen.y_settings():
                    bras = joint_bras if y == PERP else box_bras[y]
                    entries[(x, e, y)] = _finish_probs(block, bras, scen, (x, e, y))
    return ProbabilityTable(real.scheme, n, entries)


def _finish_probs(block: np.ndarray, bras: np.ndarray, scen: ScenarioSpec, key: tuple) -> np.ndarray:
    raw = block @ bras.conj().T  # (branches, 2^N)
    worst = float(np.max(np.abs(raw.imag))) if raw.size else 0.0
    if worst > PROB_IMAG_TOL:
        raise ValueError(f"setting {key}: probabilities have imaginary part {worst:.2e}")
    probs = raw.real.reshape(scen.outcome_shape())
    low = float(probs.min())
    if low < PROB_NEG_TOL:
        raise ValueError(f"setting {key}: negative probability {low:.2e}")
    total = float(probs.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"setting {key}: probabilities sum to {total!r}")
    probs.setflags(write=False)
    return probs


class ProbabilityTable:
    """Exact joint conditional distribution p(outcomes | settings).

    ``entries`` maps a settings key to an outcome array.  Keys are
    ``(x, e)`` for ``almost_di`` and ``(x, e, y)`` for ``di`` with
    ``y`` either a bit tuple or the string ``"perp"``.
    """

    def __init__(self, scheme: str, n: int, entries: Mapping[tuple, np.ndarray]):
        self.scheme = scheme
        self.n = n
        scen = ScenarioSpec(scheme, n)
        shape = scen.outcome_shape()
        norm: dict = {}
        for key, arr in entries.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != shape:
                raise ValueError(f"outcome array for {key} has shape {arr.shape}, expected {shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            norm[self._norm_key(key)] = arr
        self.entries = norm

    def _norm_key(self, key: tuple) -> tuple:
        if self.scheme == ALMOST_DI:
            x, e = key
            return (tuple(int(v) for v in x), int(e))
        x, e, y = key
        y = PERP if isinstance(y, str) else tuple(int(v) for v in y)
        if isinstance(y, str) and y != PERP:
            raise ValueError(f"unknown box setting {y!r}")
        return (tuple(int(v) for v in x), int(e), y)

    def scenario(self) -> ScenarioSpec:
        return ScenarioSpec(self.scheme, self.n)

    def keys(self):
        return self.entries.keys()

    def __contains__(self, key: tuple) -> bool:
        return self._norm_key(key) in self.entries

    def array(self, key: tuple) -> np.ndarray:
        nk = self._norm_key(key)
        try:
            return self.entries[nk]
        except KeyError:
            raise ValueError(f"settings row {nk} is missing from the table") from None

    def prob(self, key: tuple, a: Sequence[int], l: int, r: Sequence[int] | None = None) -> float:
        arr = self.array(key)
        idx: tuple = tuple(int(v) for v in a)
        if self.scheme == DI:
            if r is None:
                raise ValueError("di outcomes need repeater results r")
            idx = idx + tuple(int(v) for v in r)
        return float(arr[idx + (int(l),)])

    def signed_sum(
        self,
        key: tuple,
        a_signs: Sequence[int] = (),
        b_signs: Sequence[int] = (),
        l: int | None = None,
        r: Mapping[int, int] | None = None,
    ) -> float:
        """Sum of probabilities weighted by (-1)^(a_i) for parties in
        ``a_signs`` and (-1)^(l_i) for subnets in ``b_signs``, restricted to
        a fixed joint outcome ``l`` and/or fixed repeater outcomes ``r``
        (mapping subnet -> outcome).  No renormalization."""
        arr = self.array(key)
        n = self.n
        w = arr
        for party in a_signs:
            shape = [1] * arr.ndim
            shape[party - 1] = 2
            w = w * np.array([1.0, -1.0]).reshape(shape)
        if r:
            if self.scheme != DI:
                raise ValueError("repeater conditions apply only to di tables")
            for subnet, k in r.items():
                sel = np.zeros(4)
                sel[int(k)] = 1.0
                shape = [1] * arr.ndim
                shape[n + subnet - 1] = 4
                w = w * sel.reshape(shape)
        lvec = np.ones(2**n)
        if l is not None:
            if b_signs:
                raise ValueError("cannot fix the joint outcome and sign box bits at once")
            lvec = np.zeros(2**n)
            lvec[int(l)] = 1.0
        else:
            for subnet in b_signs:
                bits = np.array([ghz_bits(v, n)[subnet - 1] for v in range(2**n)])
                lvec = lvec * (-1.0) ** bits
        shape = [1] * arr.ndim
        shape[-1] = 2**n
        w = w * lvec.reshape(shape)
        return float(w.sum())

    def max_difference(self, other: "ProbabilityTable") -> float:
        """Largest entrywise deviation over the union of settings rows."""
        if (self.scheme, self.n) != (other.scheme, other.n):
            raise ValueError("tables describe different scenarios")
        keys = set(self.entries) | set(other.entries)
        worst = 0.0
        for key in keys:
            if key not in self.entries or key not in other.entries:
                raise ValueError(f"settings row {key} present in only one table")
            worst = max(worst, float(np.max(np.abs(self.entries[key] - other.entries[key]))))
        return worst


_PARTY_RE = re.compile(r"^([AB])([0-9]+)$")

_A_EXPANSION = {
    SettingSymbol.S0: ((1.0, 0),),
    SettingSymbol.S1: ((1.0, 1),),
    SettingSymbol.S2: ((1.0, 2),),
    SettingSymbol.T2: ((1.0, 2),),
    SettingSymbol.T0: ((1 / np.sqrt(2), 0), (-1 / np.sqrt(2), 1)),
    SettingSymbol.T1: ((1 / np.sqrt(2), 0), (1 / np.sqrt(2), 1)),
}
_B_EXPANSION = {
    SettingSymbol.S0: ((1.0, 0),),
    SettingSymbol.S1: ((1.0, 1),),
    SettingSymbol.T0: ((1 / np.sqrt(2), 0), (-1 / np.sqrt(2), 1)),
    SettingSymbol.T1: ((1 / np.sqrt(2), 0), (1 / np.sqrt(2), 1)),
}


def _parse_assignment(assignment: Mapping[str, SettingSymbol], n: int, scheme: str):
    a_syms: dict[int, SettingSymbol] = {}
    b_syms: dict[int, SettingSymbol] = {}
    for label, sym in assignment.items():
        m = _PARTY_RE.match(label)
        if not m:
            raise ValueError(f"unknown party label {label!r}")
        kind, num = m.group(1), int(m.group(2))
        if not 1 <= num <= n:
            raise ValueError(f"party {label!r} out of range for n={n}")
        if not isinstance(sym, SettingSymbol):
            raise ValueError(f"setting for {label!r} must be a SettingSymbol")
        if kind == "A":
            if sym in (SettingSymbol.T0, SettingSymbol.T1) and num != 1:
                raise ValueError("rotated combinations are defined for party A1 only")
            a_syms[num] = sym
        else:
            if scheme != DI:
                raise ValueError("box parties exist only in the di scheme")
            if sym is SettingSymbol.S2 or sym is SettingSymbol.T2:
                raise ValueError("boxes have two settings; S2/T2 are not available")
            b_syms[num] = sym
    return a_syms, b_syms


def expectation(
    table: ProbabilityTable,
    assignment: Mapping[str, SettingSymbol],
    *,
    e: int,
    l: int | None = None,
    r: Mapping[int, int] | None = None,
    renormalize: bool = True,
) -> float:
    """Correlator of a product of labeled observables, from table rows.

    ``assignment`` maps party labels ("A1".."AN", and "B1".."BN" for di
    tables) to setting symbols; omitted parties act as identity.  ``l``
    restricts to one joint L outcome (di: within ``perp`` rows), ``r``
    restricts repeater outcomes per subnet.  With ``renormalize`` the signed
    sum is divided by the probability of the restriction, yielding a
    conditional expectation; without it the joint (unnormalized) value is
    returned.
    """
    a_syms, b_syms = _parse_assignment(assignment, table.n, table.scheme)
    if l is not None and b_syms:
        raise ValueError("cannot combine box observables with a joint-outcome condition")
    combos: list[tuple[float, dict[int, int], dict[int, int]]] = [(1.0, {}, {})]
    for party, sym in sorted(a_syms.items()):
        if sym is SettingSymbol.ID:
            continue
        combos = [
            (c * w, {**xs, party: setting}, ys)
            for (c, xs, ys) in combos
            for (w, setting) in _A_EXPANSION[sym]
        ]
    for subnet, sym in sorted(b_syms.items()):
        if sym is SettingSymbol.ID:
            continue
        combos = [
            (c * w, xs, {**ys, subnet: setting})
            for (c, xs, ys) in combos
            for (w, setting) in _B_EXPANSION[sym]
        ]
    a_signed = [p for p, s in a_syms.items() if s is not SettingSymbol.ID]
    b_signed = [p for p, s in b_syms.items() if s is not SettingSymbol.ID]
    total = 0.0
    for coeff, xs, ys in combos:
        x = tuple(xs.get(i, 0) for i in range(1, table.n + 1))
        if table.scheme == ALMOST_DI:
            key: tuple = (x, e)
        else:
            if b_signed or ys:
                y: tuple | str = tuple(ys.get(i, 0) for i in range(1, table.n + 1))
            else:
                y = PERP
            key = (x, e, y)
        value = table.signed_sum(key, a_signed, b_signed, l=l, r=r)
        if renormalize:
            weight = table.signed_sum(key, (), (), l=l, r=r)
            if weight <= 1e-14:
                raise ValueError(f"conditioning event has probability {weight!r}")
            value /= weight
        total += coeff * value
    return total


def condition_probability(
    real: Realization,
    *,
    e: int = 0,
    r: Mapping[int, int] | None = None,
    l: int | None = None,
) -> float:
    """Probability of the given repeater and/or joint-box outcomes."""
    _, _, p = _steer(real, e=e, r=r, l=l)
    return p


def conditional_state(
    real: Realization,
    *,
    e: int = 0,
    r: Mapping[int, int] | None = None,
    l: int | None = None,
    purity_tol: float = 1e-10,
):
    """Steered state on the unmeasured sites after conditioning.

    Conditioning on repeater outcomes removes the measured (R_{i,1}, R_{i,2})
    pairs; conditioning on the joint box removes the L sites.  Returns a
    StateVector when the steered state is pure (within ``purity_tol``),
    otherwise the density Operator.
    """
    rho, dims, p = _steer(real, e=e, r=r, l=l)
    if p <= 1e-14:
        raise ValueError(f"conditioning event has probability {p!r}")
    vals, vecs = np.linalg.eigh(rho)
    if 1.0 - vals[-1] <= purity_tol:
        vec = vecs[:, -1]
        k = int(np.argmax(np.abs(vec)))
        vec = vec * np.exp(-1j * np.angle(vec[k]))
        return StateVector(vec, dims)
    return Operator(rho, dims)


def _steer(real: Realization, *, e: int, r: Mapping[int, int] | None, l: int | None):
    validate_realization(real)
    lay = real.layout()
    dims = lay.dims
    psi = _state_with_eve(real, e)
    chi = psi
    dismissed: list[int] = []
    if r:
        if real.scheme != DI:
            raise ValueError("repeater conditions apply only to the di scheme")
        for subnet, k in sorted(r.items()):
            el = real.repeaters[subnet - 1][int(k)]
            sites = [lay.r1_site(subnet), lay.r2_site(subnet)]
            chi = apply_raw(chi, dims, el.entries, sites)
            dismissed += sites
    if l is not None:
        chi = apply_raw(chi, dims, real.l_meas[int(l)].entries, lay.l_sites())
        dismissed += lay.l_sites()
    p = float(np.real(np.vdot(psi, chi)))
    keep = [s for s in range(len(dims)) if s not in dismissed]
    kdim = int(np.prod([dims[s] for s in keep]))
    chi_m = np.moveaxis(chi.reshape(dims), keep, range(len(keep))).reshape(kdim, -1)
    psi_m = np.moveaxis(psi.reshape(dims), keep, range(len(keep))).reshape(kdim, -1)
    rho = chi_m @ psi_m.conj().T
    if p > 1e-14:
        rho = rho / p
    rho = (rho + rho.conj().T) / 2
    return rho, tuple(dims[s] for s in keep), p


# --- serialization ---------------------------------------------------------


def _y_sort_key(y) -> tuple:
    return (1,) if y == PERP else (0,) + tuple(y)


def _sorted_keys(table: ProbabilityTable) -> list[tuple]:
    if table.scheme == ALMOST_DI:
        return sorted(table.entries, key=lambda k: (k[0], k[1]))
    return sorted(table.entries, key=lambda k: (k[0], k[1], _y_sort_key(k[2])))


def write_table(table: ProbabilityTable, stream: io.TextIOBase) -> None:
    """One JSON record per line: a header, then every (settings, outcomes, p)."""
    header = {"kind": "probability_table", "scheme": table.scheme, "n": table.n}
    stream.write(json.dumps(header, sort_keys=True) + "\n")
    n = table.n
    for key in _sorted_keys(table):
        arr = table.entries[key]
        for idx in np.ndindex(arr.shape):
            a = list(idx[:n])
            l = list(ghz_bits(idx[-1], n))
            rec: dict = {"x": list(key[0]), "e": key[1]}
            if table.scheme == DI:
                rec["y"] = PERP if key[2] == PERP else list(key[2])
                rec["r"] = list(idx[n : 2 * n])
            rec["a"] = a
            rec["l"] = l
            rec["p"] = float(arr[idx])
            stream.write(json.dumps(rec, sort_keys=True) + "\n")


def save_table(table: ProbabilityTable, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        write_table(table, fh)
    os.replace(tmp, path)


def read_table(stream: io.TextIOBase) -> ProbabilityTable:
    lines = [ln for ln in stream.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty table file")
    header = json.loads(lines[0])
    if header.get("kind") != "probability_table":
        raise ValueError("not a probability table file")
    scheme = header["scheme"]
    n = int(header["n"])
    scen = ScenarioSpec(scheme, n)
    shape = scen.outcome_shape()
    arrays: dict[tuple, np.ndarray] = {}
    for ln in lines[1:]:
        rec = json.loads(ln)
        x = tuple(int(v) for v in rec["x"])
        e = int(rec["e"])
        if scheme == ALMOST_DI:
            key: tuple = (x, e)
            idx = tuple(int(v) for v in rec["a"])
        else:
            y = rec["y"]
            y = PERP if y == PERP else tuple(int(v) for v in y)
            key = (x, e, y)
            idx = tuple(int(v) for v in rec["a"]) + tuple(int(v) for v in rec["r"])
        l = 0
        for bit in rec["l"]:
            l = (l << 1) | int(bit)
        if key not in arrays:
            arrays[key] = np.zeros(shape)
        arrays[key][idx + (l,)] = float(rec["p"])
    return ProbabilityTable(scheme, n, arrays)


def load_table(path: str) -> ProbabilityTable:
    with open(path) as fh:
        return read_table(fh)
