"""Local frames, swap isometries, and operator-level gate verification.

From a realization that satisfies the protocol's correlation constraints,
each site yields a pair of anticommuting involutions (a local frame).  The
frame defines a swap isometry K mapping the site into qubit (x) junk; the
grouped isometries turn the network's effective measurements into explicit
qubit operators that can be compared entrywise against the ideal ones.

Branch convention: a realization built with V = conj(U) ("plus") steers the
joint box toward the complex-conjugated images of the rotated basis states,
so the comparison targets are conj(delta_l); with V = U ("minus") they are
delta_l themselves.  A realization mixing the two signs across sites admits
no consistent target and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .decomp import delta_set
from .network import ALMOST_DI, DI, Realization, validate_realization
from .primitives import ghz_basis
from .tensor import Operator, StateVector, polar_unitary

OP_TOL = 1e-8
SUPPORT_TOL = 1e-10


def regularize(a0: Operator, a1: Operator, tilde: bool) -> tuple[np.ndarray, np.ndarray]:
    """Frame pair (z-like, x-like) from a site's two observables.

    With ``tilde`` the observables enter through their rotated combinations
    (a0 -+ a1)/sqrt(2), made into exact involutions by taking the unitary
    part of the polar decomposition; otherwise they are used as they are.
    """
    if not tilde:
        return a0.entries.copy(), a1.entries.copy()
    z = polar_unitary(Operator((a0.entries - a1.entries) / np.sqrt(2), a0.dims))
    x = polar_unitary(Operator((a0.entries + a1.entries) / np.sqrt(2), a0.dims))
    return z.entries, x.entries


def mirror_frame(z: np.ndarray, x: np.ndarray, source: StateVector, framed_wing: int) -> tuple[np.ndarray, np.ndarray]:
    """Frame on the opposite wing of a bipartite source.

    For a frame operator O on wing ``framed_wing``, the partner operator is
    the unitary part of Tr_framed[(O (x) 1) |psi><psi|]; on a maximally
    entangled source this is the transpose of O carried to the other wing.
    """
    d0, d1 = source.dims
    psi = source.amplitudes.reshape(d0, d1)
    out = []
    for op in (z, x):
        if framed_wing == 0:
            # m[b,d] = sum_{a,a'} op[a,a'] psi[a',b] conj(psi)[a,d]
            m = np.einsum("aA,Ab,ad->bd", op, psi, psi.conj())
        else:
            # m[a,c] = sum_{b,b'} op[b,b'] psi[a,b'] conj(psi)[c,b]
            m = np.einsum("bB,aB,cb->ac", op, psi, psi.conj())
        # m is Hermitian because op acts on the traced wing only
        out.append(polar_unitary(Operator((m + m.conj().T) / 2, (m.shape[0],))).entries)
    return out[0], out[1]


def swap_isometry(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Isometry K: site -> qubit (x) site, K = |0>K_0 + |1>K_1 with
    K_0 = (1+z)/2 and K_1 = x(1-z)/2.  K is an exact isometry whenever z
    and x are Hermitian involutions."""
    d = z.shape[0]
    eye = np.eye(d)
    k0 = (eye + z) / 2
    k1 = x @ (eye - z) / 2
    k = np.zeros((2 * d, d), dtype=complex)
    k[:d] = k0
    k[d:] = k1
    return k


def grouped_isometry(ks: list[np.ndarray]) -> np.ndarray:
    """Tensor product of per-site swap isometries with outputs regrouped as
    (qubit_1..qubit_n, junk_1..junk_n)."""
    n = len(ks)
    dims = [k.shape[1] for k in ks]
    full = ks[0]
    for k in ks[1:]:
        full = np.kron(full, k)
    # rows of `full` are indexed by interleaved (q_1, j_1, q_2, j_2, ...)
    shape = []
    for d in dims:
        shape += [2, d]
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    full = full.reshape(shape + [int(np.prod(dims))])
    full = np.transpose(full, order + [2 * n])
    return full.reshape(2**n * int(np.prod(dims)), int(np.prod(dims)))


def support_projector(rho: np.ndarray, tol: float = SUPPORT_TOL) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho)
    keep = vecs[:, vals > tol]
    return keep @ keep.conj().T


@dataclass(frozen=True)
class SiteFrame:
    label: str
    z: np.ndarray
    x: np.ndarray
    support: np.ndarray

    def isometry(self) -> np.ndarray:
        return swap_isometry(self.z, self.x)


@dataclass(frozen=True)
class LocalFrames:
    scheme: str
    n: int
    a: tuple[SiteFrame, ...]
    l: tuple[SiteFrame, ...]
    r1: tuple[SiteFrame, ...] | None = None
    r2: tuple[SiteFrame, ...] | None = None

    def grouped(self, collection: str) -> np.ndarray:
        frames = getattr(self, collection)
        if frames is None:
            raise ValueError(f"no {collection!r} frames in the {self.scheme} scheme")
        return grouped_isometry([f.isometry() for f in frames])

    def junk_floor(self, collection: str) -> np.ndarray:
        """Positive junk-side operator (x)_j K_{j,0} K_{j,0}^dagger."""
        frames = getattr(self, collection)
        out = np.array([[1.0 + 0j]])
        for f in frames:
            k0 = (np.eye(f.z.shape[0]) + f.z) / 2
            out = np.kron(out, k0 @ k0.conj().T)
        return out


def _site_states(real: Realization) -> dict[str, np.ndarray]:
    """Reduced density matrix of each site, from its source."""
    out: dict[str, np.ndarray] = {}
    n = real.n

    def wing(src: StateVector, which: int) -> np.ndarray:
        d0, d1 = src.dims
        m = src.amplitudes.reshape(d0, d1)
        return m @ m.conj().T if which == 0 else m.T @ m.conj()

    for i in range(1, n + 1):
        src = real.sources[i - 1]
        out[f"A{i}"] = wing(src, 0)
        if real.scheme == ALMOST_DI:
            out[f"L{i}"] = wing(src, 1)
        else:
            out[f"R{i},1"] = wing(src, 1)
    if real.scheme == DI:
        for i in range(1, n + 1):
            src = real.sources[n + i - 1]
            out[f"R{i},2"] = wing(src, 0)
            out[f"L{i}"] = wing(src, 1)
    return out


def _check_frame(label: str, z: np.ndarray, x: np.ndarray, support: np.ndarray, op_tol: float) -> None:
    eye = np.eye(z.shape[0])
    for name, op in (("z", z), ("x", x)):
        if np.max(np.abs(op - op.conj().T)) > op_tol:
            raise ValueError(f"site {label}: {name} frame operator is not Hermitian")
        if np.max(np.abs(op @ op - eye)) > op_tol:
            raise ValueError(f"site {label}: {name} frame operator is not an involution")
    anti = support @ (z @ x + x @ z) @ support
    worst = float(np.max(np.abs(anti)))
    if worst > op_tol:
        raise ValueError(
            f"site {label}: frame operators do not anticommute on the local support "
            f"(deviation {worst:.2e}); the realization does not meet the extraction conditions"
        )


def extract_all(real: Realization, op_tol: float = OP_TOL) -> LocalFrames:
    """Build and vet local frames for every site of the realization.

    Party 1 and, in the di scheme, the boxes of subnets >= 2 use rotated
    combinations; all partner wings are mirrored through their sources.
    Raises ValueError when a frame fails the involution or anticommutation
    conditions on its local support.
    """
    validate_realization(real)
    n = real.n
    states = _site_states(real)
    a_frames: list[SiteFrame] = []
    for i in range(1, n + 1):
        z, x = regularize(real.a_obs[i - 1][0], real.a_obs[i - 1][1], tilde=(i == 1))
        sup = support_projector(states[f"A{i}"])
        _check_frame(f"A{i}", z, x, sup, op_tol)
        a_frames.append(SiteFrame(f"A{i}", z, x, sup))
    if real.scheme == ALMOST_DI:
        l_frames = []
        for i in range(1, n + 1):
            src = real.sources[i - 1]
            z, x = mirror_frame(a_frames[i - 1].z, a_frames[i - 1].x, src, framed_wing=0)
            sup = support_projector(states[f"L{i}"])
            _check_frame(f"L{i}", z, x, sup, op_tol)
            l_frames.append(SiteFrame(f"L{i}", z, x, sup))
        return LocalFrames(ALMOST_DI, n, tuple(a_frames), tuple(l_frames))
    l_frames = []
    for i in range(1, n + 1):
        z, x = regularize(real.b_obs[i - 1][0], real.b_obs[i - 1][1], tilde=(i != 1))
        sup = support_projector(states[f"L{i}"])
        _check_frame(f"L{i}", z, x, sup, op_tol)
        l_frames.append(SiteFrame(f"L{i}", z, x, sup))
    r1_frames = []
    for i in range(1, n + 1):
        src = real.sources[i - 1]
        z, x = mirror_frame(a_frames[i - 1].z, a_frames[i - 1].x, src, framed_wing=0)
        sup = support_projector(states[f"R{i},1"])
        _check_frame(f"R{i},1", z, x, sup, op_tol)
        r1_frames.append(SiteFrame(f"R{i},1", z, x, sup))
    r2_frames = []
    for i in range(1, n + 1):
        src = real.sources[n + i - 1]
        z, x = mirror_frame(l_frames[i - 1].z, l_frames[i - 1].x, src, framed_wing=1)
        sup = support_projector(states[f"R{i},2"])
        _check_frame(f"R{i},2", z, x, sup, op_tol)
        r2_frames.append(SiteFrame(f"R{i},2", z, x, sup))
    return LocalFrames(DI, n, tuple(a_frames), tuple(l_frames), tuple(r1_frames), tuple(r2_frames))


def detect_branch_signs(real: Realization, frames: LocalFrames | None = None) -> list[int]:
    """Per-party sign of the third observable relative to the frame's
    y-direction: s_i = sign Re Tr[(Y (x) 1) K A_{i,2} K^dagger]."""
    if frames is None:
        frames = extract_all(real)
    signs = []
    y = np.array([[0, -1j], [1j, 0]])
    for i in range(1, real.n + 1):
        k = frames.a[i - 1].isometry()
        d = frames.a[i - 1].z.shape[0]
        lifted = k @ real.a_obs[i - 1][2].entries @ k.conj().T
        val = float(np.real(np.trace(np.kron(y, np.eye(d)) @ lifted)))
        if abs(val) < 1e-10:
            raise ValueError(f"party {i}: third observable has no overlap with the frame's y-direction")
        signs.append(1 if val > 0 else -1)
    return signs


def branch_of(real: Realization, frames: LocalFrames | None = None) -> str:
    signs = detect_branch_signs(real, frames)
    if all(s == +1 for s in signs):
        return "plus"
    if all(s == -1 for s in signs):
        return "minus"
    return "mixed"


def _targets(u: Operator, branch: str) -> list[np.ndarray]:
    """Comparison states: conj(delta_l) for the plus branch, delta_l for minus."""
    deltas = delta_set(u)
    if branch == "plus":
        return [d.amplitudes.conj() for d in deltas]
    if branch == "minus":
        return [d.amplitudes.copy() for d in deltas]
    raise ValueError(f"no consistent comparison target for branch {branch!r}")


def effective_elements(real: Realization, support_tol: float = SUPPORT_TOL) -> tuple[list[np.ndarray], np.ndarray]:
    """Effective joint-box elements on the collective Eve acts on.

    For ``almost_di`` these are V^dagger M_l V on the L collective.  For
    ``di`` the box is teleported: E_l is the subnormalized element on the
    R_{*,1} collective obtained by projecting every repeater on outcome 0
    and the joint box on l, traced against the L-side sources; each E_l is
    rescaled by its largest eigenvalue.  Also returns the projector onto
    the support of the collective's reduced state.
    """
    n = real.n
    if real.scheme == ALMOST_DI:
        v = real.eve.entries
        elements = [v.conj().T @ m.entries @ v for m in real.l_meas]
        rho = _collective_state(real)
        return elements, support_projector(rho, support_tol)
    raw = teleported_elements(real, support_tol)
    v = real.eve.entries
    elements = [v.conj().T @ el @ v for el in raw]
    rho = _collective_state(real)
    return elements, support_projector(rho, support_tol)


def teleported_elements(real: Realization, support_tol: float = SUPPORT_TOL) -> list[np.ndarray]:
    """Joint-box elements carried onto the R_{*,1} collective (before Eve's
    operation) by projecting every repeater on outcome 0, rescaled by the
    largest eigenvalue across outcomes."""
    if real.scheme != DI:
        raise ValueError("teleported elements exist only in the di scheme")
    elements = [_teleported_element(real, l) for l in range(2**real.n)]
    scale = max(float(np.linalg.eigvalsh(el)[-1]) for el in elements)
    if scale <= support_tol:
        raise ValueError("teleported box elements vanish; repeater outcome 0 has no weight")
    return [el / scale for el in elements]


def _collective_state(real: Realization) -> np.ndarray:
    """Reduced state of the collective Eve acts on: the second wing of each
    of the first N sources (L sites for almost_di, R_{*,1} sites for di)."""
    rho = np.array([[1.0 + 0j]])
    for i in range(real.n):
        m = real.sources[i].amplitudes.reshape(real.sources[i].dims)
        rho = np.kron(rho, m.T @ m.conj())
    return rho


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _teleported_element(real: Realization, l: int) -> np.ndarray:
    """Partial sandwich E_l = <chi| ((x)_i R_{i,0}) (x) M_l |chi> over the
    L-side sources chi, leaving both R1 legs open (an operator on the R1
    collective, before Eve's operation)."""
    n = real.n
    r1_dims = real.r1_dims()
    r2_dims = real.r2_dims()
    l_dims = real.l_dims()
    it = iter(_LETTERS)
    a_out = [next(it) for _ in range(n)]
    a_in = [next(it) for _ in range(n)]
    b_out = [next(it) for _ in range(n)]
    b_in = [next(it) for _ in range(n)]
    c_out = [next(it) for _ in range(n)]
    c_in = [next(it) for _ in range(n)]
    operands = []
    subs = []
    for i in range(n):
        el = real.repeaters[i][0].entries
        operands.append(el.reshape(r1_dims[i], r2_dims[i], r1_dims[i], r2_dims[i]))
        subs.append(a_out[i] + b_out[i] + a_in[i] + b_in[i])
    operands.append(real.l_meas[l].entries.reshape(tuple(l_dims) + tuple(l_dims)))
    subs.append("".join(c_out) + "".join(c_in))
    chi_full = None
    for i in range(n):
        m = real.sources[n + i].amplitudes.reshape(r2_dims[i], l_dims[i])
        chi_full = m if chi_full is None else np.tensordot(chi_full, m, axes=0)
    # chi_full legs: (b_1, c_1, b_2, c_2, ...)
    operands.append(chi_full.conj())
    subs.append("".join(b_out[i] + c_out[i] for i in range(n)))
    operands.append(chi_full)
    subs.append("".join(b_in[i] + c_in[i] for i in range(n)))
    spec = ",".join(subs) + "->" + "".join(a_out) + "".join(a_in)
    out = np.einsum(spec, *operands, optimize=True)
    d1 = int(np.prod(r1_dims))
    return out.reshape(d1, d1)


def verify_effective_measurements(
    real: Realization,
    u: Operator,
    frames: LocalFrames | None = None,
    op_tol: float = OP_TOL,
) -> tuple[np.ndarray, str]:
    """Entrywise distances between the realized effective box elements and
    the frame pull-backs of the ideal rotated projectors.  Returns the
    per-outcome distances and the detected branch."""
    if frames is None:
        frames = extract_all(real, op_tol)
    branch = branch_of(real, frames)
    targets = _targets(u, branch)
    collection = "l" if real.scheme == ALMOST_DI else "r1"
    w = frames.grouped(collection)
    elements, support = effective_elements(real)
    dj = w.shape[0] // 2**real.n
    dists = []
    for l, el in enumerate(elements):
        t = targets[l]
        proj = np.outer(t, t.conj())
        pull = w.conj().T @ np.kron(proj, np.eye(dj)) @ w
        lhs = el if real.scheme == ALMOST_DI else support @ el @ support
        rhs = pull if real.scheme == ALMOST_DI else support @ pull @ support
        dists.append(float(np.max(np.abs(lhs - rhs))))
    return np.array(dists), branch


def _restricted_eve(real: Realization, support: np.ndarray) -> np.ndarray:
    """Eve's operation compressed to the support of the collective state.
    On full support this is just V."""
    eye = np.eye(support.shape[0])
    if np.max(np.abs(support - eye)) < 1e-12:
        return real.eve.entries
    return support @ real.eve.entries @ support


def verify_unitary_certificate(
    real: Realization,
    u: Operator,
    frames: LocalFrames | None = None,
    op_tol: float = OP_TOL,
) -> tuple[float, str]:
    """Entrywise distance certifying Eve's operation itself.

    With F_l and G_l the frame pull-backs of the ideal basis projectors and
    of the rotated target projectors, a faithful realization satisfies
    V^dagger F_l V = G_l for every l; the certificate is the worst
    entrywise deviation (Eve restricted to the collective's support)."""
    if frames is None:
        frames = extract_all(real, op_tol)
    branch = branch_of(real, frames)
    targets = _targets(u, branch)
    n = real.n
    collection = "l" if real.scheme == ALMOST_DI else "r1"
    w = frames.grouped(collection)
    dj = w.shape[0] // 2**n
    basis = ghz_basis(n)
    _, support = effective_elements(real) if real.scheme == DI else (None, None)
    if real.scheme == ALMOST_DI:
        vbar = real.eve.entries
    else:
        vbar = _restricted_eve(real, support)
    worst = 0.0
    for l in range(2**n):
        phi = basis[:, l]
        f_op = w.conj().T @ np.kron(np.outer(phi, phi.conj()), np.eye(dj)) @ w
        t = targets[l]
        g_op = w.conj().T @ np.kron(np.outer(t, t.conj()), np.eye(dj)) @ w
        lhs = vbar.conj().T @ f_op @ vbar
        rhs = g_op if real.scheme == ALMOST_DI else support @ g_op @ support
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst, branch


def f_block_structure(
    real: Realization,
    u: Operator,
    frames: LocalFrames | None = None,
    op_tol: float = OP_TOL,
) -> tuple[float, str]:
    """Deviation of W Vbar^dagger W^dagger from its ideal block form.

    Grouping the lifted adjoint of Eve's operation into 2^N x 2^N junk-sized
    blocks indexed by ideal basis states, block (i, l) of a faithful
    realization equals <phi_i|target_l> times one fixed positive junk
    operator (x)_j K_{j,0} K_{j,0}^dagger."""
    if frames is None:
        frames = extract_all(real, op_tol)
    branch = branch_of(real, frames)
    targets = _targets(u, branch)
    n = real.n
    collection = "l" if real.scheme == ALMOST_DI else "r1"
    w = frames.grouped(collection)
    dj = w.shape[0] // 2**n
    basis = ghz_basis(n)
    if real.scheme == ALMOST_DI:
        vbar = real.eve.entries
    else:
        _, support = effective_elements(real)
        vbar = _restricted_eve(real, support)
    lifted = w @ vbar.conj().T @ w.conj().T
    q = frames.junk_floor(collection)
    blocks = _ghz_blocks(lifted, basis, dj)
    worst = 0.0
    for i in range(2**n):
        phi = basis[:, i]
        for l in range(2**n):
            coeff = complex(np.vdot(phi, targets[l]))
            dev = float(np.max(np.abs(blocks[i, :, l, :] - coeff * q)))
            worst = max(worst, dev)
    return worst, branch


def _ghz_blocks(lifted: np.ndarray, basis: np.ndarray, dj: int) -> np.ndarray:
    """Rotate the qubit factor of a (qubits (x) junk) operator into the
    ideal basis and expose the junk-sized blocks."""
    d = basis.shape[0]
    rot = np.kron(basis, np.eye(dj))
    rotated = rot.conj().T @ lifted @ rot
    return rotated.reshape(d, dj, d, dj)


def extracted_gate(
    real: Realization,
    frames: LocalFrames | None = None,
    op_tol: float = OP_TOL,
) -> tuple[np.ndarray, str]:
    """Gate read out of the realization through the local frames.

    The junk-traced blocks of W Vbar^dagger W^dagger give the matrix of the
    adjoint target in the ideal basis; undoing the basis change and the
    branch conjugation yields the gate on qubits, unitarized through the
    polar decomposition."""
    if frames is None:
        frames = extract_all(real, op_tol)
    branch = branch_of(real, frames)
    n = real.n
    collection = "l" if real.scheme == ALMOST_DI else "r1"
    w = frames.grouped(collection)
    dj = w.shape[0] // 2**n
    if real.scheme == ALMOST_DI:
        vbar = real.eve.entries
    else:
        _, support = effective_elements(real)
        vbar = _restricted_eve(real, support)
    lifted = w @ vbar.conj().T @ w.conj().T
    basis = ghz_basis(n)
    blocks = _ghz_blocks(lifted, basis, dj)
    q = frames.junk_floor(collection)
    qn = float(np.real(np.trace(q)))
    m = np.einsum("ikjk->ij", blocks) / qn
    # m[i, l] = <phi_i| target_l>: columns are the rotated basis images
    images = basis @ m  # column l = target_l in the computational basis
    # target_l = W_branch(U)^dagger phi_l with W_plus = conj, W_minus = id
    gate_adj = images @ basis.conj().T
    if branch == "plus":
        gate = gate_adj.T
    elif branch == "minus":
        gate = gate_adj.conj().T
    else:
        raise ValueError("realization mixes branch signs across parties")
    gate = polar_unitary(Operator(gate, (2,) * n)).entries
    return gate, branch


def extraction_fidelity(real: Realization, u: Operator, frames: LocalFrames | None = None) -> tuple[float, str]:
    """Phase-insensitive overlap |Tr(G^dagger U)/2^N|^2 between the
    extracted gate G and the target, together with the detected branch."""
    gate, branch = extracted_gate(real, frames)
    n = real.n
    overlap = abs(np.trace(gate.conj().T @ u.entries) / 2**n) ** 2
    return float(overlap), branch
