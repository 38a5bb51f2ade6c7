"""Local frame extraction and the operator-level certification identities."""

from dataclasses import replace

import numpy as np
import pytest

from gatecert.adversary import conjugate, dilate
from gatecert.extract import (
    branch_of,
    detect_branch_signs,
    effective_elements,
    extract_all,
    extracted_gate,
    extraction_fidelity,
    f_block_structure,
    grouped_isometry,
    mirror_frame,
    regularize,
    support_projector,
    swap_isometry,
    teleported_elements,
    verify_effective_measurements,
    verify_unitary_certificate,
)
from gatecert.network import ALMOST_DI, DI, reference_realization
from gatecert.primitives import gate, haar_unitary, ref_observable
from gatecert.tensor import Operator, StateVector

SQ2 = np.sqrt(2.0)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def test_regularize_tilde_pair():
    a0 = Operator((X + Z) / SQ2, (2,))
    a1 = Operator((X - Z) / SQ2, (2,))
    z, x = regularize(a0, a1, tilde=True)
    assert np.allclose(z, Z, atol=1e-14)
    assert np.allclose(x, X, atol=1e-14)
    z2, x2 = regularize(Operator(Z, (2,)), Operator(X, (2,)), tilde=False)
    assert np.allclose(z2, Z)
    assert np.allclose(x2, X)


def test_mirror_frame_through_phi_plus_is_transpose():
    src = StateVector(np.eye(2).reshape(-1) / SQ2, (2, 2))
    z, x = mirror_frame(Z, X, src, framed_wing=0)
    assert np.allclose(z, Z, atol=1e-14)
    assert np.allclose(x, X, atol=1e-14)
    y, _ = mirror_frame(Y, X, src, framed_wing=0)
    assert np.allclose(y, Y.T, atol=1e-14)


def test_mirror_frame_complex_rotation_correlators():
    """The mirrored pair must reach correlation 1 with the framed pair on the
    rotated source; a transposed mirror only manages this for real frames."""
    rng = np.random.default_rng(0)
    w0, w1 = haar_unitary(2, rng), haar_unitary(2, rng)
    psi = np.kron(w0, w1) @ (np.eye(2).reshape(-1) / SQ2)
    src = StateVector(psi, (2, 2))
    z0, x0 = w0 @ Z @ w0.conj().T, w0 @ X @ w0.conj().T
    z1, x1 = mirror_frame(z0, x0, src, framed_wing=0)
    assert np.isclose(np.vdot(psi, np.kron(z0, z1) @ psi).real, 1.0, atol=1e-12)
    assert np.isclose(np.vdot(psi, np.kron(x0, x1) @ psi).real, 1.0, atol=1e-12)
    assert np.allclose(z1 @ z1, np.eye(2), atol=1e-12)
    assert np.allclose(z1 @ x1 + x1 @ z1, 0.0, atol=1e-12)
    # mirroring back from the other wing recovers the original frame
    z0b, x0b = mirror_frame(z1, x1, src, framed_wing=1)
    assert np.allclose(z0b, z0, atol=1e-12)
    assert np.allclose(x0b, x0, atol=1e-12)


def test_swap_isometry_computational_frame():
    k = swap_isometry(Z, X)
    want = np.array([[1, 0], [0, 0], [0, 1], [0, 0]], dtype=complex)
    assert np.allclose(k, want)
    assert np.allclose(k.conj().T @ k, np.eye(2), atol=1e-14)


def test_swap_isometry_is_isometry_for_any_involutions():
    rng = np.random.default_rng(4)
    w = haar_unitary(4, rng)
    z = w @ np.diag([1.0, 1.0, -1.0, -1.0]) @ w.conj().T
    x = w @ np.kron(X, np.eye(2)) @ w.conj().T
    k = swap_isometry(z, x)
    assert k.shape == (8, 4)
    assert np.allclose(k.conj().T @ k, np.eye(4), atol=1e-12)


def test_grouped_isometry_reorders_qubit_and_junk_legs():
    ka = swap_isometry(Z, X)
    kb = swap_isometry(X, Z)  # a different frame on site 2
    w = grouped_isometry([ka, kb])
    assert w.shape == (16, 4)
    assert np.allclose(w.conj().T @ w, np.eye(4), atol=1e-13)
    # output legs ordered (q1, q2, j1, j2): compare against manual regroup
    raw = np.kron(ka, kb).reshape(2, 2, 2, 2, 4)
    manual = raw.transpose(0, 2, 1, 3, 4).reshape(16, 4)
    assert np.allclose(w, manual)


def test_support_projector_rank():
    rho = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    p = support_projector(rho)
    assert np.allclose(p, np.diag([1.0, 1.0, 0.0, 0.0]))
    assert np.allclose(p @ p, p)


def test_extract_all_reference_frames_are_pauli():
    for scheme in (ALMOST_DI, DI):
        real = reference_realization(2, gate("cnot", 2), scheme=scheme)
        frames = extract_all(real)
        groups = [frames.a, frames.l] + ([frames.r1, frames.r2] if scheme == DI else [])
        for group in groups:
            for f in group:
                assert np.allclose(f.z, Z, atol=1e-12)
                assert np.allclose(f.x, X, atol=1e-12)
                assert np.allclose(f.support, np.eye(2), atol=1e-12)


def test_extract_all_dilated_frames_satisfy_algebra():
    real = dilate(reference_realization(2, gate("cz", 2)), junk_dim=3, seed=11)
    frames = extract_all(real)
    for f in frames.a + frames.l:
        d = f.z.shape[0]
        assert d == 6
        s = f.support
        assert np.allclose(f.z @ f.z, np.eye(d), atol=1e-10)
        assert np.allclose(s @ (f.z @ f.x + f.x @ f.z) @ s, 0.0, atol=1e-10)
        k = f.isometry()
        assert np.allclose(k.conj().T @ k, np.eye(d), atol=1e-10)


def test_extract_all_rejects_degenerate_observables():
    real = reference_realization(2, gate("cz", 2))
    same = ref_observable(1, 0)
    broken = ((same, same, real.a_obs[0][2]),) + real.a_obs[1:]
    with pytest.raises(ValueError):
        extract_all(replace(real, a_obs=broken))


def test_branch_detection():
    plus = reference_realization(2, gate("cnot", 2))
    minus = reference_realization(2, gate("cnot", 2), branch=-1)
    assert detect_branch_signs(plus) == [1, 1]
    assert detect_branch_signs(minus) == [-1, -1]
    assert branch_of(plus) == "plus"
    assert branch_of(minus) == "minus"
    assert branch_of(conjugate(plus)) == "minus"
    third = Operator(-plus.a_obs[1][2].entries, (2,))
    mixed = replace(plus, a_obs=(plus.a_obs[0], (plus.a_obs[1][0], plus.a_obs[1][1], third)))
    assert branch_of(mixed) == "mixed"


def test_effective_elements_reference_almost():
    real = reference_realization(2, gate("swap", 2))
    elements, support = effective_elements(real)
    assert len(elements) == 4
    assert np.allclose(support, np.eye(4), atol=1e-12)
    total = sum(elements)
    assert np.allclose(total, np.eye(4), atol=1e-12)


def test_teleported_elements_structure():
    real = reference_realization(2, gate("cnot", 2), scheme=DI)
    els = teleported_elements(real)
    assert len(els) == 4
    s = sum(els)
    assert np.allclose(s @ s, s, atol=1e-12)
    for a in range(4):
        assert np.allclose(els[a], els[a].conj().T, atol=1e-12)
        for b in range(a + 1, 4):
            assert np.allclose(els[a] @ els[b], 0.0, atol=1e-12)


def test_certification_identities_at_reference():
    for scheme in (ALMOST_DI, DI):
        for branch in (+1, -1):
            u = gate("cnot", 2)
            real = reference_realization(2, u, branch=branch, scheme=scheme)
            dists, br = verify_effective_measurements(real, u)
            assert br == ("plus" if branch == 1 else "minus")
            assert dists.max() <= 1e-10
            cert, _ = verify_unitary_certificate(real, u)
            assert cert <= 1e-10
            fdev, _ = f_block_structure(real, u)
            assert fdev <= 1e-10


def test_certification_identities_on_dilations():
    u = gate("random", 2, seed=6)
    for scheme in (ALMOST_DI, DI):
        real = dilate(reference_realization(2, u, scheme=scheme), junk_dim=2, seed=3)
        dists, _ = verify_effective_measurements(real, u)
        assert dists.max() <= 1e-8
        cert, _ = verify_unitary_certificate(real, u)
        assert cert <= 1e-8
        fdev, _ = f_block_structure(real, u)
        assert fdev <= 1e-8
        fid, _ = extraction_fidelity(real, u)
        assert fid >= 1.0 - 1e-9


def test_extracted_gate_equals_target_up_to_phase():
    u = gate("random", 2, seed=8)
    for branch in (+1, -1):
        real = dilate(reference_realization(2, u, branch=branch), junk_dim=2, seed=5)
        g, br = extracted_gate(real)
        phase = np.trace(u.entries.conj().T @ g)
        phase /= abs(phase)
        assert np.allclose(g, phase * u.entries, atol=1e-8)
        fid, _ = extraction_fidelity(real, u)
        assert fid >= 1.0 - 1e-12


def test_wrong_gate_shows_up_in_identities():
    real = reference_realization(2, gate("cnot", 2))
    dists, _ = verify_effective_measurements(real, gate("swap", 2))
    assert dists.max() > 0.1
    fid, _ = extraction_fidelity(real, gate("swap", 2))
    assert fid < 0.9


def test_mixed_branch_has_no_comparison_target():
    real = reference_realization(2, gate("cz", 2))
    third = Operator(-real.a_obs[1][2].entries, (2,))
    mixed = replace(real, a_obs=(real.a_obs[0], (real.a_obs[1][0], real.a_obs[1][1], third)))
    with pytest.raises(ValueError):
        verify_unitary_certificate(mixed, gate("cz", 2))
