import numpy as np
import pytest

from gatecert.tensor import (
    Operator,
    StateVector,
    apply_raw,
    apply_raw_batch,
    apply_to_sites,
    expectation_value,
    fidelity,
    kron,
    partial_trace,
    permute_sites,
    polar_unitary,
    reduced_density,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def rand_state(dims, seed):
    rng = np.random.default_rng(seed)
    total = int(np.prod(dims))
    v = rng.normal(size=total) + 1j * rng.normal(size=total)
    return StateVector(v / np.linalg.norm(v), dims)


def test_state_vector_basics():
    v = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    assert v.n_sites == 2
    assert v.dim == 4
    assert v.is_normalized()
    w = StateVector(np.array([1.0, 1.0]), (2,))
    assert not w.is_normalized()
    with pytest.raises(ValueError):
        StateVector(np.zeros(4), (2, 3))


def test_operator_flags():
    h = Operator((X + Z) / np.sqrt(2), (2,))
    assert h.is_hermitian()
    assert h.is_unitary()
    assert not h.is_projector()
    p = Operator(np.array([[1, 0], [0, 0]], dtype=complex), (2,))
    assert p.is_projector()
    assert not Operator(np.array([[0, 1], [0, 0]], dtype=complex), (2,)).is_hermitian()


def test_entries_are_read_only():
    op = Operator(np.eye(2), (2,))
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5.0


def test_kron_matches_numpy():
    a = Operator(X, (2,))
    b = Operator(np.diag([1.0, 2.0, 3.0]).astype(complex), (3,))
    prod = kron([a, b])
    assert prod.dims == (2, 3)
    assert np.allclose(prod.entries, np.kron(X, np.diag([1.0, 2.0, 3.0])))
    sa = StateVector(np.array([1.0, 2.0]) / np.sqrt(5), (2,))
    sb = StateVector(np.array([0.0, 1.0, 0.0]), (3,))
    sv = kron([sa, sb])
    assert sv.dims == (2, 3)
    assert np.allclose(sv.amplitudes, np.kron(sa.amplitudes, sb.amplitudes))


def test_basis_ordering_site0_most_significant():
    # |1>|0> must sit at index 2 of a two-qubit vector
    one = StateVector(np.array([0.0, 1.0]), (2,))
    zero = StateVector(np.array([1.0, 0.0]), (2,))
    v = kron([one, zero])
    assert np.argmax(np.abs(v.amplitudes)) == 2


def test_partial_trace_explicit():
    """Trace of |psi><psi| with psi = (|00> + |11>)/sqrt(2) over either site
    is maximally mixed."""
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = Operator(np.outer(v, v.conj()), (2, 2))
    for keep in ([0], [1]):
        red = partial_trace(rho, keep)
        assert red.dims == (2,)
        assert np.allclose(red.entries, np.eye(2) / 2)
    full = partial_trace(rho, [0, 1])
    assert np.allclose(full.entries, rho.entries)


def test_partial_trace_product_state():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    a = a @ a.conj().T
    b = b @ b.conj().T
    b /= np.trace(b)
    op = Operator(np.kron(a, b), (2, 3))
    red = partial_trace(op, [0])
    assert np.allclose(red.entries, a)


def test_reduced_density_matches_partial_trace():
    v = rand_state((2, 3, 2), seed=5)
    rho = Operator(np.outer(v.amplitudes, v.amplitudes.conj()), v.dims)
    for keep in ([0], [2], [0, 2], [1]):
        assert np.allclose(
            reduced_density(v, keep).entries, partial_trace(rho, keep).entries
        )


def test_permute_sites_roundtrip():
    v = rand_state((2, 3, 4), seed=7)
    w = permute_sites(v, [2, 0, 1])
    assert w.dims == (4, 2, 3)
    back = permute_sites(w, [1, 2, 0])
    assert np.allclose(back.amplitudes, v.amplitudes)


def test_permute_sites_explicit_swap():
    # swapping a 2x3 system maps index 3*i + j to 2*j + i
    v = rand_state((2, 3), seed=3)
    w = permute_sites(v, [1, 0])
    for i in range(2):
        for j in range(3):
            assert np.isclose(w.amplitudes[2 * j + i], v.amplitudes[3 * i + j])


def test_apply_raw_single_site_vs_dense():
    v = rand_state((2, 2, 2), seed=1)
    got = apply_raw(v.amplitudes, v.dims, Y, [1])
    dense = np.kron(np.kron(np.eye(2), Y), np.eye(2))
    assert np.allclose(got, dense @ v.amplitudes)


def test_apply_raw_two_sites_ordering():
    """A matrix on sites (2, 0) must act with site 2 as its first leg."""
    v = rand_state((2, 2, 2), seed=2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    got = apply_raw(v.amplitudes, v.dims, cnot, [2, 0])
    # dense reference: permute (2,0,1), apply cnot x eye, permute back
    perm = permute_sites(v, [2, 0, 1])
    dense = np.kron(cnot, np.eye(2)) @ perm.amplitudes
    back = permute_sites(StateVector(dense, (2, 2, 2)), [1, 2, 0])
    assert np.allclose(got, back.amplitudes)


def test_apply_raw_batch_matches_loop():
    """Row k*rows + b of the output is operator k applied to row b."""
    rng = np.random.default_rng(9)
    v = rand_state((2, 2), seed=4)
    block = np.stack([v.amplitudes, np.roll(v.amplitudes, 1)])
    mats = rng.normal(size=(3, 2, 2)) + 1j * rng.normal(size=(3, 2, 2))
    out = apply_raw_batch(block, (2, 2), mats, [1])
    assert out.shape == (6, 4)
    for k in range(3):
        for b in range(2):
            assert np.allclose(out[k * 2 + b], apply_raw(block[b], (2, 2), mats[k], [1]))


def test_apply_to_sites_operator_wrapper():
    v = rand_state((2, 2), seed=8)
    got = apply_to_sites(v, Operator(X, (2,)), [0])
    assert np.allclose(got.amplitudes, np.kron(X, np.eye(2)) @ v.amplitudes)


def test_polar_unitary_recovers_rotation():
    rng = np.random.default_rng(21)
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    w = np.linalg.eigh(h)[1]  # unitary
    stretched = w @ np.diag([1.0, 2.0, 0.5, 3.0])
    u = polar_unitary(Operator(stretched @ w.conj().T, (4,)))
    assert u.is_unitary()
    # polar factor of (w d w^dag) with positive d is the identity
    assert np.allclose(u.entries, np.eye(4), atol=1e-10)
    v = polar_unitary(Operator(stretched, (4,)))
    assert np.allclose(v.entries, w, atol=1e-10)


def test_polar_unitary_fills_null_directions():
    # Hermitian input with a null eigendirection still yields a full unitary
    u = polar_unitary(Operator(np.diag([1.0, 0.0, -2.0]).astype(complex), (3,)))
    assert np.allclose(u.entries, np.diag([1.0, 1.0, -1.0]))


def test_fidelity_pure_states():
    a = StateVector(np.array([1.0, 0.0]), (2,))
    b = StateVector(np.array([1.0, 1.0]) / np.sqrt(2), (2,))
    assert np.isclose(fidelity(a, a), 1.0)
    assert np.isclose(fidelity(a, b), 0.5)


def test_expectation_value_product_of_factors():
    v = rand_state((2, 2, 2), seed=6)
    val = expectation_value(v, [(Operator(Z, (2,)), [0]), (Operator(X, (2,)), [2])])
    dense = np.kron(np.kron(Z, np.eye(2)), X)
    assert np.isclose(val, np.vdot(v.amplitudes, dense @ v.amplitudes))


def test_dims_must_multiply_out():
    with pytest.raises(ValueError):
        Operator(np.eye(6), (2, 2))
    with pytest.raises(ValueError):
        StateVector(np.zeros(5), (2, 2))
