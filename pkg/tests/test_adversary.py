"""Families of alternative realizations and what they do to the statistics."""

import numpy as np
import pytest

from gatecert.adversary import (
    ADVERSARY_KINDS,
    AdversarySpec,
    apply_adversary,
    conjugate,
    depolarize_sources,
    dilate,
    gauge_phase,
    load_adversary,
    perturb,
    save_adversary,
)
from gatecert.extract import branch_of
from gatecert.network import (
    ALMOST_DI,
    DI,
    PERP,
    born_table,
    reference_realization,
    validate_realization,
)
from gatecert.primitives import gate


def test_spec_record_roundtrip(tmp_path):
    spec = AdversarySpec("dilate", junk_dim=3, seed=9, rotate=False)
    back = AdversarySpec.from_record(spec.to_record())
    assert back == spec
    path = tmp_path / "adv.json"
    save_adversary(spec, str(path))
    assert load_adversary(str(path)) == spec
    with pytest.raises(ValueError):
        AdversarySpec.from_record({"kind": "unheard_of"})
    assert "dilate" in ADVERSARY_KINDS


def test_apply_adversary_dispatch():
    real = reference_realization(2, gate("cz", 2))
    via_spec = apply_adversary(real, AdversarySpec("dilate", junk_dim=2, seed=4))
    direct = dilate(real, junk_dim=2, seed=4)
    assert born_table(via_spec).max_difference(born_table(direct)) == 0.0
    with pytest.raises(ValueError):
        apply_adversary(real, AdversarySpec("depolarize", eta=1.5))


def test_dilate_trivial_is_identity():
    real = reference_realization(2, gate("cnot", 2))
    same = dilate(real, junk_dim=1, rotate=False)
    assert born_table(real).max_difference(born_table(same)) == 0.0
    for s, t in zip(real.sources, same.sources):
        assert np.allclose(s.amplitudes, t.amplitudes)


def test_dilate_preserves_statistics():
    u = gate("random", 2, seed=2)
    real = reference_realization(2, u)
    base = born_table(real)
    for junk, seed in ((2, 0), (3, 7)):
        big = dilate(real, junk_dim=junk, seed=seed)
        validate_realization(big)
        assert big.sources[0].dims != real.sources[0].dims
        assert base.max_difference(born_table(big)) <= 1e-12


def test_dilate_preserves_statistics_di():
    # the eight-site dilated network is the expensive case, so one seed only
    u = gate("random", 2, seed=2)
    real = reference_realization(2, u, scheme=DI)
    big = dilate(real, junk_dim=2, seed=0)
    validate_realization(big)
    assert born_table(real).max_difference(born_table(big)) <= 1e-12


def test_dilate_grows_dimensions():
    real = dilate(reference_realization(2, gate("cz", 2)), junk_dim=3, seed=1)
    assert real.a_dims() == (6, 6)
    assert real.l_dims() == (6, 6)
    assert real.eve.dims == (6, 6)


def test_conjugate_fixes_statistics_flips_branch():
    u = gate("random", 2, seed=5)
    for scheme in (ALMOST_DI, DI):
        real = reference_realization(2, u, scheme=scheme)
        conj = conjugate(real)
        validate_realization(conj)
        assert born_table(real).max_difference(born_table(conj)) <= 1e-14
        assert branch_of(real) == "plus"
        assert branch_of(conj) == "minus"
        twice = conjugate(conj)
        assert born_table(real).max_difference(born_table(twice)) == 0.0
        assert branch_of(twice) == "plus"


def test_gauge_phase_invisible_almost_di():
    real = reference_realization(2, gate("cnot", 2))
    rng = np.random.default_rng(3)
    for _ in range(3):
        gauged = gauge_phase(real, thetas=rng.uniform(0, 2 * np.pi, size=4))
        validate_realization(gauged)
        assert born_table(real).max_difference(born_table(gauged)) <= 1e-12


def test_gauge_phase_di_moves_only_unconsumed_rows():
    """The protocol reads e=0 rows and e=1 rows with the joint box; a phase
    gauge can only shuffle the leftover tomographic rows."""
    real = reference_realization(2, gate("cnot", 2), scheme=DI)
    base = born_table(real)
    gauged = born_table(gauge_phase(real, thetas=[0.3, -1.1, 0.7, 2.0]))
    moved = 0.0
    for key in base.keys():
        d = float(np.abs(base.array(key) - gauged.array(key)).max())
        x, e, y = key
        if e == 0 or y == PERP:
            assert d <= 1e-12
        else:
            moved = max(moved, d)
    assert moved > 1e-4


def test_gauge_phase_guards():
    real = reference_realization(2, gate("cz", 2))
    with pytest.raises(ValueError):
        gauge_phase(real, thetas=[0.1, 0.2])  # wrong length


def test_perturb_grows_with_epsilon():
    real = reference_realization(2, gate("cnot", 2))
    base = born_table(real)
    diffs = []
    for eps in (0.01, 0.05, 0.1):
        moved = perturb(real, epsilon=eps, seed=12)
        validate_realization(moved)
        diffs.append(base.max_difference(born_table(moved)))
    assert diffs[0] > 1e-6
    assert diffs[0] < diffs[1] < diffs[2]


def test_perturb_epsilon_zero_is_identity():
    real = reference_realization(2, gate("cz", 2))
    same = perturb(real, epsilon=0.0, seed=3)
    assert born_table(real).max_difference(born_table(same)) <= 1e-14


def test_depolarize_sources():
    real = reference_realization(2, gate("cnot", 2))
    base = born_table(real)
    clean = depolarize_sources(real, 0.0)
    validate_realization(clean)
    assert base.max_difference(born_table(clean)) <= 1e-14
    noisy = depolarize_sources(real, 0.05)
    validate_realization(noisy)
    d = base.max_difference(born_table(noisy))
    assert 1e-5 < d < 0.05
    with pytest.raises(ValueError):
        depolarize_sources(real, 1.5)


def test_depolarize_sources_di_widens_and_validates():
    real = reference_realization(2, gate("cnot", 2), scheme=DI)
    noisy = depolarize_sources(real, 0.1)
    validate_realization(noisy)
    assert noisy.sources[0].dims != real.sources[0].dims
