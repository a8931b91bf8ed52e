import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modebell.fock import (
    DensityOperator,
    PureState,
    TruncationError,
    apply_annihilation,
    apply_creation,
    basis_dimension,
    build_basis,
    number_operator,
    partial_trace,
    permute_modes,
    tensor_product,
)


def brute_force_states(m, n_max):
    return [s for s in itertools.product(range(n_max + 1), repeat=m) if sum(s) <= n_max]


def ket(basis, occ, amp=1.0):
    return PureState.from_dict(basis, {occ: amp})


def random_state(basis, rng):
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return PureState(basis, v / np.linalg.norm(v))


def random_density(basis, rng, rank=3):
    states = [random_state(basis, rng) for _ in range(rank)]
    w = rng.dirichlet(np.ones(rank))
    return DensityOperator.mixture(w, states)


class TestBasis:
    def test_smallest(self):
        b = build_basis(1, 1)
        assert b.states == ((0,), (1,))
        assert b.dim == 2

    def test_four_modes_three_particles(self):
        assert build_basis(4, 3).dim == 35

    def test_vacuum_only(self):
        b = build_basis(2, 0)
        assert b.states == ((0, 0),)

    @pytest.mark.parametrize("m,n_max", [(1, 0), (1, 4), (2, 3), (3, 2), (4, 3), (4, 4), (5, 2)])
    def test_matches_brute_force(self, m, n_max):
        b = build_basis(m, n_max)
        assert set(b.states) == set(brute_force_states(m, n_max))
        assert b.dim == basis_dimension(m, n_max) == len(brute_force_states(m, n_max))

    @pytest.mark.parametrize("m,n_max", [(2, 3), (4, 3), (3, 4)])
    def test_graded_lexicographic(self, m, n_max):
        b = build_basis(m, n_max)
        keys = [(sum(s), s) for s in b.states]
        assert keys == sorted(keys)

    @pytest.mark.parametrize("m,n_max", [(2, 3), (4, 3), (4, 4)])
    def test_index_bijection(self, m, n_max):
        b = build_basis(m, n_max)
        assert all(b.index[b.occupation(i)] == i for i in range(b.dim))
        assert sorted(b.index.values()) == list(range(b.dim))

    def test_two_mode_one_particle_order(self):
        assert build_basis(2, 1).states == ((0, 0), (0, 1), (1, 0))

    def test_rejects_zero_modes(self):
        with pytest.raises(ValueError):
            build_basis(0, 3)


class TestLadder:
    def test_create_on_vacuum(self):
        b = build_basis(1, 3)
        out = apply_creation(PureState.vacuum(b), 0)
        np.testing.assert_allclose(out.amplitudes, ket(b, (1,)).amplitudes)

    def test_create_on_one(self):
        b = build_basis(1, 3)
        out = apply_creation(ket(b, (1,)), 0)
        np.testing.assert_allclose(out.amplitudes, math.sqrt(2) * ket(b, (2,)).amplitudes)

    def test_annihilate_vacuum(self):
        b = build_basis(1, 3)
        assert np.all(apply_annihilation(PureState.vacuum(b), 0).amplitudes == 0)

    def test_annihilate_two(self):
        b = build_basis(1, 3)
        out = apply_annihilation(ket(b, (2,)), 0)
        np.testing.assert_allclose(out.amplitudes, math.sqrt(2) * ket(b, (1,)).amplitudes)

    def test_a_adag_vacuum(self):
        b = build_basis(1, 2)
        out = apply_annihilation(apply_creation(PureState.vacuum(b), 0), 0)
        np.testing.assert_allclose(out.amplitudes, PureState.vacuum(b).amplitudes)

    def test_commutator_on_one(self):
        b = build_basis(1, 3)
        s = ket(b, (1,))
        lhs = apply_annihilation(apply_creation(s, 0), 0).amplitudes - apply_creation(
            apply_annihilation(s, 0), 0
        ).amplitudes
        np.testing.assert_allclose(lhs, s.amplitudes, atol=1e-12)

    @pytest.mark.parametrize("mode", [0, 1, 2])
    def test_commutator_identity_below_cap(self, mode):
        b = build_basis(3, 3)
        for occ in b.states:
            if sum(occ) == b.n_max:
                continue
            s = ket(b, occ)
            comm = apply_annihilation(apply_creation(s, mode), mode).amplitudes - apply_creation(
                apply_annihilation(s, mode), mode
            ).amplitudes
            np.testing.assert_allclose(comm, s.amplitudes, atol=1e-12)

    def test_number_operator_eigenvalues(self):
        b = build_basis(2, 3)
        for occ in b.states:
            s = ket(b, occ)
            via_ladder = apply_creation(apply_annihilation(s, 1), 1) if occ[1] else s
            n_vec = number_operator(b, 1) @ s.amplitudes
            np.testing.assert_allclose(n_vec, occ[1] * s.amplitudes)
            if occ[1]:
                np.testing.assert_allclose(via_ladder.amplitudes, occ[1] * s.amplitudes)

    def test_creation_past_cap_is_error(self):
        b = build_basis(2, 1)
        with pytest.raises(TruncationError):
            apply_creation(ket(b, (0, 1)), 0)

    def test_creation_ignores_zero_at_cap(self):
        b = build_basis(1, 1)
        out = apply_creation(PureState.vacuum(b), 0)
        assert out.amplitudes[1] == 1


class TestTensor:
    def test_number_states(self):
        b1 = build_basis(1, 1)
        out = tensor_product(ket(b1, (1,)), ket(b1, (0,)))
        assert out.components() == {(1, 0): 1}

    def test_superposition(self):
        b1 = build_basis(1, 1)
        plus = PureState(b1, np.array([1, 1]) / math.sqrt(2))
        out = tensor_product(plus, ket(b1, (1,)))
        comps = out.components()
        assert set(comps) == {(0, 1), (1, 1)}
        assert all(abs(v - 1 / math.sqrt(2)) < 1e-15 for v in comps.values())

    def test_pure_matches_density_route(self, rng):
        b1, b2 = build_basis(2, 1), build_basis(1, 2)
        s1, s2 = random_state(b1, rng), random_state(b2, rng)
        via_vec = tensor_product(s1, s2).to_density().matrix
        via_rho = tensor_product(s1.to_density(), s2.to_density()).matrix
        np.testing.assert_allclose(via_vec, via_rho, atol=1e-14)

    def test_embedding_count_is_product_of_dims(self):
        b1, b2 = build_basis(2, 1), build_basis(2, 2)
        out = tensor_product(PureState.vacuum(b1), PureState.vacuum(b2))
        embedded = sum(1 for occ in out.basis.states if sum(occ[:2]) <= 1 and sum(occ[2:]) <= 2)
        assert embedded == b1.dim * b2.dim

    def test_cap_overflow_raises(self):
        b1 = build_basis(1, 1)
        with pytest.raises(TruncationError):
            tensor_product(ket(b1, (1,)), ket(b1, (1,)), cap=1)

    def test_cap_drops_only_zero_components(self):
        b1 = build_basis(1, 1)
        out = tensor_product(ket(b1, (1,)), ket(b1, (0,)), cap=1)
        assert out.basis.n_max == 1 and out.components() == {(1, 0): 1}


class TestPartialTrace:
    def test_product_number_state(self):
        b = build_basis(2, 1)
        red = partial_trace(ket(b, (0, 1)).to_density(), [0])
        np.testing.assert_allclose(red.matrix, np.diag([1, 0]))

    def test_maximally_entangled(self):
        b = build_basis(2, 1)
        s = PureState.from_dict(b, {(0, 1): 1 / math.sqrt(2), (1, 0): 1 / math.sqrt(2)})
        red = partial_trace(s.to_density(), [0])
        np.testing.assert_allclose(red.matrix, np.diag([0.5, 0.5]), atol=1e-15)

    def test_product_returns_factor(self, rng):
        b1 = build_basis(1, 1)
        for _ in range(10):
            s1, s2 = random_state(b1, rng), random_state(b1, rng)
            rho = tensor_product(s1, s2).to_density()
            # reduced basis keeps the global cap (2); the |2> row stays empty
            for keep, factor in (([0], s1), ([1], s2)):
                red = partial_trace(rho, keep).matrix
                np.testing.assert_allclose(red[:2, :2], factor.to_density().matrix, atol=1e-14)
                assert np.all(red[2] == 0) and np.all(red[:, 2] == 0)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), keep=st.sampled_from([[0], [1], [2], [0, 2], [2, 1]]))
    def test_trace_and_positivity_preserved(self, seed, keep):
        rng = np.random.default_rng(seed)
        rho = random_density(build_basis(3, 2), rng)
        red = partial_trace(rho, keep)
        assert abs(red.trace() - 1) < 1e-12
        assert red.is_valid()

    def test_rejects_empty_keep(self):
        b = build_basis(2, 1)
        with pytest.raises(ValueError):
            partial_trace(PureState.vacuum(b).to_density(), [])


def test_permute_modes_roundtrip(rng):
    b = build_basis(3, 2)
    s = random_state(b, rng)
    p = permute_modes(s, [2, 0, 1])
    for occ, amp in s.components().items():
        assert abs(p.amplitudes[b.index[(occ[2], occ[0], occ[1])]] - amp) < 1e-15
    back = permute_modes(p, [1, 2, 0])
    np.testing.assert_allclose(back.amplitudes, s.amplitudes)


def test_json_roundtrip(rng):
    b = build_basis(4, 3)
    s = random_state(b, rng)
    data = json.loads(s.to_json())
    assert data["M"] == 4 and data["N_max"] == 3 and len(data["amplitudes"]) == 35
    np.testing.assert_array_equal(PureState.from_json(s.to_json()).amplitudes, s.amplitudes)


def test_density_invariants(rng):
    rho = random_density(build_basis(4, 3), rng)
    assert rho.is_valid()
    assert not DensityOperator(rho.basis, 2 * rho.matrix).is_valid()


def test_states_are_immutable(rng):
    s = random_state(build_basis(2, 1), rng)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0
