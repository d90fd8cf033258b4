"""Tests for the finite-dimensional quantum probability layer."""

import numpy as np
import pytest
from scipy.stats import unitary_group

from ccpnet.errors import (
    DimensionMismatch,
    InvalidProjection,
    InvalidState,
    NonCommuting,
    RankOutOfRange,
    ZeroConditioningEvent,
)
from ccpnet.qprob import (
    Operator,
    Projection,
    State,
    TensorSpace,
    commutes,
    cond_prob,
    expectation,
    is_below,
    is_product_state,
    join,
    meet,
    partial_trace,
    random_projection,
    random_state,
    reduction_distance,
)

SIGMA_Z_UP = np.array([[1, 0], [0, 0]])
PLUS = np.array([[1, 1], [1, 1]]) / 2


class TestTensorSpace:
    def test_qubits(self):
        space = TensorSpace.qubits(3)
        assert space.factor_dims == (2, 2, 2)
        assert space.total_dim == 8
        assert space.n_factors == 3

    def test_subspace_and_dim_of(self):
        space = TensorSpace((2, 3, 2))
        assert space.dim_of([0, 1]) == 6
        assert space.subspace([2, 1]).factor_dims == (2, 3)

    def test_bad_sites(self):
        with pytest.raises(DimensionMismatch):
            TensorSpace.qubits(2).check_sites([2])


class TestStateAndProjection:
    def test_state_validation(self):
        space = TensorSpace((2,))
        with pytest.raises(InvalidState):
            State(space, np.diag([0.7, 0.7]))
        with pytest.raises(InvalidState):
            State(space, np.diag([1.2, -0.2]))

    def test_projection_validation(self):
        with pytest.raises(InvalidProjection):
            Projection.from_matrix(TensorSpace((2,)), np.diag([0.5, 1.0]))

    def test_faithful(self):
        assert State.maximally_mixed(TensorSpace.qubits(2)).faithful
        assert not State.pure(TensorSpace((2,)), np.array([1, 0])).faithful

    def test_eigenvalues_ascending(self):
        phi = State.diagonal([0.5, 0.2, 0.3])
        assert np.allclose(phi.eigenvalues, [0.2, 0.3, 0.5])

    def test_complement_and_rank(self):
        p = Projection.local(TensorSpace.qubits(2), SIGMA_Z_UP, [0])
        assert p.rank == 2
        assert p.complement().rank == 2
        assert np.allclose(p.matrix + p.complement().matrix, np.eye(4))


class TestLattice:
    def test_meet_of_lines_in_plane(self):
        space = TensorSpace((3,))
        e = np.eye(3)
        p = Projection.from_basis(space, e[:, [0, 1]])
        q = Projection.from_basis(space, e[:, [1, 2]])
        m = meet(p, q)
        assert m.rank == 1
        assert np.allclose(m.matrix, np.diag([0, 1, 0]))
        assert join(p, q).rank == 3

    def test_meet_of_generic_lines_is_zero(self):
        space = TensorSpace((2,))
        p = Projection.from_matrix(space, SIGMA_Z_UP)
        q = Projection.from_matrix(space, PLUS)
        assert meet(p, q).rank == 0
        assert join(p, q).rank == 2

    def test_order(self):
        space = TensorSpace((3,))
        small = Projection.from_matrix(space, np.diag([1, 0, 0]))
        big = Projection.from_matrix(space, np.diag([1, 1, 0]))
        assert is_below(small, big)
        assert not is_below(big, small)

    def test_meet_is_below_both(self):
        space = TensorSpace.qubits(2)
        a = random_projection(space, 3, seed=1)
        b = random_projection(space, 3, seed=2)
        m = meet(a, b)
        assert m.rank == 2
        assert is_below(m, a) and is_below(m, b)


class TestExpectations:
    def test_expectation_and_space_mismatch(self):
        phi = State.diagonal([0.25, 0.75])
        p = Projection.from_matrix(TensorSpace((2,)), SIGMA_Z_UP)
        assert expectation(phi, p) == pytest.approx(0.25)
        with pytest.raises(DimensionMismatch):
            expectation(phi, Projection.identity(TensorSpace((3,))))

    def test_non_hermitian_expectation_is_complex(self):
        phi = State.maximally_mixed(TensorSpace((2,)))
        raising = Operator(TensorSpace((2,)), np.array([[0, 1j], [0, 0]]))
        assert isinstance(expectation(phi, raising), complex)

    def test_cond_prob(self):
        phi = State.diagonal([0.1, 0.2, 0.3, 0.4])
        space = phi.space
        x = Projection.from_matrix(space, np.diag([1, 1, 0, 0]))
        y = Projection.from_matrix(space, np.diag([0, 1, 1, 0]))
        assert cond_prob(phi, x, y) == pytest.approx(0.4)

    def test_cond_prob_errors(self):
        space = TensorSpace((2,))
        phi = State.diagonal([1.0, 0.0])
        p = Projection.from_matrix(space, SIGMA_Z_UP)
        with pytest.raises(NonCommuting):
            cond_prob(phi, p, Projection.from_matrix(space, PLUS))
        with pytest.raises(ZeroConditioningEvent):
            cond_prob(phi, p, p.complement())

    def test_local_operators_on_disjoint_sites_commute(self):
        space = TensorSpace.qubits(3)
        a = Projection.local(space, PLUS, [0])
        b = Projection.local(space, SIGMA_Z_UP, [2])
        assert commutes(a, b)
        assert not commutes(a, Projection.local(space, SIGMA_Z_UP, [0]))


class TestRandomAndReductions:
    def test_random_projection_rank_and_seed(self):
        space = TensorSpace.qubits(2)
        p = random_projection(space, 2, seed=7)
        assert p.rank == 2
        assert np.allclose(p.matrix, random_projection(space, 2, seed=7).matrix)
        with pytest.raises(RankOutOfRange):
            random_projection(space, 5)

    def test_random_state_faithful(self):
        phi = random_state(TensorSpace.qubits(2), seed=3)
        assert phi.faithful
        assert phi.eigenvalues[0] >= 0.05 / 4 - 1e-12

    def test_partial_trace_of_product(self):
        a = np.diag([0.3, 0.7])
        b = np.array([[0.5, 0.1], [0.1, 0.5]])
        assert np.allclose(partial_trace(np.kron(a, b), [1], (2, 2)), b)
        assert np.allclose(partial_trace(np.kron(a, b), [0], (2, 2)), a)

    def test_product_state_detection(self, singlet):
        space = TensorSpace.qubits(2)
        product = State(space, np.kron(np.diag([0.3, 0.7]), np.diag([0.6, 0.4])))
        assert reduction_distance(product, [0], [1]) == pytest.approx(0.0, abs=1e-12)
        assert is_product_state(product, [0], [1])
        assert not is_product_state(singlet, [0], [1])

    def test_reduced_state(self, singlet):
        assert np.allclose(singlet.reduced([1]).rho, np.eye(2) / 2)


def commuting_triple(space: TensorSpace, seed: int):
    """Three projections diagonal in one Haar-random basis."""
    rng = np.random.default_rng(seed)
    basis = unitary_group.rvs(space.total_dim, random_state=rng)
    masks = rng.integers(0, 2, size=(3, space.total_dim)).astype(bool)
    return tuple(Projection.from_matrix(space, (basis * mask) @ basis.conj().T) for mask in masks)


def same(p: Projection, q: Projection) -> bool:
    return np.allclose(p.matrix, q.matrix, atol=1e-8)


@pytest.mark.parametrize("space", [TensorSpace((2, 3)), TensorSpace.qubits(3)], ids=["2x3", "2x2x2"])
@pytest.mark.parametrize("seed", range(25))
class TestLatticeLawsOnCommutingTriples:
    def test_meet_is_product(self, space, seed):
        a, b, _ = commuting_triple(space, seed)
        assert commutes(a, b)
        np.testing.assert_allclose(meet(a, b).matrix, a.matrix @ b.matrix, atol=1e-8)

    def test_lattice_identities(self, space, seed):
        a, b, c = commuting_triple(space, seed)
        assert same(meet(a, b), meet(b, a))
        assert same(join(a, b), join(b, a))
        assert same(meet(meet(a, b), c), meet(a, meet(b, c)))
        assert same(join(join(a, b), c), join(a, join(b, c)))
        assert same(meet(a, join(a, b)), a)
        assert same(join(a, meet(a, b)), a)
        assert same(join(a, b).complement(), meet(a.complement(), b.complement()))

    def test_distributive(self, space, seed):
        a, b, c = commuting_triple(space, seed)
        assert same(meet(a, join(b, c)), join(meet(a, b), meet(a, c)))
        assert same(join(a, meet(b, c)), meet(join(a, b), join(a, c)))

    def test_modularity_of_probabilities(self, space, seed):
        a, b, _ = commuting_triple(space, seed)
        phi = random_state(space, seed=seed)
        lhs = expectation(phi, join(a, b)) + expectation(phi, meet(a, b))
        rhs = expectation(phi, a) + expectation(phi, b)
        assert lhs == pytest.approx(rhs, abs=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_faithful_state_sees_every_nonzero_projection(seed):
    space = TensorSpace((2, 3))
    phi = random_state(space, seed=seed)
    assert phi.faithful
    smallest = float(phi.eigenvalues[0])
    for rank in range(1, space.total_dim + 1):
        p = random_projection(space, rank, seed=100 * seed + rank)
        assert expectation(phi, p) >= rank * smallest - 1e-12
    assert expectation(phi, Projection.zero(space)) == 0


@pytest.mark.parametrize("seed", range(10))
def test_generic_subspaces_meet_in_expected_rank(seed):
    space = TensorSpace.qubits(2)
    a = random_projection(space, 3, seed=seed)
    b = random_projection(space, 2, seed=seed + 1000)
    assert meet(a, b).rank == 1
    assert meet(random_projection(space, 1, seed=seed), b).rank == 0
