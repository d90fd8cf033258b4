"""Tests for common-cause verification, construction and search."""

import numpy as np
import pytest

from ccpnet.commoncause import (
    CauseConstraint,
    canonical_cause_value,
    construct_canonical_cause,
    construct_subprojection,
    correlation,
    merit,
    screening_residual,
    search_common_cause,
    subprojection_feasibility,
    verify_common_cause,
)
from ccpnet.config_manager import SearchDefaults
from ccpnet.errors import (
    DegenerateNesting,
    Infeasible,
    NonCommuting,
    NotCorrelated,
    SoundnessViolation,
    ZeroConditioningEvent,
)
from ccpnet.qprob import (
    Projection,
    State,
    TensorSpace,
    expectation,
    is_below,
    meet,
    random_projection,
    random_state,
)

from .conftest import diagonal_projection


class TestVerification:
    def test_refined_space_cause(self, five_atom):
        phi, a, b, c = five_atom["phi"], five_atom["A"], five_atom["B"], five_atom["C"]
        assert correlation(phi, a, b) == pytest.approx(0.15)
        cert = verify_common_cause(phi, a, b, c)
        assert cert.valid
        assert cert.residual_screen_C <= 1e-15
        assert cert.residual_screen_Cperp <= 1e-15
        assert cert.margin_A == pytest.approx(0.8)
        assert cert.margin_B == pytest.approx(0.8)
        assert merit(cert) <= 1e-30

    def test_conditional_on_complement(self, five_atom):
        phi, a, b, c = five_atom["phi"], five_atom["A"], five_atom["B"], five_atom["C"]
        ab_cperp = expectation(phi, meet(meet(a, b), c.complement())) / expectation(phi, c.complement())
        assert ab_cperp == pytest.approx(0.04)
        assert screening_residual(phi, a, b, c.complement()) <= 1e-15

    def test_identity_candidate(self, five_atom):
        phi, a, b = five_atom["phi"], five_atom["A"], five_atom["B"]
        with pytest.raises(ZeroConditioningEvent):
            verify_common_cause(phi, a, b, Projection.identity(phi.space))

    def test_non_commuting_candidate(self):
        space = TensorSpace((2,))
        phi = State.diagonal([0.5, 0.5])
        a = Projection.from_matrix(space, np.diag([1, 0]))
        plus = Projection.from_matrix(space, np.array([[1, 1], [1, 1]]) / 2)
        with pytest.raises(NonCommuting):
            verify_common_cause(phi, a, a, plus)

    def test_screening_failure_recorded_not_raised(self, five_atom):
        phi, a, b = five_atom["phi"], five_atom["A"], five_atom["B"]
        cert = verify_common_cause(phi, a, b, diagonal_projection(5, [0, 4]))
        assert not cert.valid
        assert merit(cert) > 0


class TestCanonicalValue:
    def test_value(self, five_atom, four_atom):
        assert canonical_cause_value(five_atom["phi"], five_atom["A"], five_atom["B"]) == pytest.approx(0.375)
        assert canonical_cause_value(four_atom["phi"], four_atom["A"], four_atom["B"]) == pytest.approx(0.375)

    def test_uncorrelated_gives_zero(self):
        phi = State.diagonal([0.25, 0.25, 0.25, 0.25])
        a = diagonal_projection(4, [0, 1])
        b = diagonal_projection(4, [0, 2])
        assert canonical_cause_value(phi, a, b) == 0.0

    def test_negative_correlation(self):
        phi = State.diagonal([0.1, 0.4, 0.4, 0.1])
        with pytest.raises(NotCorrelated):
            canonical_cause_value(phi, diagonal_projection(4, [0, 1]), diagonal_projection(4, [0, 2]))


class TestSubprojections:
    def test_feasibility_intervals(self, four_atom):
        phi = four_atom["phi"]
        q = meet(four_atom["A"], four_atom["B"])
        report = subprojection_feasibility(phi, q, 0.375)
        assert not report.feasible
        assert report.interval(1) == pytest.approx((0.4, 0.4))

    def test_construct_in_generic_subspace(self):
        space = TensorSpace.qubits(2)
        phi = random_state(space, seed=11)
        q = Projection.identity(space)
        report = subprojection_feasibility(phi, q)
        low, high = report.interval(2)
        target = (low + high) / 2
        p = construct_subprojection(phi, q, target)
        assert 1 <= p.rank <= 3
        assert expectation(phi, p) == pytest.approx(target, abs=1e-10)
        assert is_below(p, q)

    def test_infeasible_carries_report(self, four_atom):
        q = meet(four_atom["A"], four_atom["B"])
        with pytest.raises(Infeasible) as excinfo:
            construct_subprojection(four_atom["phi"], q, 0.375)
        assert excinfo.value.report is not None
        assert not excinfo.value.report.feasible


class TestCanonicalCause:
    def test_refined_space(self, five_atom):
        phi, a, b = five_atom["phi"], five_atom["A"], five_atom["B"]
        cert = construct_canonical_cause(phi, a, b)
        assert cert.valid
        assert cert.C.rank == 1
        assert expectation(phi, cert.C) == pytest.approx(0.375)
        assert np.allclose(cert.C.matrix, five_atom["C"].matrix, atol=1e-9)

    def test_unrefined_space(self, four_atom):
        with pytest.raises(Infeasible):
            construct_canonical_cause(four_atom["phi"], four_atom["A"], four_atom["B"])

    def test_two_qutrit_cause_is_rotated(self):
        # The value falls strictly inside the rank-3 interval, so C is not diagonal in the product basis.
        space = TensorSpace((3, 3))
        weights = np.full(9, 0.05)
        weights[[0, 4, 8]] = [0.3, 0.2, 0.15]
        phi = State.diagonal(weights / weights.sum(), space)
        a = Projection.local(space, np.diag([1, 1, 0]), [0])
        b = Projection.local(space, np.diag([1, 1, 0]), [1])
        cert = construct_canonical_cause(phi, a, b)
        assert cert.valid
        assert is_below(cert.C, meet(a, b))
        assert expectation(phi, cert.C) == pytest.approx(canonical_cause_value(phi, a, b), abs=1e-10)
        off_diagonal = cert.C.matrix - np.diag(np.diag(cert.C.matrix))
        assert np.max(np.abs(off_diagonal)) > 1e-3


class TestSearch:
    def test_search_under_meet_in_unrefined_space(self, four_atom):
        phi, a, b = four_atom["phi"], four_atom["A"], four_atom["B"]
        result = search_common_cause(phi, a, b, CauseConstraint(below=meet(a, b)))
        assert not result.valid
        assert result.complete
        assert result.merit == pytest.approx((1 / 36) ** 2, rel=1e-6)

    def test_commutative_search_finds_trivial_cause(self, four_atom):
        # Without the A ^ B constraint, A (or B) itself screens off the correlation.
        phi, a, b = four_atom["phi"], four_atom["A"], four_atom["B"]
        result = search_common_cause(phi, a, b, CauseConstraint(commutative=True))
        assert result.valid
        assert result.rank == 2
        c = result.certificate.C.matrix
        assert np.allclose(c, a.matrix) or np.allclose(c, b.matrix)

    def test_commutative_search_in_refined_space(self, five_atom):
        phi, a, b = five_atom["phi"], five_atom["A"], five_atom["B"]
        result = search_common_cause(phi, a, b, CauseConstraint(commutative=True))
        assert result.valid
        assert result.rank == 1

    def test_valid_initial_returned(self, five_atom):
        phi, a, b, c = five_atom["phi"], five_atom["A"], five_atom["B"], five_atom["C"]
        result = search_common_cause(phi, a, b, initial=c)
        assert result.valid
        assert result.evaluated == 1
        assert result.certificate.C is c

    def test_rotation_search_in_refined_space(self, five_atom):
        phi, a, b = five_atom["phi"], five_atom["A"], five_atom["B"]
        budget = SearchDefaults(restarts=4, max_iterations=200, max_rank_tuples=64, seed=3)
        result = search_common_cause(phi, a, b, budget=budget)
        assert result.valid
        assert result.certificate.residual_screen_C <= 1e-9
        assert result.certificate.residual_screen_Cperp <= 1e-9

    def test_uncorrelated_pair_rejected(self):
        phi = State.diagonal([0.25, 0.25, 0.25, 0.25])
        with pytest.raises(NotCorrelated):
            search_common_cause(phi, diagonal_projection(4, [0, 1]), diagonal_projection(4, [0, 2]))


QUTRIT = TensorSpace((3,))


def correlated_local_pair(seed: int):
    """Faithful two-qutrit state with rank-2 local events, oriented to positive correlation."""
    space = TensorSpace((3, 3))
    phi = random_state(space, seed=seed)
    a = Projection.local(space, random_projection(QUTRIT, 2, seed=2 * seed).matrix, [0])
    b = Projection.local(space, random_projection(QUTRIT, 2, seed=2 * seed + 1).matrix, [1])
    if correlation(phi, a, b) < 0:
        b = b.complement()
    return phi, a, b


def assert_canonical_causes_sound(seeds):
    built = 0
    for seed in seeds:
        phi, a, b = correlated_local_pair(seed)
        if correlation(phi, a, b) <= 1e-3:
            continue
        try:
            cert = construct_canonical_cause(phi, a, b)
        except (Infeasible, DegenerateNesting):
            continue
        assert cert.valid, seed
        assert cert.residual_screen_C <= 1e-9
        assert cert.residual_screen_Cperp <= 1e-9
        assert cert.margin_A >= 1e-12
        assert cert.margin_B >= 1e-12
        assert is_below(cert.C, meet(a, b))
        built += 1
    return built


def assert_canonical_value_below_meet(seeds):
    checked = 0
    for seed in seeds:
        phi, a, b = correlated_local_pair(seed)
        r = canonical_cause_value(phi, a, b)
        assert 0.0 <= r <= expectation(phi, meet(a, b)) + 1e-12, seed
        checked += 1
    return checked


class TestRandomInstances:
    def test_canonical_cause_is_sound(self):
        assert assert_canonical_causes_sound(range(60)) > 0

    @pytest.mark.slow
    def test_canonical_cause_is_sound_at_scale(self):
        assert assert_canonical_causes_sound(range(1000, 2000)) > 0

    def test_canonical_value_never_exceeds_meet(self):
        assert assert_canonical_value_below_meet(range(200)) == 200

    @pytest.mark.slow
    def test_canonical_value_never_exceeds_meet_at_scale(self):
        assert assert_canonical_value_below_meet(range(10_000, 20_000)) == 10_000

    @pytest.mark.parametrize("seed", range(30))
    def test_subprojection_of_random_subspace(self, seed):
        space = TensorSpace((2, 3))
        rng = np.random.default_rng(seed)
        phi = random_state(space, seed=seed)
        q = random_projection(space, int(rng.integers(2, space.total_dim + 1)), seed=seed + 500)
        report = subprojection_feasibility(phi, q)
        k = int(rng.integers(1, q.rank))
        low, high = report.interval(k)
        target = float(rng.uniform(low, high))
        p = construct_subprojection(phi, q, target)
        assert is_below(p, q)
        assert expectation(phi, p) == pytest.approx(target, abs=1e-10)
        low_p, high_p = report.interval(p.rank)
        assert low_p - 1e-12 <= target <= high_p + 1e-12


def test_subprojection_missing_target_is_unsound(mocker):
    mocker.patch(
        "ccpnet.commoncause._rotate_to_value",
        side_effect=lambda values, rank, target: np.eye(len(values))[:, :rank],
    )
    space = TensorSpace.qubits(2)
    phi = random_state(space, seed=11)
    low, high = subprojection_feasibility(phi, Projection.identity(space)).interval(2)
    with pytest.raises(SoundnessViolation):
        construct_subprojection(phi, Projection.identity(space), (low + high) / 2)
