"""Tests for the lattice net of local algebras and the weak common cause demonstration."""

import itertools

import numpy as np
import pytest

from ccpnet.errors import (
    ConfigError,
    LatticeTooLarge,
    NoCorrelationFound,
    NotSpacelikeSeparated,
    RegionOutsideLattice,
)
from ccpnet.localnet import (
    LatticeNet,
    alternative_localizations,
    base_of,
    default_demo_regions,
    default_demo_state,
    einstein_causality_check,
    logical_independence_check,
    schlieder_check,
    support_of,
    wccp_demo,
)
from ccpnet.minkowski import CompletionOf, DoubleCone, EmptyRegion, double_cones_spacelike, localization_region
from ccpnet.qprob import Operator, Projection, State, meet

SIGMA_Z = np.diag([1.0, -1.0])
UP = np.diag([1.0, 0.0])

GRID = [
    DoubleCone.centered(0.0, float(x), r)
    for x, r in itertools.product([1, 1.5, 2, 3, 4, 5, 6], [0.5, 1.0, 1.5, 2.0])
]


def nested(inner: DoubleCone, outer: DoubleCone) -> bool:
    (t_i, x_i), (t_o, x_o) = inner.bottom.coords, outer.bottom.coords
    r_i = (inner.top.t - inner.bottom.t) / 2
    r_o = (outer.top.t - outer.bottom.t) / 2
    return abs(x_i - x_o) + r_i <= r_o and t_i + r_i == t_o + r_o


class TestLatticeNet:
    def test_validation(self):
        with pytest.raises(ConfigError):
            LatticeNet(1)
        with pytest.raises(ConfigError):
            LatticeNet(4, site_dim=1)
        with pytest.raises(LatticeTooLarge):
            LatticeNet(13)

    def test_cap_comes_from_config(self, isolated_config):
        isolated_config.config.lattice_dim_cap = 16
        with pytest.raises(LatticeTooLarge):
            LatticeNet(5)

    def test_space(self, demo_net):
        assert demo_net.space.factor_dims == (2,) * 6


class TestBases:
    def test_unit_cone(self, demo_net):
        assert base_of(demo_net, DoubleCone.centered(0, 3)) == frozenset({3})
        assert base_of(demo_net, DoubleCone.centered(0, 3, 2)) == frozenset({2, 3, 4})

    def test_cone_between_sites_is_empty(self, demo_net):
        assert base_of(demo_net, DoubleCone.centered(0, 1.5, 0.25)) == frozenset()
        assert base_of(demo_net, EmptyRegion(1)) == frozenset()

    def test_region_outside_lattice(self, demo_net):
        with pytest.raises(RegionOutsideLattice):
            base_of(demo_net, DoubleCone.centered(0, 10))

    def test_demo_slab_base(self, demo_net):
        v1, v2 = default_demo_regions(demo_net)
        loc = localization_region(v1, v2, samples=2000)
        assert base_of(demo_net, loc.region) == frozenset({1, 2, 3, 4})

    def test_isotony(self):
        net = LatticeNet(8)
        for inner, outer in itertools.permutations(GRID, 2):
            if nested(inner, outer):
                assert base_of(net, inner) <= base_of(net, outer)

    def test_primitive_causality(self):
        net = LatticeNet(8)
        for cone in GRID:
            assert base_of(net, cone) == base_of(net, CompletionOf(cone))

    def test_einstein_causality_on_grid(self):
        net = LatticeNet(8)
        for first, second in itertools.combinations(GRID, 2):
            if double_cones_spacelike(first, second):
                assert not base_of(net, first) & base_of(net, second)
                assert einstein_causality_check(net, first, second)


class TestIndependence:
    def test_demo_cones(self, demo_net):
        v1, v2 = default_demo_regions(demo_net)
        assert logical_independence_check(demo_net, v1, v2)
        assert schlieder_check(demo_net, v1, v2)

    def test_overlapping_and_empty_bases(self, demo_net):
        wide = DoubleCone.centered(0, 2, 2)
        assert not logical_independence_check(demo_net, wide, DoubleCone.centered(0, 3))
        assert not logical_independence_check(demo_net, DoubleCone.centered(0, 1.5, 0.25), DoubleCone.centered(0, 4))


class TestSupports:
    def test_identity_and_local(self, demo_net):
        space = demo_net.space
        assert support_of(Projection.identity(space)) == frozenset()
        assert support_of(Operator.local(space, SIGMA_Z, [2])) == frozenset({2})

    def test_meet_of_local_projections(self, demo_net):
        space = demo_net.space
        m = meet(Projection.local(space, UP, [1]), Projection.local(space, UP, [4]))
        assert support_of(m) == frozenset({1, 4})

    def test_alternative_localizations(self, demo_net):
        c = Projection.local(demo_net.space, UP, [3])
        result = alternative_localizations(demo_net, c, {
            "around": DoubleCone.centered(0, 3),
            "elsewhere": DoubleCone.centered(0, 1),
            "outside": DoubleCone.centered(0, 20),
        })
        assert result == {"around": True, "elsewhere": False, "outside": False}


class TestDemoState:
    def test_faithful_and_normalized(self, demo_net):
        phi = default_demo_state(demo_net, 1, 4)
        assert phi.faithful
        assert np.trace(phi.rho).real == pytest.approx(1.0)

    def test_pair_marginal(self, demo_net):
        phi = default_demo_state(demo_net, 1, 4, weight=0.9)
        pair = phi.reduced([1, 4]).rho
        assert pair[0, 3].real == pytest.approx(0.45)
        rest = phi.reduced([0]).rho
        assert np.allclose(np.diag(rest).real, [0.98, 0.02])

    @pytest.mark.parametrize("weight, bias", [(1.0, 0.02), (0.0, 0.02), (0.9, 0.5)])
    def test_bad_parameters(self, demo_net, weight, bias):
        with pytest.raises(ConfigError):
            default_demo_state(demo_net, 1, 4, weight=weight, rest_bias=bias)


class TestWccpDemo:
    @pytest.fixture
    def report(self, demo_net):
        v1, v2 = default_demo_regions(demo_net)
        phi = default_demo_state(demo_net, 1, 4)
        return wccp_demo(demo_net, v1, v2, phi, samples=20_000, seed=1)

    def test_report_is_valid(self, report):
        assert report.valid
        assert report.critical_failures == []
        assert report.bases["V1"] == (1,)
        assert report.bases["V2"] == (4,)
        assert report.bases["W"] == (1, 2, 3, 4)

    def test_cause_needs_the_larger_algebra(self, report):
        checks = {c.check_name: c for c in report.checks}
        assert report.algebra == "A(W)"
        assert not checks["canonical_in_bases_union"].passed
        assert checks["canonical_in_bases_union"].severity == "info"
        assert report.canonical_value == pytest.approx(9 / 19, rel=1e-6)

    def test_certificate(self, report):
        cert = report.certificate
        assert cert.valid
        assert cert.residual_screen_C <= 1e-9
        assert cert.residual_screen_Cperp <= 1e-9
        assert max(cert.commutation_residuals) <= 1e-9
        assert cert.localization["algebra"] == "A(W)"
        assert set(cert.localization["support"]) <= {1, 2, 3, 4}

    def test_refinements_do_not_confine_the_cause(self, report):
        checks = {c.check_name: c for c in report.checks}
        assert checks["refinement_not_confined"].passed
        assert checks["w_inside_wpast"].passed
        assert report.alternative_localizations["W"]

    def test_product_state_has_no_correlation(self, demo_net):
        v1, v2 = default_demo_regions(demo_net)
        phi = State.maximally_mixed(demo_net.space)
        with pytest.raises(NoCorrelationFound):
            wccp_demo(demo_net, v1, v2, phi, samples=2000)

    def test_related_cones(self, demo_net):
        phi = default_demo_state(demo_net, 1, 4)
        with pytest.raises(NotSpacelikeSeparated):
            wccp_demo(demo_net, DoubleCone.centered(0, 1), DoubleCone.centered(0, 2), phi, samples=2000)

    @pytest.mark.slow
    def test_default_sampling(self, demo_net):
        v1, v2 = default_demo_regions(demo_net)
        report = wccp_demo(demo_net, v1, v2, default_demo_state(demo_net, 1, 4))
        assert report.valid
