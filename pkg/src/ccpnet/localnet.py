"""
Local Net - A 1+1 lattice net of local algebras and the weak common cause demonstration.

Sites sit at x = 0, ..., n-1 on the t = 0 slice. The algebra of a region is
the full matrix algebra of the sites whose t = 0 event lies in the region's
causal completion, so A(V) = A(V'') holds by construction.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np

from .bell import find_correlated_projections
from .commoncause import (
    CauseConstraint,
    CommonCauseCertificate,
    canonical_cause_value,
    construct_canonical_cause,
    search_common_cause,
)
from .config_manager import SearchDefaults, ToleranceConfig, default_tolerances, get_config
from .errors import (
    ConfigError,
    DegenerateNesting,
    Infeasible,
    LatticeTooLarge,
    MalformedRegion,
    NoCorrelationFound,
    NotFound,
    NotSpacelikeSeparated,
    ProductState,
    RegionOutsideLattice,
)
from .minkowski import (
    BLCOf,
    CompletionOf,
    DoubleCone,
    Intersection,
    Localization,
    Region,
    SamplingBox,
    TimeSlab,
    Union,
    cross_section,
    double_cones_spacelike,
    localization_region,
    refinement_regions,
    spacelike_separated,
)
from .qprob import (
    Operator,
    OperatorLike,
    Projection,
    State,
    TensorSpace,
    embed_operator,
    meet,
    partial_trace,
    permute_factors,
    random_projection,
)

logger = logging.getLogger(__name__)

Severity = Literal["critical", "warning", "info"]


@dataclass(frozen=True)
class LatticeNet:
    """Chain of ``n_sites`` sites of dimension ``site_dim`` with unit spacing and light speed."""

    n_sites: int
    site_dim: int = 2

    def __post_init__(self):
        if self.n_sites < 2:
            raise ConfigError(f"A lattice net needs at least 2 sites, got {self.n_sites}")
        if self.site_dim < 2:
            raise ConfigError(f"Site dimension must be at least 2, got {self.site_dim}")
        cap = get_config().lattice_dim_cap
        if self.site_dim ** self.n_sites > cap:
            raise LatticeTooLarge(
                f"Lattice dimension {self.site_dim}^{self.n_sites} exceeds the cap {cap}"
            )

    @property
    def space(self) -> TensorSpace:
        return TensorSpace((self.site_dim,) * self.n_sites)

    def site_points(self) -> np.ndarray:
        """t = 0 events of all sites as rows (t, x)."""
        return np.column_stack([np.zeros(self.n_sites), np.arange(self.n_sites, dtype=float)])

    def box(self) -> SamplingBox:
        return SamplingBox((-float(self.n_sites), -1.0), (float(self.n_sites), float(self.n_sites)))


@dataclass(frozen=True)
class NetRegion:
    region: Region
    base: FrozenSet[int]


@dataclass(frozen=True)
class CheckResult:
    """Result of a single demo check."""

    check_name: str
    passed: bool
    message: str
    severity: Severity


@dataclass(frozen=True, eq=False)
class DemoReport:
    """Everything the weak common cause demonstration produced."""

    n_sites: int
    regions: Dict[str, Region]
    bases: Dict[str, Tuple[int, ...]]
    a: Projection
    b: Projection
    certificate: CommonCauseCertificate
    algebra: str
    canonical_value: float
    localization: Localization
    checks: Tuple[CheckResult, ...]
    seed: int
    tolerances: ToleranceConfig
    alternative_localizations: Dict[str, bool] = field(default_factory=dict)

    @property
    def critical_failures(self) -> List[CheckResult]:
        return [c for c in self.checks if c.severity == "critical" and not c.passed]

    @property
    def valid(self) -> bool:
        return self.certificate.valid and not self.critical_failures


def base_of(net: LatticeNet, region: Region, tol: Optional[ToleranceConfig] = None) -> FrozenSet[int]:
    """
    Sites whose t = 0 event lies in the causal completion of ``region``.

    Raises:
        MalformedRegion: If the region is not 1+1 dimensional
        RegionOutsideLattice: If the completion's t = 0 slice leaves [-1, n_sites]
    """
    if region.dim not in (1, None):
        raise MalformedRegion("Lattice regions must be 1+1 dimensional")
    completion = CompletionOf(region)
    for lo, hi in cross_section(completion, 0.0):
        if lo < -1.0 or hi > float(net.n_sites):
            raise RegionOutsideLattice(
                f"Region's t=0 shadow ({lo:g}, {hi:g}) leaves the lattice [-1, {net.n_sites}]"
            )
    inside = completion.mask(net.site_points(), tol)
    return frozenset(int(s) for s in np.flatnonzero(inside))


def net_region(net: LatticeNet, region: Region) -> NetRegion:
    return NetRegion(region, base_of(net, region))


def support_of(x: OperatorLike, tol: Optional[ToleranceConfig] = None) -> FrozenSet[int]:
    """Smallest site set outside of which X acts as the identity."""
    tol = tol or default_tolerances()
    matrix = x.matrix if isinstance(x, Projection) else x.entries
    space = x.space
    dims = space.factor_dims
    support = set()
    for site in range(space.n_factors):
        others = [s for s in range(space.n_factors) if s != site]
        if not others:
            trivial = np.allclose(matrix, matrix[0, 0] * np.eye(len(matrix)), atol=tol.support_tol)
        else:
            reduced = partial_trace(matrix, others, dims) / dims[site]
            trivial = np.max(np.abs(embed_operator(reduced, others, space) - matrix)) <= tol.support_tol
        if not trivial:
            support.add(site)
    return frozenset(support)


def einstein_causality_check(net: LatticeNet, v1: Region, v2: Region, samples: int = 2000,
                             seed: int = 0, tol: Optional[ToleranceConfig] = None) -> bool:
    """Spacelike separated regions must get disjoint bases."""
    if isinstance(v1, DoubleCone) and isinstance(v2, DoubleCone):
        separated = double_cones_spacelike(v1, v2, tol)
    else:
        separated = spacelike_separated(v1, v2, samples, seed, box=net.box(), tol=tol).holds
    if not separated:
        return True
    return not (base_of(net, v1, tol) & base_of(net, v2, tol))


def _random_local_projection(d: int, rng: np.random.Generator) -> Projection:
    rank = int(rng.integers(1, d + 1))
    return random_projection(TensorSpace((d,)), rank, seed=int(rng.integers(2 ** 31)))


def logical_independence_check(net: LatticeNet, v1: Region, v2: Region, witnesses: int = 100,
                               seed: int = 0, tol: Optional[ToleranceConfig] = None) -> bool:
    """
    Tensor-split criterion: disjoint nonempty bases make the algebras logically independent.

    The verdict is confirmed on random nonzero projection pairs by checking
    that their meet is nonzero.
    """
    tol = tol or default_tolerances()
    b1, b2 = base_of(net, v1, tol), base_of(net, v2, tol)
    if not b1 or not b2:
        logger.info("Logical independence fails: a base is empty, so its algebra is trivial")
        return False
    if b1 & b2:
        logger.info(f"Bases {sorted(b1)} and {sorted(b2)} overlap; tensor-split criterion does not apply")
        return False

    sites = sorted(b1) + sorted(b2)
    local = TensorSpace((net.site_dim,) * len(sites))
    d1, d2 = net.site_dim ** len(b1), net.site_dim ** len(b2)
    first, second = list(range(len(b1))), list(range(len(b1), len(sites)))
    rng = np.random.default_rng(seed)
    for _ in range(witnesses):
        p = _random_local_projection(d1, rng)
        q = _random_local_projection(d2, rng)
        a = Projection._trusted(Operator.local(local, p.matrix, first))
        b = Projection._trusted(Operator.local(local, q.matrix, second))
        if meet(a, b, tol).rank == 0:
            logger.warning("Found nonzero projections with zero meet across disjoint bases")
            return False
    return True


def schlieder_check(net: LatticeNet, v1: Region, v2: Region, witnesses: int = 100,
                    seed: int = 0, tol: Optional[ToleranceConfig] = None) -> bool:
    """XY != 0 for random nonzero X in A(V1) and Y in A(V2)."""
    tol = tol or default_tolerances()
    b1, b2 = base_of(net, v1, tol), base_of(net, v2, tol)
    if not b1 or not b2 or b1 & b2:
        return False
    d1, d2 = net.site_dim ** len(b1), net.site_dim ** len(b2)
    rng = np.random.default_rng(seed)
    for _ in range(witnesses):
        x = rng.standard_normal((d1, d1)) + 1j * rng.standard_normal((d1, d1))
        y = rng.standard_normal((d2, d2)) + 1j * rng.standard_normal((d2, d2))
        product = np.kron(x, y)
        if np.linalg.norm(product, 2) <= 1e-12 * np.linalg.norm(x, 2) * np.linalg.norm(y, 2):
            return False
    return True


def default_demo_regions(net: LatticeNet) -> Tuple[DoubleCone, DoubleCone]:
    """Unit double cones over sites 1 and n-2."""
    return DoubleCone.centered(0.0, 1.0), DoubleCone.centered(0.0, float(net.n_sites - 2))


def default_demo_state(net: LatticeNet, site_1: int, site_2: int,
                       weight: Optional[float] = None, rest_bias: Optional[float] = None) -> State:
    """
    Maximally entangled pair on (site_1, site_2), mixed with the maximally mixed
    pair state, tensored with a biased full-rank product state elsewhere.

    Args:
        net: Lattice net
        site_1: First site of the pair
        site_2: Second site of the pair
        weight: Weight of the entangled pair (default from config)
        rest_bias: Weight of the excited levels on every other site (default from config)
    """
    config = get_config()
    weight = config.demo_weight if weight is None else weight
    rest_bias = config.demo_rest_bias if rest_bias is None else rest_bias
    if not 0 < weight < 1:
        raise ConfigError(f"Demo weight must lie in (0, 1) for a faithful state, got {weight}")
    if not 0 < rest_bias < 0.5:
        raise ConfigError(f"Demo rest bias must lie in (0, 0.5), got {rest_bias}")

    d = net.site_dim
    entangled = np.zeros(d * d, dtype=complex)
    entangled[[i * d + i for i in range(d)]] = 1 / np.sqrt(d)
    pair = weight * np.outer(entangled, entangled.conj()) + (1 - weight) * np.eye(d * d) / (d * d)

    single = np.diag([1 - rest_bias] + [rest_bias / (d - 1)] * (d - 1)).astype(complex)
    others = [s for s in range(net.n_sites) if s not in (site_1, site_2)]
    rho = pair
    for _ in others:
        rho = np.kron(rho, single)
    order = [site_1, site_2] + others
    rho = permute_factors(rho, list(np.argsort(order)), [d] * net.n_sites)
    return State(net.space, rho)


def alternative_localizations(net: LatticeNet, c: OperatorLike, candidates: Mapping[str, Region],
                              tol: Optional[ToleranceConfig] = None) -> Dict[str, bool]:
    """For each candidate region: whether the operator belongs to its algebra."""
    support = support_of(c, tol)
    result = {}
    for name, region in candidates.items():
        try:
            result[name] = support <= base_of(net, region, tol)
        except RegionOutsideLattice:
            result[name] = False
    return result


def _find_cause(phi: State, a: Projection, b: Projection, union_sites: Sequence[int],
                w_sites: Sequence[int], budget: SearchDefaults,
                tol: ToleranceConfig) -> Tuple[CommonCauseCertificate, str, bool]:
    """Canonical cause in A(V1) v A(V2), else in A(W), else searched in A(W)."""
    try:
        return construct_canonical_cause(phi, a, b, union_sites, tol), "A(V1) v A(V2)", True
    except (Infeasible, DegenerateNesting) as e:
        logger.warning(f"Canonical cause unavailable in A(V1) v A(V2): {e}; enlarging to A(W)")
    try:
        return construct_canonical_cause(phi, a, b, w_sites, tol), "A(W)", False
    except (Infeasible, DegenerateNesting) as e:
        logger.warning(f"Canonical cause unavailable in A(W): {e}; searching")
    result = search_common_cause(phi, a, b, CauseConstraint(sites=tuple(w_sites)), budget, tol=tol)
    return result.certificate, "A(W) search", False


def wccp_demo(net: LatticeNet, v1: DoubleCone, v2: DoubleCone, phi: State,
              budget: Optional[SearchDefaults] = None, samples: Optional[int] = None,
              seed: Optional[int] = None, tol: Optional[ToleranceConfig] = None) -> DemoReport:
    """
    Exhibit a common cause of a correlation between A(V1) and A(V2), localized in wpast(V1, V2).

    Args:
        net: Lattice net
        v1: First double cone
        v2: Second double cone, spacelike to the first
        phi: Faithful state on the lattice
        budget: Search budget
        samples: Geometry sample count (default from config)
        seed: Seed for sampling and search (default from budget)
        tol: Tolerances

    Returns:
        DemoReport with the certificate, regions, bases and all checks

    Raises:
        NotSpacelikeSeparated: If the cones are causally related
        NoCorrelationFound: If phi shows no correlation across the two bases
    """
    tol = tol or default_tolerances()
    budget = budget or get_config().search
    seed = budget.seed if seed is None else seed
    samples = samples if samples is not None else get_config().geometry_samples
    checks: List[CheckResult] = []

    def record(name: str, passed: bool, message: str, severity: Severity = "critical") -> None:
        checks.append(CheckResult(name, bool(passed), message, severity))
        if not passed and severity == "critical":
            logger.warning(f"Check failed: {name}: {message}")

    logger.info("Step 1/6: geometry and local algebras")
    if not double_cones_spacelike(v1, v2, tol):
        raise NotSpacelikeSeparated("V1 and V2 are not spacelike separated")
    record("spacelike_separation", True, "Double cones are spacelike separated")
    b1, b2 = base_of(net, v1, tol), base_of(net, v2, tol)
    record("einstein_causality", einstein_causality_check(net, v1, v2, seed=seed, tol=tol),
           f"Bases {sorted(b1)} and {sorted(b2)}")
    record("logical_independence", logical_independence_check(net, v1, v2, seed=seed, tol=tol),
           "Random nonzero projection pairs have nonzero meets")
    record("schlieder_property", schlieder_check(net, v1, v2, seed=seed, tol=tol),
           "Random nonzero operator pairs have nonzero products", "warning")
    if not phi.faithful:
        logger.warning("State is not faithful; the canonical construction may be infeasible")
    record("faithful_state", phi.faithful, f"Smallest eigenvalue {phi.eigenvalues[0]:.3g}", "warning")

    logger.info("Step 2/6: correlated projections")
    try:
        a, b = find_correlated_projections(phi, sorted(b1), sorted(b2), budget, seed, tol)
    except (ProductState, NotFound) as e:
        raise NoCorrelationFound(f"No correlation across bases {sorted(b1)} and {sorted(b2)}: {e}") from e

    logger.info("Step 3/6: localization region")
    localization = localization_region(v1, v2, samples, seed, tol)
    base_w = base_of(net, localization.region, tol)
    record("base_w_covers_bases", (b1 | b2) <= base_w, f"base(W) = {sorted(base_w)}")
    record("localization_covers_v1", localization.checks["covers_v1"], "Domain of dependence of W covers V1")
    record("localization_covers_v2", localization.checks["covers_v2"], "Domain of dependence of W covers V2")

    logger.info("Step 4/6: common cause")
    r = canonical_cause_value(phi, a, b, tol)
    certificate, algebra, in_union = _find_cause(phi, a, b, sorted(b1 | b2), sorted(base_w), budget, tol)
    record("canonical_in_bases_union", in_union,
           f"Canonical value {r:.12g} realised in {algebra}", "info")
    record("certificate_valid", certificate.valid, "All four common-cause conditions hold")
    max_comm = max(certificate.commutation_residuals)
    record("cause_commutes", max_comm <= tol.tol_comm, f"Largest commutator norm {max_comm:.3g}")
    support = support_of(certificate.C, tol)
    record("cause_supported_in_base_w", support <= base_w, f"support(C) = {sorted(support)}")

    logger.info("Step 5/6: W inside wpast(V1, V2)")
    verdict = localization.subset_verdict
    record("w_inside_wpast", localization.checks["subset_of_wpast"],
           f"{verdict.hits} sampled points of W checked" if verdict else "not sampled")

    logger.info("Step 6/6: refinement and shared localization")
    tilde_1, tilde_2 = refinement_regions(v1, v2, localization.region)
    branch_1, branch_2 = base_of(net, tilde_1, tol), base_of(net, tilde_2, tol)
    confined = support <= branch_1 or support <= branch_2
    record("refinement_not_confined", bool(support) and not confined,
           f"support(C) = {sorted(support)}, branch bases {sorted(branch_1)} / {sorted(branch_2)}")
    record("support_meets_both_bases", bool(support & b1) and bool(support & b2),
           "C acts on both sides of the correlation", "info")

    slab_top = localization.t0 + localization.epsilon
    lowest = min(v1.bottom.t, v2.bottom.t)
    candidates: Dict[str, Region] = {
        "W": localization.region,
        "W_upper": Intersection.of(Union.of(BLCOf(v1), BLCOf(v2)), TimeSlab(slab_top, lowest)),
        "V1_or_V2": Union.of(v1, v2),
    }
    shared = alternative_localizations(net, certificate.C, candidates, tol)
    record("shared_localization", sum(shared.values()) >= 2,
           f"C belongs to the algebras of {sorted(k for k, v in shared.items() if v)}", "info")

    certificate = certificate.with_localization({
        "algebra": algebra,
        "sites": sorted(b1 | b2) if in_union else sorted(base_w),
        "support": sorted(support),
    })
    report = DemoReport(
        n_sites=net.n_sites,
        regions={"V1": v1, "V2": v2, "W": localization.region, "V1_tilde": tilde_1, "V2_tilde": tilde_2},
        bases={
            "V1": tuple(sorted(b1)),
            "V2": tuple(sorted(b2)),
            "W": tuple(sorted(base_w)),
            "V1_tilde": tuple(sorted(branch_1)),
            "V2_tilde": tuple(sorted(branch_2)),
        },
        a=a,
        b=b,
        certificate=certificate,
        algebra=algebra,
        canonical_value=r,
        localization=localization,
        checks=tuple(checks),
        seed=seed,
        tolerances=tol,
        alternative_localizations=shared,
    )
    logger.info(f"Demo finished: valid={report.valid}, cause found in {algebra}")
    return report
