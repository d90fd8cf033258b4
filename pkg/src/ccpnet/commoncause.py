"""
Common Cause - Verify, construct and search for Reichenbachian common causes.

A projection C is a common cause of a positive correlation between commuting
projections A and B when C commutes with both, screens the correlation off
on C and on its orthocomplement, and raises the probability of each of A
and B.
"""

import logging
from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import bisect, least_squares

from .config_manager import SearchDefaults, ToleranceConfig, default_tolerances, get_config
from .errors import (
    BudgetExhausted,
    DegenerateNesting,
    DenominatorVanishes,
    DimensionMismatch,
    Infeasible,
    NonCommuting,
    NotCorrelated,
    SoundnessViolation,
    ZeroConditioningEvent,
    ZeroProjection,
)
from .qprob import (
    Operator,
    Projection,
    State,
    commutator_norm,
    commutes,
    embed_operator,
    expectation,
    is_below,
    join,
    meet,
    restrict_to_sites,
)
from .workers import parallel_map

logger = logging.getLogger(__name__)

# Interval endpoints and rotated values are compared with this slack.
_VALUE_SLACK = 1e-13

# A constructed subprojection must hit its target value this closely.
_TARGET_TOLERANCE = 1e-10

# Internal aim for the strict-inequality margins during search; validity is
# still judged against EPS_STRICT.
_MARGIN_AIM = 1e-6

# Merit assigned when phi(C) or phi(C-perp) is below the probability floor.
_PENALTY_MERIT = 1.0


@dataclass(frozen=True)
class FeasibilityReport:
    """Which state values a subprojection of Q can take, rank by rank."""

    rank_intervals: Tuple[Tuple[int, float, float], ...]
    feasible: bool
    chosen_rank: Optional[int] = None
    target: Optional[float] = None
    total: float = 0.0

    def interval(self, rank: int) -> Tuple[float, float]:
        _, low, high = self.rank_intervals[rank]
        return low, high


@dataclass(frozen=True, eq=False)
class CommonCauseCertificate:
    """A candidate cause with the evaluated screening residuals and margins."""

    C: Projection
    residual_screen_C: float
    residual_screen_Cperp: float
    margin_A: float
    margin_B: float
    commutation_residuals: Tuple[float, float]
    valid: bool
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    localization: Optional[Dict[str, Any]] = None

    def with_localization(self, evidence: Dict[str, Any]) -> "CommonCauseCertificate":
        return replace(self, localization=dict(evidence))


@dataclass(frozen=True)
class CauseConstraint:
    """
    Subalgebra a searched cause must live in.

    Attributes:
        sites: Factor indices the cause is supported on (None = whole space)
        below: Projection the cause must lie under
        max_rank: Largest cause rank to consider
        commutative: Only consider projections diagonal in the product basis of ``sites``
    """

    sites: Optional[Tuple[int, ...]] = None
    below: Optional[Projection] = None
    max_rank: Optional[int] = None
    commutative: bool = False


@dataclass(frozen=True, eq=False)
class SearchResult:
    certificate: CommonCauseCertificate
    merit: float
    rank: int
    evaluated: int
    complete: bool

    @property
    def valid(self) -> bool:
        return self.certificate.valid


def correlation(phi: State, a: Projection, b: Projection, tol: Optional[ToleranceConfig] = None) -> float:
    """
    phi(A ^ B) - phi(A) phi(B).

    Raises:
        NonCommuting: If A and B do not commute
    """
    tol = tol or default_tolerances()
    if not commutes(a, b, tol):
        raise NonCommuting("Correlation is only defined for commuting projections")
    return expectation(phi, meet(a, b, tol), tol) - expectation(phi, a, tol) * expectation(phi, b, tol)


def _conditionals(phi: State, ab: Projection, a: Projection, b: Projection, z: Projection,
                  p_z: float, tol: ToleranceConfig) -> Tuple[float, float, float]:
    """phi(A^B|Z), phi(A|Z), phi(B|Z) for Z commuting with A and B."""
    return (
        expectation(phi, meet(ab, z, tol), tol) / p_z,
        expectation(phi, meet(a, z, tol), tol) / p_z,
        expectation(phi, meet(b, z, tol), tol) / p_z,
    )


def screening_residual(phi: State, a: Projection, b: Projection, c: Projection,
                       tol: Optional[ToleranceConfig] = None) -> float:
    """
    |phi(A^B|C) - phi(A|C) phi(B|C)|, the screening-off residual on C alone.

    Raises:
        ZeroConditioningEvent: If phi(C) is below PROB_FLOOR
    """
    tol = tol or default_tolerances()
    p_c = expectation(phi, c, tol)
    if p_c <= tol.prob_floor:
        raise ZeroConditioningEvent(f"phi(C) = {p_c:.3g} is below the probability floor")
    ab_c, a_c, b_c = _conditionals(phi, meet(a, b, tol), a, b, c, p_c, tol)
    return abs(ab_c - a_c * b_c)


def verify_common_cause(phi: State, a: Projection, b: Projection, c: Projection,
                        tol: Optional[ToleranceConfig] = None) -> CommonCauseCertificate:
    """
    Evaluate the four common-cause conditions for C.

    Violations are recorded on the certificate rather than raised.

    Args:
        phi: State
        a: First correlated projection
        b: Second correlated projection
        c: Candidate cause
        tol: Tolerances (defaults to the configured ones)

    Returns:
        CommonCauseCertificate with residuals, margins and the validity flag

    Raises:
        NonCommuting: If C fails to commute with A or B
        ZeroConditioningEvent: If phi(C) or phi(C-perp) is below PROB_FLOOR
    """
    tol = tol or default_tolerances()
    comm_a = commutator_norm(c, a)
    comm_b = commutator_norm(c, b)
    if comm_a > tol.tol_comm or comm_b > tol.tol_comm:
        raise NonCommuting(
            f"Candidate cause does not commute with A and B (residuals {comm_a:.3g}, {comm_b:.3g})"
        )

    p_c = expectation(phi, c, tol)
    c_perp = c.complement()
    p_cperp = expectation(phi, c_perp, tol)
    if p_c <= tol.prob_floor:
        raise ZeroConditioningEvent(f"phi(C) = {p_c:.3g} is below the probability floor")
    if p_cperp <= tol.prob_floor:
        raise ZeroConditioningEvent(f"phi(C-perp) = {p_cperp:.3g} is below the probability floor")

    ab = meet(a, b, tol)
    ab_c, a_c, b_c = _conditionals(phi, ab, a, b, c, p_c, tol)
    ab_cp, a_cp, b_cp = _conditionals(phi, ab, a, b, c_perp, p_cperp, tol)

    residual_c = abs(ab_c - a_c * b_c)
    residual_cp = abs(ab_cp - a_cp * b_cp)
    margin_a = a_c - a_cp
    margin_b = b_c - b_cp

    valid = (
        residual_c <= tol.tol_screen
        and residual_cp <= tol.tol_screen
        and margin_a >= tol.eps_strict
        and margin_b >= tol.eps_strict
    )
    logger.debug(
        f"Certificate: residuals ({residual_c:.3g}, {residual_cp:.3g}), "
        f"margins ({margin_a:.3g}, {margin_b:.3g}), valid={valid}"
    )
    return CommonCauseCertificate(
        C=c,
        residual_screen_C=float(residual_c),
        residual_screen_Cperp=float(residual_cp),
        margin_A=float(margin_a),
        margin_B=float(margin_b),
        commutation_residuals=(comm_a, comm_b),
        valid=bool(valid),
        tolerances=tol,
    )


def canonical_cause_value(phi: State, a: Projection, b: Projection,
                          tol: Optional[ToleranceConfig] = None) -> float:
    """
    State value the canonical cause must take:
    (phi(A^B) - phi(A) phi(B)) / (1 - phi(A v B)).

    Raises:
        NotCorrelated: If the correlation is negative
        DenominatorVanishes: If phi(A v B) is numerically 1
    """
    tol = tol or default_tolerances()
    corr = correlation(phi, a, b, tol)
    if abs(corr) <= tol.prob_floor:
        return 0.0
    if corr < 0:
        raise NotCorrelated(f"Correlation {corr:.6g} is negative")
    denominator = 1.0 - expectation(phi, join(a, b, tol), tol)
    if denominator <= tol.prob_floor:
        raise DenominatorVanishes("phi(A v B) is 1; the canonical value is undefined")
    return corr / denominator


def _compression(phi: State, q: Projection) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues of Q rho Q on range(Q) and the matching vectors in the full space."""
    basis = q.range_basis()
    if basis.shape[1] == 0:
        raise ZeroProjection("Q is the zero projection")
    compressed = basis.conj().T @ phi.rho @ basis
    values, vectors = linalg.eigh((compressed + compressed.conj().T) / 2)
    return values, basis @ vectors


def _rank_intervals(values: np.ndarray) -> List[Tuple[int, float, float]]:
    m = len(values)
    ascending = np.concatenate(([0.0], np.cumsum(values)))
    descending = np.concatenate(([0.0], np.cumsum(values[::-1])))
    return [(k, float(ascending[k]), float(descending[k])) for k in range(m + 1)]


def _pick_rank(intervals: Sequence[Tuple[int, float, float]], target: float) -> Optional[int]:
    for k, low, high in intervals:
        if low - _VALUE_SLACK <= target <= high + _VALUE_SLACK:
            return k
    return None


def subprojection_feasibility(phi: State, q: Projection, target: Optional[float] = None,
                              tol: Optional[ToleranceConfig] = None) -> FeasibilityReport:
    """
    Report the achievable values phi(P) over subprojections P <= Q of each rank.

    For rank k the values fill the interval between the sum of the k smallest
    and the sum of the k largest eigenvalues of the compression of rho to range(Q).

    Args:
        phi: State (expected faithful)
        q: Nonzero projection
        target: Value to test for feasibility
        tol: Tolerances

    Raises:
        ZeroProjection: If Q is zero
    """
    if not phi.faithful:
        logger.warning("Feasibility requested for a non-faithful state; intervals may be degenerate")
    values, _ = _compression(phi, q)
    intervals = _rank_intervals(values)
    total = float(np.sum(values))
    if target is None:
        return FeasibilityReport(tuple(intervals), feasible=True, total=total)
    chosen = _pick_rank(intervals, target)
    return FeasibilityReport(
        tuple(intervals),
        feasible=chosen is not None,
        chosen_rank=chosen,
        target=float(target),
        total=total,
    )


def _rotate_to_value(values: np.ndarray, rank: int, target: float) -> np.ndarray:
    """
    Coefficients (in the eigenbasis) of ``rank`` orthonormal vectors whose
    compressed value is ``target``.

    Starts from the smallest eigenvectors and rotates included vector j toward
    excluded vector m-1-j, one pair at a time.
    """
    m = len(values)
    coeffs = np.zeros((m, rank))
    coeffs[np.arange(rank), np.arange(rank)] = 1.0

    def current_value(c: np.ndarray) -> float:
        return float(np.sum(values[:, None] * np.abs(c) ** 2))

    for j in range(min(rank, m - rank)):
        current = current_value(coeffs)
        if current >= target - _VALUE_SLACK:
            break
        i_in, i_out = j, m - 1 - j
        swapped = coeffs.copy()
        swapped[:, j] = 0.0
        swapped[i_out, j] = 1.0
        if current_value(swapped) <= target + _VALUE_SLACK:
            coeffs = swapped
            continue

        def excess(theta: float) -> float:
            trial = coeffs.copy()
            trial[:, j] = 0.0
            trial[i_in, j] = np.cos(theta)
            trial[i_out, j] = np.sin(theta)
            return current_value(trial) - target

        theta = bisect(excess, 0.0, np.pi / 2, xtol=1e-15, maxiter=200)
        coeffs[:, j] = 0.0
        coeffs[i_in, j] = np.cos(theta)
        coeffs[i_out, j] = np.sin(theta)
        break
    return coeffs


def construct_subprojection(phi: State, q: Projection, r: float,
                            tol: Optional[ToleranceConfig] = None) -> Projection:
    """
    Build P <= Q with phi(P) = r.

    Raises:
        Infeasible: If no rank admits the value r (the report is attached)
        SoundnessViolation: If the rotated projection misses r by more than 1e-10
    """
    tol = tol or default_tolerances()
    report = subprojection_feasibility(phi, q, r, tol)
    if not report.feasible:
        raise Infeasible(
            f"No subprojection of the rank-{q.rank} projection takes the value {r:.12g}",
            report,
        )
    rank = report.chosen_rank
    if rank == 0:
        return Projection.zero(q.space)
    values, vectors = _compression(phi, q)
    if rank == len(values):
        return q

    coeffs = _rotate_to_value(values, rank, r)
    p = Projection.from_basis(q.space, vectors @ coeffs, q.op.support)
    achieved = expectation(phi, p, tol)
    if abs(achieved - r) > _TARGET_TOLERANCE:
        raise SoundnessViolation(f"Subprojection value {achieved:.15g} misses target {r:.15g}")
    logger.debug(f"Subprojection of rank {rank} with value {achieved:.12g}")
    return p


def _localize(phi: State, projections: Sequence[Projection], sites: Optional[Sequence[int]],
              tol: ToleranceConfig) -> Tuple[State, List[Projection]]:
    """Reduce phi and the projections to the algebra of ``sites``."""
    if sites is None:
        return phi, list(projections)
    sites = phi.space.check_sites(sites)
    local_phi = phi.reduced(sites)
    local = []
    for p in projections:
        matrix = restrict_to_sites(p, sites)
        if np.max(np.abs(embed_operator(matrix, sites, phi.space) - p.matrix)) > tol.support_tol:
            raise DimensionMismatch(f"Projection is not supported on sites {list(sites)}")
        local.append(Projection(Operator(local_phi.space, matrix)))
    return local_phi, local


def _lift(local: Projection, phi: State, sites: Optional[Sequence[int]]) -> Projection:
    if sites is None:
        return local
    return Projection(Operator.local(phi.space, local.matrix, sites))


def construct_canonical_cause(phi: State, a: Projection, b: Projection,
                              sites: Optional[Sequence[int]] = None,
                              tol: Optional[ToleranceConfig] = None) -> CommonCauseCertificate:
    """
    Build the canonical common cause C < A ^ B with phi(C) = canonical_cause_value.

    Args:
        phi: Faithful state
        a: First projection
        b: Second projection, commuting with A
        sites: Factor indices of the algebra C must belong to (A and B must be supported there)
        tol: Tolerances

    Returns:
        A valid CommonCauseCertificate

    Raises:
        NotCorrelated: If the correlation is not positive
        DegenerateNesting: If the canonical value equals phi(A ^ B)
        Infeasible: If no subprojection of A ^ B in the algebra takes the value
        SoundnessViolation: If the constructed cause fails verification
    """
    tol = tol or default_tolerances()
    corr = correlation(phi, a, b, tol)
    if corr <= tol.prob_floor:
        raise NotCorrelated(f"Correlation {corr:.6g} is not positive")

    r = canonical_cause_value(phi, a, b, tol)
    ab = meet(a, b, tol)
    p_ab = expectation(phi, ab, tol)
    if r >= p_ab - tol.prob_floor:
        raise DegenerateNesting(
            f"Canonical value {r:.12g} equals phi(A ^ B) = {p_ab:.12g}"
        )

    local_phi, (local_a, local_b) = _localize(phi, (a, b), sites, tol)
    local_ab = meet(local_a, local_b, tol)
    try:
        local_c = construct_subprojection(local_phi, local_ab, r, tol)
    except Infeasible:
        logger.warning(f"Canonical value {r:.12g} is infeasible under A ^ B in this algebra")
        raise

    certificate = verify_common_cause(phi, a, b, _lift(local_c, phi, sites), tol)
    if not certificate.valid:
        raise SoundnessViolation(
            "Canonical cause failed verification: residuals "
            f"({certificate.residual_screen_C:.3g}, {certificate.residual_screen_Cperp:.3g}), "
            f"margins ({certificate.margin_A:.3g}, {certificate.margin_B:.3g})"
        )
    return certificate


def merit(certificate: CommonCauseCertificate) -> float:
    """Sum of squared screening residuals plus squared hinges on the strict margins."""
    eps = certificate.tolerances.eps_strict
    return float(
        certificate.residual_screen_C ** 2
        + certificate.residual_screen_Cperp ** 2
        + max(0.0, eps - certificate.margin_A) ** 2
        + max(0.0, eps - certificate.margin_B) ** 2
    )


@dataclass
class _Cell:
    """One joint eigenspace of A and B (intersected with the constraint) and its compression."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class _Totals:
    p_ab: float
    p_a: float
    p_b: float


def _cell_residuals(x: np.ndarray, totals: _Totals, floor: float, aim: float) -> np.ndarray:
    """Residual vector of a cause whose cell values are x = (A^B, A^B', A'^B, A'^B')."""
    p_c = float(np.sum(x))
    p_cp = 1.0 - p_c
    if p_c <= floor or p_cp <= floor:
        return np.full(4, np.sqrt(_PENALTY_MERIT / 4))
    ab_c, a_c, b_c = x[0], x[0] + x[1], x[0] + x[2]
    ab_cp, a_cp, b_cp = totals.p_ab - ab_c, totals.p_a - a_c, totals.p_b - b_c
    return np.array([
        ab_c / p_c - (a_c / p_c) * (b_c / p_c),
        ab_cp / p_cp - (a_cp / p_cp) * (b_cp / p_cp),
        max(0.0, aim - (a_c / p_c - a_cp / p_cp)),
        max(0.0, aim - (b_c / p_c - b_cp / p_cp)),
    ])


def _solve_cell_values(ranks: Tuple[int, ...], cells: Sequence[_Cell], totals: _Totals,
                       tol: ToleranceConfig, budget: SearchDefaults, seed: int,
                       tuple_index: int) -> np.ndarray:
    """Multi-start bounded least squares for the cell values of one rank tuple."""
    bounds = [_rank_intervals(cell.values)[k][1:] for cell, k in zip(cells, ranks)]
    low = np.array([lo for lo, _ in bounds])
    high = np.array([hi for _, hi in bounds])
    free = np.flatnonzero(high - low > _VALUE_SLACK)

    def full(y: np.ndarray) -> np.ndarray:
        x = low.copy()
        x[free] = y
        return x

    def fun(y: np.ndarray) -> np.ndarray:
        return _cell_residuals(full(y), totals, tol.prob_floor, _MARGIN_AIM)

    if free.size == 0:
        return low

    def run(start: int) -> Tuple[float, int, np.ndarray]:
        if start == 0:
            y0 = (low[free] + high[free]) / 2
        else:
            rng = np.random.default_rng([seed, tuple_index, start])
            y0 = rng.uniform(low[free], high[free])
        solution = least_squares(
            fun, y0, bounds=(low[free], high[free]), method="trf",
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=budget.max_iterations,
        )
        x = full(solution.x)
        score = float(np.sum(_cell_residuals(x, totals, tol.prob_floor, tol.eps_strict) ** 2))
        return score, start, x

    outcomes = parallel_map(run, range(max(1, budget.restarts)))
    return min(outcomes, key=lambda item: (item[0], item[1]))[2]


def _commutant_cells(phi: State, a: Projection, b: Projection, below: Optional[Projection],
                     tol: ToleranceConfig) -> List[_Cell]:
    a_perp, b_perp = a.complement(), b.complement()
    cells = []
    for first, second in ((a, b), (a, b_perp), (a_perp, b), (a_perp, b_perp)):
        cell = meet(first, second, tol)
        if below is not None:
            cell = meet(cell, below, tol)
        if cell.rank == 0:
            cells.append(_Cell(np.zeros(0), np.zeros((phi.space.total_dim, 0), dtype=complex)))
        else:
            values, vectors = _compression(phi, cell)
            cells.append(_Cell(values, vectors))
    return cells


def _rank_tuples(cells: Sequence[_Cell], max_rank: Optional[int]) -> List[Tuple[int, ...]]:
    tuples = [
        ks for ks in product(*(range(cell.dim + 1) for cell in cells))
        if 0 < sum(ks) and (max_rank is None or sum(ks) <= max_rank)
    ]
    return sorted(tuples, key=lambda ks: (sum(ks), ks))


def _candidate_key(result: SearchResult, target: Optional[float], phi: State) -> Tuple:
    closeness = 0.0
    if target is not None:
        closeness = abs(expectation(phi, result.certificate.C) - target)
    if result.valid:
        return (0, result.rank, result.merit, closeness)
    return (1, result.merit, result.rank, closeness)


def search_common_cause(phi: State, a: Projection, b: Projection,
                        constraint: Optional[CauseConstraint] = None,
                        budget: Optional[SearchDefaults] = None,
                        initial: Optional[Projection] = None,
                        tol: Optional[ToleranceConfig] = None) -> SearchResult:
    """
    Numerically search for a common cause inside a constrained subalgebra.

    Candidates are direct sums of subprojections of the four joint eigenspaces
    of A and B (so they commute with both). Ranks are tried in ascending total
    order; for each rank tuple the cell values are fitted by multi-start
    bounded least squares and realized by subspace rotations. The search stops
    after the first rank level that yields a valid certificate.

    Args:
        phi: State
        a: First projection
        b: Second projection, commuting with A and positively correlated with it
        constraint: Algebra the cause must live in
        budget: Restart, iteration and enumeration budgets
        initial: Candidate to try first; returned at once if valid
        tol: Tolerances

    Returns:
        SearchResult with the best certificate found (valid or not)

    Raises:
        NonCommuting: If A and B do not commute
        NotCorrelated: If A and B are not positively correlated
        BudgetExhausted: If the budget ended before a valid cause was found
    """
    tol = tol or default_tolerances()
    budget = budget or get_config().search
    constraint = constraint or CauseConstraint()

    corr = correlation(phi, a, b, tol)
    if corr <= tol.prob_floor:
        raise NotCorrelated(f"Correlation {corr:.6g} is not positive")
    try:
        target = canonical_cause_value(phi, a, b, tol)
    except DenominatorVanishes:
        target = None

    if initial is not None:
        certificate = verify_common_cause(phi, a, b, initial, tol)
        if certificate.valid:
            return SearchResult(certificate, merit(certificate), initial.rank, 1, True)

    sites = constraint.sites
    extra = [constraint.below] if constraint.below is not None else []
    local_phi, local = _localize(phi, [a, b, *extra], sites, tol)
    local_a, local_b = local[0], local[1]
    local_below = local[2] if extra else None

    def finish(local_c: Projection, rank: int) -> Optional[SearchResult]:
        try:
            certificate = verify_common_cause(phi, a, b, _lift(local_c, phi, sites), tol)
        except ZeroConditioningEvent:
            return None
        return SearchResult(certificate, merit(certificate), rank, 0, False)

    if constraint.commutative:
        results, evaluated, truncated = _search_diagonal(
            local_phi, local_a, local_b, local_below, constraint.max_rank, budget, tol, finish
        )
    else:
        results, evaluated, truncated = _search_rotations(
            local_phi, local_a, local_b, local_below, constraint.max_rank, budget, tol, finish
        )

    if not results:
        raise BudgetExhausted("No candidate cause with both conditionals defined was found", None)

    best = min(results, key=lambda res: _candidate_key(res, target, phi))
    best = replace(best, evaluated=evaluated, complete=not truncated)
    if truncated and not best.valid:
        logger.warning(f"Search budget exhausted after {evaluated} candidates; best merit {best.merit:.3g}")
        raise BudgetExhausted(f"No valid cause within {evaluated} candidates", best)
    logger.info(
        f"Search evaluated {evaluated} candidates: best rank {best.rank}, "
        f"merit {best.merit:.3g}, valid={best.valid}"
    )
    return best


def _search_rotations(phi: State, a: Projection, b: Projection, below: Optional[Projection],
                      max_rank: Optional[int], budget: SearchDefaults, tol: ToleranceConfig,
                      finish) -> Tuple[List[SearchResult], int, bool]:
    ab, a_val, b_val = meet(a, b, tol), expectation(phi, a, tol), expectation(phi, b, tol)
    totals = _Totals(expectation(phi, ab, tol), a_val, b_val)
    cells = _commutant_cells(phi, a, b, below, tol)
    tuples = _rank_tuples(cells, max_rank)
    truncated = len(tuples) > budget.max_rank_tuples
    tuples = tuples[: budget.max_rank_tuples]
    logger.debug(f"Cell dimensions {[cell.dim for cell in cells]}, {len(tuples)} rank tuples")

    results: List[SearchResult] = []
    evaluated = 0
    valid_level: Optional[int] = None
    for index, ranks in enumerate(tuples):
        level = sum(ranks)
        if valid_level is not None and level > valid_level:
            truncated = False
            break
        evaluated += 1
        x = _solve_cell_values(ranks, cells, totals, tol, budget, budget.seed, index)
        columns = [
            cell.vectors @ _rotate_to_value(cell.values, k, value)
            for cell, k, value in zip(cells, ranks, x)
            if k > 0
        ]
        local_c = Projection.from_basis(phi.space, np.hstack(columns))
        result = finish(local_c, level)
        if result is None:
            continue
        results.append(result)
        if result.valid and valid_level is None:
            valid_level = level
    return results, evaluated, truncated


def _search_diagonal(phi: State, a: Projection, b: Projection, below: Optional[Projection],
                     max_rank: Optional[int], budget: SearchDefaults, tol: ToleranceConfig,
                     finish) -> Tuple[List[SearchResult], int, bool]:
    n = phi.space.total_dim
    top = n if max_rank is None else min(n, max_rank)
    results: List[SearchResult] = []
    evaluated = 0
    truncated = False
    for size in range(1, top + 1):
        for subset in combinations(range(n), size):
            if evaluated >= budget.max_enumeration:
                truncated = True
                break
            evaluated += 1
            diag = np.zeros(n)
            diag[list(subset)] = 1.0
            local_c = Projection.from_matrix(phi.space, np.diag(diag).astype(complex))
            if not (commutes(local_c, a, tol) and commutes(local_c, b, tol)):
                continue
            if below is not None and not is_below(local_c, below, tol):
                continue
            result = finish(local_c, size)
            if result is not None:
                results.append(result)
        if truncated or any(res.valid for res in results):
            break
    return results, evaluated, truncated
