"""
Bell - CHSH correlations between two commuting tensor-factor algebras.

The supremum of the CHSH expression is approached by a seesaw: with one
side's observables fixed, the optimal observables on the other side are
sign operators of reduced Hermitian matrices.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from .config_manager import SearchDefaults, ToleranceConfig, default_tolerances, get_config
from .errors import (
    BudgetExhausted,
    ConfigError,
    InvalidOperator,
    NotFound,
    ProductState,
    SupportOverlap,
)
from .qprob import (
    Operator,
    Projection,
    State,
    TensorSpace,
    expectation,
    meet,
    partial_trace,
    reduction_distance,
)
from .workers import parallel_map

logger = logging.getLogger(__name__)

TSIRELSON_BOUND = float(np.sqrt(2.0))

# Seesaw stops once a full X/Y sweep gains less than this.
_CONVERGENCE_GAIN = 1e-10

# Reduction distance at or below which a state counts as a product state.
_PRODUCT_THRESHOLD = 1e-9


@dataclass(frozen=True, eq=False)
class BellConfiguration:
    """
    CHSH observables as local matrices: X1, X2 on ``sites_1``; Y1, Y2 on ``sites_2``.
    """

    sites_1: Tuple[int, ...]
    sites_2: Tuple[int, ...]
    X1: np.ndarray
    X2: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    value: float = 0.0

    def __post_init__(self):
        if set(self.sites_1) & set(self.sites_2):
            raise SupportOverlap(f"Factor sets {self.sites_1} and {self.sites_2} overlap")
        for name in ("X1", "X2", "Y1", "Y2"):
            matrix = np.asarray(getattr(self, name), dtype=complex)
            if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > 1e-9:
                raise InvalidOperator(f"{name} is not self-adjoint")
            if np.linalg.norm(matrix, 2) > 1.0 + 1e-9:
                raise InvalidOperator(f"{name} is not a contraction")
            object.__setattr__(self, name, matrix)

    def operators(self, space: TensorSpace) -> Tuple[Operator, Operator, Operator, Operator]:
        """The four observables embedded in ``space``."""
        return (
            Operator.local(space, self.X1, self.sites_1),
            Operator.local(space, self.X2, self.sites_1),
            Operator.local(space, self.Y1, self.sites_2),
            Operator.local(space, self.Y2, self.sites_2),
        )


@dataclass(frozen=True, eq=False)
class ReducedCorrelation:
    """rho_12 - rho_1 (x) rho_2 and its operator Schmidt decomposition."""

    delta: np.ndarray
    singular_values: np.ndarray
    factors_1: List[np.ndarray]
    factors_2: List[np.ndarray]
    distance: float


@dataclass(frozen=True)
class BellVerdict:
    """
    Classification plus seesaw metadata.

    ``history`` holds the CHSH value of the winning start after each sweep,
    beginning with its initial value.
    """

    correlated: bool
    value: float
    starts: int
    converged_starts: int
    iterations: int = 0
    history: Tuple[float, ...] = ()
    configuration: Optional[BellConfiguration] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SurveyRow:
    seed: int
    index: int
    value: float
    correlated: bool


@dataclass(frozen=True)
class SurveyResult:
    fraction: float
    rows: Tuple[SurveyRow, ...] = field(default_factory=tuple)

    @property
    def values(self) -> List[float]:
        return [row.value for row in self.rows]


@dataclass(frozen=True)
class _SeesawOutcome:
    value: float
    index: int
    converged: bool
    iterations: int
    observables: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    history: Tuple[float, ...] = ()


def _check_disjoint(phi: State, sites_1: Sequence[int], sites_2: Sequence[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    s1 = phi.space.check_sites(sites_1)
    s2 = phi.space.check_sites(sites_2)
    if set(s1) & set(s2):
        raise SupportOverlap(f"Factor sets {list(s1)} and {list(s2)} overlap")
    if not s1 or not s2:
        raise SupportOverlap("Both factor sets must be nonempty")
    return s1, s2


def chsh_value(phi: State, config: BellConfiguration) -> float:
    """1/2 phi(X1 (Y1 + Y2) + X2 (Y1 - Y2))."""
    _check_disjoint(phi, config.sites_1, config.sites_2)
    x1, x2, y1, y2 = config.operators(phi.space)
    total = x1 @ (y1 + y2) + x2 @ (y1 - y2)
    return float(np.real(expectation(phi, total))) / 2


def _sign(h: np.ndarray) -> np.ndarray:
    """Spectral sign with sign(0) = +1."""
    values, vectors = linalg.eigh((h + h.conj().T) / 2)
    signs = np.where(values >= 0, 1.0, -1.0)
    return (vectors * signs) @ vectors.conj().T


def _hermitian_part(m: np.ndarray) -> np.ndarray:
    h = (m + m.conj().T) / 2
    if np.linalg.norm(h) < 1e-12:
        h = 1j * (m - m.conj().T) / 2
    return h


def reduced_correlation(phi: State, sites_1: Sequence[int], sites_2: Sequence[int]) -> ReducedCorrelation:
    """
    Correlation operator of the two factor sets and its operator Schmidt factors.

    Factors are returned in decreasing singular-value order, as matrices on the
    respective factor sets.
    """
    s1, s2 = _check_disjoint(phi, sites_1, sites_2)
    dims = phi.space.factor_dims
    d1, d2 = phi.space.dim_of(s1), phi.space.dim_of(s2)
    rho_12 = partial_trace(phi.rho, list(s1) + list(s2), dims)
    rho_1 = partial_trace(phi.rho, s1, dims)
    rho_2 = partial_trace(phi.rho, s2, dims)
    delta = rho_12 - np.kron(rho_1, rho_2)

    realigned = delta.reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)
    u, s, vh = np.linalg.svd(realigned)
    keep = s > 1e-12
    factors_1 = [u[:, k].reshape(d1, d1) for k in np.flatnonzero(keep)]
    factors_2 = [vh[k, :].reshape(d2, d2) for k in np.flatnonzero(keep)]
    return ReducedCorrelation(
        delta=delta,
        singular_values=s[keep],
        factors_1=factors_1,
        factors_2=factors_2,
        distance=float(np.linalg.norm(delta, "nuc")),
    )


class _Seesaw:
    """Alternating CHSH maximization on the reduced state of two factor sets."""

    def __init__(self, rho_12: np.ndarray, d1: int, d2: int):
        self.tensor = rho_12.reshape(d1, d2, d1, d2)
        self.d1 = d1
        self.d2 = d2

    def reduce_to_first(self, y: np.ndarray) -> np.ndarray:
        """M with phi(X (x) Y) = tr(M X)."""
        return np.einsum("ijkl,lj->ik", self.tensor, y)

    def reduce_to_second(self, x: np.ndarray) -> np.ndarray:
        """N with phi(X (x) Y) = tr(N Y)."""
        return np.einsum("ijkl,ki->jl", self.tensor, x)

    def value(self, x1, x2, y1, y2) -> float:
        m_plus = self.reduce_to_first(y1 + y2)
        m_minus = self.reduce_to_first(y1 - y2)
        return float(np.real(np.trace(m_plus @ x1) + np.trace(m_minus @ x2))) / 2

    def run(self, y1: np.ndarray, y2: np.ndarray, index: int, max_iterations: int) -> _SeesawOutcome:
        x1 = _sign(self.reduce_to_first(y1 + y2))
        x2 = _sign(self.reduce_to_first(y1 - y2))
        value = self.value(x1, x2, y1, y2)
        history = [value]
        converged = False
        iterations = 0
        for iterations in range(1, max_iterations + 1):
            n1 = self.reduce_to_second(x1)
            n2 = self.reduce_to_second(x2)
            y1, y2 = _sign(n1 + n2), _sign(n1 - n2)
            x1 = _sign(self.reduce_to_first(y1 + y2))
            x2 = _sign(self.reduce_to_first(y1 - y2))
            new_value = self.value(x1, x2, y1, y2)
            history.append(new_value)
            if new_value < value - 1e-12:
                logger.warning(f"Seesaw start {index} decreased from {value:.15g} to {new_value:.15g}")
            gain = new_value - value
            value = max(value, new_value)
            if gain < _CONVERGENCE_GAIN:
                converged = True
                break
        return _SeesawOutcome(value, index, converged, iterations, (x1, x2, y1, y2), tuple(history))


def _balanced_observable(d: int, rng: np.random.Generator) -> np.ndarray:
    signs = np.where(np.arange(d) < (d + 1) // 2, 1.0, -1.0)
    if d == 1:
        return np.ones((1, 1), dtype=complex)
    u = unitary_group.rvs(d, random_state=rng)
    return (u * signs) @ u.conj().T


def _starting_points(phi: State, s1, s2, d2: int, restarts: int, seed: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    identity = np.eye(d2, dtype=complex)
    starts = [(identity, identity)]
    if restarts > 1:
        factors = reduced_correlation(phi, s1, s2).factors_2
        if factors:
            y1 = _sign(_hermitian_part(factors[0]))
            y2 = _sign(_hermitian_part(factors[1])) if len(factors) > 1 else -y1
            starts.append((y1, y2))
    rng = np.random.default_rng(seed)
    while len(starts) < restarts:
        starts.append((_balanced_observable(d2, rng), _balanced_observable(d2, rng)))
    return starts[:max(1, restarts)]


def _seesaw_outcomes(phi: State, sites_1, sites_2, budget: SearchDefaults,
                     seed: Optional[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...], List[_SeesawOutcome]]:
    s1, s2 = _check_disjoint(phi, sites_1, sites_2)
    dims = phi.space.factor_dims
    d1, d2 = phi.space.dim_of(s1), phi.space.dim_of(s2)
    rho_12 = partial_trace(phi.rho, list(s1) + list(s2), dims)
    seesaw = _Seesaw(rho_12, d1, d2)
    starts = _starting_points(phi, s1, s2, d2, budget.restarts, budget.seed if seed is None else seed)
    outcomes = parallel_map(
        lambda item: seesaw.run(item[1][0], item[1][1], item[0], budget.max_iterations),
        list(enumerate(starts)),
    )
    outcomes.sort(key=lambda o: (-o.value, o.index))
    best = outcomes[0]
    if best.value > TSIRELSON_BOUND + 1e-9:
        logger.warning(f"Seesaw value {best.value:.15g} exceeds the Tsirelson bound")
    logger.debug(
        f"Seesaw: best {best.value:.12g} from start {best.index} after {best.iterations} iterations"
    )
    return s1, s2, outcomes


def _configuration(s1, s2, outcome: _SeesawOutcome) -> BellConfiguration:
    x1, x2, y1, y2 = outcome.observables
    return BellConfiguration(s1, s2, x1, x2, y1, y2, value=outcome.value)


def bell_correlation(phi: State, sites_1: Sequence[int], sites_2: Sequence[int],
                     budget: Optional[SearchDefaults] = None,
                     seed: Optional[int] = None) -> Tuple[float, BellConfiguration]:
    """
    Lower bound on the Bell correlation of phi across two factor sets.

    Args:
        phi: State
        sites_1: First factor set
        sites_2: Second factor set, disjoint from the first
        budget: Restarts and iterations per start
        seed: Seed for the random starts (defaults to the budget's seed)

    Returns:
        (value, achieving configuration)

    Raises:
        SupportOverlap: If the factor sets overlap
        BudgetExhausted: If no start converged; ``best`` holds (value, configuration)
    """
    budget = budget or get_config().search
    s1, s2, outcomes = _seesaw_outcomes(phi, sites_1, sites_2, budget, seed)
    best = outcomes[0]
    configuration = _configuration(s1, s2, best)
    if not any(o.converged for o in outcomes):
        logger.warning(f"No seesaw start converged within {budget.max_iterations} iterations")
        raise BudgetExhausted("Seesaw did not converge", (best.value, configuration))
    return best.value, configuration


def bell_verdict(phi: State, sites_1: Sequence[int], sites_2: Sequence[int],
                 budget: Optional[SearchDefaults] = None, seed: Optional[int] = None,
                 tol: Optional[ToleranceConfig] = None) -> BellVerdict:
    """Bell-correlation classification with the seesaw's confidence metadata."""
    tol = tol or default_tolerances()
    budget = budget or get_config().search
    s1, s2, outcomes = _seesaw_outcomes(phi, sites_1, sites_2, budget, seed)
    best = outcomes[0]
    return BellVerdict(
        correlated=best.value > 1.0 + tol.bell_margin,
        value=best.value,
        starts=len(outcomes),
        converged_starts=sum(1 for o in outcomes if o.converged),
        iterations=best.iterations,
        history=best.history,
        configuration=_configuration(s1, s2, best),
    )


def is_bell_correlated(phi: State, sites_1: Sequence[int], sites_2: Sequence[int],
                       budget: Optional[SearchDefaults] = None,
                       tol: Optional[ToleranceConfig] = None) -> bool:
    """True iff the seesaw lower bound exceeds 1 + BELL_MARGIN."""
    return bell_verdict(phi, sites_1, sites_2, budget, tol=tol).correlated


def orient_pair(phi: State, a: Projection, b: Projection,
                tol: Optional[ToleranceConfig] = None) -> Tuple[Projection, Projection]:
    """Replace B by I - B when A and B are negatively correlated."""
    tol = tol or default_tolerances()
    covariance = expectation(phi, meet(a, b, tol), tol) - expectation(phi, a, tol) * expectation(phi, b, tol)
    if covariance < 0:
        return a, b.complement()
    return a, b


def _spectral_projections(h: np.ndarray) -> List[np.ndarray]:
    values, vectors = linalg.eigh(h)
    projections = [np.outer(vectors[:, i], vectors[:, i].conj()) for i in range(len(values))]
    positive = vectors[:, values > 0]
    if 0 < positive.shape[1] < len(values):
        projections.append(positive @ positive.conj().T)
    return projections


def _random_rank_one(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def find_correlated_projections(phi: State, sites_1: Sequence[int], sites_2: Sequence[int],
                                budget: Optional[SearchDefaults] = None, seed: Optional[int] = None,
                                tol: Optional[ToleranceConfig] = None) -> Tuple[Projection, Projection]:
    """
    Find A on ``sites_1`` and B on ``sites_2`` with phi(A ^ B) > phi(A) phi(B).

    Candidates are spectral projections of the operator Schmidt factors of
    rho_12 - rho_1 (x) rho_2 plus random rank-one pairs; the pair with the
    largest absolute covariance wins and B is complemented when the
    covariance is negative.

    Raises:
        SupportOverlap: If the factor sets overlap
        ProductState: If phi factorizes across the two sets
        NotFound: If every candidate pair is uncorrelated
    """
    tol = tol or default_tolerances()
    budget = budget or get_config().search
    s1, s2 = _check_disjoint(phi, sites_1, sites_2)
    reduction = reduced_correlation(phi, s1, s2)
    if reduction.distance <= _PRODUCT_THRESHOLD:
        raise ProductState(
            f"State is a product across {list(s1)} and {list(s2)} (distance {reduction.distance:.3g})"
        )

    d1, d2 = phi.space.dim_of(s1), phi.space.dim_of(s2)
    delta = reduction.delta.reshape(d1, d2, d1, d2)

    def covariance(p: np.ndarray, q: np.ndarray) -> float:
        # Covariance equals the pairing of delta with P (x) Q.
        return float(np.real(np.einsum("ijkl,ki,lj->", delta, p, q)))

    candidates: List[Tuple[np.ndarray, np.ndarray]] = []
    for f1, f2 in zip(reduction.factors_1, reduction.factors_2):
        for p in _spectral_projections(_hermitian_part(f1)):
            for q in _spectral_projections(_hermitian_part(f2)):
                candidates.append((p, q))
    rng = np.random.default_rng(budget.seed if seed is None else seed)
    for _ in range(budget.restarts * 4):
        candidates.append((_random_rank_one(d1, rng), _random_rank_one(d2, rng)))

    scored = [(abs(covariance(p, q)), -index, covariance(p, q), p, q) for index, (p, q) in enumerate(candidates)]
    best_abs, _, best_cov, p, q = max(scored, key=lambda item: (item[0], item[1]))
    if best_abs <= tol.prob_floor:
        raise NotFound(f"No correlated pair among {len(candidates)} candidates", best_abs)

    a = Projection.local(phi.space, p, s1)
    b = Projection.local(phi.space, q, s2)
    if best_cov < 0:
        b = b.complement()
    logger.debug(f"Correlated pair found with covariance {abs(best_cov):.6g}")
    return a, b


def _haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def bell_survey(space: TensorSpace, sites_1: Sequence[int], sites_2: Sequence[int],
                n_samples: int, seed: int, separable: bool = False,
                budget: Optional[SearchDefaults] = None,
                tol: Optional[ToleranceConfig] = None) -> SurveyResult:
    """
    Fraction of Haar-random pure states that are Bell correlated.

    Args:
        space: Tensor space
        sites_1: First factor set
        sites_2: Second factor set
        n_samples: Number of sampled states
        seed: Survey seed; sample i uses the i-th spawned child seed
        separable: Sample product vectors (one Haar vector per factor) instead
        budget: Seesaw budget per sample
        tol: Tolerances

    Raises:
        ConfigError: If n_samples is below 1
    """
    if n_samples < 1:
        raise ConfigError(f"n_samples must be at least 1, got {n_samples}")
    children = np.random.SeedSequence(seed).spawn(n_samples)

    def sample(index: int) -> SurveyRow:
        rng = np.random.default_rng(children[index])
        if separable:
            vector = np.array([1.0 + 0j])
            for d in space.factor_dims:
                vector = np.kron(vector, _haar_vector(d, rng))
        else:
            vector = _haar_vector(space.total_dim, rng)
        verdict = bell_verdict(State.pure(space, vector), sites_1, sites_2, budget, tol=tol)
        return SurveyRow(seed, index, verdict.value, verdict.correlated)

    rows = tuple(sample(i) for i in range(n_samples))
    fraction = sum(row.correlated for row in rows) / n_samples
    logger.info(f"Bell survey: {fraction:.4f} of {n_samples} states correlated")
    return SurveyResult(fraction, rows)
