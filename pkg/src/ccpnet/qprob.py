"""
Qprob - Finite-dimensional noncommutative probability.

Operators on tensor-product spaces, projections and their lattice
operations, density-operator states, expectations and conditional
probabilities.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from .config_manager import ToleranceConfig, default_tolerances
from .errors import (
    DimensionMismatch,
    InvalidOperator,
    InvalidProjection,
    InvalidState,
    NonCommuting,
    RankOutOfRange,
    ZeroConditioningEvent,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TensorSpace:
    """Finite-dimensional stand-in for the Hilbert space: a list of local factor dimensions."""

    factor_dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise InvalidOperator("TensorSpace needs at least one factor")
        if any(d < 1 for d in dims):
            raise InvalidOperator(f"Factor dimensions must be positive, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "TensorSpace":
        return cls((2,) * n)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    def check_sites(self, sites: Iterable[int]) -> Tuple[int, ...]:
        """Validate factor indices; keeps the given order."""
        ordered = tuple(int(s) for s in sites)
        if len(set(ordered)) != len(ordered):
            raise DimensionMismatch(f"Repeated factor index in {ordered}")
        for s in ordered:
            if not 0 <= s < self.n_factors:
                raise DimensionMismatch(f"Factor index {s} outside 0..{self.n_factors - 1}")
        return ordered

    def dim_of(self, sites: Iterable[int]) -> int:
        return int(np.prod([self.factor_dims[s] for s in self.check_sites(sites)], dtype=int))

    def subspace(self, sites: Iterable[int]) -> "TensorSpace":
        """The tensor space of the given factors, in the given order."""
        ordered = self.check_sites(sites)
        if not ordered:
            return TensorSpace((1,))
        return TensorSpace(tuple(self.factor_dims[s] for s in ordered))


# Tensor bookkeeping

def permute_factors(matrix: np.ndarray, order: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of a square matrix; new factor i is old factor order[i]."""
    n = len(dims)
    total = int(np.prod(dims))
    tensor = np.asarray(matrix).reshape(tuple(dims) * 2)
    axes = list(order) + [n + o for o in order]
    return tensor.transpose(axes).reshape(total, total)


def partial_trace(matrix: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Trace out every factor not in ``keep``; kept factors appear in the order given."""
    keep = list(keep)
    rest = [i for i in range(len(dims)) if i not in keep]
    d_keep = int(np.prod([dims[i] for i in keep], dtype=int))
    d_rest = int(np.prod([dims[i] for i in rest], dtype=int))
    permuted = permute_factors(matrix, keep + rest, dims)
    return np.trace(permuted.reshape(d_keep, d_rest, d_keep, d_rest), axis1=1, axis2=3)


def embed_operator(local: np.ndarray, sites: Sequence[int], space: TensorSpace) -> np.ndarray:
    """Tensor a matrix on ``sites`` (in that order) with the identity on all other factors."""
    sites = list(space.check_sites(sites))
    rest = [i for i in range(space.n_factors) if i not in sites]
    dims = space.factor_dims
    d_sites = int(np.prod([dims[i] for i in sites], dtype=int))
    d_rest = int(np.prod([dims[i] for i in rest], dtype=int))
    local = np.asarray(local, dtype=complex)
    if local.shape != (d_sites, d_sites):
        raise DimensionMismatch(
            f"Local matrix shape {local.shape} does not match sites {sites} (dim {d_sites})"
        )
    order = sites + rest
    big = np.kron(local, np.eye(d_rest, dtype=complex))
    ordered_dims = [dims[i] for i in order]
    return permute_factors(big, list(np.argsort(order)), ordered_dims)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix on a tensor space, with optional declared support."""

    space: TensorSpace
    entries: np.ndarray
    support: Optional[frozenset] = None

    def __post_init__(self):
        matrix = np.array(self.entries, dtype=complex)
        n = self.space.total_dim
        if matrix.shape != (n, n):
            raise InvalidOperator(f"Expected a {n}x{n} matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidOperator("Matrix has non-finite entries")
        matrix.setflags(write=False)
        object.__setattr__(self, "entries", matrix)
        if self.support is not None:
            object.__setattr__(self, "support", frozenset(int(s) for s in self.support))

    @classmethod
    def identity(cls, space: TensorSpace) -> "Operator":
        return cls(space, np.eye(space.total_dim, dtype=complex), frozenset())

    @classmethod
    def zero(cls, space: TensorSpace) -> "Operator":
        return cls(space, np.zeros((space.total_dim,) * 2, dtype=complex), frozenset())

    @classmethod
    def local(cls, space: TensorSpace, matrix: np.ndarray, sites: Sequence[int]) -> "Operator":
        """Operator acting as ``matrix`` on ``sites`` and as the identity elsewhere."""
        return cls(space, embed_operator(matrix, sites, space), frozenset(sites))

    def dag(self) -> "Operator":
        return Operator(self.space, self.entries.conj().T, self.support)

    def is_hermitian(self, tol: Optional[ToleranceConfig] = None) -> bool:
        tol = tol or default_tolerances()
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol.tol_herm)

    def norm(self) -> float:
        """Operator (spectral) norm."""
        return float(np.linalg.norm(self.entries, 2))

    def _joint_support(self, other: "Operator") -> Optional[frozenset]:
        if self.support is None or other.support is None:
            return None
        return self.support | other.support

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.entries @ other.entries, self._joint_support(other))

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.entries + other.entries, self._joint_support(other))

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.space, self.entries - other.entries, self._joint_support(other))

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.space, self.entries * scalar, self.support)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.entries, self.support)


def _check_projection(m: np.ndarray, tol: ToleranceConfig) -> None:
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol.tol_idem:
        raise InvalidProjection("Projection is not Hermitian")
    if np.max(np.abs(m @ m - m), initial=0.0) > tol.tol_idem:
        raise InvalidProjection("Projection is not idempotent")


def _checked_density(space: "TensorSpace", rho: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
    """Validated, Hermitian-symmetrized, read-only copy of a density matrix."""
    rho = np.array(rho, dtype=complex)
    n = space.total_dim
    if rho.shape != (n, n):
        raise InvalidState(f"Expected a {n}x{n} density matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > tol.tol_herm:
        raise InvalidState("Density matrix is not Hermitian")
    rho = (rho + rho.conj().T) / 2
    trace = float(np.trace(rho).real)
    if abs(trace - 1.0) > tol.tol_trace:
        raise InvalidState(f"Density matrix has trace {trace}, expected 1")
    smallest = float(linalg.eigh(rho, eigvals_only=True)[0])
    if smallest < -tol.tol_psd:
        raise InvalidState(f"Density matrix has negative eigenvalue {smallest}")
    rho.setflags(write=False)
    return rho


@dataclass(frozen=True, eq=False)
class Projection:
    """Hermitian idempotent operator: a yes/no event."""

    op: Operator

    def __post_init__(self):
        _check_projection(self.op.entries, default_tolerances())

    @classmethod
    def _trusted(cls, op: Operator) -> "Projection":
        # Skips validation for matrices built as V V^dagger from orthonormal columns.
        obj = object.__new__(cls)
        object.__setattr__(obj, "op", op)
        return obj

    @classmethod
    def from_matrix(cls, space: TensorSpace, matrix: np.ndarray, support=None,
                    tol: Optional[ToleranceConfig] = None) -> "Projection":
        """Validate against ``tol`` (the configured tolerances when omitted)."""
        if tol is None:
            return cls(Operator(space, matrix, support))
        op = Operator(space, matrix, support)
        _check_projection(op.entries, tol)
        return cls._trusted(op)

    @classmethod
    def from_basis(cls, space: TensorSpace, vectors: np.ndarray, support=None) -> "Projection":
        """Projection onto the span of orthonormal columns."""
        vectors = np.asarray(vectors, dtype=complex).reshape(space.total_dim, -1)
        matrix = vectors @ vectors.conj().T
        matrix = (matrix + matrix.conj().T) / 2
        return cls._trusted(Operator(space, matrix, support))

    @classmethod
    def zero(cls, space: TensorSpace) -> "Projection":
        return cls._trusted(Operator.zero(space))

    @classmethod
    def identity(cls, space: TensorSpace) -> "Projection":
        return cls._trusted(Operator.identity(space))

    @classmethod
    def local(cls, space: TensorSpace, matrix: np.ndarray, sites: Sequence[int]) -> "Projection":
        return cls(Operator.local(space, matrix, sites))

    @property
    def space(self) -> TensorSpace:
        return self.op.space

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.matrix).real)))

    def complement(self) -> "Projection":
        """Orthocomplement I - P."""
        identity = np.eye(self.space.total_dim, dtype=complex)
        return Projection._trusted(Operator(self.space, identity - self.matrix, self.op.support))

    def range_basis(self) -> np.ndarray:
        """Orthonormal basis of the range, as columns."""
        w, v = linalg.eigh(self.matrix)
        return v[:, w > 0.5]


@dataclass(frozen=True, eq=False)
class State:
    """Density operator: Hermitian, positive, unit trace."""

    space: TensorSpace
    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", _checked_density(self.space, self.rho, default_tolerances()))

    @classmethod
    def from_matrix(cls, space: TensorSpace, rho: np.ndarray,
                    tol: Optional[ToleranceConfig] = None) -> "State":
        """Validate against ``tol`` (the configured tolerances when omitted)."""
        if tol is None:
            return cls(space, rho)
        obj = object.__new__(cls)
        object.__setattr__(obj, "space", space)
        object.__setattr__(obj, "rho", _checked_density(space, rho, tol))
        return obj

    @classmethod
    def pure(cls, space: TensorSpace, vector: np.ndarray) -> "State":
        psi = np.asarray(vector, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(space, np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, space: TensorSpace) -> "State":
        n = space.total_dim
        return cls(space, np.eye(n, dtype=complex) / n)

    @classmethod
    def diagonal(cls, weights: Sequence[float], space: Optional[TensorSpace] = None) -> "State":
        """Classical state with the given atom weights."""
        weights = np.asarray(weights, dtype=float)
        space = space or TensorSpace((len(weights),))
        return cls(space, np.diag(weights).astype(complex))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues."""
        return linalg.eigh(self.rho, eigvals_only=True)

    @property
    def faithful(self) -> bool:
        """Full rank: smallest eigenvalue above FAITHFUL_EPS."""
        return bool(self.eigenvalues[0] > default_tolerances().faithful_eps)

    def reduced(self, sites: Sequence[int]) -> "State":
        """Marginal on the given factors (in the given order)."""
        sites = self.space.check_sites(sites)
        local = partial_trace(self.rho, sites, self.space.factor_dims)
        return State(self.space.subspace(sites), local)


OperatorLike = Union[Operator, Projection]


def _matrix_of(x: OperatorLike) -> Tuple[TensorSpace, np.ndarray]:
    if isinstance(x, Projection):
        return x.space, x.matrix
    return x.space, x.entries


def _check_same_space(a: TensorSpace, b: TensorSpace) -> None:
    if a.factor_dims != b.factor_dims:
        raise DimensionMismatch(f"Spaces differ: {a.factor_dims} vs {b.factor_dims}")


def restrict_to_sites(x: OperatorLike, sites: Sequence[int]) -> np.ndarray:
    """Local matrix L on ``sites`` with x = L (x) identity, assuming x is supported there."""
    space, matrix = _matrix_of(x)
    sites = space.check_sites(sites)
    rest_dim = space.total_dim // space.dim_of(sites) if sites else space.total_dim
    return partial_trace(matrix, sites, space.factor_dims) / rest_dim


def expectation(phi: State, x: OperatorLike, tol: Optional[ToleranceConfig] = None) -> Union[float, complex]:
    """
    Trace pairing phi(X) = tr(rho X).

    Returns:
        A float when X is Hermitian, otherwise a complex number

    Raises:
        DimensionMismatch: If X and phi live on different spaces
    """
    tol = tol or default_tolerances()
    space, matrix = _matrix_of(x)
    _check_same_space(phi.space, space)
    value = complex(np.sum(phi.rho * matrix.T))
    hermitian = isinstance(x, Projection) or np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= tol.tol_herm
    if hermitian:
        return float(value.real)
    return value


def commutator_norm(x: OperatorLike, y: OperatorLike) -> float:
    """Spectral norm of XY - YX."""
    space_x, mx = _matrix_of(x)
    space_y, my = _matrix_of(y)
    _check_same_space(space_x, space_y)
    return float(np.linalg.norm(mx @ my - my @ mx, 2))


def commutes(x: OperatorLike, y: OperatorLike, tol: Optional[ToleranceConfig] = None) -> bool:
    """True iff ||XY - YX|| <= TOL_COMM."""
    tol = tol or default_tolerances()
    return commutator_norm(x, y) <= tol.tol_comm


def meet(a: Projection, b: Projection, tol: Optional[ToleranceConfig] = None) -> Projection:
    """
    Projection onto range(A) intersected with range(B).

    Computed as the spectral projection of A + B for eigenvalues above 2 - TOL_MEET.
    """
    tol = tol or default_tolerances()
    _check_same_space(a.space, b.space)
    w, v = linalg.eigh(a.matrix + b.matrix)
    support = a.op._joint_support(b.op)
    return Projection.from_basis(a.space, v[:, w > 2.0 - tol.tol_meet], support)


def join(a: Projection, b: Projection, tol: Optional[ToleranceConfig] = None) -> Projection:
    """Projection onto span(range A, range B), as I - meet(I - A, I - B)."""
    return meet(a.complement(), b.complement(), tol).complement()


def orthocomplement(p: Projection) -> Projection:
    return p.complement()


def is_below(p: Projection, q: Projection, tol: Optional[ToleranceConfig] = None) -> bool:
    """P <= Q, tested as QP = P."""
    tol = tol or default_tolerances()
    _check_same_space(p.space, q.space)
    return bool(np.max(np.abs(q.matrix @ p.matrix - p.matrix), initial=0.0) <= tol.tol_idem)


def cond_prob(phi: State, x: Projection, y: Projection, tol: Optional[ToleranceConfig] = None) -> float:
    """
    Conditional probability phi(X|Y) = phi(X ^ Y) / phi(Y).

    Raises:
        NonCommuting: If X and Y do not commute
        ZeroConditioningEvent: If phi(Y) is below PROB_FLOOR
    """
    tol = tol or default_tolerances()
    if not commutes(x, y, tol):
        raise NonCommuting("Conditional probability is only defined for commuting events")
    p_y = expectation(phi, y, tol)
    if p_y <= tol.prob_floor:
        raise ZeroConditioningEvent(f"Conditioning event has probability {p_y:.3g}")
    return expectation(phi, meet(x, y, tol), tol) / p_y


def random_projection(space: TensorSpace, rank: int, seed: Optional[int] = None) -> Projection:
    """
    Projection onto a Haar-random subspace of the given rank.

    Raises:
        RankOutOfRange: If rank is outside [0, total_dim]
    """
    n = space.total_dim
    if not 0 <= rank <= n:
        raise RankOutOfRange(f"Rank {rank} outside [0, {n}]")
    if rank == 0:
        return Projection.zero(space)
    if rank == n:
        return Projection.identity(space)
    unitary = unitary_group.rvs(n, random_state=np.random.default_rng(seed))
    return Projection.from_basis(space, unitary[:, :rank])


def random_state(space: TensorSpace, seed: Optional[int] = None, faithful: bool = True) -> State:
    """
    Random density matrix, deterministic per seed.

    Faithful states are mixed with 5% of the maximally mixed state, which keeps
    every eigenvalue at or above 0.05 / total_dim. Non-faithful states have rank
    about half the dimension.
    """
    rng = np.random.default_rng(seed)
    n = space.total_dim
    columns = n if faithful else max(1, n // 2)
    g = rng.standard_normal((n, columns)) + 1j * rng.standard_normal((n, columns))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    if faithful:
        rho = 0.95 * rho + 0.05 * np.eye(n) / n
    return State(space, (rho + rho.conj().T) / 2)


def reduction_distance(phi: State, sites_1: Sequence[int], sites_2: Sequence[int]) -> float:
    """Trace norm of rho_12 - rho_1 (x) rho_2 for the two factor sets."""
    sites_1 = list(phi.space.check_sites(sites_1))
    sites_2 = list(phi.space.check_sites(sites_2))
    dims = phi.space.factor_dims
    rho_12 = partial_trace(phi.rho, sites_1 + sites_2, dims)
    rho_1 = partial_trace(phi.rho, sites_1, dims)
    rho_2 = partial_trace(phi.rho, sites_2, dims)
    return float(np.linalg.norm(rho_12 - np.kron(rho_1, rho_2), "nuc"))


def is_product_state(phi: State, sites_1: Sequence[int], sites_2: Sequence[int], threshold: float = 1e-9) -> bool:
    """Whether phi factorizes across the two factor sets."""
    return reduction_distance(phi, sites_1, sites_2) <= threshold
