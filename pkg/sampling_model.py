"""
Multiple Try Metropolis - Sampling Model
Defines the core data structures shared by the samplers, the acceptance rules
and the balance oracle: states, target densities, conditional proposals,
weight functions and random streams.

All densities and weights live in log-space. A single state is a 1-D array of
length ``d``; a batch of states is a 2-D array of shape ``(n, d)``.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Upper bound of the seed domain (64-bit unsigned)
MAX_SEED = 2 ** 64


class SamplingError(ValueError):
    """Base class of every error raised by the sampling library"""


class ContractViolation(SamplingError):
    """A precondition of an operation was not met"""


class InvalidWeightError(SamplingError):
    """A weight function returned +inf or NaN"""


class InvalidBetaError(SamplingError):
    """A beta rule left [0, 1] or was given an asymmetric lambda"""


class BudgetExceededError(SamplingError):
    """Exact enumeration was requested beyond the supported model size"""


class ConfigError(SamplingError):
    """
    Invalid experiment configuration.

    Attributes:
        valid_ids: Identifiers that would have been accepted, if relevant
    """

    def __init__(self, message: str, valid_ids: Optional[Sequence[str]] = None):
        self.valid_ids = list(valid_ids) if valid_ids is not None else []
        if self.valid_ids:
            message = f"{message} (valid: {', '.join(self.valid_ids)})"
        super().__init__(message)


def as_state(x: ArrayLike, dimension: Optional[int] = None) -> np.ndarray:
    """
    Convert a point to a finite 1-D float array.

    Args:
        x: Scalar (for d=1) or sequence of coordinates
        dimension: Expected dimension, checked when given

    Returns:
        Array of shape (d,)
    """
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.ndim != 1:
        raise ContractViolation(f"Expected a single state, got shape {point.shape}")
    if dimension is not None and point.shape[0] != dimension:
        raise ContractViolation(
            f"Dimension mismatch: state has {point.shape[0]} coordinates, expected {dimension}"
        )
    if not np.all(np.isfinite(point)):
        raise ContractViolation(f"State coordinates must be finite, got {point}")
    return point


def as_batch(points: ArrayLike, dimension: int) -> np.ndarray:
    """Convert a single point or a batch of points to shape (n, d)"""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0 and dimension == 1:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        if arr.shape[0] != dimension:
            raise ContractViolation(
                f"Dimension mismatch: state has {arr.shape[0]} coordinates, expected {dimension}"
            )
        return arr.reshape(1, dimension)
    if arr.ndim == 2 and arr.shape[1] == dimension:
        return arr
    raise ContractViolation(f"Cannot interpret shape {arr.shape} as states of dimension {dimension}")


@dataclass(frozen=True)
class TargetDensity:
    """
    Unnormalized log-density p(x) over R^d.

    Attributes:
        name: Identifier used in reports
        dimension: State dimension d
        log_fn: Vectorised log p, maps (n, d) -> (n,); -inf outside the support
        support: Optional vectorised predicate of the domain, (n, d) -> bool (n,)
        components: Optional vectorised component log-densities, (n, d) -> (n, m)
        has_moments: False for heavy-tailed targets whose correlation is meaningless
    """
    name: str
    dimension: int
    log_fn: Callable[[np.ndarray], np.ndarray]
    support: Optional[Callable[[np.ndarray], np.ndarray]] = None
    components: Optional[Callable[[np.ndarray], np.ndarray]] = None
    has_moments: bool = True

    def __post_init__(self):
        """Validate target data"""
        if self.dimension < 1:
            raise ContractViolation(f"Dimension must be positive for target {self.name}")

    def log_density(self, x: ArrayLike) -> Union[float, np.ndarray]:
        """
        Evaluate log p at one point (returns float) or a batch (returns array).
        """
        single = np.ndim(x) <= 1
        pts = as_batch(x, self.dimension)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.asarray(self.log_fn(pts), dtype=float).reshape(-1)
        if self.support is not None:
            values = np.where(self.support(pts), values, -np.inf)
        if np.any(np.isnan(values)) or np.any(values == np.inf):
            raise ContractViolation(f"Target {self.name} returned a non-finite log-density above -inf")
        return float(values[0]) if single else values

    def component_log_densities(self, x: ArrayLike) -> np.ndarray:
        """Component log-densities, shape (n, m)"""
        if self.components is None:
            raise ContractViolation(f"Target {self.name} has no component decomposition")
        return np.asarray(self.components(as_batch(x, self.dimension)), dtype=float)


class ConditionalProposal(ABC):
    """
    Normalized conditional density pi(y|x) that can be sampled.

    Subclasses implement ``_draw`` and ``_log_cond`` on batches; the public
    methods take care of shapes.
    """
    dimension: int

    @property
    def is_independent(self) -> bool:
        """True when pi(y|x) does not depend on x"""
        return False

    @property
    @abstractmethod
    def label(self) -> str:
        """Identifier used in reports"""

    @abstractmethod
    def _draw(self, x: np.ndarray, rng: "RngStream", size: int) -> np.ndarray:
        """Draw ``size`` candidates given x of shape (d,); returns (size, d)"""

    @abstractmethod
    def _log_cond(self, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """log pi(y|x) for broadcastable (n, d) arrays; returns (n,)"""

    def sample(self, x: ArrayLike, rng: "RngStream", size: Optional[int] = None) -> np.ndarray:
        """
        Draw candidates from pi(.|x).

        Args:
            x: Conditioning point
            rng: Stream owned by the calling chain
            size: Number of draws; None draws a single point of shape (d,)

        Returns:
            Array (d,) if size is None, else (size, d)
        """
        cond = as_state(x, self.dimension)
        count = 1 if size is None else int(size)
        draws = self._draw(cond, rng, count)
        return draws[0] if size is None else draws

    def log_cond(self, y: ArrayLike, x: ArrayLike) -> Union[float, np.ndarray]:
        """log pi(y|x); either argument may be a batch (n, d)"""
        single = np.ndim(y) <= 1 and np.ndim(x) <= 1
        ys = as_batch(y, self.dimension)
        xs = as_batch(x, self.dimension)
        with np.errstate(divide="ignore"):
            values = np.asarray(self._log_cond(ys, xs), dtype=float).reshape(-1)
        return float(values[0]) if single else values


@dataclass(frozen=True)
class WeightFunction:
    """
    Selection weight omega(candidate, condition) evaluated in log-space.

    Attributes:
        label: Identifier (a WeightKind value for built-in presets)
        log_fn: Vectorised log omega, (candidates (n, d), cond (d,), target, proposal) -> (n,)
        uses_condition: False when omega depends on the candidate only
    """
    label: str
    log_fn: Callable[..., np.ndarray]
    uses_condition: bool = True

    def log_weight(self, candidates: ArrayLike, cond: ArrayLike,
                   target: Optional[TargetDensity] = None,
                   proposal: Optional[ConditionalProposal] = None) -> Union[float, np.ndarray]:
        """
        Evaluate log omega for one candidate (float) or a batch (array).

        Raises:
            InvalidWeightError: If any value is +inf or NaN
        """
        single = np.ndim(candidates) <= 1
        dimension = target.dimension if target is not None else np.size(cond)
        cands = as_batch(candidates, dimension)
        cond_point = as_state(cond, dimension)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.asarray(self.log_fn(cands, cond_point, target, proposal), dtype=float)
        values = np.broadcast_to(values, (cands.shape[0],)).copy()
        if np.any(np.isnan(values)):
            raise InvalidWeightError(f"Weight {self.label} returned NaN")
        if np.any(values == np.inf):
            raise InvalidWeightError(f"Weight {self.label} is unbounded (+inf) at an evaluated point")
        return float(values[0]) if single else values


@dataclass
class RngStream:
    """
    Reproducible random stream of one chain replication.

    The generator is a PCG64 seeded by SeedSequence(seed, spawn_key=(stream_id,)),
    so distinct stream ids under the same seed are independent.

    Attributes:
        seed: 64-bit unsigned base seed
        stream_id: Replication index
    """
    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        """Validate seed and build the generator"""
        if not (0 <= int(self.seed) < MAX_SEED):
            raise ContractViolation(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise ContractViolation(f"Stream id must be non-negative, got {self.stream_id}")
        sequence = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def normal(self, size=None) -> Union[float, np.ndarray]:
        """Standard normal draws"""
        return self.generator.standard_normal(size)

    def uniform(self) -> float:
        """One uniform draw on [0, 1)"""
        return float(self.generator.random())

    def uniform_array(self, low: float, high: float, size) -> np.ndarray:
        """Uniform draws on [low, high)"""
        return self.generator.uniform(low, high, size)


def log_density(target: TargetDensity, x: ArrayLike) -> float:
    """
    Evaluate log p(x) at a single state.

    Raises:
        ContractViolation: If x does not match the target dimension
    """
    return target.log_density(as_state(x, target.dimension))


def propose(prop: ConditionalProposal, x: ArrayLike, rng: RngStream) -> np.ndarray:
    """Draw one candidate from pi(.|x), advancing rng"""
    return prop.sample(x, rng)


def log_weight_eval(w: WeightFunction, candidate: ArrayLike, cond: ArrayLike,
                    target: Optional[TargetDensity] = None,
                    proposal: Optional[ConditionalProposal] = None) -> float:
    """
    Evaluate log omega(candidate, cond) at a single candidate.

    Raises:
        InvalidWeightError: On +inf or NaN
    """
    if target is not None:
        candidate = as_state(candidate, target.dimension)
        cond = as_state(cond, target.dimension)
    return w.log_weight(candidate, cond, target, proposal)


def proposal_groups(proposals: Sequence[ConditionalProposal]) -> List[tuple]:
    """
    Group consecutive equal proposals.

    Returns:
        List of (proposal, start, stop) covering indices 0..N-1
    """
    groups = []
    start = 0
    for i in range(1, len(proposals) + 1):
        if i == len(proposals) or proposals[i] != proposals[start]:
            groups.append((proposals[start], start, i))
            start = i
    return groups
