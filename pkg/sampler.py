"""
Multiple Try Metropolis - Sampler
Implements the generalized MTM transition, the variant without reference
points and the classical Metropolis-Hastings baseline.

One step consumes the chain's random stream in a fixed order:
    1. the N candidates, in proposal order
    2. one uniform for the selection (skipped when N = 1)
    3. the N-1 reference points (generalized and composed forms only)
    4. one uniform for the acceptance test
A step whose candidates all have zero weight consumes 1 and 2 only, and then
stays put. With N = 1 it still draws the acceptance uniform, so that a single
try follows the Metropolis-Hastings stream step for step on any support.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from acceptance import (
    AcceptanceForm, AcceptanceRule, alpha_composed, auxiliary_log_ratio,
    clamp_log_alpha, generalized_log_alpha, log_mh_ratio, noref_log_alpha,
)
from sampling_model import (
    ConditionalProposal, ConfigError, ContractViolation, InvalidWeightError,
    RngStream, TargetDensity, WeightFunction, as_state, proposal_groups,
)

logger = logging.getLogger(__name__)

NO_CANDIDATE = -1


@dataclass
class SamplerConfig:
    """
    Multiple try configuration.

    Attributes:
        proposals: One proposal per try, in candidate order
        weight: Selection weight evaluated on candidates and reference points
        acceptance: Acceptance rule
    """
    proposals: List[ConditionalProposal]
    weight: WeightFunction
    acceptance: AcceptanceRule
    groups: List[Tuple[ConditionalProposal, int, int]] = field(init=False, repr=False)

    def __post_init__(self):
        """Validate the configuration and group identical proposals"""
        self.proposals = list(self.proposals)
        if len(self.proposals) < 1:
            raise ConfigError("At least one proposal (N >= 1) is required")
        if self.acceptance is None:
            raise ConfigError("An acceptance rule is required")
        dims = {p.dimension for p in self.proposals}
        if len(dims) != 1:
            raise ConfigError(f"All proposals must share one dimension, got {sorted(dims)}")
        self.groups = proposal_groups(self.proposals)

    @classmethod
    def repeated(cls, proposal: ConditionalProposal, tries: int, weight: WeightFunction,
                 acceptance: AcceptanceRule) -> "SamplerConfig":
        """N identical proposals"""
        if tries < 1:
            raise ConfigError(f"Number of tries must be at least 1, got {tries}")
        return cls([proposal] * tries, weight, acceptance)

    @property
    def tries(self) -> int:
        return len(self.proposals)

    @property
    def dimension(self) -> int:
        return self.proposals[0].dimension

    def group_of(self, index: int) -> int:
        """Position of the proposal group holding candidate ``index``"""
        for g, (_, start, stop) in enumerate(self.groups):
            if start <= index < stop:
                return g
        raise ContractViolation(f"Candidate index {index} out of range")


@dataclass
class StepRecord:
    """
    Everything observed during one transition.

    Attributes:
        current: State before the step
        candidates: (N, d) candidates; empty when not stored
        selected_k: Selected index or NO_CANDIDATE
        W_y: Normalized weight of the selected candidate
        W_x: Normalized weight of the current state among the reference points
        alpha: Acceptance probability
        accepted: Outcome of the acceptance test
        raw_log_weights: (N,) candidate log-weights
        reference_log_weights: (N,) reference log-weights; empty for no-reference steps
        proposed: Selected candidate, None if no candidate was selected
        group_index: Proposal group of the selected candidate
    """
    current: np.ndarray
    candidates: np.ndarray
    selected_k: int
    W_y: float
    W_x: float
    alpha: float
    accepted: bool
    raw_log_weights: np.ndarray
    reference_log_weights: np.ndarray
    proposed: Optional[np.ndarray] = None
    group_index: Optional[int] = None

    @property
    def next_state(self) -> np.ndarray:
        return self.proposed if self.accepted else self.current


@dataclass
class ChainTrace:
    """Visited states (T+1, d) and the T step records"""
    states: np.ndarray
    records: List[StepRecord]

    def __post_init__(self):
        if self.states.shape[0] != len(self.records) + 1:
            raise ContractViolation(
                f"Trace has {self.states.shape[0]} states for {len(self.records)} steps"
            )

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def accepted(self) -> np.ndarray:
        return np.array([r.accepted for r in self.records], dtype=bool)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([r.alpha for r in self.records], dtype=float)


def _select(log_weights: np.ndarray, rng: RngStream) -> Tuple[int, float]:
    """Selected index and log W_y, or (NO_CANDIDATE, -inf)"""
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0:
        raise ContractViolation("Cannot select from an empty candidate set")
    if np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise InvalidWeightError("Candidate log-weights must be finite or -inf")
    if lw.size == 1:
        return (NO_CANDIDATE, -np.inf) if lw[0] == -np.inf else (0, 0.0)

    u = rng.uniform()
    if np.all(lw == -np.inf):
        return NO_CANDIDATE, -np.inf
    log_total = logsumexp(lw)
    probs = np.exp(lw - log_total)
    cumulative = np.cumsum(probs)
    k = int(np.searchsorted(cumulative, u * cumulative[-1], side="right"))
    last_positive = int(np.flatnonzero(probs > 0)[-1])
    k = min(k, last_positive)
    return k, float(lw[k] - log_total)


def select_candidate(log_weights: Sequence[float], rng: RngStream) -> Tuple[int, float]:
    """
    Draw an index with probability proportional to exp(log_weights).

    Returns:
        (k, W_y), or (NO_CANDIDATE, 0.0) when every weight is zero
    """
    k, log_w_y = _select(np.asarray(log_weights, dtype=float), rng)
    if k == NO_CANDIDATE:
        return NO_CANDIDATE, 0.0
    return k, float(np.exp(log_w_y))


class MultipleTrySampler:
    """
    Runs MTM transitions for one target and one sampler configuration.

    Args:
        config: Proposals, weight and acceptance rule
        target: Target density
    """

    def __init__(self, config: SamplerConfig, target: TargetDensity):
        if config.dimension != target.dimension:
            raise ContractViolation(
                f"Proposal dimension {config.dimension} does not match target dimension "
                f"{target.dimension}"
            )
        self.config = config
        self.target = target
        self.rule = config.acceptance

    # ------------------------------------------------------------------
    # Building blocks
    # ------------------------------------------------------------------

    def _draw_candidates(self, x: np.ndarray, rng: RngStream) -> np.ndarray:
        return np.concatenate([prop.sample(x, rng, size=stop - start)
                               for prop, start, stop in self.config.groups])

    def _log_weights(self, points: np.ndarray, cond: np.ndarray) -> np.ndarray:
        return np.concatenate([
            self.config.weight.log_weight(points[start:stop], cond, self.target, prop)
            for prop, start, stop in self.config.groups
        ])

    def _draw_references(self, y: np.ndarray, x: np.ndarray, k: int, rng: RngStream) -> np.ndarray:
        """Reference points x_i* ~ pi_i(.|y) for i != k, with x_k* = x"""
        blocks = []
        for prop, start, stop in self.config.groups:
            if start <= k < stop:
                count = stop - start - 1
                draws = prop.sample(y, rng, size=count) if count else np.empty((0, x.size))
                offset = k - start
                blocks.append(np.vstack([draws[:offset], x[None, :], draws[offset:]]))
            else:
                blocks.append(prop.sample(y, rng, size=stop - start))
        return np.concatenate(blocks)

    def _auxiliary_log_ratio(self, candidates: np.ndarray, x: np.ndarray, y: np.ndarray,
                             k: int) -> float:
        if all(prop.is_independent for prop, _, _ in self.config.groups):
            return 0.0
        log_back = np.concatenate([prop.log_cond(candidates[a:b], y) for prop, a, b in self.config.groups])
        log_forth = np.concatenate([prop.log_cond(candidates[a:b], x) for prop, a, b in self.config.groups])
        return auxiliary_log_ratio(log_back, log_forth, k)

    def _rejected(self, x, candidates, log_weights, rng: RngStream, store) -> StepRecord:
        logger.debug("All candidate weights are zero at %s, staying put", x)
        if self.config.tries == 1:
            rng.uniform()
        return StepRecord(current=x, candidates=candidates if store else np.empty((0, x.size)),
                          selected_k=NO_CANDIDATE, W_y=0.0, W_x=0.0, alpha=0.0, accepted=False,
                          raw_log_weights=log_weights, reference_log_weights=np.empty(0))

    # ------------------------------------------------------------------
    # Transitions
    # ------------------------------------------------------------------

    def step(self, x, rng: RngStream, log_px: Optional[float] = None,
             store_candidates: bool = True) -> StepRecord:
        """One transition from x with the configured acceptance form"""
        if self.rule.form == AcceptanceForm.NOREF:
            return self.step_noref(x, rng, log_px, store_candidates)
        return self.step_generalized(x, rng, log_px, store_candidates)

    def step_generalized(self, x, rng: RngStream, log_px: Optional[float] = None,
                         store_candidates: bool = True) -> StepRecord:
        """
        MTM transition with reference points.

        Also serves the composed and always-accept forms.

        Raises:
            ContractViolation: p(x) = 0 or a dimension mismatch
        """
        x = as_state(x, self.target.dimension)
        if log_px is None:
            log_px = self.target.log_density(x)
        if log_px == -np.inf:
            raise ContractViolation(f"Current state {x} has zero target density")

        # Step 1: candidates and selection
        candidates = self._draw_candidates(x, rng)
        log_w_cand = self._log_weights(candidates, x)
        k, log_w_y = _select(log_w_cand, rng)
        if k == NO_CANDIDATE:
            return self._rejected(x, candidates, log_w_cand, rng, store_candidates)
        y = candidates[k]
        prop_k = self.config.proposals[k]

        # Step 2: reference points and their weights
        references = self._draw_references(y, x, k, rng)
        log_w_ref = self._log_weights(references, y)
        if log_w_ref[k] == -np.inf:
            log_w_x = -np.inf
        else:
            log_w_x = float(log_w_ref[k] - logsumexp(log_w_ref))

        # Step 3: acceptance probability
        log_py = self.target.log_density(y)
        if self.rule.form == AcceptanceForm.GENERALIZED:
            log_ratio = log_mh_ratio(self.target, prop_k, x, y, log_px, log_py)
            alpha = clamp_log_alpha(generalized_log_alpha(log_ratio, log_w_x, log_w_y))
        elif self.rule.form == AcceptanceForm.COMPOSED:
            alpha = alpha_composed(self.rule, x, y, min(float(np.exp(log_w_x)), 1.0),
                                   min(float(np.exp(log_w_y)), 1.0), self.target, prop_k)
        else:
            alpha = 1.0 if log_py > -np.inf else 0.0

        # Step 4: accept or reject
        accepted = bool(rng.uniform() < alpha)
        return StepRecord(current=x, candidates=candidates if store_candidates else np.empty((0, x.size)),
                          selected_k=k, W_y=float(np.exp(log_w_y)), W_x=float(np.exp(log_w_x)),
                          alpha=alpha, accepted=accepted, raw_log_weights=log_w_cand,
                          reference_log_weights=log_w_ref, proposed=y,
                          group_index=self.config.group_of(k))

    def step_noref(self, x, rng: RngStream, log_px: Optional[float] = None,
                   store_candidates: bool = True) -> StepRecord:
        """
        MTM transition reusing the unselected candidates as reference points.

        Raises:
            ContractViolation: p(x) = 0 or the configured form is not no-reference
        """
        if self.rule.form != AcceptanceForm.NOREF:
            raise ContractViolation(f"step_noref needs the noref form, got {self.rule.identifier}")
        x = as_state(x, self.target.dimension)
        if log_px is None:
            log_px = self.target.log_density(x)
        if log_px == -np.inf:
            raise ContractViolation(f"Current state {x} has zero target density")

        candidates = self._draw_candidates(x, rng)
        log_w_cand = self._log_weights(candidates, x)
        k, log_w_y = _select(log_w_cand, rng)
        if k == NO_CANDIDATE:
            return self._rejected(x, candidates, log_w_cand, rng, store_candidates)
        y = candidates[k]
        prop_k = self.config.proposals[k]

        # Reference set: the other candidates, with x in slot k
        references = candidates.copy()
        references[k] = x
        log_w_ref = self._log_weights(references, y)
        log_w_x = -np.inf if log_w_ref[k] == -np.inf else float(log_w_ref[k] - logsumexp(log_w_ref))

        log_py = self.target.log_density(y)
        log_ratio = log_mh_ratio(self.target, prop_k, x, y, log_px, log_py)
        log_aux = self._auxiliary_log_ratio(candidates, x, y, k)
        alpha = clamp_log_alpha(noref_log_alpha(log_ratio, log_aux, log_w_x, log_w_y))

        accepted = bool(rng.uniform() < alpha)
        return StepRecord(current=x, candidates=candidates if store_candidates else np.empty((0, x.size)),
                          selected_k=k, W_y=float(np.exp(log_w_y)), W_x=float(np.exp(log_w_x)),
                          alpha=alpha, accepted=accepted, raw_log_weights=log_w_cand,
                          reference_log_weights=log_w_ref, proposed=y,
                          group_index=self.config.group_of(k))

    def run(self, init, iterations: int, rng: RngStream, store_candidates: bool = True) -> ChainTrace:
        """
        Run ``iterations`` transitions from init.

        Raises:
            ContractViolation: iterations < 1 or p(init) = 0
        """
        if iterations < 1:
            raise ContractViolation(f"Number of iterations must be at least 1, got {iterations}")
        x = as_state(init, self.target.dimension)
        log_px = self.target.log_density(x)
        if log_px == -np.inf:
            raise ContractViolation(f"Initial state {x} has zero target density")

        states = np.empty((iterations + 1, x.size))
        states[0] = x
        records = []
        for t in range(iterations):
            record = self.step(x, rng, log_px, store_candidates)
            records.append(record)
            if record.accepted:
                x = record.proposed
                log_px = self.target.log_density(x)
            states[t + 1] = x
        degenerate = sum(r.selected_k == NO_CANDIDATE for r in records)
        if degenerate:
            logger.warning("%d of %d steps had zero weight on every candidate", degenerate, iterations)
        logger.debug("Chain finished: %d steps, %d accepted", iterations,
                     sum(r.accepted for r in records))
        return ChainTrace(states=states, records=records)


def mtm_step_generalized(x, cfg: SamplerConfig, target: TargetDensity, rng: RngStream) -> StepRecord:
    """One generalized MTM transition"""
    return MultipleTrySampler(cfg, target).step_generalized(x, rng)


def mtm_step_noref(x, cfg: SamplerConfig, target: TargetDensity, rng: RngStream) -> StepRecord:
    """One MTM transition without reference points"""
    return MultipleTrySampler(cfg, target).step_noref(x, rng)


def run_chain(init, cfg: SamplerConfig, target: TargetDensity, iterations: int, rng: RngStream,
              store_candidates: bool = True) -> ChainTrace:
    """Run a chain of ``iterations`` steps and return its trace"""
    return MultipleTrySampler(cfg, target).run(init, iterations, rng, store_candidates)


def mh_step(x, proposal: ConditionalProposal, target: TargetDensity, rng: RngStream,
            log_px: Optional[float] = None) -> StepRecord:
    """
    Classical Metropolis-Hastings step.

    Consumes the candidate draw then one uniform, matching MTM with N = 1.
    """
    x = as_state(x, target.dimension)
    if log_px is None:
        log_px = target.log_density(x)
    if log_px == -np.inf:
        raise ContractViolation(f"Current state {x} has zero target density")
    y = proposal.sample(x, rng)
    log_py = target.log_density(y)
    alpha = clamp_log_alpha(log_mh_ratio(target, proposal, x, y, log_px, log_py))
    accepted = bool(rng.uniform() < alpha)
    return StepRecord(current=x, candidates=y[None, :], selected_k=0, W_y=1.0, W_x=1.0,
                      alpha=alpha, accepted=accepted, raw_log_weights=np.zeros(1),
                      reference_log_weights=np.zeros(1), proposed=y, group_index=0)


def run_mh_chain(init, proposal: ConditionalProposal, target: TargetDensity, iterations: int,
                 rng: RngStream) -> ChainTrace:
    """Metropolis-Hastings chain"""
    if iterations < 1:
        raise ContractViolation(f"Number of iterations must be at least 1, got {iterations}")
    x = as_state(init, target.dimension)
    log_px = target.log_density(x)
    states = np.empty((iterations + 1, x.size))
    states[0] = x
    records = []
    for t in range(iterations):
        record = mh_step(x, proposal, target, rng, log_px)
        records.append(record)
        if record.accepted:
            x = record.proposed
            log_px = target.log_density(x)
        states[t + 1] = x
    return ChainTrace(states=states, records=records)
