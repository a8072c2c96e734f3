"""
Multiple Try Metropolis - Detailed Balance Oracle
Builds the exact one-step transition kernel of an MTM sampler on a finite
state space by enumerating candidates and reference points, then checks
detailed balance and stationarity.

States are the integers 0..M-1 embedded as one-dimensional points, so the
kernel reuses the acceptance rules of the continuous samplers unchanged.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Union

import numpy as np

from acceptance import (
    ALWAYS_ACCEPT, GENERALIZED, NOREF, AcceptanceForm, AcceptanceRule, BetaKind,
    GammaKind, acceptance_probability, composed,
)
from sampling_model import (
    BudgetExceededError, ConditionalProposal, ContractViolation, RngStream,
    TargetDensity, WeightFunction,
)

logger = logging.getLogger(__name__)

MAX_STATES = 8
MAX_TRIES = 3
ROW_TOLERANCE = 1e-12
BALANCE_TOLERANCE = 1e-10
NEGATIVE_CONTROL_THRESHOLD = 1e-3

BETA_GAMMA_VARIANTS = {
    "beta1_gamma1": (BetaKind.BETA1, GammaKind.GAMMA1),
    "beta1_gamma2": (BetaKind.BETA1, GammaKind.GAMMA2),
    "beta1_gamma3": (BetaKind.BETA1, GammaKind.GAMMA3),
    "beta2_gamma3": (BetaKind.BETA2, GammaKind.GAMMA3),
}
VARIANTS = ["generalized", "noref"] + list(BETA_GAMMA_VARIANTS) + ["always"]


def _finite_log_target(pts: np.ndarray, log_mass: np.ndarray) -> np.ndarray:
    return log_mass[np.rint(pts[:, 0]).astype(int)]


@dataclass(frozen=True, eq=False)
class FiniteProposal(ConditionalProposal):
    """
    Row-stochastic proposal table on 0..M-1, rows indexed by the condition.

    Attributes:
        table: (M, M) array, table[x, y] = pi(y|x)
        index: Position j of this proposal among the N tries
    """
    table: np.ndarray
    index: int = 0
    dimension: int = 1

    @property
    def is_independent(self) -> bool:
        return bool(np.all(self.table == self.table[0]))

    @property
    def label(self) -> str:
        return f"finite[{self.index}]"

    def _draw(self, x, rng, size):
        row = self.table[int(round(x[0]))]
        return rng.generator.choice(len(row), size=(size, 1), p=row).astype(float)

    def _log_cond(self, ys, xs):
        y_idx = np.rint(ys[:, 0]).astype(int)
        x_idx = np.rint(xs[:, 0]).astype(int)
        return np.log(self.table[x_idx, y_idx])


def _finite_log_weight(cands, cond, target, proposal, log_tables):
    c_idx = np.rint(cands[:, 0]).astype(int)
    return log_tables[proposal.index][c_idx, int(round(cond[0]))]


@dataclass
class FiniteModel:
    """
    Finite MTM model.

    Attributes:
        target_mass: (M,) positive unnormalized masses
        proposals: (N, M, M) row-stochastic tables, proposals[j, x, y] = pi_j(y|x)
        weight_table: (N, M, M) positive weights, weight_table[j, y, x] = omega_j(y, x)
        acceptance: Acceptance rule under test
    """
    target_mass: np.ndarray
    proposals: np.ndarray
    weight_table: np.ndarray
    acceptance: AcceptanceRule = GENERALIZED
    _log_tables: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        """Validate model data"""
        self.target_mass = np.asarray(self.target_mass, dtype=float)
        self.proposals = np.asarray(self.proposals, dtype=float)
        self.weight_table = np.asarray(self.weight_table, dtype=float)
        M = self.target_mass.shape[0]
        if self.proposals.ndim == 2:
            self.proposals = self.proposals[None, :, :]
        if self.weight_table.ndim == 2:
            self.weight_table = np.repeat(self.weight_table[None, :, :], self.proposals.shape[0], axis=0)
        N = self.proposals.shape[0]

        if np.any(self.target_mass <= 0):
            raise ContractViolation("Target masses must be positive")
        if self.proposals.shape != (N, M, M) or self.weight_table.shape != (N, M, M):
            raise ContractViolation(
                f"Expected proposal and weight tables of shape {(N, M, M)}, got "
                f"{self.proposals.shape} and {self.weight_table.shape}"
            )
        if np.any(self.proposals < 0):
            raise ContractViolation("Proposal probabilities must be non-negative")
        row_error = np.max(np.abs(self.proposals.sum(axis=2) - 1.0))
        if row_error > ROW_TOLERANCE:
            raise ContractViolation(f"Proposal rows must sum to 1 (max error {row_error:.2e})")
        if np.any(self.weight_table <= 0):
            raise ContractViolation("Weights must be positive")
        self._log_tables = np.log(self.weight_table)

    @classmethod
    def from_weight_function(cls, target_mass, proposals, weight_fn, acceptance=GENERALIZED):
        """Tabulate weight_fn(j, candidate, condition) over all states"""
        proposals = np.asarray(proposals, dtype=float)
        if proposals.ndim == 2:
            proposals = proposals[None, :, :]
        N, M, _ = proposals.shape
        table = np.array([[[weight_fn(j, y, x) for x in range(M)] for y in range(M)] for j in range(N)],
                         dtype=float)
        return cls(target_mass, proposals, table, acceptance)

    @property
    def states(self) -> int:
        return self.target_mass.shape[0]

    @property
    def tries(self) -> int:
        return self.proposals.shape[0]

    def as_target(self) -> TargetDensity:
        return TargetDensity(name="finite", dimension=1,
                             log_fn=partial(_finite_log_target, log_mass=np.log(self.target_mass)))

    def as_proposals(self) -> List[FiniteProposal]:
        return [FiniteProposal(table=self.proposals[j], index=j) for j in range(self.tries)]

    def as_weight(self) -> WeightFunction:
        return WeightFunction(label="finite", log_fn=partial(_finite_log_weight, log_tables=self._log_tables))


def _point(state: int) -> np.ndarray:
    return np.array([float(state)])


def exact_kernel(model: FiniteModel) -> np.ndarray:
    """
    Exact transition matrix K[x, y] of one MTM step.
    The diagonal sums the mass of selecting x itself and of rejected moves.

    Raises:
        BudgetExceededError: More than 8 states or 3 tries
    """
    M, N = model.states, model.tries
    if M > MAX_STATES or N > MAX_TRIES:
        raise BudgetExceededError(
            f"Exact enumeration supports M <= {MAX_STATES} and N <= {MAX_TRIES}, got M={M}, N={N}"
        )
    target = model.as_target()
    proposals = model.as_proposals()
    P, Wt = model.proposals, model.weight_table
    rule = model.acceptance
    draws_refs = rule.draws_references
    kernel = np.zeros((M, M))

    for x in range(M):
        for ys in itertools.product(range(M), repeat=N):
            p_cand = np.prod([P[j, x, ys[j]] for j in range(N)])
            if p_cand == 0.0:
                continue
            w_cand = np.array([Wt[j, ys[j], x] for j in range(N)])
            cand_points = np.array(ys, dtype=float).reshape(N, 1)
            for k in range(N):
                y = ys[k]
                W_y = w_cand[k] / w_cand.sum()
                if y == x:
                    kernel[x, x] += p_cand * W_y
                    continue
                if draws_refs:
                    ref_sets = itertools.product(range(M), repeat=N - 1)
                else:
                    ref_sets = [tuple(ys[:k]) + tuple(ys[k + 1:])]
                for others in ref_sets:
                    refs = list(others[:k]) + [x] + list(others[k:])
                    p_ref = 1.0
                    if draws_refs:
                        p_ref = np.prod([P[j, y, refs[j]] for j in range(N) if j != k])
                        if p_ref == 0.0:
                            continue
                    w_ref = np.array([Wt[j, refs[j], y] for j in range(N)])
                    W_x = w_ref[k] / w_ref.sum()
                    alpha = acceptance_probability(rule, _point(x), _point(y), k, cand_points,
                                                   min(W_x, 1.0), min(W_y, 1.0), target, proposals)
                    move = p_cand * W_y * p_ref
                    kernel[x, y] += move * alpha
                    kernel[x, x] += move * (1.0 - alpha)
    return kernel


def check_detailed_balance(K: np.ndarray, target_mass: np.ndarray) -> float:
    """
    Largest relative violation |m(x)K(x,y) - m(y)K(y,x)| / max(.) over x != y.

    Pairs where both flows vanish count as zero.
    """
    K = np.asarray(K, dtype=float)
    m = np.asarray(target_mass, dtype=float)
    flow = m[:, None] * K
    diff = np.abs(flow - flow.T)
    scale = np.maximum(np.maximum(flow, flow.T), 1e-300)
    np.fill_diagonal(diff, 0.0)
    return float(np.max(diff / scale))


def stationarity_error(K: np.ndarray, target_mass: np.ndarray) -> float:
    """max |(p K) - p| for the normalized target p"""
    p = np.asarray(target_mass, dtype=float)
    p = p / p.sum()
    return float(np.max(np.abs(p @ K - p)))


def _random_tables(gen: np.random.Generator, N: int, M: int, heterogeneous: bool,
                   independent: bool) -> np.ndarray:
    count = N if heterogeneous else 1
    tables = []
    for _ in range(count):
        if independent:
            row = gen.dirichlet(np.ones(M))
            tables.append(np.tile(row, (M, 1)))
        else:
            tables.append(gen.dirichlet(np.ones(M), size=M))
    tables = np.array(tables)
    return tables if heterogeneous else np.repeat(tables, N, axis=0)


def random_finite_model(rng: Union[RngStream, np.random.Generator], states: int, tries: int,
                        acceptance: AcceptanceRule = GENERALIZED, heterogeneous: bool = True,
                        independent: bool = False, weights: str = "random") -> FiniteModel:
    """
    Random finite model with positive masses, proposals and weights.

    Args:
        weights: ``random`` for arbitrary positive tables, ``importance`` for m(y)/pi_j(y|x)
    """
    gen = rng.generator if isinstance(rng, RngStream) else rng
    mass = gen.uniform(0.1, 1.0, size=states)
    proposals = _random_tables(gen, tries, states, heterogeneous, independent)
    # Keep every entry positive so importance weights stay finite
    proposals = 0.9 * proposals + 0.1 / states
    if weights == "importance":
        table = mass[None, None, :] / proposals
        table = np.transpose(table, (0, 2, 1))
    elif weights == "random":
        table = gen.uniform(0.1, 1.0, size=(tries, states, states))
    else:
        raise ContractViolation(f"Unknown weight scheme '{weights}'")
    return FiniteModel(mass, proposals, table, acceptance)


def variant_rule(variant: str) -> AcceptanceRule:
    """Acceptance rule of an oracle variant"""
    if variant == "generalized":
        return GENERALIZED
    if variant == "noref":
        return NOREF
    if variant == "always":
        return ALWAYS_ACCEPT
    if variant in BETA_GAMMA_VARIANTS:
        beta, gamma = BETA_GAMMA_VARIANTS[variant]
        return composed(beta, gamma)
    raise ContractViolation(f"Unknown oracle variant '{variant}' (valid: {', '.join(VARIANTS)})")


@dataclass
class BatteryReport:
    """Worst-case results of a battery of random finite models"""
    variant: str
    models: int
    states: int
    tries: int
    max_violation: float
    max_stationarity: float
    max_row_error: float
    heterogeneous: bool

    @property
    def expects_balance(self) -> bool:
        return self.variant != "always"

    @property
    def passed(self) -> bool:
        if self.expects_balance:
            return self.max_violation <= BALANCE_TOLERANCE and self.max_row_error <= ROW_TOLERANCE
        return self.max_violation > NEGATIVE_CONTROL_THRESHOLD

    def print_report(self) -> None:
        """Print the battery summary"""
        print("\n" + "=" * 70)
        print(f"DETAILED BALANCE ORACLE: {self.variant}")
        print("=" * 70)
        print(f"Models: {self.models}  (M={self.states}, N={self.tries}, "
              f"{'heterogeneous' if self.heterogeneous else 'identical'} proposals)")
        print(f"Max relative balance violation: {self.max_violation:.3e}")
        print(f"Max stationarity error:         {self.max_stationarity:.3e}")
        print(f"Max row-sum error:              {self.max_row_error:.3e}")
        if self.passed:
            print("\n[OK] " + ("Detailed balance holds" if self.expects_balance
                              else "Negative control violates detailed balance as expected"))
        else:
            print("\n[VIOLATION] " + ("Detailed balance fails" if self.expects_balance
                                      else "Negative control unexpectedly satisfies detailed balance"))
        print("=" * 70 + "\n")


def run_battery(variant: str, models: int = 50, states: int = 4, tries: int = 2, seed: int = 0,
                heterogeneous: bool = True) -> BatteryReport:
    """
    Check detailed balance on ``models`` random finite models.

    The always-accept control uses identical asymmetric proposals.
    """
    rule = variant_rule(variant)
    if variant == "always":
        heterogeneous = False
    rng = RngStream(seed)
    worst: Dict[str, float] = {"violation": 0.0, "stationarity": 0.0, "row": 0.0}
    for i in range(models):
        model = random_finite_model(rng, states, tries, rule, heterogeneous=heterogeneous)
        K = exact_kernel(model)
        violation = check_detailed_balance(K, model.target_mass)
        worst["violation"] = max(worst["violation"], violation)
        worst["stationarity"] = max(worst["stationarity"], stationarity_error(K, model.target_mass))
        worst["row"] = max(worst["row"], float(np.max(np.abs(K.sum(axis=1) - 1.0))))
        logger.debug("Model %d: violation %.3e", i, violation)
    report = BatteryReport(variant=variant, models=models, states=states, tries=tries,
                           max_violation=worst["violation"], max_stationarity=worst["stationarity"],
                           max_row_error=worst["row"], heterogeneous=heterogeneous)
    if not report.passed:
        logger.warning("Oracle variant %s failed: max violation %.3e", variant, report.max_violation)
    return report
