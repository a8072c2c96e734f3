"""
Multiple Try Metropolis - Diagnostics
Per-run statistics of a chain trace and their aggregation over replications.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from sampler import ChainTrace, StepRecord
from sampling_model import ContractViolation

# Statistic identifiers understood by summarize_run
ACCEPT_RATE = "accept_rate"
MEAN_ALPHA = "mean_alpha"
LAG1_CORR = "lag1_corr"
MODE_JUMP_RATE = "mode_jump_rate"
NORMCONST_RECIP = "normconst_recip"
SELECT_RATE = "select_rate"

STATISTICS = (ACCEPT_RATE, MEAN_ALPHA, LAG1_CORR, MODE_JUMP_RATE, NORMCONST_RECIP, SELECT_RATE)
DEFAULT_STATISTICS = (ACCEPT_RATE, MEAN_ALPHA, LAG1_CORR)


def acceptance_rate(trace: ChainTrace) -> float:
    """Fraction of accepted steps"""
    if trace.iterations == 0:
        raise ContractViolation("Acceptance rate of an empty trace")
    return float(np.mean(trace.accepted))


def mean_alpha(trace: ChainTrace) -> float:
    """Average acceptance probability over the steps"""
    if trace.iterations == 0:
        raise ContractViolation("Mean acceptance probability of an empty trace")
    return float(np.mean(trace.alphas))


def lag1_correlation(trace: ChainTrace, coordinate: int = 0) -> Optional[float]:
    """
    Pearson correlation of (x_t, x_{t+1}) along one coordinate.

    Returns:
        Correlation in [-1, 1], or None when either sequence is constant
    """
    states = trace.states
    if states.shape[0] < 3:
        raise ContractViolation("Lag-1 correlation needs at least 3 states")
    if not 0 <= coordinate < states.shape[1]:
        raise ContractViolation(f"Coordinate {coordinate} out of range")
    a = states[:-1, coordinate]
    b = states[1:, coordinate]
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    corr = float(np.corrcoef(a, b)[0, 1])
    return float(np.clip(corr, -1.0, 1.0))


def mode_jump_rate(trace: ChainTrace, mode_fn: Callable[[np.ndarray], int]) -> float:
    """Fraction of steps whose mode index differs from the previous state's"""
    states = trace.states
    if states.shape[0] < 2:
        raise ContractViolation("Mode jump rate needs at least 2 states")
    modes = np.asarray(mode_fn(states)).reshape(-1)
    if modes.size != states.shape[0]:
        modes = np.array([mode_fn(s) for s in states])
    return float(np.mean(modes[1:] != modes[:-1]))


def normconst_estimate(records: Sequence[StepRecord]) -> Optional[float]:
    """
    Estimate 1/c_p from the candidate importance weights of all steps.

    The mean of the weights estimates c_p = integral of p; zero weights count.

    Returns:
        1/c_p estimate, or None when every weight is zero
    """
    log_weights = [np.asarray(r.raw_log_weights, dtype=float) for r in records]
    if not log_weights:
        raise ContractViolation("Normalizing constant estimate needs at least one step")
    flat = np.concatenate(log_weights)
    if np.all(flat == -np.inf):
        return None
    log_mean = logsumexp(flat) - np.log(flat.size)
    return float(np.exp(-log_mean))


def selection_rates(trace: ChainTrace, groups: int) -> List[float]:
    """Fraction of steps selecting a candidate of each proposal group"""
    counts = np.zeros(groups)
    for record in trace.records:
        if record.group_index is not None:
            counts[record.group_index] += 1
    return list(counts / max(trace.iterations, 1))


@dataclass
class RunSummary:
    """
    Statistics of one chain.

    Optional statistics are None when undefined or not requested.
    """
    acceptance_rate: float
    mean_alpha: float
    lag1_corr: List[Optional[float]] = field(default_factory=list)
    mode_jump_rate: Optional[float] = None
    normconst: Optional[float] = None
    selection_rates: Optional[List[float]] = None
    statistics: Sequence[str] = DEFAULT_STATISTICS

    def __post_init__(self):
        if self.mode_jump_rate is not None and self.mode_jump_rate > self.acceptance_rate + 1e-12:
            raise ContractViolation(
                f"Mode jump rate {self.mode_jump_rate} exceeds acceptance rate {self.acceptance_rate}"
            )

    def as_row(self) -> Dict[str, Optional[float]]:
        """Flat statistic name -> value mapping, in the requested order"""
        row: Dict[str, Optional[float]] = {}
        for name in self.statistics:
            if name == ACCEPT_RATE:
                row[ACCEPT_RATE] = self.acceptance_rate
            elif name == MEAN_ALPHA:
                row[MEAN_ALPHA] = self.mean_alpha
            elif name == LAG1_CORR:
                for i, value in enumerate(self.lag1_corr):
                    row[f"{LAG1_CORR}_{i + 1}"] = value
            elif name == MODE_JUMP_RATE:
                row[MODE_JUMP_RATE] = self.mode_jump_rate
            elif name == NORMCONST_RECIP:
                row[NORMCONST_RECIP] = self.normconst
            elif name == SELECT_RATE:
                for i, value in enumerate(self.selection_rates or []):
                    row[f"{SELECT_RATE}_{i + 1}"] = value
        return row


def summarize_run(trace: ChainTrace, statistics: Sequence[str] = DEFAULT_STATISTICS,
                  mode_fn: Optional[Callable] = None, groups: int = 1) -> RunSummary:
    """
    Compute the requested statistics of one chain.

    Raises:
        ContractViolation: Unknown statistic, or mode jumps without a mode function
    """
    unknown = [s for s in statistics if s not in STATISTICS]
    if unknown:
        raise ContractViolation(f"Unknown statistics {unknown}")
    if MODE_JUMP_RATE in statistics and mode_fn is None:
        raise ContractViolation("Mode jump rate needs a mode function")

    lag1 = []
    if LAG1_CORR in statistics:
        lag1 = [lag1_correlation(trace, c) for c in range(trace.states.shape[1])]
    return RunSummary(
        acceptance_rate=acceptance_rate(trace),
        mean_alpha=mean_alpha(trace),
        lag1_corr=lag1,
        mode_jump_rate=mode_jump_rate(trace, mode_fn) if MODE_JUMP_RATE in statistics else None,
        normconst=normconst_estimate(trace.records) if NORMCONST_RECIP in statistics else None,
        selection_rates=selection_rates(trace, groups) if SELECT_RATE in statistics else None,
        statistics=tuple(statistics),
    )


@dataclass
class AggregateSummary:
    """Mean and sample standard deviation of each statistic over R runs"""
    means: Dict[str, Optional[float]]
    stds: Dict[str, Optional[float]]
    runs: int

    def as_row(self) -> Dict[str, Optional[float]]:
        row: Dict[str, Optional[float]] = {}
        for name in self.means:
            row[f"{name}_mean"] = self.means[name]
            row[f"{name}_std"] = self.stds[name]
        return row


def aggregate(summaries: Sequence[RunSummary]) -> AggregateSummary:
    """
    Average run summaries.

    The standard deviation uses the R-1 denominator and is 0 for R = 1.
    A statistic missing in any run is missing in the aggregate.
    """
    if not summaries:
        raise ContractViolation("Cannot aggregate zero runs")
    rows = [s.as_row() for s in summaries]
    names = list(rows[0])
    if any(list(r) != names for r in rows[1:]):
        raise ContractViolation("Run summaries report different statistics")

    means: Dict[str, Optional[float]] = {}
    stds: Dict[str, Optional[float]] = {}
    for name in names:
        values = [r[name] for r in rows]
        if any(v is None for v in values):
            means[name] = None
            stds[name] = None
            continue
        arr = np.asarray(values, dtype=float)
        means[name] = float(np.mean(arr))
        stds[name] = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return AggregateSummary(means=means, stds=stds, runs=len(summaries))


def print_aggregate_report(title: str, key: Dict[str, str], row: Dict[str, Optional[float]]) -> None:
    """
    Print one aggregated experiment.

    Args:
        title: Banner title
        key: Key columns of the experiment
        row: Flat statistics as produced by AggregateSummary.as_row
    """
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)
    for name, value in key.items():
        print(f"  {name:<20} {value}")
    print("-" * 70)
    for name in [n[:-5] for n in row if n.endswith("_mean")]:
        mean = row[f"{name}_mean"]
        std = row.get(f"{name}_std")
        if mean is None:
            print(f"  {name:<20} (undefined)")
        else:
            print(f"  {name:<20} {mean:10.4f}  (std {std:.4f})")
    print("=" * 70 + "\n")
