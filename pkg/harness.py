"""
Multiple Try Metropolis - Experiment Harness
Turns an experiment configuration into R independent chain replications and
one aggregated result row.
"""

import logging
import os
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence

import numpy as np

from acceptance import AcceptanceRule, parse_acceptance
from diagnostics import (
    LAG1_CORR, MODE_JUMP_RATE, RunSummary, aggregate, summarize_run,
)
from model_zoo import (
    WeightKind, default_init, lambda_from_text, make_proposal, make_target,
    make_weight, mode_index,
)
from sampler import MultipleTrySampler, SamplerConfig
from sampling_model import (
    ConditionalProposal, ConfigError, RngStream, TargetDensity, WeightFunction,
    as_state,
)
from validator import ExperimentValidator

logger = logging.getLogger(__name__)

WORKERS_ENV = "MTM_WORKERS"


@dataclass
class ProposalSpec:
    """
    One proposal entry of a configuration, repeated ``repeat`` times.

    Attributes:
        proposal_id: Registry identifier (rw_gauss, ind_gauss, uniform)
        params: Proposal parameters
        repeat: Number of consecutive tries using this proposal
    """
    proposal_id: str
    params: Dict[str, object] = field(default_factory=dict)
    repeat: int = 1

    def __post_init__(self):
        if self.repeat < 1:
            raise ConfigError(f"Proposal repeat count must be at least 1, got {self.repeat}")

    def build(self, dimension: int) -> ConditionalProposal:
        return make_proposal(self.proposal_id, dimension, **self.params)


@dataclass
class ExperimentConfig:
    """
    Complete description of one experiment.

    Attributes:
        name: Experiment identifier
        technique: Label reported in the key columns (MH, MTM-rw, ...)
        target_id: Registered target
        target_params: Target parameters (eta, nu for Levy)
        proposals: Proposal entries; the tries are their concatenation
        tries: Declared N; must match the proposal entries when given
        weight_id: Weight preset
        weight_theta: Exponent of target_power weights
        weight_lambda: Lambda identifier of lambda_form weights and beta rules
        acceptance_id: generalized, noref, always or beta<i>_gamma<j>
        acceptance_f: Acceptance function of beta_general rules (min or barker)
        iterations: Steps per chain
        replications: Independent chains
        seed: Base seed; replication r uses stream r
        init: Initial state, default per target
        statistics: Requested statistics
        workers: Worker processes (None: environment or 1)
        output_path: CSV destination
        key: Extra key columns reported with the result row
    """
    name: str = "experiment"
    technique: str = "MTM"
    target_id: str = "bimodal"
    target_params: Dict[str, float] = field(default_factory=dict)
    proposals: List[ProposalSpec] = field(default_factory=list)
    tries: Optional[int] = None
    weight_id: str = WeightKind.IMPORTANCE.value
    weight_theta: Optional[float] = None
    weight_lambda: Optional[str] = None
    acceptance_id: str = "generalized"
    acceptance_f: Optional[str] = None
    iterations: int = 5000
    replications: int = 200
    seed: int = 0
    init: Optional[List[float]] = None
    statistics: List[str] = field(default_factory=lambda: ["accept_rate", "mean_alpha", "lag1_corr"])
    workers: Optional[int] = None
    output_path: Optional[str] = None
    key: Dict[str, str] = field(default_factory=dict)

    @property
    def total_tries(self) -> int:
        return sum(p.repeat for p in self.proposals)

    def build_target(self) -> TargetDensity:
        return make_target(self.target_id, **self.target_params)

    def build_proposals(self, dimension: int) -> List[ConditionalProposal]:
        proposals = []
        for spec in self.proposals:
            proposals.extend([spec.build(dimension)] * spec.repeat)
        return proposals

    def build_weight(self) -> WeightFunction:
        lam = lambda_from_text(self.weight_lambda) if self.weight_lambda else None
        return make_weight(self.weight_id, theta=self.weight_theta, lam=lam)

    def build_acceptance(self) -> AcceptanceRule:
        return parse_acceptance(self.acceptance_id, lam=self.weight_lambda, f=self.acceptance_f)

    def build_sampler_config(self, target: TargetDensity) -> SamplerConfig:
        if not self.proposals:
            raise ConfigError("At least one proposal is required")
        if self.tries is not None and self.tries != self.total_tries:
            raise ConfigError(f"Declared tries N={self.tries} but the proposals give {self.total_tries}")
        return SamplerConfig(self.build_proposals(target.dimension), self.build_weight(),
                             self.build_acceptance())

    def initial_state(self, target: TargetDensity) -> np.ndarray:
        if self.init is None:
            return default_init(target)
        return as_state(self.init, target.dimension)

    def effective_statistics(self, target: TargetDensity) -> List[str]:
        """Requested statistics minus those undefined for the target"""
        return [name for name in self.statistics
                if not (name == LAG1_CORR and not target.has_moments)
                and not (name == MODE_JUMP_RATE and target.components is None)]

    def key_columns(self) -> Dict[str, str]:
        key = {"technique": self.technique, "N": str(self.total_tries)}
        key.update(self.key)
        return key


@dataclass
class TableRow:
    """Key columns and aggregated statistic columns of one experiment"""
    key: Dict[str, str]
    stats: Dict[str, Optional[float]]

    def columns(self) -> List[str]:
        return list(self.key) + list(self.stats)


def resolve_workers(requested: Optional[int] = None, config_value: Optional[int] = None) -> int:
    """
    Worker count: explicit request, then configuration, then MTM_WORKERS, then 1.
    """
    for value in (requested, config_value):
        if value is not None:
            return max(1, int(value))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got '{env}'")
    return 1


def run_replication(cfg: ExperimentConfig, stream_id: int) -> RunSummary:
    """
    Run the chain of replication ``stream_id``.

    Every input is rebuilt from the configuration so the call is independent of
    the process it runs in.
    """
    target = cfg.build_target()
    sampler_cfg = cfg.build_sampler_config(target)
    sampler = MultipleTrySampler(sampler_cfg, target)
    rng = RngStream(cfg.seed, stream_id)
    trace = sampler.run(cfg.initial_state(target), cfg.iterations, rng, store_candidates=False)
    mode_fn = mode_index if target.components is not None else None
    return summarize_run(trace, cfg.effective_statistics(target), mode_fn=mode_fn,
                         groups=len(sampler_cfg.groups))


def run_replications(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[RunSummary]:
    """R replications in stream order, optionally across worker processes"""
    count = resolve_workers(workers, cfg.workers)
    tasks = [(cfg, r) for r in range(cfg.replications)]
    if count <= 1 or cfg.replications == 1:
        return [run_replication(c, r) for c, r in tasks]
    with Pool(processes=min(count, cfg.replications)) as pool:
        return pool.starmap(run_replication, tasks)


def check_experiment(cfg: ExperimentConfig) -> None:
    """Raise ConfigError unless the configuration validates"""
    is_valid, errors, warnings = ExperimentValidator(cfg).validate()
    for warning in warnings:
        logger.warning("%s: %s", cfg.name, warning)
    if not is_valid:
        raise ConfigError(f"Invalid experiment '{cfg.name}': " + "; ".join(errors))


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> TableRow:
    """
    Validate, run R replications and aggregate them into one row.

    Raises:
        ConfigError: Invalid configuration
    """
    check_experiment(cfg)
    logger.info("Running %s: %s N=%d, T=%d, R=%d", cfg.name, cfg.technique, cfg.total_tries,
                cfg.iterations, cfg.replications)
    summaries = run_replications(cfg, workers)
    summary = aggregate(summaries)
    return TableRow(key=cfg.key_columns(), stats=summary.as_row())


def normalize_rows(rows: Sequence[TableRow]) -> List[TableRow]:
    """Give every row the union of key and statistic columns, missing values as None"""
    key_names: List[str] = []
    stat_names: List[str] = []
    for row in rows:
        key_names.extend(k for k in row.key if k not in key_names)
        stat_names.extend(s for s in row.stats if s not in stat_names)
    return [TableRow(key={k: row.key.get(k, "") for k in key_names},
                     stats={s: row.stats.get(s) for s in stat_names}) for row in rows]


def run_experiments(configs: Sequence[ExperimentConfig], workers: Optional[int] = None) -> List[TableRow]:
    """Run several experiments and align their columns"""
    return normalize_rows([run_experiment(cfg, workers) for cfg in configs])


def sample_chain(cfg: ExperimentConfig, iterations: int, seed: Optional[int] = None):
    """Single chain of replication 0, candidates kept, for sample dumps"""
    target = cfg.build_target()
    sampler = MultipleTrySampler(cfg.build_sampler_config(target), target)
    rng = RngStream(cfg.seed if seed is None else seed, 0)
    return sampler.run(cfg.initial_state(target), iterations, rng, store_candidates=True)

