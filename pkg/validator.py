"""
Validator Module
Validates experiment configurations before any chain is run.
"""

from typing import List, Tuple

import numpy as np

from acceptance import AcceptanceForm, parse_acceptance
from diagnostics import LAG1_CORR, MODE_JUMP_RATE, NORMCONST_RECIP, STATISTICS
from model_zoo import (
    PROPOSAL_PARAMS, TARGETS, WEIGHT_PRESETS, WeightKind, default_init, lambda_from_text,
    make_proposal, make_target,
)
from sampling_model import ConfigError, SamplingError


class ExperimentValidator:
    """
    Validates one experiment configuration.
    """

    def __init__(self, config):
        """
        Initialize validator with an experiment configuration.

        Args:
            config: ExperimentConfig to validate
        """
        self.config = config
        self.errors = []
        self.warnings = []
        self._target = None

    def validate(self) -> Tuple[bool, List[str], List[str]]:
        """
        Perform comprehensive validation.

        Returns:
            Tuple of (is_valid, list_of_errors, list_of_warnings)
        """
        self.errors = []
        self.warnings = []
        self._target = None

        self._validate_run_settings()
        self._validate_target()
        self._validate_proposals()
        self._validate_weight()
        self._validate_acceptance()
        self._validate_statistics()
        self._validate_init()

        return (len(self.errors) == 0, self.errors, self.warnings)

    def _validate_run_settings(self):
        """Validate iteration, replication and seed settings"""
        cfg = self.config
        if cfg.iterations < 1:
            self.errors.append(f"Number of iterations must be at least 1, got {cfg.iterations}")
        if cfg.replications < 1:
            self.errors.append(f"Number of replications must be at least 1, got {cfg.replications}")
        elif cfg.replications < 20:
            self.warnings.append(f"Only {cfg.replications} replications - statistics will be noisy")
        if not 0 <= cfg.seed < 2 ** 64:
            self.errors.append(f"Seed must be a 64-bit unsigned integer, got {cfg.seed}")
        if cfg.workers is not None and cfg.workers < 1:
            self.errors.append(f"Worker count must be positive, got {cfg.workers}")

    def _validate_target(self):
        """Validate the target identifier and its parameters"""
        cfg = self.config
        if cfg.target_id not in TARGETS:
            self.errors.append(f"Unknown target '{cfg.target_id}' (valid: {', '.join(sorted(TARGETS))})")
            return
        try:
            self._target = make_target(cfg.target_id, **cfg.target_params)
        except SamplingError as e:
            self.errors.append(str(e))

    def _validate_proposals(self):
        """Validate proposal identifiers, parameters and the declared N"""
        cfg = self.config
        if not cfg.proposals:
            self.errors.append("No proposal defined")
            return
        dimension = self._target.dimension if self._target is not None else 1
        for i, spec in enumerate(cfg.proposals):
            if spec.proposal_id not in PROPOSAL_PARAMS:
                self.errors.append(f"Proposal {i}: unknown proposal '{spec.proposal_id}' "
                                   f"(valid: {', '.join(sorted(PROPOSAL_PARAMS))})")
                continue
            try:
                make_proposal(spec.proposal_id, dimension, **spec.params)
            except SamplingError as e:
                self.errors.append(f"Proposal {i}: {e}")

        if cfg.tries is not None and cfg.tries != cfg.total_tries:
            self.errors.append(f"Declared N={cfg.tries} but the proposals give {cfg.total_tries} tries")
        if cfg.total_tries > 1000:
            self.warnings.append(f"N={cfg.total_tries} tries per step - runs will be slow")

    def _validate_weight(self):
        """Validate the weight preset and its parameters"""
        cfg = self.config
        kind = WEIGHT_PRESETS.get(cfg.weight_id)
        if kind is None:
            self.errors.append(f"Unknown weight '{cfg.weight_id}' (valid: {', '.join(WEIGHT_PRESETS)})")
            return
        if kind == WeightKind.TARGET_POWER and (cfg.weight_theta is None or cfg.weight_theta <= 0):
            self.errors.append("Weight target_power needs a positive theta")
        if kind == WeightKind.LAMBDA_FORM and not cfg.weight_lambda:
            self.errors.append("Weight lambda_form needs a lambda")
        if cfg.weight_lambda:
            try:
                lambda_from_text(cfg.weight_lambda)
            except ConfigError as e:
                self.errors.append(str(e))
        if kind == WeightKind.INV_PROPOSAL:
            self.warnings.append("Weights 1/pi(y|x) favour unlikely candidates - expect low acceptance")

    def _validate_acceptance(self):
        """Validate the acceptance rule"""
        cfg = self.config
        try:
            rule = parse_acceptance(cfg.acceptance_id, lam=cfg.weight_lambda, f=cfg.acceptance_f)
        except ConfigError as e:
            self.errors.append(str(e))
            return
        if rule.form == AcceptanceForm.ALWAYS_ACCEPT:
            self.errors.append("Acceptance 'always' is a negative control and does not target p; "
                               "use it only in the balance oracle")
        if rule.form == AcceptanceForm.NOREF and cfg.total_tries > 5:
            independent = all(spec.proposal_id != "rw_gauss" for spec in cfg.proposals)
            if not independent:
                self.warnings.append(
                    f"No-reference acceptance with N={cfg.total_tries} random walk tries "
                    f"- acceptance collapses as N grows"
                )

    def _validate_statistics(self):
        """Validate requested statistics against the target"""
        cfg = self.config
        for name in cfg.statistics:
            if name not in STATISTICS:
                self.errors.append(f"Unknown statistic '{name}' (valid: {', '.join(STATISTICS)})")
        if NORMCONST_RECIP in cfg.statistics and cfg.weight_id != WeightKind.IMPORTANCE.value:
            self.errors.append("Normalizing constant estimates need importance weights")
        if self._target is None:
            return
        if LAG1_CORR in cfg.statistics and not self._target.has_moments:
            self.warnings.append(f"Target {self._target.name} has no finite moments - "
                                 f"correlation will be omitted")
        if MODE_JUMP_RATE in cfg.statistics and self._target.components is None:
            self.warnings.append(f"Target {self._target.name} has no mode decomposition - "
                                 f"mode jump rate will be omitted")

    def _validate_init(self):
        """Validate the initial state"""
        if self._target is None:
            return
        init = self.config.init
        point = default_init(self._target) if init is None else np.atleast_1d(np.asarray(init, dtype=float))
        if point.shape != (self._target.dimension,):
            self.errors.append(f"Initial state has {point.size} coordinates, "
                               f"target has {self._target.dimension}")
            return
        if not np.all(np.isfinite(point)):
            self.errors.append("Initial state must be finite")
            return
        if self._target.log_density(point) == -np.inf:
            self.errors.append(f"Initial state {point.tolist()} has zero target density")

    def print_validation_report(self):
        """Print a formatted validation report"""
        print("\n" + "=" * 70)
        print(f"VALIDATION REPORT: {self.config.name}")
        print("=" * 70)

        if not self.errors and not self.warnings:
            print("[OK] All validation checks passed!")
        else:
            if self.errors:
                print(f"\n[ERRORS] ({len(self.errors)}):")
                for i, error in enumerate(self.errors, 1):
                    print(f"  {i}. {error}")

            if self.warnings:
                print(f"\n[WARNINGS] ({len(self.warnings)}):")
                for i, warning in enumerate(self.warnings, 1):
                    print(f"  {i}. {warning}")

        print("=" * 70 + "\n")

        return len(self.errors) == 0
