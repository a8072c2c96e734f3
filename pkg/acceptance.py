"""
Multiple Try Metropolis - Acceptance Rules
Generalized, composed (beta x gamma) and no-reference acceptance probabilities.

The generalized rule is
    alpha = min[1, p(y) pi_k(x|y) / (p(x) pi_k(y|x)) * W_x / W_y]
where W_y is the normalized weight of the selected candidate and W_x the
normalized weight of the current state among the reference points.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit

from model_zoo import lambda_from_text, lambda_one
from sampling_model import (
    ConditionalProposal, ConfigError, ContractViolation, InvalidBetaError,
    TargetDensity, as_state,
)

# Tolerances on rounding
BETA_TOLERANCE = 1e-9
LAMBDA_SYMMETRY_TOLERANCE = 1e-12
WEIGHT_TOLERANCE = 1e-12


class BetaKind(Enum):
    """Built-in beta rules"""
    BETA1 = "beta1"
    BETA2 = "beta2"
    BETA3 = "beta3"
    BETA4 = "beta4"
    BETA5 = "beta5"
    BETA6 = "beta6"
    BETA7 = "beta7"
    GENERAL_F = "beta_general"


class GammaKind(Enum):
    """Built-in gamma rules"""
    GAMMA1 = "gamma1"
    GAMMA2 = "gamma2"
    GAMMA3 = "gamma3"


class AcceptanceForm(Enum):
    """How the acceptance probability of a step is computed"""
    GENERALIZED = "generalized"
    COMPOSED = "composed"
    NOREF = "noref"
    ALWAYS_ACCEPT = "always"


LAMBDA_BETAS = {BetaKind.BETA3, BetaKind.BETA4, BetaKind.BETA5, BetaKind.BETA6, BetaKind.BETA7}


@dataclass(frozen=True)
class AcceptanceFunction:
    """
    F: (0, inf) -> [0, 1] with F(t) = t F(1/t).

    Attributes:
        name: Identifier
        fn: F evaluated on t
        log_fn: Optional F evaluated on log t, used to avoid overflow
    """
    name: str
    fn: Callable[[float], float]
    log_fn: Optional[Callable[[float], float]] = None

    def __call__(self, theta: float) -> float:
        return float(self.fn(theta))

    def of_log_ratio(self, log_theta: float) -> float:
        """F(exp(log_theta))"""
        if self.log_fn is not None:
            return float(self.log_fn(log_theta))
        return float(self.fn(float(np.exp(log_theta))))


F_MIN = AcceptanceFunction("min", fn=lambda t: min(1.0, t),
                           log_fn=lambda lt: np.exp(min(0.0, lt)))
F_BARKER = AcceptanceFunction("barker", fn=lambda t: t / (1.0 + t), log_fn=expit)
ACCEPTANCE_FUNCTIONS = {F_MIN.name: F_MIN, F_BARKER.name: F_BARKER}


@dataclass(frozen=True)
class BetaRule:
    """
    Target-dependent factor beta(x, y) of a composed acceptance.

    Attributes:
        kind: Which rule
        lam: Symmetric non-negative lambda (beta3 to beta7)
        F: Acceptance function (GENERAL_F)
    """
    kind: BetaKind
    lam: Optional[Callable] = None
    F: Optional[AcceptanceFunction] = None

    def __post_init__(self):
        if self.kind == BetaKind.BETA3 and self.lam is None:
            object.__setattr__(self, "lam", lambda_one)
        if self.kind in LAMBDA_BETAS and self.lam is None:
            raise ConfigError(f"{self.kind.value} needs a lambda function")
        if self.kind == BetaKind.GENERAL_F and self.F is None:
            raise ConfigError("beta_general needs an acceptance function F")


@dataclass(frozen=True)
class GammaRule:
    """Weight-dependent factor gamma(W_x, W_y) of a composed acceptance"""
    kind: GammaKind


@dataclass(frozen=True)
class AcceptanceRule:
    """
    Complete acceptance rule of a sampler.

    Attributes:
        form: Generalized, composed, no-reference or the always-accept control
        beta: Required for the composed form
        gamma: Required for the composed form
    """
    form: AcceptanceForm
    beta: Optional[BetaRule] = None
    gamma: Optional[GammaRule] = None

    def __post_init__(self):
        composed = self.form == AcceptanceForm.COMPOSED
        if composed and (self.beta is None or self.gamma is None):
            raise ConfigError("Composed acceptance needs both a beta and a gamma rule")
        if not composed and (self.beta is not None or self.gamma is not None):
            raise ConfigError(f"Form {self.form.value} takes no beta or gamma rule")

    @property
    def identifier(self) -> str:
        if self.form == AcceptanceForm.COMPOSED:
            return f"{self.beta.kind.value}_{self.gamma.kind.value}"
        return self.form.value

    @property
    def draws_references(self) -> bool:
        return self.form in (AcceptanceForm.GENERALIZED, AcceptanceForm.COMPOSED)


GENERALIZED = AcceptanceRule(AcceptanceForm.GENERALIZED)
NOREF = AcceptanceRule(AcceptanceForm.NOREF)
ALWAYS_ACCEPT = AcceptanceRule(AcceptanceForm.ALWAYS_ACCEPT)


def composed(beta: BetaKind, gamma: GammaKind, lam: Optional[Callable] = None,
             F: Optional[AcceptanceFunction] = None) -> AcceptanceRule:
    """Shorthand for a composed beta x gamma rule"""
    return AcceptanceRule(AcceptanceForm.COMPOSED, BetaRule(beta, lam=lam, F=F), GammaRule(gamma))


def parse_acceptance(text: str, lam: Optional[str] = None, f: Optional[str] = None) -> AcceptanceRule:
    """
    Parse ``generalized``, ``noref``, ``always`` or ``beta<i>_gamma<j>``.

    Args:
        text: Acceptance identifier
        lam: Lambda identifier for beta3 to beta7 (default ``one`` for beta3)
        f: Acceptance function of beta_general, ``min`` or ``barker`` (default)

    Raises:
        ConfigError: Unknown identifier, unknown F, or F given to another rule
    """
    text = text.strip().lower()
    if f is not None and not text.startswith(BetaKind.GENERAL_F.value):
        raise ConfigError(f"An acceptance function only applies to {BetaKind.GENERAL_F.value}, got '{text}'")
    for form in (AcceptanceForm.GENERALIZED, AcceptanceForm.NOREF, AcceptanceForm.ALWAYS_ACCEPT):
        if text == form.value:
            return AcceptanceRule(form)

    valid = ["generalized", "noref", "always"] + [
        f"{b.value}_{g.value}" for b in BetaKind if b != BetaKind.GENERAL_F for g in GammaKind
    ] + [f"beta_general_{g.value}" for g in GammaKind]
    beta_text, _, gamma_text = text.rpartition("_")
    try:
        beta_kind = BetaKind(beta_text)
        gamma_kind = GammaKind(gamma_text)
    except ValueError:
        raise ConfigError(f"Unknown acceptance '{text}'", valid_ids=valid)

    lam_fn = lambda_from_text(lam) if lam else None
    F = None
    if beta_kind == BetaKind.GENERAL_F:
        f_name = (f or F_BARKER.name).strip().lower()
        if f_name not in ACCEPTANCE_FUNCTIONS:
            raise ConfigError(f"Unknown acceptance function '{f}'", valid_ids=list(ACCEPTANCE_FUNCTIONS))
        F = ACCEPTANCE_FUNCTIONS[f_name]
    return composed(beta_kind, gamma_kind, lam=lam_fn, F=F)


def describe(rule: AcceptanceRule) -> str:
    """Human-readable description of an acceptance rule"""
    if rule.form == AcceptanceForm.GENERALIZED:
        return "generalized: min[1, R * W_x / W_y]"
    if rule.form == AcceptanceForm.NOREF:
        return "no reference points: min[1, R * prod pi_i(y_i|y) / prod pi_i(y_i|x) * W_x / W_y]"
    if rule.form == AcceptanceForm.ALWAYS_ACCEPT:
        return "always accept (negative control, not reversible)"
    extra = ""
    if rule.beta.kind == BetaKind.GENERAL_F:
        extra = f" with F={rule.beta.F.name}"
    return f"composed: {rule.beta.kind.value} x {rule.gamma.kind.value}{extra}"


# ============================================================================
# Log-space building blocks shared with the samplers
# ============================================================================

def log_mh_ratio(target: TargetDensity, prop: ConditionalProposal, x: np.ndarray, y: np.ndarray,
                 log_px: float, log_py: float) -> float:
    """log [p(y) pi(x|y) / (p(x) pi(y|x))]; -inf when p(y) = 0"""
    if log_py == -np.inf:
        return -np.inf
    log_back = prop.log_cond(x, y)
    if log_back == -np.inf:
        return -np.inf
    return log_py + log_back - log_px - prop.log_cond(y, x)


def clamp_log_alpha(log_alpha: float) -> float:
    """exp(min(0, log_alpha)); NaN and -inf map to 0"""
    if np.isnan(log_alpha) or log_alpha == -np.inf:
        return 0.0
    return float(np.exp(min(0.0, log_alpha)))


def generalized_log_alpha(log_ratio: float, log_w_x: float, log_w_y: float) -> float:
    """log of R * W_x / W_y before clamping"""
    if log_ratio == -np.inf or log_w_x == -np.inf:
        return -np.inf
    return log_ratio + log_w_x - log_w_y


def noref_log_alpha(log_ratio: float, log_aux_ratio: float, log_w_x: float, log_w_y: float) -> float:
    """Generalized log-ratio times the auxiliary candidate density ratio"""
    if log_aux_ratio == -np.inf:
        return -np.inf
    return generalized_log_alpha(log_ratio, log_w_x, log_w_y) + log_aux_ratio


def auxiliary_log_ratio(log_back: np.ndarray, log_forth: np.ndarray, k: int) -> float:
    """
    sum over i != k of log pi_i(y_i|y) - log pi_i(y_i|x).

    For independent proposals each term is exactly zero.
    """
    back = np.delete(np.asarray(log_back, dtype=float), k)
    forth = np.delete(np.asarray(log_forth, dtype=float), k)
    if np.any(back == -np.inf):
        return -np.inf
    return float(np.sum(back - forth))


def _check_states(target, x, y):
    x = as_state(x, target.dimension)
    y = as_state(y, target.dimension)
    log_px = target.log_density(x)
    if log_px == -np.inf:
        raise ContractViolation(f"Current state {x} has zero target density")
    return x, y, log_px, target.log_density(y)


def _check_weights(W_x: float, W_y: float) -> None:
    for name, value in (("W_x", W_x), ("W_y", W_y)):
        if not (0.0 <= value <= 1.0 + WEIGHT_TOLERANCE):
            raise ContractViolation(f"{name} must lie in [0, 1], got {value}")
    if W_y <= 0.0:
        raise ContractViolation("The selected candidate must have positive weight (W_y > 0)")


# ============================================================================
# Public acceptance operations
# ============================================================================

def eval_beta(rule: BetaRule, x, y, target: TargetDensity, prop_k: ConditionalProposal) -> float:
    """
    Evaluate beta(x, y) in [0, 1].

    Raises:
        ContractViolation: p(x) = 0
        InvalidBetaError: Value outside [0, 1 + 1e-9] or asymmetric lambda
    """
    x, y, log_px, log_py = _check_states(target, x, y)
    if log_py == -np.inf:
        return 0.0
    log_forth = log_px + prop_k.log_cond(y, x)
    log_back = log_py + prop_k.log_cond(x, y)
    log_ratio = log_back - log_forth

    log_lam = 0.0
    if rule.lam is not None and rule.kind in LAMBDA_BETAS:
        lam_xy = float(rule.lam(x, y))
        lam_yx = float(rule.lam(y, x))
        if lam_xy < 0 or abs(lam_xy - lam_yx) > LAMBDA_SYMMETRY_TOLERANCE * max(1.0, abs(lam_xy)):
            raise InvalidBetaError(f"Lambda must be symmetric and non-negative: "
                                   f"lambda(x,y)={lam_xy}, lambda(y,x)={lam_yx}")
        with np.errstate(divide="ignore"):
            log_lam = float(np.log(lam_xy))

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if rule.kind == BetaKind.BETA1:
            value = np.exp(min(0.0, log_ratio))
        elif rule.kind == BetaKind.BETA2:
            value = expit(log_ratio)
        elif rule.kind == BetaKind.BETA3:
            value = np.exp(log_lam) * expit(log_ratio)
        elif rule.kind == BetaKind.BETA4:
            value = np.exp(log_back - log_lam)
        elif rule.kind == BetaKind.BETA5:
            value = np.exp(log_lam - log_forth)
        elif rule.kind == BetaKind.BETA6:
            value = np.exp(log_py + log_lam - prop_k.log_cond(y, x))
        elif rule.kind == BetaKind.BETA7:
            value = np.exp(prop_k.log_cond(x, y) + log_lam - log_px)
        else:
            value = rule.F.of_log_ratio(log_ratio)

    value = float(value)
    if np.isnan(value) or value < 0.0 or value > 1.0 + BETA_TOLERANCE:
        raise InvalidBetaError(f"{rule.kind.value} evaluated to {value}, outside [0, 1]")
    return min(value, 1.0)


def eval_gamma(rule: GammaRule, W_x: float, W_y: float) -> float:
    """
    Evaluate gamma(W_x, W_y) in [0, 1].

    Raises:
        ContractViolation: W_y = 0 or a weight outside [0, 1]
    """
    _check_weights(W_x, W_y)
    if rule.kind == GammaKind.GAMMA1:
        return float(min(W_x, 1.0))
    if rule.kind == GammaKind.GAMMA2:
        return float(W_x / (W_x + W_y))
    return float(min(1.0, W_x / W_y))


def alpha_generalized(x, y, k: int, W_x: float, W_y: float,
                      target: TargetDensity, prop_k: ConditionalProposal) -> float:
    """
    min[1, p(y) pi_k(x|y) / (p(x) pi_k(y|x)) * W_x / W_y].

    Raises:
        ContractViolation: W_y = 0 or p(x) = 0
    """
    _check_weights(W_x, W_y)
    x, y, log_px, log_py = _check_states(target, x, y)
    log_ratio = log_mh_ratio(target, prop_k, x, y, log_px, log_py)
    with np.errstate(divide="ignore"):
        log_w_x = float(np.log(W_x))
    return clamp_log_alpha(generalized_log_alpha(log_ratio, log_w_x, float(np.log(W_y))))


def alpha_composed(rule: AcceptanceRule, x, y, W_x: float, W_y: float,
                   target: TargetDensity, prop_k: ConditionalProposal) -> float:
    """beta(x, y) * gamma(W_x, W_y)"""
    if rule.form != AcceptanceForm.COMPOSED:
        raise ContractViolation(f"Rule {rule.identifier} is not a composed rule")
    gamma = eval_gamma(rule.gamma, W_x, W_y)
    if gamma == 0.0:
        return 0.0
    return eval_beta(rule.beta, x, y, target, prop_k) * gamma


def alpha_noref(x, y, k: int, candidates: np.ndarray, W_x: float, W_y: float,
                target: TargetDensity, proposals: Sequence[ConditionalProposal]) -> float:
    """
    Acceptance probability when the other candidates double as reference points.

    Args:
        candidates: All N candidates, shape (N, d); candidates[k] is y
        proposals: The N proposals in candidate order
    """
    _check_weights(W_x, W_y)
    x, y, log_px, log_py = _check_states(target, x, y)
    cands = np.asarray(candidates, dtype=float).reshape(len(proposals), target.dimension)
    log_ratio = log_mh_ratio(target, proposals[k], x, y, log_px, log_py)
    log_back = np.array([proposals[i].log_cond(cands[i], y) for i in range(len(proposals))])
    log_forth = np.array([proposals[i].log_cond(cands[i], x) for i in range(len(proposals))])
    log_aux = auxiliary_log_ratio(log_back, log_forth, k)
    with np.errstate(divide="ignore"):
        log_w_x = float(np.log(W_x))
    return clamp_log_alpha(noref_log_alpha(log_ratio, log_aux, log_w_x, float(np.log(W_y))))


def acceptance_probability(rule: AcceptanceRule, x, y, k: int, candidates: np.ndarray,
                           W_x: float, W_y: float, target: TargetDensity,
                           proposals: Sequence[ConditionalProposal]) -> float:
    """Dispatch on the rule form"""
    if rule.form == AcceptanceForm.GENERALIZED:
        return alpha_generalized(x, y, k, W_x, W_y, target, proposals[k])
    if rule.form == AcceptanceForm.COMPOSED:
        return alpha_composed(rule, x, y, W_x, W_y, target, proposals[k])
    if rule.form == AcceptanceForm.NOREF:
        return alpha_noref(x, y, k, candidates, W_x, W_y, target, proposals)
    return 1.0
