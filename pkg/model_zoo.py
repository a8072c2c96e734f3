"""
Multiple Try Metropolis - Model Zoo
Built-in targets, proposals, lambda functions and weight presets, together with
the registries used to build them from configuration identifiers.
"""

import re
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from sampling_model import ConditionalProposal, ConfigError, ContractViolation, TargetDensity, WeightFunction

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

# Smiling face: (mean_1, mean_2, std_1, std_2) of the two eyes and the nose
SMILE_GAUSSIANS: Tuple[Tuple[float, float, float, float], ...] = (
    (-7.0, 35.0, 2.0, 2.0),
    (7.0, 35.0, 2.0, 2.0),
    (0.0, 23.0, 1.0, 4.0),
)
BANANA_ETA = 144.5
BANANA_RHO = 0.08
SMILE_COMPONENTS = 4


# ============================================================================
# Target log-densities
# ============================================================================

def bimodal_logpdf(x: np.ndarray) -> np.ndarray:
    """log p(x) = -(x^2 - 4)^2 / 4, modes at -2 and 2"""
    x = np.asarray(x, dtype=float)
    return -((x ** 2 - 4.0) ** 2) / 4.0


def levy_logpdf(x: np.ndarray, eta: float = 0.0, nu: float = 2.0) -> np.ndarray:
    """Unnormalized Levy log-density, -inf for x <= eta"""
    if nu <= 0:
        raise ContractViolation(f"Levy scale nu must be positive, got {nu}")
    z = np.asarray(x, dtype=float) - eta
    out = np.full(z.shape, -np.inf)
    inside = z > 0
    out[inside] = -1.5 * np.log(z[inside]) - nu / (2.0 * z[inside])
    return out


def smiling_face_component_logpdfs(x: np.ndarray) -> np.ndarray:
    """
    Unnormalized log-densities of the four smiling face components.

    Args:
        x: Points of shape (..., 2)

    Returns:
        Array of shape (..., 4): left eye, right eye, nose, mouth
    """
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    parts = []
    for m1, m2, s1, s2 in SMILE_GAUSSIANS:
        parts.append(-((x1 - m1) ** 2) / (2 * s1 ** 2) - ((x2 - m2) ** 2) / (2 * s2 ** 2))
    banana = -(x1 ** 2) / BANANA_ETA - ((x1 - BANANA_RHO * x2 ** 2 + 100.0 * BANANA_RHO) ** 2) / 2.0
    parts.append(banana)
    return np.stack(parts, axis=-1)


def smiling_face_logpdf(x: np.ndarray) -> np.ndarray:
    """Equal-weight mixture of the four components"""
    return logsumexp(smiling_face_component_logpdfs(x), axis=-1) - np.log(SMILE_COMPONENTS)


def mode_index(x: np.ndarray) -> Union[int, np.ndarray]:
    """
    Index in 1..4 of the component with the largest value at x.

    Ties resolve to the lowest index.
    """
    comps = smiling_face_component_logpdfs(x)
    idx = np.argmax(comps, axis=-1) + 1
    return int(idx) if np.ndim(idx) == 0 else idx


def _levy_support(pts: np.ndarray, eta: float) -> np.ndarray:
    return pts[:, 0] > eta


def bimodal_target() -> TargetDensity:
    """One-dimensional bimodal target"""
    return TargetDensity(name="bimodal", dimension=1,
                         log_fn=lambda pts: bimodal_logpdf(pts[:, 0]))


def levy_target(eta: float = 0.0, nu: float = 2.0) -> TargetDensity:
    """Heavy-tailed Levy target with location eta and scale nu"""
    if nu <= 0:
        raise ConfigError(f"Levy scale nu must be positive, got {nu}")
    return TargetDensity(name="levy", dimension=1,
                         log_fn=partial(_levy_on_batch, eta=float(eta), nu=float(nu)),
                         support=partial(_levy_support, eta=float(eta)),
                         has_moments=False)


def _levy_on_batch(pts: np.ndarray, eta: float, nu: float) -> np.ndarray:
    return levy_logpdf(pts[:, 0], eta, nu)


def smiling_face_target() -> TargetDensity:
    """Two-dimensional four-mode smiling face target"""
    return TargetDensity(name="smiling_face", dimension=2,
                         log_fn=smiling_face_logpdf,
                         components=smiling_face_component_logpdfs)


TARGETS: Dict[str, Callable[..., TargetDensity]] = {
    "bimodal": bimodal_target,
    "levy": levy_target,
    "smiling_face": smiling_face_target,
}

# Parameters accepted by each target builder, in positional order
TARGET_PARAMS: Dict[str, Tuple[str, ...]] = {
    "bimodal": (),
    "levy": ("eta", "nu"),
    "smiling_face": (),
}


def make_target(target_id: str, **params) -> TargetDensity:
    """
    Build a registered target.

    Raises:
        ConfigError: Unknown identifier or parameter
    """
    if target_id not in TARGETS:
        raise ConfigError(f"Unknown target '{target_id}'", valid_ids=sorted(TARGETS))
    unknown = set(params) - set(TARGET_PARAMS[target_id])
    if unknown:
        raise ConfigError(f"Unknown parameters for target '{target_id}': {sorted(unknown)}",
                          valid_ids=TARGET_PARAMS[target_id])
    return TARGETS[target_id](**{k: float(v) for k, v in params.items()})


def default_init(target: TargetDensity) -> np.ndarray:
    """Default initial state: eta + nu for Levy targets, the origin otherwise"""
    if target.name == "levy":
        eta = target.log_fn.keywords["eta"]
        nu = target.log_fn.keywords["nu"]
        return np.array([eta + nu])
    return np.zeros(target.dimension)


# ============================================================================
# Proposals
# ============================================================================

@dataclass(frozen=True)
class GaussianRandomWalk(ConditionalProposal):
    """Isotropic Gaussian random walk N(x, sigma^2 I)"""
    sigma: float
    dimension: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"Random walk sigma must be positive, got {self.sigma}")
        if self.dimension < 1:
            raise ConfigError(f"Dimension must be positive, got {self.dimension}")

    @property
    def label(self) -> str:
        return f"rw_gauss({self.sigma:g})"

    def _draw(self, x, rng, size):
        return x + self.sigma * rng.normal((size, self.dimension))

    def _log_cond(self, ys, xs):
        z = (ys - xs) / self.sigma
        return -0.5 * np.sum(z ** 2, axis=1) - self.dimension * (np.log(self.sigma) + LOG_SQRT_2PI)


@dataclass(frozen=True)
class IndependentGaussian(ConditionalProposal):
    """Independent Gaussian N(mu, sigma^2 I), ignores the current state"""
    mu: Tuple[float, ...]
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in np.atleast_1d(self.mu)))
        if not self.sigma > 0:
            raise ConfigError(f"Independent proposal sigma must be positive, got {self.sigma}")

    @property
    def dimension(self) -> int:
        return len(self.mu)

    @property
    def is_independent(self) -> bool:
        return True

    @property
    def label(self) -> str:
        center = " ".join(f"{m:g}" for m in self.mu)
        return f"ind_gauss([{center}],{self.sigma:g})"

    def _draw(self, x, rng, size):
        return np.asarray(self.mu) + self.sigma * rng.normal((size, self.dimension))

    def _log_cond(self, ys, xs):
        z = (ys - np.asarray(self.mu)) / self.sigma
        values = -0.5 * np.sum(z ** 2, axis=1) - self.dimension * (np.log(self.sigma) + LOG_SQRT_2PI)
        return np.broadcast_to(values, (max(ys.shape[0], xs.shape[0]),))


@dataclass(frozen=True)
class UniformIndependent(ConditionalProposal):
    """Independent uniform on [low, high] in one dimension"""
    low: float
    high: float
    dimension: int = 1

    def __post_init__(self):
        if not self.high > self.low:
            raise ConfigError(f"Uniform proposal needs low < high, got [{self.low}, {self.high}]")

    @property
    def is_independent(self) -> bool:
        return True

    @property
    def label(self) -> str:
        return f"uniform({self.low:g},{self.high:g})"

    def _draw(self, x, rng, size):
        return rng.uniform_array(self.low, self.high, (size, self.dimension))

    def _log_cond(self, ys, xs):
        inside = np.all((ys >= self.low) & (ys <= self.high), axis=1)
        values = np.where(inside, -self.dimension * np.log(self.high - self.low), -np.inf)
        return np.broadcast_to(values, (max(ys.shape[0], xs.shape[0]),))


PROPOSALS: Dict[str, Callable[..., ConditionalProposal]] = {
    "rw_gauss": GaussianRandomWalk,
    "ind_gauss": IndependentGaussian,
    "uniform": UniformIndependent,
}

PROPOSAL_PARAMS: Dict[str, Tuple[str, ...]] = {
    "rw_gauss": ("sigma",),
    "ind_gauss": ("mu", "sigma"),
    "uniform": ("low", "high"),
}


def make_proposal(proposal_id: str, dimension: int = 1, **params) -> ConditionalProposal:
    """
    Build a registered proposal for a target of the given dimension.

    A scalar ``mu`` is repeated across coordinates.

    Raises:
        ConfigError: Unknown identifier, missing or unknown parameter
    """
    if proposal_id not in PROPOSALS:
        raise ConfigError(f"Unknown proposal '{proposal_id}'", valid_ids=sorted(PROPOSALS))
    expected = PROPOSAL_PARAMS[proposal_id]
    missing = [name for name in expected if name not in params]
    unknown = set(params) - set(expected)
    if missing or unknown:
        raise ConfigError(f"Proposal '{proposal_id}' expects parameters {list(expected)}, "
                          f"got {sorted(params)}")
    if proposal_id == "rw_gauss":
        return GaussianRandomWalk(sigma=float(params["sigma"]), dimension=dimension)
    if proposal_id == "ind_gauss":
        mu = np.atleast_1d(np.asarray(params["mu"], dtype=float))
        if mu.size == 1:
            mu = np.repeat(mu, dimension)
        if mu.size != dimension:
            raise ConfigError(f"Proposal mean has {mu.size} coordinates, target has {dimension}")
        return IndependentGaussian(mu=tuple(mu), sigma=float(params["sigma"]))
    if dimension != 1:
        raise ConfigError("Uniform proposal is only available in one dimension")
    return UniformIndependent(low=float(params["low"]), high=float(params["high"]))


_CALL_PATTERN = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_call(text: str) -> Tuple[str, List[str]]:
    """
    Split an identifier like ``ind_gauss([-7 35],10)`` into name and arguments.

    Brackets group vector arguments; their content is space separated.
    """
    match = _CALL_PATTERN.match(text)
    if not match:
        raise ConfigError(f"Cannot parse '{text}'")
    name, inner = match.group(1), match.group(2)
    if inner is None or not inner.strip():
        return name, []
    args, depth, current = [], 0, ""
    for char in inner:
        if char == "[":
            depth += 1
        elif char == "]":
            depth -= 1
        if char == "," and depth == 0:
            args.append(current.strip())
            current = ""
        else:
            current += char
    args.append(current.strip())
    return name, args


def parse_number_or_vector(text: str) -> Union[float, Tuple[float, ...]]:
    """Parse ``2.5`` or ``[-7 35]``"""
    text = text.strip()
    try:
        if text.startswith("["):
            return tuple(float(v) for v in text.strip("[]").split())
        return float(text)
    except ValueError:
        raise ConfigError(f"Invalid numeric value '{text}'")


def proposal_from_text(text: str, dimension: int = 1) -> ConditionalProposal:
    """Build a proposal from ``rw_gauss(2)``, ``ind_gauss(0,10)`` or ``uniform(-5,5)``"""
    name, args = parse_call(text)
    if name not in PROPOSAL_PARAMS:
        raise ConfigError(f"Unknown proposal '{name}'", valid_ids=sorted(PROPOSALS))
    expected = PROPOSAL_PARAMS[name]
    if len(args) != len(expected):
        raise ConfigError(f"Proposal '{name}' expects {len(expected)} arguments, got {len(args)}")
    params = {key: parse_number_or_vector(arg) for key, arg in zip(expected, args)}
    return make_proposal(name, dimension, **params)


# ============================================================================
# Lambda functions (non-negative, symmetric)
# ============================================================================

@dataclass(frozen=True)
class ConstantLambda:
    """lambda(x, y) = value"""
    value: float = 1.0

    def __post_init__(self):
        if self.value < 0:
            raise ConfigError(f"Lambda must be non-negative, got {self.value}")

    def __call__(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
        return np.full(shape, self.value) if shape else self.value


@dataclass(frozen=True)
class InverseDistanceLambda:
    """lambda(x, y) = scale / (1 + ||x - y||)"""
    scale: float = 1.0

    def __call__(self, x, y):
        diff = np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(np.asarray(y, dtype=float))
        return self.scale / (1.0 + np.sqrt(np.sum(diff ** 2, axis=-1)))


lambda_one = ConstantLambda(1.0)


def lambda_inverse_distance(c: float) -> InverseDistanceLambda:
    """Symmetric lambda decaying with the distance between its arguments"""
    if c <= 0:
        raise ConfigError(f"Lambda scale must be positive, got {c}")
    return InverseDistanceLambda(float(c))


LAMBDAS: Dict[str, Callable[..., Callable]] = {
    "one": lambda: lambda_one,
    "const": lambda c: ConstantLambda(float(c)),
    "inv_dist": lambda c: lambda_inverse_distance(float(c)),
}


def lambda_from_text(text: str) -> Callable:
    """Build a lambda from ``one``, ``const(0.2)`` or ``inv_dist(2)``"""
    name, args = parse_call(text)
    if name not in LAMBDAS:
        raise ConfigError(f"Unknown lambda '{name}'", valid_ids=sorted(LAMBDAS))
    try:
        return LAMBDAS[name](*[float(a) for a in args])
    except TypeError:
        raise ConfigError(f"Wrong number of arguments for lambda '{name}'")


# ============================================================================
# Weight presets
# ============================================================================

class WeightKind(Enum):
    """Built-in selection weights"""
    IMPORTANCE = "importance"
    TARGET = "target"
    CONSTANT = "constant"
    SQRT_TARGET = "sqrt_target"
    TARGET_SQ = "target_sq"
    TARGET_CUBE = "target_cube"
    REVERSE_PROPOSAL = "reverse_proposal"
    INV_PROPOSAL = "inv_proposal"
    TARGET_TIMES_REVERSE = "target_times_reverse"
    LAMBDA_FORM = "lambda_form"
    TARGET_POWER = "target_power"


# Presets that depend on the candidate only
CANDIDATE_ONLY_WEIGHTS = {
    WeightKind.TARGET, WeightKind.CONSTANT, WeightKind.SQRT_TARGET,
    WeightKind.TARGET_SQ, WeightKind.TARGET_CUBE, WeightKind.TARGET_POWER,
}

_TARGET_EXPONENTS = {
    WeightKind.TARGET: 1.0,
    WeightKind.SQRT_TARGET: 0.5,
    WeightKind.TARGET_SQ: 2.0,
    WeightKind.TARGET_CUBE: 3.0,
}

WEIGHT_PRESETS: Dict[str, WeightKind] = {kind.value: kind for kind in WeightKind}


def _require(target, proposal, label):
    if target is None or proposal is None:
        raise ContractViolation(f"Weight {label} needs the target and the proposal")


def _importance(cands, cond, target, proposal):
    _require(target, proposal, "importance")
    return target.log_density(cands) - proposal.log_cond(cands, cond)


def _target_power(cands, cond, target, proposal, theta):
    if target is None:
        raise ContractViolation("Target power weights need the target")
    log_p = target.log_density(cands)
    return np.where(np.isneginf(log_p), -np.inf, theta * log_p)


def _constant(cands, cond, target, proposal):
    return np.zeros(cands.shape[0])


def _reverse_proposal(cands, cond, target, proposal):
    _require(target, proposal, "reverse_proposal")
    return proposal.log_cond(cond, cands)


def _inv_proposal(cands, cond, target, proposal):
    _require(target, proposal, "inv_proposal")
    return -proposal.log_cond(cands, cond)


def _target_times_reverse(cands, cond, target, proposal):
    _require(target, proposal, "target_times_reverse")
    return target.log_density(cands) + proposal.log_cond(cond, cands)


def _lambda_form(cands, cond, target, proposal, lam):
    _require(target, proposal, "lambda_form")
    lam_values = np.asarray(lam(cond, cands), dtype=float)
    if np.any(lam_values < 0):
        raise ContractViolation("Lambda must be non-negative")
    return target.log_density(cands) + proposal.log_cond(cond, cands) + np.log(lam_values)


def make_weight(kind: Union[WeightKind, str], theta: Optional[float] = None,
                lam: Optional[Callable] = None) -> WeightFunction:
    """
    Build a weight preset.

    Args:
        kind: WeightKind or its string value
        theta: Exponent for TARGET_POWER
        lam: Symmetric non-negative lambda for LAMBDA_FORM

    Raises:
        ConfigError: Unknown kind or missing parameter
    """
    if not isinstance(kind, WeightKind):
        if kind not in WEIGHT_PRESETS:
            raise ConfigError(f"Unknown weight '{kind}'", valid_ids=list(WEIGHT_PRESETS))
        kind = WEIGHT_PRESETS[kind]

    uses_condition = kind not in CANDIDATE_ONLY_WEIGHTS
    if kind in _TARGET_EXPONENTS:
        fn = partial(_target_power, theta=_TARGET_EXPONENTS[kind])
    elif kind == WeightKind.TARGET_POWER:
        if theta is None or not theta > 0:
            raise ConfigError(f"Target power weights need a positive theta, got {theta}")
        fn = partial(_target_power, theta=float(theta))
    elif kind == WeightKind.LAMBDA_FORM:
        if lam is None:
            raise ConfigError("Lambda-form weights need a lambda function")
        fn = partial(_lambda_form, lam=lam)
    else:
        fn = {
            WeightKind.IMPORTANCE: _importance,
            WeightKind.CONSTANT: _constant,
            WeightKind.REVERSE_PROPOSAL: _reverse_proposal,
            WeightKind.INV_PROPOSAL: _inv_proposal,
            WeightKind.TARGET_TIMES_REVERSE: _target_times_reverse,
        }[kind]
    return WeightFunction(label=kind.value, log_fn=fn, uses_condition=uses_condition)


# ============================================================================
# Reference normalizing constants
# ============================================================================

def bimodal_normalizer() -> float:
    """Integral of exp(bimodal_logpdf) over the real line"""
    value, _ = integrate.quad(lambda x: np.exp(bimodal_logpdf(x)), -10.0, 10.0,
                              epsabs=1e-12, epsrel=1e-10, limit=200)
    return float(value)


def levy_normalizer(eta: float = 0.0, nu: float = 2.0, upper: float = 1e6) -> float:
    """
    Integral of exp(levy_logpdf) over (eta, inf).

    Log-spaced panels up to eta + upper, then the remaining tail.
    The exact value is sqrt(2 pi / nu).
    """
    def density(x):
        return float(np.exp(levy_logpdf(np.array([x]), eta, nu)[0]))

    edges = eta + np.logspace(-8, np.log10(upper), 57)
    total = 0.0
    for a, b in zip(np.concatenate([[eta], edges[:-1]]), edges):
        part, _ = integrate.quad(density, a, b, epsabs=1e-14, epsrel=1e-10, limit=200)
        total += part
    tail, _ = integrate.quad(density, eta + upper, np.inf, epsabs=1e-14, epsrel=1e-10, limit=200)
    return float(total + tail)


def levy_normalizer_exact(nu: float = 2.0) -> float:
    """Closed form sqrt(2 pi / nu)"""
    return float(np.sqrt(2.0 * np.pi / nu))


def proposal_mass(prop: ConditionalProposal, x: float, half_width: float) -> float:
    """Integral of pi(y|x) over [x - half_width, x + half_width] (one dimension)"""
    if prop.dimension != 1:
        raise ContractViolation("Proposal mass is only computed in one dimension")
    center = float(np.mean(prop.mu)) if isinstance(prop, IndependentGaussian) else float(x)
    if isinstance(prop, UniformIndependent):
        lo, hi = prop.low, prop.high
    else:
        lo, hi = center - half_width, center + half_width
    value, _ = integrate.quad(lambda y: np.exp(prop.log_cond(np.array([y]), np.array([x]))),
                              lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)
    return float(value)

