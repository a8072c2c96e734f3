"""
Table Scenarios
Experiment configurations reproducing the published result tables, and the
manifest they are checked against before running.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

from data_manager import MANIFEST_NAME, DataManager
from harness import ExperimentConfig, ProposalSpec, TableRow, run_experiments
from sampling_model import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_REPLICATIONS = 200
DEFAULT_ITERATIONS = 5000
SHORT_ITERATIONS = 500
MANIFEST_PATH = Path(__file__).resolve().parent / "scenarios" / MANIFEST_NAME

CORE_STATISTICS = ["accept_rate", "mean_alpha", "lag1_corr"]

# Weight presets compared at N=100, in reporting order
TABLE4_WEIGHTS = [
    ("importance", "p(y)/pi(y|x)"),
    ("target", "p(y)"),
    ("constant", "1"),
    ("sqrt_target", "p(y)^0.5"),
    ("target_sq", "p(y)^2"),
    ("target_cube", "p(y)^3"),
    ("reverse_proposal", "pi(x|y)"),
    ("inv_proposal", "1/pi(y|x)"),
    ("target_times_reverse", "p(y)pi(x|y)"),
]
COMPOSED_RULES = ["beta1_gamma1", "beta1_gamma2", "beta1_gamma3", "beta2_gamma3"]


def _bimodal(name: str, technique: str, proposals: List[ProposalSpec], replications: int,
             seed: int, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig(name=name, technique=technique, target_id="bimodal", proposals=proposals,
                           tries=sum(p.repeat for p in proposals), iterations=DEFAULT_ITERATIONS,
                           replications=replications, seed=seed, init=[0.0],
                           statistics=list(CORE_STATISTICS))
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def _rw(sigma: float, tries: int) -> List[ProposalSpec]:
    return [ProposalSpec("rw_gauss", {"sigma": sigma}, tries)]


def _tries_sweep(table_id: str, sigma: float, replications: int, seed: int) -> List[ExperimentConfig]:
    configs = [_bimodal(f"{table_id}_mh", "MH", _rw(sigma, 1), replications, seed)]
    for n in (2, 5, 100, 1000):
        configs.append(_bimodal(f"{table_id}_mtm_rw_{n}", "MTM-rw", _rw(sigma, n), replications, seed))
    for n in (2, 5, 100, 1000):
        configs.append(_bimodal(f"{table_id}_noref_{n}", "MTM-without", _rw(sigma, n), replications,
                                seed, acceptance_id="noref"))
    return configs


def create_table2_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """
    Bimodal target, random walk sigma=2, importance weights.
    MH against MTM with and without reference points for N in {2, 5, 100, 1000}.
    """
    return _tries_sweep("t2", 2.0, replications, seed)


def create_table3_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """Same sweep as table 2 with random walk sigma=10"""
    return _tries_sweep("t3", 10.0, replications, seed)


def create_table4_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """Weight presets compared at N=100 with random walk sigma=10"""
    return [
        _bimodal(f"t4_{weight_id}", "MTM-rw", _rw(10.0, 100), replications, seed,
                 weight_id=weight_id, key={"weight": label})
        for weight_id, label in TABLE4_WEIGHTS
    ]


def create_table5_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """
    Random walk against independent proposals at N=100, sigma=10.
    The two-proposal rows draw 50 tries from mu=-10 and 50 from mu=2.
    """
    stats = CORE_STATISTICS + ["select_rate"]
    layouts = [
        ("rw", "MTM-rw", _rw(10.0, 100)),
        ("ind", "MTM-ind", [ProposalSpec("ind_gauss", {"mu": 0.0, "sigma": 10.0}, 100)]),
        ("ind2", "MTM-ind (mu=-10, mu=2)", [ProposalSpec("ind_gauss", {"mu": -10.0, "sigma": 10.0}, 50),
                                            ProposalSpec("ind_gauss", {"mu": 2.0, "sigma": 10.0}, 50)]),
    ]
    configs = []
    for tag, technique, proposals in layouts:
        for weight_id, label in (("importance", "p(y)/pi(y|x)"), ("target", "p(y)")):
            configs.append(_bimodal(f"t5_{tag}_{weight_id}", technique, proposals, replications, seed,
                                    weight_id=weight_id, statistics=list(stats), key={"weight": label}))
    return configs


def create_table6_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """Levy target (eta=0, nu=2): 1/c_p estimated from importance weights, N=1000"""
    layouts = [
        ("ind_mu10", "MTM-ind (mu=10)", ProposalSpec("ind_gauss", {"mu": 10.0, "sigma": 50.0}, 1000)),
        ("ind_mu100", "MTM-ind (mu=100)", ProposalSpec("ind_gauss", {"mu": 100.0, "sigma": 50.0}, 1000)),
        ("rw", "MTM-rw", ProposalSpec("rw_gauss", {"sigma": 50.0}, 1000)),
    ]
    return [
        ExperimentConfig(name=f"t6_{tag}", technique=technique, target_id="levy",
                         target_params={"eta": 0.0, "nu": 2.0}, proposals=[spec], tries=1000,
                         iterations=DEFAULT_ITERATIONS, replications=replications, seed=seed,
                         init=[2.0], statistics=["accept_rate", "mean_alpha", "normconst_recip"])
        for tag, technique, spec in layouts
    ]


def _composed_sweep(table_id: str, tries: int, replications: int, seed: int) -> List[ExperimentConfig]:
    configs = [
        _bimodal(f"{table_id}_{rule}", "MTM-rw", _rw(1.0, tries), replications, seed,
                 weight_id="target_power", weight_theta=0.5, acceptance_id=rule, key={"alpha": rule})
        for rule in COMPOSED_RULES
    ]
    configs.append(_bimodal(f"{table_id}_generalized", "MTM-rw", _rw(1.0, tries), replications, seed,
                            weight_id="target_power", weight_theta=0.5, key={"alpha": "generalized"}))
    return configs


def create_table7_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """Composed acceptance rules, N=10, random walk sigma=1, weights p(y)^0.5"""
    return _composed_sweep("t7", 10, replications, seed)


def create_table8_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """Composed acceptance rules, N=100, random walk sigma=1, weights p(y)^0.5"""
    return _composed_sweep("t8", 100, replications, seed)


def _smiling_sweep(table_id: str, sigma: float, replications: int, seed: int) -> List[ExperimentConfig]:
    return [
        ExperimentConfig(name=f"{table_id}_n{n}", technique="MH" if n == 1 else "MTM-rw",
                         target_id="smiling_face",
                         proposals=[ProposalSpec("rw_gauss", {"sigma": sigma}, n)], tries=n,
                         iterations=SHORT_ITERATIONS, replications=replications, seed=seed,
                         init=[0.0, 27.0],
                         statistics=["accept_rate", "mean_alpha", "mode_jump_rate", "lag1_corr"])
        for n in (1, 5, 100, 1000)
    ]


def create_table9_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """Smiling face, 500 steps, random walk sigma_p=5"""
    return _smiling_sweep("t9", 5.0, replications, seed)


def create_table10_scenario(replications: int = DEFAULT_REPLICATIONS, seed: int = 0) -> List[ExperimentConfig]:
    """Smiling face, 500 steps, random walk sigma_p=10"""
    return _smiling_sweep("t10", 10.0, replications, seed)


TABLES: Dict[str, Callable[..., List[ExperimentConfig]]] = {
    "t2": create_table2_scenario,
    "t3": create_table3_scenario,
    "t4": create_table4_scenario,
    "t5": create_table5_scenario,
    "t6": create_table6_scenario,
    "t7": create_table7_scenario,
    "t8": create_table8_scenario,
    "t9": create_table9_scenario,
    "t10": create_table10_scenario,
}


def get_table_scenario(table_id: str, replications: int = DEFAULT_REPLICATIONS,
                       seed: int = 0) -> List[ExperimentConfig]:
    """
    Get the configurations of one table.

    Args:
        table_id: "t2" to "t10"
        replications: Chains per configuration
        seed: Base seed

    Returns:
        List of ExperimentConfig, one per result row
    """
    if table_id not in TABLES:
        raise ConfigError(f"Unknown table '{table_id}'", valid_ids=list(TABLES))
    return TABLES[table_id](replications, seed)


def load_manifest(path: Optional[str] = None) -> Dict[str, Dict[str, str]]:
    """Table id -> {field: value} from the manifest file"""
    manifest_path = Path(path) if path else MANIFEST_PATH
    if not manifest_path.exists():
        raise ConfigError(f"Table manifest not found: {manifest_path}")
    entries: Dict[str, Dict[str, str]] = {}
    for key, value in DataManager.parse_key_values(manifest_path.read_text(encoding="utf-8")).items():
        table_id, _, field_name = key.partition(".")
        entries.setdefault(table_id, {})[field_name] = value
    return entries


def verify_against_manifest(table_id: str, configs: List[ExperimentConfig],
                            manifest: Optional[Dict[str, Dict[str, str]]] = None) -> None:
    """
    Check table configurations against the parameters quoted in the manifest.

    Raises:
        ConfigError: Any mismatch
    """
    manifest = manifest if manifest is not None else load_manifest()
    if table_id not in manifest:
        raise ConfigError(f"Table '{table_id}' is missing from the manifest")
    entry = manifest[table_id]
    problems = []

    targets = {cfg.target_id for cfg in configs}
    if targets != {entry["target"]}:
        problems.append(f"target {sorted(targets)} != {entry['target']}")

    sigmas = {float(spec.params["sigma"]) for cfg in configs for spec in cfg.proposals}
    expected_sigmas = {float(v) for v in entry["sigma"].split()}
    if sigmas != expected_sigmas:
        problems.append(f"sigma {sorted(sigmas)} != {sorted(expected_sigmas)}")

    tries = {cfg.total_tries for cfg in configs}
    expected_tries = {int(v) for v in entry["tries"].split()}
    if tries != expected_tries:
        problems.append(f"tries {sorted(tries)} != {sorted(expected_tries)}")

    weights = {cfg.weight_id for cfg in configs}
    if weights != set(entry["weights"].split()):
        problems.append(f"weights {sorted(weights)} != {entry['weights']}")

    rules = {cfg.acceptance_id for cfg in configs}
    if rules != set(entry["acceptance"].split()):
        problems.append(f"acceptance {sorted(rules)} != {entry['acceptance']}")

    iterations = {cfg.iterations for cfg in configs}
    if iterations != {int(entry["iterations"])}:
        problems.append(f"iterations {sorted(iterations)} != {entry['iterations']}")

    if "init" in entry:
        inits = {tuple(cfg.init) for cfg in configs}
        if inits != {tuple(float(v) for v in entry["init"].split())}:
            problems.append(f"init {sorted(inits)} != {entry['init']}")

    if problems:
        raise ConfigError(f"Table {table_id} deviates from its manifest: " + "; ".join(problems))


def reproduce_table(table_id: str, replications: int = DEFAULT_REPLICATIONS, seed: int = 0,
                    workers: Optional[int] = None) -> List[TableRow]:
    """
    Build, verify and run every configuration of one table.

    Raises:
        ConfigError: Unknown table or manifest mismatch
    """
    configs = get_table_scenario(table_id, replications, seed)
    verify_against_manifest(table_id, configs)
    logger.info("Reproducing table %s: %d configurations, R=%d", table_id, len(configs), replications)
    return run_experiments(configs, workers)


def print_scenario_info(table_id: str, configs: List[ExperimentConfig]):
    """Print information about a table scenario"""
    entry = load_manifest().get(table_id, {})
    print("\n" + "=" * 70)
    print(f"TABLE SCENARIO {table_id}")
    print("=" * 70)
    if "caption" in entry:
        print(entry["caption"])
    first = configs[0]
    print(f"Target: {first.target_id} {first.target_params or ''}")
    print(f"Iterations per chain: {first.iterations}")
    print(f"Replications: {first.replications}")
    print(f"Base seed: {first.seed}")
    print("\nConfigurations:")
    for cfg in configs:
        proposals = ", ".join(f"{spec.proposal_id}{spec.params} x {spec.repeat}" for spec in cfg.proposals)
        print(f"  - {cfg.name}: {cfg.technique}, N={cfg.total_tries}, weight={cfg.weight_id}, "
              f"alpha={cfg.acceptance_id}, {proposals}")
    print("=" * 70 + "\n")
