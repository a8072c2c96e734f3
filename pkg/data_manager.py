"""
Data Manager - Import/Export Experiment Data
Handles experiment configuration files, result CSV files and sample dumps.

Configuration files are flat ``key = value`` lines with dotted keys and ``#``
comments:

    experiment.name = bimodal_rw
    target.id = bimodal
    proposal.0 = rw_gauss(2) x 100
    weight.id = importance
    run.iterations = 5000
"""

import csv
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from harness import ExperimentConfig, ProposalSpec, TableRow
from model_zoo import PROPOSAL_PARAMS, parse_call, parse_number_or_vector
from sampler import ChainTrace
from sampling_model import ConfigError, ContractViolation

logger = logging.getLogger(__name__)

_SCALAR_KEYS = {
    "experiment.name", "experiment.technique", "target.id", "target.eta", "target.nu",
    "sampler.tries", "sampler.acceptance", "sampler.f", "sampler.init", "weight.id", "weight.theta",
    "weight.lambda", "run.iterations", "run.replications", "run.seed", "run.workers",
    "output.path", "output.statistics",
}
_PROPOSAL_FIELDS = {"id", "sigma", "mu", "low", "high", "repeat"}
_PROPOSAL_KEY = re.compile(r"^proposal\.(\d+)(?:\.([a-z]+))?$")
_COMPACT_PROPOSAL = re.compile(r"^(.*?\S)(?:\s+x\s+(\d+))?\s*$")
MANIFEST_NAME = "table_manifest.cfg"


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got '{value}'")


def _to_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got '{value}'")


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


class DataManager:
    """
    Manages import and export of experiment data.
    """

    @staticmethod
    def parse_key_values(text: str) -> Dict[str, str]:
        """
        Parse ``key = value`` lines.

        Raises:
            ConfigError: Line without '=' or duplicate key
        """
        mapping: Dict[str, str] = {}
        for number, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"Line {number}: expected 'key = value', got '{raw.strip()}'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in mapping:
                raise ConfigError(f"Line {number}: duplicate key '{key}'")
            mapping[key] = value
        return mapping

    @staticmethod
    def _proposal_specs(entries: Dict[int, Dict[str, str]]) -> List[ProposalSpec]:
        specs = []
        for index in sorted(entries):
            fields = entries[index]
            if "compact" in fields:
                match = _COMPACT_PROPOSAL.match(fields["compact"])
                if not match:
                    raise ConfigError(f"proposal.{index}: empty proposal")
                name, args = parse_call(match.group(1))
                repeat = int(match.group(2)) if match.group(2) else 1
                if name not in PROPOSAL_PARAMS:
                    raise ConfigError(f"proposal.{index}: unknown proposal '{name}'",
                                      valid_ids=sorted(PROPOSAL_PARAMS))
                expected = PROPOSAL_PARAMS[name]
                if len(args) != len(expected):
                    raise ConfigError(f"proposal.{index}: '{name}' expects arguments {list(expected)}")
                params = {k: parse_number_or_vector(a) for k, a in zip(expected, args)}
                specs.append(ProposalSpec(name, params, repeat))
                continue

            if "id" not in fields:
                raise ConfigError(f"proposal.{index}: missing 'id'")
            params = {}
            for name in ("sigma", "low", "high"):
                if name in fields:
                    params[name] = _to_float(f"proposal.{index}.{name}", fields[name])
            if "mu" in fields:
                params["mu"] = parse_number_or_vector(f"[{fields['mu']}]")
            repeat = _to_int(f"proposal.{index}.repeat", fields.get("repeat", "1"))
            specs.append(ProposalSpec(fields["id"], params, repeat))
        return specs

    @staticmethod
    def config_from_mapping(mapping: Dict[str, str]) -> ExperimentConfig:
        """
        Build an ExperimentConfig from parsed key-value pairs.

        Raises:
            ConfigError: Unknown key or malformed value
        """
        cfg = ExperimentConfig()
        proposals: Dict[int, Dict[str, str]] = {}
        for key, value in mapping.items():
            match = _PROPOSAL_KEY.match(key)
            if match:
                index, field_name = int(match.group(1)), match.group(2)
                if field_name is None:
                    proposals.setdefault(index, {})["compact"] = value
                elif field_name in _PROPOSAL_FIELDS:
                    proposals.setdefault(index, {})[field_name] = value
                else:
                    raise ConfigError(f"Unknown proposal field '{field_name}'",
                                      valid_ids=sorted(_PROPOSAL_FIELDS))
                continue
            if key not in _SCALAR_KEYS:
                raise ConfigError(f"Unknown configuration key '{key}'")

            if key == "experiment.name":
                cfg.name = value
            elif key == "experiment.technique":
                cfg.technique = value
            elif key == "target.id":
                cfg.target_id = value
            elif key in ("target.eta", "target.nu"):
                cfg.target_params[key.split(".")[1]] = _to_float(key, value)
            elif key == "sampler.tries":
                cfg.tries = _to_int(key, value)
            elif key == "sampler.acceptance":
                cfg.acceptance_id = value
            elif key == "sampler.f":
                cfg.acceptance_f = value
            elif key == "sampler.init":
                cfg.init = [_to_float(key, v) for v in value.split()]
            elif key == "weight.id":
                cfg.weight_id = value
            elif key == "weight.theta":
                cfg.weight_theta = _to_float(key, value)
            elif key == "weight.lambda":
                cfg.weight_lambda = value
            elif key == "run.iterations":
                cfg.iterations = _to_int(key, value)
            elif key == "run.replications":
                cfg.replications = _to_int(key, value)
            elif key == "run.seed":
                cfg.seed = _to_int(key, value)
            elif key == "run.workers":
                cfg.workers = _to_int(key, value)
            elif key == "output.path":
                cfg.output_path = value
            elif key == "output.statistics":
                cfg.statistics = [s.strip() for s in value.split(",") if s.strip()]

        if any(len(fields) > 1 and "compact" in fields for fields in proposals.values()):
            raise ConfigError("A proposal is given both in compact and dotted form")
        cfg.proposals = DataManager._proposal_specs(proposals)
        return cfg

    @staticmethod
    def load_config(filepath: str) -> ExperimentConfig:
        """
        Load an experiment configuration file.

        Args:
            filepath: Path to the .cfg file

        Returns:
            ExperimentConfig instance
        """
        path = Path(filepath)
        if not path.exists():
            raise ConfigError(f"Configuration file not found: {filepath}")
        cfg = DataManager.config_from_mapping(
            DataManager.parse_key_values(path.read_text(encoding="utf-8"))
        )
        logger.debug("Loaded configuration %s from %s", cfg.name, filepath)
        return cfg

    @staticmethod
    def save_config(cfg: ExperimentConfig, filepath: str):
        """
        Save an experiment configuration in the key-value format.

        Args:
            cfg: ExperimentConfig to save
            filepath: Output file path
        """
        lines = [
            f"experiment.name = {cfg.name}",
            f"experiment.technique = {cfg.technique}",
            f"target.id = {cfg.target_id}",
        ]
        lines += [f"target.{k} = {_format_value(float(v))}" for k, v in cfg.target_params.items()]
        for i, spec in enumerate(cfg.proposals):
            lines.append(f"proposal.{i}.id = {spec.proposal_id}")
            for name, value in spec.params.items():
                if isinstance(value, (tuple, list)):
                    value = " ".join(_format_value(float(v)) for v in value)
                else:
                    value = _format_value(float(value))
                lines.append(f"proposal.{i}.{name} = {value}")
            lines.append(f"proposal.{i}.repeat = {spec.repeat}")
        if cfg.tries is not None:
            lines.append(f"sampler.tries = {cfg.tries}")
        lines.append(f"sampler.acceptance = {cfg.acceptance_id}")
        if cfg.acceptance_f:
            lines.append(f"sampler.f = {cfg.acceptance_f}")
        if cfg.init is not None:
            lines.append("sampler.init = " + " ".join(_format_value(float(v)) for v in cfg.init))
        lines.append(f"weight.id = {cfg.weight_id}")
        if cfg.weight_theta is not None:
            lines.append(f"weight.theta = {_format_value(float(cfg.weight_theta))}")
        if cfg.weight_lambda:
            lines.append(f"weight.lambda = {cfg.weight_lambda}")
        lines += [
            f"run.iterations = {cfg.iterations}",
            f"run.replications = {cfg.replications}",
            f"run.seed = {cfg.seed}",
        ]
        if cfg.workers is not None:
            lines.append(f"run.workers = {cfg.workers}")
        if cfg.output_path:
            lines.append(f"output.path = {cfg.output_path}")
        lines.append("output.statistics = " + ", ".join(cfg.statistics))

        Path(filepath).write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.info("Configuration saved to %s", filepath)

    @staticmethod
    def emit_csv(rows: Sequence[TableRow], filepath: str, columns: Optional[List[str]] = None):
        """
        Write result rows: one header line, one line per row.

        Missing statistics are written as empty fields.

        Raises:
            ContractViolation: Rows with different columns
        """
        header = rows[0].columns() if rows else (columns or ["technique", "N"])
        for row in rows[1:]:
            if row.columns() != header:
                raise ContractViolation("All rows of a table must share the same columns")

        with open(filepath, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                values = {**row.key, **row.stats}
                writer.writerow([_format_value(values[c]) for c in header])
        logger.info("Results written to %s", filepath)

    @staticmethod
    def read_csv(filepath: str) -> List[Dict[str, str]]:
        """Read a result CSV back as a list of dictionaries"""
        with open(filepath, "r", newline="", encoding="utf-8") as f:
            return list(csv.DictReader(f))

    @staticmethod
    def dump_samples(trace: ChainTrace, filepath: str):
        """
        Write the chain: the initial state, then one line per step with the
        state after the step. The last column is 1 for an accepted move, 0 otherwise
        (always 0 on the initial line).
        """
        flags = [0] + [int(r.accepted) for r in trace.records]
        with open(filepath, "w", encoding="utf-8") as f:
            for state, flag in zip(trace.states, flags):
                coords = " ".join(format(float(v), ".10g") for v in state)
                f.write(f"{coords} {flag}\n")
        logger.info("Samples written to %s", filepath)

    @staticmethod
    def get_available_scenarios(scenarios_dir: str = "scenarios") -> List[str]:
        """
        Get list of available experiment configurations in the scenarios directory.

        Args:
            scenarios_dir: Path to scenarios directory

        Returns:
            List of configuration names (file stems)
        """
        scenarios_path = Path(scenarios_dir)
        if not scenarios_path.exists():
            return []
        return sorted(item.stem for item in scenarios_path.glob("*.cfg") if item.name != MANIFEST_NAME)

    @staticmethod
    def create_template_files(output_dir: str = "."):
        """
        Create a documented template configuration.

        Args:
            output_dir: Directory to create the template in
        """
        output_path = Path(output_dir)
        output_path.mkdir(parents=True, exist_ok=True)
        template = output_path / "experiment_template.cfg"
        template.write_text(
            "# Experiment template\n"
            "experiment.name = my_experiment\n"
            "experiment.technique = MTM-rw\n"
            "\n"
            "# bimodal | levy | smiling_face\n"
            "target.id = bimodal\n"
            "# target.eta = 0\n"
            "# target.nu = 2\n"
            "\n"
            "# rw_gauss(sigma) | ind_gauss(mu,sigma) | uniform(low,high), optionally 'x <repeat>'\n"
            "proposal.0 = rw_gauss(2) x 100\n"
            "sampler.tries = 100\n"
            "# generalized | noref | beta<i>_gamma<j> | beta_general_gamma<j>\n"
            "sampler.acceptance = generalized\n"
            "# sampler.f = barker\n"
            "\n"
            "# importance | target | constant | sqrt_target | target_sq | target_cube |\n"
            "# reverse_proposal | inv_proposal | target_times_reverse | lambda_form | target_power\n"
            "weight.id = importance\n"
            "\n"
            "run.iterations = 5000\n"
            "run.replications = 200\n"
            "run.seed = 0\n"
            "output.statistics = accept_rate, mean_alpha, lag1_corr\n",
            encoding="utf-8",
        )
        print(f"Template created: {template}")


def emit_csv(rows: Sequence[TableRow], path: str) -> None:
    """Write result rows as CSV"""
    DataManager.emit_csv(rows, path)


def dump_samples(trace: ChainTrace, path: str) -> None:
    """Write a chain as ``x1 [x2] accepted`` lines"""
    DataManager.dump_samples(trace, path)
