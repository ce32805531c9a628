"""Command-line driver.

Exit codes: 0 success, 1 validation error (bad flags, config or inputs),
2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .adders import AdderSpec, build, resources
from .attacks import AttackKind, conformance_report
from .bench import (NONE, ExperimentConfig, calibrate_reference, default_workers, normalize_attack,
                    output_probability, run_suite)
from .noise import NoiseParams
from .simcore import SimulationError
from .tenancy import TenancyModel

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    """Invalid command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class CliConfig:
    command: str
    config_path: str | None
    overrides: dict = field(default_factory=dict)


def _noise_override(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep or key not in NoiseParams.__dataclass_fields__:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE with KEY a noise parameter, got {text!r}")
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"noise value for {key} is not a number: {value!r}") from None


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON config with sections device, noise, experiment, tenancy")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--shots", type=int, help="trajectories per input case")
    p.add_argument("--out", metavar="DIR", help="write results into DIR instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    p.add_argument("--tenancy", choices=("grey", "black", "none"), help="tenancy model")
    p.add_argument("--noise", action="append", type=_noise_override, default=[], metavar="KEY=VALUE",
                   help="override one noise parameter (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtsim", description="Crosstalk attacks on trapped-ion quantum adders.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="output probability of one adder under one attack")
    _shared(p)
    p.add_argument("--adder", required=True, help="qfa:<bits> or qma:<modulus>[:<family>]")
    p.add_argument("--attack", default="none", help="none, existing, alt_cnot, sac or apc")

    p = sub.add_parser("attack-conformance", help="per-layer check of attack states against closed forms")
    _shared(p)
    p.add_argument("--kind", required=True, help="existing, alt_cnot, sac or apc")
    p.add_argument("--max-n", type=int, default=8, help="number of layers")
    p.add_argument("--x", type=int, choices=(0, 1), default=0, help="target input bit")
    p.add_argument("--mode", choices=("literal", "synthesized"), default="literal")

    p = sub.add_parser("resources", help="qubit count and Toffoli/CNOT depth of adders")
    _shared(p)
    p.add_argument("--adder", action="append", required=True, help="adder selector (repeatable)")

    p = sub.add_parser("calibrate", help="fit noise parameters to the reference base curve")
    _shared(p)
    p.add_argument("--budget", type=int, default=100, help="trajectories per input case per evaluation")
    p.add_argument("--rounds", type=int, default=2, help="alternating base/crosstalk rounds")
    p.add_argument("--no-crosstalk", action="store_true", help="fit only p2 and p_meas")

    p = sub.add_parser("run-suite", help="full NPQA/PQA grid with metrics")
    _shared(p)
    p.add_argument("--golden", action="store_true", help="inject reference probabilities instead of simulating")
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise SimulationError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SimulationError(f"malformed config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise SimulationError("config must be a JSON object")
    noise = dict(data.get("noise", {}))
    noise.update(dict(args.noise))
    data = {**data, "noise": noise}
    overrides = dict(seed=args.seed, shots=args.shots,
                     tenancy=TenancyModel.parse(args.tenancy) if args.tenancy else None)
    if getattr(args, "golden", False):
        overrides["golden"] = True
    if args.command != "run-suite":
        # single-entry commands do not run the configured grid
        data["experiment"] = {k: v for k, v in data.get("experiment", {}).items()
                              if k not in ("npqa_sizes", "qma", "attacks")}
        overrides.update(npqa_sizes=(), qma=(), attacks=(NONE,))
    overrides["workers"] = default_workers()
    return ExperimentConfig.from_dict(data, **overrides)


def _emit(args: argparse.Namespace, name: str, text: str, fmt: str) -> None:
    if args.out:
        path = Path(args.out) / f"{name}.{fmt}"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        print(path)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def cmd_simulate(args, config: ExperimentConfig) -> None:
    spec = AdderSpec.parse(args.adder)
    attack = normalize_attack(args.attack)
    if attack != NONE and config.tenancy == TenancyModel.NONE:
        raise SimulationError("tenancy 'none' has no attacker")
    result = output_probability(spec, attack, config)
    fmt = args.format or "json"
    row = result.to_dict()
    text = _json(row) if fmt == "json" else _csv([{**row, "case_probabilities": " ".join(
        repr(p) for p in row["case_probabilities"])}])
    _emit(args, f"simulate_{spec.size}_{attack.lower()}_seed{config.seed}", text, fmt)


def cmd_conformance(args, config: ExperimentConfig) -> None:
    records = conformance_report(AttackKind.parse(args.kind), args.max_n, args.x, args.mode)
    fmt = args.format or "json"
    if fmt == "json":
        text = _json(records)
    else:
        text = _csv([{**r, "reduced_entropy": " ".join(repr(v) for v in r["reduced_entropy"])} for r in records])
    _emit(args, f"conformance_{args.kind.lower()}_{args.mode}", text, fmt)


def cmd_resources(args, config: ExperimentConfig) -> None:
    rows = []
    for sel in args.adder:
        spec = AdderSpec.parse(sel)
        rows.append(dict(adder=spec.label, **resources(build(spec)).as_dict()))
    fmt = args.format or "csv"
    _emit(args, "resources", _csv(rows) if fmt == "csv" else _json(rows), fmt)


def cmd_calibrate(args, config: ExperimentConfig) -> None:
    result = calibrate_reference(config.noise, budget=args.budget, seed=config.seed, rounds=args.rounds,
                                 fit_crosstalk=not args.no_crosstalk, tenancy=config.tenancy,
                                 device=config.device)
    fmt = args.format or "json"
    payload = dict(noise=result.params.to_dict(), residual=result.residual, evaluations=result.evaluations)
    text = _json(payload) if fmt == "json" else _csv([dict(**result.params.to_dict(), residual=result.residual)])
    _emit(args, f"calibration_seed{config.seed}", text, fmt)


def cmd_run_suite(args, config: ExperimentConfig) -> None:
    report = run_suite(config)
    fmt = args.format or "json"
    if args.out:
        print(report.write(args.out, fmt))
    else:
        sys.stdout.write(report.to_json() if fmt == "json" else report.to_csv())


COMMANDS = {
    "simulate": cmd_simulate, "attack-conformance": cmd_conformance, "resources": cmd_resources,
    "calibrate": cmd_calibrate, "run-suite": cmd_run_suite,
}


def parse(argv: Sequence[str]) -> tuple[argparse.Namespace, CliConfig]:
    args = build_parser().parse_args(list(argv))
    overrides = {k: v for k, v in dict(seed=args.seed, shots=args.shots, tenancy=args.tenancy).items()
                 if v is not None}
    overrides.update(dict(args.noise))
    return args, CliConfig(args.command, args.config, overrides)


def dispatch(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args, _ = parse(argv)
        config = _load_config(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, SimulationError, ValueError, TypeError) as exc:
        print(f"qtsim: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        COMMANDS[args.command](args, config)
    except (UsageError, SimulationError) as exc:
        print(f"qtsim: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"qtsim: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
