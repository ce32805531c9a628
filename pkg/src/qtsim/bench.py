"""Experiment harness: three-case output probabilities, attack metrics and
the full NPQA/PQA comparison grid.

Each (adder, attack) entry runs the victim on its own device tenancy.  A
victim is measured only on its output register; a trajectory counts as a
success when the decoded output equals the classical oracle.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import reference_data as ref
from .adders import AdderSpec, build, encode_index, registers
from .attacks import AttackKind
from .noise import CalibrationResult, NoiseParams, NoisyProgram, calibrate, trajectory_rng
from .rns import aggregate_probability, select_moduli
from .reference_data import ATTACK_COLUMNS
from .simcore import SimulationError, asap_layers
from .tenancy import DeviceModel, TenancyModel, allocate, attacker_for, merge_timeline

NONE = "NONE"
MAX_SHOTS = 100_000
DEFAULT_NPQA_SIZES = (6, 7, 8, 9)


def case_inputs(spec: AdderSpec) -> list[tuple[int, int]]:
    """The three benchmark cases ``(0, 0)``, ``(max, max)``, ``(0, max)``."""
    m = spec.max_operand
    return [(0, 0), (m, m), (0, m)]


def effectiveness(p_base: float, p_attack: float) -> float:
    """Relative drop in output probability, in percent."""
    if p_base <= 0:
        raise SimulationError("base probability must be positive")
    return 100.0 * (p_base - p_attack) / p_base


def improvement(p_npqa: float, p_pqa: float) -> float:
    """Relative gain of the parallel adder over the non-parallel one, in percent."""
    if p_npqa <= 0:
        raise SimulationError("NPQA probability must be positive")
    return 100.0 * (p_pqa - p_npqa) / p_npqa


def normalize_attack(name: str) -> str:
    if name.strip().upper() == NONE:
        return NONE
    return AttackKind.parse(name).value


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid and run settings.

    ``qma`` lists modulo-adder selectors; when empty it defaults to every
    modulus appearing in the moduli sets of ``npqa_sizes`` (modulus 3 takes
    ``mod3_family``).
    """

    npqa_sizes: tuple[int, ...] = DEFAULT_NPQA_SIZES
    qma: tuple[str, ...] = ()
    attacks: tuple[str, ...] = ATTACK_COLUMNS
    shots: int = 100
    seed: int = 0
    noise: NoiseParams = field(default_factory=NoiseParams)
    tenancy: TenancyModel = TenancyModel.GREY_BOX
    device: DeviceModel = field(default_factory=DeviceModel)
    attack_input: int = 0
    sac_mode: str = "literal"
    mod3_family: str = "2^n+1"
    golden: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "npqa_sizes", tuple(int(n) for n in self.npqa_sizes))
        object.__setattr__(self, "attacks", tuple(normalize_attack(a) for a in self.attacks))
        object.__setattr__(self, "tenancy", TenancyModel.parse(self.tenancy)
                           if isinstance(self.tenancy, str) and not isinstance(self.tenancy, TenancyModel)
                           else TenancyModel(self.tenancy))
        if not self.attacks:
            raise SimulationError("attack list is empty")
        if not 1 <= self.shots <= MAX_SHOTS:
            raise SimulationError(f"shots must be in [1, {MAX_SHOTS}], got {self.shots}")
        if self.tenancy == TenancyModel.NONE and any(a != NONE for a in self.attacks):
            raise SimulationError("tenancy 'none' runs the victim alone; only the NONE attack is allowed")
        qma = self.qma or tuple(dict.fromkeys(
            AdderSpec.qma(m, self._family(m)).label
            for n in self.npqa_sizes for m in select_moduli(n).moduli))
        object.__setattr__(self, "qma", tuple(AdderSpec.parse(s).label for s in qma))
        if self.workers < 1:
            raise SimulationError("workers must be >= 1")

    def _family(self, m: int) -> str | None:
        return self.mod3_family if m == 3 else None

    def adders(self) -> list[AdderSpec]:
        return [AdderSpec.qfa(n) for n in self.npqa_sizes] + [AdderSpec.parse(s) for s in self.qma]

    def moduli_specs(self, output_bits: int) -> list[AdderSpec]:
        return [AdderSpec.qma(m, self._family(m)) for m in select_moduli(output_bits).moduli]

    def to_dict(self) -> dict:
        return dict(
            device=self.device.to_dict(), noise=self.noise.to_dict(),
            tenancy=dict(model=self.tenancy.value),
            experiment=dict(npqa_sizes=list(self.npqa_sizes), qma=list(self.qma), attacks=list(self.attacks),
                            shots=self.shots, seed=self.seed, attack_input=self.attack_input,
                            sac_mode=self.sac_mode, mod3_family=self.mod3_family, golden=self.golden),
        )

    @classmethod
    def from_dict(cls, data: dict, **overrides) -> "ExperimentConfig":
        unknown = set(data) - {"device", "noise", "experiment", "tenancy"}
        if unknown:
            raise SimulationError(f"unknown config sections: {sorted(unknown)}")
        exp = dict(data.get("experiment", {}))
        known = {"npqa_sizes", "qma", "attacks", "shots", "seed", "attack_input", "sac_mode",
                 "mod3_family", "golden"}
        if set(exp) - known:
            raise SimulationError(f"unknown experiment keys: {sorted(set(exp) - known)}")
        tenancy = dict(data.get("tenancy", {}))
        if set(tenancy) - {"model"}:
            raise SimulationError(f"unknown tenancy keys: {sorted(set(tenancy) - {'model'})}")
        kwargs = dict(exp)
        for key in ("npqa_sizes", "qma", "attacks"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        kwargs["noise"] = NoiseParams.from_dict(data.get("noise", {}))
        kwargs["device"] = DeviceModel.from_dict(data.get("device", {}))
        if "model" in tenancy:
            kwargs["tenancy"] = TenancyModel.parse(tenancy["model"])
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class EntryResult:
    adder: str
    attack: str
    case_probabilities: tuple[float, float, float]
    trajectories: int
    seed: int

    @property
    def mean(self) -> float:
        probs = self.case_probabilities
        if len(set(probs)) == 1:  # keep injected values exact
            return probs[0]
        return math.fsum(probs) / len(probs)

    def to_dict(self) -> dict:
        return dict(adder=self.adder, attack=self.attack, case_probabilities=list(self.case_probabilities),
                    mean=self.mean, trajectories=self.trajectories, seed=self.seed)


@dataclass
class VictimRun:
    """A compiled victim/attacker co-schedule ready for trajectories."""

    spec: AdderSpec
    attack: str
    program: NoisyProgram
    victim_qubits: tuple[int, ...]
    output_qubits: tuple[int, ...]


def prepare(spec: AdderSpec, attack: str, noise: NoiseParams, tenancy: TenancyModel = TenancyModel.GREY_BOX,
            device: DeviceModel | None = None, attack_input: int = 0, sac_mode: str = "literal") -> VictimRun:
    """Allocate the device, build both tenants and precompute noise channels."""
    device = device or DeviceModel()
    attack = normalize_attack(attack)
    victim = build(spec)
    regs = registers(spec)
    plan = allocate(victim.width, tenancy, device, victim_depth=len(asap_layers(victim)))
    if attack != NONE and not plan.attack_pairs:
        if tenancy == TenancyModel.NONE:
            raise SimulationError("tenancy 'none' has no attacker")
    mode = sac_mode if attack == AttackKind.SAC.value else "literal"
    attacker = None if attack == NONE else attacker_for(plan, attack, attack_input, mode)
    merged = merge_timeline(victim, attacker, plan, measure=regs.output)
    out_qubits = tuple(plan.victim_qubits[q] for q in regs.output)
    return VictimRun(spec, attack, NoisyProgram(merged, device, noise), plan.victim_qubits, out_qubits)


def _stable_key(text: str) -> int:
    return zlib.crc32(text.encode())


def _device_index(run: VictimRun, a: int, b: int) -> int:
    local = encode_index(run.spec, a, b)
    index = 0
    for i, q in enumerate(run.victim_qubits):
        index |= ((local >> i) & 1) << q
    return index


def case_probability(run: VictimRun, case: int, shots: int, seed: int) -> float:
    """Fraction of ``shots`` trajectories whose decoded output is correct."""
    a, b = case_inputs(run.spec)[case]
    expected = run.spec.oracle(a, b)
    start = _device_index(run, a, b)
    akey = _stable_key(run.attack)
    vkey = _stable_key(run.spec.label)
    hits = 0
    for shot in range(shots):
        res = run.program.run(start, trajectory_rng(seed, vkey, akey, case, shot))
        value = sum(res.readout[q] << i for i, q in enumerate(run.output_qubits))
        hits += value == expected
    return hits / shots


def output_probability(spec: AdderSpec, attack: str, config: ExperimentConfig,
                       seed: int | None = None) -> EntryResult:
    """Per-case and mean output probability of ``spec`` under ``attack``."""
    seed = config.seed if seed is None else seed
    run = prepare(spec, attack, config.noise, config.tenancy, config.device,
                  config.attack_input, config.sac_mode)
    probs = tuple(case_probability(run, c, config.shots, seed) for c in range(3))
    return EntryResult(spec.label, run.attack, probs, 3 * config.shots, seed)


def _golden_entry(spec: AdderSpec, attack: str, seed: int) -> EntryResult:
    if spec.kind == "qfa":
        p = ref.npqa_probability(spec.size, attack)
    else:
        key = (spec.size, spec.family)
        if key not in ref.QMA_TABLE:
            raise SimulationError(f"no reference probabilities for {spec.label}")
        p = ref.qma_probability(spec.size, spec.family, attack)
    return EntryResult(spec.label, attack, (p, p, p), 0, seed)


def _entry_job(args: tuple) -> EntryResult:
    spec_label, attack, config = args
    return output_probability(AdderSpec.parse(spec_label), attack, config)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    entries: list[EntryResult]

    def lookup(self, adder: str, attack: str) -> EntryResult:
        for e in self.entries:
            if e.adder == adder and e.attack == attack:
                return e
        raise KeyError((adder, attack))

    def effectiveness_table(self) -> dict[str, dict[str, float]]:
        """Per adder: attack -> percent drop relative to the NONE column."""
        out: dict[str, dict[str, float]] = {}
        if NONE not in self.config.attacks:
            return out
        for spec in self.config.adders():
            base = self.lookup(spec.label, NONE).mean
            if base <= 0:
                continue
            out[spec.label] = {a: effectiveness(base, self.lookup(spec.label, a).mean)
                               for a in self.config.attacks if a != NONE}
        return out

    def pqa_table(self) -> dict[int, dict[str, float]]:
        """Per NPQA size: attack -> min-rule PQA probability over its moduli."""
        available = set(self.config.qma)
        out: dict[int, dict[str, float]] = {}
        for n in self.config.npqa_sizes:
            specs = self.config.moduli_specs(n)
            if not all(s.label in available for s in specs):
                continue
            out[n] = {a: aggregate_probability([self.lookup(s.label, a).mean for s in specs])
                      for a in self.config.attacks}
        return out

    def improvement_table(self) -> dict[int, dict[str, float]]:
        out: dict[int, dict[str, float]] = {}
        for n, row in self.pqa_table().items():
            npqa = {a: self.lookup(AdderSpec.qfa(n).label, a).mean for a in row}
            out[n] = {a: improvement(npqa[a], p) for a, p in row.items() if npqa[a] > 0}
        return out

    def series(self) -> dict:
        """Plot-ready data: effectiveness by NPQA size (per attack) and
        improvement by size (per attack)."""
        eff = self.effectiveness_table()
        imp = self.improvement_table()
        sizes = list(self.config.npqa_sizes)
        attacks = [a for a in self.config.attacks if a != NONE]
        return dict(
            effectiveness=dict(sizes=sizes, values={
                a: [eff.get(AdderSpec.qfa(n).label, {}).get(a) for n in sizes] for a in attacks}),
            improvement=dict(sizes=sorted(imp), values={
                a: [imp[n].get(a) for n in sorted(imp)] for a in self.config.attacks}),
        )

    def to_dict(self) -> dict:
        return dict(
            seed=self.config.seed, config_hash=self.config.config_hash(), config=self.config.to_dict(),
            entries=[e.to_dict() for e in self.entries],
            effectiveness=self.effectiveness_table(),
            pqa={str(k): v for k, v in self.pqa_table().items()},
            improvement={str(k): v for k, v in self.improvement_table().items()},
            series=self.series(),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "adder", "attack", "case", "a", "b", "value", "trajectories", "seed"])
        for e in self.entries:
            spec = AdderSpec.parse(e.adder)
            for c, ((a, b), p) in enumerate(zip(case_inputs(spec), e.case_probabilities)):
                w.writerow(["case", e.adder, e.attack, c, a, b, repr(p), e.trajectories // 3, e.seed])
            w.writerow(["mean", e.adder, e.attack, "", "", "", repr(e.mean), e.trajectories, e.seed])
        for adder, row in self.effectiveness_table().items():
            for attack, v in row.items():
                w.writerow(["effectiveness", adder, attack, "", "", "", repr(v), "", self.config.seed])
        for n, row in self.pqa_table().items():
            for attack, v in row.items():
                w.writerow(["pqa", f"qfa:{n}", attack, "", "", "", repr(v), "", self.config.seed])
        for n, row in self.improvement_table().items():
            for attack, v in row.items():
                w.writerow(["improvement", f"qfa:{n}", attack, "", "", "", repr(v), "", self.config.seed])
        return buf.getvalue()

    def write(self, out_dir: str | os.PathLike, fmt: str = "json") -> Path:
        """Write the report as ``report_seed<seed>_<hash>.<fmt>``."""
        if fmt not in ("json", "csv"):
            raise SimulationError(f"unknown report format {fmt!r}")
        path = Path(out_dir) / f"report_seed{self.config.seed}_{self.config.config_hash()}.{fmt}"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() if fmt == "json" else self.to_csv())
        return path


def default_workers() -> int:
    value = os.environ.get("QTSIM_WORKERS")
    if value is None:
        return 1
    try:
        workers = int(value)
    except ValueError:
        raise SimulationError(f"QTSIM_WORKERS must be an integer, got {value!r}") from None
    return max(1, workers)


def run_suite(config: ExperimentConfig) -> ExperimentReport:
    """Run every (adder, attack) entry of the grid.

    Entries are independent; with ``config.workers > 1`` they run in a
    process pool.  Results are keyed by grid position, so the report does
    not depend on scheduling.
    """
    grid = [(spec.label, attack) for spec in config.adders() for attack in config.attacks]
    for spec in config.adders():
        width = registers(spec).width
        if width > config.device.qubit_count:
            raise SimulationError(f"{spec.label} needs {width} qubits, device has {config.device.qubit_count}")
    if config.golden:
        entries = [_golden_entry(AdderSpec.parse(s), a, config.seed) for s, a in grid]
    elif config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as pool:
            entries = list(pool.map(_entry_job, [(s, a, config) for s, a in grid]))
    else:
        entries = [_entry_job((s, a, config)) for s, a in grid]
    return ExperimentReport(config, entries)


# --------------------------------------------------------------------------
# calibration against the reference base curve


@dataclass
class AdderTarget:
    """Calibration target: mean three-case probability of one adder."""

    spec: AdderSpec
    attack: str = NONE
    tenancy: TenancyModel = TenancyModel.GREY_BOX
    device: DeviceModel = field(default_factory=DeviceModel)

    def __call__(self, params: NoiseParams, shots: int, seed: int) -> float:
        run = prepare(self.spec, self.attack, params, self.tenancy, self.device)
        return math.fsum(case_probability(run, c, shots, seed) for c in range(3)) / 3


def reference_targets(sizes: Sequence[int], attack: str = NONE,
                      tenancy: TenancyModel = TenancyModel.GREY_BOX,
                      device: DeviceModel | None = None) -> list[tuple[AdderTarget, float]]:
    device = device or DeviceModel()
    return [(AdderTarget(AdderSpec.qfa(n), attack, tenancy, device), ref.npqa_probability(n, attack))
            for n in sizes]


def calibrate_reference(start: NoiseParams | None = None, budget: int = 100, seed: int = 0,
                        rounds: int = 2, base_sizes: Sequence[int] = (6, 9),
                        fit_crosstalk: bool = True, tenancy: TenancyModel = TenancyModel.GREY_BOX,
                        device: DeviceModel | None = None, loss: str = "max") -> CalibrationResult:
    """Fit intrinsic noise to the reference no-attack values, then crosstalk
    strength to the existing-attack values, and refit the intrinsic noise.

    The base/crosstalk alternation runs ``rounds`` base fits, ending on a
    base fit so the no-attack curve is the one matched last.

    ``budget`` is the trajectory count per input case.  With the default
    ``loss="max"`` each stage is a squared-error fit followed by a minimax
    polish, which balances the misses on the end points of the curve.
    """
    params = start or NoiseParams()
    base = reference_targets(base_sizes, NONE, tenancy, device)
    attacked = reference_targets(base_sizes, AttackKind.EXISTING.value, tenancy, device)
    if rounds < 1:
        raise SimulationError("rounds must be >= 1")
    history: list[dict] = []
    evaluations = 0
    stages = [("base", base, ("p2", "p_meas"))]
    for _ in range(rounds - 1 if fit_crosstalk else 0):
        stages += [("crosstalk", attacked, ("ct_strength",)), ("base", base, ("p2", "p_meas"))]
    for stage, targets, free in stages:
        # minimax is polished from a squared-error fit: coordinate moves on a
        # max-loss stall once both end points miss by the same amount
        for stage_loss in dict.fromkeys(("sse", loss)):
            result = calibrate(targets, free, budget, start=params, seed=seed, loss=stage_loss)
            params, evaluations = result.params, evaluations + result.evaluations
            history += [dict(stage=stage, loss=stage_loss, **h) for h in result.history]
    return CalibrationResult(params, result.residual, evaluations, history)


def config_replace(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(config, **changes)
