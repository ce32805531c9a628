"""Multi-tenant placement on a linear ion chain.

The device is an all-to-all connected chain of ``qubit_count`` ions.  Device
qubit ``q`` sits at chain position ``positions[q]``; distances used by the
crosstalk model are chain distances.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

from .attacks import AttackKind, AttackSpec, build_attack
from .simcore import Circuit, Gate, GateKind, SimulationError, asap_layers

GREY_MARGIN = 0.1


class TenancyModel(str, enum.Enum):
    GREY_BOX = "grey"
    BLACK_BOX = "black"
    NONE = "none"

    @classmethod
    def parse(cls, text: str) -> "TenancyModel":
        key = text.strip().lower()
        aliases = {"grey_box": "grey", "gray": "grey", "black_box": "black"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise SimulationError(f"unknown tenancy model {text!r}") from None


@dataclass(frozen=True)
class DeviceModel:
    qubit_count: int = 20
    positions: tuple[int, ...] | None = None
    max_attack_layers: int = 32

    def __post_init__(self):
        if self.qubit_count < 1:
            raise SimulationError("device needs at least one qubit")
        pos = tuple(range(self.qubit_count)) if self.positions is None else tuple(self.positions)
        if sorted(pos) != list(range(self.qubit_count)):
            raise SimulationError("chain positions must be a permutation of the device qubits")
        object.__setattr__(self, "positions", pos)
        if self.max_attack_layers < 1:
            raise SimulationError("max_attack_layers must be >= 1")

    def position(self, q: int) -> int:
        if not 0 <= q < self.qubit_count:
            raise SimulationError(f"qubit {q} is not placed on the {self.qubit_count}-qubit device")
        return self.positions[q]

    def qubit_at(self, position: int) -> int:
        return self.positions.index(position)

    def to_dict(self) -> dict:
        return dict(qubit_count=self.qubit_count, positions=list(self.positions),
                    max_attack_layers=self.max_attack_layers)

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceModel":
        unknown = set(data) - {"qubit_count", "positions", "max_attack_layers"}
        if unknown:
            raise SimulationError(f"unknown device keys: {sorted(unknown)}")
        pos = data.get("positions")
        return cls(int(data.get("qubit_count", 20)), None if pos is None else tuple(pos),
                   int(data.get("max_attack_layers", 32)))


@dataclass
class TenancyPlan:
    model: TenancyModel
    device: DeviceModel
    victim_qubits: tuple[int, ...]
    attack_pairs: tuple[tuple[int, int], ...]
    attack_layers: int
    attack: AttackSpec | None = None
    timeline: Circuit | None = field(default=None, repr=False)

    def __post_init__(self):
        attackers = [q for pair in self.attack_pairs for q in pair]
        if set(attackers) & set(self.victim_qubits):
            raise SimulationError("victim and attacker qubit sets overlap")
        if len(set(attackers)) != len(attackers) or len(set(self.victim_qubits)) != len(self.victim_qubits):
            raise SimulationError("duplicate qubit in tenancy plan")
        if len(attackers) + len(self.victim_qubits) > self.device.qubit_count:
            raise SimulationError("plan uses more qubits than the device has")

    @property
    def pairs(self) -> int:
        return len(self.attack_pairs)

    @property
    def attacker_qubits(self) -> tuple[int, ...]:
        return tuple(q for pair in self.attack_pairs for q in pair)

    def attack_spec(self, kind: AttackKind, input_x: int = 0, mode: str = "literal") -> AttackSpec | None:
        if not self.attack_pairs:
            return None
        return AttackSpec(AttackKind(kind), self.attack_layers, input_x, self.pairs, mode)

    def to_dict(self) -> dict:
        return dict(
            model=self.model.value, device=self.device.to_dict(),
            victim_qubits=list(self.victim_qubits),
            attack_pairs=[list(p) for p in self.attack_pairs],
            attack_layers=self.attack_layers,
            attack=None if self.attack is None else dict(
                kind=self.attack.kind.value, layers=self.attack.layers, input_x=self.attack.input_x,
                pairs=self.attack.pairs, mode=self.attack.mode),
        )


def grey_box_layers(victim_depth: int, margin: float = GREY_MARGIN) -> int:
    return max(math.ceil((1.0 + margin) * victim_depth - 1e-9), victim_depth + 1)


def allocate(victim_width: int, model: TenancyModel | str, device: DeviceModel | None = None,
             victim_depth: int = 1, margin: float = GREY_MARGIN) -> TenancyPlan:
    """Place the victim on a contiguous centred block and fill the remaining
    chain with ``floor(free / 2)`` attack pairs.

    Grey box: pairs start next to the victim, target ion adjacent to it, and
    run ``grey_box_layers(victim_depth)`` layers.  Black box: pairs start
    from the chain ends with targets facing away, and run
    ``device.max_attack_layers`` layers.
    """
    device = device or DeviceModel()
    model = TenancyModel(model) if not isinstance(model, TenancyModel) else model
    q = device.qubit_count
    if victim_width > q:
        raise SimulationError(f"victim needs {victim_width} qubits, device has {q}")
    if victim_width < 0:
        raise SimulationError("negative victim width")
    start = (q - victim_width) // 2
    left, right = start, q - victim_width - start
    if left % 2 and right % 2:
        start -= 1
        left, right = left - 1, right + 1
    victim = tuple(device.qubit_at(start + i) for i in range(victim_width))
    if model == TenancyModel.NONE:
        return TenancyPlan(model, device, victim, (), 0)

    # (target position, control position) pairs per side, nearest first
    left_pairs = [(start - 1 - 2 * i, start - 2 - 2 * i) for i in range(left // 2)]
    right_pairs = [(start + victim_width + 2 * i, start + victim_width + 1 + 2 * i) for i in range(right // 2)]
    if model == TenancyModel.BLACK_BOX:
        left_pairs = [(c, t) for t, c in reversed(_shift_outward(left_pairs, 0, left))]
        right_pairs = [(c, t) for t, c in reversed(_shift_outward(right_pairs, q - 1, right))]
    ordered: list[tuple[int, int]] = []
    for i in range(max(len(left_pairs), len(right_pairs))):
        for side in (left_pairs, right_pairs):
            if i < len(side):
                ordered.append(side[i])
    # pairs are (control, target) on device qubits
    pairs = tuple((device.qubit_at(c), device.qubit_at(t)) for t, c in ordered)
    layers = grey_box_layers(victim_depth, margin) if model == TenancyModel.GREY_BOX else device.max_attack_layers
    return TenancyPlan(model, device, victim, pairs, layers)


def _shift_outward(pairs: list[tuple[int, int]], end: int, free: int) -> list[tuple[int, int]]:
    """Move a side's pairs flush against the chain end (leaving any odd idle
    ion next to the victim)."""
    if free % 2 == 0:
        return pairs
    step = -1 if end == 0 else 1
    return [(t + step, c + step) for t, c in pairs]


def merge_timeline(victim: Circuit, attacker: Circuit | None, plan: TenancyPlan,
                   measure: Sequence[int] = ()) -> Circuit:
    """Embed both tenants in one device-wide circuit.

    Merged layer ``i`` holds victim ASAP layer ``i`` and attacker ASAP layer
    ``i``; a final layer measures the victim qubits in ``measure`` (victim-local
    indices).  Attacker qubits are never measured.
    """
    if victim.width > len(plan.victim_qubits):
        raise SimulationError(f"victim width {victim.width} exceeds its {len(plan.victim_qubits)} allocated qubits")
    attacker = attacker if attacker is not None else Circuit(0)
    if attacker.width > 2 * plan.pairs:
        raise SimulationError(f"attacker width {attacker.width} exceeds {2 * plan.pairs} allocated qubits")
    amap = plan.attacker_qubits
    if set(amap[: attacker.width]) & set(plan.victim_qubits[: victim.width]):
        raise SimulationError("victim and attacker qubit sets overlap")

    v_layers = asap_layers(victim)
    a_layers = asap_layers(attacker)
    gates: list[Gate] = []
    layers: list[list[int]] = []
    for i in range(max(len(v_layers), len(a_layers))):
        layer = []
        for circuit, lay, mapping in ((victim, v_layers, plan.victim_qubits), (attacker, a_layers, amap)):
            if i < len(lay):
                for gi in lay[i]:
                    layer.append(len(gates))
                    gates.append(circuit.gates[gi].remap(mapping))
        layers.append(layer)
    if measure:
        layer = []
        for q in measure:
            if not 0 <= q < victim.width:
                raise SimulationError(f"measured qubit {q} is outside the victim")
            layer.append(len(gates))
            gates.append(Gate(GateKind.MEASURE, (plan.victim_qubits[q],)))
        layers.append(layer)
    label = victim.label if not attacker.gates else f"{victim.label}+{attacker.label}"
    merged = Circuit(plan.device.qubit_count, gates, label=label, layers=layers)
    plan.timeline = merged
    return merged


def attacker_for(plan: TenancyPlan, kind: AttackKind | str | None, input_x: int = 0,
                 mode: str = "literal") -> Circuit | None:
    """Attack circuit sized to the plan, or ``None`` for no attack."""
    if kind is None or not plan.attack_pairs:
        plan.attack = None
        return None
    spec = plan.attack_spec(AttackKind(kind), input_x, mode)
    plan.attack = spec
    return build_attack(spec)
