"""Two-qubit crosstalk attack vectors, their closed-form states, and checks.

Each attack vector is a (control, target) pair; a circuit with ``pairs``
vectors places pair ``p`` on qubits ``(2p, 2p+1)`` with no gates between
pairs.

Layer conventions (what ``layers = L`` produces):

* EXISTING: ``L`` CNOTs, state ``|1, x XOR (L mod 2)>``.
* ALT_CNOT: ``L`` CNOT+NOT layers toggling both qubits, state
  ``|(~)^L 1, (~)^L x>``; the closed form indexes this as ``n = L + 1``.
* SAC: X/H preparation then ``L`` CNOTs of alternating direction.  In
  ``"synthesized"`` mode each layer is followed by Z corrections that steer
  the pair onto the closed-form sign pattern.
* APC: X/H preparation then one gate per layer cycling flipped CNOT, CY, CZ.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .simcore import (Circuit, Gate, GateKind, PureState, SimulationError, apply_gate,
                      entropy, overlap, states_equal_up_to_global_phase)

CONFORMANCE_TOL = 1e-9


class AttackKind(str, enum.Enum):
    EXISTING = "EXISTING"
    ALT_CNOT = "ALT_CNOT"
    SAC = "SAC"
    APC = "APC"

    @classmethod
    def parse(cls, text: str) -> "AttackKind":
        key = text.strip().upper().replace("-", "_")
        aliases = {"ALT": "ALT_CNOT", "ALTCNOT": "ALT_CNOT", "CNOT": "EXISTING"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise SimulationError(f"unknown attack kind {text!r}") from None


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    layers: int
    input_x: int = 0
    pairs: int = 1
    mode: str = "literal"

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.layers < 1:
            raise SimulationError("attack needs at least one layer")
        if self.pairs < 1:
            raise SimulationError("attack needs at least one pair")
        if self.input_x not in (0, 1):
            raise SimulationError("input_x must be 0 or 1")
        if self.mode not in ("literal", "synthesized"):
            raise SimulationError(f"unknown attack mode {self.mode!r}")
        if self.mode == "synthesized" and self.kind != AttackKind.SAC:
            raise SimulationError("synthesized mode exists only for SAC")


def reference_index(kind: AttackKind, layer: int) -> int:
    """Closed-form index matching a circuit with ``layer`` layers."""
    return layer + 1 if AttackKind(kind) == AttackKind.ALT_CNOT else layer


def _sac_signs(n: int) -> tuple[int, int, int]:
    """Signs of the |01>, |10>, |11> amplitudes of the SAC state."""
    e01 = n + 1 + (n + 2) // 3
    e10 = n + (n + 1) // 3
    e11 = n - 1 + n // 3
    return (-1) ** e01, (-1) ** e10, (-1) ** e11


def _ket_amplitudes(a00: complex, a01: complex, a10: complex, a11: complex) -> np.ndarray:
    # ket |q0 q1>: index = q0 + 2*q1
    return np.array([a00, a10, a01, a11], dtype=np.complex128)


def reference_state(kind: AttackKind, n: int, x: int = 0) -> PureState:
    """Closed-form two-qubit attack state after ``n`` (1-indexed) layers."""
    kind = AttackKind(kind)
    if n < 1:
        raise SimulationError("reference states are defined for n >= 1")
    if kind == AttackKind.EXISTING:
        return PureState.basis(2, f"1{x ^ (n % 2)}")
    if kind == AttackKind.ALT_CNOT:
        t = (n - 1) % 2
        return PureState.basis(2, f"{1 ^ t}{x ^ t}")
    if kind == AttackKind.SAC:
        s01, s10, s11 = _sac_signs(n)
        return PureState(2, _ket_amplitudes(1, s01, s10, s11) / 2)
    if n % 2:
        k = n
        amp = _ket_amplitudes(1, (-1j) ** (k + 1), -1j * (-1) ** k, (-1j) ** k)
    else:
        j = n
        amp = _ket_amplitudes(1, (-1) ** (j + 1), -(1j**j), -((-1j) ** j))
    return PureState(2, amp / 2)


def _pair_program(spec: AttackSpec) -> tuple[list[Gate], list[list[Gate]]]:
    """Preparation gates and per-layer gates for one pair on qubits (0, 1)."""
    c, t = 0, 1
    x = spec.input_x
    prep = [Gate(GateKind.X, (c,))]
    if x:
        prep.append(Gate(GateKind.X, (t,)))
    layers: list[list[Gate]] = []
    kind = spec.kind
    if kind == AttackKind.EXISTING:
        layers = [[Gate(GateKind.CNOT, (c, t))] for _ in range(spec.layers)]
    elif kind == AttackKind.ALT_CNOT:
        value = [1, x]
        for k in range(1, spec.layers + 1):
            ctrl = c if k % 2 else t
            other = t if ctrl == c else c
            cnot = Gate(GateKind.CNOT, (ctrl, other))
            flip = Gate(GateKind.X, (ctrl,))
            # fire every CNOT with its control at |1>
            layers.append([cnot, flip] if value[ctrl] else [flip, cnot])
            value = [1 - value[0], 1 - value[1]]
    elif kind == AttackKind.SAC:
        prep += [Gate(GateKind.H, (c,)), Gate(GateKind.H, (t,))]
        sign = [-1, -1 if x else 1]  # X-basis sign per qubit after H
        for k in range(1, spec.layers + 1):
            ctrl, tgt = (c, t) if k % 2 else (t, c)
            layer = [Gate(GateKind.CNOT, (ctrl, tgt))]
            if sign[tgt] == -1:  # phase kickback onto the control
                sign[ctrl] = -sign[ctrl]
            if spec.mode == "synthesized":
                s01, s10, _ = _sac_signs(k)
                for q, want in ((c, s10), (t, s01)):
                    if sign[q] != want:
                        layer.append(Gate(GateKind.Z, (q,)))
                        sign[q] = want
            layers.append(layer)
    else:
        prep += [Gate(GateKind.H, (c,)), Gate(GateKind.H, (t,))]
        cycle = [Gate(GateKind.CNOT, (t, c)), Gate(GateKind.CY, (c, t)), Gate(GateKind.CZ, (c, t))]
        layers = [[cycle[k % 3]] for k in range(spec.layers)]
    return prep, layers


def build_attack(spec: AttackSpec) -> Circuit:
    prep, layers = _pair_program(spec)
    pair_gates = prep + [g for layer in layers for g in layer]
    circuit = Circuit(2 * spec.pairs, label=f"{spec.kind.value.lower()}:n={spec.layers}:pairs={spec.pairs}")
    for p in range(spec.pairs):
        circuit.extend(g.remap((2 * p, 2 * p + 1)) for g in pair_gates)
    return circuit


def multi_qubit_gates_per_layer(spec: AttackSpec) -> list[int]:
    _, layers = _pair_program(spec)
    return [sum(g.kind.is_multi_qubit for g in layer) * spec.pairs for layer in layers]


def conformance_report(kind: AttackKind, max_n: int, x: int = 0, mode: str = "literal") -> list[dict]:
    """Simulate one pair layer by layer and compare with the closed forms.

    Mismatches are reported in the records (``passed = False``), never raised.
    """
    kind = AttackKind(kind)
    if max_n < 1:
        raise SimulationError("max_n must be >= 1")
    prep, layers = _pair_program(AttackSpec(kind, max_n, x, 1, mode))
    state = PureState.basis(2)
    for g in prep:
        state = apply_gate(state, g)
    records = []
    for layer_no, layer in enumerate(layers, start=1):
        for g in layer:
            state = apply_gate(state, g)
        n_ref = reference_index(kind, layer_no)
        ref = reference_state(kind, n_ref, x)
        records.append(dict(
            kind=kind.value, mode=mode, x=x, layer=layer_no, reference_n=n_ref,
            overlap=overlap(state, ref),
            passed=states_equal_up_to_global_phase(state, ref, CONFORMANCE_TOL),
            full_entropy=entropy(state),
            reduced_entropy=[entropy(state, [0]), entropy(state, [1])],
        ))
    return records


def entropy_sequence(kind: AttackKind, max_n: int) -> list[tuple[int, float, float]]:
    """``(n, full-state entropy, qubit-0 reduced entropy)`` of the closed forms."""
    if max_n < 1:
        raise SimulationError("max_n must be >= 1")
    out = []
    for n in range(1, max_n + 1):
        ref = reference_state(kind, n)
        out.append((n, entropy(ref), entropy(ref, [0])))
    return out
