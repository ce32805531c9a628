"""Statevector simulation core.

Qubit ``q`` is bit ``q`` of the basis index (little-endian).  Ket labels and
bitstrings are written with qubit 0 first, so ``"10"`` means qubit 0 is set.

Two state containers share one set of gate kernels:

* :class:`PureState` stores all ``2**width`` amplitudes (exact mode).
* :class:`SparseState` stores only the support of the state.  The trajectory
  engine uses it because the circuits here are dominated by permutation and
  phase gates, so the support rarely exceeds a few hundred entries even on a
  20-qubit device.

Kernels work on ``(indices, amplitudes)`` pairs via bit masks.  Every gate in
the alphabet except ``H`` is monomial (a permutation times phases), so it only
rewrites indices and multiplies phases.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_DENSE_WIDTH = 24
NORM_TOL = 1e-10
EIG_CUTOFF = 1e-15
_PRUNE = 1e-12
_SQRT1_2 = 1.0 / math.sqrt(2.0)


class SimulationError(ValueError):
    """Raised for invalid gates, widths or operands."""


class GateKind(str, enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"
    H = "H"
    S = "S"
    CNOT = "CNOT"
    CY = "CY"
    CZ = "CZ"
    TOFFOLI = "TOFFOLI"
    MEASURE = "MEASURE"

    @property
    def arity(self) -> int:
        return _ARITY[self]

    @property
    def is_multi_qubit(self) -> bool:
        return _ARITY[self] > 1


_ARITY = {
    GateKind.X: 1, GateKind.Y: 1, GateKind.Z: 1, GateKind.H: 1, GateKind.S: 1,
    GateKind.MEASURE: 1, GateKind.CNOT: 2, GateKind.CY: 2, GateKind.CZ: 2,
    GateKind.TOFFOLI: 3,
}


@dataclass(frozen=True)
class Gate:
    """A parameter-free gate; operands are controls first, target last."""

    kind: GateKind
    operands: tuple[int, ...]

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        ops = tuple(int(q) for q in self.operands)
        object.__setattr__(self, "operands", ops)
        if len(ops) != kind.arity:
            raise SimulationError(f"{kind.value} takes {kind.arity} operand(s), got {len(ops)}")
        if len(set(ops)) != len(ops):
            raise SimulationError(f"duplicate operands in {kind.value}{ops}")
        if any(q < 0 for q in ops):
            raise SimulationError(f"negative operand in {kind.value}{ops}")

    @property
    def target(self) -> int:
        return self.operands[-1]

    def check_width(self, width: int) -> None:
        if max(self.operands) >= width:
            raise SimulationError(f"{self} has an operand outside width {width}")

    def remap(self, mapping: Sequence[int]) -> "Gate":
        return Gate(self.kind, tuple(mapping[q] for q in self.operands))

    def __str__(self) -> str:
        return f"{self.kind.value}({','.join(map(str, self.operands))})"


@dataclass
class Circuit:
    """Ordered gate list over ``width`` qubits.

    ``layers`` is an optional partition of gate indices into time slices; when
    given it must cover every gate exactly once and no layer may reuse a qubit.
    """

    width: int
    gates: list[Gate] = field(default_factory=list)
    label: str = ""
    layers: list[list[int]] | None = None

    def __post_init__(self):
        self.gates = list(self.gates)
        self.validate()

    def add(self, kind: GateKind | str, *qubits: int) -> "Circuit":
        gate = Gate(GateKind(kind), qubits)
        gate.check_width(self.width)
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            g.check_width(self.width)
            self.gates.append(g)
        return self

    def validate(self) -> None:
        if self.width < 0:
            raise SimulationError("negative circuit width")
        for g in self.gates:
            g.check_width(self.width)
        if self.layers is None:
            return
        seen: list[int] = []
        for layer in self.layers:
            used: set[int] = set()
            for i in layer:
                ops = self.gates[i].operands
                if used.intersection(ops):
                    raise SimulationError(f"layer {layer} reuses a qubit")
                used.update(ops)
                seen.append(i)
        if sorted(seen) != list(range(len(self.gates))):
            raise SimulationError("layers must cover every gate exactly once")

    def __len__(self) -> int:
        return len(self.gates)

    def count(self, *kinds: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind in kinds)

    def inverse(self) -> "Circuit":
        """Reverse gate order and invert each gate (S becomes S^3)."""
        out = Circuit(self.width, label=f"{self.label}^-1")
        for g in reversed(self.gates):
            if g.kind == GateKind.MEASURE:
                raise SimulationError("cannot invert a circuit containing MEASURE")
            reps = 3 if g.kind == GateKind.S else 1
            out.gates.extend([g] * reps)
        return out


def asap_layers(circuit: Circuit) -> list[list[int]]:
    """As-soon-as-possible layering: a gate waits for every earlier gate
    sharing any of its qubits."""
    ready = [0] * circuit.width
    layers: list[list[int]] = []
    for i, g in enumerate(circuit.gates):
        slot = max(ready[q] for q in g.operands)
        if slot == len(layers):
            layers.append([])
        layers[slot].append(i)
        for q in g.operands:
            ready[q] = slot + 1
    return layers


# --------------------------------------------------------------------------
# kernels on (indices, amplitudes)


def _bit(idx: np.ndarray, q: int) -> np.ndarray:
    return (idx >> q) & 1


def _y_phase(bits: np.ndarray) -> np.ndarray:
    # Y|0> = i|1>, Y|1> = -i|0>
    return np.where(bits == 1, -1j, 1j)


def _apply_monomial(idx: np.ndarray, amp: np.ndarray, gate: Gate) -> tuple[np.ndarray, np.ndarray]:
    kind, ops = gate.kind, gate.operands
    t = ops[-1]
    if kind == GateKind.X:
        return idx ^ (1 << t), amp
    if kind == GateKind.Y:
        return idx ^ (1 << t), amp * _y_phase(_bit(idx, t))
    if kind == GateKind.Z:
        return idx, np.where(_bit(idx, t) == 1, -amp, amp)
    if kind == GateKind.S:
        return idx, np.where(_bit(idx, t) == 1, 1j * amp, amp)
    if kind == GateKind.CNOT:
        return idx ^ (_bit(idx, ops[0]) << t), amp
    if kind == GateKind.CY:
        sel = _bit(idx, ops[0])
        phase = np.where(sel == 1, _y_phase(_bit(idx, t)), 1.0)
        return idx ^ (sel << t), amp * phase
    if kind == GateKind.CZ:
        both = _bit(idx, ops[0]) & _bit(idx, t)
        return idx, np.where(both == 1, -amp, amp)
    if kind == GateKind.TOFFOLI:
        sel = _bit(idx, ops[0]) & _bit(idx, ops[1])
        return idx ^ (sel << t), amp
    raise SimulationError(f"{kind.value} is not a unitary monomial gate")


def _hadamard_dense(amp: np.ndarray, q: int) -> np.ndarray:
    n = amp.size
    mask = 1 << q
    base = np.arange(n, dtype=np.int64)
    lo = base[(base & mask) == 0]
    hi = lo | mask
    a0, a1 = amp[lo], amp[hi]
    out = np.empty_like(amp)
    out[lo] = (a0 + a1) * _SQRT1_2
    out[hi] = (a0 - a1) * _SQRT1_2
    return out


def _hadamard_sparse(idx: np.ndarray, amp: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    mask = 1 << q
    sign = np.where(_bit(idx, q) == 1, -1.0, 1.0)
    cand_idx = np.concatenate([idx & ~mask, idx | mask])
    cand_amp = np.concatenate([amp, amp * sign]) * _SQRT1_2
    return _combine(cand_idx, cand_amp)


def _combine(idx: np.ndarray, amp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(idx, return_inverse=True)
    re = np.bincount(inv, weights=amp.real, minlength=uniq.size)
    im = np.bincount(inv, weights=amp.imag, minlength=uniq.size)
    out = re + 1j * im
    keep = np.abs(out) > _PRUNE
    return uniq[keep], out[keep]


# --------------------------------------------------------------------------
# state containers


@dataclass(frozen=True, eq=False)
class PureState:
    """Dense amplitude vector of ``2**width`` entries (read-only)."""

    width: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 0 <= self.width <= MAX_DENSE_WIDTH:
            raise SimulationError(f"dense width must be in [0, {MAX_DENSE_WIDTH}], got {self.width}")
        amp = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amp.size != 1 << self.width:
            raise SimulationError(f"expected {1 << self.width} amplitudes, got {amp.size}")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise SimulationError(f"state is not normalised (norm^2 = {norm})")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis(cls, width: int, value: int | str = 0) -> "PureState":
        index = _parse_basis(width, value)
        amp = np.zeros(1 << width, dtype=np.complex128)
        amp[index] = 1.0
        return cls(width, amp)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex], normalize: bool = False) -> "PureState":
        amp = np.asarray(amplitudes, dtype=np.complex128)
        width = int(round(math.log2(amp.size))) if amp.size else -1
        if amp.size == 0 or 1 << width != amp.size:
            raise SimulationError("amplitude count must be a power of two")
        if normalize:
            amp = amp / np.linalg.norm(amp)
        return cls(width, amp)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def to_sparse(self) -> "SparseState":
        idx = np.flatnonzero(np.abs(self.amplitudes) > 0)
        return SparseState(self.width, idx.astype(np.int64), self.amplitudes[idx].copy())

    def __repr__(self) -> str:
        return f"PureState(width={self.width})"


class SparseState:
    """Support-only state: parallel arrays of basis indices and amplitudes.

    Mutable working container for trajectories; :meth:`to_dense` converts
    back to an immutable :class:`PureState`.
    """

    __slots__ = ("width", "indices", "amplitudes")

    def __init__(self, width: int, indices: np.ndarray, amplitudes: np.ndarray):
        if not 0 <= width <= 62:
            raise SimulationError(f"sparse width must be in [0, 62], got {width}")
        self.width = width
        self.indices = np.asarray(indices, dtype=np.int64)
        self.amplitudes = np.asarray(amplitudes, dtype=np.complex128)

    @classmethod
    def basis(cls, width: int, value: int | str = 0) -> "SparseState":
        index = _parse_basis(width, value)
        return cls(width, np.array([index], dtype=np.int64), np.array([1.0 + 0j]))

    def copy(self) -> "SparseState":
        return SparseState(self.width, self.indices.copy(), self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def to_dense(self) -> PureState:
        amp = np.zeros(1 << self.width, dtype=np.complex128)
        amp[self.indices] = self.amplitudes
        return PureState(self.width, amp)

    def apply(self, gate: Gate) -> None:
        if gate.kind == GateKind.H:
            self.indices, self.amplitudes = _hadamard_sparse(self.indices, self.amplitudes, gate.target)
        else:
            self.indices, self.amplitudes = _apply_monomial(self.indices, self.amplitudes, gate)

    def apply_phase(self, phase: np.ndarray) -> None:
        self.amplitudes = self.amplitudes * phase

    def qubit_probability(self, q: int) -> float:
        """Probability that qubit ``q`` reads 1."""
        return float(np.sum(np.abs(self.amplitudes[_bit(self.indices, q) == 1]) ** 2))

    def collapse(self, q: int, outcome: int) -> None:
        keep = _bit(self.indices, q) == outcome
        idx, amp = self.indices[keep], self.amplitudes[keep]
        norm = np.sqrt(np.sum(np.abs(amp) ** 2))
        if norm == 0:
            raise SimulationError(f"outcome {outcome} on qubit {q} has zero probability")
        self.indices, self.amplitudes = idx, amp / norm

    def __repr__(self) -> str:
        return f"SparseState(width={self.width}, support={self.indices.size})"


def _parse_basis(width: int, value: int | str) -> int:
    if isinstance(value, str):
        if len(value) != width or set(value) - {"0", "1"}:
            raise SimulationError(f"bitstring {value!r} does not describe {width} qubits")
        return sum(1 << i for i, ch in enumerate(value) if ch == "1")
    index = int(value)
    if not 0 <= index < 1 << width:
        raise SimulationError(f"basis index {index} out of range for width {width}")
    return index


def basis_bits(index: int, qubits: Sequence[int]) -> str:
    return "".join(str((index >> q) & 1) for q in qubits)


# --------------------------------------------------------------------------
# public operations


def apply_gate(state: PureState, gate: Gate) -> PureState:
    """Apply one unitary gate, returning a new state."""
    if gate.kind == GateKind.MEASURE:
        raise SimulationError("MEASURE is not unitary; use measure_sample")
    gate.check_width(state.width)
    amp = state.amplitudes
    if gate.kind == GateKind.H:
        out = _hadamard_dense(amp, gate.target)
    else:
        idx = np.arange(amp.size, dtype=np.int64)
        new_idx, new_amp = _apply_monomial(idx, amp, gate)
        out = np.empty_like(amp)
        out[new_idx] = new_amp
    return PureState(state.width, out)


def run_pure(circuit: Circuit, initial: PureState | None = None) -> PureState:
    """Fold :func:`apply_gate` over the circuit."""
    if initial is None:
        initial = PureState.basis(circuit.width)
    if initial.width != circuit.width:
        raise SimulationError(f"state width {initial.width} != circuit width {circuit.width}")
    if any(g.kind == GateKind.MEASURE for g in circuit.gates):
        raise SimulationError("exact mode is unitary-only; circuit contains MEASURE")
    state = initial
    for g in circuit.gates:
        state = apply_gate(state, g)
    return state


def run_sparse(circuit: Circuit, initial: SparseState | None = None) -> SparseState:
    """Unitary evolution on the sparse container (no noise, no MEASURE)."""
    state = SparseState.basis(circuit.width) if initial is None else initial.copy()
    if state.width != circuit.width:
        raise SimulationError(f"state width {state.width} != circuit width {circuit.width}")
    for g in circuit.gates:
        if g.kind == GateKind.MEASURE:
            raise SimulationError("run_sparse is unitary-only; circuit contains MEASURE")
        state.apply(g)
    return state


def measure_sample(state: PureState, qubits: Sequence[int], rng_seed: int) -> str:
    """Draw one Born-rule outcome for ``qubits``; the result lists bits in the
    order the qubits were given."""
    qubits = list(qubits)
    if not qubits:
        raise SimulationError("measure_sample needs at least one qubit")
    if len(set(qubits)) != len(qubits):
        raise SimulationError("duplicate qubits in measure_sample")
    if any(not 0 <= q < state.width for q in qubits):
        raise SimulationError("measured qubit out of range")
    probs = state.probabilities()
    rng = np.random.default_rng(rng_seed)
    index = int(rng.choice(probs.size, p=probs / probs.sum()))
    return basis_bits(index, qubits)


def states_equal_up_to_global_phase(a: PureState, b: PureState, tol: float = 1e-9) -> bool:
    return overlap(a, b) >= 1.0 - tol


def overlap(a: PureState, b: PureState) -> float:
    """``|<a|b>|``."""
    if a.width != b.width:
        raise SimulationError(f"width mismatch: {a.width} vs {b.width}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def _entropy_from_eigs(eigs: np.ndarray) -> float:
    eigs = eigs[eigs > EIG_CUTOFF]
    s = float(-np.sum(eigs * np.log2(eigs)))
    return s if s > 0.0 else 0.0


def entropy(state: PureState, subset: Sequence[int] = ()) -> float:
    """Von Neumann entropy in bits of the reduced state on ``subset``.

    An empty subset (or all qubits) means the full pure-state density
    operator, whose entropy is zero up to floating-point noise.
    """
    n = state.width
    subset = sorted(set(int(q) for q in subset))
    if any(not 0 <= q < n for q in subset):
        raise SimulationError(f"subset {subset} out of range for width {n}")
    if not subset or len(subset) == n:
        amp = state.amplitudes
        if n <= 10:
            rho = np.outer(amp, amp.conj())
            return _entropy_from_eigs(np.linalg.eigvalsh(rho))
        return _entropy_from_eigs(np.array([np.vdot(amp, amp).real]))
    rest = [q for q in range(n) if q not in subset]
    # reshape puts qubit n-1 on axis 0
    tensor = state.amplitudes.reshape([2] * n)
    axes = [n - 1 - q for q in subset] + [n - 1 - q for q in rest]
    mat = np.transpose(tensor, axes).reshape(1 << len(subset), 1 << len(rest))
    sv = np.linalg.svd(mat, compute_uv=False)
    return _entropy_from_eigs(sv**2)
